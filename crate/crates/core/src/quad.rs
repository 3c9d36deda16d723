//! Small quadrature utilities shared by the assembly and tail integrals.

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial (standard Golub-Welsch-free construction).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Integrates `f` over `[a, b]` with an `n`-point Gauss-Legendre rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Trapezoid rule for a smooth periodic integrand on [0, 2*pi), with interval
/// doubling until the relative change drops below `rtol`. Spectrally accurate
/// for the boundary-distance integrands used by the 2D tail.
pub fn periodic_integral<F: Fn(f64) -> f64>(f: F, rtol: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut m = 64usize;
    let eval = |m: usize| -> f64 {
        let h = two_pi / m as f64;
        (0..m).map(|j| f(j as f64 * h)).sum::<f64>() * h
    };
    let mut prev = eval(m);
    loop {
        m *= 2;
        let cur = eval(m);
        if (cur - prev).abs() <= rtol * cur.abs().max(1e-300) || m >= 1 << 16 {
            return cur;
        }
        prev = cur;
    }
}
