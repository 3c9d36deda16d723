//! Dense assembly of the integral fractional Laplacian with exterior zero
//! condition, plus the energy form, lumped mass, and norms.
//!
//! Discretization: collocation with piecewise-linear interpolation of the
//! unknown away from the singular cell around each node; the singular cell is
//! handled by a symmetrized second-difference rule (exact against quadratics).
//! The diagonal is `scale * W` where `W` is the total weight of the full
//! lattice, so the matrix on any node set is exactly the restriction of one
//! translation-invariant infinite-lattice operator. Extension by zero
//! therefore preserves the quadratic form bit-for-bit up to the far-field
//! quadrature of `W`, which makes energy levels nonincreasing under domain
//! inclusion at the discrete level — the property the sweep experiments rely
//! on. The exterior contribution (diagonal minus interior row sum) is a
//! first-order consistent quadrature of the analytic exterior integral; the
//! analytic integral itself is kept in `tail_vector` as an oracle. The matrix
//! is symmetric bit-exactly and strictly diagonally dominant, hence positive
//! definite.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{DomainKind, Grid};
use crate::quad::{gauss_legendre, integrate, periodic_integral};

/// Kernel order and the derived normalizing constant.
#[derive(Debug, Clone, Copy)]
pub struct KernelParams {
    pub s: f64,
    pub dim: usize,
    /// `c_{N,s} = 4^s pi^{-N/2} Gamma(N/2+s)/Gamma(2-s) * s(1-s)`.
    pub constant: f64,
}

impl KernelParams {
    pub fn new(dim: usize, s: f64) -> Result<Self> {
        Ok(KernelParams {
            s,
            dim,
            constant: normalization_constant(dim, s)?,
        })
    }
}

/// Normalizing constant of the integral fractional Laplacian.
pub fn normalization_constant(dim: usize, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OrderOutOfRange(s));
    }
    assert!(dim >= 1, "dimension must be at least 1");
    let n = dim as f64;
    Ok(4f64.powf(s) * PI.powf(-n / 2.0) * gamma(n / 2.0 + s) / gamma(2.0 - s) * s * (1.0 - s))
}

/// Dimensionless 1D interpolation weights `g_m`, `1 <= m <= mmax`.
///
/// `g_m` multiplies `-c h^{-2s} u(x + m h)` in the collocation of the
/// principal value; the singular-cell second-difference rule contributes
/// `1/(2-2s)` to `g_1`.
fn interval_weights(s: f64, mmax: usize) -> Vec<f64> {
    let kernel = move |r: f64| r.powf(-1.0 - 2.0 * s);
    let mut g = vec![0.0; mmax + 1];
    if mmax >= 1 {
        g[1] = integrate(|r| (2.0 - r) * kernel(r), 1.0, 2.0, 32) + 1.0 / (2.0 - 2.0 * s);
    }
    for m in 2..=mmax {
        let mf = m as f64;
        g[m] = integrate(|r| (1.0 - (mf - r)) * kernel(r), mf - 1.0, mf, 16)
            + integrate(|r| (1.0 - (r - mf)) * kernel(r), mf, mf + 1.0, 16);
    }
    g
}

/// Coefficient added to each of the four axis neighbors by the 2D
/// singular-cell rule: one quarter of the polar integral of `|w|^{-2s}` over
/// the unit patch `[-1,1]^2`.
fn planar_singular_coeff(s: f64) -> f64 {
    // int_{[-1,1]^2} |w|^{-2s} dw = 8/(2-2s) * int_0^{pi/4} cos(t)^{2s-2} dt
    let angular = integrate(|t| t.cos().powf(2.0 * s - 2.0), 0.0, PI / 4.0, 64);
    8.0 / (2.0 - 2.0 * s) * angular / 4.0
}

/// Triangular-table index for a canonical displacement `m1 >= m2 >= 0`.
#[inline]
fn tri_index(m1: usize, m2: usize) -> usize {
    m1 * (m1 + 1) / 2 + m2
}

/// Dimensionless 2D weights on canonical displacements `m1 >= m2 >= 0`,
/// `m1 <= mmax`. Entry (0,0) is unused (the diagonal is assembled from row
/// sums and the tail).
fn planar_weights(s: f64, mmax: usize) -> Vec<f64> {
    let (gn_near, gw_near) = gauss_legendre(16);
    let (gn_far, gw_far) = gauss_legendre(8);
    let expo = -1.0 - s; // |y|^{-2-2s} = (y1^2+y2^2)^{-1-s}
    let singular = planar_singular_coeff(s);

    let mut table = vec![0.0; tri_index(mmax, mmax) + 1];
    for m1 in 0..=mmax {
        for m2 in 0..=m1 {
            if m1 == 0 && m2 == 0 {
                continue;
            }
            let near = m1 <= 4;
            let (gn, gw) = if near {
                (&gn_near, &gw_near)
            } else {
                (&gn_far, &gw_far)
            };
            let (mf1, mf2) = (m1 as f64, m2 as f64);
            let mut acc = 0.0;
            // The bilinear hat at displacement m covers four unit cells;
            // cells inside the singular patch [-1,1]^2 are excluded.
            for cx in [m1 as i64 - 1, m1 as i64] {
                for cy in [m2 as i64 - 1, m2 as i64] {
                    if (cx == -1 || cx == 0) && (cy == -1 || cy == 0) {
                        continue;
                    }
                    let (x0, y0) = (cx as f64, cy as f64);
                    for (ix, &nx) in gn.iter().enumerate() {
                        let y1 = x0 + 0.5 * (nx + 1.0);
                        let hx = 1.0 - (y1 - mf1).abs();
                        for (iy, &ny) in gn.iter().enumerate() {
                            let y2 = y0 + 0.5 * (ny + 1.0);
                            let hy = 1.0 - (y2 - mf2).abs();
                            acc += gw[ix] * gw[iy] * 0.25
                                * hx
                                * hy
                                * (y1 * y1 + y2 * y2).powf(expo);
                        }
                    }
                }
            }
            if m1 == 1 && m2 == 0 {
                acc += singular;
            }
            table[tri_index(m1, m2)] = acc;
        }
    }
    table
}

/// Total dimensionless weight of the infinite 1D lattice,
/// `W = sum_{m != 0} g_m`: the explicit table up to `mmax` plus the exact
/// remainder. The hat functions beyond `mmax` form a partition of unity, so
/// the remainder is a ramp integral over `[M, M+1]` plus an analytic far
/// integral of `|y|^{-1-2s}` beyond `M+1`.
fn interval_total_weight(s: f64, g: &[f64], mmax: usize) -> f64 {
    let kernel = move |r: f64| r.powf(-1.0 - 2.0 * s);
    let m = mmax as f64;
    let near: f64 = g[1..=mmax].iter().sum();
    let ramp = integrate(|r| (r - m) * kernel(r), m, m + 1.0, 32);
    let far = (m + 1.0).powf(-2.0 * s) / (2.0 * s);
    2.0 * (near + ramp + far)
}

/// Total dimensionless weight of the infinite 2D lattice,
/// `W = sum_{(m1,m2) != 0} w(m1,m2)`, from the canonical triangular table up
/// to `|m|_inf <= mmax` plus the exact remainder outside the square. With
/// `R(t)` the hat partition-of-unity ramp of the kept square, the remainder
/// is `int (1 - R(y1) R(y2)) |y|^{-2-2s} dy`, split into two shell strips and
/// an analytic far-field beyond `|y|_inf = mmax + 1`.
fn planar_total_weight(s: f64, table: &[f64], mmax: usize) -> f64 {
    let mut near = 0.0;
    for m1 in 1..=mmax {
        near += 4.0 * table[tri_index(m1, 0)];
        near += 4.0 * table[tri_index(m1, m1)];
        for m2 in 1..m1 {
            near += 8.0 * table[tri_index(m1, m2)];
        }
    }

    let m = mmax as f64;
    let expo = -1.0 - s;
    let kernel = move |y1: f64, y2: f64| (y1 * y1 + y2 * y2).powf(expo);
    let (gn, gw) = gauss_legendre(16);
    // First-quadrant shell strips ([0,M]x[M,M+1], [M,M+1]x[0,M], corner
    // [M,M+1]^2), integrated cell by cell; the ramps vanish on [0,M].
    let mut shell = 0.0;
    let cell = |x0: f64, y0: f64, f: &dyn Fn(f64, f64) -> f64| -> f64 {
        let mut acc = 0.0;
        for (ix, &nx) in gn.iter().enumerate() {
            let y1 = x0 + 0.5 * (nx + 1.0);
            for (iy, &ny) in gn.iter().enumerate() {
                let y2 = y0 + 0.5 * (ny + 1.0);
                acc += gw[ix] * gw[iy] * 0.25 * f(y1, y2);
            }
        }
        acc
    };
    for cx in 0..mmax {
        // top strip: R(y1) = 1, 1 - R(y2) = y2 - M
        shell += cell(cx as f64, m, &|y1, y2| (y2 - m) * kernel(y1, y2));
        // right strip, symmetric
        shell += cell(m, cx as f64, &|y1, y2| (y1 - m) * kernel(y1, y2));
    }
    // corner cell: 1 - R(y1) R(y2) with both ramps
    shell += cell(m, m, &|y1, y2| {
        (1.0 - (1.0 - (y1 - m)) * (1.0 - (y2 - m))) * kernel(y1, y2)
    });
    // Quadrant outside the square [0, M+1]^2: radial integral is analytic,
    // boundary radius L / cos(theta) by symmetry about pi/4.
    let l = m + 1.0;
    let angular = integrate(|t| t.cos().powf(2.0 * s), 0.0, PI / 4.0, 64);
    let far = l.powf(-2.0 * s) / (2.0 * s) * 2.0 * angular;

    near + 4.0 * (shell + far)
}

/// Exterior-kernel integral `T_j = c int_{R^N \ Omega} |x_j - y|^{-N-2s} dy`
/// for every interior node.
pub fn tail_vector(grid: &Grid, params: &KernelParams) -> Vec<f64> {
    let s = params.s;
    let c = params.constant;
    let ax = grid.domain.effective_semiaxes();
    match grid.domain.kind {
        DomainKind::Interval => {
            let a = ax[0];
            grid.coords
                .iter()
                .map(|x| c / (2.0 * s) * ((a - x[0]).powf(-2.0 * s) + (a + x[0]).powf(-2.0 * s)))
                .collect()
        }
        DomainKind::Disc | DomainKind::AxisEllipse => {
            let (a, b) = (ax[0], ax[1]);
            grid.coords
                .iter()
                .map(|x| {
                    // Distance to the boundary along direction theta; the
                    // radial integral beyond it is analytic.
                    let rho = |theta: f64| {
                        let (ct, st) = (theta.cos(), theta.sin());
                        let qa = (ct / a).powi(2) + (st / b).powi(2);
                        let qb = 2.0 * (x[0] * ct / (a * a) + x[1] * st / (b * b));
                        let qc = (x[0] / a).powi(2) + (x[1] / b).powi(2) - 1.0;
                        (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa)
                    };
                    c / (2.0 * s) * periodic_integral(|t| rho(t).powf(-2.0 * s), 1e-10)
                })
                .collect()
        }
    }
}

/// Assembles `A + shift * h^N * I` together with the exterior-weight vector
/// `t_j = scale * (W - rowsum_j) / h^N` (the lattice counterpart of
/// [`tail_vector`]; the full row sums of `A` equal `h^N t_j` exactly).
///
/// `A` is the stiffness matrix of the discrete Gagliardo form: `(A u)_j / h^N`
/// approximates `(-Delta)^s u(x_j)` for grid functions extended by zero.
/// Passing `shift = lambda` yields the resolvent matrix in one buffer.
pub fn assemble_matrix(grid: &Grid, params: &KernelParams, shift: f64) -> (Array2<f64>, Vec<f64>) {
    assert_eq!(grid.dim(), params.dim, "grid/kernel dimension mismatch");
    let n = grid.n_interior();
    let h = grid.h;
    let hn = grid.cell_volume();
    let scale = params.constant * h.powf((grid.dim() as f64) - 2.0 * params.s);
    let mut tail = vec![0.0; n];

    let mut span = 0i64;
    for k in &grid.lattice {
        for d in 0..grid.dim() {
            span = span.max(2 * k[d].abs());
        }
    }
    // At least one entry so the total-weight remainder starts beyond the
    // singular cell even on single-node grids.
    let mmax = (span as usize).max(1);

    let mut a = Array2::<f64>::zeros((n, n));
    match grid.dim() {
        1 => {
            let g = interval_weights(params.s, mmax);
            let wtot = interval_total_weight(params.s, &g, mmax);
            for i in 0..n {
                let ki = grid.lattice[i][0];
                let mut rowsum = 0.0;
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let m = (grid.lattice[j][0] - ki).unsigned_abs() as usize;
                    let w = g[m];
                    a[[i, j]] = -scale * w;
                    rowsum += w;
                }
                a[[i, i]] = scale * wtot + hn * shift;
                tail[i] = scale * (wtot - rowsum) / hn;
            }
        }
        2 => {
            let g = planar_weights(params.s, mmax);
            let wtot = planar_total_weight(params.s, &g, mmax);
            let lat = &grid.lattice;
            for i in 0..n {
                let ki = lat[i];
                let mut rowsum = 0.0;
                let row = a.row_mut(i);
                let row = row.into_slice().expect("contiguous row");
                for (j, kj) in lat.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let d1 = (kj[0] - ki[0]).unsigned_abs() as usize;
                    let d2 = (kj[1] - ki[1]).unsigned_abs() as usize;
                    let (m1, m2) = if d1 >= d2 { (d1, d2) } else { (d2, d1) };
                    let w = g[tri_index(m1, m2)];
                    row[j] = -scale * w;
                    rowsum += w;
                }
                row[i] = scale * wtot + hn * shift;
                tail[i] = scale * (wtot - rowsum) / hn;
            }
        }
        d => panic!("unsupported dimension {d}"),
    }
    (a, tail)
}

/// Real-valued function on the interior nodes of a grid, implicitly zero
/// outside the domain.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_interior() {
            return Err(Error::GridMismatch);
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n_interior();
        GridFunction {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = grid.coords.iter().map(|x| f(&x[..dim])).collect();
        GridFunction { grid, values }
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.grid.signature() == other.grid.signature()
    }

    /// Mass-lumped `L^q` norm `(h^N sum |u_j|^q)^{1/q}`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        assert!(q >= 1.0);
        let hn = self.grid.cell_volume();
        (hn * self
            .values
            .iter()
            .map(|v| v.abs().powf(q))
            .sum::<f64>())
        .powf(1.0 / q)
    }

    pub fn l2_norm(&self) -> f64 {
        let hn = self.grid.cell_volume();
        (hn * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multilinear interpolation at an arbitrary point, with the zero
    /// exterior extension (missing lattice nodes contribute 0).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let h = g.h;
        let dim = g.dim();
        let mut base = [0i64; 2];
        let mut frac = [0.0f64; 2];
        for d in 0..dim {
            let t = x[d] / h;
            let f = t.floor();
            base[d] = f as i64;
            frac[d] = t - f;
        }
        let node = |k: [i64; 2]| g.node_index(k).map_or(0.0, |i| self.values[i]);
        if dim == 1 {
            let a = node([base[0], 0]);
            let b = node([base[0] + 1, 0]);
            a * (1.0 - frac[0]) + b * frac[0]
        } else {
            let v00 = node(base);
            let v10 = node([base[0] + 1, base[1]]);
            let v01 = node([base[0], base[1] + 1]);
            let v11 = node([base[0] + 1, base[1] + 1]);
            let (fx, fy) = (frac[0], frac[1]);
            v00 * (1.0 - fx) * (1.0 - fy)
                + v10 * fx * (1.0 - fy)
                + v01 * (1.0 - fx) * fy
                + v11 * fx * fy
        }
    }
}

/// Assembled operator: stiffness matrix, kernel parameters, zero-order
/// coefficient, and exterior tail. Mass is lumped: `M = h^N I`.
#[derive(Debug)]
pub struct OperatorSystem {
    pub grid: Arc<Grid>,
    pub params: KernelParams,
    pub lambda: f64,
    /// Stiffness matrix `A` (no zero-order shift).
    pub matrix: Array2<f64>,
    pub tail: Vec<f64>,
}

impl OperatorSystem {
    pub fn assemble(grid: Arc<Grid>, params: KernelParams, lambda: f64) -> Self {
        let (matrix, tail) = assemble_matrix(&grid, &params, 0.0);
        OperatorSystem {
            grid,
            params,
            lambda,
            matrix,
            tail,
        }
    }

    fn check_grid(&self, u: &GridFunction) -> Result<()> {
        if u.grid.signature() != self.grid.signature() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `A u` as a plain vector.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.n_interior();
        assert_eq!(u.len(), n);
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = self.matrix.row(i);
            let row = row.to_slice().expect("contiguous row");
            let mut acc = 0.0;
            for (rj, uj) in row.iter().zip(u) {
                acc += rj * uj;
            }
            out[i] = acc;
        }
        out
    }

    /// Discrete Gagliardo energy form `E(u, v) = u^T A v`.
    ///
    /// Summed over unordered node pairs so the result is bit-identical under
    /// swapping `u` and `v`.
    pub fn energy_form(&self, u: &GridFunction, v: &GridFunction) -> Result<f64> {
        self.check_grid(u)?;
        self.check_grid(v)?;
        let n = self.grid.n_interior();
        let (uu, vv) = (&u.values, &v.values);
        let mut acc = 0.0;
        for i in 0..n {
            let row = self.matrix.row(i);
            let row = row.to_slice().expect("contiguous row");
            let mut off = 0.0;
            for j in 0..i {
                off += row[j] * (uu[i] * vv[j] + uu[j] * vv[i]);
            }
            acc += off + row[i] * uu[i] * vv[i];
        }
        Ok(acc)
    }

    /// `(||u||, |u|_2, |u|_q)` with `||u||^2 = E(u,u) + lambda |u|_2^2`.
    pub fn norms(&self, u: &GridFunction, q: f64) -> Result<(f64, f64, f64)> {
        if self.lambda <= 0.0 {
            return Err(Error::NonpositiveLambda(self.lambda));
        }
        self.check_grid(u)?;
        let e = self.energy_form(u, u)?;
        let l2 = u.l2_norm();
        let full = (e + self.lambda * l2 * l2).sqrt();
        Ok((full, l2, u.lq_norm(q)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, scale_domain, Domain};

    fn interval_grid(h: f64) -> Arc<Grid> {
        Arc::new(build_grid(&Domain::interval(), h).unwrap())
    }

    #[test]
    fn constant_half_line() {
        // Hand-reduced Gamma expression for N=1, s=1/2 gives exactly 1/pi.
        let c = normalization_constant(1, 0.5).unwrap();
        assert!((c - 1.0 / PI).abs() < 1e-14);
        // Factor s(1-s) kills the limits.
        assert!(normalization_constant(1, 1e-9).unwrap() < 1e-8);
        assert!(normalization_constant(1, 1.0 - 1e-9).unwrap() < 1e-8);
        assert!(normalization_constant(1, 1.5).is_err());
        assert!(normalization_constant(2, 0.0).is_err());
    }

    #[test]
    fn constant_planar_positive() {
        for s in [0.1, 0.3, 0.5, 0.7, 0.9] {
            assert!(normalization_constant(2, s).unwrap() > 0.0);
        }
    }

    #[test]
    fn tail_interval_closed_form() {
        // T(0) on (-1,1) at s = 1/2: (1/pi) * int_{|y|>1} y^{-2} dy = 2/pi.
        let g = interval_grid(0.01);
        let p = KernelParams::new(1, 0.5).unwrap();
        let t = tail_vector(&g, &p);
        let mid = g.node_index([0, 0]).unwrap();
        assert!((t[mid] - 2.0 / PI).abs() < 1e-14);
        // Positivity and growth toward the boundary.
        for i in 0..g.n_interior() {
            assert!(t[i] > 0.0);
        }
        for i in 1..g.n_interior() {
            if g.coords[i][0] > 0.0 {
                assert!(t[i] > t[i - 1]);
            }
        }
    }

    #[test]
    fn tail_disc_center() {
        // T(0) on the unit disc: c/(2s) * 2pi; at s = 1/2 with c = 1/(2pi)
        // ... c_{2,1/2} = 2/pi * Gamma(3/2)/Gamma(3/2) * 1/4 = 1/(2pi).
        let g = Arc::new(build_grid(&Domain::disc(), 0.25).unwrap());
        let p = KernelParams::new(2, 0.5).unwrap();
        let t = tail_vector(&g, &p);
        let mid = g.node_index([0, 0]).unwrap();
        let c = p.constant;
        assert!((t[mid] - c / 1.0 * 2.0 * PI / 2.0 * 2.0).abs() < 1e-9 * t[mid]);
        // Same thing written directly:
        assert!((t[mid] - c * 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn tail_ellipse_matches_disc_when_round() {
        let d = Domain::ellipse(1.0, 1.0).unwrap();
        let ge = Arc::new(build_grid(&d, 0.25).unwrap());
        let gd = Arc::new(build_grid(&Domain::disc(), 0.25).unwrap());
        let p = KernelParams::new(2, 0.6).unwrap();
        let te = tail_vector(&ge, &p);
        let td = tail_vector(&gd, &p);
        for (a, b) in te.iter().zip(&td) {
            assert!((a - b).abs() < 1e-12 * b.abs());
        }
    }

    #[test]
    fn torsion_disc() {
        // (-Delta)^{1/2} sqrt(1-|x|^2) = pi/2 on the unit disc.
        let p = KernelParams::new(2, 0.5).unwrap();
        let mut prev = f64::INFINITY;
        for h in [0.125, 0.0625] {
            let g = Arc::new(build_grid(&Domain::disc(), h).unwrap());
            let sys = OperatorSystem::assemble(g.clone(), p, 0.0);
            let u: Vec<f64> = g
                .coords
                .iter()
                .map(|x| (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).sqrt())
                .collect();
            let au = sys.apply(&u);
            let hn = g.cell_volume();
            let mut worst = 0.0f64;
            for i in 0..g.n_interior() {
                let x = g.coords[i];
                if x[0] * x[0] + x[1] * x[1] <= 0.49 {
                    worst = worst.max((au[i] / hn / (PI / 2.0) - 1.0).abs());
                }
            }
            assert!(worst <= 0.05, "h={h}: residual {worst}");
            assert!(worst < prev, "no refinement gain at h={h}");
            prev = worst;
        }
    }

    #[test]
    fn symmetric_bit_exact() {
        for (dim, grid) in [
            (1usize, interval_grid(0.05)),
            (2, Arc::new(build_grid(&Domain::disc(), 0.2).unwrap())),
        ] {
            let p = KernelParams::new(dim, 0.5).unwrap();
            let (a, _) = assemble_matrix(&grid, &p, 0.0);
            let n = grid.n_interior();
            for i in 0..n {
                for j in 0..i {
                    assert_eq!(a[[i, j]].to_bits(), a[[j, i]].to_bits());
                }
            }
        }
    }

    #[test]
    fn row_sums_equal_tail() {
        for (dim, grid) in [
            (1usize, interval_grid(0.05)),
            (2, Arc::new(build_grid(&Domain::disc(), 0.2).unwrap())),
        ] {
            let p = KernelParams::new(dim, 0.5).unwrap();
            let (a, t) = assemble_matrix(&grid, &p, 0.0);
            let hn = grid.cell_volume();
            let n = grid.n_interior();
            for i in 0..n {
                let rowsum: f64 = (0..n).map(|j| a[[i, j]]).sum();
                let rowabs: f64 = (0..n).map(|j| a[[i, j]].abs()).sum();
                assert!(
                    (rowsum - t[i] * hn).abs() <= 1e-12 * rowabs,
                    "row {i}: {rowsum} vs {}",
                    t[i] * hn
                );
            }
        }
    }

    #[test]
    fn constant_function_recovers_tail() {
        // For u = 1 inside (-1,1), (-Delta)^{1/2} u (0) = 2/pi exactly; the
        // discrete operator reproduces it through the exterior weight. The
        // lattice exterior starts half a cell before the true boundary, so
        // the defect is first order in h (about h/pi here).
        for (h, tol) in [(0.01, 5e-3), (0.005, 2.5e-3)] {
            let g = interval_grid(h);
            let p = KernelParams::new(1, 0.5).unwrap();
            let sys = OperatorSystem::assemble(g.clone(), p, 1.0);
            let ones = vec![1.0; g.n_interior()];
            let au = sys.apply(&ones);
            let mid = g.node_index([0, 0]).unwrap();
            let val = au[mid] / g.cell_volume();
            assert!((val - 2.0 / PI).abs() < tol, "h={h}: got {val}");
        }
    }

    #[test]
    fn torsion_interval() {
        // (-Delta)^{1/2} sqrt(1-x^2) = 1 on (-1,1).
        let h = 1.0 / 200.0;
        let g = interval_grid(h);
        let p = KernelParams::new(1, 0.5).unwrap();
        let sys = OperatorSystem::assemble(g.clone(), p, 1.0);
        let u: Vec<f64> = g
            .coords
            .iter()
            .map(|x| (1.0 - x[0] * x[0]).max(0.0).sqrt())
            .collect();
        let au = sys.apply(&u);
        let hn = g.cell_volume();
        let mut max_err = 0.0f64;
        for i in 0..g.n_interior() {
            if g.coords[i][0].abs() <= 0.9 {
                max_err = max_err.max((au[i] / hn - 1.0).abs());
            }
        }
        assert!(max_err <= 0.05, "torsion residual {max_err}");
    }

    #[test]
    fn torsion_residual_decreases_under_refinement() {
        let p = KernelParams::new(1, 0.5).unwrap();
        let err_at = |h: f64| {
            let g = interval_grid(h);
            let (a, _) = assemble_matrix(&g, &p, 0.0);
            let hn = g.cell_volume();
            let u: Vec<f64> = g
                .coords
                .iter()
                .map(|x| (1.0 - x[0] * x[0]).max(0.0).sqrt())
                .collect();
            let n = g.n_interior();
            let mut max_err = 0.0f64;
            for i in 0..n {
                if g.coords[i][0].abs() <= 0.5 {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += a[[i, j]] * u[j];
                    }
                    max_err = max_err.max((acc / hn - 1.0).abs());
                }
            }
            max_err
        };
        let (e1, e2, e3) = (err_at(0.04), err_at(0.02), err_at(0.01));
        assert!(e2 < e1 && e3 < e2, "errors {e1} {e2} {e3}");
    }

    #[test]
    fn positive_definite_small() {
        let g = interval_grid(0.2);
        let p = KernelParams::new(1, 0.5).unwrap();
        let (a, _) = assemble_matrix(&g, &p, 0.0);
        let (vals, _) = crate::linalg::eigh_smallest(&a, 1).unwrap();
        assert!(vals[0] > 0.0);
    }

    #[test]
    fn validation_eigenvalue() {
        // Smallest eigenvalue of M^{-1} A on (-1,1), s = 1/2 is about 1.1578.
        let g = interval_grid(1.0 / 400.0);
        let p = KernelParams::new(1, 0.5).unwrap();
        let (a, _) = assemble_matrix(&g, &p, 0.0);
        let (vals, _) = crate::linalg::eigh_smallest(&a, 1).unwrap();
        let lam1 = vals[0] / g.cell_volume();
        assert!((lam1 - 1.1578).abs() / 1.1578 < 0.01, "lambda_1 = {lam1}");
    }

    #[test]
    fn energy_form_properties() {
        let g = interval_grid(0.1);
        let p = KernelParams::new(1, 0.5).unwrap();
        let sys = OperatorSystem::assemble(g.clone(), p, 1.0);
        let u = GridFunction::from_fn(g.clone(), |x| (1.0 - x[0].abs()).max(0.0));
        let v = GridFunction::from_fn(g.clone(), |x| x[0].cos());
        let euv = sys.energy_form(&u, &v).unwrap();
        let evu = sys.energy_form(&v, &u).unwrap();
        // Symmetric up to instruction scheduling (the compiler may fuse one
        // of the two products per pair into an fma).
        assert!((euv - evu).abs() <= 1e-15 * euv.abs().max(1.0));
        assert!(sys.energy_form(&u, &u).unwrap() > 0.0);
        let mut u2 = u.clone();
        for w in &mut u2.values {
            *w *= 2.5;
        }
        let scaled = sys.energy_form(&u2, &v).unwrap();
        assert!((scaled - 2.5 * euv).abs() < 1e-12 * euv.abs().max(1.0));
        // Mismatched grid is rejected.
        let other = Arc::new(build_grid(&scale_domain(&Domain::interval(), 2.0).unwrap(), 0.1).unwrap());
        let w = GridFunction::zeros(other);
        assert!(matches!(sys.energy_form(&u, &w), Err(Error::GridMismatch)));
    }

    #[test]
    fn norms_examples() {
        let g = interval_grid(0.1);
        let p = KernelParams::new(1, 0.5).unwrap();
        let sys = OperatorSystem::assemble(g.clone(), p, 1.0);
        let zero = GridFunction::zeros(g.clone());
        let (f, l2, lq) = sys.norms(&zero, 3.0).unwrap();
        assert_eq!((f, l2, lq), (0.0, 0.0, 0.0));

        let mut single = GridFunction::zeros(g.clone());
        single.values[3] = 2.0;
        let (full, l2, _) = sys.norms(&single, 2.0).unwrap();
        assert!((l2 - 2.0 * 0.1f64.sqrt()).abs() < 1e-14);
        assert!(full * full >= sys.lambda * l2 * l2);

        let bad = OperatorSystem {
            lambda: -1.0,
            ..OperatorSystem::assemble(g.clone(), p, 1.0)
        };
        assert!(matches!(
            bad.norms(&single, 2.0),
            Err(Error::NonpositiveLambda(_))
        ));
    }

    #[test]
    fn shift_moves_diagonal_only() {
        let g = interval_grid(0.2);
        let p = KernelParams::new(1, 0.5).unwrap();
        let (a0, _) = assemble_matrix(&g, &p, 0.0);
        let (a1, _) = assemble_matrix(&g, &p, 2.0);
        let hn = g.cell_volume();
        for i in 0..g.n_interior() {
            for j in 0..g.n_interior() {
                let want = if i == j { a0[[i, j]] + 2.0 * hn } else { a0[[i, j]] };
                assert!((a1[[i, j]] - want).abs() < 1e-15);
            }
        }
    }
}
