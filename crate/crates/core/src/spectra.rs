//! Linearization at a solution and its low-lying spectrum: Morse index,
//! degeneracy verdicts, and the spectral identities used as cross-checks.

use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{radial_classes, Grid};
use crate::linalg::eigh_smallest;
use crate::operator::{GridFunction, OperatorSystem};
use crate::solver::ProblemParams;

/// Linearized bilinear form `B = A + lambda M - p M diag(u^{p-1})` at a
/// nonnegative profile `u`.
#[derive(Debug)]
pub struct LinearizedSystem {
    pub grid: Arc<Grid>,
    pub params: ProblemParams,
    pub u: GridFunction,
    pub matrix: Array2<f64>,
}

/// Builds the linearized system. The potential term only touches the
/// diagonal, so symmetry and sparsity structure of `A` carry over.
pub fn assemble_linearized(
    sys: &OperatorSystem,
    u: &GridFunction,
    params: &ProblemParams,
) -> Result<LinearizedSystem> {
    if u.grid.signature() != sys.grid.signature() {
        return Err(Error::GridMismatch);
    }
    let min = u.values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if min < 0.0 {
        return Err(Error::NegativeInput(min));
    }
    let hn = sys.grid.cell_volume();
    let mut b = sys.matrix.clone();
    for i in 0..sys.grid.n_interior() {
        b[[i, i]] += hn * (params.lambda - params.p * u.values[i].powf(params.p - 1.0));
    }
    Ok(LinearizedSystem {
        grid: sys.grid.clone(),
        params: *params,
        u: u.clone(),
        matrix: b,
    })
}

impl LinearizedSystem {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.grid.n_interior();
        assert_eq!(v.len(), n);
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = self.matrix.row(i);
            let row = row.to_slice().expect("contiguous row");
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `B(phi, psi) = phi^T B psi`, summed over unordered pairs so it is
    /// bit-identical under argument swap.
    pub fn bilinear(&self, phi: &[f64], psi: &[f64]) -> f64 {
        let n = self.grid.n_interior();
        let mut acc = 0.0;
        for i in 0..n {
            let row = self.matrix.row(i);
            let row = row.to_slice().expect("contiguous row");
            let mut off = 0.0;
            for j in 0..i {
                off += row[j] * (phi[i] * psi[j] + phi[j] * psi[i]);
            }
            acc += off + row[i] * phi[i] * psi[i];
        }
        acc
    }
}

/// Lowest eigenpairs of `B phi = mu M phi`, `M = h^N I`, ascending.
#[derive(Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// M-orthonormal eigenvectors, sign-fixed along the positive x1-ray.
    pub eigenvectors: Vec<GridFunction>,
    /// Per-pair relative defect `|B phi - mu M phi|_2 / |B phi|_2`.
    pub residuals: Vec<f64>,
}

/// Solves the lumped-mass generalized problem: with `M = h^N I` it reduces to
/// the standard symmetric problem `B phi = (mu h^N) phi`.
pub fn eigen_solve(lin: &LinearizedSystem, k: usize) -> Result<Spectrum> {
    let n = lin.grid.n_interior();
    assert!(k >= 1 && k <= n, "need 1 <= k <= n");
    let hn = lin.grid.cell_volume();
    let (raw_vals, raw_vecs) = eigh_smallest(&lin.matrix, k)?;

    // Sign convention: nonnegative at the first nonvanishing node along the
    // positive x1-ray.
    let mut ray: Vec<usize> = (0..n)
        .filter(|&i| lin.grid.lattice[i][0] > 0 && lin.grid.lattice[i][1] == 0)
        .collect();
    ray.sort_by_key(|&i| lin.grid.lattice[i][0]);

    let scale = hn.sqrt().recip();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for (idx, val) in raw_vals.iter().enumerate() {
        let mu = val / hn;
        let mut v: Vec<f64> = raw_vecs.row(idx).iter().map(|x| x * scale).collect();
        let lead = ray
            .iter()
            .map(|&i| v[i])
            .find(|x| *x != 0.0)
            .unwrap_or(1.0);
        if lead < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        let bv = lin.apply(&v);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let r = bv[i] - mu * hn * v[i];
            num += r * r;
            den += bv[i] * bv[i];
        }
        residuals.push((num / den.max(f64::MIN_POSITIVE)).sqrt());
        eigenvalues.push(mu);
        eigenvectors.push(GridFunction::new(lin.grid.clone(), v)?);
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        residuals,
    })
}

/// Morse index and degeneracy verdict at a relative zero-threshold.
#[derive(Debug, Clone, Copy)]
pub struct MorseReport {
    pub morse_index: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub degenerate: bool,
    pub tol_zero: f64,
}

/// Counts strictly negative eigenvalues and flags near-zero ones.
/// `tol_zero` defaults to `1e-6 * |mu1|`.
pub fn morse_and_degeneracy(spec: &Spectrum, tol_zero: Option<f64>) -> MorseReport {
    assert!(
        spec.eigenvalues.len() >= 3,
        "need at least 3 computed eigenvalues"
    );
    let tol = tol_zero.unwrap_or(1e-6 * spec.eigenvalues[0].abs());
    let morse_index = spec.eigenvalues.iter().filter(|&&m| m < -tol).count();
    let degenerate = spec.eigenvalues.iter().any(|&m| m.abs() <= tol);
    MorseReport {
        morse_index,
        mu1: spec.eigenvalues[0],
        mu2: spec.eigenvalues[1],
        degenerate,
        tol_zero: tol,
    }
}

/// Relative defect of the ground-eigenvalue identity
/// `mu1 <u, phi1>_M = (1 - p) <u^p, phi1>_M` satisfied by any solution `u`.
pub fn check_mu1_identity(u: &GridFunction, spec: &Spectrum, p: f64) -> Result<f64> {
    if p == 1.0 {
        return Err(Error::UnitExponent);
    }
    let phi1 = &spec.eigenvectors[0];
    if u.grid.signature() != phi1.grid.signature() {
        return Err(Error::GridMismatch);
    }
    let hn = u.grid.cell_volume();
    let mu1 = spec.eigenvalues[0];
    let lhs: f64 = mu1
        * hn
        * u.values
            .iter()
            .zip(&phi1.values)
            .map(|(a, b)| a * b)
            .sum::<f64>();
    let rhs: f64 = (1.0 - p)
        * hn
        * u.values
            .iter()
            .zip(&phi1.values)
            .map(|(a, b)| a.powf(p) * b)
            .sum::<f64>();
    Ok((lhs - rhs).abs() / rhs.abs())
}

/// Strict sign alternations in a profile, ignoring entries below
/// `1e-10 * max|profile|`.
pub fn count_sign_changes(profile: &[f64]) -> Result<usize> {
    let max = profile.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Err(Error::AllZeroProfile);
    }
    let dead = 1e-10 * max;
    let mut count = 0;
    let mut last = 0i8;
    for &v in profile {
        if v.abs() <= dead {
            continue;
        }
        let sign = if v > 0.0 { 1 } else { -1 };
        if last != 0 && sign != last {
            count += 1;
        }
        last = sign;
    }
    Ok(count)
}

/// Radial restriction of a grid function: orbit-averaged values per exact
/// radius class, radii ascending.
pub fn radial_profile(u: &GridFunction) -> (Vec<f64>, Vec<f64>) {
    let h = u.grid.h;
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for (r2, idx) in radial_classes(&u.grid) {
        radii.push((r2 as f64).sqrt() * h);
        values.push(idx.iter().map(|&i| u.values[i]).sum::<f64>() / idx.len() as f64);
    }
    (radii, values)
}

/// Restriction of a grid function to a full diameter through the origin,
/// ordered by the coordinate. In 2D the axis with the larger restricted
/// amplitude is chosen, so modes that vanish identically along one axis
/// (e.g. an eigenfunction antisymmetric across it) are still sampled where
/// they live. Orbit averaging is deliberately avoided: it annihilates
/// antisymmetric functions, leaving only roundoff noise.
pub fn axis_profile(u: &GridFunction) -> Vec<f64> {
    let grid = &u.grid;
    let dim = grid.dim();
    let line = |axis: usize| -> Vec<(i64, f64)> {
        let other = 1 - axis;
        let mut pts: Vec<(i64, f64)> = (0..grid.n_interior())
            .filter(|&i| dim == 1 || grid.lattice[i][other] == 0)
            .map(|i| (grid.lattice[i][axis], u.values[i]))
            .collect();
        pts.sort_by_key(|&(k, _)| k);
        pts
    };
    let mut best = line(0);
    if dim == 2 {
        let alt = line(1);
        let amp = |p: &[(i64, f64)]| p.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
        if amp(&alt) > amp(&best) {
            best = alt;
        }
    }
    best.into_iter().map(|(_, v)| v).collect()
}

/// Indices of the eigenvalue cluster containing `mu2` (relative spread
/// `rel`), excluding `mu1`.
pub fn mu2_cluster(spec: &Spectrum, rel: f64) -> Vec<usize> {
    let mu2 = spec.eigenvalues[1];
    let scale = mu2.abs().max(spec.eigenvalues[0].abs());
    spec.eigenvalues
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &m)| (m - mu2).abs() <= rel * scale.max(f64::MIN_POSITIVE))
        .map(|(i, _)| i)
        .collect()
}
