//! Polarization (two-point rearrangement), antisymmetrization, symmetry
//! defects, boundary quotients `v / delta^s`, and the directional
//! integration-by-parts pairing.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{reflection_map, DomainKind, Grid, SymmetryMap};
use crate::operator::GridFunction;
use crate::spectra::{LinearizedSystem, Spectrum};

/// Reflection used by a polarization: through a coordinate hyperplane, either
/// centered (`x_i -> -x_i`, an interior permutation) or offset by a whole
/// number of cells (`x_i -> 2a - x_i`; mirror nodes outside the domain read
/// as zero). The offset variant exists solely as a negative control: the
/// rearrangement inequalities are only claimed for the centered case.
#[derive(Debug, Clone)]
pub enum Mirror {
    Centered(SymmetryMap),
    Offset { axis: usize, cells: i64 },
}

impl Mirror {
    pub fn axis(&self) -> usize {
        match self {
            Mirror::Centered(m) => m.axis,
            Mirror::Offset { axis, .. } => *axis,
        }
    }

    /// Value of `v` at the mirror image of node `i`.
    pub fn mirror_value(&self, v: &GridFunction, i: usize) -> f64 {
        match self {
            Mirror::Centered(m) => v.values[m.perm[i]],
            Mirror::Offset { axis, cells } => {
                let mut k = v.grid.lattice[i];
                k[*axis] = 2 * cells - k[*axis];
                v.grid.node_index(k).map_or(0.0, |j| v.values[j])
            }
        }
    }

    /// Signed side of node `i`: positive on the half-space `x_axis > a`.
    fn side(&self, grid: &Grid, i: usize) -> i64 {
        let k = grid.lattice[i][self.axis()];
        let a = match self {
            Mirror::Centered(_) => 0,
            Mirror::Offset { cells, .. } => *cells,
        };
        (k - a).signum()
    }
}

/// A function together with its polarization.
#[derive(Debug, Clone)]
pub struct PolarizedPair {
    pub original: GridFunction,
    pub polarized: GridFunction,
    pub mirror: Mirror,
}

fn polarize_with(v: &GridFunction, mirror: Mirror) -> PolarizedPair {
    let n = v.grid.n_interior();
    let mut pv = v.values.clone();
    for i in 0..n {
        let side = mirror.side(&v.grid, i);
        if side == 0 {
            continue;
        }
        let m = mirror.mirror_value(v, i);
        pv[i] = if side > 0 {
            v.values[i].min(m)
        } else {
            v.values[i].max(m)
        };
    }
    PolarizedPair {
        original: v.clone(),
        polarized: GridFunction {
            grid: v.grid.clone(),
            values: pv,
        },
        mirror,
    }
}

/// Polarization about the centered hyperplane `x_axis = 0`: the smaller of
/// `{v(x), v(sigma x)}` on the positive side, the larger on the negative side.
pub fn polarize(v: &GridFunction, axis: usize) -> Result<PolarizedPair> {
    let map = reflection_map(&v.grid, axis)?;
    Ok(polarize_with(v, Mirror::Centered(map)))
}

/// Polarization about the off-center hyperplane `x_axis = cells * h`.
/// Negative control only; see [`Mirror`].
pub fn polarize_offset(v: &GridFunction, axis: usize, cells: i64) -> Result<PolarizedPair> {
    if axis >= v.grid.dim() {
        return Err(Error::AxisOutOfRange {
            axis,
            dim: v.grid.dim(),
        });
    }
    Ok(polarize_with(v, Mirror::Offset { axis, cells }))
}

fn positive_part(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

fn negative_part(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (-x).max(0.0)).collect()
}

/// Margins of the polarization inequalities in the linearized bilinear form.
/// Every margin should be nonnegative (up to `1e-10` slack) for a centered
/// polarization with a symmetric, `|x_axis|`-nonincreasing potential.
#[derive(Debug, Clone, Copy)]
pub struct PolarizationReport {
    /// `B(w, w+) - B(Pw, (Pw)+)`.
    pub margin_positive: f64,
    /// `-B(w, w-) + B(Pw, (Pw)-)`.
    pub margin_negative: f64,
    /// `[w+]^2 - [(Pw)+]^2` (Gagliardo seminorm).
    pub seminorm_positive: f64,
    /// `[w-]^2 - [(Pw)-]^2`.
    pub seminorm_negative: f64,
    pub violations: usize,
    pub slack: f64,
}

/// Pure Gagliardo quadratic form recovered from a linearized system:
/// `v^T A v = v^T B v - lambda |v|_M^2 + p <u^{p-1} v, v>_M`.
fn gagliardo_sq(lin: &LinearizedSystem, v: &[f64]) -> f64 {
    let hn = lin.grid.cell_volume();
    let (lambda, p) = (lin.params.lambda, lin.params.p);
    let mut zero = 0.0;
    for (i, x) in v.iter().enumerate() {
        zero += (lambda - p * lin.u.values[i].powf(p - 1.0)) * x * x;
    }
    lin.bilinear(v, v) - hn * zero
}

/// Evaluates both rearrangement inequalities and the seminorm contraction for
/// a polarized pair.
///
/// For centered mirrors the potential `p u^{p-1}` must be symmetric about the
/// hyperplane and nonincreasing in `|x_axis|`; otherwise the inequalities are
/// not claimed and the call fails. Offset mirrors skip the check (they are
/// the negative control).
pub fn verify_polarization_inequalities(
    lin: &LinearizedSystem,
    pair: &PolarizedPair,
) -> Result<PolarizationReport> {
    if lin.grid.signature() != pair.original.grid.signature() {
        return Err(Error::GridMismatch);
    }
    if let Mirror::Centered(map) = &pair.mirror {
        check_potential(lin, map)?;
    }

    let w = &pair.original.values;
    let pw = &pair.polarized.values;
    let (wp, wm) = (positive_part(w), negative_part(w));
    let (pwp, pwm) = (positive_part(pw), negative_part(pw));

    let margin_positive = lin.bilinear(w, &wp) - lin.bilinear(pw, &pwp);
    let margin_negative = -lin.bilinear(w, &wm) + lin.bilinear(pw, &pwm);
    let seminorm_positive = gagliardo_sq(lin, &wp) - gagliardo_sq(lin, &pwp);
    let seminorm_negative = gagliardo_sq(lin, &wm) - gagliardo_sq(lin, &pwm);

    let scale = gagliardo_sq(lin, w).abs().max(1.0);
    let slack = 1e-10 * scale;
    let violations = [
        margin_positive,
        margin_negative,
        seminorm_positive,
        seminorm_negative,
    ]
    .iter()
    .filter(|m| **m < -slack)
    .count();

    Ok(PolarizationReport {
        margin_positive,
        margin_negative,
        seminorm_positive,
        seminorm_negative,
        violations,
        slack,
    })
}

/// The potential must be reflection-symmetric and nonincreasing in the
/// mirrored coordinate for the rearrangement inequalities to apply.
fn check_potential(lin: &LinearizedSystem, map: &SymmetryMap) -> Result<()> {
    let p = lin.params.p;
    let pot: Vec<f64> = lin.u.values.iter().map(|u| p * u.powf(p - 1.0)).collect();
    let max = pot.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for (i, &j) in map.perm.iter().enumerate() {
        let d = (pot[i] - pot[j]).abs();
        if d > 1e-8 * max {
            return Err(Error::AsymmetricPotential(d));
        }
    }
    // Monotonicity along each lattice line parallel to the axis.
    let g = &lin.grid;
    let axis = map.axis;
    for (i, k) in g.lattice.iter().enumerate() {
        if k[axis] < 0 {
            continue;
        }
        let mut next = *k;
        next[axis] += 1;
        if let Some(j) = g.node_index(next) {
            let d = pot[j] - pot[i];
            if d > 1e-8 * max {
                return Err(Error::AsymmetricPotential(d));
            }
        }
    }
    Ok(())
}

/// Odd part extractor `w(x) = Pv(sigma x) - Pv(x)`.
#[derive(Debug, Clone)]
pub struct AntisymmetricPart {
    pub w: GridFunction,
    pub axis: usize,
}

/// Builds the antisymmetric difference of a polarized function about the
/// centered hyperplane.
pub fn antisymmetrize(pair: &PolarizedPair) -> Result<AntisymmetricPart> {
    let map = match &pair.mirror {
        Mirror::Centered(m) => m,
        Mirror::Offset { .. } => {
            return Err(Error::AsymmetricGrid {
                axis: pair.mirror.axis(),
                index: 0,
            })
        }
    };
    let pv = &pair.polarized.values;
    let values: Vec<f64> = (0..pv.len()).map(|i| pv[map.perm[i]] - pv[i]).collect();
    Ok(AntisymmetricPart {
        w: GridFunction {
            grid: pair.polarized.grid.clone(),
            values,
        },
        axis: map.axis,
    })
}

/// `(sup, mass-weighted L2)` norms of `v - v(sigma x)`.
pub fn symmetry_defect(v: &GridFunction, axis: usize) -> Result<(f64, f64)> {
    let map = reflection_map(&v.grid, axis)?;
    let hn = v.grid.cell_volume();
    let mut sup = 0.0f64;
    let mut l2 = 0.0;
    for (i, &j) in map.perm.iter().enumerate() {
        let d = v.values[i] - v.values[j];
        sup = sup.max(d.abs());
        l2 += d * d;
    }
    Ok((sup, (hn * l2).sqrt()))
}

/// Reflection-invariance defect of the eigenvalue cluster containing
/// `phi_2`, measured through `phi_2` itself.
///
/// Reflects `phi_2` across the given axis and projects the result back onto
/// the cluster span (M-orthonormal basis); the defect is the sup norm of the
/// residual. The span of an eigenvalue cluster of a reflection-symmetric
/// operator is reflection invariant, so the defect is zero up to eigensolver
/// accuracy whenever the cluster was resolved correctly -- for a purely even
/// or purely odd `phi_2` alike (the reflected vector is then `phi_2` or
/// `-phi_2`, both inside the span).
pub fn cluster_symmetry_defect(spec: &Spectrum, cluster: &[usize], axis: usize) -> Result<f64> {
    assert!(!cluster.is_empty());
    let phi2 = &spec.eigenvectors[cluster[0]];
    let grid = &phi2.grid;
    let map = reflection_map(grid, axis)?;
    let hn = grid.cell_volume();
    let n = grid.n_interior();

    let reflected: Vec<f64> = (0..n).map(|i| phi2.values[map.perm[i]]).collect();
    let mut proj = vec![0.0; n];
    for &c in cluster {
        let basis = &spec.eigenvectors[c].values;
        let coef: f64 = hn * reflected.iter().zip(basis).map(|(a, b)| a * b).sum::<f64>();
        for (pi, bi) in proj.iter_mut().zip(basis) {
            *pi += coef * bi;
        }
    }
    Ok(reflected
        .iter()
        .zip(&proj)
        .fold(0.0f64, |m, (r, p)| m.max((r - p).abs())))
}

/// Defects of the two variational conditions characterizing a second
/// eigenfunction through its positive and negative parts.
#[derive(Debug, Clone, Copy)]
pub struct SecondEigenReport {
    /// `mu2 * |(v+)|_M^2 - B(v, v+)`; nonnegative when the condition holds.
    pub defect_positive: f64,
    /// `mu2 * |(v-)|_M^2 + B(v, v-)`; nonnegative when the condition holds.
    pub defect_negative: f64,
    /// Magnitude used to judge the defects relatively.
    pub scale: f64,
    /// Both inequalities hold up to `1e-10 * scale`.
    pub inequalities_hold: bool,
    /// Both defects vanish to `1e-8 * scale` (exact eigenfunction case).
    pub equalities_hold: bool,
}

/// Evaluates the positive/negative-part inequality pair that characterizes
/// second eigenfunctions of the linearized operator: a sign-changing `v` is a
/// second eigenfunction precisely when both hold with equality.
///
/// Rejects one-signed input: the characterization is vacuous without both a
/// positive and a negative part (beyond a `1e-10 * sup |v|` dead zone).
pub fn check_second_eigen_characterization(
    lin: &LinearizedSystem,
    v: &GridFunction,
    mu2: f64,
) -> Result<SecondEigenReport> {
    if !std::sync::Arc::ptr_eq(&lin.grid, &v.grid) && lin.grid.signature() != v.grid.signature() {
        return Err(Error::GridMismatch);
    }
    let sup = v.sup_norm();
    let dead = 1e-10 * sup;
    let pos: Vec<f64> = v.values.iter().map(|&x| x.max(0.0)).collect();
    let neg: Vec<f64> = v.values.iter().map(|&x| (-x).max(0.0)).collect();
    let has_pos = pos.iter().any(|&x| x > dead);
    let has_neg = neg.iter().any(|&x| x > dead);
    if !has_pos || !has_neg {
        return Err(Error::OneSignedInput);
    }
    let hn = v.grid.cell_volume();
    let l2_pos = hn * pos.iter().map(|x| x * x).sum::<f64>();
    let l2_neg = hn * neg.iter().map(|x| x * x).sum::<f64>();
    let b_pos = lin.bilinear(&v.values, &pos);
    let b_neg = lin.bilinear(&v.values, &neg);
    let defect_positive = mu2 * l2_pos - b_pos;
    let defect_negative = mu2 * l2_neg + b_neg;
    // Judge the defects against the operator magnitude times the mass of
    // the parts, not against |mu2| alone: near a crossing mu2 is tiny and a
    // |mu2|-sized scale would demand accuracy below what any eigensolver
    // delivers for an operator of this norm.
    let n = lin.grid.n_interior();
    let op_magnitude = (0..n).fold(0.0f64, |m, i| m.max(lin.matrix[[i, i]].abs())) / hn;
    let scale = (mu2.abs().max(op_magnitude) * (l2_pos + l2_neg))
        .max(b_pos.abs() + b_neg.abs())
        .max(f64::MIN_POSITIVE);
    Ok(SecondEigenReport {
        defect_positive,
        defect_negative,
        scale,
        inequalities_hold: defect_positive >= -1e-10 * scale && defect_negative >= -1e-10 * scale,
        equalities_hold: defect_positive.abs() <= 1e-8 * scale
            && defect_negative.abs() <= 1e-8 * scale,
    })
}

/// One boundary-quotient sample.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySample {
    pub node: usize,
    pub x: [f64; 2],
    /// Extrapolated `v / delta^s` at the nearest boundary point.
    pub q: f64,
    /// First component of the outward unit normal there.
    pub nu1: f64,
}

/// Boundary quotient estimates at every boundary-adjacent node.
#[derive(Debug, Clone)]
pub struct BoundaryQuotient {
    pub samples: Vec<BoundarySample>,
}

fn quotient_at(
    v: &GridFunction,
    s: f64,
    bp: [f64; 2],
    normal: [f64; 2],
) -> f64 {
    let h = v.grid.h;
    // Two-point extrapolation of v / delta^s at depths h and 2h inward.
    let p1 = [bp[0] - h * normal[0], bp[1] - h * normal[1]];
    let p2 = [bp[0] - 2.0 * h * normal[0], bp[1] - 2.0 * h * normal[1]];
    let q1 = v.eval(&p1) / h.powf(s);
    let q2 = v.eval(&p2) / (2.0 * h).powf(s);
    2.0 * q1 - q2
}

/// Fits `v(x) ~ q delta(x)^s` along the inward normal at each
/// boundary-adjacent node.
pub fn boundary_quotient(v: &GridFunction, s: f64) -> Result<BoundaryQuotient> {
    let grid = &v.grid;
    let min_ax = grid
        .domain
        .effective_semiaxes()
        .iter()
        .fold(f64::INFINITY, |m, a| m.min(*a));
    if 2.0 * grid.h >= min_ax {
        return Err(Error::InsufficientDepth);
    }
    let dim = grid.dim();
    let samples = grid
        .boundary_adjacent
        .iter()
        .map(|&i| {
            let x = grid.coords[i];
            let (bp, normal) = grid.domain.nearest_boundary(&x[..dim]);
            BoundarySample {
                node: i,
                x,
                q: quotient_at(v, s, bp, normal),
                nu1: normal[0],
            }
        })
        .collect();
    Ok(BoundaryQuotient { samples })
}

/// Central difference `d/dx1` of a grid function with zero extension.
fn d1(v: &GridFunction) -> Vec<f64> {
    let g = &v.grid;
    let node = |k: [i64; 2]| g.node_index(k).map_or(0.0, |i| v.values[i]);
    g.lattice
        .iter()
        .map(|k| (node([k[0] + 1, k[1]]) - node([k[0] - 1, k[1]])) / (2.0 * g.h))
        .collect()
}

/// Directional integration-by-parts pairing: returns
/// `(Gamma(1+s)^2 * boundary integral of (u/d^s)(w/d^s) nu_1,
///   -mu2 * volume integral of d1(u) w, relative gap)`.
///
/// The two sides agree (up to discretization) when `u` is a solution and `w`
/// an eigenfunction of the linearization with eigenvalue `mu2`.
pub fn pohozaev_pairing(
    u: &GridFunction,
    w: &GridFunction,
    mu2: f64,
    s: f64,
) -> Result<(f64, f64, f64)> {
    if u.grid.signature() != w.grid.signature() {
        return Err(Error::GridMismatch);
    }
    let grid = &u.grid;
    let gam2 = gamma(1.0 + s).powi(2);

    let lhs = match grid.domain.kind {
        DomainKind::Interval => {
            let a = grid.domain.effective_semiaxes()[0];
            let q = |bp: [f64; 2], nrm: [f64; 2]| {
                quotient_at(u, s, bp, nrm) * quotient_at(w, s, bp, nrm) * nrm[0]
            };
            gam2 * (q([a, 0.0], [1.0, 0.0]) + q([-a, 0.0], [-1.0, 0.0]))
        }
        DomainKind::Disc | DomainKind::AxisEllipse => {
            let ax = grid.domain.effective_semiaxes();
            let (a, b) = (ax[0], ax[1]);
            let m = 512usize;
            let mut acc = 0.0;
            for j in 0..m {
                let t = 2.0 * PI * j as f64 / m as f64;
                let bp = [a * t.cos(), b * t.sin()];
                let gvec = [bp[0] / (a * a), bp[1] / (b * b)];
                let gn = (gvec[0] * gvec[0] + gvec[1] * gvec[1]).sqrt();
                let nrm = [gvec[0] / gn, gvec[1] / gn];
                let speed = ((a * t.sin()).powi(2) + (b * t.cos()).powi(2)).sqrt();
                acc += quotient_at(u, s, bp, nrm) * quotient_at(w, s, bp, nrm) * nrm[0] * speed;
            }
            gam2 * acc * 2.0 * PI / m as f64
        }
    };

    let du = d1(u);
    let hn = grid.cell_volume();
    let rhs = -mu2 * hn * du.iter().zip(&w.values).map(|(a, b)| a * b).sum::<f64>();
    let gap = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok((lhs, rhs, gap))
}
