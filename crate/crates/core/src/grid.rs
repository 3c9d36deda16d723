//! Symmetric model domains, uniform origin-centered grids, and the discrete
//! reflection maps used by every other module.
//!
//! Grids live on the integer lattice scaled by `h`, so coordinate reflection
//! is an exact permutation of interior node indices and reflected coordinates
//! agree bit-exactly with negated ones.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Supported model domain shapes. All are convex in every coordinate
/// direction and invariant under each coordinate reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Interval,
    Disc,
    AxisEllipse,
}

impl DomainKind {
    pub fn code(self) -> u8 {
        match self {
            DomainKind::Interval => 0,
            DomainKind::Disc => 1,
            DomainKind::AxisEllipse => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(DomainKind::Interval),
            1 => Some(DomainKind::Disc),
            2 => Some(DomainKind::AxisEllipse),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Interval => "interval",
            DomainKind::Disc => "disc",
            DomainKind::AxisEllipse => "ellipse",
        }
    }
}

/// A scaled model domain `D_R = R * D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub kind: DomainKind,
    pub dim: usize,
    pub scale: f64,
    pub semiaxes: Vec<f64>,
}

impl Domain {
    pub fn interval() -> Self {
        Domain {
            kind: DomainKind::Interval,
            dim: 1,
            scale: 1.0,
            semiaxes: vec![1.0],
        }
    }

    pub fn disc() -> Self {
        Domain {
            kind: DomainKind::Disc,
            dim: 2,
            scale: 1.0,
            semiaxes: vec![1.0, 1.0],
        }
    }

    pub fn ellipse(a1: f64, a2: f64) -> Result<Self> {
        if a1 <= 0.0 || a2 <= 0.0 {
            return Err(Error::NonpositiveScale(a1.min(a2)));
        }
        Ok(Domain {
            kind: DomainKind::AxisEllipse,
            dim: 2,
            scale: 1.0,
            semiaxes: vec![a1, a2],
        })
    }

    /// Semiaxes of the scaled domain `R * D`.
    pub fn effective_semiaxes(&self) -> Vec<f64> {
        self.semiaxes.iter().map(|a| a * self.scale).collect()
    }

    /// Strict interior membership test.
    pub fn contains_strict(&self, x: &[f64]) -> bool {
        let ax = self.effective_semiaxes();
        match self.kind {
            DomainKind::Interval => x[0].abs() < ax[0],
            DomainKind::Disc | DomainKind::AxisEllipse => {
                let mut q = 0.0;
                for i in 0..self.dim {
                    q += (x[i] / ax[i]).powi(2);
                }
                q < 1.0
            }
        }
    }

    /// Distance from an interior point to the model boundary (analytic for
    /// the interval and the disc; Newton projection for the ellipse).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        let ax = self.effective_semiaxes();
        match self.kind {
            DomainKind::Interval => ax[0] - x[0].abs(),
            DomainKind::Disc => ax[0] - (x[0] * x[0] + x[1] * x[1]).sqrt(),
            DomainKind::AxisEllipse => {
                let (p, _) = self.nearest_boundary(x);
                ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt()
            }
        }
    }

    /// Nearest boundary point and the unit outward normal there.
    pub fn nearest_boundary(&self, x: &[f64]) -> ([f64; 2], [f64; 2]) {
        let ax = self.effective_semiaxes();
        match self.kind {
            DomainKind::Interval => {
                if x[0] >= 0.0 {
                    ([ax[0], 0.0], [1.0, 0.0])
                } else {
                    ([-ax[0], 0.0], [-1.0, 0.0])
                }
            }
            DomainKind::Disc => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if r < 1e-300 {
                    ([ax[0], 0.0], [1.0, 0.0])
                } else {
                    let n = [x[0] / r, x[1] / r];
                    ([ax[0] * n[0], ax[0] * n[1]], n)
                }
            }
            DomainKind::AxisEllipse => {
                let (a, b) = (ax[0], ax[1]);
                // Work in the first quadrant, restore signs at the end.
                let (sx, sy) = (x[0].signum(), x[1].signum());
                let (px, py) = (x[0].abs(), x[1].abs());
                if px < 1e-300 && py < 1e-300 {
                    let p = if a <= b { [a, 0.0] } else { [0.0, b] };
                    let n = if a <= b { [1.0, 0.0] } else { [0.0, 1.0] };
                    return (p, n);
                }
                let mut t = py.atan2(px.max(1e-300));
                for _ in 0..60 {
                    let (ct, st) = (t.cos(), t.sin());
                    let f = (a * ct - px) * (-a * st) + (b * st - py) * (b * ct);
                    let df = (a * st).powi(2) + (b * ct).powi(2)
                        - (a * ct - px) * a * ct
                        - (b * st - py) * b * st;
                    let dt = f / df;
                    t -= dt;
                    t = t.clamp(0.0, std::f64::consts::FRAC_PI_2);
                    if dt.abs() < 1e-14 {
                        break;
                    }
                }
                let bp = [sx * a * t.cos(), sy * b * t.sin()];
                let g = [bp[0] / (a * a), bp[1] / (b * b)];
                let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
                (bp, [g[0] / gn, g[1] / gn])
            }
        }
    }
}

/// Rescales a domain: `D -> R * D`.
pub fn scale_domain(domain: &Domain, r: f64) -> Result<Domain> {
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::NonpositiveScale(r));
    }
    let mut d = domain.clone();
    d.scale *= r;
    Ok(d)
}

/// Uniform origin-centered lattice restricted to the interior of a domain.
#[derive(Debug, Clone)]
pub struct Grid {
    pub domain: Domain,
    pub h: f64,
    /// Integer lattice coordinates of interior nodes, lexicographic order.
    pub lattice: Vec<[i64; 2]>,
    /// Physical coordinates (`k * h`, exact).
    pub coords: Vec<[f64; 2]>,
    /// Interior nodes within `2h` of the boundary.
    pub boundary_adjacent: Vec<usize>,
    /// Analytic distance to the boundary, per interior node.
    pub boundary_dist: Vec<f64>,
    index: HashMap<[i64; 2], usize>,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn n_interior(&self) -> usize {
        self.lattice.len()
    }

    /// Quadrature cell volume `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    pub fn node_index(&self, k: [i64; 2]) -> Option<usize> {
        self.index.get(&k).copied()
    }

    /// Cheap structural identity used for grid-mismatch checks.
    pub fn signature(&self) -> (usize, u64, usize, u8, u64, u64) {
        let ax = self.domain.effective_semiaxes();
        (
            self.dim(),
            self.h.to_bits(),
            self.n_interior(),
            self.kind_code(),
            ax[0].to_bits(),
            ax.get(1).copied().unwrap_or(0.0).to_bits(),
        )
    }

    fn kind_code(&self) -> u8 {
        self.domain.kind.code()
    }

    /// Flat key-value descriptor block used in report headers.
    pub fn descriptor(&self) -> String {
        let ax = self.domain.effective_semiaxes();
        let semi = ax
            .iter()
            .map(|a| format!("{a}"))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "N = {}\nkind = {}\nR = {}\nsemiaxes = {}\nh = {}\nn_interior = {}\n",
            self.dim(),
            self.domain.kind.name(),
            self.domain.scale,
            semi,
            self.h,
            self.n_interior()
        )
    }
}

/// Axis-reflection realized as a permutation of interior node indices.
#[derive(Debug, Clone)]
pub struct SymmetryMap {
    pub axis: usize,
    pub perm: Vec<usize>,
}

impl SymmetryMap {
    pub fn is_involution(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &j)| self.perm[j] == i)
    }
}

/// Builds the interior grid for a domain at spacing `h`.
///
/// Nodes sit at `k * h` for integer `k`; a node is interior iff it lies
/// strictly inside the domain. The degeneracy check additionally requires, on
/// every coordinate axis, at least 3 axis nodes whose boundary distance is at
/// least `h` (nodes closer than `h` to the boundary cannot support the
/// singular-cell stencil).
pub fn build_grid(domain: &Domain, h: f64) -> Result<Grid> {
    assert!(h > 0.0 && h.is_finite(), "spacing must be positive");
    let dim = domain.dim;
    let ax = domain.effective_semiaxes();
    let kmax: Vec<i64> = ax.iter().map(|a| (a / h).ceil() as i64 + 1).collect();

    let mut lattice = Vec::new();
    if dim == 1 {
        for k in -kmax[0]..=kmax[0] {
            let x = [k as f64 * h, 0.0];
            if domain.contains_strict(&x) {
                lattice.push([k, 0]);
            }
        }
    } else {
        for k1 in -kmax[0]..=kmax[0] {
            for k2 in -kmax[1]..=kmax[1] {
                let x = [k1 as f64 * h, k2 as f64 * h];
                if domain.contains_strict(&x) {
                    lattice.push([k1, k2]);
                }
            }
        }
    }

    // Degeneracy check per axis: count well-separated axis nodes.
    let dist_floor = h * (1.0 - 1e-12);
    for axis in 0..dim {
        let count = lattice
            .iter()
            .filter(|k| {
                let on_axis = dim == 1 || k[1 - axis] == 0;
                if !on_axis {
                    return false;
                }
                let x = [k[0] as f64 * h, k[1] as f64 * h];
                domain.boundary_distance(&x) >= dist_floor
            })
            .count();
        if count < 3 {
            return Err(Error::DegenerateGrid { axis, count });
        }
    }

    let coords: Vec<[f64; 2]> = lattice
        .iter()
        .map(|k| [k[0] as f64 * h, k[1] as f64 * h])
        .collect();
    let index: HashMap<[i64; 2], usize> = lattice
        .iter()
        .enumerate()
        .map(|(i, &k)| (k, i))
        .collect();
    let boundary_dist: Vec<f64> = coords
        .iter()
        .map(|x| domain.boundary_distance(&x[..dim]))
        .collect();
    let boundary_adjacent: Vec<usize> = (0..lattice.len())
        .filter(|&i| boundary_dist[i] <= 2.0 * h * (1.0 + 1e-12))
        .collect();

    Ok(Grid {
        domain: domain.clone(),
        h,
        lattice,
        coords,
        boundary_adjacent,
        boundary_dist,
        index,
    })
}

/// Groups interior nodes into exact radial orbits (equal squared integer
/// radius `k1^2 + k2^2`), returned in ascending radius order.
pub fn radial_classes(grid: &Grid) -> Vec<(i64, Vec<usize>)> {
    let mut map: HashMap<i64, Vec<usize>> = HashMap::new();
    for (i, k) in grid.lattice.iter().enumerate() {
        let r2 = k[0] * k[0] + k[1] * k[1];
        map.entry(r2).or_default().push(i);
    }
    let mut classes: Vec<(i64, Vec<usize>)> = map.into_iter().collect();
    classes.sort_by_key(|(r2, _)| *r2);
    for (_, idx) in &mut classes {
        idx.sort_unstable();
    }
    classes
}

/// Permutation realizing the coordinate reflection `sigma_axis` on the grid.
pub fn reflection_map(grid: &Grid, axis: usize) -> Result<SymmetryMap> {
    if axis >= grid.dim() {
        return Err(Error::AxisOutOfRange {
            axis,
            dim: grid.dim(),
        });
    }
    let mut perm = vec![0usize; grid.n_interior()];
    for (i, &k) in grid.lattice.iter().enumerate() {
        let mut m = k;
        m[axis] = -m[axis];
        match grid.node_index(m) {
            Some(j) => perm[i] = j,
            None => return Err(Error::AsymmetricGrid { axis, index: i }),
        }
    }
    Ok(SymmetryMap { axis, perm })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_basic() {
        let d = Domain::interval();
        let g = build_grid(&d, 0.5).unwrap();
        let xs: Vec<f64> = g.coords.iter().map(|c| c[0]).collect();
        assert_eq!(xs, vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn disc_count_nine() {
        let d = Domain::disc();
        let g = build_grid(&d, 0.5).unwrap();
        assert_eq!(g.n_interior(), 9);
    }

    #[test]
    fn interval_degenerate() {
        let d = Domain::interval();
        match build_grid(&d, 0.9) {
            Err(Error::DegenerateGrid { count, .. }) => assert_eq!(count, 1),
            other => panic!("expected degenerate grid, got {other:?}"),
        }
    }

    #[test]
    fn reflection_involution_and_example() {
        let d = Domain::interval();
        let g = build_grid(&d, 0.5).unwrap();
        let m = reflection_map(&g, 0).unwrap();
        assert_eq!(m.perm, vec![2, 1, 0]);
        assert!(m.is_involution());
    }

    #[test]
    fn reflection_axis_out_of_range() {
        let g = build_grid(&Domain::interval(), 0.5).unwrap();
        assert!(matches!(
            reflection_map(&g, 1),
            Err(Error::AxisOutOfRange { .. })
        ));
    }

    #[test]
    fn scaling() {
        let d = Domain::interval();
        let d3 = scale_domain(&d, 3.0).unwrap();
        assert_eq!(d3.effective_semiaxes(), vec![3.0]);
        let disc2 = scale_domain(&Domain::disc(), 2.0).unwrap();
        assert_eq!(disc2.effective_semiaxes(), vec![2.0, 2.0]);
        assert!(scale_domain(&d, 0.0).is_err());
    }

    #[test]
    fn nested_scales_contain() {
        let d = Domain::disc();
        let small = scale_domain(&d, 2.0).unwrap();
        let big = scale_domain(&d, 3.0).unwrap();
        let gs = build_grid(&small, 0.25).unwrap();
        let gb = build_grid(&big, 0.25).unwrap();
        for k in &gs.lattice {
            assert!(gb.node_index(*k).is_some());
        }
    }

    #[test]
    fn reflected_coords_bit_exact() {
        let g = build_grid(&Domain::disc(), 0.25).unwrap();
        for axis in 0..2 {
            let m = reflection_map(&g, axis).unwrap();
            for (i, &j) in m.perm.iter().enumerate() {
                let mut want = g.coords[i];
                want[axis] = -want[axis];
                for c in 0..2 {
                    let got = g.coords[j][c];
                    // Exact reflection: identical bits except +-0.0 at the axis.
                    assert!(got == want[c]);
                    if got != 0.0 {
                        assert_eq!(got.to_bits(), want[c].to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn ellipse_distance_sane() {
        let d = Domain::ellipse(2.0, 1.0).unwrap();
        // On the long axis the nearest boundary is the (0, +-1) pole region;
        // at the origin distance is min semiaxis.
        assert!((d.boundary_distance(&[0.0, 0.0]) - 1.0).abs() < 1e-10);
        assert!((d.boundary_distance(&[1.9, 0.0]) - 0.1).abs() < 1e-9);
        let (p, n) = d.nearest_boundary(&[0.0, 0.5]);
        assert!((p[0]).abs() < 1e-9 && (p[1] - 1.0).abs() < 1e-9);
        assert!((n[1] - 1.0).abs() < 1e-9);
    }
}
