//! Shared building blocks for the subcommands.

use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use fracground::grid::{build_grid, scale_domain, Domain};
use fracground::spectra::LinearizedSystem;
use fracground::{
    check_mu1_identity, count_sign_changes, factor_resolvent, morse_and_degeneracy, mu2_cluster,
    axis_profile, solve_least_energy_factored, DomainKind, Grid, GridFunction, OperatorSystem,
    ProblemParams, ResolventFactor, SolveConfig, SolveResult, Spectrum,
};

use crate::config::RunConfig;

/// Unit-scale model domain selected by the config.
pub fn base_domain(cfg: &RunConfig) -> Result<Domain> {
    Ok(match cfg.kind {
        DomainKind::Interval => Domain::interval(),
        DomainKind::Disc => Domain::disc(),
        DomainKind::AxisEllipse => Domain::ellipse(cfg.semiaxes[0], cfg.semiaxes[1])?,
    })
}

/// Grid, operator, and problem parameters at domain scale `r`.
pub struct Setup {
    pub grid: Arc<Grid>,
    pub sys: OperatorSystem,
    pub params: ProblemParams,
}

pub fn setup(cfg: &RunConfig, r: f64) -> Result<Setup> {
    let params = ProblemParams::new(cfg.dim, cfg.s, cfg.lambda, cfg.p)?;
    let domain = scale_domain(&base_domain(cfg)?, r)?;
    let grid = Arc::new(build_grid(&domain, cfg.h).context("grid construction failed")?);
    let sys = OperatorSystem::assemble(grid.clone(), params.kernel()?, params.lambda);
    Ok(Setup { grid, sys, params })
}

pub fn solve_cfg(cfg: &RunConfig) -> SolveConfig {
    SolveConfig {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        recenter: false,
    }
}

/// Nonnegative random initialization: squared samples of a seeded normal
/// field (the solver Nehari-projects it before iterating).
pub fn random_init(grid: Arc<Grid>, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..grid.n_interior())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * z
        })
        .collect();
    GridFunction::new(grid, values).expect("matching grid")
}

/// Outcome of a multistart uniqueness probe.
#[derive(Debug, Serialize)]
pub struct MultistartOutcome {
    pub seeds: Vec<u64>,
    pub energies: Vec<f64>,
    pub iterations: Vec<usize>,
    pub all_converged: bool,
    /// Largest sup-distance between any two seed solutions.
    pub max_pairwise_distance: f64,
    /// Largest difference between any two seed energies.
    pub energy_spread: f64,
    /// Pairwise distance within `1e-6` and all seeds converged.
    pub unique: bool,
}

/// Runs one solve per seed on a shared factorization and measures scatter.
pub fn multistart(
    factor: &ResolventFactor,
    sys: &OperatorSystem,
    params: &ProblemParams,
    solve: &SolveConfig,
    seeds: &[u64],
) -> Result<(MultistartOutcome, Vec<SolveResult>)> {
    // Rough random starts drift toward off-center near-solutions on large
    // domains; recentring keeps every trajectory aimed at the centered one.
    let solve = SolveConfig {
        recenter: true,
        ..*solve
    };
    let results: Vec<SolveResult> = seeds
        .iter()
        .map(|&seed| {
            let init = random_init(sys.grid.clone(), seed);
            solve_least_energy_factored(factor, sys, params, &solve, &init)
        })
        .collect::<fracground::Result<Vec<_>>>()?;

    let mut max_dist = 0.0f64;
    for i in 0..results.len() {
        for j in 0..i {
            let d = results[i]
                .u
                .values
                .iter()
                .zip(&results[j].u.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            max_dist = max_dist.max(d);
        }
    }
    let energies: Vec<f64> = results.iter().map(|r| r.energy).collect();
    let spread = energies.iter().fold(f64::NEG_INFINITY, |m, &e| m.max(e))
        - energies.iter().fold(f64::INFINITY, |m, &e| m.min(e));
    let all_converged = results.iter().all(|r| r.converged);
    let outcome = MultistartOutcome {
        seeds: seeds.to_vec(),
        energies,
        iterations: results.iter().map(|r| r.iterations).collect(),
        all_converged,
        max_pairwise_distance: max_dist,
        energy_spread: spread,
        unique: all_converged && max_dist <= 1e-6,
    };
    Ok((outcome, results))
}

/// Relative residual of the scaled equation
/// `eps (-Delta)^s v + lambda v = v^p` in the discrete Euclidean norm:
/// `|eps A v + h^N (lambda v - v^p)|_2 / |h^N v^p|_2`.
pub fn equation_residual(sys: &OperatorSystem, eps: f64, p: f64, v: &GridFunction) -> f64 {
    let hn = sys.grid.cell_volume();
    let av = sys.apply(&v.values);
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &vi) in v.values.iter().enumerate() {
        let rhs = hn * vi.abs().powf(p - 1.0) * vi;
        let r = eps * av[i] + hn * sys.lambda * vi - rhs;
        num += r * r;
        den += rhs * rhs;
    }
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}

/// Spectral sanity report attached to every converged solve.
#[derive(Debug, Serialize)]
pub struct SpectralChecks {
    pub eigenvalues: Vec<f64>,
    pub eigen_residuals: Vec<f64>,
    pub morse_index: usize,
    pub degenerate: bool,
    pub tol_zero: f64,
    pub mu1_negative: bool,
    /// Defect of the ground-mode pairing identity
    /// `mu1 <u, phi1> = (1 - p) <u^p, phi1>`.
    pub mu1_identity_defect: f64,
    pub phi1_one_signed: bool,
    /// Sign changes of the second mode along the radial profile.
    pub phi2_diameter_sign_changes: usize,
    pub laws_hold: bool,
}

pub fn spectral_checks(
    lin: &LinearizedSystem,
    spec: &Spectrum,
    u: &GridFunction,
    tol_zero: f64,
) -> Result<SpectralChecks> {
    let morse = morse_and_degeneracy(spec, Some(tol_zero));
    let identity = check_mu1_identity(u, spec, lin.params.p)?;
    let phi1 = &spec.eigenvectors[0];
    let phi1_one_signed = phi1.values.iter().all(|&x| x >= 0.0)
        || phi1.values.iter().all(|&x| x <= 0.0);
    let profile = axis_profile(&spec.eigenvectors[1]);
    let changes = count_sign_changes(&profile)?;
    let max_changes = if lin.grid.dim() == 1 { 1 } else { 2 };
    let laws_hold = morse.mu1 < 0.0
        && morse.morse_index == 1
        && identity <= 1e-6
        && phi1_one_signed
        && changes >= 1
        && changes <= max_changes
        && (lin.grid.dim() == 2 || changes == 1);
    Ok(SpectralChecks {
        eigenvalues: spec.eigenvalues.clone(),
        eigen_residuals: spec.residuals.clone(),
        morse_index: morse.morse_index,
        degenerate: morse.degenerate,
        tol_zero,
        mu1_negative: morse.mu1 < 0.0,
        mu1_identity_defect: identity,
        phi1_one_signed,
        phi2_diameter_sign_changes: changes,
        laws_hold,
    })
}

/// Representative second eigenvalue after clustering near-degenerate modes.
pub fn mu2_of(spec: &Spectrum) -> (f64, Vec<usize>) {
    let cluster = mu2_cluster(spec, 1e-8);
    (spec.eigenvalues[cluster[0]], cluster)
}

/// Pretty-printed, byte-stable JSON artifact.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Factors the resolvent once for reuse across initializations.
pub fn factor(sys: &OperatorSystem, params: &ProblemParams) -> Result<ResolventFactor> {
    Ok(factor_resolvent(sys, params)?)
}
