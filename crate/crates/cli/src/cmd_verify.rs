//! `verify`: pinned invariant suite over all modules.
//!
//! Runs closed-form oracles and structural invariants on fixed reference
//! configurations, prints one line per invariant, writes a machine-readable
//! summary, and exits nonzero if anything fails.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use fracground::grid::{build_grid, scale_domain, Domain};
use fracground::io::{read_function, write_function};
use fracground::{
    assemble_linearized, assemble_matrix, boundary_quotient, default_init, eigen_solve,
    normalization_constant, pohozaev_pairing, polarize, polarize_offset, solve_ground_state_rn,
    solve_least_energy, verify_polarization_inequalities, GridFunction, KernelParams,
    OperatorSystem, ProblemParams, SolveConfig,
};

use crate::tasks::{equation_residual, spectral_checks, write_json};

#[derive(Serialize)]
struct Invariant {
    name: String,
    pass: bool,
    /// Measured quantity driving the verdict (residual, defect, or error).
    margin: f64,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    invariants: Vec<Invariant>,
    all_pass: bool,
}

fn inv(name: &str, pass: bool, margin: f64, detail: impl Into<String>) -> Invariant {
    Invariant {
        name: name.to_string(),
        pass,
        margin,
        detail: detail.into(),
    }
}

fn interval_grid(h: f64) -> Arc<fracground::Grid> {
    Arc::new(build_grid(&Domain::interval(), h).expect("reference grid"))
}

fn torsion_residual(h: f64) -> f64 {
    let grid = interval_grid(h);
    let kernel = KernelParams::new(1, 0.5).unwrap();
    let sys = OperatorSystem::assemble(grid.clone(), kernel, 1.0);
    let u = GridFunction::from_fn(grid.clone(), |x| (1.0 - x[0] * x[0]).max(0.0).sqrt());
    let au = sys.apply(&u.values);
    let hn = grid.cell_volume();
    grid.coords
        .iter()
        .zip(&au)
        .filter(|(x, _)| x[0].abs() <= 0.9)
        .map(|(_, &a)| (a / hn - 1.0).abs())
        .fold(0.0, f64::max)
}

pub fn run(out: &Path, corrupt: bool) -> Result<i32> {
    let mut invs = Vec::new();

    // Kernel normalization against the closed forms 1/pi and 1/(2 pi).
    let c1 = normalization_constant(1, 0.5)?;
    let d1 = (c1 - 1.0 / PI).abs();
    invs.push(inv("normalization-constant-1d", d1 <= 1e-12, d1, format!("c = {c1}")));
    let c2 = normalization_constant(2, 0.5)?;
    let d2 = (c2 - 0.5 / PI).abs();
    invs.push(inv("normalization-constant-2d", d2 <= 1e-12, d2, format!("c = {c2}")));

    // Bit-exact symmetry of the assembled operator (2D disc reference).
    {
        let grid = Arc::new(build_grid(&scale_domain(&Domain::disc(), 2.0)?, 0.25)?);
        let kernel = KernelParams::new(2, 0.5)?;
        let (mut a, tail) = assemble_matrix(&grid, &kernel, 0.0);
        if corrupt {
            a[[0, 1]] += 1e-3;
        }
        let n = grid.n_interior();
        let mut max_asym = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                if a[[i, j]].to_bits() != a[[j, i]].to_bits() {
                    max_asym = max_asym.max((a[[i, j]] - a[[j, i]]).abs());
                }
            }
        }
        invs.push(inv(
            "operator-symmetry-bitexact",
            max_asym == 0.0,
            max_asym,
            format!("{n} nodes"),
        ));

        // Row sums reproduce the exterior tail: sum_j A_ij = h^N T_i.
        let hn = grid.cell_volume();
        let mut worst = 0.0f64;
        for i in 0..n {
            let row = a.row(i);
            let sum: f64 = row.iter().sum();
            let scale: f64 = row.iter().map(|x| x.abs()).sum();
            worst = worst.max((sum - hn * tail[i]).abs() / scale);
        }
        invs.push(inv("row-sum-tail-identity", worst <= 1e-12, worst, format!("{n} rows")));
    }

    // Torsion oracle: the half-Laplacian of sqrt(1 - x^2) is 1 on (-1, 1).
    let r200 = torsion_residual(1.0 / 200.0);
    let r400 = torsion_residual(1.0 / 400.0);
    invs.push(inv(
        "torsion-residual",
        r200 <= 0.05 && r400 < r200,
        r200,
        format!("h=1/200: {r200:.5}, h=1/400: {r400:.5}"),
    ));

    // Boundary quotient of the torsion profile is sqrt(2) at both endpoints.
    {
        let grid = interval_grid(1.0 / 200.0);
        let u = GridFunction::from_fn(grid, |x| (1.0 - x[0] * x[0]).max(0.0).sqrt());
        let bq = boundary_quotient(&u, 0.5)?;
        let target = 2.0f64.sqrt();
        let worst = bq
            .samples
            .iter()
            .map(|s| (s.q - target).abs() / target)
            .fold(0.0, f64::max);
        invs.push(inv("boundary-quotient-torsion", worst <= 0.05, worst, "target sqrt(2)"));
    }

    // Lowest Dirichlet eigenvalue of the half-Laplacian on (-1, 1).
    {
        let params = ProblemParams::new(1, 0.5, 1.0, 2.0)?;
        let grid = interval_grid(1.0 / 400.0);
        let sys = OperatorSystem::assemble(grid.clone(), params.kernel()?, params.lambda);
        let zero = GridFunction::zeros(grid);
        let lin = assemble_linearized(&sys, &zero, &params)?;
        let spec = eigen_solve(&lin, 1)?;
        let lam1 = spec.eigenvalues[0] - params.lambda;
        let reference = 1.157773;
        let err = (lam1 - reference).abs() / reference;
        invs.push(inv(
            "interval-principal-eigenvalue",
            err <= 0.01,
            err,
            format!("computed {lam1:.6}, reference {reference}"),
        ));
    }

    // Planar torsion oracle: (-Delta)^{1/2} sqrt(1-|x|^2) = pi/2 on the
    // unit disc, measured on |x| <= 0.7 at two resolutions.
    {
        let kp = KernelParams::new(2, 0.5)?;
        let residual = |h: f64| -> Result<f64> {
            let grid = Arc::new(build_grid(&Domain::disc(), h)?);
            let sys = OperatorSystem::assemble(grid.clone(), kp, 0.0);
            let u: Vec<f64> = grid
                .coords
                .iter()
                .map(|x| (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0).sqrt())
                .collect();
            let au = sys.apply(&u);
            let hn = grid.cell_volume();
            let mut worst = 0.0f64;
            for i in 0..grid.n_interior() {
                let x = grid.coords[i];
                if x[0] * x[0] + x[1] * x[1] <= 0.49 {
                    worst = worst.max((au[i] / hn / (PI / 2.0) - 1.0).abs());
                }
            }
            Ok(worst)
        };
        let (r8, r16) = (residual(0.125)?, residual(0.0625)?);
        invs.push(inv(
            "torsion-residual-2d",
            r8 <= 0.05 && r16 < r8,
            r8,
            format!("h=1/8: {r8:.5}, h=1/16: {r16:.5}"),
        ));
    }

    // Lowest Dirichlet eigenvalue of the half-Laplacian on the unit disc;
    // reference from a converged Rayleigh-Ritz computation in the weighted
    // Jacobi basis with closed-form images.
    {
        let params = ProblemParams::new(2, 0.5, 1.0, 3.0)?;
        let grid = Arc::new(build_grid(&Domain::disc(), 0.0625)?);
        let sys = OperatorSystem::assemble(grid.clone(), params.kernel()?, params.lambda);
        let zero = GridFunction::zeros(grid);
        let lin = assemble_linearized(&sys, &zero, &params)?;
        let spec = eigen_solve(&lin, 1)?;
        let lam1 = spec.eigenvalues[0] - params.lambda;
        let reference = 2.0061190;
        let err = (lam1 - reference).abs() / reference;
        invs.push(inv(
            "disc-principal-eigenvalue",
            err <= 0.01,
            err,
            format!("computed {lam1:.6}, reference {reference}"),
        ));
    }

    // Whole-space ground state against the closed form 2/(1 + x^2).
    {
        let params = ProblemParams::new(1, 0.5, 1.0, 2.0)?;
        let gs = solve_ground_state_rn(&params, 40.0, 0.05, &SolveConfig::default())?;
        let sup = gs
            .q
            .grid
            .coords
            .iter()
            .zip(&gs.q.values)
            .filter(|(x, _)| x[0].abs() <= 10.0)
            .map(|(x, &v)| (v - 2.0 / (1.0 + x[0] * x[0])).abs())
            .fold(0.0, f64::max);
        invs.push(inv("ground-state-profile", gs.converged && sup <= 0.05, sup, "target 2/(1+x^2)"));
        let e_err = (gs.energy - PI / 2.0).abs() / (PI / 2.0);
        invs.push(inv(
            "ground-state-energy",
            e_err <= 0.02,
            e_err,
            format!("computed {:.6}, target pi/2", gs.energy),
        ));
    }

    // Spectral laws at the 1D reference solve.
    {
        let params = ProblemParams::new(1, 0.5, 1.0, 2.0)?;
        let grid = interval_grid(0.02);
        let sys = OperatorSystem::assemble(grid.clone(), params.kernel()?, params.lambda);
        let res = solve_least_energy(&sys, &params, &SolveConfig::default(), &default_init(grid))?;
        let lin = assemble_linearized(&sys, &res.u, &params)?;
        let spec = eigen_solve(&lin, 4)?;
        let checks = spectral_checks(&lin, &spec, &res.u, 1e-6)?;
        invs.push(inv(
            "spectral-laws-1d",
            res.converged && checks.laws_hold,
            checks.mu1_identity_defect,
            format!(
                "mu1 = {:.6}, Morse {}, sign changes {}",
                spec.eigenvalues[0], checks.morse_index, checks.phi2_diameter_sign_changes
            ),
        ));
    }

    // Polarization inequalities on seeded random inputs; zero potential.
    {
        let params = ProblemParams::new(1, 0.5, 1.0, 2.0)?;
        let grid = interval_grid(0.1);
        let sys = OperatorSystem::assemble(grid.clone(), params.kernel()?, params.lambda);
        let zero = GridFunction::zeros(grid.clone());
        let lin = assemble_linearized(&sys, &zero, &params)?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut violations = 0usize;
        let mut worst = f64::INFINITY;
        let mut l2_defect = 0.0f64;
        for _ in 0..200 {
            let v = GridFunction::new(
                grid.clone(),
                (0..grid.n_interior()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )?;
            let pair = polarize(&v, 0)?;
            let rep = verify_polarization_inequalities(&lin, &pair)?;
            violations += rep.violations;
            worst = worst.min(rep.margin_positive.min(rep.margin_negative));
            // Value rearrangement preserves the L2 mass of each sign part.
            let part = |g: &GridFunction, sgn: f64| -> f64 {
                g.values.iter().map(|&x| (sgn * x).max(0.0).powi(2)).sum::<f64>()
            };
            l2_defect = l2_defect
                .max((part(&v, 1.0) - part(&pair.polarized, 1.0)).abs())
                .max((part(&v, -1.0) - part(&pair.polarized, -1.0)).abs());
            // Idempotence.
            let again = polarize(&pair.polarized, 0)?;
            assert_eq!(again.polarized.values, pair.polarized.values);
        }
        invs.push(inv(
            "polarization-inequalities",
            violations == 0 && l2_defect <= 1e-12,
            worst,
            format!("200 seeds, worst margin {worst:.3e}, L2 defect {l2_defect:.3e}"),
        ));

        // Off-center control: the negative-part inequality must fail for at
        // least one seeded input.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut found = false;
        for _ in 0..500 {
            let v = GridFunction::new(
                grid.clone(),
                (0..grid.n_interior()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )?;
            let pair = polarize_offset(&v, 0, 1)?;
            let rep = verify_polarization_inequalities(&lin, &pair)?;
            if rep.margin_negative < -rep.slack {
                found = true;
                break;
            }
        }
        invs.push(inv(
            "polarization-offset-control",
            found,
            if found { 1.0 } else { 0.0 },
            "off-center mirror must break the negative-part inequality",
        ));
    }

    // Boundary pairing against a fully closed-form pair.
    {
        let grid = interval_grid(1.0 / 200.0);
        let u = GridFunction::from_fn(grid.clone(), |x| (1.0 - x[0] * x[0]).max(0.0).sqrt());
        let w =
            GridFunction::from_fn(grid, |x| 2.0 * x[0] * (1.0 - x[0] * x[0]).max(0.0).sqrt());
        let (lhs, _, _) = pohozaev_pairing(&u, &w, 0.0, 0.5)?;
        let target = 2.0 * PI;
        let err = (lhs - target).abs() / target;
        invs.push(inv("pairing-closed-form", err <= 0.05, err, format!("lhs {lhs:.6}, target 2 pi")));
    }

    // Rescaling consistency at R = 4.
    {
        let params = ProblemParams::new(1, 0.5, 1.0, 2.0)?;
        let big = Arc::new(build_grid(&scale_domain(&Domain::interval(), 4.0)?, 0.1)?);
        let sys = OperatorSystem::assemble(big.clone(), params.kernel()?, params.lambda);
        let res = solve_least_energy(&sys, &params, &SolveConfig::default(), &default_init(big))?;
        let small = Arc::new(build_grid(&Domain::interval(), 0.025)?);
        let u = res.u.clone();
        let v = GridFunction::from_fn(small.clone(), move |x| u.eval(&[4.0 * x[0], 0.0]));
        let eps = 0.25; // 4^{-2s} at s = 1/2
        let sys_small = OperatorSystem::assemble(small, params.kernel()?, params.lambda);
        let rho0 = equation_residual(&sys, 1.0, params.p, &res.u);
        let rho1 = equation_residual(&sys_small, eps, params.p, &v);
        let e = sys_small.energy_form(&v, &v)?;
        let l2 = v.l2_norm();
        let lp = v.lq_norm(params.p + 1.0);
        let j_eps = 0.5 * eps * e + 0.5 * params.lambda * l2 * l2
            - lp.powf(params.p + 1.0) / (params.p + 1.0);
        let expected = res.energy / 4.0;
        let e_err = (j_eps - expected).abs() / expected.abs();
        invs.push(inv(
            "rescale-consistency",
            rho1 <= 10.0 * rho0 && e_err <= 0.01,
            rho1 / rho0,
            format!("residual ratio {:.3}, energy error {:.3e}", rho1 / rho0, e_err),
        ));
    }

    // Binary artifact round trip is bitwise exact.
    {
        let grid = interval_grid(0.1);
        let u = GridFunction::from_fn(grid, |x| (1.0 + x[0]).sin());
        let path = out.join("roundtrip.fgf");
        write_function(&path, &u)?;
        let back = read_function(&path)?;
        std::fs::remove_file(&path).ok();
        let same = back.values == u.values && back.grid.signature() == u.grid.signature();
        invs.push(inv("artifact-roundtrip", same, 0.0, "binary write/read"));
    }

    // Repeating a solve reproduces every byte of the result.
    {
        let params = ProblemParams::new(1, 0.5, 1.0, 2.0)?;
        let grid = interval_grid(0.05);
        let sys = OperatorSystem::assemble(grid.clone(), params.kernel()?, params.lambda);
        let a = solve_least_energy(&sys, &params, &SolveConfig::default(), &default_init(grid.clone()))?;
        let b = solve_least_energy(&sys, &params, &SolveConfig::default(), &default_init(grid))?;
        let same = a.u.values == b.u.values && a.energy.to_bits() == b.energy.to_bits();
        invs.push(inv("solve-determinism", same, 0.0, "identical reruns"));
    }

    let all_pass = invs.iter().all(|i| i.pass);
    for i in &invs {
        println!(
            "{}: {} (margin {:.3e}; {})",
            i.name,
            if i.pass { "PASS" } else { "FAIL" },
            i.margin,
            i.detail
        );
    }
    write_json(&out.join("verify.json"), &VerifyReport { invariants: invs, all_pass })?;
    Ok(if all_pass { 0 } else { 3 })
}
