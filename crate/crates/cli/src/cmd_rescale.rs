//! `rescale`: transfer of the large-domain solution to the unit domain.
//!
//! Solves on the scaled domain `R * D`, then maps `v(x) := u_R(R x)` onto
//! `D`. With `eps = R^{-2s}`, `v` solves the scaled equation
//! `eps (-Delta)^s v + lambda v = v^p`; both residuals and the energy
//! identity `J_eps(v) = R^{-N} J(u_R)` are evaluated.

use std::path::Path;
use std::sync::Arc;

use anyhow::Result;
use serde::Serialize;

use fracground::grid::build_grid;
use fracground::io::write_function;
use fracground::{default_init, solve_least_energy, Error, GridFunction, OperatorSystem};

use crate::config::RunConfig;
use crate::tasks::{base_domain, equation_residual, setup, solve_cfg, write_json};

#[derive(Serialize)]
struct RescaleReport {
    r: f64,
    s: f64,
    epsilon: f64,
    h_source: f64,
    h_target: f64,
    residual_original: f64,
    residual_rescaled: f64,
    residual_ratio: f64,
    energy_original: f64,
    energy_rescaled: f64,
    energy_expected: f64,
    energy_rel_err: f64,
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let st = setup(cfg, cfg.r)?;
    let res = solve_least_energy(&st.sys, &st.params, &solve_cfg(cfg), &default_init(st.grid.clone()))?;
    if !res.converged {
        eprintln!(
            "solve did not converge: residual {:.3e} after {} iterations",
            res.residual, res.iterations
        );
        return Ok(2);
    }

    let h_exact = cfg.h / cfg.r;
    let h_target = cfg.h_target.unwrap_or(h_exact);
    if h_target < h_exact * (1.0 - 1e-12) {
        return Err(Error::GridTransfer.into());
    }

    let target_grid = Arc::new(build_grid(&base_domain(cfg)?, h_target)?);
    let r = cfg.r;
    let u = res.u.clone();
    let v = GridFunction::from_fn(target_grid.clone(), move |x| {
        let mut y = [0.0; 2];
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = r * xi;
        }
        u.eval(&y[..x.len()])
    });

    let eps = cfg.r.powf(-2.0 * cfg.s);
    let sys_target =
        OperatorSystem::assemble(target_grid.clone(), st.params.kernel()?, st.params.lambda);

    let residual_original = equation_residual(&st.sys, 1.0, cfg.p, &res.u);
    let residual_rescaled = equation_residual(&sys_target, eps, cfg.p, &v);

    let e_v = sys_target.energy_form(&v, &v)?;
    let l2 = v.l2_norm();
    let lp = v.lq_norm(cfg.p + 1.0);
    let energy_rescaled = 0.5 * eps * e_v + 0.5 * cfg.lambda * l2 * l2
        - lp.powf(cfg.p + 1.0) / (cfg.p + 1.0);
    let energy_expected = cfg.r.powi(-(cfg.dim as i32)) * res.energy;
    let energy_rel_err = (energy_rescaled - energy_expected).abs() / energy_expected.abs();

    write_function(&out.join("v.fgf"), &v)?;
    let report = RescaleReport {
        r: cfg.r,
        s: cfg.s,
        epsilon: eps,
        h_source: cfg.h,
        h_target,
        residual_original,
        residual_rescaled,
        residual_ratio: residual_rescaled / residual_original,
        energy_original: res.energy,
        energy_rescaled,
        energy_expected,
        energy_rel_err,
    };
    write_json(&out.join("rescale.json"), &report)?;
    println!(
        "rescale: eps = {:.6e}, residual ratio {:.3}, energy relative error {:.3e}",
        eps, report.residual_ratio, energy_rel_err
    );
    Ok(0)
}
