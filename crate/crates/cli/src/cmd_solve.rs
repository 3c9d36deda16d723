//! `solve`: one least-energy solve with artifacts.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use fracground::io::{write_csv, write_function};
use fracground::{default_init, solve_least_energy};

use crate::config::RunConfig;
use crate::tasks::{setup, solve_cfg, write_json};

#[derive(Serialize)]
struct SolveReport {
    dim: usize,
    s: f64,
    lambda: f64,
    p: f64,
    kind: String,
    r: f64,
    h: f64,
    nodes: usize,
    energy: f64,
    norm_sq: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
    positivity_ok: bool,
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let st = setup(cfg, cfg.r)?;
    let res = solve_least_energy(&st.sys, &st.params, &solve_cfg(cfg), &default_init(st.grid.clone()))?;

    write_function(&out.join("u.fgf"), &res.u)?;
    write_csv(&out.join("u.csv"), &res.u)?;
    write_json(
        &out.join("solve.json"),
        &SolveReport {
            dim: cfg.dim,
            s: cfg.s,
            lambda: cfg.lambda,
            p: cfg.p,
            kind: st.grid.domain.kind.name().to_string(),
            r: cfg.r,
            h: cfg.h,
            nodes: st.grid.n_interior(),
            energy: res.energy,
            norm_sq: res.norm_sq,
            residual: res.residual,
            iterations: res.iterations,
            converged: res.converged,
            positivity_ok: res.positivity_ok,
        },
    )?;
    if !res.converged {
        eprintln!(
            "solve did not converge: residual {:.3e} after {} iterations (artifacts written)",
            res.residual, res.iterations
        );
        return Ok(2);
    }
    println!(
        "solved: {} nodes, energy {:.12}, residual {:.3e}, {} iterations",
        st.grid.n_interior(),
        res.energy,
        res.residual,
        res.iterations
    );
    Ok(0)
}
