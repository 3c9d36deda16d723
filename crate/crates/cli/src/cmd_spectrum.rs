//! `spectrum`: linearized eigenpairs at the computed solution.

use std::io::Write;
use std::path::Path;

use anyhow::Result;

use fracground::io::write_function;
use fracground::{assemble_linearized, default_init, eigen_solve, solve_least_energy};

use crate::config::RunConfig;
use crate::tasks::{setup, solve_cfg, spectral_checks, write_json};

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

    let lin = assemble_linearized(&st.sys, &res.u, &st.params)?;
    let spec = eigen_solve(&lin, cfg.k)?;
    let checks = spectral_checks(&lin, &spec, &res.u, cfg.tol_zero)?;

    let mut csv = std::fs::File::create(out.join("spectrum.csv"))?;
    writeln!(csv, "i,mu_i")?;
    for (i, mu) in spec.eigenvalues.iter().enumerate() {
        writeln!(csv, "{},{}", i + 1, mu)?;
    }
    write_function(&out.join("phi1.fgf"), &spec.eigenvectors[0])?;
    write_function(&out.join("phi2.fgf"), &spec.eigenvectors[1])?;
    write_json(&out.join("morse.json"), &checks)?;

    println!(
        "spectrum: mu1 = {:.9}, mu2 = {:.9}, Morse index {}, degenerate: {}",
        spec.eigenvalues[0], spec.eigenvalues[1], checks.morse_index, checks.degenerate
    );
    Ok(if checks.laws_hold { 0 } else { 2 })
}
