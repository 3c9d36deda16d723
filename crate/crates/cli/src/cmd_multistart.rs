//! `multistart`: uniqueness probe from independent random initializations.

use std::path::Path;

use anyhow::{bail, Result};

use crate::config::RunConfig;
use crate::tasks::{factor, multistart, setup, solve_cfg, write_json};

pub fn run(cfg: &RunConfig, out: &Path) -> Result<i32> {
    if cfg.n_seeds < 2 {
        bail!("multistart needs n_seeds >= 2, got {}", cfg.n_seeds);
    }
    let st = setup(cfg, cfg.r)?;
    let fac = factor(&st.sys, &st.params)?;
    let seeds: Vec<u64> = (0..cfg.n_seeds as u64).map(|i| cfg.seed + i).collect();
    let (outcome, _) = multistart(&fac, &st.sys, &st.params, &solve_cfg(cfg), &seeds)?;

    write_json(&out.join("multistart.json"), &outcome)?;
    println!(
        "multistart: {} seeds, max pairwise distance {:.3e}, energy spread {:.3e}, unique: {}",
        outcome.seeds.len(),
        outcome.max_pairwise_distance,
        outcome.energy_spread,
        outcome.unique
    );
    Ok(if outcome.all_converged { 0 } else { 2 })
}
