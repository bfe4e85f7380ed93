//! `simulate convergence`: refinement study of a configuration.

use std::path::Path;

use anyhow::{bail, Result};
use ksflux::convergence::{convergence_study, ConvergenceRow};

use crate::config::RunConfig;
use crate::sweep::write_csv;

pub const CONVERGENCE_CSV: &str = "convergence.csv";

const HEADER: &[&str] = &[
    "cells",
    "bessel_error",
    "bessel_order",
    "gradient_error",
    "gradient_order",
    "w_residual",
    "w_order",
    "self_difference",
];

/// Runs the study at `N, 2N, …` and writes `convergence.csv` into `out`.
pub fn cmd_convergence(config: &RunConfig, levels: usize, out: &Path) -> Result<Vec<ConvergenceRow>> {
    if levels < 3 {
        bail!("a convergence study needs at least 3 levels, got {levels}");
    }
    config.validate()?;
    let rows = convergence_study(&config.params, &config.control, config.cells, levels)?;
    std::fs::create_dir_all(out)?;
    write_csv(&out.join(CONVERGENCE_CSV), &rows, HEADER)?;
    Ok(rows)
}
