//! `simulate run`: one trajectory and its artifacts.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ksflux::diagnostics::blowup_constants;
use ksflux::integrator::{frame_exponents, run_simulation_observed, RunResult, VerdictKind};
use ksflux::RadialGrid;

use crate::artifacts::{self, RunRecord, SnapshotWriter, VERDICT_NOTE};
use crate::config::RunConfig;

/// Process exit code for a finished run.
pub fn exit_code(kind: VerdictKind) -> u8 {
    match kind {
        VerdictKind::Bounded | VerdictKind::BlowUp => 0,
        VerdictKind::Undecided => 2,
    }
}

/// Runs `config` without writing anything.
pub fn simulate(config: &RunConfig) -> Result<RunResult> {
    let grid = RadialGrid::new(config.params.n, config.params.radius, config.cells)?;
    Ok(run_simulation_observed(
        &config.params,
        &grid,
        &config.control,
        |_, _| {},
    )?)
}

/// Prepares `out`, refusing an existing directory when `no_clobber` is set.
pub fn prepare_out_dir(out: &Path, no_clobber: bool) -> Result<()> {
    if out.exists() {
        if no_clobber {
            bail!("{} already exists and --no-clobber was given", out.display());
        }
        if !out.is_dir() {
            bail!("{} exists and is not a directory", out.display());
        }
    }
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

/// Runs `config` and writes `timeseries.csv`, `snapshots.csv` and `run.json` into `out`.
pub fn cmd_run(config: &RunConfig, out: &Path, no_clobber: bool) -> Result<RunRecord> {
    config.validate()?;
    prepare_out_dir(out, no_clobber)?;
    let grid = RadialGrid::new(config.params.n, config.params.radius, config.cells)?;
    let mut snapshots = SnapshotWriter::create(&out.join(artifacts::SNAPSHOTS))?;
    let mut frame = 0usize;
    let mut pending = None;
    let mut write_error = None;
    let started = Instant::now();
    let result = run_simulation_observed(&config.params, &grid, &config.control, |_, fields| {
        if frame.is_multiple_of(config.snapshot_every) {
            if let Err(e) = snapshots.write(&grid, frame, fields) {
                write_error.get_or_insert(e);
            }
            pending = None;
        } else {
            pending = Some((frame, fields.clone()));
        }
        frame += 1;
    })?;
    let wall_seconds = started.elapsed().as_secs_f64();
    if let Some((k, fields)) = pending {
        snapshots.write(&grid, k, &fields)?;
    }
    if let Some(e) = write_error {
        return Err(e);
    }
    snapshots.finish()?;
    artifacts::write_timeseries(&out.join(artifacts::TIMESERIES), &result.frames)?;

    let record = run_record(config, &grid, &result, wall_seconds);
    artifacts::write_run_json(&out.join(artifacts::RUN_JSON), &record)?;
    Ok(record)
}

pub fn run_record(config: &RunConfig, grid: &RadialGrid, result: &RunResult, wall_seconds: f64) -> RunRecord {
    let (constants, constants_error) = match frame_exponents(&config.params) {
        Some(exps) => match blowup_constants(&config.params, &exps, result.initial_mass, result.frames[0].phi) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => (None, None),
    };
    RunRecord {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        config_text: config.emit(),
        verdict: result.verdict,
        verdict_note: VERDICT_NOTE.to_string(),
        t_detect: result.verdict.t_detect,
        peak_linf: result.verdict.peak_linf,
        stop: result.stop,
        note: result.note.clone(),
        steps: result.steps,
        floor_hits: result.floor_hits,
        u_cap: result.u_cap,
        dt_min: config.control.resolved_dt_min(grid),
        initial_mass: result.initial_mass,
        final_t: result.frames.last().map_or(0.0, |f| f.t),
        frames: result.frames.len(),
        wall_seconds,
        constants,
        constants_error,
    }
}
