//! `simulate verify`: replays a run directory through the invariant suite
//! and, for `α < 0`, `τ = 0`, `n = 2`, through the blow-up inequalities.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ksflux::diagnostics::{
    check_holder_chain, check_lower_bounds, field_norms, mass_distribution, phi_growth_check, BlowupConstants,
    DiagRecord, MassDistribution,
};
use ksflux::model::Tau;
use ksflux::RadialGrid;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, RunRecord, Snapshot};

pub const REPORT_JSON: &str = "report.json";

/// Relative mass drift allowed over a trajectory.
pub const MASS_TOL: f64 = 1e-10;
/// Absolute slack of the signal maximum principle.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-12;
/// Relative slack of `∫|∇v|² ≤ M² m`.
pub const GRADIENT_ENERGY_TOL: f64 = 1e-6;
/// Relative slack of the Hölder sub-checks.
pub const HOLDER_SLACK: f64 = 1e-6;
/// Lower-bound margins may dip this far below zero, relative to `M (1 + m/2π)`.
pub const LOWER_BOUND_ROUNDOFF: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub group: String,
    pub status: Status,
    /// Advisory checks are reported but do not decide the overall result.
    pub required: bool,
    /// Signed slack, positive when the check holds; absent when skipped.
    pub margin: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub run: String,
    pub verdict: String,
    pub frames: usize,
    pub snapshot_frames: usize,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Builder {
    checks: Vec<Check>,
    group: &'static str,
}

impl Builder {
    fn push(&mut self, name: &str, pass: bool, margin: f64, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            group: self.group.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            required: true,
            margin: margin.is_finite().then_some(margin),
            detail,
        });
    }

    fn advisory(&mut self, name: &str, pass: bool, margin: f64, detail: String) {
        self.push(name, pass, margin, detail);
        self.checks.last_mut().unwrap().required = false;
    }

    fn skip(&mut self, name: &str, reason: &str) {
        self.checks.push(Check {
            name: name.into(),
            group: self.group.into(),
            status: Status::Skipped,
            required: true,
            margin: None,
            detail: reason.into(),
        });
    }
}

/// Largest value of `f` over frames, with the frame time.
fn worst(frames: &[DiagRecord], f: impl Fn(&DiagRecord) -> f64) -> (f64, f64) {
    frames.iter().map(|r| (f(r), r.t)).fold(
        (f64::NEG_INFINITY, 0.0),
        |a, b| if b.0 > a.0 || b.0.is_nan() { b } else { a },
    )
}

fn invariant_checks(b: &mut Builder, record: &RunRecord, grid: &RadialGrid, frames: &[DiagRecord], snaps: &[Snapshot]) {
    let params = &record.config.params;
    let m = params.boundary_signal;
    let mass0 = frames[0].mass;

    let (drift, at) = worst(frames, |r| ((r.mass - mass0) / mass0).abs());
    b.push(
        "mass conservation",
        drift <= MASS_TOL,
        MASS_TOL - drift,
        format!("max relative drift {drift:.3e} at t = {at:e}"),
    );

    let (neg, at) = worst(frames, |r| -r.min_u);
    b.push(
        "nonnegativity",
        neg <= 0.0,
        -neg,
        format!("min u = {:.3e} at t = {at:e}", -neg),
    );

    let top = match params.tau {
        Tau::Elliptic => m,
        Tau::Parabolic => frames[0].linf_v.max(m),
    };
    let (vmax, at) = worst(frames, |r| r.linf_v);
    b.push(
        "signal maximum principle",
        vmax <= top + MAX_PRINCIPLE_TOL,
        top + MAX_PRINCIPLE_TOL - vmax,
        format!("max v = {vmax:.17e} against {top:e} at t = {at:e}"),
    );

    if params.tau == Tau::Elliptic {
        let bound = m * m * mass0;
        let (energy, at) = worst(frames, |r| r.grad_l2_v);
        b.push(
            "gradient energy bound",
            energy <= bound * (1.0 + GRADIENT_ENERGY_TOL),
            bound - energy,
            format!("max ∫|∇v|² = {energy:.6e} against M² m = {bound:.6e} at t = {at:e}"),
        );
    } else {
        b.skip("gradient energy bound", "tau = 1");
    }

    // snapshots must agree with the time series they claim to sample
    let mut worst_rel = 0.0f64;
    let mut detail = format!("{} snapshot frames match the time series", snaps.len());
    for (k, f) in snaps {
        let norms = field_norms(grid, f);
        let row = &frames[*k];
        for (name, a, b) in [
            ("mass", norms.mass, row.mass),
            ("linf_u", norms.linf_u, row.linf_u),
            ("linf_v", norms.linf_v, row.linf_v),
        ] {
            let rel = (a - b).abs() / b.abs().max(1e-300);
            if rel > worst_rel {
                worst_rel = rel;
                detail = format!("frame {k}: {name} {a:e} in snapshots, {b:e} in time series");
            }
        }
    }
    b.push("snapshot consistency", worst_rel <= 1e-12, 1e-12 - worst_rel, detail);
}

const BLOWUP_CHECKS: &[&str] = &[
    "w endpoints",
    "lower bound r v_r",
    "lower bound v",
    "holder (i)",
    "holder (ii)",
    "holder (iii)",
    "holder (iv)",
    "phi' lower bound (v)",
    "phi nondecreasing",
    "phi exponential growth",
    "blow-up time bound",
];

fn blowup_checks(
    b: &mut Builder,
    record: &RunRecord,
    grid: &RadialGrid,
    frames: &[DiagRecord],
    snaps: &[Snapshot],
) -> Result<()> {
    let params = &record.config.params;
    let gate = if params.alpha >= 0.0 {
        Some("α ≥ 0")
    } else if params.tau != Tau::Elliptic {
        Some("tau = 1")
    } else if params.n != 2 {
        Some("n ≠ 2")
    } else {
        None
    };
    let consts: BlowupConstants = match (gate, record.constants) {
        (Some(reason), _) => {
            BLOWUP_CHECKS.iter().for_each(|name| b.skip(name, reason));
            return Ok(());
        }
        (None, Some(c)) => c,
        (None, None) => {
            let reason = record
                .constants_error
                .clone()
                .unwrap_or_else(|| "no constants in run.json".into());
            BLOWUP_CHECKS
                .iter()
                .for_each(|name| b.skip(name, &format!("constants unavailable: {reason}")));
            return Ok(());
        }
    };
    let m = params.boundary_signal;
    let mass = frames[0].mass;
    let dists: Vec<MassDistribution> = snaps
        .iter()
        .map(|(_, f)| mass_distribution(grid, &f.u))
        .collect::<Result<_, _>>()?;

    let mut endpoint = 0.0f64;
    for (md, (k, _)) in dists.iter().zip(snaps) {
        let top = frames[*k].mass / (2.0 * PI);
        endpoint = endpoint
            .max(md.w[0].abs() / top)
            .max((md.w.last().unwrap() - top).abs() / top);
    }
    b.push(
        "w endpoints",
        endpoint <= 1e-12,
        1e-12 - endpoint,
        format!("max relative endpoint error {endpoint:.3e}"),
    );

    let tol = LOWER_BOUND_ROUNDOFF * m * (1.0 + mass / (2.0 * PI));
    let (mut grad, mut sig) = ((f64::INFINITY, 0.0, 0.0), (f64::INFINITY, 0.0, 0.0));
    for (k, f) in snaps {
        let lb = check_lower_bounds(grid, f, mass, params)?;
        if lb.gradient < grad.0 {
            grad = (lb.gradient, lb.gradient_at, frames[*k].t);
        }
        if lb.signal < sig.0 {
            sig = (lb.signal, lb.signal_at, frames[*k].t);
        }
    }
    for (name, (margin, r, t)) in [("lower bound r v_r", grad), ("lower bound v", sig)] {
        b.push(
            name,
            margin >= -tol,
            margin + tol,
            format!("min margin {margin:.3e} at r = {r:.4}, t = {t:e}; round-off allowance {tol:.1e}"),
        );
    }

    let mut holder = [(f64::INFINITY, 0.0); 4];
    let (mut v_worst, mut v_fail, mut v_pairs) = ((f64::INFINITY, 0.0), 0usize, 0usize);
    for (i, md) in dists.iter().enumerate() {
        let (k, f) = &snaps[i];
        let next = snaps
            .get(i + 1)
            .filter(|(k2, _)| *k2 == k + 1)
            .map(|(_, g)| (&dists[i + 1], g.t - f.t));
        let report = check_holder_chain(md, &consts, next, m, HOLDER_SLACK)?;
        for (slot, c) in holder.iter_mut().zip(&report.checks) {
            let rel = c.margin / c.lhs.abs().max(c.rhs.abs()).max(1e-300);
            if rel < slot.0 {
                *slot = (rel, f.t);
            }
        }
        if let Some(c) = report.checks.get(4) {
            v_pairs += 1;
            v_fail += usize::from(!c.pass);
            let rel = c.margin / c.lhs.abs().max(c.rhs.abs()).max(1e-300);
            if rel < v_worst.0 {
                v_worst = (rel, f.t);
            }
        }
    }
    for (name, (rel, t)) in ["holder (i)", "holder (ii)", "holder (iii)", "holder (iv)"]
        .iter()
        .zip(holder)
    {
        b.push(
            name,
            rel >= -HOLDER_SLACK,
            rel,
            format!("min relative margin {rel:.3e} at t = {t:e}"),
        );
    }
    if v_pairs == 0 {
        b.skip(
            "phi' lower bound (v)",
            "needs consecutive snapshot frames (snapshot_every = 1)",
        );
    } else {
        b.advisory(
            "phi' lower bound (v)",
            v_fail == 0,
            v_worst.0,
            format!(
                "{v_fail} of {v_pairs} frame pairs below the bound; worst relative margin {:.3e} at t = {:e}",
                v_worst.0, v_worst.1
            ),
        );
    }

    if m < consts.mstar {
        for name in ["phi nondecreasing", "phi exponential growth", "blow-up time bound"] {
            b.skip(name, &format!("M = {m:e} below Mstar = {:.6e}", consts.mstar));
        }
        return Ok(());
    }
    let history: Vec<(f64, f64)> = frames.iter().map(|r| (r.t, r.phi)).collect();
    let growth = phi_growth_check(&history, &consts, m, params.radius, record.t_detect, 0.0);
    let drop = history
        .windows(2)
        .map(|w| (w[0].1 - w[1].1) / w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    b.push(
        "phi nondecreasing",
        growth.nondecreasing,
        -drop,
        format!("largest relative frame-to-frame drop {drop:.3e}"),
    );
    b.advisory(
        "phi exponential growth",
        growth.exponential_ok,
        growth.growth_ratio - 1.0,
        format!("min φ/(φ₀ exp(C45 t)) = {:.6}", growth.growth_ratio),
    );
    let t_detect = growth.t_detect.unwrap_or(f64::NAN);
    b.push(
        "blow-up time bound",
        growth.time_bound_ok,
        growth.tmax_bound - t_detect,
        format!("t_detect = {t_detect:e}, bound = {:e}", growth.tmax_bound),
    );
    Ok(())
}

/// Builds the report for the artifacts in `dir` without writing anything.
pub fn verify_dir(dir: &Path) -> Result<Report> {
    let record = artifacts::read_run_json(&dir.join(artifacts::RUN_JSON))?;
    let frames = artifacts::read_timeseries(&dir.join(artifacts::TIMESERIES))?;
    let params = &record.config.params;
    let grid = RadialGrid::new(params.n, params.radius, record.config.cells)?;
    let times: Vec<f64> = frames.iter().map(|f| f.t).collect();
    let snaps = artifacts::read_snapshots(&dir.join(artifacts::SNAPSHOTS), grid.cells(), &times)?;
    if snaps.is_empty() {
        bail!("{} holds no frames", artifacts::SNAPSHOTS);
    }

    let mut b = Builder {
        checks: Vec::new(),
        group: "invariant",
    };
    invariant_checks(&mut b, &record, &grid, &frames, &snaps);
    b.group = "blowup";
    blowup_checks(&mut b, &record, &grid, &frames, &snaps)?;
    let pass = b.checks.iter().all(|c| !c.required || c.status != Status::Fail);
    Ok(Report {
        run: dir.display().to_string(),
        verdict: record.verdict.kind.to_string(),
        frames: frames.len(),
        snapshot_frames: snaps.len(),
        checks: b.checks,
        pass,
    })
}

/// Verifies `dir` and writes `report.json` next to the artifacts.
pub fn cmd_verify(dir: &Path) -> Result<Report> {
    if !dir.is_dir() {
        bail!("{} is not a run directory", dir.display());
    }
    let report = verify_dir(dir)?;
    let path = dir.join(REPORT_JSON);
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    Ok(report)
}
