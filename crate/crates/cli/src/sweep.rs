//! `simulate sweep`: verdicts over an `(α, M)` grid and bisection of the
//! empirical `M` threshold for each `α`.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ksflux::diagnostics::DiagRecord;
use ksflux::integrator::VerdictKind;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::run::simulate;

pub const MAX_BISECTIONS: usize = 12;

/// `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, k] = parts[..] else {
            return Err(format!("expected START:STOP:COUNT, got {s:?}"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        let range = Range {
            start: num(a)?,
            stop: num(b)?,
            count: k.trim().parse().map_err(|e| format!("{k:?}: {e}"))?,
        };
        if range.count == 0 || !range.start.is_finite() || !range.stop.is_finite() {
            return Err(format!("range needs finite ends and count >= 1, got {s:?}"));
        }
        Ok(range)
    }
}

impl Range {
    pub fn points(&self, log: bool) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let (a, b) = if log {
            (self.start.ln(), self.stop.ln())
        } else {
            (self.start, self.stop)
        };
        (0..self.count)
            .map(|i| {
                let x = a + (b - a) * i as f64 / (self.count - 1) as f64;
                if i + 1 == self.count {
                    self.stop
                } else if log {
                    x.exp()
                } else {
                    x
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub alpha: Range,
    pub m: Range,
    pub log_m: bool,
    pub base: RunConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.log_m && (self.m.start <= 0.0 || self.m.stop <= 0.0) {
            bail!("--log-m needs a positive M range");
        }
        Ok(())
    }

    /// Grid points in `phase.csv` order: alpha-major, `M` ascending within a row as given.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let ms = self.m.points(self.log_m);
        self.alpha
            .points(false)
            .into_iter()
            .flat_map(|a| ms.iter().map(move |&m| (a, m)))
            .collect()
    }
}

/// Verdict label: a [`VerdictKind`] or `Error`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Verdict(VerdictKind),
    Error,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Verdict(k) => k.fmt(f),
            Outcome::Error => f.write_str("Error"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(serialize_with = "as_display")]
    pub verdict: Outcome,
    /// `t_detect` for `BlowUp`, otherwise the last frame time (NaN on error).
    pub t_detect_or_t_end: f64,
    pub peak_linf: f64,
    /// Frame history of the run, kept for auditing and not written to `phase.csv`.
    #[serde(skip)]
    pub frames: Vec<DiagRecord>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

fn as_display<S: serde::Serializer>(o: &Outcome, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(o)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub alpha: f64,
    /// Largest `M` seen `Bounded` below the bracket.
    pub m_lo: f64,
    /// Smallest `M` seen `BlowUp` above `m_lo`.
    pub m_hi: f64,
    pub bisections: usize,
    /// No `BlowUp` below a `Bounded` in the grid row.
    pub monotone: bool,
    pub status: String,
    /// Bisection runs in order.
    #[serde(skip)]
    pub probes: Vec<PhaseRow>,
}

pub fn run_point(base: &RunConfig, alpha: f64, m: f64) -> PhaseRow {
    let mut config = base.clone();
    config.params.alpha = alpha;
    config.params.boundary_signal = m;
    let started = Instant::now();
    let result = simulate(&config);
    let wall_seconds = started.elapsed().as_secs_f64();
    match result {
        Ok(r) => PhaseRow {
            alpha,
            m,
            verdict: Outcome::Verdict(r.verdict.kind),
            t_detect_or_t_end: r
                .verdict
                .t_detect
                .unwrap_or_else(|| r.frames.last().map_or(0.0, |f| f.t)),
            peak_linf: r.verdict.peak_linf,
            frames: r.frames,
            wall_seconds,
        },
        Err(_) => PhaseRow {
            alpha,
            m,
            verdict: Outcome::Error,
            t_detect_or_t_end: f64::NAN,
            peak_linf: f64::NAN,
            frames: Vec::new(),
            wall_seconds,
        },
    }
}

/// Whether no `BlowUp` lies below a `Bounded` when `row` is sorted by `M`.
pub fn is_monotone(row: &[PhaseRow]) -> bool {
    let mut sorted: Vec<&PhaseRow> = row.iter().collect();
    sorted.sort_by(|a, b| a.m.total_cmp(&b.m));
    let first_blowup = sorted
        .iter()
        .position(|r| r.verdict == Outcome::Verdict(VerdictKind::BlowUp));
    let last_bounded = sorted
        .iter()
        .rposition(|r| r.verdict == Outcome::Verdict(VerdictKind::Bounded));
    match (first_blowup, last_bounded) {
        (Some(b), Some(s)) => b > s,
        _ => true,
    }
}

/// Refines the lowest `Bounded → BlowUp` transition of one `α` row by bisection.
pub fn refine_threshold(spec: &SweepSpec, row: &[PhaseRow]) -> Option<ThresholdRow> {
    let mut sorted: Vec<&PhaseRow> = row.iter().collect();
    sorted.sort_by(|a, b| a.m.total_cmp(&b.m));
    let bounded = Outcome::Verdict(VerdictKind::Bounded);
    let blowup = Outcome::Verdict(VerdictKind::BlowUp);
    let hi_index = sorted
        .iter()
        .enumerate()
        .position(|(k, r)| r.verdict == blowup && sorted[..k].iter().any(|s| s.verdict == bounded))?;
    let lo_index = sorted[..hi_index].iter().rposition(|r| r.verdict == bounded)?;
    let alpha = row[0].alpha;
    let (mut lo, mut hi) = (sorted[lo_index].m, sorted[hi_index].m);
    let mut status = "converged".to_string();
    let mut steps = 0;
    let mut probes = Vec::new();
    while steps < MAX_BISECTIONS {
        let mid = if spec.log_m { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        steps += 1;
        let point = run_point(&spec.base, alpha, mid);
        let verdict = point.verdict;
        probes.push(point);
        match verdict {
            v if v == blowup => hi = mid,
            v if v == bounded => lo = mid,
            other => {
                status = format!("stopped: {other} at M = {mid}");
                break;
            }
        }
    }
    Some(ThresholdRow {
        alpha,
        m_lo: lo,
        m_hi: hi,
        bisections: steps,
        monotone: is_monotone(row),
        status,
        probes,
    })
}

/// Worker count from `SIM_THREADS`, or rayon's default when unset.
pub fn worker_count() -> Result<usize> {
    match std::env::var("SIM_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => bail!("SIM_THREADS must be a positive integer, got {s:?}"),
        },
        Err(_) => Ok(0),
    }
}

pub struct SweepOutput {
    pub phase: Vec<PhaseRow>,
    pub thresholds: Vec<ThresholdRow>,
}

/// Evaluates the grid on `threads` workers (0 for the default) and bisects each row.
pub fn sweep(spec: &SweepSpec, threads: usize) -> Result<SweepOutput> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let points = spec.points();
    let phase: Vec<PhaseRow> = pool.install(|| points.par_iter().map(|&(a, m)| run_point(&spec.base, a, m)).collect());
    let per_row = spec.m.count;
    let thresholds: Vec<ThresholdRow> = pool.install(|| {
        phase
            .par_chunks(per_row)
            .filter_map(|row| refine_threshold(spec, row))
            .collect()
    });
    Ok(SweepOutput { phase, thresholds })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(!rows.is_empty())
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const PHASE_HEADER: &[&str] = &["alpha", "M", "verdict", "t_detect_or_t_end", "peak_linf"];
pub const THRESHOLD_HEADER: &[&str] = &["alpha", "m_lo", "m_hi", "bisections", "monotone", "status"];

/// Runs the sweep and writes `phase.csv` and `threshold.csv` into `out`.
pub fn cmd_sweep(spec: &SweepSpec, out: &Path, threads: usize) -> Result<SweepOutput> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let result = sweep(spec, threads)?;
    write_csv(&out.join("phase.csv"), &result.phase, PHASE_HEADER)?;
    write_csv(&out.join("threshold.csv"), &result.thresholds, THRESHOLD_HEADER)?;
    Ok(result)
}
