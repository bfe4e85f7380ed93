//! Coupled time stepping, adaptive step selection and blow-up verdicts.

use serde::{Deserialize, Serialize};

use crate::cells::{self, FaceRates, FaceVelocity, TransportCoeffs};
use crate::diagnostics::{self, DiagRecord, Exponents};
use crate::error::{Error, Result};
use crate::model::{init_fields, Fields, Params, RadialGrid, SensitivityFn, Tau};
use crate::signal::{self, SignalWorkspace};

/// Time discretisation of the cell equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Forward Euler; `dt` bounded by the positivity limit over every occupied cell.
    Explicit,
    /// `dt` bounded by the positivity limit over cells holding a
    /// non-negligible density only. Steps within the limit over all cells are
    /// taken explicitly, longer ones by backward Euler with frozen drift.
    Implicit,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Explicit => "explicit",
            Scheme::Implicit => "implicit",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Scheme::Explicit),
            "implicit" => Ok(Scheme::Implicit),
            other => Err(Error::Config(format!(
                "unknown scheme {other:?}; expected explicit or implicit"
            ))),
        }
    }
}

/// Ratio of the automatic `dt_min` to the pure-diffusion step of the grid.
pub const AUTO_DT_MIN_RATIO: f64 = 1e-3;

/// Step-size policy, horizon and blow-up threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// Safety factor applied to the positivity limit, in `(0, 1]`.
    pub cfl: f64,
    /// Collapse scale: steps below it count as floor hits, and a blow-up
    /// verdict requires the detecting step to be at most `10 · dt_min`.
    /// `None` resolves to [`StepControl::auto_dt_min`].
    pub dt_min: Option<f64>,
    pub dt_max: f64,
    /// Density threshold; `None` resolves to [`StepControl::auto_u_cap`].
    pub u_cap: Option<f64>,
    pub t_end: f64,
    /// Frame cadence in time.
    pub record_every: f64,
    /// Additional frame whenever `‖u‖∞` moved by this relative amount since the last frame.
    pub record_growth: f64,
    /// Consecutive floor hits after which the run stops.
    pub floor_patience: u64,
    pub max_steps: u64,
    pub scheme: Scheme,
    /// With [`Scheme::Implicit`], cells below `cutoff · ‖u‖∞` do not limit `dt`.
    pub cutoff: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            cfl: 0.45,
            dt_min: None,
            dt_max: 1e-2,
            u_cap: None,
            t_end: 1.0,
            record_every: 1e-2,
            record_growth: 0.02,
            floor_patience: 2_000_000,
            max_steps: 20_000_000,
            scheme: Scheme::Implicit,
            cutoff: 1e-6,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("cfl must lie in (0, 1]");
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return bad("dt_max must be positive and finite");
        }
        if let Some(dt_min) = self.dt_min {
            if !(dt_min > 0.0 && dt_min < self.dt_max) {
                return bad("need 0 < dt_min < dt_max");
            }
        }
        if let Some(cap) = self.u_cap {
            if !(cap > 0.0) {
                return bad("u_cap must be positive");
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive and finite");
        }
        if !(self.record_every > 0.0) {
            return bad("record_every must be positive");
        }
        if !(self.record_growth > 0.0) {
            return bad("record_growth must be positive");
        }
        if !(0.0..1.0).contains(&self.cutoff) {
            return bad("cutoff must lie in [0, 1)");
        }
        Ok(())
    }

    /// `min(10⁸ · m/|Ω|, m / (2 V₀))`: eight decades above the mean density,
    /// capped at half the total mass sitting in the innermost cell, which is
    /// the largest density the grid can represent up to a factor two.
    pub fn auto_u_cap(grid: &RadialGrid, mass: f64) -> f64 {
        let mean = mass / grid.total_volume();
        (1e8 * mean).min(0.5 * mass / grid.vols[0])
    }

    pub fn resolved_u_cap(&self, grid: &RadialGrid, mass: f64) -> f64 {
        self.u_cap.unwrap_or_else(|| Self::auto_u_cap(grid, mass))
    }

    /// [`AUTO_DT_MIN_RATIO`] times the pure-diffusion step `cfl · min_i V_i h / Σ A`.
    pub fn auto_dt_min(&self, grid: &RadialGrid) -> f64 {
        let still = FaceVelocity::zeros(grid.cells() + 1);
        AUTO_DT_MIN_RATIO * self.cfl * cells::positivity_limit(grid, &still, None)
    }

    pub fn resolved_dt_min(&self, grid: &RadialGrid) -> f64 {
        self.dt_min.unwrap_or_else(|| self.auto_dt_min(grid))
    }

    /// Copy with `dt_min` and `u_cap` fixed to their resolved values.
    pub fn resolved(&self, grid: &RadialGrid, mass: f64) -> StepControl {
        StepControl {
            dt_min: Some(self.resolved_dt_min(grid)),
            u_cap: Some(self.resolved_u_cap(grid, mass)),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Bounded,
    BlowUp,
    Undecided,
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VerdictKind::Bounded => "Bounded",
            VerdictKind::BlowUp => "BlowUp",
            VerdictKind::Undecided => "Undecided",
        };
        f.write_str(s)
    }
}

/// Numerical classification of a trajectory. `BlowUp` is a proxy for
/// unbounded growth of `‖u‖∞`, not a proof of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub t_detect: Option<f64>,
    pub peak_linf: f64,
}

/// Step proposed by [`select_dt`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtChoice {
    pub dt: f64,
    /// The stable step fell below `dt_min`. The step is never raised to the
    /// floor, since that would break positivity.
    pub below_floor: bool,
}

/// `cfl · min_i V_i / Σ_faces A·B(∓a h)/h`, capped at `dt_max`.
///
/// With `a ≡ 0` this is `cfl · V_i h / Σ A`, i.e. `cfl · h²/2` in one dimension.
pub fn select_dt(grid: &RadialGrid, a: &FaceVelocity, control: &StepControl) -> DtChoice {
    choose(
        cells::positivity_limit(grid, a, None),
        control.resolved_dt_min(grid),
        control,
    )
}

/// As [`select_dt`], ignoring empty cells, which cannot turn negative.
pub fn select_dt_for(grid: &RadialGrid, u: &[f64], a: &FaceVelocity, control: &StepControl) -> DtChoice {
    choose(
        cells::positivity_limit(grid, a, Some(u)),
        control.resolved_dt_min(grid),
        control,
    )
}

fn choose(limit: f64, dt_min: f64, control: &StepControl) -> DtChoice {
    let dt = (control.cfl * limit).min(control.dt_max);
    DtChoice {
        dt,
        below_floor: dt < dt_min,
    }
}

/// What happened in one call of [`Stepper::advance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub dt: f64,
    pub below_floor: bool,
    pub halvings: u32,
}

const MAX_HALVINGS: u32 = 40;

/// Largest ratio between consecutive steps.
pub const MAX_DT_GROWTH: f64 = 1.25;

/// Largest relative change of `‖u‖∞` accepted in one implicit step.
pub const MAX_PEAK_CHANGE: f64 = 0.1;

/// Reusable buffers for the coupled step.
pub struct Stepper<'g> {
    grid: &'g RadialGrid,
    tau: Tau,
    boundary: f64,
    sensitivity: SensitivityFn,
    a: Vec<f64>,
    rates: FaceRates,
    fluxes: Vec<f64>,
    u_next: Vec<f64>,
    v_next: Vec<f64>,
    signal: SignalWorkspace,
    transport: TransportCoeffs,
    last_dt: Option<f64>,
}

impl<'g> Stepper<'g> {
    pub fn new(params: &Params, grid: &'g RadialGrid) -> Self {
        Stepper {
            grid,
            tau: params.tau,
            boundary: params.boundary_signal,
            sensitivity: params.sensitivity(),
            a: vec![0.0; grid.cells() + 1],
            rates: FaceRates::zeros(grid.cells() + 1),
            fluxes: vec![0.0; grid.cells() + 1],
            u_next: vec![0.0; grid.cells()],
            v_next: vec![0.0; grid.cells()],
            signal: SignalWorkspace::new(grid),
            transport: TransportCoeffs::new(grid),
            last_dt: None,
        }
    }

    /// Advances `fields` by one step, never past `control.t_end`. On entry
    /// and exit `v` and `v_r` belong to the current time: for `τ = 0`, `v`
    /// solves the elliptic problem for the current `u`; for `τ = 1`, `v` has
    /// been advanced by backward Euler with `u` lagged by one step.
    ///
    /// `control.dt_min` must be resolved (see [`StepControl::resolved`]);
    /// `None` is read as no floor.
    pub fn advance(&mut self, fields: &mut Fields, control: &StepControl) -> Result<StepOutcome> {
        let grid = self.grid;
        cells::drift_into(&fields.vr, &self.sensitivity, &mut self.a);
        self.transport.rates_into(&self.a, &mut self.rates);
        let peak = fields.u.iter().fold(0.0f64, |m, &x| if x > m { x } else { m });
        let cut = match control.scheme {
            Scheme::Explicit => 0.0,
            Scheme::Implicit => control.cutoff * peak,
        };
        let (rate_all, rate_live) = self.transport.max_outflow_rates(&self.rates, &fields.u, cut);
        let explicit_limit = control.cfl / rate_all;
        let mut dt = (control.cfl / rate_live).min(control.dt_max);
        if let Some(prev) = self.last_dt {
            dt = dt.min(MAX_DT_GROWTH * prev);
        }
        let remaining = control.t_end - fields.t;
        if remaining > 0.0 && remaining < dt {
            dt = remaining;
        }
        let explicit = control.scheme == Scheme::Explicit || dt <= explicit_limit;
        let halvings = if explicit {
            self.explicit_cells(fields, &mut dt)?
        } else {
            self.implicit_cells(fields, peak, &mut dt)?
        };
        match self.tau {
            Tau::Elliptic => self
                .signal
                .elliptic_into(grid, &self.u_next, self.boundary, &mut self.v_next)?,
            Tau::Parabolic => {
                self.signal
                    .parabolic_into(grid, &fields.u, &fields.v, dt, self.boundary, &mut self.v_next)?
            }
        }
        std::mem::swap(&mut fields.u, &mut self.u_next);
        std::mem::swap(&mut fields.v, &mut self.v_next);
        signal::gradient_into(grid, &fields.v, self.boundary, &mut fields.vr);
        fields.t += dt;
        if remaining <= 0.0 || dt < remaining {
            self.last_dt = Some(dt);
        }
        let below_floor = control.dt_min.is_some_and(|floor| dt < floor);
        Ok(StepOutcome {
            dt,
            below_floor,
            halvings,
        })
    }

    /// Forward Euler into `u_next`, halving `dt` on a positivity failure.
    fn explicit_cells(&mut self, fields: &Fields, dt: &mut f64) -> Result<u32> {
        let mut halvings = 0;
        loop {
            match self
                .transport
                .step_into(&fields.u, &self.rates, *dt, &mut self.fluxes, &mut self.u_next)
            {
                Ok(()) => return Ok(halvings),
                Err(Error::StepRejected { .. }) if halvings < MAX_HALVINGS => {
                    *dt *= 0.5;
                    halvings += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Backward Euler into `u_next`, halving `dt` while `‖u‖∞` moves by more
    /// than [`MAX_PEAK_CHANGE`].
    fn implicit_cells(&mut self, fields: &Fields, peak: f64, dt: &mut f64) -> Result<u32> {
        let mut halvings = 0;
        loop {
            self.transport
                .implicit_into(&fields.u, &self.rates, *dt, &mut self.fluxes, &mut self.u_next)?;
            let next_peak = self.u_next.iter().fold(0.0f64, |m, &x| if x > m { x } else { m });
            if (next_peak - peak).abs() <= MAX_PEAK_CHANGE * peak || halvings >= MAX_HALVINGS {
                return Ok(halvings);
            }
            *dt *= 0.5;
            halvings += 1;
        }
    }
}

/// Single coupled step on a copy of `fields`.
pub fn advance_coupled_step(
    params: &Params,
    grid: &RadialGrid,
    fields: &Fields,
    control: &StepControl,
) -> Result<(Fields, StepOutcome)> {
    let mut next = fields.clone();
    let mass = grid.integrate(&fields.u)?;
    let outcome = Stepper::new(params, grid).advance(&mut next, &control.resolved(grid, mass))?;
    Ok((next, outcome))
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    ReachedEnd,
    BlowUpDetected,
    FloorPersisted,
    StepBudget,
    StepFailure,
    NonFinite,
}

/// Trajectory summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub verdict: Verdict,
    pub frames: Vec<DiagRecord>,
    /// Fields at every recorded frame (empty for [`run_simulation_observed`]).
    pub snapshots: Vec<Fields>,
    pub u_cap: f64,
    pub initial_mass: f64,
    pub steps: u64,
    pub floor_hits: u64,
    pub stop: StopReason,
    pub note: Option<String>,
}

/// Moment exponents used for the per-frame `φ`, `ψ` columns.
pub fn frame_exponents(params: &Params) -> Option<Exponents> {
    if params.n == 2 && params.alpha < 0.0 {
        diagnostics::choose_exponents(params.alpha).ok()
    } else {
        None
    }
}

fn record(grid: &RadialGrid, fields: &Fields, dt: f64, exps: Option<&Exponents>) -> DiagRecord {
    let norms = diagnostics::field_norms(grid, fields);
    let (phi, psi) = exps
        .and_then(|e| {
            let md = diagnostics::mass_distribution(grid, &fields.u).ok()?;
            Some((
                diagnostics::moment_phi(&md, e.gamma).ok()?,
                diagnostics::moment_psi(&md, e).ok()?,
            ))
        })
        .unwrap_or((f64::NAN, f64::NAN));
    DiagRecord::from_norms(fields.t, dt, &norms, phi, psi)
}

/// Runs to `t_end` or until blow-up is detected, keeping every frame's fields.
pub fn run_simulation(params: &Params, grid: &RadialGrid, control: &StepControl) -> Result<RunResult> {
    let mut snapshots = Vec::new();
    let mut result = run_simulation_observed(params, grid, control, |_, f| snapshots.push(f.clone()))?;
    result.snapshots = snapshots;
    Ok(result)
}

/// Same as [`run_simulation`]; `observer` sees each frame instead of it being stored.
pub fn run_simulation_observed(
    params: &Params,
    grid: &RadialGrid,
    control: &StepControl,
    mut observer: impl FnMut(&DiagRecord, &Fields),
) -> Result<RunResult> {
    control.validate()?;
    let mut fields = init_fields(params, grid)?;
    let exps = frame_exponents(params);
    let first = record(grid, &fields, 0.0, exps.as_ref());
    observer(&first, &fields);
    let initial_mass = first.mass;
    let control = &control.resolved(grid, initial_mass);
    let u_cap = control.u_cap.unwrap_or(f64::INFINITY);
    let mut frames = vec![first];
    let mut stepper = Stepper::new(params, grid);
    let (mut steps, mut floor_hits, mut floor_run) = (0u64, 0u64, 0u64);
    let mut last_frame_t = 0.0;
    let mut last_frame_linf = first.linf_u;
    let mut last_dt = 0.0;
    let mut note = None;

    let mut verdict = detect_blowup_with_cap(&frames, control, u_cap);
    let stop = if verdict.kind == VerdictKind::BlowUp {
        StopReason::BlowUpDetected
    } else {
        loop {
            if fields.t >= control.t_end {
                break StopReason::ReachedEnd;
            }
            if steps >= control.max_steps {
                break StopReason::StepBudget;
            }
            let outcome = match stepper.advance(&mut fields, control) {
                Ok(o) => o,
                Err(Error::StepRejected { cell, value }) => {
                    note = Some(format!(
                        "step rejected after {MAX_HALVINGS} halvings (cell {cell}, value {value:e}); blow-up suspect"
                    ));
                    break StopReason::StepFailure;
                }
                Err(Error::NonFinite(what)) => {
                    note = Some(format!("non-finite values in {what}"));
                    break StopReason::NonFinite;
                }
                Err(e) => return Err(e),
            };
            steps += 1;
            last_dt = outcome.dt;
            if outcome.below_floor {
                floor_hits += 1;
                floor_run += 1;
            } else {
                floor_run = 0;
            }
            let linf = fields.u.iter().cloned().fold(0.0, f64::max);
            if !linf.is_finite() {
                note = Some("non-finite density".into());
                break StopReason::NonFinite;
            }
            let due = fields.t - last_frame_t >= control.record_every * (1.0 - 1e-9)
                || fields.t >= control.t_end
                || (linf - last_frame_linf).abs() >= control.record_growth * last_frame_linf;
            if due {
                let rec = record(grid, &fields, outcome.dt, exps.as_ref());
                observer(&rec, &fields);
                frames.push(rec);
                last_frame_t = fields.t;
                last_frame_linf = linf;
                verdict = detect_blowup_with_cap(&frames, control, u_cap);
                if verdict.kind == VerdictKind::BlowUp {
                    break StopReason::BlowUpDetected;
                }
            }
            if floor_run >= control.floor_patience {
                break StopReason::FloorPersisted;
            }
        }
    };

    if stop != StopReason::BlowUpDetected {
        // make sure the final state is on record
        if frames.last().map(|f| f.t) != Some(fields.t) && stop != StopReason::NonFinite {
            let rec = record(grid, &fields, last_dt, exps.as_ref());
            observer(&rec, &fields);
            frames.push(rec);
        }
        verdict = detect_blowup_with_cap(&frames, control, u_cap);
        if matches!(stop, StopReason::NonFinite) {
            verdict.kind = VerdictKind::Undecided;
            verdict.t_detect = None;
        }
    }
    Ok(RunResult {
        verdict,
        frames,
        snapshots: Vec::new(),
        u_cap,
        initial_mass,
        steps,
        floor_hits,
        stop,
        note,
    })
}

/// Number of trailing frames over which `‖u‖∞` must grow strictly.
pub const GROWTH_FRAMES: usize = 10;

/// Classifies a frame history, resolving the automatic density cap from the
/// first frame's mass.
pub fn detect_blowup(history: &[DiagRecord], control: &StepControl, grid: &RadialGrid) -> Verdict {
    let mass = history.first().map_or(0.0, |f| f.mass);
    let control = control.resolved(grid, mass);
    detect_blowup_with_cap(history, &control, control.u_cap.unwrap_or(f64::INFINITY))
}

/// * `BlowUp`: the last frame has `‖u‖∞ ≥ u_cap`, was reached with
///   `dt ≤ 10 · dt_min` (`dt_min` must be resolved), and `‖u‖∞` increases strictly over the last
///   [`GROWTH_FRAMES`] frames (or all frames, if fewer are available).
/// * `Bounded`: `t_end` was reached, `‖u‖∞` never reached `u_cap`, and it
///   varies by less than 5 % over the final quarter of the frames.
/// * `Undecided` otherwise.
pub fn detect_blowup_with_cap(history: &[DiagRecord], control: &StepControl, u_cap: f64) -> Verdict {
    let peak_linf = history.iter().map(|f| f.linf_u).fold(0.0, f64::max);
    let Some(last) = history.last() else {
        return Verdict {
            kind: VerdictKind::Undecided,
            t_detect: None,
            peak_linf,
        };
    };
    let tail = &history[history.len().saturating_sub(GROWTH_FRAMES)..];
    let growing = tail.windows(2).all(|w| w[1].linf_u > w[0].linf_u);
    let collapsed = control.dt_min.is_some_and(|floor| last.dt <= 10.0 * floor);
    if last.linf_u >= u_cap && collapsed && growing {
        return Verdict {
            kind: VerdictKind::BlowUp,
            t_detect: Some(last.t),
            peak_linf,
        };
    }
    let reached = last.t >= control.t_end * (1.0 - 1e-12);
    if reached && peak_linf < u_cap && history.len() >= 2 {
        let count = history.len().div_ceil(4).max(2);
        let window = &history[history.len() - count..];
        let hi = window.iter().map(|f| f.linf_u).fold(f64::MIN, f64::max);
        let lo = window.iter().map(|f| f.linf_u).fold(f64::MAX, f64::min);
        if hi > 0.0 && (hi - lo) / hi < 0.05 {
            return Verdict {
                kind: VerdictKind::Bounded,
                t_detect: None,
                peak_linf,
            };
        }
    }
    Verdict {
        kind: VerdictKind::Undecided,
        t_detect: None,
        peak_linf,
    }
}
