use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::constants::BlowupConstants;
use super::mass::{mass_distribution, MassDistribution};
use super::moments::{log_weighted_cumulative, moment_phi, moment_psi, power_weighted_slope, weighted_integral};
use crate::error::{Error, Result};
use crate::model::{Fields, Params, RadialGrid, Tau};

/// Outcome of one inequality `lhs ≤ rhs` (or `≥`, see `name`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Signed slack, positive when the inequality holds.
    pub margin: f64,
    pub pass: bool,
}

impl CheckResult {
    fn at_most(name: &str, lhs: f64, rhs: f64, rel_slack: f64) -> Self {
        let tol = rel_slack * lhs.abs().max(rhs.abs()) + 1e-300;
        CheckResult {
            name: name.into(),
            lhs,
            rhs,
            margin: rhs - lhs,
            pass: lhs <= rhs + tol,
        }
    }

    fn at_least(name: &str, lhs: f64, rhs: f64, rel_slack: f64) -> Self {
        let tol = rel_slack * lhs.abs().max(rhs.abs()) + 1e-300;
        CheckResult {
            name: name.into(),
            lhs,
            rhs,
            margin: lhs - rhs,
            pass: lhs >= rhs - tol,
        }
    }
}

/// Minimum margins of the pointwise lower bounds for `r v_r` and `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundMargins {
    /// `min_r [r v_r − U v / (1 + ∫₀^r U/ρ dρ)]` over faces, including `r = 0`.
    pub gradient: f64,
    pub gradient_at: f64,
    /// `min_r [v − M exp(−(m/(2π) ln(R/r))^(1/2))]` over cell centres and `r = R`.
    pub signal: f64,
    pub signal_at: f64,
}

/// Evaluates both pointwise lower bounds on a `τ = 0`, `n = 2` frame.
pub fn check_lower_bounds(grid: &RadialGrid, fields: &Fields, mass: f64, params: &Params) -> Result<LowerBoundMargins> {
    if params.tau != Tau::Elliptic {
        return Err(Error::Unsupported("lower bounds are stated for tau = 0".into()));
    }
    let md = mass_distribution(grid, &fields.u)?;
    let cumulative = log_weighted_cumulative(&md);
    let n = grid.cells();
    let m = params.boundary_signal;

    let (mut gradient, mut gradient_at) = (0.0, 0.0);
    for k in 1..n {
        let r = grid.faces[k];
        let v_face = 0.5 * (fields.v[k - 1] + fields.v[k]);
        let bound = md.w[k] * v_face / (1.0 + 0.5 * cumulative[k]);
        let margin = r * fields.vr[k] - bound;
        if margin < gradient {
            gradient = margin;
            gradient_at = r;
        }
    }

    let (mut signal, mut signal_at) = (0.0, grid.radius);
    for (r, v) in grid.centers.iter().zip(&fields.v) {
        let bound = m * (-(mass / (2.0 * PI) * (grid.radius / r).ln()).sqrt()).exp();
        let margin = v - bound;
        if margin < signal {
            signal = margin;
            signal_at = *r;
        }
    }
    Ok(LowerBoundMargins {
        gradient,
        gradient_at,
        signal,
        signal_at,
    })
}

/// Sub-checks of the Hölder chain on one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub checks: Vec<CheckResult>,
}

impl HolderReport {
    /// True when sub-checks (i)–(iv) pass; (v) is reported separately.
    pub fn holder_pass(&self) -> bool {
        self.checks.iter().take(4).all(|c| c.pass)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Checks, on the discrete `w`:
///
/// 1. `∫ s^(−γ−1) w ≤ C₄₁ ψ^(1/(2−2α))`
/// 2. `max_s ∫₀^s w/σ ≤ C₄₂ ψ^(1/(2−2α))`
/// 3. `∫ s^(δ(1−2α)+α−γ) w^(1−2α) w_s ≥ C₄₃ ψ + R^(2δ(1−2α)+2α−2γ)(m/2π)^(2−2α)/(2−2α)`
///    (integration by parts with the boundary term kept, so this is an identity)
/// 4. `φ ≤ C₄₀ ψ^(1/(2−2α))` with the Hölder value of `C₄₀`
/// 5. when a later frame is supplied, the finite-difference `φ′` against the
///    differential inequality at boundary level `m`.
///
/// Sub-checks 1–4 use relative slack `rel_slack`; sub-check 5 additionally
/// allows `rel_slack` of the magnitude of each term.
pub fn check_holder_chain(
    md: &MassDistribution,
    consts: &BlowupConstants,
    next: Option<(&MassDistribution, f64)>,
    m: f64,
    rel_slack: f64,
) -> Result<HolderReport> {
    let exps = &consts.exps;
    let (p, gamma) = (exps.p(), exps.gamma);
    let psi = moment_psi(md, exps)?;
    let psi_root = psi.powf(1.0 / p);
    let phi = moment_phi(md, gamma)?;

    let mut checks = Vec::with_capacity(5);
    let i1 = weighted_integral(md, -gamma - 1.0);
    checks.push(CheckResult::at_most(
        "(i) s^-g-1 moment",
        i1,
        consts.c41 * psi_root,
        rel_slack,
    ));

    let cumulative = log_weighted_cumulative(md);
    let worst = cumulative.iter().cloned().fold(0.0, f64::max);
    checks.push(CheckResult::at_most(
        "(ii) log-weighted mass",
        worst,
        consts.c42 * psi_root,
        rel_slack,
    ));

    let e = exps.shift() - gamma;
    let lhs = power_weighted_slope(md, e, p);
    let s_max = md.s_max();
    let boundary = s_max.powf(e) * md.w.last().unwrap().powf(p) / p;
    checks.push(CheckResult::at_least(
        "(iii) drift integral",
        lhs,
        consts.c43 * psi + boundary,
        rel_slack,
    ));

    checks.push(CheckResult::at_most(
        "(iv) phi by psi",
        phi,
        consts.c40_holder * psi_root,
        rel_slack,
    ));

    if let Some((later, dt)) = next {
        let phi_next = moment_phi(later, gamma)?;
        let derivative = (phi_next - phi) / dt;
        let bound = consts.phi_prime_lower_bound(m, psi);
        let scale = (m.powf(exps.q()) / consts.c40 * psi).abs() + consts.c40 * (psi_root + 1.0);
        let mut c = CheckResult::at_least("(v) phi' lower bound", derivative, bound, 0.0);
        c.pass = derivative >= bound - rel_slack * scale;
        checks.push(c);
    }
    Ok(HolderReport { checks })
}

/// Result of comparing a `φ` history with exponential growth at rate `C₄₅`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub nondecreasing: bool,
    /// `min_t φ(t) / (φ₀ e^(C₄₅ t))`.
    pub growth_ratio: f64,
    pub exponential_ok: bool,
    pub t_detect: Option<f64>,
    pub tmax_bound: f64,
    pub time_bound_ok: bool,
}

impl GrowthReport {
    pub fn pass(&self) -> bool {
        self.nondecreasing && self.exponential_ok && self.time_bound_ok
    }
}

/// `history` holds `(t, φ(t))` pairs starting at `t = 0`.
pub fn phi_growth_check(
    history: &[(f64, f64)],
    consts: &BlowupConstants,
    m: f64,
    radius: f64,
    t_detect: Option<f64>,
    rel_slack: f64,
) -> GrowthReport {
    let c45 = consts.c45_at(m);
    let phi0 = history.first().map_or(consts.phi0, |h| h.1);
    let nondecreasing = history.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - rel_slack));
    let growth_ratio = history
        .iter()
        .map(|(t, phi)| phi / (phi0 * (c45 * t).exp()))
        .fold(f64::INFINITY, f64::min);
    let tmax_bound = consts.tmax_bound_at(m, radius);
    GrowthReport {
        nondecreasing,
        growth_ratio,
        exponential_ok: growth_ratio >= 1.0 - rel_slack,
        t_detect,
        tmax_bound,
        time_bound_ok: t_detect.is_some_and(|t| t <= tmax_bound),
    }
}
