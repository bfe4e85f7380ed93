use serde::{Deserialize, Serialize};

use super::mass::MassDistribution;
use crate::error::{Error, Result};
use crate::special::{power_integral, GaussLegendre};

/// Exponents `δ`, `γ` of the moment functionals for a given `α < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub alpha: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl Exponents {
    /// `1 − 2α`
    pub fn q(&self) -> f64 {
        1.0 - 2.0 * self.alpha
    }

    /// `2 − 2α`
    pub fn p(&self) -> f64 {
        2.0 - 2.0 * self.alpha
    }

    /// `δ(1 − 2α) + α`
    pub fn shift(&self) -> f64 {
        self.delta * self.q() + self.alpha
    }

    /// Open interval of admissible `γ` for this `δ`, intersected with `(0, 1)`.
    pub fn gamma_interval(alpha: f64, delta: f64) -> (f64, f64) {
        let q = 1.0 - 2.0 * alpha;
        let lo = (delta * q + alpha).max(0.0);
        let hi = ((-alpha - delta * q) / q).min(delta * q + 2.0 - alpha).min(1.0);
        (lo, hi)
    }

    /// Smallest slack among all strict inequalities constraining `δ` and `γ`.
    pub fn margin(&self) -> f64 {
        let a = self.alpha;
        let q = self.q();
        let (d, g) = (self.delta, self.gamma);
        [
            -a,
            d,
            -a / q - d,
            g - (d * q + a),
            (-a - d * q) / q - g,
            d * q + 2.0 - a - g,
            g,
            1.0 - g,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if self.margin() > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!("inadmissible exponents {self:?}")))
        }
    }
}

/// Midpoint choices `δ = −α/(2(1−2α))` and `γ` at the centre of its admissible interval.
pub fn choose_exponents(alpha: f64) -> Result<Exponents> {
    if !(alpha.is_finite() && alpha < 0.0) {
        return Err(Error::Domain(format!(
            "moment exponents require alpha < 0, got {alpha}"
        )));
    }
    let delta = -alpha / (2.0 * (1.0 - 2.0 * alpha));
    let (lo, hi) = Exponents::gamma_interval(alpha, delta);
    let exps = Exponents {
        alpha,
        delta,
        gamma: 0.5 * (lo + hi),
    };
    exps.validate()?;
    Ok(exps)
}

/// `∫₀^S s^p w(s) ds` for the piecewise-linear `w`, exact per cell.
///
/// Requires `p > −2` (on the first cell `w` is proportional to `s`).
pub fn weighted_integral(md: &MassDistribution, p: f64) -> f64 {
    let mut total = md.ws[0] * power_integral(0.0, md.s[1], p + 1.0);
    for k in 1..md.cells() {
        let (a, b) = (md.s[k], md.s[k + 1]);
        let c0 = md.w[k] - md.ws[k] * a;
        total += c0 * power_integral(a, b, p) + md.ws[k] * power_integral(a, b, p + 1.0);
    }
    total
}

/// Node values of `∫₀^{s_j} w(σ)/σ dσ`, exact for the piecewise-linear `w`.
pub fn log_weighted_cumulative(md: &MassDistribution) -> Vec<f64> {
    let mut out = Vec::with_capacity(md.s.len());
    out.push(0.0);
    let mut acc = md.ws[0] * md.s[1];
    out.push(acc);
    for k in 1..md.cells() {
        let (a, b) = (md.s[k], md.s[k + 1]);
        let c0 = md.w[k] - md.ws[k] * a;
        acc += c0 * ((b - a) / a).ln_1p() + md.ws[k] * (b - a);
        out.push(acc);
    }
    out
}

/// `∫₀^S s^q w(s)^p ds` with exact treatment of the first cell and
/// Gauss–Legendre quadrature on the remaining ones. Requires `q + p > −1`.
pub(crate) fn power_weighted(md: &MassDistribution, q: f64, p: f64) -> f64 {
    let rule = GaussLegendre::standard();
    let mut total = md.ws[0].max(0.0).powf(p) * power_integral(0.0, md.s[1], q + p);
    for k in 1..md.cells() {
        if md.w[k] == 0.0 && md.w[k + 1] == 0.0 {
            continue;
        }
        total += rule.integrate(md.s[k], md.s[k + 1], |s| s.powf(q) * md.eval_in_cell(k, s).powf(p));
    }
    total
}

/// `∫₀^S s^e w^(p−1) w_s ds`; same quadrature as [`power_weighted`].
pub(crate) fn power_weighted_slope(md: &MassDistribution, e: f64, p: f64) -> f64 {
    let rule = GaussLegendre::standard();
    let ws0 = md.ws[0].max(0.0);
    let mut total = ws0.powf(p) * power_integral(0.0, md.s[1], e + p - 1.0);
    for k in 1..md.cells() {
        if md.ws[k] == 0.0 {
            continue;
        }
        total += md.ws[k]
            * rule.integrate(md.s[k], md.s[k + 1], |s| {
                s.powf(e) * md.eval_in_cell(k, s).powf(p - 1.0)
            });
    }
    total
}

/// `φ = ∫₀^{R²} s^(−γ) w ds`.
pub fn moment_phi(md: &MassDistribution, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(weighted_integral(md, -gamma))
}

/// `ψ = ∫₀^{R²} s^(δ(1−2α)+α−γ−1) w^(2−2α) ds`.
pub fn moment_psi(md: &MassDistribution, exps: &Exponents) -> Result<f64> {
    exps.validate()?;
    Ok(power_weighted(md, exps.shift() - exps.gamma - 1.0, exps.p()))
}
