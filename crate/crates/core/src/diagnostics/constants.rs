use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::moments::Exponents;
use crate::error::{Error, Result};
use crate::model::Params;
use crate::special::power_integral_from_zero;

/// Explicit constants of the moment-growth argument for one initial datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupConstants {
    pub exps: Exponents,
    pub mass: f64,
    pub c39: f64,
    /// Hölder constant bounding `∫ s^(−γ−1) w` by `ψ^(1/(2−2α))`.
    pub c41: f64,
    /// Hölder constant bounding `∫₀^s w/σ` by `ψ^(1/(2−2α))`.
    pub c42: f64,
    pub c43: f64,
    /// Hölder constant bounding `φ` by `ψ^(1/(2−2α))`.
    pub c40_holder: f64,
    /// Smallest `C₄₀` for which both the `φ′` lower bound and `φ ≤ C₄₀ ψ^(1/(2−2α))` follow.
    pub c40: f64,
    pub c44: f64,
    pub c45: f64,
    pub phi0: f64,
    pub mstar: f64,
    /// Upper bound on the blow-up time at the parameter's `M`.
    pub tmax_bound: f64,
}

impl BlowupConstants {
    /// `f_M(z)` at this datum's `C₄₀`.
    pub fn f_m(&self, m: f64, z: f64) -> f64 {
        f_m(&self.exps, self.c40, m, z)
    }

    /// Right-hand side of the `φ′` differential inequality.
    pub fn phi_prime_lower_bound(&self, m: f64, psi: f64) -> f64 {
        let (p, q) = (self.exps.p(), self.exps.q());
        m.powf(q) / self.c40 * psi / (1.0 + psi.powf(q / p)) - self.c40 * psi.powf(1.0 / p) - self.c40
    }

    /// Growth rate `C₄₅` at boundary level `m`.
    pub fn c45_at(&self, m: f64) -> f64 {
        c45(&self.exps, self.c40, self.phi0, m)
    }

    /// Blow-up time bound `(1/C₄₅) ln(m R^(2(1−γ)) / (2π(1−γ)φ₀))` at boundary level `m`.
    pub fn tmax_bound_at(&self, m: f64, radius: f64) -> f64 {
        let g = self.exps.gamma;
        let phi_max = self.mass * radius.powf(2.0 * (1.0 - g)) / (2.0 * PI * (1.0 - g));
        (phi_max / self.phi0).ln() / self.c45_at(m)
    }
}

/// `f_M(z) = M^(1−2α)/(2C₄₀) · z/(1 + z^((1−2α)/(2−2α))) − C₄₀ z^(1/(2−2α)) − C₄₀`.
pub fn f_m(exps: &Exponents, c40: f64, m: f64, z: f64) -> f64 {
    let (p, q) = (exps.p(), exps.q());
    m.powf(q) / (2.0 * c40) * z / (1.0 + z.powf(q / p)) - c40 * z.powf(1.0 / p) - c40
}

fn c45(exps: &Exponents, c40: f64, phi0: f64, m: f64) -> f64 {
    let q = exps.q();
    let x = (phi0 / (2.0 * c40)).powf(q);
    m.powf(q) / (2.0 * c40 * c40) * x / (1.0 + x)
}

/// `(∫₀^{R²} s^e ds)^((1−2α)/(2−2α))`, asserting finiteness.
fn holder_constant(exps: &Exponents, radius: f64, numerator: f64, name: &str) -> Result<f64> {
    let e = numerator / exps.q();
    let integral = power_integral_from_zero(radius * radius, e);
    if !integral.is_finite() {
        return Err(Error::Domain(format!(
            "{name}: weight exponent {e} is not integrable at 0"
        )));
    }
    Ok(integral.powf(exps.q() / exps.p()))
}

/// Value of `M^(1−2α)` above which `f_M ≥ 0` on `[z0, ∞)`:
/// `sup_{z ≥ z0} 2C₄₀² (z^(1/(2−2α)) + 1)(1 + z^((1−2α)/(2−2α))) / z`,
/// located by a logarithmic scan refined with golden-section search.
fn required_power(exps: &Exponents, c40: f64, z0: f64) -> f64 {
    let (p, q) = (exps.p(), exps.q());
    let h = |z: f64| 2.0 * c40 * c40 * (z.powf(1.0 / p) + 1.0) * (1.0 + z.powf(q / p)) / z;
    let ln0 = z0.ln();
    let steps = 400;
    let span = 60.0;
    let at = |i: usize| ln0 + span * i as f64 / steps as f64;
    let (mut best, mut best_i) = (h(z0), 0);
    for i in 1..=steps {
        let v = h(at(i).exp());
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut lo, mut hi) = (at(best_i.saturating_sub(1)), at((best_i + 1).min(steps)));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = hi - ratio * (hi - lo);
        let x2 = lo + ratio * (hi - lo);
        if h(x1.exp()) > h(x2.exp()) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best.max(h((0.5 * (lo + hi)).exp())).max(2.0 * c40 * c40)
}

/// Evaluates every constant for the datum with mass `mass` and `φ₀ = phi0`.
pub fn blowup_constants(params: &Params, exps: &Exponents, mass: f64, phi0: f64) -> Result<BlowupConstants> {
    exps.validate()?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    if !(phi0 > 0.0 && phi0.is_finite()) {
        return Err(Error::Domain(format!("phi0 must be positive, got {phi0}")));
    }
    let (alpha, delta, gamma) = (exps.alpha, exps.delta, exps.gamma);
    let (p, q) = (exps.p(), exps.q());
    let radius = params.radius;
    let base = -alpha + gamma + 1.0 - delta * q;

    let c39 = 2.0 * radius.powf(-2.0 * delta * q) * (-mass * q / (16.0 * PI * delta)).exp();
    let c41 = holder_constant(exps, radius, base - (gamma + 1.0) * p, "C41")?;
    let c42 = holder_constant(exps, radius, base - p, "C42")?;
    let c43 = -(exps.shift() - gamma) / p;
    let c40_holder = holder_constant(exps, radius, base - gamma * p, "C40")?;

    let drift_coeff = 2.0 * params.kappa * c39 * c43 / 2f64.powf(q).max(c42.powf(q));
    let c40 = c40_holder
        .max(4.0 * gamma * (1.0 - gamma) * c41)
        .max(4.0 * (1.0 - gamma) * radius.powf(-2.0 * gamma) * mass / (2.0 * PI))
        .max(1.0 / drift_coeff);

    let c44 = (phi0 / (2.0 * c40)).powf(p);
    let mstar = required_power(exps, c40, c44).powf(1.0 / q);
    let mut consts = BlowupConstants {
        exps: *exps,
        mass,
        c39,
        c41,
        c42,
        c43,
        c40_holder,
        c40,
        c44,
        c45: 0.0,
        phi0,
        mstar,
        tmax_bound: 0.0,
    };
    consts.c45 = consts.c45_at(params.boundary_signal);
    consts.tmax_bound = consts.tmax_bound_at(params.boundary_signal, radius);
    let all = [c39, c41, c42, c43, c40_holder, c40, c44, phi0, mstar];
    if all.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
        return Err(Error::Domain(format!(
            "non-positive or non-finite constant in {consts:?}"
        )));
    }
    Ok(consts)
}
