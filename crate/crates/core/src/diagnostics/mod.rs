//! Frame diagnostics: norms, the mass distribution `w`, the moment
//! functionals `φ`, `ψ`, the explicit constants of the moment-growth
//! argument and checkers for each inequality along the way.

mod checks;
mod constants;
mod mass;
mod moments;

pub use checks::{
    check_holder_chain, check_lower_bounds, phi_growth_check, CheckResult, GrowthReport, HolderReport,
    LowerBoundMargins,
};
pub use constants::{blowup_constants, f_m, BlowupConstants};
pub use mass::{mass_distribution, w_pde_residual, MassDistribution};
pub use moments::{choose_exponents, log_weighted_cumulative, moment_phi, moment_psi, weighted_integral, Exponents};

use serde::{Deserialize, Serialize};

use crate::model::{Fields, RadialGrid};

/// Integral norms of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub mass: f64,
    pub linf_u: f64,
    pub l2_u: f64,
    pub l4_u: f64,
    pub min_u: f64,
    pub linf_v: f64,
    /// `∫_Ω |∇v|² dx`, trapezoidal over faces.
    pub grad_l2_v: f64,
}

pub fn field_norms(grid: &RadialGrid, fields: &Fields) -> Norms {
    let mut mass = 0.0;
    let mut l2 = 0.0;
    let mut l4 = 0.0;
    let mut linf = 0.0f64;
    let mut min_u = f64::INFINITY;
    for (u, vol) in fields.u.iter().zip(&grid.vols) {
        let u2 = u * u;
        mass += u * vol;
        l2 += u2 * vol;
        l4 += u2 * u2 * vol;
        linf = linf.max(u.abs());
        min_u = min_u.min(*u);
    }
    let linf_v = fields.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let last = fields.vr.len() - 1;
    let grad = fields
        .vr
        .iter()
        .zip(&grid.areas)
        .enumerate()
        .map(|(k, (g, a))| {
            let w = if k == 0 || k == last { 0.5 * grid.h } else { grid.h };
            a * g * g * w
        })
        .sum();
    Norms {
        mass,
        linf_u: linf,
        l2_u: l2.sqrt(),
        l4_u: l4.sqrt().sqrt(),
        min_u,
        linf_v,
        grad_l2_v: grad,
    }
}

/// Per-frame record written to the time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagRecord {
    pub t: f64,
    /// Step used to reach this frame; zero for the initial frame.
    pub dt: f64,
    pub mass: f64,
    pub linf_u: f64,
    pub l2_u: f64,
    pub l4_u: f64,
    pub linf_v: f64,
    pub grad_l2_v: f64,
    /// `φ(t)`; NaN outside the two-dimensional `α < 0` setting.
    pub phi: f64,
    /// `ψ(t)`; NaN outside the two-dimensional `α < 0` setting.
    pub psi: f64,
    pub min_u: f64,
}

impl DiagRecord {
    pub fn from_norms(t: f64, dt: f64, norms: &Norms, phi: f64, psi: f64) -> Self {
        DiagRecord {
            t,
            dt,
            mass: norms.mass,
            linf_u: norms.linf_u,
            l2_u: norms.l2_u,
            l4_u: norms.l4_u,
            linf_v: norms.linf_v,
            grad_l2_v: norms.grad_l2_v,
            phi,
            psi,
            min_u: norms.min_u,
        }
    }
}
