use std::f64::consts::PI;

use crate::error::{check_len, Error, Result};
use crate::model::{RadialGrid, SensitivityFn};

/// Cumulative radial mass `w(s) = ∫₀^√s ρ u(ρ) dρ` on the nodes `s_k = r_{k}²`
/// (the squared face radii).
///
/// With `u` piecewise constant in cells, `w` is piecewise linear in `s` and
/// `w_s = u/2` on each `s`-cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MassDistribution {
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    /// Slope on each of the `J` cells `[s_k, s_{k+1}]`.
    pub ws: Vec<f64>,
}

impl MassDistribution {
    /// Builds a distribution from node values; `w[0]` must be zero.
    pub fn from_nodes(s: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        check_len(s.len(), w.len())?;
        if s.len() < 2 || s[0] != 0.0 || w[0] != 0.0 {
            return Err(Error::Domain("mass distribution must start at s = 0 with w = 0".into()));
        }
        if s.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Domain("s nodes must be strictly increasing".into()));
        }
        let ws = s
            .windows(2)
            .zip(w.windows(2))
            .map(|(s, w)| (w[1] - w[0]) / (s[1] - s[0]))
            .collect();
        Ok(MassDistribution { s, w, ws })
    }

    pub fn cells(&self) -> usize {
        self.ws.len()
    }

    /// `S = R²`.
    pub fn s_max(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// `2π w(R²)`.
    pub fn mass(&self) -> f64 {
        2.0 * PI * self.w.last().unwrap()
    }

    /// Linear interpolant on cell `k`, clamped at zero against round-off.
    #[inline]
    pub(crate) fn eval_in_cell(&self, k: usize, s: f64) -> f64 {
        (self.w[k] + self.ws[k] * (s - self.s[k])).max(0.0)
    }
}

/// `w` for a two-dimensional frame.
pub fn mass_distribution(grid: &RadialGrid, u: &[f64]) -> Result<MassDistribution> {
    if grid.n != 2 {
        return Err(Error::Unsupported(format!(
            "mass distribution is defined for n = 2, got n = {}",
            grid.n
        )));
    }
    check_len(grid.cells(), u.len())?;
    let s: Vec<f64> = grid.faces.iter().map(|r| r * r).collect();
    let mut w = Vec::with_capacity(s.len());
    w.push(0.0);
    let mut acc = 0.0;
    for (k, uk) in u.iter().enumerate() {
        acc += 0.5 * uk * (s[k + 1] - s[k]);
        w.push(acc);
    }
    MassDistribution::from_nodes(s, w)
}

/// L¹-in-`s` norm of the residual of
/// `w_t = 4 s w_ss + 2 √s w_s f(v_r²) v_r`
/// at interior nodes, with the time derivative from the two frames and the
/// spatial terms from the earlier frame.
pub fn w_pde_residual(
    prev: &MassDistribution,
    next: &MassDistribution,
    dt: f64,
    vr: &[f64],
    f: &SensitivityFn,
) -> Result<f64> {
    check_len(prev.s.len(), next.s.len())?;
    check_len(prev.s.len(), vr.len())?;
    if prev.s != next.s {
        return Err(Error::Domain("mass distributions live on different s grids".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    let s = &prev.s;
    let w = &prev.w;
    let mut total = 0.0;
    for k in 1..s.len() - 1 {
        let (hm, hp) = (s[k] - s[k - 1], s[k + 1] - s[k]);
        let w_s = (hm * hm * (w[k + 1] - w[k]) + hp * hp * (w[k] - w[k - 1])) / (hm * hp * (hm + hp));
        let w_ss = 2.0 * (hm * (w[k + 1] - w[k]) - hp * (w[k] - w[k - 1])) / (hm * hp * (hm + hp));
        let g = vr[k];
        let drift = f.eval_unchecked(g * g) * g;
        let w_t = (next.w[k] - w[k]) / dt;
        let res = w_t - 4.0 * s[k] * w_ss - 2.0 * s[k].sqrt() * w_s * drift;
        total += res.abs() * 0.5 * (hm + hp);
    }
    Ok(total)
}
