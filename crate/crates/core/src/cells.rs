//! Conservative transport step for the cell density.
//!
//! The radial cell flux is `J = a u − u_r` with drift velocity
//! `a = −f(v_r²) v_r`, discretised with the Scharfetter–Gummel two-point flux
//!
//! ```text
//!   F_{i+1/2} = [B(−a h) u_i − B(a h) u_{i+1}] / h,     B(x) = x / (eˣ − 1),
//! ```
//!
//! and zero flux through `r = 0` and `r = R`.

use crate::error::{check_len, Error, Result};
use crate::model::{RadialGrid, SensitivityFn};

/// Bernoulli function `B(x) = x/(eˣ − 1)` with `B(0) = 1` exactly.
#[inline]
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        // x/(e^x - 1) = Σ B_k x^k / k!
        let x2 = x * x;
        1.0 - 0.5 * x + x2 * (1.0 / 12.0 + x2 * (-1.0 / 720.0 + x2 * (1.0 / 30240.0 - x2 / 1_209_600.0)))
    } else {
        x / x.exp_m1()
    }
}

/// Drift velocity `a = −f(v_r²) v_r` at the `N + 1` faces; the boundary
/// entries are kept at zero because no flux crosses them.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceVelocity {
    pub a: Vec<f64>,
}

impl FaceVelocity {
    pub fn zeros(faces: usize) -> Self {
        FaceVelocity { a: vec![0.0; faces] }
    }
}

pub fn drift_velocity(grid: &RadialGrid, vr: &[f64], f: &SensitivityFn) -> Result<FaceVelocity> {
    check_len(grid.cells() + 1, vr.len())?;
    if vr.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("signal gradient"));
    }
    let mut a = FaceVelocity::zeros(vr.len());
    drift_into(vr, f, &mut a.a);
    Ok(a)
}

pub(crate) fn drift_into(vr: &[f64], f: &SensitivityFn, a: &mut [f64]) {
    let last = vr.len() - 1;
    a[0] = 0.0;
    a[last] = 0.0;
    for k in 1..last {
        let g = vr[k];
        a[k] = -f.eval_unchecked(g * g) * g;
    }
}

/// Grid factors of the transport update: `A_k/h` at faces, with zeros at
/// `r = 0` and `r = R` so that no flux crosses them, `1/V_i` and `V_i`.
#[derive(Debug, Clone)]
pub(crate) struct TransportCoeffs {
    pub face: Vec<f64>,
    pub inv_vol: Vec<f64>,
    pub vol: Vec<f64>,
    pub h: f64,
}

/// Face transfer coefficients for one drift field: the flux through face
/// `k` is `q_k u_{k−1} − p_k u_k` with `p = (A/h) B(a h)` and
/// `q = (A/h) B(−a h)`, both nonnegative.
#[derive(Debug, Clone)]
pub(crate) struct FaceRates {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl FaceRates {
    pub fn zeros(faces: usize) -> Self {
        FaceRates {
            p: vec![0.0; faces],
            q: vec![0.0; faces],
        }
    }
}

impl TransportCoeffs {
    pub fn new(grid: &RadialGrid) -> Self {
        let mut face: Vec<f64> = grid.areas.iter().map(|a| a / grid.h).collect();
        face[0] = 0.0;
        *face.last_mut().unwrap() = 0.0;
        let inv_vol = grid.vols.iter().map(|v| 1.0 / v).collect();
        TransportCoeffs {
            face,
            inv_vol,
            vol: grid.vols.clone(),
            h: grid.h,
        }
    }

    pub fn rates_into(&self, a: &[f64], rates: &mut FaceRates) {
        let h = self.h;
        let faces = self.face.len();
        let (a, p, q) = (&a[..faces], &mut rates.p[..faces], &mut rates.q[..faces]);
        for k in 0..faces {
            let x = a[k] * h;
            let b = bernoulli(x);
            p[k] = self.face[k] * b;
            // B(−x) = B(x) + x
            q[k] = self.face[k] * (b + x);
        }
    }

    pub fn rates(&self, a: &[f64]) -> FaceRates {
        let mut rates = FaceRates::zeros(self.face.len());
        self.rates_into(a, &mut rates);
        rates
    }

    /// `max_i (p_i + q_{i+1})/V_i` over all cells, and over cells with
    /// `u_i > cut` only: reciprocals of the positivity limit.
    pub fn max_outflow_rates(&self, rates: &FaceRates, u: &[f64], cut: f64) -> (f64, f64) {
        let n = self.inv_vol.len();
        let (p, q, inv_vol, u) = (&rates.p[..n + 1], &rates.q[..n + 1], &self.inv_vol[..n], &u[..n]);
        let mut all = 0.0f64;
        let mut live = 0.0f64;
        for i in 0..n {
            let rate = (p[i] + q[i + 1]) * inv_vol[i];
            all = all.max(rate);
            if u[i] > cut && rate > live {
                live = rate;
            }
        }
        (all, live)
    }

    /// Area-weighted face fluxes `A_{i+1/2} F_{i+1/2}` (zero at both ends).
    pub fn fluxes_into(&self, u: &[f64], rates: &FaceRates, g: &mut [f64]) {
        let n = u.len();
        let (p, q) = (&rates.p[..n + 1], &rates.q[..n + 1]);
        g[0] = 0.0;
        g[n] = 0.0;
        for k in 1..n {
            g[k] = q[k] * u[k - 1] - p[k] * u[k];
        }
    }

    /// Backward-Euler update with the drift frozen over the step:
    /// `u_new + (dt/V)·div G(u_new) = u`. The matrix is an M-matrix with
    /// vanishing flux column sums, so `u_new ≥ 0` and mass is conserved for
    /// every `dt > 0`. `sup` is scratch of length `N`.
    ///
    /// Elimination runs on `V + dt·K`, whose column sums are the volumes; the
    /// pivots are accumulated from these sums without subtraction, which keeps
    /// them accurate however large `dt` is.
    pub fn implicit_into(&self, u: &[f64], rates: &FaceRates, dt: f64, sup: &mut [f64], out: &mut [f64]) -> Result<()> {
        let n = u.len();
        let (p, q, vol) = (&rates.p[..n + 1], &rates.q[..n + 1], &self.vol[..n]);
        let (sup, out) = (&mut sup[..n], &mut out[..n]);
        // excess/pivot of the previous row, and its eliminated right-hand side
        let mut ratio = 0.0;
        let mut prev = 0.0;
        for i in 0..n {
            let excess = vol[i] + dt * p[i] * ratio;
            let inv = 1.0 / (excess + dt * q[i + 1]);
            ratio = excess * inv;
            prev = (vol[i] * u[i] + dt * q[i] * prev) * inv;
            sup[i] = dt * p[i + 1] * inv;
            out[i] = prev;
        }
        for i in (0..n - 1).rev() {
            out[i] += sup[i] * out[i + 1];
        }
        if out.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("implicit cell update"))
        }
    }

    /// Explicit update into `out`; rejects steps that create negative density.
    pub fn step_into(&self, u: &[f64], rates: &FaceRates, dt: f64, g: &mut [f64], out: &mut [f64]) -> Result<()> {
        self.fluxes_into(u, rates, g);
        let n = u.len();
        let (g, inv_vol, out) = (&g[..n + 1], &self.inv_vol[..n], &mut out[..n]);
        let mut lowest = f64::INFINITY;
        let mut at = 0;
        for i in 0..n {
            let next = u[i] - dt * inv_vol[i] * (g[i + 1] - g[i]);
            if !(next >= lowest) {
                lowest = next;
                at = i;
            }
            out[i] = next;
        }
        if lowest >= 0.0 {
            Ok(())
        } else if lowest.is_nan() || lowest.is_infinite() {
            Err(Error::NonFinite("cell update"))
        } else {
            Err(Error::StepRejected {
                cell: at,
                value: lowest,
            })
        }
    }
}

/// Per-cell upper bound on `dt` keeping the explicit update a nonnegative
/// combination of old values: `V_i / Σ_faces A·B(∓a h)/h`.
///
/// Cells with `occupied[i] == 0` impose no restriction when `occupied` is given.
pub fn positivity_limit(grid: &RadialGrid, a: &FaceVelocity, occupied: Option<&[f64]>) -> f64 {
    let coeffs = TransportCoeffs::new(grid);
    let rates = coeffs.rates(&a.a);
    match occupied {
        Some(u) => 1.0 / coeffs.max_outflow_rates(&rates, u, 0.0).1,
        None => 1.0 / coeffs.max_outflow_rates(&rates, &vec![1.0; grid.cells()], 0.0).0,
    }
}

/// Area-weighted face fluxes `A F` of `u` under drift `a`, zero at `r = 0` and `r = R`.
pub fn face_fluxes(grid: &RadialGrid, u: &[f64], a: &FaceVelocity) -> Result<Vec<f64>> {
    check_len(grid.cells(), u.len())?;
    check_len(grid.cells() + 1, a.a.len())?;
    let coeffs = TransportCoeffs::new(grid);
    let mut g = vec![0.0; grid.cells() + 1];
    coeffs.fluxes_into(u, &coeffs.rates(&a.a), &mut g);
    Ok(g)
}

/// Backward-Euler variant of [`step_cells`], positive and conservative for any `dt > 0`.
pub fn step_cells_implicit(grid: &RadialGrid, u: &[f64], a: &FaceVelocity, dt: f64) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    check_len(grid.cells(), u.len())?;
    check_len(grid.cells() + 1, a.a.len())?;
    let coeffs = TransportCoeffs::new(grid);
    let rates = coeffs.rates(&a.a);
    let mut sup = vec![0.0; grid.cells()];
    let mut out = vec![0.0; grid.cells()];
    coeffs.implicit_into(u, &rates, dt, &mut sup, &mut out)?;
    Ok(out)
}

/// Explicit conservative update of `u` over `dt`.
///
/// Returns [`Error::StepRejected`] if the step would create negative density.
pub fn step_cells(grid: &RadialGrid, u: &[f64], a: &FaceVelocity, dt: f64) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    check_len(grid.cells(), u.len())?;
    check_len(grid.cells() + 1, a.a.len())?;
    let coeffs = TransportCoeffs::new(grid);
    let rates = coeffs.rates(&a.a);
    let mut g = vec![0.0; grid.cells() + 1];
    let mut out = vec![0.0; grid.cells()];
    coeffs.step_into(u, &rates, dt, &mut g, &mut out)?;
    Ok(out)
}
