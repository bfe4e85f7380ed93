//! Signal equation `τ v_t = Δv − u v` with `v(R) = M` and `v_r(0) = 0`.
//!
//! Both solvers use the conservative face-flux form of the radial Laplacian,
//! `(1/V_i)[A_{i+1/2} (v_{i+1} − v_i)/h − A_{i−1/2} (v_i − v_{i−1})/h]`, with the
//! flux through `r = 0` set to zero and the Dirichlet value imposed through the
//! ghost value `2M − v_{N−1}`.

use crate::error::{check_len, Error, Result};
use crate::model::RadialGrid;

/// Face couplings of the flux-form Laplacian and scratch space for the
/// Thomas sweep, reusable across steps on one grid.
///
/// Row `i` of the operator reads
/// `−c_i v_{i−1} + (c_i + c_{i+1} + V_i u_i) v_i − c_{i+1} v_{i+1} = b_i`
/// with `c_0 = 0`, `c_k = A_k/h` inside and `c_N = 2A_N/h` (ghost value
/// `2M − v_{N−1}`), so `b_{N−1}` carries `c_N M`.
#[derive(Debug, Clone)]
pub struct SignalWorkspace {
    coupling: Vec<f64>,
    scratch: Vec<f64>,
}

impl SignalWorkspace {
    pub fn new(grid: &RadialGrid) -> Self {
        let n = grid.cells();
        let mut coupling: Vec<f64> = grid.areas.iter().map(|a| a / grid.h).collect();
        coupling[0] = 0.0;
        coupling[n] *= 2.0;
        SignalWorkspace {
            coupling,
            scratch: vec![0.0; n],
        }
    }

    /// Solves `(L + diag(V u) + diag(V)·shift) v = c_N M e_{N−1} + V·λx` for `extra = (x, λ)`.
    pub(crate) fn solve_into(
        &mut self,
        grid: &RadialGrid,
        u: &[f64],
        m: f64,
        shift: f64,
        extra: Option<(&[f64], f64)>,
        out: &mut [f64],
    ) -> Result<()> {
        let n = grid.cells();
        let (x, scale) = extra.unwrap_or((u, 0.0));
        let c = &self.coupling[..n + 1];
        let sup = &mut self.scratch[..n];
        let (u, x, vols, out) = (&u[..n], &x[..n], &grid.vols[..n], &mut out[..n]);
        // forward sweep, storing −c_{i+1}/den_i and the partial solution
        let mut prev_sup = 0.0;
        let mut prev_d = 0.0;
        let mut inv = 0.0;
        let mut min_den = f64::INFINITY;
        for i in 0..n {
            let diag = c[i] + c[i + 1] + vols[i] * (u[i] + shift);
            let den = diag + c[i] * prev_sup;
            min_den = min_den.min(den);
            inv = 1.0 / den;
            prev_sup = -c[i + 1] * inv;
            prev_d = (vols[i] * scale * x[i] + c[i] * prev_d) * inv;
            sup[i] = prev_sup;
            out[i] = prev_d;
        }
        // boundary data enters the last row only
        out[n - 1] += c[n] * m * inv;
        if !(min_den > 0.0 && min_den.is_finite()) {
            return Err(Error::Domain("singular signal system".into()));
        }
        for i in (0..n - 1).rev() {
            out[i] -= sup[i] * out[i + 1];
        }
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("signal solve"));
        }
        Ok(())
    }

    /// Elliptic solve into `out`; see [`solve_elliptic_signal`].
    pub fn elliptic_into(&mut self, grid: &RadialGrid, u: &[f64], m: f64, out: &mut [f64]) -> Result<()> {
        self.solve_into(grid, u, m, 0.0, None, out)
    }

    /// Backward-Euler step into `out`; see [`step_parabolic_signal`].
    pub fn parabolic_into(
        &mut self,
        grid: &RadialGrid,
        u: &[f64],
        v_old: &[f64],
        dt: f64,
        m: f64,
        out: &mut [f64],
    ) -> Result<()> {
        let inv_dt = 1.0 / dt;
        self.solve_into(grid, u, m, inv_dt, Some((v_old, inv_dt)), out)
    }
}

fn check_density(grid: &RadialGrid, u: &[f64]) -> Result<()> {
    check_len(grid.cells(), u.len())?;
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("cell density"));
    }
    if u.iter().any(|&x| x < 0.0) {
        return Err(Error::Domain("cell density must be nonnegative".into()));
    }
    Ok(())
}

/// Solves `0 = Δv − u v`, `v(R) = M`.
///
/// The system is an M-matrix, so the result satisfies `0 ≤ v ≤ M` and is
/// nondecreasing in `r`.
pub fn solve_elliptic_signal(grid: &RadialGrid, u: &[f64], m: f64) -> Result<Vec<f64>> {
    check_density(grid, u)?;
    if !m.is_finite() {
        return Err(Error::NonFinite("boundary signal"));
    }
    let mut v = vec![0.0; grid.cells()];
    SignalWorkspace::new(grid).elliptic_into(grid, u, m, &mut v)?;
    Ok(v)
}

/// Same as [`solve_elliptic_signal`] with an additional source: solves
/// `Δv − u v = −source` in flux form. Used by manufactured-solution studies.
pub fn solve_elliptic_with_source(grid: &RadialGrid, u: &[f64], source: &[f64], m: f64) -> Result<Vec<f64>> {
    check_density(grid, u)?;
    check_len(grid.cells(), source.len())?;
    let mut v = vec![0.0; grid.cells()];
    SignalWorkspace::new(grid).solve_into(grid, u, m, 0.0, Some((source, 1.0)), &mut v)?;
    Ok(v)
}

/// One backward-Euler step of `v_t = Δv − u v` with `u` frozen over the step:
/// `(I − dt Δ_h + dt diag(u)) v_new = v_old`.
pub fn step_parabolic_signal(grid: &RadialGrid, u: &[f64], v_old: &[f64], dt: f64, m: f64) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    check_density(grid, u)?;
    check_len(grid.cells(), v_old.len())?;
    let mut v = vec![0.0; grid.cells()];
    SignalWorkspace::new(grid).parabolic_into(grid, u, v_old, dt, m, &mut v)?;
    Ok(v)
}

/// Radial gradient at faces: zero at `r = 0`, central differences inside,
/// and the second-order one-sided formula `(8M − 9v_{N−1} + v_{N−2})/(3h)` at `r = R`.
pub fn gradient_radial(grid: &RadialGrid, v: &[f64], m: f64) -> Result<Vec<f64>> {
    let n = grid.cells();
    check_len(n, v.len())?;
    let mut vr = vec![0.0; n + 1];
    gradient_into(grid, v, m, &mut vr);
    Ok(vr)
}

pub(crate) fn gradient_into(grid: &RadialGrid, v: &[f64], m: f64, vr: &mut [f64]) {
    let n = grid.cells();
    let inv_h = 1.0 / grid.h;
    vr[0] = 0.0;
    for i in 1..n {
        vr[i] = (v[i] - v[i - 1]) * inv_h;
    }
    vr[n] = if n >= 2 {
        (8.0 * m - 9.0 * v[n - 1] + v[n - 2]) / (3.0 * grid.h)
    } else {
        2.0 * (m - v[0]) * inv_h
    };
}
