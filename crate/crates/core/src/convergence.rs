//! Grid-refinement studies: benchmark errors at a sequence of resolutions
//! and the observed orders between consecutive levels.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{mass_distribution, w_pde_residual};
use crate::error::{Error, Result};
use crate::integrator::{run_simulation_observed, StepControl, Stepper, StopReason};
use crate::model::{init_fields, Params, RadialGrid};
use crate::signal::{gradient_radial, solve_elliptic_signal};
use crate::special::bessel_i0;

/// `log₂(coarse/fine)`; NaN when either error is not positive and finite.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    if coarse > 0.0 && fine > 0.0 && coarse.is_finite() && fine.is_finite() {
        (coarse / fine).log2()
    } else {
        f64::NAN
    }
}

/// Max-norm error of the elliptic solve for `u ≡ 4`, `M = 1` on the unit
/// disk against `v(r) = I₀(2r)/I₀(2)`.
pub fn bessel_error(cells: usize) -> Result<f64> {
    let grid = RadialGrid::new(2, 1.0, cells)?;
    let v = solve_elliptic_signal(&grid, &vec![4.0; cells], 1.0)?;
    let scale = bessel_i0(2.0);
    Ok(grid
        .centers
        .iter()
        .zip(&v)
        .map(|(r, v)| (v - bessel_i0(2.0 * r) / scale).abs())
        .fold(0.0, f64::max))
}

/// Max-norm error of [`gradient_radial`] on `v = cosh r` (so `M = cosh R`)
/// over all faces of the unit disk.
pub fn gradient_error(cells: usize) -> Result<f64> {
    let grid = RadialGrid::new(2, 1.0, cells)?;
    let v: Vec<f64> = grid.centers.iter().map(|r| r.cosh()).collect();
    let vr = gradient_radial(&grid, &v, 1f64.cosh())?;
    Ok(grid
        .faces
        .iter()
        .zip(&vr)
        .map(|(r, g)| (g - r.sinh()).abs())
        .fold(0.0, f64::max))
}

/// Residual of the `w` equation between `t = 0` and `t = span`, computed on a
/// trajectory of `params` with `cells` cells.
pub fn w_residual(params: &Params, control: &StepControl, cells: usize, span: f64) -> Result<f64> {
    if params.n != 2 {
        return Err(Error::Unsupported("the w equation is stated for n = 2".into()));
    }
    let grid = RadialGrid::new(2, params.radius, cells)?;
    let mut fields = init_fields(params, &grid)?;
    let before = mass_distribution(&grid, &fields.u)?;
    let vr = fields.vr.clone();
    let mass = grid.integrate(&fields.u)?;
    let control = StepControl {
        t_end: span,
        ..control.clone()
    }
    .resolved(&grid, mass);
    let mut stepper = Stepper::new(params, &grid);
    while fields.t < span {
        stepper.advance(&mut fields, &control)?;
    }
    let after = mass_distribution(&grid, &fields.u)?;
    w_pde_residual(&before, &after, span, &vr, &params.sensitivity())
}

/// Density at `control.t_end`, or `None` if the run stopped earlier.
pub fn final_density(params: &Params, control: &StepControl, cells: usize) -> Result<Option<Vec<f64>>> {
    let grid = RadialGrid::new(params.n, params.radius, cells)?;
    let mut last = Vec::new();
    let result = run_simulation_observed(params, &grid, control, |_, f| last.clone_from(&f.u))?;
    Ok((result.stop == StopReason::ReachedEnd).then_some(last))
}

/// `∫ |u_coarse − P u_fine|` where `P` averages pairs of fine cells.
pub fn restricted_l1_difference(
    coarse_grid: &RadialGrid,
    coarse: &[f64],
    fine_grid: &RadialGrid,
    fine: &[f64],
) -> Result<f64> {
    if fine_grid.cells() != 2 * coarse_grid.cells()
        || fine.len() != fine_grid.cells()
        || coarse.len() != coarse_grid.cells()
    {
        return Err(Error::Shape {
            expected: 2 * coarse.len(),
            got: fine.len(),
        });
    }
    let mut total = 0.0;
    for (i, (&u, &vol)) in coarse.iter().zip(&coarse_grid.vols).enumerate() {
        let (a, b) = (2 * i, 2 * i + 1);
        let avg = (fine[a] * fine_grid.vols[a] + fine[b] * fine_grid.vols[b]) / vol;
        total += (u - avg).abs() * vol;
    }
    Ok(total)
}

/// One resolution of [`convergence_study`]. Orders compare with the
/// previous level and are NaN on the first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub bessel_error: f64,
    pub bessel_order: f64,
    pub gradient_error: f64,
    pub gradient_order: f64,
    pub w_residual: f64,
    pub w_order: f64,
    /// `∫|u_N − P u_2N|` at `t_end`, NaN on the finest level or when a run stops early.
    pub self_difference: f64,
}

/// Runs the benchmarks at `N, 2N, …, 2^(levels−1) N`.
///
/// The `w` residual is taken over a window proportional to `h`: 25 pure
/// diffusion steps of the base grid at the first level, halved at each
/// refinement, so its expected order is at least one.
pub fn convergence_study(
    params: &Params,
    control: &StepControl,
    base_cells: usize,
    levels: usize,
) -> Result<Vec<ConvergenceRow>> {
    if levels < 3 {
        return Err(Error::Config(format!(
            "a convergence study needs at least 3 levels, got {levels}"
        )));
    }
    let base = RadialGrid::new(params.n, params.radius, base_cells)?;
    let window = 25.0 * control.auto_dt_min(&base) / crate::integrator::AUTO_DT_MIN_RATIO;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    let mut densities = Vec::with_capacity(levels);
    for level in 0..levels {
        let cells = base_cells << level;
        let span = window / (1 << level) as f64;
        let w = if params.n == 2 {
            w_residual(params, control, cells, span).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let row = ConvergenceRow {
            cells,
            bessel_error: bessel_error(cells)?,
            bessel_order: f64::NAN,
            gradient_error: gradient_error(cells)?,
            gradient_order: f64::NAN,
            w_residual: w,
            w_order: f64::NAN,
            self_difference: f64::NAN,
        };
        let row = match rows.last() {
            Some(prev) => ConvergenceRow {
                bessel_order: observed_order(prev.bessel_error, row.bessel_error),
                gradient_order: observed_order(prev.gradient_error, row.gradient_error),
                w_order: observed_order(prev.w_residual, row.w_residual),
                ..row
            },
            None => row,
        };
        rows.push(row);
        densities.push(final_density(params, control, cells)?);
    }
    for level in 0..levels - 1 {
        if let (Some(c), Some(f)) = (&densities[level], &densities[level + 1]) {
            let cg = RadialGrid::new(params.n, params.radius, rows[level].cells)?;
            let fg = RadialGrid::new(params.n, params.radius, rows[level + 1].cells)?;
            rows[level].self_difference = restricted_l1_difference(&cg, c, &fg, f)?;
        }
    }
    Ok(rows)
}
