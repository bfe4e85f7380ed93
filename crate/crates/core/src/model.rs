//! Parameters, sensitivity function, radial grid and initial data.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

use crate::error::{check_len, Error, Result};
use crate::signal;

/// Whether the signal equation is quasi-static (`τ = 0`) or evolves in time (`τ = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tau {
    Elliptic,
    Parabolic,
}

impl Tau {
    pub fn from_int(tau: i64) -> Result<Self> {
        match tau {
            0 => Ok(Tau::Elliptic),
            1 => Ok(Tau::Parabolic),
            other => Err(Error::Config(format!("tau must be 0 or 1, got {other}"))),
        }
    }

    pub fn as_int(self) -> u8 {
        match self {
            Tau::Elliptic => 0,
            Tau::Parabolic => 1,
        }
    }
}

/// Initial cell density profile in the radial variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitCells {
    Constant {
        value: f64,
    },
    /// `amplitude · exp(−(r − center)² / (2 width²))`
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Compactly supported annulus `amplitude · (1 − ((r − r0)/width)²)²` for `|r − r0| < width`.
    Ring {
        amplitude: f64,
        r0: f64,
        width: f64,
    },
}

impl InitCells {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            InitCells::Constant { value } => value,
            InitCells::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let z = (r - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            InitCells::Ring { amplitude, r0, width } => {
                let z = (r - r0) / width;
                if z.abs() < 1.0 {
                    let q = 1.0 - z * z;
                    amplitude * q * q
                } else {
                    0.0
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            InitCells::Constant { value } => value.is_finite() && value >= 0.0,
            InitCells::Gaussian {
                amplitude,
                center,
                width,
            }
            | InitCells::Ring {
                amplitude,
                r0: center,
                width,
            } => amplitude.is_finite() && amplitude >= 0.0 && center.is_finite() && width.is_finite() && width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("inadmissible initial density {self}")))
        }
    }
}

impl fmt::Display for InitCells {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InitCells::Constant { value } => write!(f, "constant({value})"),
            InitCells::Gaussian {
                amplitude,
                center,
                width,
            } => {
                write!(f, "gaussian({amplitude},{center},{width})")
            }
            InitCells::Ring { amplitude, r0, width } => write!(f, "ring({amplitude},{r0},{width})"),
        }
    }
}

/// Initial signal for `τ = 1`: `v₀(r) = M + amplitude · (1 − (r/R)²)`.
///
/// `Uniform` is the default `v₀ ≡ M`. Both forms equal `M` at `r = R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitSignal {
    Uniform,
    Quadratic { amplitude: f64 },
}

impl InitSignal {
    pub fn eval(&self, r: f64, radius: f64, boundary: f64) -> f64 {
        match *self {
            InitSignal::Uniform => boundary,
            InitSignal::Quadratic { amplitude } => {
                let x = r / radius;
                boundary + amplitude * (1.0 - x * x)
            }
        }
    }
}

impl fmt::Display for InitSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InitSignal::Uniform => write!(f, "uniform"),
            InitSignal::Quadratic { amplitude } => write!(f, "quadratic({amplitude})"),
        }
    }
}

/// Physical and model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Spatial dimension.
    pub n: usize,
    /// Ball radius `R`.
    pub radius: f64,
    pub tau: Tau,
    /// Sensitivity exponent `α`.
    pub alpha: f64,
    /// Sensitivity coefficient `κ`.
    pub kappa: f64,
    /// Boundary signal level `M`.
    pub boundary_signal: f64,
    pub init_u: InitCells,
    /// When set, the initial density is rescaled to this discrete mass.
    pub u0_mass: Option<f64>,
    pub init_v: InitSignal,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: 2,
            radius: 1.0,
            tau: Tau::Elliptic,
            alpha: 0.0,
            kappa: 1.0,
            boundary_signal: 1.0,
            init_u: InitCells::Gaussian {
                amplitude: 1.0,
                center: 0.0,
                width: 0.2,
            },
            u0_mass: Some(10.0),
            init_v: InitSignal::Uniform,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("dimension n must be at least 1".into()));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::Config(format!("radius must be positive, got {}", self.radius)));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::Config(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !self.alpha.is_finite() {
            return Err(Error::Config("alpha must be finite".into()));
        }
        if !(self.boundary_signal.is_finite() && self.boundary_signal >= 0.0) {
            return Err(Error::Config(format!(
                "boundary signal M must be nonnegative, got {}",
                self.boundary_signal
            )));
        }
        if let Some(m) = self.u0_mass {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::Config(format!("target mass must be positive, got {m}")));
            }
        }
        self.init_u.validate()?;
        if self.tau == Tau::Parabolic {
            if self.boundary_signal <= 0.0 {
                return Err(Error::Config(
                    "tau=1 requires a positive initial signal, so M > 0".into(),
                ));
            }
            if let InitSignal::Quadratic { amplitude } = self.init_v {
                if !amplitude.is_finite() || self.boundary_signal + amplitude <= 0.0 {
                    return Err(Error::Config(format!(
                        "initial signal {} is not positive on the ball",
                        self.init_v
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sensitivity(&self) -> SensitivityFn {
        SensitivityFn::new(self.alpha, self.kappa)
    }

    /// `|B_R| = ω_n Rⁿ / n`.
    pub fn domain_volume(&self) -> f64 {
        unit_sphere_area(self.n) * self.radius.powi(self.n as i32) / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PowerKind {
    Constant,
    Integer(i32),
    /// `(1+ξ)^(k + 1/2)`
    HalfInteger(i32),
    General(f64),
}

/// Prototype sensitivity `f(ξ) = κ (1 + ξ)^(−α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityFn {
    pub alpha: f64,
    pub kappa: f64,
    power: PowerKind,
}

impl SensitivityFn {
    pub fn new(alpha: f64, kappa: f64) -> Self {
        let e = -alpha;
        let power = if e == 0.0 {
            PowerKind::Constant
        } else if e.fract() == 0.0 && e.abs() < 64.0 {
            PowerKind::Integer(e as i32)
        } else if (e - 0.5).fract() == 0.0 && e.abs() < 64.0 {
            PowerKind::HalfInteger((e - 0.5) as i32)
        } else {
            PowerKind::General(e)
        };
        SensitivityFn { alpha, kappa, power }
    }

    /// Evaluates `f(ξ)`, rejecting negative or non-finite arguments.
    pub fn eval(&self, xi: f64) -> Result<f64> {
        if !xi.is_finite() || xi < 0.0 {
            return Err(Error::Domain(format!(
                "sensitivity argument must be finite and >= 0, got {xi}"
            )));
        }
        Ok(self.eval_unchecked(xi))
    }

    /// Hot-loop variant of [`SensitivityFn::eval`]; the caller guarantees `ξ ≥ 0`.
    #[inline]
    pub fn eval_unchecked(&self, xi: f64) -> f64 {
        let b = 1.0 + xi;
        let p = match self.power {
            PowerKind::Constant => 1.0,
            PowerKind::Integer(1) => b,
            PowerKind::Integer(2) => b * b,
            PowerKind::Integer(k) => b.powi(k),
            PowerKind::HalfInteger(k) => b.powi(k) * b.sqrt(),
            PowerKind::General(e) => b.powf(e),
        };
        self.kappa * p
    }
}

/// Surface measure `ω_n = 2π^(n/2)/Γ(n/2)` of the unit sphere in `ℝⁿ`.
///
/// Evaluated through `ω_(n+2) = 2π ω_n / n`, exact for the seeds `ω₁ = 2`, `ω₂ = 2π`.
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => 2.0 * PI * unit_sphere_area(n - 2) / (n - 2) as f64,
    }
}

/// Uniform cell-centred radial mesh on `[0, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub n: usize,
    pub radius: f64,
    pub h: f64,
    /// `N + 1` face radii, `faces[0] = 0`, `faces[N] = R`.
    pub faces: Vec<f64>,
    pub centers: Vec<f64>,
    /// `ω_n ∫ r^(n−1) dr` over each cell.
    pub vols: Vec<f64>,
    /// `ω_n r^(n−1)` at each face.
    pub areas: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n: usize, radius: f64, cells: usize) -> Result<Self> {
        if cells < 4 {
            return Err(Error::Config(format!("grid needs at least 4 cells, got {cells}")));
        }
        Self::build(n, radius, cells)
    }

    /// Same construction without the lower bound on the cell count.
    pub(crate) fn build(n: usize, radius: f64, cells: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Config("dimension n must be at least 1".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Config(format!("radius must be positive, got {radius}")));
        }
        if cells == 0 {
            return Err(Error::Config("grid needs at least one cell".into()));
        }
        let h = radius / cells as f64;
        let mut faces: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
        faces[cells] = radius;
        let centers = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let omega = unit_sphere_area(n);
        let nn = n as i32;
        let vols = faces
            .windows(2)
            .map(|w| omega * (w[1].powi(nn) - w[0].powi(nn)) / n as f64)
            .collect();
        let areas = faces.iter().map(|&r| omega * r.powi(nn - 1)).collect();
        Ok(RadialGrid {
            n,
            radius,
            h,
            faces,
            centers,
            vols,
            areas,
        })
    }

    pub fn cells(&self) -> usize {
        self.centers.len()
    }

    /// Discrete `∫_Ω g dx` for cell values `g`.
    pub fn integrate(&self, g: &[f64]) -> Result<f64> {
        check_len(self.cells(), g.len())?;
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("integrand"));
        }
        Ok(self.integrate_unchecked(g))
    }

    #[inline]
    pub fn integrate_unchecked(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.vols).map(|(g, v)| g * v).sum()
    }

    pub fn total_volume(&self) -> f64 {
        self.vols.iter().sum()
    }
}

/// Discrete state at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Fields {
    /// Cell density at cell centres.
    pub u: Vec<f64>,
    /// Signal at cell centres.
    pub v: Vec<f64>,
    /// Radial signal gradient at faces, `vr[0] = 0`.
    pub vr: Vec<f64>,
    pub t: f64,
}

/// Builds the initial state. For `τ = 0` the signal is obtained from an
/// elliptic solve against `u₀`.
pub fn init_fields(params: &Params, grid: &RadialGrid) -> Result<Fields> {
    params.validate()?;
    if grid.n != params.n || grid.radius != params.radius {
        return Err(Error::Config("grid geometry does not match parameters".into()));
    }
    let mut u: Vec<f64> = grid.centers.iter().map(|&r| params.init_u.eval(r)).collect();
    if u.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Config("initial density must be finite and nonnegative".into()));
    }
    let mass = grid.integrate_unchecked(&u);
    if mass <= 0.0 {
        return Err(Error::Config("initial density vanishes identically (u0 ≡ 0)".into()));
    }
    if let Some(target) = params.u0_mass {
        let scale = target / mass;
        u.iter_mut().for_each(|x| *x *= scale);
    }
    let m = params.boundary_signal;
    let v = match params.tau {
        Tau::Elliptic => signal::solve_elliptic_signal(grid, &u, m)?,
        Tau::Parabolic => grid
            .centers
            .iter()
            .map(|&r| params.init_v.eval(r, params.radius, m))
            .collect(),
    };
    let vr = signal::gradient_radial(grid, &v, m)?;
    Ok(Fields { u, v, vr, t: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensitivity_examples() {
        assert_eq!(SensitivityFn::new(1.0, 1.0).eval(0.0).unwrap(), 1.0);
        assert_eq!(SensitivityFn::new(1.0, 1.0).eval(3.0).unwrap(), 0.25);
        assert_eq!(SensitivityFn::new(-1.0, 2.0).eval(1.0).unwrap(), 4.0);
    }

    #[test]
    fn sensitivity_fast_paths_agree_with_powf() {
        for alpha in [0.0, 0.5, -0.5, 1.0, -1.0, 2.5, -3.0, 0.3, -0.7] {
            let f = SensitivityFn::new(alpha, 1.7);
            for xi in [0.0, 0.1, 1.0, 7.5, 1e4] {
                let want = 1.7 * (1.0f64 + xi).powf(-alpha);
                let got = f.eval(xi).unwrap();
                assert!((got - want).abs() <= 1e-14 * want, "alpha={alpha} xi={xi}");
            }
        }
    }

    #[test]
    fn sensitivity_rejects_bad_arguments() {
        let f = SensitivityFn::new(0.5, 1.0);
        assert!(f.eval(-1e-3).is_err());
        assert!(f.eval(f64::NAN).is_err());
        assert!(f.eval(f64::INFINITY).is_err());
    }

    #[test]
    fn sensitivity_is_c2_on_test_points() {
        for alpha in [-2.0, -1.0, -0.3, 0.5, 1.0] {
            let f = SensitivityFn::new(alpha, 1.0);
            let eps = 1e-4;
            for xi in [0.0, 0.5, 2.0, 10.0] {
                let x = xi + eps;
                let d2 = (f.eval(x + eps).unwrap() - 2.0 * f.eval(x).unwrap() + f.eval(x - eps).unwrap()) / (eps * eps);
                let exact = alpha * (alpha + 1.0) * (1.0 + x).powf(-alpha - 2.0);
                assert!(f.eval(xi).unwrap() > 0.0);
                assert!((d2 - exact).abs() < 1e-4 * (1.0 + exact.abs()), "alpha={alpha} xi={xi}");
            }
        }
    }

    #[test]
    fn sensitivity_monotonicity_follows_sign_of_alpha() {
        for (alpha, nonincreasing) in [(0.5, true), (0.0, true), (-0.5, false)] {
            let f = SensitivityFn::new(alpha, 1.0);
            let a = f.eval(1.0).unwrap();
            let b = f.eval(2.0).unwrap();
            assert_eq!(b <= a, nonincreasing);
        }
    }

    #[test]
    fn sphere_areas() {
        assert_eq!(unit_sphere_area(1), 2.0);
        assert_eq!(unit_sphere_area(2), 2.0 * PI);
        assert_eq!(unit_sphere_area(3), 4.0 * PI);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn single_cell_disk_volume_is_pi() {
        let g = RadialGrid::build(2, 1.0, 1).unwrap();
        assert!((g.vols[0] - PI).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_too_few_cells() {
        assert!(matches!(RadialGrid::new(2, 1.0, 3), Err(Error::Config(_))));
    }

    #[test]
    fn grid_volumes_match_ball_volume() {
        let cases = [(2usize, 1.0, 64usize, PI), (3, 2.0, 32, 32.0 * PI / 3.0)];
        for (n, r, cells, want) in cases {
            let g = RadialGrid::new(n, r, cells).unwrap();
            assert!((g.total_volume() - want).abs() < 1e-12 * want);
            assert_eq!(g.faces[0], 0.0);
            assert_eq!(*g.faces.last().unwrap(), r);
            assert!(g.faces.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn integrate_examples() {
        let g = RadialGrid::new(2, 1.0, 256).unwrap();
        let ones = vec![1.0; 256];
        assert!((g.integrate(&ones).unwrap() - PI).abs() < 1e-12);
        let lin = g.centers.clone();
        let got = g.integrate(&lin).unwrap();
        assert!((got - 2.0 * PI / 3.0).abs() < 2.0 * g.h * g.h);
        assert!(matches!(g.integrate(&ones[..10]), Err(Error::Shape { .. })));
    }

    #[test]
    fn init_constant_has_disk_mass() {
        let p = Params {
            init_u: InitCells::Constant { value: 1.0 },
            u0_mass: None,
            boundary_signal: 0.0,
            ..Params::default()
        };
        let g = RadialGrid::new(2, 1.0, 128).unwrap();
        let f = init_fields(&p, &g).unwrap();
        assert!((g.integrate(&f.u).unwrap() - PI).abs() < 1e-12);
        assert_eq!(f.vr[0], 0.0);
    }

    #[test]
    fn init_rejects_zero_density() {
        let p = Params {
            init_u: InitCells::Gaussian {
                amplitude: 0.0,
                center: 0.0,
                width: 0.2,
            },
            u0_mass: None,
            ..Params::default()
        };
        let g = RadialGrid::new(2, 1.0, 64).unwrap();
        assert!(matches!(init_fields(&p, &g), Err(Error::Config(_))));
    }

    #[test]
    fn init_rescales_to_target_mass() {
        let p = Params {
            u0_mass: Some(10.0),
            ..Params::default()
        };
        let g = RadialGrid::new(2, 1.0, 128).unwrap();
        let f = init_fields(&p, &g).unwrap();
        assert!((g.integrate(&f.u).unwrap() - 10.0).abs() < 1e-12);
        assert!(f.u.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn parabolic_signal_starts_at_descriptor() {
        let p = Params {
            tau: Tau::Parabolic,
            boundary_signal: 2.0,
            init_v: InitSignal::Quadratic { amplitude: -1.0 },
            ..Params::default()
        };
        let g = RadialGrid::new(2, 1.0, 64).unwrap();
        let f = init_fields(&p, &g).unwrap();
        assert!(f.v.iter().all(|&v| v > 0.0 && v <= 2.0));
        let last = *f.v.last().unwrap();
        assert!((last - 2.0).abs() < 2.0 * g.h);
    }

    #[test]
    fn parabolic_requires_positive_signal() {
        let p = Params {
            tau: Tau::Parabolic,
            boundary_signal: 0.0,
            ..Params::default()
        };
        assert!(p.validate().is_err());
        let p = Params {
            tau: Tau::Parabolic,
            boundary_signal: 1.0,
            init_v: InitSignal::Quadratic { amplitude: -1.0 },
            ..Params::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn tau_from_int() {
        assert_eq!(Tau::from_int(0).unwrap(), Tau::Elliptic);
        assert_eq!(Tau::from_int(1).unwrap(), Tau::Parabolic);
        assert!(Tau::from_int(2).is_err());
    }
}
