//! Reference solutions, fine-grid oracles and refinement orders.

use std::f64::consts::PI;

use ksflux::cells::{positivity_limit, step_cells, FaceVelocity};
use ksflux::convergence::{bessel_error, observed_order, restricted_l1_difference, w_residual};
use ksflux::diagnostics::{
    blowup_constants, choose_exponents, f_m, mass_distribution, moment_phi, moment_psi, w_pde_residual, Exponents,
    MassDistribution,
};
use ksflux::integrator::StepControl;
use ksflux::model::{init_fields, InitCells, Params, RadialGrid};
use ksflux::signal::{solve_elliptic_signal, solve_elliptic_with_source, step_parabolic_signal};
use ksflux::special::bessel_i0;
use ksflux::SensitivityFn;

fn disk(cells: usize) -> RadialGrid {
    RadialGrid::new(2, 1.0, cells).unwrap()
}

#[test]
fn bessel_benchmark_is_second_order() {
    let errors: Vec<f64> = [128, 256, 512, 1024]
        .iter()
        .map(|&n| bessel_error(n).unwrap())
        .collect();
    for pair in errors.windows(2) {
        let order = observed_order(pair[0], pair[1]);
        assert!((1.8..=2.2).contains(&order), "order {order}, errors {errors:?}");
    }
}

#[test]
fn bessel_values_at_quarter_radii() {
    let mut last = [0.0; 3];
    for (level, cells) in [64usize, 128, 256].into_iter().enumerate() {
        let g = disk(cells);
        let v = solve_elliptic_signal(&g, &vec![4.0; cells], 1.0).unwrap();
        for (j, r) in [0.25, 0.5, 0.75].into_iter().enumerate() {
            // r is a face: average the two neighbouring centres
            let k = (r / g.h).round() as usize;
            let approx = 0.5 * (v[k - 1] + v[k]);
            let err = (approx - bessel_i0(2.0 * r) / bessel_i0(2.0)).abs();
            assert!(err < 2.0 * g.h * g.h, "r = {r}, N = {cells}: {err}");
            if level > 0 {
                assert!(err < last[j] / 3.0);
            }
            last[j] = err;
        }
    }
}

#[test]
fn manufactured_cosine_signal_is_second_order() {
    // v* = cos(kr), k = π/2: Δv* = −k² cos(kr) − k sin(kr)/r, boundary value 0
    let k = 0.5 * PI;
    let lap = |r: f64| {
        if r == 0.0 {
            -2.0 * k * k
        } else {
            -k * k * (k * r).cos() - k * (k * r).sin() / r
        }
    };
    let mut errors = Vec::new();
    for cells in [32usize, 64, 128, 256] {
        let g = disk(cells);
        let u: Vec<f64> = g.centers.iter().map(|r| 1.0 + r * r).collect();
        let source: Vec<f64> = g
            .centers
            .iter()
            .zip(&u)
            .map(|(r, u)| u * (k * r).cos() - lap(*r))
            .collect();
        let v = solve_elliptic_with_source(&g, &u, &source, 0.0).unwrap();
        let err = g
            .centers
            .iter()
            .zip(&v)
            .map(|(r, v)| (v - (k * r).cos()).abs())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    for pair in errors.windows(2) {
        let order = observed_order(pair[0], pair[1]);
        assert!((1.8..=2.2).contains(&order), "{errors:?}");
    }
}

#[test]
fn radial_quadrature_against_exact_integral() {
    // g(r) = Σ c_j cos(j r) with fixed pseudo-random coefficients
    let coeffs = [0.7, -1.3, 0.4, 2.1, -0.6];
    let g = |r: f64| {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * (j as f64 * r).cos())
            .sum::<f64>()
    };
    // ∫₀¹ 2π r cos(j r) dr = 2π [(cos j − 1)/j² + sin j / j]
    let exact: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| {
            if j == 0 {
                c * PI
            } else {
                let j = j as f64;
                c * 2.0 * PI * ((j.cos() - 1.0) / (j * j) + j.sin() / j)
            }
        })
        .sum();
    let err = |cells: usize| {
        let grid = disk(cells);
        let vals: Vec<f64> = grid.centers.iter().map(|&r| g(r)).collect();
        (grid.integrate(&vals).unwrap() - exact).abs()
    };
    let (coarse, fine) = (err(128), err(4096));
    assert!(coarse < 10.0 / (128.0 * 128.0));
    assert!(fine < coarse / 500.0, "{coarse} {fine}");
    assert!((grid_integral_of_centres(128) - 2.0 * PI / 3.0).abs() < 1.0 / (128.0 * 128.0));
}

fn grid_integral_of_centres(cells: usize) -> f64 {
    let grid = disk(cells);
    grid.integrate(&grid.centers).unwrap()
}

#[test]
fn gaussian_initial_mass_converges() {
    let params = Params {
        init_u: InitCells::Gaussian {
            amplitude: 10.0,
            center: 0.0,
            width: 0.2,
        },
        u0_mass: None,
        ..Params::default()
    };
    // ∫ 2π r a e^{−r²/(2σ²)} dr over (0, 1)
    let exact = 2.0 * PI * 10.0 * 0.04 * (1.0 - (-1.0f64 / 0.08).exp());
    let mass = |cells: usize| {
        let g = disk(cells);
        g.integrate(&init_fields(&params, &g).unwrap().u).unwrap()
    };
    let (m256, m4096) = (mass(256), mass(4096));
    let h = 1.0 / 256.0;
    assert!((m256 - m4096).abs() < 5.0 * h * h * exact);
    assert!((m4096 - exact).abs() < (m256 - exact).abs() / 100.0);
}

#[test]
fn tau_one_signal_relaxes_to_elliptic_solution() {
    let g = disk(64);
    let u: Vec<f64> = g.centers.iter().map(|r| 6.0 * (-r * r / 0.1).exp()).collect();
    let target = solve_elliptic_signal(&g, &u, 2.0).unwrap();
    let mut v = vec![3.0; 64];
    for _ in 0..400 {
        v = step_parabolic_signal(&g, &u, &v, 0.1, 2.0).unwrap();
    }
    let gap = v.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-6, "{gap}");
}

/// Explicit transport with a fixed drift up to `t_end`, at the largest stable step.
fn transport(cells: usize, t_end: f64) -> (RadialGrid, Vec<f64>) {
    let g = disk(cells);
    let a = FaceVelocity {
        a: g.faces.iter().map(|r| -3.0 * r * (1.0 - r)).collect(),
    };
    let mut u: Vec<f64> = g.centers.iter().map(|r| 5.0 * (-r * r / 0.05).exp()).collect();
    let dt_max = 0.45 * positivity_limit(&g, &a, None);
    let steps = (t_end / dt_max).ceil() as usize;
    let dt = t_end / steps as f64;
    for _ in 0..steps {
        u = step_cells(&g, &u, &a, dt).unwrap();
    }
    (g, u)
}

fn restrict_to(coarse: &RadialGrid, fine_grid: &RadialGrid, fine: &[f64]) -> Vec<f64> {
    let ratio = fine_grid.cells() / coarse.cells();
    (0..coarse.cells())
        .map(|i| {
            let range = i * ratio..(i + 1) * ratio;
            range.map(|j| fine[j] * fine_grid.vols[j]).sum::<f64>() / coarse.vols[i]
        })
        .collect()
}

#[test]
fn gaussian_transport_against_fine_grid() {
    let (fine_grid, fine) = transport(2048, 0.01);
    let l1 = |cells: usize| {
        let (g, u) = transport(cells, 0.01);
        let reference = restrict_to(&g, &fine_grid, &fine);
        u.iter()
            .zip(&reference)
            .zip(&g.vols)
            .map(|((a, b), v)| (a - b).abs() * v)
            .sum::<f64>()
    };
    let (e64, e128, e256) = (l1(64), l1(128), l1(256));
    assert!(observed_order(e64, e128) > 0.9, "{e64} {e128}");
    assert!(observed_order(e128, e256) > 0.9, "{e128} {e256}");
    assert!(e256 < 2.0 / 256.0);
}

#[test]
fn pairwise_restriction_agrees_with_general_restriction() {
    let (fg, fine) = transport(128, 0.002);
    let cg = disk(64);
    let coarse = restrict_to(&cg, &fg, &fine);
    assert!(restricted_l1_difference(&cg, &coarse, &fg, &fine).unwrap() < 1e-14);
}

#[test]
fn gaussian_mass_distribution_is_second_order() {
    let sigma2 = 0.04;
    let exact = |s: f64| 10.0 * sigma2 * (1.0 - (-s / (2.0 * sigma2)).exp());
    let u0 = InitCells::Gaussian {
        amplitude: 10.0,
        center: 0.0,
        width: sigma2.sqrt(),
    };
    let err = |cells: usize| {
        let g = disk(cells);
        let u: Vec<f64> = g.centers.iter().map(|&r| u0.eval(r)).collect();
        let md = mass_distribution(&g, &u).unwrap();
        md.s.iter()
            .zip(&md.w)
            .map(|(s, w)| (w - exact(*s)).abs())
            .fold(0.0, f64::max)
    };
    let e: Vec<f64> = [256, 512, 1024, 4096].iter().map(|&n| err(n)).collect();
    assert!((observed_order(e[0], e[1]) - 2.0).abs() < 0.1, "{e:?}");
    assert!((observed_order(e[1], e[2]) - 2.0).abs() < 0.1, "{e:?}");
    assert!(e[3] < e[0] / 200.0);
}

#[test]
fn phi_of_gaussian_against_finer_grid() {
    let exps = choose_exponents(-1.0).unwrap();
    let u0 = InitCells::Gaussian {
        amplitude: 10.0,
        center: 0.0,
        width: 0.2,
    };
    let phi = |cells: usize| {
        let g = disk(cells);
        let u: Vec<f64> = g.centers.iter().map(|&r| u0.eval(r)).collect();
        moment_phi(&mass_distribution(&g, &u).unwrap(), exps.gamma).unwrap()
    };
    let (coarse, fine) = (phi(256), phi(2560));
    assert!(((coarse - fine) / fine).abs() <= 1e-4, "{coarse} {fine}");
}

#[test]
fn psi_of_identity_against_trapezoid_rule() {
    let e = Exponents {
        alpha: -1.0,
        delta: 1.0 / 6.0,
        gamma: 1.0 / 12.0,
    };
    let cells = 50;
    let s: Vec<f64> = (0..=cells).map(|k| k as f64 / cells as f64).collect();
    let md = MassDistribution::from_nodes(s.clone(), s).unwrap();
    let psi = moment_psi(&md, &e).unwrap();
    // composite trapezoid of s^(29/12) with Richardson extrapolation
    let trap = |n: usize| {
        let h = 1.0 / n as f64;
        (1..n).map(|k| (k as f64 * h).powf(29.0 / 12.0)).sum::<f64>() * h + 0.5 * h
    };
    let reference = (4.0 * trap(20_000) - trap(10_000)) / 3.0;
    assert!((psi - reference).abs() < 1e-9, "{psi} {reference}");
    assert!((psi - 12.0 / 41.0).abs() < 1e-12);
}

#[test]
fn manufactured_w_balances_exactly() {
    // w = t s needs f(v_r²) v_r = √s / (2t); with α = 0, κ = 1 that is v_r = r/(2t).
    let f = SensitivityFn::new(0.0, 1.0);
    let g = disk(64);
    let s: Vec<f64> = g.faces.iter().map(|r| r * r).collect();
    let (t, dt) = (0.7, 1e-3);
    let at = |t: f64| MassDistribution::from_nodes(s.clone(), s.iter().map(|s| t * s).collect()).unwrap();
    let vr: Vec<f64> = g.faces.iter().map(|r| r / (2.0 * t)).collect();
    let res = w_pde_residual(&at(t), &at(t + dt), dt, &vr, &f).unwrap();
    assert!(res < 1e-12, "{res}");
    // w = (1 + t) s² with the matching drift
    let at = |t: f64| MassDistribution::from_nodes(s.clone(), s.iter().map(|s| (1.0 + t) * s * s).collect()).unwrap();
    let vr: Vec<f64> = s
        .iter()
        .map(|&s| {
            if s == 0.0 {
                0.0
            } else {
                (s * s - 8.0 * s * (1.0 + t)) / (4.0 * (1.0 + t) * s.powf(1.5))
            }
        })
        .collect();
    let res = w_pde_residual(&at(t), &at(t + dt), dt, &vr, &f).unwrap();
    assert!(res < 1e-9, "{res}");
}

#[test]
fn w_residual_decays_under_refinement() {
    let params = Params {
        alpha: 0.5,
        boundary_signal: 2.0,
        ..Params::default()
    };
    let control = StepControl::default();
    let span = 2e-3;
    let r: Vec<f64> = [64usize, 128, 256]
        .iter()
        .enumerate()
        .map(|(level, &cells)| w_residual(&params, &control, cells, span / (1 << level) as f64).unwrap())
        .collect();
    assert!(r[0] / r[1] >= 1.5 && r[1] / r[2] >= 1.5, "{r:?}");
}

#[test]
fn mstar_against_dense_scan() {
    for (alpha, mass) in [(-1.0, 10.0), (-0.5, 3.0), (-2.0, 1.0)] {
        let exps = choose_exponents(alpha).unwrap();
        let params = Params {
            alpha,
            ..Params::default()
        };
        let c = blowup_constants(&params, &exps, mass, 0.8).unwrap();
        let (p, q) = (exps.p(), exps.q());
        // required M^(1−2α) = sup_{z ≥ C₄₄} 2C₄₀² (z^(1/p) + 1)(1 + z^(q/p)) / z, dense log scan
        let mut sup = 0.0f64;
        for i in 0..=200_000 {
            let z = c.c44 * 10f64.powf(i as f64 * 1e-4);
            sup = sup.max(2.0 * c.c40 * c.c40 * (z.powf(1.0 / p) + 1.0) * (1.0 + z.powf(q / p)) / z);
        }
        let mstar = sup.powf(1.0 / q);
        assert!(
            ((c.mstar - mstar) / mstar).abs() < 1e-6,
            "α = {alpha}: {} vs {mstar}",
            c.mstar
        );
        assert!(f_m(&exps, c.c40, c.mstar * (1.0 + 1e-6), c.c44) >= 0.0);
    }
}
