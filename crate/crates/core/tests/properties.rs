//! Randomised invariants of the discrete operators and diagnostics.

use proptest::prelude::*;

use ksflux::cells::{bernoulli, positivity_limit, step_cells, step_cells_implicit, FaceVelocity};
use ksflux::diagnostics::{
    blowup_constants, check_holder_chain, choose_exponents, f_m, moment_phi, moment_psi, MassDistribution,
};
use ksflux::integrator::{select_dt, StepControl};
use ksflux::model::{init_fields, unit_sphere_area, InitCells, Params, RadialGrid};
use ksflux::signal::{solve_elliptic_signal, step_parabolic_signal};
use ksflux::SensitivityFn;

fn density(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..50.0, 0.0..1e-6], len)
}

fn drift(faces: usize, scale: f64) -> impl Strategy<Value = FaceVelocity> {
    prop::collection::vec(-scale..scale, faces).prop_map(|mut a| {
        a[0] = 0.0;
        *a.last_mut().unwrap() = 0.0;
        FaceVelocity { a }
    })
}

fn grid_and_density() -> impl Strategy<Value = (RadialGrid, Vec<f64>)> {
    (1usize..=3, 4usize..96).prop_flat_map(|(n, cells)| {
        (
            Just(RadialGrid::new(n, 1.0 + n as f64 * 0.25, cells).unwrap()),
            density(cells),
        )
    })
}

/// Random nondecreasing `w` with `w(0) = 0` and `w(R²) = top` on a random increasing `s` grid.
fn monotone_w() -> impl Strategy<Value = MassDistribution> {
    (
        prop::collection::vec(0.01f64..1.0, 8..64),
        prop::collection::vec(0.0f64..3.0, 64),
        0.5f64..2.0,
        0.01f64..3.0,
    )
        .prop_map(|(ds, mut dw, radius, top)| {
            dw[0] += 1e-3;
            let total: f64 = ds.iter().sum();
            let mut s = vec![0.0];
            let mut w = vec![0.0];
            for (k, d) in ds.iter().enumerate() {
                s.push(s[k] + d * radius * radius / total);
                w.push(w[k] + dw[k] * d);
            }
            *s.last_mut().unwrap() = radius * radius;
            let scale = top / w.last().unwrap();
            MassDistribution::from_nodes(s, w.iter().map(|w| w * scale).collect()).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn explicit_step_stays_nonnegative_and_conserves_mass(
        (g, u) in grid_and_density(),
        scale in prop_oneof![Just(0.0), 0.0..5.0, 0.0..500.0],
        seed in any::<u64>(),
        frac in 0.05f64..1.0,
    ) {
        let mut rng = seed;
        let a: Vec<f64> = (0..=g.cells()).map(|k| {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            if k == 0 || k == g.cells() { 0.0 } else { scale * ((rng >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0) }
        }).collect();
        let a = FaceVelocity { a };
        let control = StepControl { cfl: frac, dt_max: 1e9, ..StepControl::default() };
        let dt = select_dt(&g, &a, &control).dt;
        let next = step_cells(&g, &u, &a, dt).unwrap();
        prop_assert!(next.iter().all(|&x| x >= 0.0));
        let (before, after) = (g.integrate(&u).unwrap(), g.integrate(&next).unwrap());
        prop_assert!((after - before).abs() <= 1e-13 * before.max(1e-300));
    }

    #[test]
    fn implicit_step_is_positive_and_conservative(
        (g, u) in grid_and_density(),
        a in drift(97, 1e3),
        log_dt in -9.0f64..2.0,
    ) {
        let mut a = FaceVelocity { a: a.a[..=g.cells()].to_vec() };
        *a.a.last_mut().unwrap() = 0.0;
        let next = step_cells_implicit(&g, &u, &a, 10f64.powf(log_dt)).unwrap();
        prop_assert!(next.iter().all(|&x| x >= 0.0));
        let (before, after) = (g.integrate(&u).unwrap(), g.integrate(&next).unwrap());
        prop_assert!((after - before).abs() <= 1e-12 * before.max(1e-300));
    }

    #[test]
    fn repeated_inputs_give_bitwise_identical_outputs((g, u) in grid_and_density(), a in drift(97, 20.0)) {
        let mut a = FaceVelocity { a: a.a[..=g.cells()].to_vec() };
        *a.a.last_mut().unwrap() = 0.0;
        let dt = 0.5 * positivity_limit(&g, &a, None);
        let once = step_cells(&g, &u, &a, dt).unwrap();
        let twice = step_cells(&g, &u.clone(), &a.clone(), dt).unwrap();
        prop_assert_eq!(
            once.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            twice.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn discrete_exponentials_carry_no_flux(c in -40.0f64..40.0, cells in 8usize..128) {
        let g = RadialGrid::new(2, 1.0, cells).unwrap();
        // fluxes vanish, so an explicit step leaves the profile unchanged
        let u: Vec<f64> = (0..cells).map(|i| (c * g.h * (i as f64 - cells as f64 / 2.0)).exp()).collect();
        let a = FaceVelocity { a: (0..=cells).map(|k| if k == 0 || k == cells { 0.0 } else { c }).collect() };
        let dt = 0.4 * positivity_limit(&g, &a, None);
        let next = step_cells(&g, &u, &a, dt).unwrap();
        for (x, y) in next.iter().zip(&u) {
            prop_assert!((x - y).abs() <= 1e-12 * y, "{} vs {}", x, y);
        }
    }

    #[test]
    fn bernoulli_reflection_identity(x in -700.0f64..700.0) {
        let lhs = bernoulli(-x) - bernoulli(x);
        prop_assert!((lhs - x).abs() <= 1e-12 * (1.0 + x.abs()));
    }

    #[test]
    fn elliptic_solution_obeys_maximum_principle_and_monotonicity(
        (g, u) in grid_and_density(),
        m in 0.0f64..20.0,
    ) {
        let v = solve_elliptic_signal(&g, &u, m).unwrap();
        prop_assert!(v.iter().all(|&x| (-1e-12..=m + 1e-12).contains(&x)));
        prop_assert!(v.windows(2).all(|p| p[1] >= p[0] - 1e-12 * m.max(1.0)));
    }

    #[test]
    fn more_cells_consume_more_signal((g, u) in grid_and_density(), extra in density(96), m in 0.1f64..10.0) {
        let bigger: Vec<f64> = u.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let v_small = solve_elliptic_signal(&g, &u, m).unwrap();
        let v_big = solve_elliptic_signal(&g, &bigger, m).unwrap();
        for (a, b) in v_small.iter().zip(&v_big) {
            prop_assert!(*b <= a + 1e-12 * m);
        }
    }

    #[test]
    fn parabolic_step_obeys_maximum_principle(
        (g, u) in grid_and_density(),
        v_old in prop::collection::vec(0.0f64..30.0, 96),
        m in 0.0f64..20.0,
        log_dt in -6.0f64..3.0,
    ) {
        let v_old = &v_old[..g.cells()];
        let v = step_parabolic_signal(&g, &u, v_old, 10f64.powf(log_dt), m).unwrap();
        let top = v_old.iter().cloned().fold(m, f64::max);
        prop_assert!(v.iter().all(|&x| x >= -1e-12 && x <= top + 1e-12));
    }

    #[test]
    fn grid_volumes_fill_the_ball(n in 1usize..=5, cells in 4usize..2000, radius in 0.1f64..10.0) {
        let g = RadialGrid::new(n, radius, cells).unwrap();
        let ball = unit_sphere_area(n) * radius.powi(n as i32) / n as f64;
        prop_assert!((g.total_volume() - ball).abs() <= 1e-12 * ball);
        prop_assert!(g.faces[0] == 0.0 && *g.faces.last().unwrap() == radius);
        prop_assert!(g.faces.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn initial_density_is_nonnegative(
        kind in 0usize..3, amp in 0.01f64..100.0, center in -0.5f64..1.5, width in 0.01f64..2.0, cells in 4usize..256,
    ) {
        let init_u = match kind {
            0 => InitCells::Constant { value: amp },
            1 => InitCells::Gaussian { amplitude: amp, center, width },
            _ => InitCells::Ring { amplitude: amp, r0: center, width },
        };
        let params = Params { init_u, u0_mass: None, ..Params::default() };
        let g = RadialGrid::new(2, 1.0, cells).unwrap();
        if let Ok(f) = init_fields(&params, &g) {
            prop_assert!(f.u.iter().all(|&x| x >= 0.0));
            prop_assert!(f.u.iter().any(|&x| x > 0.0));
            prop_assert_eq!(f.vr[0], 0.0);
        }
    }

    #[test]
    fn sensitivity_is_positive(alpha in -5.0f64..5.0, kappa in 1e-3f64..10.0, xi in 0.0f64..1e6) {
        prop_assert!(SensitivityFn::new(alpha, kappa).eval(xi).unwrap() > 0.0);
    }

    #[test]
    fn chosen_exponents_are_strictly_admissible(alpha in -5.0f64..-1e-3) {
        let e = choose_exponents(alpha).unwrap();
        prop_assert!(e.margin() >= 1e-9, "{:?} margin {}", e, e.margin());
    }

    #[test]
    fn psi_is_homogeneous(md in monotone_w(), alpha in -3.0f64..-0.05) {
        let e = choose_exponents(alpha).unwrap();
        let psi = moment_psi(&md, &e).unwrap();
        for c in [2.0, 10.0] {
            let scaled = MassDistribution::from_nodes(md.s.clone(), md.w.iter().map(|w| c * w).collect()).unwrap();
            let want = c.powf(e.p()) * psi;
            prop_assert!((moment_psi(&scaled, &e).unwrap() - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn holder_checks_hold_for_any_monotone_w(md in monotone_w(), alpha in -3.0f64..-0.05) {
        let e = choose_exponents(alpha).unwrap();
        let radius = md.s_max().sqrt();
        let params = Params { alpha, radius, boundary_signal: 1.0, ..Params::default() };
        let mass = md.mass().max(1e-12);
        let phi0 = moment_phi(&md, e.gamma).unwrap().max(1e-12);
        let c = blowup_constants(&params, &e, mass, phi0).unwrap();
        let report = check_holder_chain(&md, &c, None, 1.0, 1e-10).unwrap();
        for k in [0, 1, 3] {
            prop_assert!(report.checks[k].pass, "{:?}", report.checks[k]);
        }
        // (iii) is an identity once the boundary term is kept
        let iii = &report.checks[2];
        prop_assert!((iii.lhs - iii.rhs).abs() <= 1e-8 * iii.lhs.abs().max(iii.rhs.abs()).max(1e-300), "{:?}", iii);
    }

    #[test]
    fn f_m_increases_with_m(alpha in -3.0f64..-0.05, z in 1e-3f64..1e3, m in 0.0f64..1e3, dm in 1e-3f64..10.0) {
        let e = choose_exponents(alpha).unwrap();
        let params = Params { alpha, ..Params::default() };
        let c = blowup_constants(&params, &e, 5.0, 1.0).unwrap();
        let m2 = m * (1.0 + dm) + dm;
        prop_assert!(f_m(&e, c.c40, m2, z) > f_m(&e, c.c40, m, z));
    }
}
