//! Property tests over random physical parameters.

use proptest::prelude::*;

use qlangevin::bath::{coth_kernel, omega_coth};
use qlangevin::charpoly::solve_roots;
use qlangevin::correlators::{asymptotic_variances_quadrature, CorrelatorEngine, VarianceForm};
use qlangevin::diffusion::{asymptotic_diffusion, StationaryForm};
use qlangevin::magnetism::asymptotic_magnetization;
use qlangevin::params::validate;
use qlangevin::propagator::build_from_params;
use qlangevin::quadrature::{integrate, QuadratureSpec};
use qlangevin::transport::{asymptotic_transport, TransportModel};
use qlangevin::{Error, SystemParams};

fn params() -> impl Strategy<Value = SystemParams> {
    (0.5f64..2.0, 0.2f64..4.0, 1.0f64..40.0, 0.0f64..6.0, 0.0f64..3.0)
        .prop_map(|(my, ly, g, wc, t)| SystemParams::axial(my, ly, g, wc, t))
}

fn solvable() -> impl Strategy<Value = SystemParams> {
    params().prop_filter("non-degenerate roots", |p| solve_roots(p).is_ok())
}

fn raw() -> impl Strategy<Value = SystemParams> {
    (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, 0.5f64..50.0, 0.0f64..5.0, 0.0f64..5.0).prop_map(
        |(mx, my, lx, ly, g, wc, t)| SystemParams {
            mass_x: mx,
            mass_y: my,
            lambda_x: lx,
            lambda_y: ly,
            gamma: g,
            omega_cx: wc / mx,
            omega_cy: wc / my,
            temperature: t,
            ..SystemParams::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validation_normalizes_and_is_idempotent(p in raw()) {
        let v = validate(&p).unwrap();
        prop_assert_eq!(v.mass_x, 1.0);
        prop_assert_eq!(v.lambda_x, 1.0);
        prop_assert!((v.mass_x * v.omega_cx - v.mass_y * v.omega_cy).abs() < 1e-12 * (1.0 + v.omega_cx.abs()));
        let w = validate(&v).unwrap();
        prop_assert!((w.gamma - v.gamma).abs() <= 1e-15 * v.gamma);
        prop_assert!((w.temperature - v.temperature).abs() <= 1e-15 * (1.0 + v.temperature));
    }

    #[test]
    fn config_text_round_trips(p in raw()) {
        let v = validate(&p).unwrap();
        let back = SystemParams::from_config_str(&v.to_config_string()).unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn swapping_axes_is_an_involution(p in raw()) {
        prop_assert_eq!(p.swap_xy().swap_xy(), p);
        prop_assert_eq!(p.swap_xy().q(), p.q());
    }

    #[test]
    fn partial_fraction_weights(p in solvable()) {
        let r = solve_roots(&p).unwrap();
        for k in 0..3 {
            prop_assert!(r.moment(k).norm() < 1e-9 * r.max_modulus().powi(k - 3).max(1.0));
        }
        prop_assert!((r.moment(3).re - 1.0).abs() < 1e-9);
        prop_assert!(r.roots.windows(2).all(|w| w[0].re.abs() <= w[1].re.abs() + 1e-12));
        prop_assert!(r.roots.iter().all(|s| s.re < 0.0));
    }

    #[test]
    fn propagators_solve_the_equations_of_motion(p in solvable(), t in 0.0f64..8.0) {
        let (_, props) = build_from_params(&p).unwrap();
        prop_assert_eq!(props.c1.eval(0.0).unwrap().round(), 1.0);
        for r in props.motion_residuals(&p, t).unwrap() {
            prop_assert!(r.abs() < 1e-8, "residual {}", r);
        }
    }

    #[test]
    fn transport_starts_bare_and_settles(p in solvable()) {
        let (roots, props) = build_from_params(&p).unwrap();
        let m = TransportModel::new(&props);
        let s0 = m.at(0.0).unwrap();
        prop_assert!(s0.lambda_pi_x.abs() < 1e-9 && s0.lambda_pi_y.abs() < 1e-9);
        prop_assert!((s0.omega_tilde_cy - p.omega_cy).abs() < 1e-9 * (1.0 + p.omega_cy));
        match asymptotic_transport(&p, &roots) {
            Ok(a) => {
                let gap = roots.roots[2].re.abs() - roots.roots[0].re.abs();
                prop_assume!(gap > 0.01);
                let late = 30.0 / gap;
                match m.at(late) {
                    Ok(s) => prop_assert!((s.lambda_pi_x - a.lambda_pi_x).abs() < 1e-6 * (1.0 + a.lambda_pi_x.abs())),
                    Err(Error::DenominatorVanished { .. }) => {}
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            }
            Err(e) => prop_assert_eq!(e, Error::NoAsymptoticLimit),
        }
    }

    #[test]
    fn thermal_kernels_dominate_the_ground_state(w in 1e-6f64..1e3, t in 0.0f64..100.0) {
        prop_assert!(coth_kernel(w, t) >= 1.0 - 1e-15);
        prop_assert!(omega_coth(w, t) >= w * (1.0 - 1e-15));
        prop_assert!(omega_coth(w, t) >= 2.0 * t * (1.0 - 1e-15));
    }

    #[test]
    fn lorentzian_integral(a in 0.05f64..50.0) {
        let spec = QuadratureSpec::default().with_split_points([a]);
        let r = integrate(|w| a / (a * a + w * w), &spec).unwrap();
        prop_assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn correlators_form_a_covariance(p in solvable(), t in 0.1f64..6.0) {
        let (roots, props) = build_from_params(&p).unwrap();
        let c = CorrelatorEngine::new(&p, &props, &roots).unwrap().at(t, &QuadratureSpec::default()).unwrap();
        let j = c.matrix();
        prop_assert!((j - j.transpose()).abs().max() < 1e-12);
        let eig = j.symmetric_eigen().eigenvalues;
        prop_assert!(eig.min() > -1e-7 * (1.0 + eig.max()), "eigenvalues {:?}", eig);
    }

    #[test]
    fn equal_mass_equilibrium_is_diamagnetic(p in solvable().prop_filter("field", |p| p.omega_c() > 0.05)) {
        let p = SystemParams { mass_y: 1.0, omega_cx: p.omega_c(), omega_cy: p.omega_c(), ..p };
        prop_assume!(solve_roots(&p).is_ok());
        let spec = QuadratureSpec::default();
        let roots = solve_roots(&p).unwrap();
        prop_assert!(asymptotic_magnetization(&p, &roots, &spec).unwrap().magnetization < 0.0);
        if let Ok(tr) = asymptotic_transport(&p, &roots) {
            let v = asymptotic_variances_quadrature(&p, &roots, &spec, VarianceForm::Derived).unwrap();
            prop_assert!(v.pixpix > 0.0 && v.piypiy > 0.0);
            let d = asymptotic_diffusion(&p, &tr, &v, StationaryForm::Exact);
            prop_assert!(d.pixpix > 0.0 && d.piypiy > 0.0);
        }
    }
}
