use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;

use lrinv_core::config::ModelConfig;
use lrinv_core::ermakov::{closed_form_rho_ck, ermakov_residual, ErmakovSolution};
use lrinv_core::operators::{apply_hamiltonian, GridSpec, StencilOrder, WavefunctionFrame};
use lrinv_core::params::{make_caldirola_kanai, CaldirolaKanaiParams, TimeFunction, Window};
use lrinv_core::propagator::propagate;
use lrinv_core::quadrature::gauss_legendre;
use lrinv_core::suite::y_reduction_mismatches;
use lrinv_core::verify::random_interior_frame;
use lrinv_core::wavefunction::phase_alpha;
use lrinv_core::weber::{build_eigenfunction_table, required_points, DEFAULT_TABLE_TOL};

fn ck_params() -> impl Strategy<Value = CaldirolaKanaiParams> {
    (0.5f64..2.0, -1.0f64..2.0, 0.0f64..2.0, -1.0f64..1.5)
        .prop_map(|(m, g, w, y)| CaldirolaKanaiParams::new(m, g, w, y))
        .prop_filter("closed form needs a positive frequency", |ck| ck.omega1_sq() > 0.1)
}

fn order() -> impl Strategy<Value = StencilOrder> {
    prop_oneof![
        Just(StencilOrder::Second),
        Just(StencilOrder::Fourth),
        Just(StencilOrder::Sixth),
        Just(StencilOrder::Eighth)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn windowed_functions_refuse_to_extrapolate(a in -5.0f64..0.0, len in 0.1f64..5.0, off in 1e-6f64..10.0) {
        let f = TimeFunction::exponential(1.0, 0.3).with_window(Window::new(a, a + len).unwrap()).unwrap();
        prop_assert!(f.eval(a + 0.5 * len).is_ok());
        prop_assert!(f.eval(a - off).is_err());
        prop_assert!(f.eval(a + len + off).is_err());
    }

    #[test]
    fn derived_frequencies(ck in ck_params()) {
        let o0 = ck.omega0 * ck.omega0 + ck.y0 * ck.y0 + ck.gamma * ck.y0;
        prop_assert_eq!(ck.omega0_sq(), o0);
        prop_assert!((ck.omega1_sq() - (o0 + ck.gamma * ck.gamma / 4.0)).abs() <= 1e-15 * o0.abs().max(1.0));
    }

    #[test]
    fn closed_form_rho_solves_the_auxiliary_equation(ck in ck_params(), t in 0.0f64..2.0) {
        let model = make_caldirola_kanai(&ck).unwrap();
        let (rho, rho_dot) = closed_form_rho_ck(&ck, t).unwrap();
        let rho_ddot = ck.gamma * ck.gamma / 4.0 * rho;
        let r = ermakov_residual(&model, rho, rho_dot, rho_ddot, t).unwrap();
        let scale = 1.0 + (model.modified_frequency_sq(t).unwrap() * rho).abs() + 1.0 / (ck.m * ck.m * rho.powi(3));
        prop_assert!(r.abs() / scale < 1e-12, "residual {}", r);
    }

    #[test]
    fn weber_wronskian_and_parity(eps in -5.0f64..5.0) {
        let n = required_points(eps, 2.0);
        let t = build_eigenfunction_table(eps, 2.0, n, DEFAULT_TABLE_TOL).unwrap();
        prop_assert!(t.wronskian_drift() <= 1e-10);
        prop_assert!(t.parity_defect() <= 1e-10);
    }

    #[test]
    fn phase_decreases_for_positive_lambda(ck in ck_params(), lambda in 0.1f64..5.0) {
        let model = make_caldirola_kanai(&ck).unwrap();
        let sol = ErmakovSolution::closed_form(model.clone(), ck, Window::new(0.0, 1.0).unwrap()).unwrap();
        prop_assert_eq!(phase_alpha(lambda, &model, &sol, 0.0).unwrap(), 0.0);
        let mut prev = 0.0;
        for k in 1..=5 {
            let a = phase_alpha(lambda, &model, &sol, 0.2 * k as f64).unwrap();
            prop_assert!(a < prev);
            prev = a;
        }
    }

    #[test]
    fn gaussian_frames_are_normalized(q0 in -3.0f64..3.0, sigma in 0.3f64..2.0, k0 in -3.0f64..3.0) {
        let grid = GridSpec::new(-20.0, 20.0, 2001).unwrap();
        let f = WavefunctionFrame::gaussian(grid, 0.0, q0, sigma, k0).unwrap();
        prop_assert!((f.norm_sq() - 1.0).abs() <= 1e-10);
        prop_assert!(f.values().iter().all(|v| v.re.is_finite() && v.im.is_finite()));
    }

    #[test]
    fn hamiltonian_is_symmetric(ck in ck_params(), order in order(), seed in any::<u64>(), t in 0.0f64..1.0) {
        let model = make_caldirola_kanai(&ck).unwrap();
        let grid = GridSpec::new(-10.0, 10.0, 801).unwrap().with_order(order);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let f = random_interior_frame(grid, t, &mut rng).unwrap();
        let g = random_interior_frame(grid, t, &mut rng).unwrap();
        let hf = apply_hamiltonian(&model, &f).unwrap();
        let hg = apply_hamiltonian(&model, &g).unwrap();
        let lhs = f.inner(&hg);
        let rhs = hf.inner(&g);
        prop_assert!((lhs - rhs).norm() <= 1e-9 * lhs.norm().max(1.0), "{} vs {}", lhs, rhs);
        prop_assert!(f.inner(&hf).im.abs() <= 1e-9 * f.inner(&hf).norm().max(1.0));
    }

    #[test]
    fn csv_formatting_round_trips(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = format!("{x:.16e}");
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials(n in 2usize..40, a in -3.0f64..0.0, b in 0.5f64..3.0, k in 0u32..6) {
        let deg = k.min(2 * n as u32 - 1);
        let (x, w) = gauss_legendre(n, a, b).unwrap();
        let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
        let exact = (b.powi(deg as i32 + 1) - a.powi(deg as i32 + 1)) / (deg as f64 + 1.0);
        prop_assert!((q - exact).abs() <= 1e-12 * exact.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn crank_nicolson_conserves_norm(ck in ck_params(), order in order(), q0 in -2.0f64..2.0, k0 in -2.0f64..2.0) {
        let model = make_caldirola_kanai(&ck).unwrap();
        let grid = GridSpec::new(-20.0, 20.0, 801).unwrap().with_order(order);
        let f = WavefunctionFrame::gaussian(grid, 0.0, q0, 1.0, k0).unwrap();
        let run = propagate(&model, &f, 0.2, 1e-3).unwrap();
        prop_assert!(run.norm_drift() <= 1e-8, "drift {}", run.norm_drift());
    }

    #[test]
    fn zero_y_matches_suppressed_y(ck in ck_params(), seed in any::<u64>()) {
        let cfg = ModelConfig::caldirola_kanai(&ck);
        let grid = GridSpec::new(-10.0, 10.0, 512).unwrap();
        prop_assert_eq!(y_reduction_mismatches(&cfg, &grid, 1e-3, seed).unwrap(), 0);
    }
}

#[test]
fn complex_inner_product_is_conjugate_linear_in_the_first_slot() {
    let grid = GridSpec::new(-5.0, 5.0, 101).unwrap();
    let f = WavefunctionFrame::gaussian(grid, 0.0, 0.0, 1.0, 1.0).unwrap();
    let g = f.with_values(f.values().iter().map(|v| v * Complex64::i()).collect()).unwrap();
    assert!((g.inner(&f) + Complex64::i() * f.norm_sq()).norm() < 1e-14);
}
