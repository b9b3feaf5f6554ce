use collatz_flows::coeffs::build_coeff_table;
use collatz_flows::derivative::{build_derivative_decomposition, discrete_derivative_value};
use collatz_flows::energy::{energy_sum, step_bounds_hold};
use collatz_flows::map::{apply, apply_u64, iterate, orbit, parity_vector, Termination};
use collatz_flows::spectral::{
    apply_adjoint, apply_operator, build_flow_closure, solve_closed_form, solve_numerical, ClosureBudget,
    NumericalScheme, SpectralState,
};
use collatz_flows::CollatzParams;
use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = CollatzParams> {
    prop::sample::select(CollatzParams::reference_grid())
}

fn big_positive(bits: usize) -> impl Strategy<Value = BigInt> {
    prop::collection::vec(any::<u32>(), 1..=bits / 32).prop_map(|limbs| BigInt::from(BigUint::new(limbs)) + 1)
}

fn state(p: CollatzParams, max_freq: u64) -> impl Strategy<Value = SpectralState> {
    prop::collection::vec((1..=max_freq, -1.0..1.0f64, -1.0..1.0f64), 0..12).prop_map(move |v| {
        SpectralState::from_pairs(p, v.into_iter().map(|(n, re, im)| (n, Complex64::new(re, im)))).unwrap()
    })
}

fn params_and_states() -> impl Strategy<Value = (SpectralState, SpectralState)> {
    params().prop_flat_map(|p| (state(p, 300), state(p, 300)))
}

proptest! {
    #[test]
    fn odd_inputs_give_integers(p in params(), n in big_positive(512)) {
        let n = n | BigInt::from(1);
        prop_assert_eq!(apply(p, &n) * 2, &n * p.alpha() + p.beta());
    }

    #[test]
    fn map_is_odd(p in params(), n in big_positive(256)) {
        prop_assert_eq!(apply(p, &-&n), -apply(p, &n));
    }

    #[test]
    fn fixed_width_path_agrees(p in params(), n in 1u64..u64::MAX / 16) {
        prop_assert_eq!(apply_u64(p, n).map(BigInt::from), Some(apply(p, &BigInt::from(n))));
    }

    #[test]
    fn iterate_composes(p in params(), n in big_positive(128), j in 0u64..20, k in 0u64..20) {
        prop_assert_eq!(iterate(p, &iterate(p, &n, j), k), iterate(p, &n, j + k));
    }

    #[test]
    fn parity_vector_is_periodic(p in params(), n in 1u64..1_000_000, k in 1usize..14) {
        let shifted = BigInt::from(n + (1u64 << k));
        prop_assert_eq!(
            parity_vector(p, &BigInt::from(n), k).unwrap(),
            parity_vector(p, &shifted, k).unwrap()
        );
    }

    #[test]
    fn orbit_cycle_closes(p in params(), n in 1u64..5000) {
        let rec = orbit(p, &BigInt::from(n), 5_000, &(BigInt::from(1) << 128));
        if rec.terminated_by == Termination::CycleFound {
            let mu = rec.cycle_entry_index.unwrap();
            let lambda = rec.cycle_length.unwrap();
            prop_assert_eq!(&rec.values[mu + lambda], &rec.values[mu]);
            prop_assert_eq!(rec.values.len(), mu + lambda + 1);
        }
    }

    #[test]
    fn table_matches_iteration(p in params(), k in 1u32..10, n in big_positive(192)) {
        let table = build_coeff_table(p, k).unwrap();
        prop_assert_eq!(table.evaluate(&n), Some(iterate(p, &n, u64::from(k))));
    }

    #[test]
    fn energy_is_conserved(p in params(), n in 1u64..1_000_000, k in 1u32..8) {
        let expected = BigInt::from(p.alpha() + 1).pow(k);
        prop_assert_eq!(energy_sum(p, &BigInt::from(n), k).unwrap(), expected);
    }

    #[test]
    fn single_steps_are_bounded(p in params(), x in big_positive(256)) {
        prop_assert!(step_bounds_hold(p, &x));
    }

    #[test]
    fn first_derivative_is_a_step(p in params(), n in big_positive(96), k in 0u64..30) {
        let d = discrete_derivative_value(p, &n, k, 1).unwrap();
        prop_assert_eq!(d, iterate(p, &n, k + 1) - iterate(p, &n, k));
    }

    #[test]
    fn derivative_classes_are_affine(p in params(), m in 1u32..7, n in big_positive(96), k in 0u64..10) {
        let decomp = build_derivative_decomposition(p, m).unwrap();
        let x = iterate(p, &n, k);
        let row = &decomp.per_class[decomp.class_of(&x)];
        let lhs = discrete_derivative_value(p, &n, k, m).unwrap() << m;
        prop_assert_eq!(lhs, &row.n_coeff_numerator * &x + &row.free_coeff_numerator);
    }

    #[test]
    fn adjoint_identity((u, v) in params_and_states()) {
        let lhs = apply_operator(&u).unwrap().inner(&v);
        let rhs = u.inner(&apply_adjoint(&v).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (u.norm() * v.norm()).max(1.0));
    }

    #[test]
    fn operator_norm_sandwich(u in params().prop_flat_map(|p| state(p, 300))) {
        let norm = u.norm();
        let image = apply_operator(&u).unwrap().norm();
        let slack = 1e-12 * norm.max(1.0);
        prop_assert!(norm <= image + slack);
        prop_assert!(image <= std::f64::consts::SQRT_2 * norm + slack);
    }

    #[test]
    fn closed_form_matches_rk4(n in 1u64..200, t in 0.0..1.5f64, re in -1.0..1.0f64) {
        let p = CollatzParams::classical();
        let closure = build_flow_closure(p, [n, n + 1], ClosureBudget::default()).unwrap();
        let init = SpectralState::from_pairs(p, [(n, Complex64::new(re, 0.5)), (n + 1, Complex64::new(1.0, -re))]).unwrap();
        let exact = solve_closed_form(&closure, &init, t).unwrap();
        let rk4 = solve_numerical(&closure, &init, t, NumericalScheme::rk4(1e-3)).unwrap();
        prop_assert!(exact.max_abs_diff(&rk4) < 1e-9);
    }
}
