mod common;

use common::{clustered_state, gauge_element, tol};
use proptest::prelude::*;
use qcorner_lab::bweight::{
    boundary_rep_double, double_boundary_rep_check, weight_moments, weight_qcorner_check, PowersWeight, TestOperator,
};
use qcorner_lab::quadrature::integrate_pieces;
use qcorner_lab::qpos::build_lambda_schur;
use qcorner_lab::random::{complex_gaussian, seeded};
use qcorner_lab::{c64, MatrixMap, State, TGrid};
use rand::Rng;

fn weight_strategy() -> impl Strategy<Value = PowersWeight> {
    prop_oneof![
        (0.0f64..2.0, 0.1f64..3.0).prop_map(|(a, w)| PowersWeight::indicator(a, a + w).unwrap()),
        Just(PowersWeight::Exponential),
        Just(PowersWeight::InvSqrt),
        (proptest::collection::vec(0.1f64..2.0, 3..6), 0.5f64..2.0).prop_map(|(fs, step)| {
            let xs: Vec<f64> = (0..=fs.len()).map(|k| 0.3 + step * k as f64).collect();
            let mut fs = fs;
            fs.push(0.0);
            PowersWeight::grid(xs, fs).unwrap()
        }),
    ]
}

fn type_ii_strategy() -> impl Strategy<Value = PowersWeight> {
    prop_oneof![
        (0.5f64..3.0).prop_map(|b| PowersWeight::indicator(0.0, b).unwrap()),
        Just(PowersWeight::Exponential),
        Just(PowersWeight::InvSqrt),
    ]
}

/// `∫_t^∞ |f|²` by direct quadrature of `f²`.
fn tail(nu: &PowersWeight, t: f64) -> f64 {
    let mut pts: Vec<f64> = nu.breaks().into_iter().filter(|x| x.is_finite() && *x > t).collect();
    pts.insert(0, t);
    if !nu.breaks().last().unwrap().is_finite() {
        pts.push(t.max(1.0) + 60.0);
    }
    integrate_pieces(&|x: f64| c64(nu.f(x).powi(2), 0.0), &pts, 1e-12).value.re
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn moment_difference_is_tail_mass(nu in weight_strategy(), t in 0.01f64..3.0) {
        let m = weight_moments(&nu, t).unwrap();
        prop_assert!((m.nu_i - m.nu_lambda - tail(&nu, t)).abs() <= 1e-9);
        prop_assert!((m.tail_mass - (m.nu_i - m.nu_lambda)).abs() <= 1e-12);
    }

    #[test]
    fn moments_are_monotone(nu in weight_strategy(), t in 0.01f64..3.0, dt in 0.0f64..2.0) {
        let (a, b) = (weight_moments(&nu, t).unwrap(), weight_moments(&nu, t + dt).unwrap());
        prop_assert!(a.nu_i >= b.nu_i - 1e-12);
        prop_assert!(a.nu_lambda >= b.nu_lambda - 1e-12);
    }

    #[test]
    fn type_ii_moments_grow_without_bound(nu in type_ii_strategy()) {
        let vals: Vec<f64> = (1..=6).map(|k| weight_moments(&nu, 10f64.powi(-k)).unwrap().nu_i).collect();
        prop_assert!(vals.windows(2).all(|w| w[1] > w[0]));
        // Each decade adds at least a fixed fraction of the first increment.
        let first = vals[1] - vals[0];
        prop_assert!(vals.windows(2).all(|w| w[1] - w[0] >= 0.5 * first));
        prop_assert!(weight_moments(&nu, 0.0).is_err());
    }

    #[test]
    fn qcorner_follows_sign_of_real_part(
        nu in type_ii_strategy(),
        re in prop_oneof![-1.0f64..-0.1, 0.1f64..1.0],
        im in -1.0f64..1.0,
    ) {
        let r = weight_qcorner_check(&nu, c64(re, im), &TGrid::default(), &tol()).unwrap();
        prop_assert_eq!(r.certificate.verdict, re >= 0.0);
        prop_assert!(!r.hypermax);
    }

    #[test]
    fn boundary_representation_is_contractive(seed in any::<u64>(), n in 1usize..=3, schur in any::<bool>(), nu in weight_strategy(), t in 0.05f64..2.0) {
        let mut rng = seeded(seed);
        let phi: MatrixMap = if schur {
            let mut l: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mean = l.iter().sum::<f64>() / n as f64;
            l.iter_mut().for_each(|x| *x -= mean);
            build_lambda_schur(&l, &tol()).unwrap()
        } else {
            clustered_state(&mut rng, n).0.rank_one_map()
        };
        let g = complex_gaussian(&mut rng, n, n);
        let m = &g * &g.adjoint();
        let m = m.scale_real(1.0 / m.operator_norm());
        let pi = boundary_rep_double(&phi, &nu, t, &TestOperator::from_matrix(&m)).unwrap();
        prop_assert!(pi.operator_norm() <= 1.0 + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn double_boundary_representation_is_cp(seed in any::<u64>(), n in 1usize..=2, nu in weight_strategy()) {
        let mut rng = seeded(seed);
        let (s, p, u): (State, _, _) = clustered_state(&mut rng, n);
        let g = gauge_element(&mut rng, &s, &p, &u, 3.0);
        let grid = TGrid::log(1e-2, 1e1, 7).unwrap();
        for pt in double_boundary_rep_check(&s, g.x(), g.unitary(), &nu, &grid, &tol()).unwrap() {
            prop_assert!(pt.completely_positive, "t = {}: {}", pt.t, pt.min_choi_eig);
            prop_assert!(pt.assembly_residual <= 1e-10);
        }
    }
}
