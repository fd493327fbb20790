mod common;

use common::tol;
use proptest::prelude::*;
use qcorner_lab::numcore::{hermitian_eig, is_psd, kron};
use qcorner_lab::random::{complex_gaussian, random_hermitian, random_unitary, seeded};
use qcorner_lab::CMatrix;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..=7) {
        let m = random_hermitian(&mut seeded(seed), n);
        let e = hermitian_eig(&m, &tol()).unwrap();
        let back = &(&e.vectors * &CMatrix::from_real_diag(&e.values)) * &e.vectors.adjoint();
        prop_assert!(back.max_abs_diff(&m) <= tol().eps_eq * (1.0 + m.max_abs()));
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let gram = &e.vectors.adjoint() * &e.vectors;
        prop_assert!(gram.approx_eq(&CMatrix::identity(n), 1e-12));
    }

    #[test]
    fn psd_verdict_is_unitarily_invariant(seed in any::<u64>(), n in 1usize..=6, shift in prop_oneof![0.1f64..1.0, -1.0f64..-0.1]) {
        let mut rng = seeded(seed);
        let h = random_hermitian(&mut rng, n);
        let lo = hermitian_eig(&h, &tol()).unwrap().values[0];
        let m = &h + &CMatrix::identity(n).scale_real(shift - lo);
        let u = random_unitary(&mut rng, n);
        let c = &(&u * &m) * &u.adjoint();
        let c = (&c + &c.adjoint()).scale_real(0.5);
        let (a, b) = (is_psd(&m, &tol()).unwrap(), is_psd(&c, &tol()).unwrap());
        prop_assert_eq!(a.verdict, shift > 0.0);
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert!((a.min_eig - b.min_eig).abs() < 1e-10);
    }

    #[test]
    fn kron_is_associative_and_mixed_product(seed in any::<u64>(), dims in proptest::collection::vec(1usize..=3, 6)) {
        let mut rng = seeded(seed);
        let a = complex_gaussian(&mut rng, dims[0], dims[1]);
        let b = complex_gaussian(&mut rng, dims[2], dims[3]);
        let c = complex_gaussian(&mut rng, dims[4], dims[5]);
        prop_assert!(kron(&kron(&a, &b), &c).approx_eq(&kron(&a, &kron(&b, &c)), 1e-12));
        let c2 = complex_gaussian(&mut rng, dims[1], dims[4]);
        let d2 = complex_gaussian(&mut rng, dims[3], dims[5]);
        let lhs = &kron(&a, &b) * &kron(&c2, &d2);
        let rhs = kron(&(&a * &c2), &(&b * &d2));
        prop_assert!(lhs.approx_eq(&rhs, 1e-10));
    }
}
