mod common;

use common::tol;
use proptest::prelude::*;
use qcorner_lab::numcore::hermitian_eig;
use qcorner_lab::random::{complex_gaussian, random_hermitian, random_unitary, seeded};
use qcorner_lab::{c64, CMatrix, Decomposition, MatrixMap};
use rand::Rng;

fn random_kraus<R: Rng>(rng: &mut R, n: usize, count: usize) -> MatrixMap {
    let ops: Vec<CMatrix> = (0..count).map(|_| complex_gaussian(rng, n, n)).collect();
    MatrixMap::kraus(&ops).unwrap()
}

/// Generalized Schur map over `d` with random multiplication blocks `A X B`.
fn random_block_map<R: Rng>(rng: &mut R, d: &Decomposition) -> MatrixMap {
    let s = d.sizes().to_vec();
    let maps: Vec<Vec<MatrixMap>> = (0..s.len())
        .map(|r| {
            (0..s.len())
                .map(|c| {
                    let a = complex_gaussian(rng, s[r], s[r]);
                    let b = complex_gaussian(rng, s[c], s[c]);
                    MatrixMap::from_fn((s[r], s[c]), (s[r], s[c]), move |x| &(&a * x) * &b)
                })
                .collect()
        })
        .collect();
    let blocks: Vec<Vec<Option<&MatrixMap>>> = maps.iter().map(|row| row.iter().map(Some).collect()).collect();
    MatrixMap::assemble_blocks(d, d, &blocks).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn choi_round_trip_is_exact(seed in any::<u64>(), n_in in 1usize..=3, n_out in 1usize..=3) {
        let c = complex_gaussian(&mut seeded(seed), n_in * n_out, n_in * n_out);
        let phi = MatrixMap::from_choi(n_in, n_out, c.clone()).unwrap();
        let mut back = CMatrix::zeros(n_in * n_out, n_in * n_out);
        for i in 0..n_in {
            for j in 0..n_in {
                back.set_block(i * n_out, j * n_out, &phi.apply(&CMatrix::unit(n_in, n_in, i, j)).unwrap());
            }
        }
        prop_assert_eq!(back, c);
    }

    #[test]
    fn cp_verdict_survives_unitary_conjugation(seed in any::<u64>(), n in 1usize..=3, make_cp in any::<bool>()) {
        let mut rng = seeded(seed);
        let k = random_kraus(&mut rng, n, 2);
        // Subtracting a large multiple of the transpose breaks complete positivity for n >= 2.
        let phi = if make_cp || n == 1 { k } else { k.sub(&MatrixMap::transpose_map(n).scale(c64(50.0, 0.0))).unwrap() };
        let base = phi.is_completely_positive(&tol()).unwrap().verdict;
        prop_assert_eq!(base, make_cp || n == 1);
        for _ in 0..4 {
            let u = random_unitary(&mut rng, n);
            prop_assert_eq!(phi.conjugate_by_unitary(&u, &tol()).unwrap().is_completely_positive(&tol()).unwrap().verdict, base);
        }
    }

    #[test]
    fn schur_cp_iff_coefficients_psd(seed in any::<u64>(), n in 1usize..=4, psd in any::<bool>()) {
        let mut rng = seeded(seed);
        let q = if psd {
            let g = complex_gaussian(&mut rng, n, n);
            &g * &g.adjoint()
        } else {
            let h = random_hermitian(&mut rng, n);
            let lo = hermitian_eig(&h, &tol()).unwrap().values[0];
            &h + &CMatrix::identity(n).scale_real(-lo - 0.2)
        };
        let v = MatrixMap::schur(&q).is_completely_positive(&tol()).unwrap();
        prop_assert_eq!(v.verdict, psd);
    }

    #[test]
    fn composition_of_cp_maps_is_cp(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = seeded(seed);
        let (a, b) = (random_kraus(&mut rng, n, 2), random_kraus(&mut rng, n, 3));
        prop_assert!(a.compose(&b).unwrap().is_completely_positive(&tol()).unwrap().verdict);
    }

    #[test]
    fn generalized_schur_closed_under_composition(seed in any::<u64>(), sizes in proptest::collection::vec(1usize..=2, 1..=3)) {
        let mut rng = seeded(seed);
        let d = Decomposition::new(sizes).unwrap();
        let (a, b) = (random_block_map(&mut rng, &d), random_block_map(&mut rng, &d));
        prop_assert!(a.is_generalized_schur(&d, &d, &tol()).unwrap());
        prop_assert!(a.compose(&b).unwrap().is_generalized_schur(&d, &d, &tol()).unwrap());
    }
}
