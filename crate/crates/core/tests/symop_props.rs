use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use symgrowth::symop::{
    eigen_identity_residual, newton_operator, newton_operators, numeric_rank, rank_bound_witness, sampling,
    semidefinite_class, symmetric_polynomials, trace_identities, Definiteness, SymOp,
};

/// Independent oracle: coefficients of `∏(1 + λ_i x)`.
fn expand(values: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for &v in values {
        let mut next = vec![0.0; c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k] += ck;
            next[k + 1] += ck * v;
        }
        c = next;
    }
    c
}

fn operator(m: usize, seed: u64) -> SymOp {
    sampling::random_symmetric(&mut ChaCha8Rng::seed_from_u64(seed), m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn symmetric_polynomials_are_polynomial_coefficients(values in prop::collection::vec(-2.0f64..2.0, 1..7)) {
        let s = symmetric_polynomials(&values);
        let c = expand(&values);
        prop_assert_eq!(s.len(), c.len());
        for (a, b) in s.iter().zip(&c) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn top_newton_operator_vanishes(m in 2usize..7, seed in any::<u64>()) {
        // Cayley-Hamilton: P_m(T) = 0.
        let t = operator(m, seed);
        let p = newton_operators(&t);
        prop_assert_eq!(p.len(), m + 1);
        prop_assert!(p[m].norm() <= 1e-10 * (1.0 + t.norm()).powi(m as i32));
    }

    #[test]
    fn newton_recursion_holds(m in 2usize..7, seed in any::<u64>()) {
        let t = operator(m, seed);
        let s = symmetric_polynomials(&t.eigenvalues());
        let p = newton_operators(&t);
        prop_assert_eq!(p[0].clone(), SymOp::identity(m));
        for j in 1..=m {
            let expected = DMatrix::identity(m, m) * s[j] - t.matrix() * p[j - 1].matrix();
            prop_assert!((p[j].matrix() - expected).norm() <= 1e-10 * (1.0 + p[j].norm()));
        }
    }

    #[test]
    fn trace_and_eigen_identities(m in 2usize..7, seed in any::<u64>()) {
        let t = operator(m, seed);
        for j in 0..m {
            prop_assert!(eigen_identity_residual(&t, j).unwrap() <= 1e-9);
            if j >= 1 {
                prop_assert!(trace_identities(&t, j).unwrap().max() <= 1e-9);
            }
        }
    }

    #[test]
    fn invariants_survive_conjugation(m in 2usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = sampling::random_symmetric(&mut rng, m);
        let q = sampling::random_orthogonal(&mut rng, m);
        let u = SymOp::new(&q * t.matrix() * q.transpose()).unwrap();
        let (a, b) = (symmetric_polynomials(&t.eigenvalues()), symmetric_polynomials(&u.eigenvalues()));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        for j in 0..=m {
            let pt = newton_operator(&t, j).unwrap();
            let pu = newton_operator(&u, j).unwrap();
            let back = &q * pt.matrix() * q.transpose();
            prop_assert!((back - pu.matrix()).norm() <= 1e-9 * (1.0 + pu.norm()));
        }
    }

    #[test]
    fn vanishing_next_polynomial_forces_semidefinite(m in 2usize..7, jj in 0usize..5, seed in any::<u64>()) {
        let j = 1 + jj % (m - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = sampling::operator_with_vanishing(&mut rng, m, j + 1);
        let p = newton_operator(&t, j).unwrap();
        prop_assert_ne!(semidefinite_class(&p, 1e-9), Definiteness::Indefinite);
    }

    #[test]
    fn rank_bound_on_rank_deficient_operators(m in 2usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for j in 2..=m {
            let mut values = vec![0.0; m];
            for (k, v) in values.iter_mut().enumerate().take(j - 2) {
                *v = 0.5 + k as f64;
            }
            let t = SymOp::from_spectrum(&values, &sampling::random_orthogonal(&mut rng, m));
            let s = symmetric_polynomials(&t.eigenvalues());
            prop_assert!(s[j - 1].abs() < 1e-9 && s[j].abs() < 1e-9);
            prop_assert!(numeric_rank(&t, 1e-9) <= j - 2);
            prop_assert!(rank_bound_witness(&t, j, 1e-9).unwrap());
            prop_assert!(rank_bound_witness(&sampling::random_symmetric(&mut rng, m), j, 1e-9).unwrap());
        }
    }
}

#[test]
fn identity_operator_examples() {
    // P_j(I) = C(m-1, j) I.
    let t = SymOp::identity(4);
    let binom = [1.0, 3.0, 3.0, 1.0, 0.0];
    for (j, b) in binom.iter().enumerate() {
        let p = newton_operator(&t, j).unwrap();
        assert!((p.matrix() - SymOp::identity(4).scale(*b).matrix()).norm() < 1e-12);
    }
    assert!(newton_operator(&t, 5).is_err());
}

#[test]
fn two_by_two_closed_form() {
    // P_1(T) = tr(T) I − T.
    let t = SymOp::new(DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, -2.0])).unwrap();
    let p = newton_operator(&t, 1).unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[-2.0, -1.0, -1.0, 3.0]);
    assert!((p.matrix() - expected).norm() < 1e-12);
}
