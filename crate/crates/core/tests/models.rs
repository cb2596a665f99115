use cyclicspec::models::*;
use cyclicspec::scalar::{c, cis, cr, C};
use cyclicspec::Error;
use proptest::prelude::*;

fn diag3() -> OperatorModel<f64> {
    let w = 1.0 / 3.0;
    make_diag_unitary(&[cr(1.0), c(0.0, 1.0), cr(-1.0)], &[w, w, w]).unwrap()
}

fn cplx() -> impl Strategy<Value = C<f64>> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b))
}

#[test]
fn constructor_errors() {
    assert!(matches!(make_exp_selfadjoint(&[0.2], 1.0), Err(Error::NormBound { .. })));
    assert!(matches!(make_exp_selfadjoint(&[0.05, 0.0], 1.0), Err(Error::KernelVector { index: 1 })));
    assert!(make_exp_selfadjoint(&[0.05, 0.05], 1.0).is_err());
    assert!(make_diag_unitary(&[cr(1.0), cr(1.0)], &[0.5, 0.5]).is_err());
    assert!(make_diag_unitary(&[cr(2.0)], &[1.0]).is_err());
    assert!(make_bilateral_shift::<f64>(0).is_err());
    let d = diag3();
    assert!(make_direct_sum(&d, &d).is_err());
    let s2 = make_scaled_unitary(cr(2.0), &d).unwrap();
    assert!(make_scaled_unitary(cr(2.0), &s2).is_err());
}

#[test]
fn side_lengths() {
    let d = diag3();
    assert_eq!(d.m(), 2);
    assert_eq!(make_scaled_unitary(cr(2.5), &d).unwrap().m(), 3);
    assert_eq!(make_bilateral_shift::<f64>(7).unwrap().max_exact_n(), Some(3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monomial_order_is_irrelevant(i in 0usize..6, j in 0usize..6, q in 0.5f64..2.0, t in 0.0f64..std::f64::consts::TAU) {
        let base = make_bilateral_shift::<f64>(13).unwrap();
        let m = make_scaled_unitary(cis(t) * q, &base).unwrap();
        let a = m.monomial(i, j).unwrap();
        let b = m.monomial_reversed(i, j).unwrap();
        prop_assert!((a - b).norm() < 1e-9 * q.powi((i + j) as i32).max(1.0));
    }

    #[test]
    fn diagonal_polynomials_evaluate_pointwise(coeffs in prop::collection::vec(cplx(), 9)) {
        let m = diag3();
        let mut p = Polynomial::zero();
        for (k, v) in coeffs.iter().enumerate() {
            p.add_term(k / 3, k % 3, *v);
        }
        let v = m.apply_polynomial(&p).unwrap();
        for (k, z) in [cr(1.0), c(0.0, 1.0), cr(-1.0)].iter().enumerate() {
            let want = p.eval(*z) * (1.0f64 / 3.0).sqrt();
            prop_assert!((v[k] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn direct_sum_acts_blockwise(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = diag3();
        let d2 = make_scaled_unitary(cr(2.0), &d).unwrap();
        let s = make_direct_sum(&d, &d2).unwrap();
        let p = Polynomial::random(2, &mut rng);
        let v = s.apply_polynomial(&p).unwrap();
        let a = d.apply_polynomial(&p).unwrap();
        let b = d2.apply_polynomial(&p).unwrap();
        let h = 0.5f64.sqrt();
        for k in 0..3 {
            prop_assert!((v[k] - a[k] * h).norm() < 1e-10);
            prop_assert!((v[k + 3] - b[k] * h).norm() < 1e-10);
        }
    }

    #[test]
    fn polynomial_eval_is_linear(a in cplx(), b in cplx(), z in cplx()) {
        let p = Polynomial::from_terms([((2, 1), a), ((0, 0), b)]);
        let q = Polynomial::from_terms([((1, 3), b)]);
        let mut sum = p.clone();
        for ((i, j), v) in q.terms() {
            sum.add_term(i, j, v);
        }
        prop_assert!((sum.eval(z) - p.eval(z) - q.eval(z)).norm() < 1e-12);
    }
}
