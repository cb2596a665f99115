use std::sync::Arc;

use cyclicspec::compression::{compress, SpectralData};
use cyclicspec::distributions::*;
use cyclicspec::embedding::*;
use cyclicspec::measure::GridFamily;
use cyclicspec::models::*;
use cyclicspec::scalar::{c, cis, cr, C};
use nalgebra::DVector;
use proptest::prelude::*;

fn shift_data(n: usize) -> SpectralData<f64> {
    let m = make_bilateral_shift::<f64>(2 * n + 1).unwrap();
    compress(&m, n).unwrap().1
}

fn vector(len: usize) -> impl Strategy<Value = Vec<C<f64>>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| c(a, b)), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_chain(a in vector(11)) {
        let sd = shift_data(5);
        let v = HnVector::new(DVector::from_vec(a));
        let n0 = norm0(&v, &sd);
        let n2 = norm2(&v);
        let ni = norm_inf(&v, &sd, &Region::Whole);
        prop_assert!(n0 <= n2 + 1e-12);
        prop_assert!(n2 <= ni + 1e-12);
    }

    #[test]
    fn pairing_is_hermitian_and_hoelder(a in vector(11), b in vector(11)) {
        let sd = shift_data(5);
        let x = HnVector::new(DVector::from_vec(a));
        let y = HnVector::new(DVector::from_vec(b));
        prop_assert!((pairing(&x, &y) - pairing(&y, &x).conj()).norm() < 1e-12);
        let bound = norm_inf(&x, &sd, &Region::Whole) * norm0(&y, &sd);
        prop_assert!(pairing(&x, &y).norm() <= bound + 1e-12);
    }

    #[test]
    fn theta_vector_is_linear(ta in 0.0f64..std::f64::consts::TAU, tb in 0.0f64..std::f64::consts::TAU, ca in vector(1), cb in vector(1)) {
        let sd = shift_data(20);
        let fam = GridFamily::build(2.0, 2, &[]).unwrap();
        let g = fam.level(2);
        let r = cyclicspec::measure::ReferenceMeasure::UniformCircle { radius: 1.0 };
        let da = Arc::new(dirac(cis(ta)));
        let db = Arc::new(dirac(cis(tb)));
        let combo = Combination::new().with(ca[0], da.clone()).with(cb[0], db.clone());
        let (Ok(u), Ok(ua), Ok(ub)) = (
            theta_vector(&combo, &sd, g, &r),
            theta_vector(da.as_ref(), &sd, g, &r),
            theta_vector(db.as_ref(), &sd, g, &r),
        ) else {
            return Ok(());
        };
        let want = ua.coeffs * ca[0] + ub.coeffs * cb[0];
        prop_assert!((u.coeffs - want).norm() < 1e-12);
    }

    #[test]
    fn dirac_vectors_have_unit_norm0(t in 0.0f64..std::f64::consts::TAU) {
        let sd = shift_data(30);
        let fam = GridFamily::build(2.0, 2, &[]).unwrap();
        let r = cyclicspec::measure::ReferenceMeasure::UniformCircle { radius: 1.0 };
        if let Ok(u) = theta_vector(&dirac(cis(t)), &sd, fam.level(2), &r) {
            prop_assert!((norm0(&u, &sd) - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn shift_isometry_is_exact() {
    let r = cyclicspec::measure::ReferenceMeasure::UniformCircle { radius: 1.0 };
    for n in [2usize, 7, 30] {
        let sd = shift_data(n);
        let f = embed_function(&|z| z + z.conj(), &sd);
        assert!((norm2(&f).powi(2) - 2.0).abs() < 1e-9);
        assert!(isometry_defect(&|z| z + z.conj(), &sd, &r) < 1e-9);
    }
}

#[test]
fn representation_improves_with_level() {
    let sd = shift_data(150);
    let r = cyclicspec::measure::ReferenceMeasure::UniformCircle { radius: 1.0 };
    let fam = GridFamily::build(2.0, 5, &[0.0, 1.0]).unwrap();
    let hint = FunctionHint { lipschitz: 2.0, sup: 8.0 };
    let mut prev = f64::INFINITY;
    for p in 1..=5 {
        let g = fam.level(p);
        let eps = g.distance_to_cuts(cr(1.0)) / 2.0;
        let d = representation_defect(&dirac(cr(1.0)), &|z| z * z, hint, &sd, g, &r, eps).unwrap();
        assert!(d.defect <= d.budget);
        assert!(d.defect < prev);
        prev = d.defect;
    }
}
