use cyclicspec::compression::{compress, SpectralData};
use cyclicspec::distributions::{dirac, theta_vector};
use cyclicspec::kernelprop::*;
use cyclicspec::measure::{GridFamily, ReferenceMeasure};
use cyclicspec::models::*;
use cyclicspec::scalar::{c, cis, cr, C};
use cyclicspec::Error;
use nalgebra::DVector;
use proptest::prelude::*;

fn shift_data(n: usize) -> SpectralData<f64> {
    let m = make_bilateral_shift::<f64>(2 * n + 1).unwrap();
    compress(&m, n).unwrap().1
}

/// Direct double sum over the two boxes.
fn double_sum(k: &KernelFunction<f64>, sd: &SpectralData<f64>, fam: &GridFamily<f64>, p: usize, a: C<f64>, b: C<f64>) -> C<f64> {
    let g = fam.level(p);
    let (ba, bb) = (g.locate(a).unwrap(), g.locate(b).unwrap());
    let w = |bx| {
        (0..sd.dim())
            .filter(|i| g.locate(sd.lambda[*i]) == Some(bx))
            .collect::<Vec<_>>()
    };
    let (ia, ib) = (w(ba), w(bb));
    let ma: f64 = ia.iter().map(|i| sd.xi[*i].powi(2)).sum();
    let mb: f64 = ib.iter().map(|i| sd.xi[*i].powi(2)).sum();
    let mut s = C::default();
    for &kk in &ib {
        for &l in &ia {
            s += k.at(sd.lambda[l], sd.lambda[kk]) * (sd.xi[l].powi(2) * sd.xi[kk].powi(2));
        }
    }
    s / (ma * mb)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kernel_operator_norm_bound(a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 21)) {
        let sd = shift_data(10);
        let v = cyclicspec::embedding::HnVector::new(DVector::from_iterator(21, a.iter().map(|(x, y)| c(*x, *y))));
        for k in [KernelFunction::exp_re(1.0), KernelFunction::xy_conj(1.0), KernelFunction::constant(c(0.3, -2.0))] {
            let b = kernel_operator(&k, &sd);
            prop_assert!(b.apply(&v).unwrap().coeffs.norm() <= k.sup_bound * v.coeffs.norm() + 1e-12);
        }
    }

    #[test]
    fn propagator_is_the_double_sum(ta in 0.0f64..std::f64::consts::TAU, tb in 0.0f64..std::f64::consts::TAU, p in 1usize..4) {
        let sd = shift_data(60);
        let fam = GridFamily::build(2.0, 3, &[0.0]).unwrap();
        let (a, b) = (cis(ta), cis(tb));
        let k = KernelFunction::exp_re(1.0);
        let op = kernel_operator(&k, &sd);
        match propagator(&op, a, b, p, &sd, &fam) {
            Ok(v) => {
                prop_assert!((v - double_sum(&k, &sd, &fam, p, a, b)).norm() < 1e-10);
                let budget = k.lipschitz * (fam.level(p).max_diam() * 2.0);
                prop_assert!((v - k.at(a, b)).norm() <= budget);
            }
            Err(e) => {
                let expected = matches!(e, Error::InsufficientN { .. } | Error::InvalidParameter(_));
                prop_assert!(expected);
            }
        }
    }

    #[test]
    fn constant_kernels_are_flat(ta in 0.0f64..std::f64::consts::TAU, tb in 0.0f64..std::f64::consts::TAU) {
        let sd = shift_data(40);
        let fam = GridFamily::build(2.0, 3, &[]).unwrap();
        let v = c(1.5, -0.5);
        let op = kernel_operator(&KernelFunction::constant(v), &sd);
        for p in 1..=3 {
            if let Ok(x) = propagator(&op, cis(ta), cis(tb), p, &sd, &fam) {
                prop_assert!((x - v).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn dirac_vectors_are_box_vectors() {
    let sd = shift_data(80);
    let r = ReferenceMeasure::UniformCircle { radius: 1.0 };
    let fam = GridFamily::build(2.0, 4, &[0.0, 1.0]).unwrap();
    let k = KernelFunction::exp_re(1.0);
    let op = kernel_operator(&k, &sd);
    let (a, b) = (cr(1.0), cis(0.7));
    for p in 1..=4 {
        let u = theta_vector(&dirac(a), &sd, fam.level(p), &r).unwrap();
        assert_eq!(u, box_vector(a, p, &sd, &fam).unwrap());
        let d = dirac_propagator(&op, &dirac(a), &dirac(b), &sd, fam.level(p), &r).unwrap();
        assert_eq!(d.value, propagator(&op, a, b, p, &sd, &fam).unwrap());
    }
}

#[test]
fn conditions_on_shift() {
    let sd = shift_data(40);
    let k = KernelFunction::exp_re(1.0);
    let op = kernel_operator(&k, &sd);
    assert!(check_c1(&op, 16, 7) <= k.sup_bound + 1e-6);
    assert!(check_c1_inf(&op, &sd, 16, 7) <= k.sup_bound + 1e-6);
    let counting = ReferenceMeasure::Atomic(cyclicspec::measure::counting_measure(&sd));
    let polys = [Polynomial::one(), Polynomial::x(), Polynomial::from_terms([((3, 1), c(0.5, 1.0))])];
    assert!(check_c2(&op, &k, &sd, &counting, &polys).unwrap() < 1e-8);
    let fam = GridFamily::build(2.0, 3, &[]).unwrap();
    let pc = check_c2prime_c3prime(&op, &k, &sd, &counting, &fam, &[1, 2, 3]).unwrap();
    assert!(pc.c2p < 1e-8);
    assert!(pc.c3p <= k.sup_bound + 1e-12);
    // the continuous reference only matches up to quadrature of the boxes
    let circle = ReferenceMeasure::UniformCircle { radius: 1.0 };
    assert!(check_c2(&op, &k, &sd, &circle, &polys).unwrap() < 1e-6);
}

#[test]
fn power_iteration_finds_rank_one_norm() {
    let sd = shift_data(10);
    let op = kernel_operator(&KernelFunction::constant(cr(2.0)), &sd);
    // B = 2 xi xi^T with |xi| = 1
    assert!((check_c1(&op, 2, 3) - 2.0).abs() < 1e-9);
}
