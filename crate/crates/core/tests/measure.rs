use cyclicspec::compression::compress;
use cyclicspec::measure::*;
use cyclicspec::models::make_bilateral_shift;
use cyclicspec::scalar::{c, C};
use proptest::prelude::*;

fn atoms() -> impl Strategy<Value = AtomicMeasure<f64>> {
    prop::collection::vec(((-1.9f64..1.9, -1.9f64..1.9), 0.01f64..1.0), 1..30).prop_map(|v| {
        let total: f64 = v.iter().map(|(_, w)| w).sum();
        AtomicMeasure::new(
            v.iter().map(|((x, y), _)| c(*x, *y)).collect(),
            v.iter().map(|(_, w)| w / total).collect(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masses_account_for_everything(am in atoms(), level in 0usize..5) {
        let g = build_grid(2.0, level, &[]).unwrap();
        let bm = box_masses(&am, &g, g.min_gap() / 4.0).unwrap();
        prop_assert!((bm.total() + bm.on_cut_mass - 1.0).abs() < 1e-12);
        prop_assert!(bm.boundary_mass >= bm.on_cut_mass);
    }

    #[test]
    fn refinement_conserves_box_mass(am in atoms(), level in 0usize..4) {
        let fam = GridFamily::build(2.0, level + 1, &[]).unwrap();
        let coarse = fam.level(level);
        let fine = fam.level(level + 1);
        prop_assert_eq!(&fine.coarsen(level).unwrap(), coarse);
        let a = box_masses(&am, coarse, 0.0).unwrap();
        let b = box_masses(&am, fine, 0.0).unwrap();
        let k = coarse.boxes_per_side();
        for i in 0..k {
            for j in 0..k {
                let kids: f64 = (0..2)
                    .flat_map(|di| (0..2).map(move |dj| (2 * i + di, 2 * j + dj)))
                    .map(|ij| b.mass[ij])
                    .sum();
                prop_assert!((kids - a.mass[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn boxes_partition_the_square(x in -1.99f64..1.99, y in -1.99f64..1.99, level in 0usize..6) {
        let g = build_grid(2.0, level, &[]).unwrap();
        let z = c(x, y);
        match g.locate(z) {
            Some((i, j)) => prop_assert!(g.rect(i, j).contains_open(z)),
            None => prop_assert!(g.distance_to_cuts(z) == 0.0),
        }
    }
}

#[test]
fn jitter_dodges_dyadic_atoms() {
    let lines: Vec<f64> = (-15..=15).map(|k| k as f64 / 8.0).collect();
    let g = build_grid(2.0, 3, &lines).unwrap();
    for cut in &g.x_cuts[1..g.x_cuts.len() - 1] {
        assert!(lines.iter().all(|a| (cut - a).abs() > 1e-9));
    }
    let pts: Vec<C<f64>> = lines.iter().map(|x| c(*x, 0.3)).collect();
    let am = AtomicMeasure::new(pts.clone(), vec![1.0 / pts.len() as f64; pts.len()]);
    let bm = box_masses(&am, &g, 1e-4).unwrap();
    assert_eq!(bm.on_cut_mass, 0.0);
}

#[test]
fn shift_sectors_equidistribute() {
    let m = make_bilateral_shift::<f64>(101).unwrap();
    let mut prev = f64::INFINITY;
    for n in [10usize, 25, 50] {
        let (_, sd) = compress(&m, n).unwrap();
        let s = sector_masses(&counting_measure(&sd), 8);
        let worst = s.iter().map(|x| (x - 0.125).abs()).fold(0.0, f64::max);
        assert!(worst <= 1.0 / (2 * n + 1) as f64 + 1e-12, "N={n}: {worst}");
        assert!(worst < prev);
        prev = worst;
    }
}

#[test]
fn circle_reference_masses() {
    let r = ReferenceMeasure::UniformCircle { radius: 1.0 };
    let g = build_grid(2.0, 2, &[]).unwrap();
    let total: f64 = r.box_mass_matrix(&g).iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let am = roots_of_unity(4000, 1.0);
    let bm = box_masses(&am, &g, 0.0).unwrap();
    assert!(measure_discrepancy(&bm, Reference::Measure(&r)).unwrap() < 2e-3);
}
