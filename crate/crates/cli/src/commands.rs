//! The per-topic subcommands. Each returns its files as a [`Tree`] plus an
//! overall verdict; nothing touches the disk here.

use cyclicspec::compression::compress;
use cyclicspec::distributions::{
    dirac, from_function, GeneralizedDistribution, good_pair_schedule, norm0_bound_check, representation_defect, FunctionHint,
};
use cyclicspec::embedding::{embed_function, isometry_defect, norm2, polynomial_consistency};
use cyclicspec::kernelprop::{
    check_c1, check_c1_inf, check_c2, check_c2prime_c3prime, dirac_propagator, kernel_estimate, kernel_operator,
    propagator, propagator_csv_header,
};
use cyclicspec::measure::{
    box_masses, build_grid, counting_measure, detect_atomic_lines, estimate_spectrum, max_usable_level,
    measure_discrepancy, sector_masses, GridFamily, Reference, ReferenceMeasure,
};
use cyclicspec::models::Polynomial;
use cyclicspec::scalar::{modulus, C};
use cyclicspec::selfadjoint::{exp_check, generator_defect, log_spectrum, phase_mass_beyond, pushforward_measure};
use cyclicspec::{Compression, Model, Spectral};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{re_im, Cell, Check, Csv, Summary, Tree};
use crate::CliError;

/// Files plus the verdict of every check that went into them.
pub struct Outcome {
    pub tree: Tree,
    pub passed: bool,
}

impl Outcome {
    fn new(mut tree: Tree, summary: Summary) -> Self {
        let passed = summary.passed;
        tree.put_json("summary.json", &summary);
        Self { tree, passed }
    }
}

/// Finest grid level the kernel and Dirac commands look at.
pub const MAX_LEVEL: usize = 8;
const SECTORS: usize = 8;

pub(crate) fn lib(e: cyclicspec::Error) -> CliError {
    CliError::Library(e)
}

/// Compressions for every `N`, computed in parallel and returned in order.
pub fn compress_all(model: &Model, ns: &[usize]) -> Result<Vec<(Compression, Spectral)>, CliError> {
    ns.par_iter()
        .map(|n| compress(model, *n))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(lib)
}

fn require_n(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.n_list.is_empty() {
        return Err(CliError::Usage("the N list is empty".into()));
    }
    Ok(())
}

fn reference(model: &Model) -> Result<&ReferenceMeasure<f64>, CliError> {
    model
        .reference_measure()
        .ok_or_else(|| CliError::Config(format!("model {} has no reference measure", model.kind().name())))
}

/// Atom lines seen in every counting measure, merged over both axes.
fn atom_lines(sds: &[Spectral], delta: f64, extra: &[C<f64>]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let measures: Vec<_> = sds.iter().map(counting_measure).collect();
    let (xs, ys) = detect_atomic_lines(&measures, delta);
    let mut all: Vec<f64> = xs.iter().chain(&ys).copied().collect();
    for z in extra {
        all.push(z.re);
        all.push(z.im);
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup();
    (xs, ys, all)
}

fn model_m(model: &Model) -> f64 {
    model.m() as f64
}

pub fn cmd_measure(cfg: &RunConfig) -> Result<Outcome, CliError> {
    require_n(cfg)?;
    let model = cfg.build_model()?;
    let data = compress_all(&model, &cfg.n_list)?;
    let sds: Vec<Spectral> = data.into_iter().map(|(_, sd)| sd).collect();
    let (xs, ys, lines) = atom_lines(&sds, cfg.tol("atom_delta", 1e-3), &[]);
    let grid = build_grid(model_m(&model), cfg.level, &lines).map_err(lib)?;
    if cfg.eps * 2.0 >= grid.min_gap() {
        return Err(CliError::Config(format!("eps = {} is too wide for level {}", cfg.eps, cfg.level)));
    }
    let mut tree = Tree::default();
    let mut checks = Vec::new();
    let mut table = Csv::new(&[
        "N",
        "D_N",
        "box_discrepancy",
        "sector_discrepancy",
        "on_cut_mass",
        "boundary_mass",
    ]);
    let ref_sectors: Option<Vec<f64>> = match model.reference_measure() {
        Some(ReferenceMeasure::Atomic(a)) => Some(sector_masses(a, SECTORS)),
        Some(ReferenceMeasure::UniformCircle { .. }) => Some(vec![1.0 / SECTORS as f64; SECTORS]),
        None => None,
    };
    let mut all_bm = Vec::new();
    for sd in &sds {
        let am = counting_measure(sd);
        let bm = box_masses(&am, &grid, cfg.eps).map_err(lib)?;
        tree.put(format!("boxmasses_N{}.csv", sd.n), bm.to_csv());
        let xi_total: f64 = sd.xi.iter().map(|x| x * x).sum();
        checks.push(Check::at_most(format!("N={} mass conservation", sd.n), (bm.total() + bm.on_cut_mass - 1.0).abs(), cfg.tol("mass", 1e-10)));
        checks.push(Check::at_most(format!("N={} xi normalization", sd.n), (xi_total - 1.0).abs(), cfg.tol("mass", 1e-10)));
        all_bm.push(bm);
    }
    let last = all_bm.last().unwrap().clone();
    for (sd, bm) in sds.iter().zip(&all_bm) {
        let box_disc = match model.reference_measure() {
            Some(r) => measure_discrepancy(bm, Reference::Measure(r)),
            None => measure_discrepancy(bm, Reference::Boxes(&last)),
        }
        .map_err(lib)?;
        let sector_disc = ref_sectors.as_ref().map_or(f64::NAN, |r| {
            sector_masses(&counting_measure(sd), SECTORS)
                .iter()
                .zip(r)
                .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
        });
        table.row(&[
            Cell::I(sd.n),
            Cell::I(sd.dim()),
            Cell::F(box_disc),
            Cell::F(sector_disc),
            Cell::F(bm.on_cut_mass),
            Cell::F(bm.boundary_mass),
        ]);
    }
    tree.put("discrepancy.csv", table.finish());
    let est = estimate_spectrum(&all_bm, cfg.tol("spectrum_floor", 1e-3)).map_err(lib)?;
    let boxes: Vec<_> = est
        .boxes
        .iter()
        .zip(&est.stable)
        .map(|((i, j), s)| {
            let r = est.grid.rect(*i, *j);
            json!({ "i": i, "j": j, "x": [r.x_lo, r.x_hi], "y": [r.y_lo, r.y_hi], "mass": last.mass[(*i, *j)], "stable": s })
        })
        .collect();
    tree.put_json("spectrum.json", &json!({ "level": grid.level, "boxes": boxes, "mass": est.mass }));
    tree.put_json("atoms.json", &json!({ "x_lines": xs, "y_lines": ys }));
    Ok(Outcome::new(tree, Summary::new("measure", model.to_json(), cfg.seed, checks)))
}

/// `count` seeded random polynomials of degree at most `deg`.
pub fn random_polys(seed: u64, count: usize, deg: usize) -> Vec<Polynomial<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| Polynomial::random(k % (deg + 1), &mut rng))
        .collect()
}

pub fn cmd_isometry(cfg: &RunConfig) -> Result<Outcome, CliError> {
    require_n(cfg)?;
    let model = cfg.build_model()?;
    let r = reference(&model)?;
    let data = compress_all(&model, &cfg.n_list)?;
    let tol_iso = cfg.tol("isometry", 1e-9);
    let tol_poly = cfg.tol("polynomial", 1e-8);
    let mut iso = Csv::new(&["N", "function", "norm2_sq", "defect", "tolerance"]);
    let mut poly = Csv::new(&["N", "polynomial", "degree", "defect", "tolerance"]);
    let mut checks = Vec::new();
    let count = cfg.tol("polynomials", 20.0) as usize;
    let mut worst_iso = 0.0f64;
    let mut worst_poly = 0.0f64;
    for (cs, sd) in &data {
        let re2 = |z: C<f64>| z + z.conj();
        let d = isometry_defect(&re2, sd, r);
        iso.row(&[Cell::I(sd.n), Cell::S("z+conj(z)".into()), Cell::F(norm2(&embed_function(&re2, sd)).powi(2)), Cell::F(d), Cell::F(tol_iso)]);
        worst_iso = worst_iso.max(d);
        for (k, p) in random_polys(cfg.seed ^ sd.n as u64, count, 3).iter().enumerate() {
            let d = isometry_defect(&|z| p.eval(z), sd, r);
            iso.row(&[Cell::I(sd.n), Cell::S(format!("random{k}")), Cell::F(norm2(&embed_function(&|z| p.eval(z), sd)).powi(2)), Cell::F(d), Cell::F(tol_iso)]);
            worst_iso = worst_iso.max(d);
        }
        for (k, p) in random_polys(cfg.seed.wrapping_add(sd.n as u64), count, sd.n).iter().enumerate() {
            let d = polynomial_consistency(&model, cs, sd, p).map_err(lib)?;
            poly.row(&[Cell::I(sd.n), Cell::S(format!("random{k}")), Cell::I(p.degree()), Cell::F(d), Cell::F(tol_poly)]);
            worst_poly = worst_poly.max(d);
        }
    }
    checks.push(Check::at_most("isometry defect", worst_iso, tol_iso));
    checks.push(Check::at_most("polynomial defect", worst_poly, tol_poly));
    let mut tree = Tree::default();
    tree.put("isometry.csv", iso.finish());
    tree.put("polynomial.csv", poly.finish());
    Ok(Outcome::new(tree, Summary::new("isometry", model.to_json(), cfg.seed, checks)))
}

pub fn cmd_selfadjoint(cfg: &RunConfig) -> Result<Outcome, CliError> {
    require_n(cfg)?;
    let model = cfg.build_model()?;
    if model.generator().is_none() {
        return Err(CliError::Config(format!("selfadjoint needs an exp_selfadjoint model, got {}", model.kind().name())));
    }
    let data = compress_all(&model, &cfg.n_list)?;
    let tol = cfg.tol("selfadjoint", 1e-10);
    let mut phases = Csv::new(&["N", "n", "q", "xi"]);
    let mut table = Csv::new(&["N", "check", "value", "tolerance"]);
    let mut checks = Vec::new();
    let mut tree = Tree::default();
    for (cs, sd) in &data {
        let pd = log_spectrum(sd).map_err(lib)?;
        for (k, q) in pd.q.iter().enumerate() {
            phases.row(&[Cell::I(sd.n), Cell::I(k), Cell::F(*q), Cell::F(sd.xi[k])]);
        }
        let mut push = |name: String, v: f64| {
            table.row(&[Cell::I(sd.n), Cell::S(name.clone()), Cell::F(v), Cell::F(tol)]);
            checks.push(Check::at_most(format!("N={} {name}", sd.n), v, tol));
        };
        push("exp_check".into(), exp_check(&pd, sd, cs));
        for (name, p) in [("1", Polynomial::one()), ("X", Polynomial::x()), ("XY", Polynomial::xy())] {
            if p.degree() <= sd.n {
                push(format!("generator_defect[{name}]"), generator_defect(&model, cs, sd, &p).map_err(lib)?);
            }
        }
        push("phase_mass_beyond_1/9".into(), phase_mass_beyond(&pd, sd, 1.0 / 9.0));
        let pm = pushforward_measure(&counting_measure(sd));
        push("pushforward_total_defect".into(), (pm.total() - 1.0).abs());
        tree.put(format!("pushforward_N{}.csv", sd.n), pm.to_csv());
    }
    tree.put("phases.csv", phases.finish());
    tree.put("selfadjoint.csv", table.finish());
    Ok(Outcome::new(tree, Summary::new("selfadjoint", model.to_json(), cfg.seed, checks)))
}

fn alpha_and_betas(cfg: &RunConfig) -> Result<(C<f64>, Vec<C<f64>>), CliError> {
    let alpha = *cfg
        .points
        .first()
        .ok_or_else(|| CliError::Config("need at least one point".into()))?;
    Ok((alpha, cfg.points.clone()))
}

pub fn cmd_kernel(cfg: &RunConfig) -> Result<Outcome, CliError> {
    require_n(cfg)?;
    let model = cfg.build_model()?;
    let k = cfg.build_kernel(&model)?;
    let (alpha, betas) = alpha_and_betas(cfg)?;
    let data = compress_all(&model, &cfg.n_list)?;
    let sds: Vec<Spectral> = data.into_iter().map(|(_, sd)| sd).collect();
    let (_, _, lines) = atom_lines(&sds, cfg.tol("atom_delta", 1e-3), &cfg.points);
    let family = GridFamily::build(model_m(&model), MAX_LEVEL, &lines).map_err(lib)?;
    let last = sds.last().unwrap();
    let top = max_usable_level(&counting_measure(last), &family, &cfg.points)
        .ok_or_else(|| CliError::Config("a point lies in no occupied box even at level 0".into()))?;
    let ops: Vec<_> = sds.par_iter().map(|sd| kernel_operator(&k, sd)).collect();
    let schedule: Vec<usize> = (1..=top.max(1)).collect();
    let mut props = String::from(propagator_csv_header());
    let mut table = Csv::new(&["alpha_re", "alpha_im", "beta_re", "beta_im", "p", "N", "estimate_re", "estimate_im", "exact_re", "exact_im", "error", "budget"]);
    let mut checks = Vec::new();
    for beta in &betas {
        let est = kernel_estimate(&ops, k.lipschitz, alpha, *beta, &schedule, &sds, &family).map_err(lib)?;
        props.push_str(&est.csv_rows());
        let exact = k.at(alpha, *beta);
        let err = modulus(est.value - exact);
        let row = est.rows.last().unwrap();
        let [a0, a1] = re_im(alpha);
        let [b0, b1] = re_im(*beta);
        let [e0, e1] = re_im(est.value);
        let [x0, x1] = re_im(exact);
        table.row(&[a0, a1, b0, b1, Cell::I(row.p), Cell::I(row.big_n), e0, e1, x0, x1, Cell::F(err), Cell::F(est.budget)]);
        checks.push(Check::at_most(format!("beta=({},{}) error within budget", beta.re, beta.im), err, est.budget + cfg.tol("rounding", 1e-12)));
        if let Some(t) = cfg.tolerances.get("kernel_abs") {
            checks.push(Check::at_most(format!("beta=({},{}) absolute error", beta.re, beta.im), err, *t));
        }
    }
    let mut cond = Csv::new(&["N", "K_D", "c1", "c1_inf", "c2", "c2_prime", "c3_prime"]);
    let polys = random_polys(cfg.seed, 5, 3);
    for (sd, op) in sds.iter().zip(&ops) {
        let counting = ReferenceMeasure::Atomic(counting_measure(sd));
        let c1 = check_c1(op, 16, cfg.seed);
        let c1i = check_c1_inf(op, sd, 16, cfg.seed);
        let c2 = check_c2(op, &k, sd, &counting, &polys).map_err(lib)?;
        let levels: Vec<usize> = (1..=top.min(4)).collect();
        let pc = check_c2prime_c3prime(op, &k, sd, &counting, &family, &levels).map_err(lib)?;
        cond.row(&[Cell::I(sd.n), Cell::F(k.sup_bound), Cell::F(c1), Cell::F(c1i), Cell::F(c2), Cell::F(pc.c2p), Cell::F(pc.c3p)]);
        checks.push(Check::at_most(format!("N={} C1", sd.n), c1, k.sup_bound + 1e-6));
        checks.push(Check::at_most(format!("N={} C2", sd.n), c2, cfg.tol("c2", 1e-8)));
        checks.push(Check::at_most(format!("N={} C3'", sd.n), pc.c3p, 3.0 * k.sup_bound));
    }
    let mut tree = Tree::default();
    tree.put("propagators.csv", props);
    tree.put("kernel.csv", table.finish());
    tree.put("conditions.csv", cond.finish());
    Ok(Outcome::new(tree, Summary::new("kernel", model.to_json(), cfg.seed, checks)))
}

/// `(Lipschitz, sup)` of `z^k` on the disc of radius `r`.
fn power_hint(k: i32, r: f64) -> FunctionHint<f64> {
    FunctionHint {
        lipschitz: if k == 0 { 0.0 } else { k as f64 * r.powi(k - 1) },
        sup: r.powi(k),
    }
}

/// Strip half-width keeping `alpha` outside every strip.
pub fn dirac_eps(grid: &cyclicspec::Grid, alpha: C<f64>) -> f64 {
    (grid.distance_to_cuts(alpha) / 2.0).min(grid.min_gap() / 3.0)
}

pub fn cmd_dirac(cfg: &RunConfig, dual: bool) -> Result<Outcome, CliError> {
    require_n(cfg)?;
    let model = cfg.build_model()?;
    let r = reference(&model)?.clone();
    let k = cfg.build_kernel(&model)?;
    let (alpha, betas) = alpha_and_betas(cfg)?;
    let data = compress_all(&model, &cfg.n_list)?;
    let sds: Vec<Spectral> = data.into_iter().map(|(_, sd)| sd).collect();
    let (_, _, lines) = atom_lines(&sds, cfg.tol("atom_delta", 1e-3), &cfg.points);
    let family = GridFamily::build(model_m(&model), MAX_LEVEL.max(cfg.level), &lines).map_err(lib)?;
    let grid = family.level(cfg.level);
    let radius = model.op_norm().max(model.r_a().unwrap_or(1.0).sqrt());
    // budgets vanish for constants; leave room for rounding
    let slack = cfg.tol("rounding", 1e-12);
    let mut tree = Tree::default();
    let mut checks = Vec::new();

    let mut sched = String::new();
    for (idx, z) in cfg.points.iter().enumerate() {
        let s = good_pair_schedule(&dirac(*z), &sds, &family, &r, MAX_LEVEL);
        for (i, line) in s.to_csv().lines().enumerate() {
            if i == 0 && idx == 0 {
                sched.push_str("point,");
                sched.push_str(line);
                sched.push('\n');
            } else if i > 0 {
                sched.push_str(&format!("{idx},{line}\n"));
            }
        }
        for e in s.entries.iter().filter(|e| e.valid) {
            let (sum, bound) = norm0_bound_check(&dirac(*z), family.level(e.level), &r);
            checks.push(Check::at_most(format!("point {idx} N={} norm0 bound", e.big_n), sum, bound));
        }
    }
    tree.put("schedule.csv", sched);

    let mut header = vec!["N", "level", "point", "function", "pairing_re", "pairing_im", "expected_re", "expected_im"];
    if dual {
        header.extend(["expected_linear_re", "expected_linear_im"]);
    }
    header.extend(["defect", "budget"]);
    let mut rep = Csv::new(&header);
    for sd in &sds {
        for (idx, z) in cfg.points.iter().enumerate() {
            for p in 0..=2 {
                let f = move |w: C<f64>| w.powi(p);
                let res = match representation_defect(&dirac(*z), &f, power_hint(p, radius), sd, grid, &r, dirac_eps(grid, *z)) {
                    Ok(res) => res,
                    Err(cyclicspec::Error::InsufficientN { .. }) => continue,
                    Err(e) => return Err(lib(e)),
                };
                let mut row = vec![Cell::I(sd.n), Cell::I(cfg.level), Cell::I(idx), Cell::S(format!("z^{p}"))];
                row.extend(re_im(res.pairing));
                row.extend(re_im(res.expected));
                if dual {
                    row.extend(re_im(res.expected.conj()));
                }
                row.extend([Cell::F(res.defect), Cell::F(res.budget)]);
                rep.row(&row);
                checks.push(Check::at_most(format!("N={} point {idx} z^{p} representation", sd.n), res.defect, res.budget + slack));
            }
        }
    }
    if let Some(theta) = density_distribution(cfg, &model)? {
        let (sum, bound) = norm0_bound_check(&theta, grid, &r);
        checks.push(Check::at_most("density norm0 bound", sum, bound));
        for sd in &sds {
            for p in 0..=2 {
                let f = move |w: C<f64>| w.powi(p);
                let res = representation_defect(&theta, &f, power_hint(p, radius), sd, grid, &r, grid.min_gap() / 3.0).map_err(lib)?;
                let mut row = vec![Cell::I(sd.n), Cell::I(cfg.level), Cell::S("density".into()), Cell::S(format!("z^{p}"))];
                row.extend(re_im(res.pairing));
                row.extend(re_im(res.expected));
                if dual {
                    row.extend(re_im(res.expected.conj()));
                }
                row.extend([Cell::F(res.defect), Cell::F(res.budget)]);
                rep.row(&row);
            }
        }
    }
    tree.put("representation.csv", rep.finish());

    let mut header = vec!["N", "level", "beta_re", "beta_im", "value_re", "value_im", "expected_re", "expected_im"];
    if dual {
        header.extend(["expected_linear_re", "expected_linear_im"]);
    }
    header.extend(["error", "budget", "holder_bound", "matches_box_propagator"]);
    let mut table = Csv::new(&header);
    for sd in &sds {
        let op = kernel_operator(&k, sd);
        for beta in &betas {
            let d = match dirac_propagator(&op, &dirac(alpha), &dirac(*beta), sd, grid, &r) {
                Ok(d) => d,
                Err(cyclicspec::Error::InsufficientN { .. }) => continue,
                Err(e) => return Err(lib(e)),
            };
            let same = propagator(&op, alpha, *beta, cfg.level, sd, &family).map(|v| v == d.value).unwrap_or(false);
            let exact = k.at(alpha, *beta);
            let budget = k.lipschitz * (box_diam(grid, alpha) + box_diam(grid, *beta));
            let err = modulus(d.value - exact);
            let mut row = vec![Cell::I(sd.n), Cell::I(cfg.level)];
            row.extend(re_im(*beta));
            row.extend(re_im(d.value));
            row.extend(re_im(exact));
            if dual {
                row.extend(re_im(exact.conj()));
            }
            row.extend([Cell::F(err), Cell::F(budget), Cell::F(d.holder_bound), Cell::B(same)]);
            table.row(&row);
            checks.push(Check::at_most(format!("N={} beta=({},{}) propagator", sd.n, beta.re, beta.im), err, budget + slack));
            checks.push(Check::at_most(format!("N={} beta=({},{}) matches box propagator", sd.n, beta.re, beta.im), if same { 0.0 } else { 1.0 }, 0.0));
        }
    }
    tree.put("dirac.csv", table.finish());
    Ok(Outcome::new(tree, Summary::new("dirac", model.to_json(), cfg.seed, checks)))
}

pub fn box_diam(grid: &cyclicspec::Grid, z: C<f64>) -> f64 {
    grid.locate(z).map_or(f64::INFINITY, |(i, j)| grid.rect(i, j).diam())
}

/// `theta_g` for the configured polynomial density `g`, if any.
fn density_distribution(cfg: &RunConfig, model: &Model) -> Result<Option<impl GeneralizedDistribution<f64>>, CliError> {
    if cfg.density.is_empty() {
        return Ok(None);
    }
    let p = Polynomial::from_terms(cfg.density.iter().map(|(i, j, v)| ((*i, *j), *v)));
    Ok(Some(from_function(move |z| p.eval(z), reference(model)?.clone())))
}
