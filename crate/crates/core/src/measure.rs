//! Counting measures, nested box grids over `S = [-M, M]^2`, and the
//! per-`N` diagnostics that stand in for the limiting spectral measure.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::compression::SpectralData;
use crate::error::{Error, Result};
use crate::scalar::{arg, cis, fmt17, modulus, Real, C};

/// Finitely many weighted points.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure<T: Real> {
    pub points: Vec<C<T>>,
    pub masses: Vec<T>,
}

impl<T: Real> AtomicMeasure<T> {
    pub fn new(points: Vec<C<T>>, masses: Vec<T>) -> Self {
        assert_eq!(points.len(), masses.len(), "one mass per point");
        Self { points, masses }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new())
    }

    pub fn total(&self) -> T {
        self.masses.iter().fold(T::zero(), |a, m| a + *m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (C<T>, T)> + '_ {
        self.points.iter().copied().zip(self.masses.iter().copied())
    }

    pub fn mass_where(&self, pred: impl Fn(C<T>) -> bool) -> T {
        self.iter()
            .filter(|(p, _)| pred(*p))
            .fold(T::zero(), |a, (_, m)| a + m)
    }
}

/// `mu_N`: the eigenvalues weighted by `xi^2`.
pub fn counting_measure<T: Real>(sd: &SpectralData<T>) -> AtomicMeasure<T> {
    AtomicMeasure::new(sd.lambda.clone(), sd.xi.iter().map(|x| *x * *x).collect())
}

/// Axis-parallel rectangle. Boxes of a grid are open; regions use the
/// closed rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect<T: Real> {
    pub x_lo: T,
    pub x_hi: T,
    pub y_lo: T,
    pub y_hi: T,
}

impl<T: Real> Rect<T> {
    pub fn new(x_lo: T, x_hi: T, y_lo: T, y_hi: T) -> Self {
        Self { x_lo, x_hi, y_lo, y_hi }
    }

    pub fn contains_open(&self, z: C<T>) -> bool {
        self.x_lo < z.re && z.re < self.x_hi && self.y_lo < z.im && z.im < self.y_hi
    }

    pub fn contains_closed(&self, z: C<T>) -> bool {
        self.x_lo <= z.re && z.re <= self.x_hi && self.y_lo <= z.im && z.im <= self.y_hi
    }

    pub fn diam(&self) -> T {
        (self.x_hi - self.x_lo).hypot(self.y_hi - self.y_lo)
    }

    /// The closed `eps`-neighbourhood in the sup metric.
    pub fn fattened(&self, eps: T) -> Self {
        Self::new(self.x_lo - eps, self.x_hi + eps, self.y_lo - eps, self.y_hi + eps)
    }
}

/// Spectral measure of a model when it is known in closed form.
#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceMeasure<T: Real> {
    Atomic(AtomicMeasure<T>),
    /// Normalized arc length on `|z| = radius`.
    UniformCircle { radius: T },
}

/// Panels per full turn for arc quadrature.
const ARC_PANELS: usize = 512;
/// Trapezoid nodes for whole-circle integrals; exact for trigonometric
/// polynomials of lower degree.
const CIRCLE_NODES: usize = 4096;

fn two_pi<T: Real>() -> T {
    T::two_pi()
}

/// Maximal angle intervals in `[0, 2pi)` where `radius * e^{it}` lies in the
/// open rectangle.
fn arcs_in<T: Real>(radius: T, r: &Rect<T>) -> Vec<(T, T)> {
    let tp = two_pi::<T>();
    let mut cuts = vec![T::zero(), tp];
    let mut push = |t: T| {
        let t = if t < T::zero() { t + tp } else { t };
        if t > T::zero() && t < tp {
            cuts.push(t);
        }
    };
    for x in [r.x_lo, r.x_hi] {
        let q = x / radius;
        if q.mag() <= T::one() {
            let a = q.acos();
            push(a);
            push(-a);
        }
    }
    for y in [r.y_lo, r.y_hi] {
        let q = y / radius;
        if q.mag() <= T::one() {
            let a = q.asin();
            push(a);
            push(T::pi() - a);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<(T, T)> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= T::zero() {
            continue;
        }
        let mid = (a + b) / T::lit(2.0);
        if r.contains_open(cis(mid) * radius) {
            match out.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => out.push((a, b)),
            }
        }
    }
    out
}

fn simpson<T: Real>(f: &dyn Fn(T) -> C<T>, a: T, b: T) -> C<T> {
    let frac = ((b - a) / two_pi::<T>()).to_f();
    let mut n = ((ARC_PANELS as f64 * frac).ceil() as usize).max(8);
    n += n % 2;
    let h = (b - a) / T::from_count(n);
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
        acc += f(a + h * T::from_count(k)) * w;
    }
    acc * (h / T::lit(3.0))
}

impl<T: Real> ReferenceMeasure<T> {
    /// Image under `z -> q z`.
    pub fn scaled(&self, q: C<T>) -> Self {
        match self {
            ReferenceMeasure::Atomic(a) => ReferenceMeasure::Atomic(AtomicMeasure::new(
                a.points.iter().map(|p| *p * q).collect(),
                a.masses.clone(),
            )),
            ReferenceMeasure::UniformCircle { radius } => ReferenceMeasure::UniformCircle {
                radius: *radius * modulus(q),
            },
        }
    }

    pub fn total(&self) -> T {
        match self {
            ReferenceMeasure::Atomic(a) => a.total(),
            ReferenceMeasure::UniformCircle { .. } => T::one(),
        }
    }

    /// Mass of an open rectangle.
    pub fn mass_in(&self, r: &Rect<T>) -> T {
        match self {
            ReferenceMeasure::Atomic(a) => a.mass_where(|p| r.contains_open(p)),
            ReferenceMeasure::UniformCircle { radius } => arcs_in(*radius, r)
                .iter()
                .fold(T::zero(), |acc, (a, b)| acc + (*b - *a))
                / two_pi::<T>(),
        }
    }

    /// `int f dmu`.
    pub fn integrate(&self, f: &dyn Fn(C<T>) -> C<T>) -> C<T> {
        match self {
            ReferenceMeasure::Atomic(a) => a.iter().fold(C::default(), |acc, (p, m)| acc + f(p) * m),
            ReferenceMeasure::UniformCircle { radius } => {
                let n = CIRCLE_NODES;
                let h = two_pi::<T>() / T::from_count(n);
                let mut acc = C::default();
                for k in 0..n {
                    acc += f(cis(h * T::from_count(k)) * *radius);
                }
                acc / T::from_count(n)
            }
        }
    }

    /// `int_B f dmu` over an open rectangle.
    pub fn integrate_in(&self, f: &dyn Fn(C<T>) -> C<T>, r: &Rect<T>) -> C<T> {
        match self {
            ReferenceMeasure::Atomic(a) => a
                .iter()
                .filter(|(p, _)| r.contains_open(*p))
                .fold(C::default(), |acc, (p, m)| acc + f(p) * m),
            ReferenceMeasure::UniformCircle { radius } => {
                let rad = *radius;
                let g = |t: T| f(cis(t) * rad);
                arcs_in(rad, r)
                    .iter()
                    .fold(C::default(), |acc, (a, b)| acc + simpson(&g, *a, *b))
                    / two_pi::<T>()
            }
        }
    }

    /// Reference masses of every open box of `grid`.
    pub fn box_mass_matrix(&self, grid: &BoxGrid<T>) -> DMatrix<T> {
        let k = grid.boxes_per_side();
        match self {
            ReferenceMeasure::Atomic(a) => {
                let mut m = DMatrix::zeros(k, k);
                for (p, w) in a.iter() {
                    if let Some((i, j)) = grid.locate(p) {
                        m[(i, j)] += w;
                    }
                }
                m
            }
            ReferenceMeasure::UniformCircle { .. } => {
                DMatrix::from_fn(k, k, |i, j| self.mass_in(&grid.rect(i, j)))
            }
        }
    }
}

/// One level of the nested rectangle family.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxGrid<T: Real> {
    pub m: T,
    pub level: usize,
    /// Sorted, `2^{level+2} + 1` entries from `-M` to `M`.
    pub x_cuts: Vec<T>,
    pub y_cuts: Vec<T>,
    /// Absolute shift applied to every interior dyadic cut.
    pub offset: T,
}

/// Default jitter, as a fraction of the cut spacing.
pub const DEFAULT_JITTER: f64 = 0.0137;
const ATOM_CLEARANCE: f64 = 1e-9;
const MAX_RETRIES: usize = 50;

fn dyadic_cuts<T: Real>(m: T, level: usize, offset: T) -> Vec<T> {
    let k = 1usize << (level + 2);
    let step = m * T::lit(2.0) / T::from_count(k);
    (0..=k)
        .map(|i| {
            if i == 0 {
                -m
            } else if i == k {
                m
            } else {
                -m + step * T::from_count(i) + offset
            }
        })
        .collect()
}

fn step_at<T: Real>(m: T, level: usize) -> T {
    m * T::lit(2.0) / T::from_count(1usize << (level + 2))
}

impl<T: Real> BoxGrid<T> {
    /// Grid with an explicit absolute offset; no atom checks.
    pub fn with_offset(m: T, level: usize, offset: T) -> Result<Self> {
        if offset < T::zero() || offset >= step_at(m, level) {
            return Err(Error::InvalidParameter(format!(
                "grid offset {} must lie in [0, step) at level {level}",
                offset.to_f()
            )));
        }
        let cuts = dyadic_cuts(m, level, offset);
        Ok(Self {
            m,
            level,
            x_cuts: cuts.clone(),
            y_cuts: cuts,
            offset,
        })
    }

    pub fn boxes_per_side(&self) -> usize {
        self.x_cuts.len() - 1
    }

    pub fn step(&self) -> T {
        step_at(self.m, self.level)
    }

    pub fn min_gap(&self) -> T {
        let g = |c: &[T]| {
            c.windows(2)
                .map(|w| w[1] - w[0])
                .fold(T::max_value().unwrap(), |a, b| a.min(b))
        };
        g(&self.x_cuts).min(g(&self.y_cuts))
    }

    pub fn rect(&self, i: usize, j: usize) -> Rect<T> {
        Rect::new(self.x_cuts[i], self.x_cuts[i + 1], self.y_cuts[j], self.y_cuts[j + 1])
    }

    /// Largest box diameter.
    pub fn max_diam(&self) -> T {
        let w = |c: &[T]| {
            c.windows(2)
                .map(|w| w[1] - w[0])
                .fold(T::zero(), |a, b| a.max(b))
        };
        w(&self.x_cuts).hypot(w(&self.y_cuts))
    }

    /// Index `(i, j)` of the open box containing `z`, or `None` when `z` lies
    /// on a cut or outside `S`.
    pub fn locate(&self, z: C<T>) -> Option<(usize, usize)> {
        fn axis<T: Real>(cuts: &[T], v: T) -> Option<usize> {
            let k = cuts.partition_point(|c| *c < v);
            if k == 0 || k == cuts.len() || cuts[k] == v {
                None
            } else {
                Some(k - 1)
            }
        }
        Some((axis(&self.x_cuts, z.re)?, axis(&self.y_cuts, z.im)?))
    }

    /// Distance from `z` to the nearest cut line.
    pub fn distance_to_cuts(&self, z: C<T>) -> T {
        let d = |cuts: &[T], v: T| {
            cuts.iter()
                .map(|c| (*c - v).mag())
                .fold(T::max_value().unwrap(), |a, b| a.min(b))
        };
        d(&self.x_cuts, z.re).min(d(&self.y_cuts, z.im))
    }

    /// The closed strips of half-width `eps` around every cut line, clipped
    /// to `S`: the set `R^n_eps`.
    pub fn strips(&self, eps: T) -> Vec<Rect<T>> {
        let m = self.m;
        let mut out = Vec::new();
        for x in &self.x_cuts {
            out.push(Rect::new(*x - eps, *x + eps, -m, m));
        }
        for y in &self.y_cuts {
            out.push(Rect::new(-m, m, *y - eps, *y + eps));
        }
        out
    }

    /// Next level; old cuts are kept and midpoints inserted.
    pub fn refine(&self) -> Result<Self> {
        Self::with_offset(self.m, self.level + 1, self.offset)
    }

    /// Coarser level of the same family, by subsampling cuts.
    pub fn coarsen(&self, level: usize) -> Result<Self> {
        if level > self.level {
            return Err(Error::InvalidParameter("coarsen cannot raise the level".into()));
        }
        let stride = 1usize << (self.level - level);
        let pick = |c: &[T]| c.iter().step_by(stride).copied().collect::<Vec<_>>();
        Ok(Self {
            m: self.m,
            level,
            x_cuts: pick(&self.x_cuts),
            y_cuts: pick(&self.y_cuts),
            offset: self.offset,
        })
    }

    fn collides(&self, lines: &[T]) -> Vec<T> {
        let tol = T::tol(ATOM_CLEARANCE);
        let interior = &self.x_cuts[1..self.x_cuts.len() - 1];
        lines
            .iter()
            .filter(|a| interior.iter().any(|c| (*c - **a).mag() <= tol))
            .copied()
            .collect()
    }
}

/// Jittered dyadic grid whose interior cuts avoid the given atom lines.
pub fn build_grid<T: Real>(m: T, level: usize, atom_lines: &[T]) -> Result<BoxGrid<T>> {
    build_grid_with(m, level, atom_lines, T::lit(DEFAULT_JITTER))
}

pub fn build_grid_with<T: Real>(m: T, level: usize, atom_lines: &[T], eta: T) -> Result<BoxGrid<T>> {
    let mut eta = eta;
    let mut last = Vec::new();
    for _ in 0..MAX_RETRIES {
        let g = BoxGrid::with_offset(m, level, eta * step_at(m, level))?;
        last = g.collides(atom_lines);
        if last.is_empty() {
            return Ok(g);
        }
        eta = eta / T::lit(2.0) + T::lit(0.001);
    }
    Err(Error::GridConstruction {
        atoms: last.iter().map(|a| a.to_f()).collect(),
    })
}

/// Nested levels `0..=max_level` sharing one offset.
#[derive(Clone, Debug)]
pub struct GridFamily<T: Real> {
    pub levels: Vec<BoxGrid<T>>,
}

impl<T: Real> GridFamily<T> {
    pub fn build(m: T, max_level: usize, atom_lines: &[T]) -> Result<Self> {
        let finest = build_grid(m, max_level, atom_lines)?;
        let levels = (0..=max_level)
            .map(|l| finest.coarsen(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { levels })
    }

    pub fn level(&self, p: usize) -> &BoxGrid<T> {
        &self.levels[p]
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Per-box masses of one measure on one grid.
#[derive(Clone, Debug)]
pub struct BoxMasses<T: Real> {
    pub grid: BoxGrid<T>,
    pub eps: T,
    /// `mass[(i, j)] = mu(B_ij)` for the open box.
    pub mass: DMatrix<T>,
    /// Mass lying exactly on a cut line, hence in no open box.
    pub on_cut_mass: T,
    /// Mass within `eps` of some cut line (including `on_cut_mass`).
    pub boundary_mass: T,
}

/// Bins an atomic measure into the open boxes of `grid`.
pub fn box_masses<T: Real>(am: &AtomicMeasure<T>, grid: &BoxGrid<T>, eps: T) -> Result<BoxMasses<T>> {
    if eps < T::zero() || eps * T::lit(2.0) >= grid.min_gap() {
        return Err(Error::InvalidParameter(format!(
            "eps = {} must be below half the minimal cut gap",
            eps.to_f()
        )));
    }
    let k = grid.boxes_per_side();
    let mut mass = DMatrix::zeros(k, k);
    let mut on_cut = T::zero();
    let mut boundary = T::zero();
    for (p, w) in am.iter() {
        match grid.locate(p) {
            Some((i, j)) => mass[(i, j)] += w,
            None => on_cut += w,
        }
        if grid.distance_to_cuts(p) <= eps {
            boundary += w;
        }
    }
    Ok(BoxMasses {
        grid: grid.clone(),
        eps,
        mass,
        on_cut_mass: on_cut,
        boundary_mass: boundary,
    })
}

impl<T: Real> BoxMasses<T> {
    pub fn total(&self) -> T {
        self.mass.sum() + self.on_cut_mass
    }

    /// Smallest positive box mass.
    pub fn min_positive(&self) -> Option<T> {
        self.mass
            .iter()
            .copied()
            .filter(|m| *m > T::zero())
            .fold(None, |a: Option<T>, b| Some(a.map_or(b, |a| a.min(b))))
    }

    /// CSV with header `level,i,j,x_lo,x_hi,y_lo,y_hi,mass`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,i,j,x_lo,x_hi,y_lo,y_hi,mass\n");
        let k = self.grid.boxes_per_side();
        for i in 0..k {
            for j in 0..k {
                let r = self.grid.rect(i, j);
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    self.grid.level,
                    i,
                    j,
                    fmt17(r.x_lo),
                    fmt17(r.x_hi),
                    fmt17(r.y_lo),
                    fmt17(r.y_hi),
                    fmt17(self.mass[(i, j)])
                )
                .unwrap();
            }
        }
        s
    }
}

/// Coordinates `r` whose thin strip `|Re - r| < 1e-9` (resp. `Im`) carries
/// more than `delta` in every supplied measure.
pub fn detect_atomic_lines<T: Real>(measures: &[AtomicMeasure<T>], delta: T) -> (Vec<T>, Vec<T>) {
    let width = T::tol(ATOM_CLEARANCE);
    let scan = |coord: &dyn Fn(C<T>) -> T| {
        let Some(first) = measures.first() else {
            return Vec::new();
        };
        let mut cands: Vec<T> = first.points.iter().map(|p| coord(*p)).collect();
        cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cands.dedup_by(|a, b| (*a - *b).mag() < width);
        cands
            .into_iter()
            .filter(|r| {
                measures
                    .iter()
                    .all(|m| m.mass_where(|p| (coord(p) - *r).mag() < width) > delta)
            })
            .collect()
    };
    (scan(&|p| p.re), scan(&|p| p.im))
}

/// Boxes carrying mass at least `floor` at the largest `N`.
#[derive(Clone, Debug)]
pub struct SpectrumEstimate<T: Real> {
    pub grid: BoxGrid<T>,
    pub boxes: Vec<(usize, usize)>,
    /// `stable[k]`: box `k` carries at least `floor` in every element.
    pub stable: Vec<bool>,
    /// Mass of the selected boxes in the last element.
    pub mass: T,
}

impl<T: Real> SpectrumEstimate<T> {
    pub fn rects(&self) -> Vec<Rect<T>> {
        self.boxes.iter().map(|(i, j)| self.grid.rect(*i, *j)).collect()
    }

    /// Whether `z` lies in the closure of the selected boxes.
    pub fn contains_closed(&self, z: C<T>) -> bool {
        self.rects().iter().any(|r| r.contains_closed(z))
    }
}

pub fn estimate_spectrum<T: Real>(bm_sequence: &[BoxMasses<T>], floor: T) -> Result<SpectrumEstimate<T>> {
    let last = bm_sequence
        .last()
        .ok_or_else(|| Error::InvalidParameter("empty box-mass sequence".into()))?;
    if bm_sequence.iter().any(|b| b.grid != last.grid) {
        return Err(Error::InvalidParameter("box masses live on different grids".into()));
    }
    let k = last.grid.boxes_per_side();
    let mut boxes = Vec::new();
    let mut stable = Vec::new();
    let mut mass = T::zero();
    for i in 0..k {
        for j in 0..k {
            let m = last.mass[(i, j)];
            if m >= floor {
                boxes.push((i, j));
                stable.push(bm_sequence.iter().all(|b| b.mass[(i, j)] >= floor));
                mass += m;
            }
        }
    }
    Ok(SpectrumEstimate {
        grid: last.grid.clone(),
        boxes,
        stable,
        mass,
    })
}

/// What a box-mass table is compared against.
pub enum Reference<'a, T: Real> {
    Measure(&'a ReferenceMeasure<T>),
    Boxes(&'a BoxMasses<T>),
}

/// `max_B |mu_N(B) - mu_ref(B)|`.
pub fn measure_discrepancy<T: Real>(bm: &BoxMasses<T>, reference: Reference<'_, T>) -> Result<T> {
    let other = match reference {
        Reference::Measure(r) => r.box_mass_matrix(&bm.grid),
        Reference::Boxes(b) => {
            if b.grid != bm.grid {
                return Err(Error::InvalidParameter("box masses live on different grids".into()));
            }
            b.mass.clone()
        }
    };
    Ok((&bm.mass - other).iter().fold(T::zero(), |a, d| a.max(d.mag())))
}

/// Masses of `count` equal angular sectors `[2 pi k/count, 2 pi (k+1)/count)`.
pub fn sector_masses<T: Real>(am: &AtomicMeasure<T>, count: usize) -> Vec<T> {
    let mut out = vec![T::zero(); count];
    for (p, w) in am.iter() {
        let mut t = arg(p) / two_pi::<T>();
        if t < T::zero() {
            t += T::one();
        }
        let pos = (t * T::from_count(count) + T::tol(1e-9)).floor().to_f() as usize;
        out[pos % count] += w;
    }
    out
}

/// Largest level `p` at which every query point sits in an open box of
/// positive `am`-mass.
pub fn max_usable_level<T: Real>(am: &AtomicMeasure<T>, family: &GridFamily<T>, points: &[C<T>]) -> Option<usize> {
    let mut best = None;
    for (p, grid) in family.levels.iter().enumerate() {
        let ok = points.iter().all(|z| match grid.locate(*z) {
            Some((i, j)) => {
                let r = grid.rect(i, j);
                am.mass_where(|q| r.contains_open(q)) > T::zero()
            }
            None => false,
        });
        if ok {
            best = Some(p);
        } else {
            break;
        }
    }
    best
}

/// Equal masses at the `count`-th roots of unity, scaled by `radius`.
pub fn roots_of_unity<T: Real>(count: usize, radius: T) -> AtomicMeasure<T> {
    let w = T::one() / T::from_count(count);
    AtomicMeasure::new(
        (0..count)
            .map(|k| cis(two_pi::<T>() * T::from_count(k) * w) * radius)
            .collect(),
        vec![w; count],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{c, cr};

    fn diag3_atoms() -> AtomicMeasure<f64> {
        let w = 1.0 / 3.0;
        AtomicMeasure::new(vec![cr(1.0), c(0.0, 1.0), cr(-1.0)], vec![w, w, w])
    }

    #[test]
    fn grid_shape() {
        let g = build_grid(2.0, 0, &[]).unwrap();
        assert_eq!(g.x_cuts.len(), 5);
        assert_eq!(g.x_cuts[0], -2.0);
        assert_eq!(g.x_cuts[4], 2.0);
        assert!(g.x_cuts.windows(2).all(|w| w[0] < w[1]));
        assert!(g.min_gap() > 0.0);
        let gap = g.x_cuts.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(gap < 4.0 / 1.0);
    }

    #[test]
    fn refine_nests() {
        let g = build_grid(2.0f64, 1, &[]).unwrap();
        let h = g.refine().unwrap();
        assert_eq!(h.x_cuts.len(), 17);
        for cut in &g.x_cuts {
            assert!(h.x_cuts.iter().any(|d| (d - cut).abs() < 1e-15));
        }
        assert_eq!(h.coarsen(1).unwrap(), g);
    }

    #[test]
    fn jitter_avoids_dyadic_atoms() {
        let m = 2.0;
        let level = 2;
        let step = 4.0 / 16.0;
        let eta = DEFAULT_JITTER;
        // atoms sitting on every cut of the first two attempts
        let mut atoms: Vec<f64> = (1..16).map(|k| -m + k as f64 * step + eta * step).collect();
        let eta2 = eta / 2.0 + 0.001;
        atoms.extend((1..16).map(|k| -m + k as f64 * step + eta2 * step));
        let g = build_grid(m, level, &atoms).unwrap();
        for a in &atoms {
            assert!(g.x_cuts.iter().all(|c| (c - a).abs() > 1e-9));
        }
    }

    #[test]
    fn diag3_boxes() {
        let g = build_grid(2.0, 2, &[1.0, 0.0, -1.0]).unwrap();
        let bm = box_masses(&diag3_atoms(), &g, 1e-3).unwrap();
        let mut nonzero: Vec<f64> = bm.mass.iter().copied().filter(|m| *m > 0.0).collect();
        nonzero.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(nonzero.len(), 3);
        for m in nonzero {
            assert!((m - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(bm.boundary_mass, 0.0);
        assert!((bm.total() - 1.0).abs() < 1e-12);
        let empty = box_masses(&AtomicMeasure::empty(), &g, 1e-3).unwrap();
        assert_eq!(empty.mass.sum(), 0.0);
    }

    #[test]
    fn atom_on_cut_goes_to_boundary() {
        let g = BoxGrid::with_offset(2.0, 0, 0.0).unwrap();
        let am = AtomicMeasure::new(vec![cr(0.0), c(0.5, 0.5)], vec![0.25, 0.75]);
        let bm = box_masses(&am, &g, 0.01).unwrap();
        assert_eq!(bm.on_cut_mass, 0.25);
        assert_eq!(bm.boundary_mass, 0.25);
        assert_eq!(bm.mass.sum(), 0.75);
        assert!(box_masses(&am, &g, 0.6).is_err());
    }

    #[test]
    fn atomic_lines() {
        let (x, y) = detect_atomic_lines(&[diag3_atoms()], 0.2);
        assert_eq!(x, vec![-1.0, 0.0, 1.0]);
        assert_eq!(y, vec![0.0, 1.0]);
        let (x, y) = detect_atomic_lines(&[diag3_atoms()], 1.5);
        assert!(x.is_empty() && y.is_empty());
    }

    #[test]
    fn circle_arcs() {
        let circle = ReferenceMeasure::UniformCircle { radius: 1.0f64 };
        let whole = Rect::new(-2.0, 2.0, -2.0, 2.0);
        assert!((circle.mass_in(&whole) - 1.0).abs() < 1e-14);
        let quadrant = Rect::new(0.0, 2.0, 0.0, 2.0);
        assert!((circle.mass_in(&quadrant) - 0.25).abs() < 1e-14);
        // the strip 0.5 < x < 2 sees angles |t| < pi/3
        let strip = Rect::new(0.5, 2.0, -2.0, 2.0);
        assert!((circle.mass_in(&strip) - 1.0 / 3.0).abs() < 1e-14);
        let inner = Rect::new(-0.5, 0.5, -0.5, 0.5);
        assert_eq!(circle.mass_in(&inner), 0.0);
        let z = circle.integrate_in(&|z| z, &quadrant);
        // (1/2pi) int_0^{pi/2} e^{it} dt = (1 + i)/(2 pi)
        let want = c(1.0, 1.0) / std::f64::consts::TAU;
        assert!((z - want).norm() < 1e-10);
        let total = circle.integrate(&|z| z * z.conj() + z);
        assert!((total - cr(1.0)).norm() < 1e-12);
    }

    #[test]
    fn sectors_of_roots() {
        let am = roots_of_unity::<f64>(101, 1.0);
        for s in sector_masses(&am, 8) {
            assert!((s - 0.125).abs() <= 1.0 / 101.0);
        }
    }

    #[test]
    fn discrepancy_and_spectrum() {
        let g = build_grid(2.0, 2, &[1.0, 0.0, -1.0]).unwrap();
        let atoms = diag3_atoms();
        let bm = box_masses(&atoms, &g, 1e-3).unwrap();
        let r = ReferenceMeasure::Atomic(atoms.clone());
        assert!(measure_discrepancy(&bm, Reference::Measure(&r)).unwrap() < 1e-12);
        let far = AtomicMeasure::new(vec![c(-1.5, -1.5)], vec![1.0]);
        let bf = box_masses(&far, &g, 1e-3).unwrap();
        let d = measure_discrepancy(&bm, Reference::Boxes(&bf)).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let est = estimate_spectrum(std::slice::from_ref(&bm), 1e-3).unwrap();
        assert_eq!(est.boxes.len(), 3);
        assert!(est.stable.iter().all(|s| *s));
        assert!(estimate_spectrum(&[bm], 1.5).unwrap().boxes.is_empty());
    }

    #[test]
    fn usable_level() {
        let fam = GridFamily::build(2.0, 6, &[]).unwrap();
        let am = roots_of_unity::<f64>(11, 1.0);
        // an atom is always usable
        assert_eq!(max_usable_level(&am, &fam, &[cr(1.0)]), Some(6));
        // halfway between two atoms the boxes eventually run empty
        let mid = cis(std::f64::consts::PI / 11.0);
        let p = max_usable_level(&am, &fam, &[mid]).unwrap();
        assert!(p < 6);
    }
}
