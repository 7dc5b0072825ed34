//! Support of the limit law and its spectral gaps.
//!
//! On the real line the companion value map
//! `x(mu) = -1/mu + c Σ w t / (1 + t mu)` is the functional inverse of the
//! companion transform outside the support. The complement of the support on
//! `(0, ∞)` is the union of the images `x(I)` over the maximal intervals `I`
//! (avoiding the poles `0` and `-1/t_k`) on which `x` is increasing. Each
//! support edge is therefore a critical value `x(mu*)` with `x'(mu*) = 0`.

use crate::par::{self, Execution};
use crate::stieltjes::{AspectRatio, SpectralMeasure};
use crate::{Error, Result};

const POLE_TOL: f64 = 1e-12;
const GRID_POINTS: usize = 4096;
const MERGE_TOL: f64 = 1e-8;
/// Default gap margin as a fraction of the gap width.
pub const DEFAULT_MARGIN_FRACTION: f64 = 1e-3;

/// Support of the limit law on `(0, ∞)` plus the atoms at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportSet {
    intervals: Vec<(f64, f64)>,
    zero_atom_weight: f64,
    lsd_zero_atom_weight: f64,
}

impl SupportSet {
    /// Sorted, disjoint `(left, right)` pairs with `0 <= left < right`.
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Atom at zero of the companion law `F̲ = (1 - c) δ₀ + c F`.
    pub fn zero_atom_weight(&self) -> f64 {
        self.zero_atom_weight
    }

    /// Atom at zero of the limit law `F` itself (`1 - 1/c` when `c > 1`).
    pub fn lsd_zero_atom_weight(&self) -> f64 {
        self.lsd_zero_atom_weight
    }

    pub fn left_edge(&self) -> Option<f64> {
        self.intervals.first().map(|i| i.0)
    }

    pub fn right_edge(&self) -> Option<f64> {
        self.intervals.last().map(|i| i.1)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(l, r)| l <= x && x <= r)
    }

    /// Interior gaps between consecutive intervals, shrunk by the default
    /// margin so that `[a - margin, b + margin]` stays clear of the support.
    pub fn gaps(&self) -> Vec<GapInterval> {
        self.intervals
            .windows(2)
            .filter_map(|w| {
                let (lo, hi) = (w[0].1, w[1].0);
                let margin = DEFAULT_MARGIN_FRACTION * (hi - lo);
                GapInterval::new(lo + 2.0 * margin, hi - 2.0 * margin, margin).ok()
            })
            .collect()
    }
}

/// An interval `[a, b]`, `a > 0`, kept at distance `margin` from the support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapInterval {
    pub a: f64,
    pub b: f64,
    pub margin: f64,
}

impl GapInterval {
    pub fn new(a: f64, b: f64, margin: f64) -> Result<Self> {
        if !(a > 0.0 && a < b && margin > 0.0 && b.is_finite()) {
            return Err(Error::NoGap(format!(
                "[{a}, {b}] with margin {margin} is not a valid gap interval"
            )));
        }
        Ok(Self { a, b, margin })
    }

    pub fn is_clear_of(&self, support: &SupportSet) -> bool {
        is_outside_support((self.a, self.b), support, self.margin)
    }
}

/// True iff `[a - margin, b + margin]` misses every support interval and
/// `a - margin > 0`.
pub fn is_outside_support(interval: (f64, f64), support: &SupportSet, margin: f64) -> bool {
    let (a, b) = interval;
    if !(a > 0.0 && a < b) {
        return false;
    }
    let (lo, hi) = (a - margin, b + margin);
    lo > 0.0 && support.intervals.iter().all(|&(l, r)| hi < l || lo > r)
}

fn real_value_map(mu: f64, c: f64, h: &SpectralMeasure) -> f64 {
    let mut acc = 0.0;
    for a in h.atoms() {
        if a.location != 0.0 {
            acc += a.weight * a.location / (1.0 + a.location * mu);
        }
    }
    -1.0 / mu + c * acc
}

fn real_derivative(mu: f64, c: f64, h: &SpectralMeasure) -> f64 {
    let mut acc = 0.0;
    for a in h.atoms() {
        if a.location != 0.0 {
            let d = 1.0 + a.location * mu;
            acc += a.weight * a.location * a.location / (d * d);
        }
    }
    1.0 / (mu * mu) - c * acc
}

fn near_pole(mu: f64, h: &SpectralMeasure) -> bool {
    mu.abs() < POLE_TOL
        || h.atoms()
            .iter()
            .any(|a| a.location != 0.0 && (1.0 + a.location * mu).abs() < POLE_TOL * a.location.max(1.0))
}

/// `x'(mu) = 1/mu² - c Σ w t² / (1 + t mu)²` on the real line.
pub fn value_map_derivative(mu: f64, c: AspectRatio, h: &SpectralMeasure) -> Result<f64> {
    if !mu.is_finite() || near_pole(mu, h) {
        return Err(Error::Pole { re: mu, im: 0.0 });
    }
    Ok(real_derivative(mu, c.value(), h))
}

/// Real companion value map `x(mu)`.
pub fn value_map_real(mu: f64, c: AspectRatio, h: &SpectralMeasure) -> Result<f64> {
    if !mu.is_finite() || near_pole(mu, h) {
        return Err(Error::Pole { re: mu, im: 0.0 });
    }
    Ok(real_value_map(mu, c.value(), h))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Bound {
    NegInf,
    PosInf,
    /// Pole at `mu = -1/t` (`t > 0`) or at `mu = 0`.
    Pole(f64),
}

/// A critical point `x'(mu) = 0` and its critical value `x(mu)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub mu: f64,
    pub x: f64,
}

struct Branch {
    lo: Bound,
    hi: Bound,
}

fn branches(h: &SpectralMeasure) -> Vec<Branch> {
    let mut poles: Vec<f64> = h
        .atoms()
        .iter()
        .filter(|a| a.location > 0.0)
        .map(|a| -1.0 / a.location)
        .collect();
    poles.push(0.0);
    poles.sort_by(f64::total_cmp);
    poles.dedup();
    let mut out = Vec::with_capacity(poles.len() + 1);
    let mut lo = Bound::NegInf;
    for &p in &poles {
        out.push(Branch { lo, hi: Bound::Pole(p) });
        lo = Bound::Pole(p);
    }
    out.push(Branch { lo, hi: Bound::PosInf });
    out
}

fn geometric(from: f64, to: f64, count: usize) -> impl Iterator<Item = f64> {
    let (lf, lt) = (from.ln(), to.ln());
    (0..count).map(move |j| (lf + (lt - lf) * j as f64 / (count - 1) as f64).exp())
}

/// Composite scan grid on a branch: geometric clustering toward finite ends
/// plus a linear fill, strictly inside the branch.
fn branch_grid(branch: &Branch) -> Vec<f64> {
    let mut pts = Vec::with_capacity(GRID_POINTS + 8);
    match (branch.lo, branch.hi) {
        (Bound::Pole(l), Bound::Pole(r)) => {
            let width = r - l;
            let quarter = GRID_POINTS / 4;
            for d in geometric(1e-13 * width, 0.25 * width, quarter) {
                pts.push(l + d);
                pts.push(r - d);
            }
            let lin = GRID_POINTS - 2 * quarter;
            for j in 1..lin {
                pts.push(l + width * j as f64 / lin as f64);
            }
        }
        (Bound::NegInf, Bound::Pole(r)) => {
            let scale = r.abs().max(1.0);
            for d in geometric(1e-13 * scale, 1e13 * scale, GRID_POINTS) {
                pts.push(r - d);
            }
        }
        (Bound::Pole(l), Bound::PosInf) => {
            let scale = l.abs().max(1.0);
            for d in geometric(1e-13 * scale, 1e13 * scale, GRID_POINTS) {
                pts.push(l + d);
            }
        }
        _ => unreachable!("branches always have at least one pole end"),
    }
    pts.retain(|&m| match (branch.lo, branch.hi) {
        (Bound::Pole(l), Bound::Pole(r)) => m > l && m < r,
        (Bound::NegInf, Bound::Pole(r)) => m < r,
        (Bound::Pole(l), _) => m > l,
        _ => true,
    });
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn bisect_root(mut lo: f64, mut hi: f64, c: f64, h: &SpectralMeasure) -> Result<f64> {
    let mut f_lo = real_derivative(lo, c, h);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * mid.abs().max(1.0) || mid == lo || mid == hi {
            return Ok(mid);
        }
        let f_mid = real_derivative(mid, c, h);
        if !f_mid.is_finite() {
            return Err(Error::RootFinding { lo, hi });
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootFinding { lo, hi })
}

/// Limit of `x` approaching a branch end from inside the branch.
fn end_limit(bound: Bound, from_left: bool) -> f64 {
    match bound {
        Bound::NegInf | Bound::PosInf => 0.0,
        Bound::Pole(0.0) => {
            if from_left {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        }
        Bound::Pole(_) => {
            if from_left {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        }
    }
}

struct BranchScan {
    critical: Vec<CriticalPoint>,
    /// Images `(x_lo, x_hi)` of the increasing segments.
    images: Vec<(f64, f64)>,
}

fn scan_branch(branch: &Branch, c: f64, h: &SpectralMeasure) -> Result<BranchScan> {
    let grid = branch_grid(branch);
    let signs: Vec<(f64, f64)> = grid
        .iter()
        .map(|&m| (m, real_derivative(m, c, h)))
        .filter(|(_, d)| d.is_finite() && *d != 0.0)
        .collect();
    let mut roots = Vec::new();
    for w in signs.windows(2) {
        if (w[0].1 > 0.0) != (w[1].1 > 0.0) {
            roots.push(bisect_root(w[0].0, w[1].0, c, h)?);
        }
    }
    let critical: Vec<CriticalPoint> = roots
        .iter()
        .map(|&mu| CriticalPoint {
            mu,
            x: real_value_map(mu, c, h),
        })
        .collect();

    // Segment k runs between boundary k and k+1: [lo, roots..., hi].
    let mut images = Vec::new();
    let seg_count = roots.len() + 1;
    for k in 0..seg_count {
        let seg_lo = if k == 0 { None } else { Some(roots[k - 1]) };
        let seg_hi = if k == roots.len() { None } else { Some(roots[k]) };
        let inside = signs.iter().find(|(m, _)| {
            seg_lo.is_none_or(|l| *m > l) && seg_hi.is_none_or(|r| *m < r)
        });
        let Some(&(_, sign)) = inside else { continue };
        if sign <= 0.0 {
            continue;
        }
        let x_lo = match seg_lo {
            Some(mu) => real_value_map(mu, c, h),
            None => end_limit(branch.lo, false),
        };
        let x_hi = match seg_hi {
            Some(mu) => real_value_map(mu, c, h),
            None => end_limit(branch.hi, true),
        };
        if x_hi > x_lo {
            images.push((x_lo, x_hi));
        }
    }
    Ok(BranchScan { critical, images })
}

fn scan_all(c: AspectRatio, h: &SpectralMeasure) -> Result<Vec<BranchScan>> {
    let bs = branches(h);
    par::try_map_indexed(Execution::default(), bs.len(), |i| scan_branch(&bs[i], c.value(), h))
}

/// All real critical points of the companion value map.
pub fn critical_points(c: AspectRatio, h: &SpectralMeasure) -> Result<Vec<CriticalPoint>> {
    Ok(scan_all(c, h)?.into_iter().flat_map(|s| s.critical).collect())
}

/// Support of the limit law on `(0, ∞)`, with edges to about `1e-9`.
pub fn find_support(c: AspectRatio, h: &SpectralMeasure) -> Result<SupportSet> {
    let scans = scan_all(c, h)?;
    let mut covered: Vec<(f64, f64)> = scans
        .iter()
        .flat_map(|s| s.images.iter().copied())
        .filter_map(|(lo, hi)| {
            let lo = lo.max(0.0);
            (hi > lo).then_some((lo, hi))
        })
        .collect();
    covered.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut reach = 0.0f64;
    for (lo, hi) in covered {
        if lo > reach {
            intervals.push((reach, lo));
        }
        reach = reach.max(hi);
    }
    if reach.is_finite() && h.max_location() > 0.0 {
        return Err(Error::RootFinding { lo: reach, hi: f64::INFINITY });
    }

    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match merged.last_mut() {
            Some(last) if iv.0 - last.1 <= MERGE_TOL => last.1 = iv.1,
            _ => merged.push(iv),
        }
    }
    merged.retain(|&(l, r)| r - l > MERGE_TOL);

    let cv = c.value();
    let w0 = h.zero_weight();
    let lsd_zero = w0.max(1.0 - 1.0 / cv).max(0.0);
    Ok(SupportSet {
        intervals: merged,
        zero_atom_weight: (1.0 - cv + cv * lsd_zero).max(0.0),
        lsd_zero_atom_weight: lsd_zero,
    })
}

/// Right endpoint of the rightmost support interval.
pub fn largest_edge(c: AspectRatio, h: &SpectralMeasure) -> Result<f64> {
    find_support(c, h)?
        .right_edge()
        .ok_or_else(|| Error::InvalidMeasure("measure has empty support".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ar(c: f64) -> AspectRatio {
        AspectRatio::new(c).unwrap()
    }

    fn mp_edges(c: f64) -> (f64, f64) {
        ((1.0 - c.sqrt()).powi(2), (1.0 + c.sqrt()).powi(2))
    }

    fn support_of(c: f64, lo: f64, hi: f64) -> SupportSet {
        SupportSet {
            intervals: vec![(lo, hi)],
            zero_atom_weight: (1.0 - c).max(0.0),
            lsd_zero_atom_weight: 0.0,
        }
    }

    #[test]
    fn derivative_examples() {
        let d1 = SpectralMeasure::point_mass(1.0).unwrap();
        assert!(value_map_derivative(-2.0, ar(0.25), &d1).unwrap().abs() < 1e-15);
        let d = value_map_derivative(-10.0, ar(0.25), &d1).unwrap();
        assert!((d - (0.01 - 0.25 / 81.0)).abs() < 1e-15);
        assert!((d - 0.006914).abs() < 1e-6);
        assert!(value_map_derivative(0.0, ar(0.25), &d1).is_err());
        assert!(value_map_derivative(-1.0, ar(0.25), &d1).is_err());
    }

    #[test]
    fn marchenko_pastur_support() {
        for &c in &[0.1, 0.25, 0.5, 0.9] {
            let s = find_support(ar(c), &SpectralMeasure::point_mass(1.0).unwrap()).unwrap();
            let (a, b) = mp_edges(c);
            assert_eq!(s.intervals().len(), 1);
            assert!((s.intervals()[0].0 - a).abs() < 1e-9, "c={c}");
            assert!((s.intervals()[0].1 - b).abs() < 1e-9, "c={c}");
            assert!((s.zero_atom_weight() - (1.0 - c)).abs() < 1e-15);
            assert_eq!(s.lsd_zero_atom_weight(), 0.0);
        }
    }

    #[test]
    fn support_for_c_at_least_one() {
        let d1 = SpectralMeasure::point_mass(1.0).unwrap();
        let s = find_support(ar(1.0), &d1).unwrap();
        assert_eq!(s.intervals().len(), 1);
        assert!(s.intervals()[0].0.abs() < 1e-9);
        assert!((s.intervals()[0].1 - 4.0).abs() < 1e-9);

        let s = find_support(ar(2.0), &d1).unwrap();
        let (a, b) = mp_edges(2.0);
        assert!((s.intervals()[0].0 - a).abs() < 1e-9);
        assert!((s.intervals()[0].1 - b).abs() < 1e-9);
        assert!((s.lsd_zero_atom_weight() - 0.5).abs() < 1e-15);
        assert_eq!(s.zero_atom_weight(), 0.0);
    }

    #[test]
    fn scaled_population() {
        let s = find_support(ar(0.25), &SpectralMeasure::point_mass(4.0).unwrap()).unwrap();
        assert!((s.intervals()[0].0 - 1.0).abs() < 1e-9);
        assert!((s.intervals()[0].1 - 9.0).abs() < 1e-9);
    }

    #[test]
    fn largest_edge_examples() {
        let d1 = SpectralMeasure::point_mass(1.0).unwrap();
        assert!((largest_edge(ar(0.5), &d1).unwrap() - 2.914213562).abs() < 1e-9);
        assert!((largest_edge(ar(1.0), &d1).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn outside_support_examples() {
        let s = support_of(0.25, 0.25, 2.25);
        assert!(is_outside_support((3.0, 4.0), &s, 0.1));
        assert!(!is_outside_support((2.0, 3.0), &s, 0.1));
        assert!(!is_outside_support((2.3, 3.0), &s, 0.1));
        assert!(!is_outside_support((0.05, 0.2), &s, 0.1));
        assert!(is_outside_support((0.15, 0.2), &s, 0.01));
    }

    #[test]
    fn two_cluster_gap() {
        let h = SpectralMeasure::new([(1.0, 0.5), (10.0, 0.5)]).unwrap();
        let s = find_support(ar(0.05), &h).unwrap();
        assert_eq!(s.intervals().len(), 2);
        let gaps = s.gaps();
        assert_eq!(gaps.len(), 1);
        assert!(gaps[0].is_clear_of(&s));
        let (r, l) = (s.intervals()[0].1, s.intervals()[1].0);
        assert!((gaps[0].a - r - 2.0 * gaps[0].margin).abs() < 1e-12);
        assert!((gaps[0].margin - 1e-3 * (l - r)).abs() < 1e-12);
    }

    #[test]
    fn gap_closes_for_large_ratio() {
        let h = SpectralMeasure::new([(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let s = find_support(ar(1.0), &h).unwrap();
        assert_eq!(s.intervals().len(), 1);
        assert!(s.gaps().is_empty());
    }

    #[test]
    fn zero_population_atom() {
        let h = SpectralMeasure::new([(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let s = find_support(ar(0.5), &h).unwrap();
        assert!((s.lsd_zero_atom_weight() - 0.5).abs() < 1e-15);
        // the nonzero half behaves like δ₁ at ratio c/2
        let (a, b) = mp_edges(0.25);
        assert!((s.intervals()[0].0 - a).abs() < 1e-9);
        assert!((s.intervals()[0].1 - b).abs() < 1e-9);
    }
}
