//! Stieltjes transform of the limiting spectral distribution.
//!
//! For a population spectrum `H` and aspect ratio `c`, the companion transform
//! `mu = m̲(z)` is the unique root in the upper half plane of
//!
//! ```text
//! mu = -1 / (z - c ∫ t / (1 + t mu) dH(t))
//! ```
//!
//! and the transform of the limit law itself follows from
//! `m̲ = -(1 - c)/z + c m`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::{Error, Result};

/// Imaginary height at which densities are read off by Stieltjes inversion.
pub const DENSITY_EVAL_HEIGHT: f64 = 1e-6;

const POLE_TOL: f64 = 1e-14;
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// One atom of a discrete spectral measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Discrete population spectral distribution `H = Σ w_k δ_{t_k}`.
///
/// Atoms are kept sorted by location; locations are distinct and nonnegative,
/// weights positive and summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasure {
    atoms: Vec<Atom>,
}

impl SpectralMeasure {
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(location, weight)| Atom { location, weight })
            .collect();
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        for a in &atoms {
            if !a.location.is_finite() || a.location < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom location {} must be finite and nonnegative",
                    a.location
                )));
            }
            if !a.weight.is_finite() || a.weight <= 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom weight {} must be positive",
                    a.weight
                )));
            }
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        if atoms.windows(2).any(|w| w[0].location == w[1].location) {
            return Err(Error::InvalidMeasure("duplicate atom location".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { atoms })
    }

    /// `δ_t`.
    pub fn point_mass(location: f64) -> Result<Self> {
        Self::new([(location, 1.0)])
    }

    /// Empirical measure of `values` with weight `1/len` each. Values within
    /// `merge_tol` of the first value of a cluster are merged into one atom at
    /// the cluster mean; tiny negative values (rounding) are clamped to zero.
    pub fn from_eigenvalues(values: &[f64], merge_tol: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidMeasure("no eigenvalues".into()));
        }
        let mut sorted: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
        sorted.sort_by(f64::total_cmp);
        let w = 1.0 / sorted.len() as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut start = 0;
        for i in 1..=sorted.len() {
            if i == sorted.len() || sorted[i] - sorted[start] > merge_tol {
                let cluster = &sorted[start..i];
                let mean = cluster.iter().sum::<f64>() / cluster.len() as f64;
                atoms.push((mean, w * cluster.len() as f64));
                start = i;
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for a in &mut atoms {
            a.1 /= total;
        }
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Every location multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidMeasure(format!("scale {s} must be positive")));
        }
        Self::new(self.atoms.iter().map(|a| (a.location * s, a.weight)))
    }

    /// Mass of `H` at zero.
    pub fn zero_weight(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.location == 0.0)
            .map(|a| a.weight)
            .sum()
    }

    pub fn max_location(&self) -> f64 {
        self.atoms.last().map_or(0.0, |a| a.location)
    }

    /// `Σ w t / (1 + t mu)`, or `None` when `mu` sits on a pole `-1/t`.
    fn weighted_resolvent(&self, mu: Complex64) -> Option<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            if a.location == 0.0 {
                continue;
            }
            let denom = 1.0 + a.location * mu;
            if denom.norm() < POLE_TOL * a.location.max(1.0) {
                return None;
            }
            acc += a.weight * a.location / denom;
        }
        Some(acc)
    }

    /// `Σ w t² / (1 + t mu)²`.
    fn weighted_resolvent_sq(&self, mu: Complex64) -> Complex64 {
        self.atoms
            .iter()
            .filter(|a| a.location != 0.0)
            .map(|a| {
                let denom = 1.0 + a.location * mu;
                a.weight * a.location * a.location / (denom * denom)
            })
            .sum()
    }
}

impl FromStr for SpectralMeasure {
    type Err = Error;

    /// Parses `"t1:w1,t2:w2,..."`; a bare `"t"` is a point mass.
    fn from_str(s: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (t, w) = match part.split_once(':') {
                Some((t, w)) => (t.trim(), w.trim()),
                None => (part, "1"),
            };
            let parse = |x: &str| {
                x.parse::<f64>()
                    .map_err(|_| Error::InvalidMeasure(format!("cannot parse `{x}`")))
            };
            atoms.push((parse(t)?, parse(w)?));
        }
        Self::new(atoms)
    }
}

impl fmt::Display for SpectralMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| format!("{}:{}", a.location, a.weight))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Dimension-to-sample-size ratio `c = p/n`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct AspectRatio(f64);

impl AspectRatio {
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 {
            Ok(Self(c))
        } else {
            Err(Error::InvalidAspectRatio(c))
        }
    }

    pub fn from_dims(p: usize, n: usize) -> Result<Self> {
        Self::new(p as f64 / n as f64)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `z = u + iv` with `v > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperHalfPoint {
    u: f64,
    v: f64,
}

impl UpperHalfPoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if u.is_finite() && v.is_finite() && v > 0.0 {
            Ok(Self { u, v })
        } else {
            Err(Error::NotUpperHalfPlane(v))
        }
    }

    pub fn re(self) -> f64 {
        self.u
    }

    pub fn im(self) -> f64 {
        self.v
    }

    pub fn as_complex(self) -> Complex64 {
        Complex64::new(self.u, self.v)
    }
}

/// Coupled transforms of the limit law `F` and its companion `F̲` at `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StieltjesPair {
    pub m: Complex64,
    pub m_companion: Complex64,
    pub z: UpperHalfPoint,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Stopping threshold on the scaled fixed-point residual.
    pub tol: f64,
    pub max_iters: usize,
    /// Relaxation weight of the fixed-point update, in `(0, 1]`.
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iters: 10_000,
            damping: 0.5,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidOptions(format!("tol {} must be > 0", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidOptions("max_iters must be >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidOptions(format!(
                "damping {} must lie in (0, 1]",
                self.damping
            )));
        }
        Ok(())
    }
}

/// `z(mu) = -1/mu + c Σ w t / (1 + t mu)`: the point at which `mu` solves the
/// companion equation exactly.
pub fn companion_value_map(mu: Complex64, c: AspectRatio, h: &SpectralMeasure) -> Result<Complex64> {
    let pole = || Error::Pole { re: mu.re, im: mu.im };
    if mu.norm() < POLE_TOL {
        return Err(pole());
    }
    let r = h.weighted_resolvent(mu).ok_or_else(pole)?;
    Ok(-1.0 / mu + c.value() * r)
}

/// Closed-form companion transform for `H = δ₁`: the root in `ℂ⁺` of
/// `z mu² + (z + 1 - c) mu + 1 = 0`.
pub fn mp_closed_form(z: UpperHalfPoint, c: AspectRatio) -> Complex64 {
    let z = z.as_complex();
    let c = c.value();
    let b = z + 1.0 - c;
    let disc = (z - 1.0 - c) * (z - 1.0 - c) - 4.0 * c;
    let s = disc.sqrt();
    // Pick the sign that avoids cancellation, then recover the other root from
    // the product of roots 1/z.
    let q = if (b.conj() * s).re >= 0.0 {
        -(b + s) / 2.0
    } else {
        -(b - s) / 2.0
    };
    let r1 = q / z;
    let r2 = 1.0 / q;
    if r1.im >= r2.im {
        r1
    } else {
        r2
    }
}

struct Equation<'a> {
    z: Complex64,
    c: f64,
    h: &'a SpectralMeasure,
}

impl Equation<'_> {
    fn map(&self, mu: Complex64) -> Option<Complex64> {
        let r = self.h.weighted_resolvent(mu)?;
        let denom = self.z - self.c * r;
        if denom.norm() == 0.0 {
            return None;
        }
        Some(-1.0 / denom)
    }

    /// `|mu - T(mu)| / max(1, |mu|)`.
    fn residual(&self, mu: Complex64) -> f64 {
        match self.map(mu) {
            Some(t) => (mu - t).norm() / mu.norm().max(1.0),
            None => f64::INFINITY,
        }
    }

    /// Newton step on `z(mu) - z = 0`.
    fn newton_step(&self, mu: Complex64) -> Option<Complex64> {
        if mu.norm() < POLE_TOL {
            return None;
        }
        let r = self.h.weighted_resolvent(mu)?;
        let f = -1.0 / mu + self.c * r - self.z;
        let df = 1.0 / (mu * mu) - self.c * self.h.weighted_resolvent_sq(mu);
        if df.norm() == 0.0 || !df.is_finite() {
            return None;
        }
        Some(f / df)
    }
}

enum Attempt {
    Converged(Complex64, f64),
    Failed(Complex64),
}

struct Solver<'a> {
    eq: Equation<'a>,
    tol: f64,
    budget: usize,
    used: usize,
    best: f64,
}

impl Solver<'_> {
    fn spend(&mut self) -> bool {
        if self.used >= self.budget {
            return false;
        }
        self.used += 1;
        true
    }

    fn note(&mut self, res: f64) {
        if res < self.best {
            self.best = res;
        }
    }

    /// Damped fixed-point iteration. Hands over to Newton once the contraction
    /// stalls or oscillates.
    fn fixed_point(&mut self, start: Complex64, damping: f64) -> Result<Attempt> {
        const STALL_CHECK: usize = 64;
        const MAX_RISES: usize = 8;
        let mut mu = start;
        let mut prev = f64::INFINITY;
        let mut rises = 0;
        let mut res_at_check = f64::INFINITY;
        let mut k = 0usize;
        loop {
            let res = self.eq.residual(mu);
            self.note(res);
            if res < self.tol && mu.im > 0.0 {
                return Ok(Attempt::Converged(mu, res));
            }
            if !self.spend() {
                return Ok(Attempt::Failed(mu));
            }
            if res > prev {
                rises += 1;
                if rises >= MAX_RISES {
                    return Ok(Attempt::Failed(mu));
                }
            } else {
                rises = 0;
            }
            prev = res;
            k += 1;
            if k.is_multiple_of(STALL_CHECK) {
                if res > 0.5 * res_at_check {
                    return Ok(Attempt::Failed(mu));
                }
                res_at_check = res;
            }
            let t = self.eq.map(mu).ok_or(Error::Pole { re: mu.re, im: mu.im })?;
            mu = (1.0 - damping) * mu + damping * t;
        }
    }

    /// Newton iteration with step halving to stay in the upper half plane.
    fn newton(&mut self, start: Complex64, max_steps: usize) -> Attempt {
        let mut mu = start;
        let mut res = self.eq.residual(mu);
        self.note(res);
        for _ in 0..max_steps {
            if res < self.tol && mu.im > 0.0 {
                return Attempt::Converged(mu, res);
            }
            if !self.spend() {
                break;
            }
            let Some(step) = self.eq.newton_step(mu) else {
                break;
            };
            let mut scale = 1.0;
            let mut next = mu - step;
            let mut halvings = 0;
            while !(next.im > 0.0 && next.is_finite()) && halvings < 40 {
                scale *= 0.5;
                next = mu - scale * step;
                halvings += 1;
            }
            if !(next.im > 0.0 && next.is_finite()) {
                break;
            }
            mu = next;
            res = self.eq.residual(mu);
            self.note(res);
        }
        if res < self.tol && mu.im > 0.0 {
            Attempt::Converged(mu, res)
        } else {
            Attempt::Failed(mu)
        }
    }

    fn fixed_point_then_newton(&mut self, start: Complex64, damping: f64) -> Result<Option<(Complex64, f64)>> {
        match self.fixed_point(start, damping)? {
            Attempt::Converged(mu, r) => Ok(Some((mu, r))),
            Attempt::Failed(mu) => {
                let from = if mu.im > 0.0 && mu.is_finite() { mu } else { start };
                Ok(match self.newton(from, 60) {
                    Attempt::Converged(mu, r) => Some((mu, r)),
                    Attempt::Failed(..) => None,
                })
            }
        }
    }

    /// Tracks the root down from a large imaginary height, Newton-correcting
    /// at each geometric step.
    fn continuation(&mut self, target: Complex64, damping: f64) -> Result<Option<(Complex64, f64)>> {
        let v_target = target.im;
        let v_top = (1.0f64).max(16.0 * v_target);
        let saved_z = self.eq.z;
        self.eq.z = Complex64::new(target.re, v_top);
        let start = -1.0 / self.eq.z;
        let Some((mut mu, _)) = self.fixed_point_then_newton(start, damping)? else {
            self.eq.z = saved_z;
            return Ok(None);
        };
        let mut v = v_top;
        let mut ratio = 0.5;
        while v > v_target {
            let next_v = (v * ratio).max(v_target);
            self.eq.z = Complex64::new(target.re, next_v);
            match self.newton(mu, 40) {
                Attempt::Converged(m, _) => {
                    mu = m;
                    v = next_v;
                    ratio = (ratio * ratio).max(0.5);
                }
                Attempt::Failed(..) => {
                    ratio = ratio.sqrt();
                    if ratio > 0.999 || self.used >= self.budget {
                        self.eq.z = saved_z;
                        return Ok(None);
                    }
                }
            }
        }
        self.eq.z = saved_z;
        let res = self.eq.residual(mu);
        Ok((res < self.tol && mu.im > 0.0).then_some((mu, res)))
    }
}

fn validate_inputs(h: &SpectralMeasure, opts: &SolverOptions) -> Result<()> {
    opts.validate()?;
    debug_assert!(!h.atoms.is_empty());
    Ok(())
}

/// Solves the companion equation at `z`, starting from `-1/z`.
pub fn solve_companion(
    z: UpperHalfPoint,
    c: AspectRatio,
    h: &SpectralMeasure,
    opts: &SolverOptions,
) -> Result<StieltjesPair> {
    solve_companion_from(z, c, h, opts, None)
}

/// Solves the companion equation at `z`. A warm start (e.g. the solution at a
/// neighbouring grid point) is first polished by Newton; on failure the solver
/// falls back to the cold path: damped fixed point from `-1/z`, a restart with
/// damping 0.1, then continuation in `Im z`.
pub fn solve_companion_from(
    z: UpperHalfPoint,
    c: AspectRatio,
    h: &SpectralMeasure,
    opts: &SolverOptions,
    warm: Option<Complex64>,
) -> Result<StieltjesPair> {
    validate_inputs(h, opts)?;
    let zc = z.as_complex();
    let mut solver = Solver {
        eq: Equation {
            z: zc,
            c: c.value(),
            h,
        },
        tol: opts.tol,
        budget: opts.max_iters,
        used: 0,
        best: f64::INFINITY,
    };
    let cold = -1.0 / zc;
    let mut found = None;
    if let Some(w) = warm.filter(|w| w.im > 0.0 && w.is_finite()) {
        if let Attempt::Converged(mu, r) = solver.newton(w, 30) {
            found = Some((mu, r));
        }
    }
    if found.is_none() {
        found = solver.fixed_point_then_newton(cold, opts.damping)?;
    }
    if found.is_none() && opts.damping > 0.1 {
        found = solver.fixed_point_then_newton(cold, 0.1)?;
    }
    if found.is_none() {
        found = solver.continuation(zc, opts.damping.min(0.5))?;
    }
    let (mu, residual) = found.ok_or(Error::NonConvergence {
        iterations: solver.used,
        residual: solver.best,
    })?;
    let cv = c.value();
    let m = (mu + (1.0 - cv) / zc) / cv;
    Ok(StieltjesPair {
        m,
        m_companion: mu,
        z,
        residual,
    })
}

/// Limit density of `F` at `x > 0`, `(1/π) Im m(x + i·DENSITY_EVAL_HEIGHT)`.
pub fn density_at(x: f64, c: AspectRatio, h: &SpectralMeasure, opts: &SolverOptions) -> Result<f64> {
    let z = UpperHalfPoint::new(x, DENSITY_EVAL_HEIGHT)?;
    let pair = solve_companion(z, c, h, opts)?;
    Ok((pair.m.im / std::f64::consts::PI).max(0.0))
}

/// Densities along an ordered grid, warm-starting each point from its
/// neighbour.
pub fn density_scan(xs: &[f64], c: AspectRatio, h: &SpectralMeasure, opts: &SolverOptions) -> Result<Vec<f64>> {
    let mut warm = None;
    xs.iter()
        .map(|&x| {
            let z = UpperHalfPoint::new(x, DENSITY_EVAL_HEIGHT)?;
            let pair = solve_companion_from(z, c, h, opts, warm)?;
            warm = Some(pair.m_companion);
            Ok((pair.m.im / std::f64::consts::PI).max(0.0))
        })
        .collect()
}

/// Stieltjes transform `(1/p) Σ 1/(λ_j - z)` of an empirical spectrum.
pub fn esd_stieltjes(eigenvalues: &[f64], z: UpperHalfPoint) -> Result<Complex64> {
    if eigenvalues.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let z = z.as_complex();
    let sum: Complex64 = eigenvalues.iter().map(|&l| 1.0 / (l - z)).sum();
    Ok(sum / eigenvalues.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn zp(u: f64, v: f64) -> UpperHalfPoint {
        UpperHalfPoint::new(u, v).unwrap()
    }

    fn ar(c: f64) -> AspectRatio {
        AspectRatio::new(c).unwrap()
    }

    #[test]
    fn measure_validation() {
        assert!(SpectralMeasure::new([(1.0, 0.5), (2.0, 0.5)]).is_ok());
        assert!(SpectralMeasure::new([]).is_err());
        assert!(SpectralMeasure::new([(1.0, 0.5)]).is_err());
        assert!(SpectralMeasure::new([(-1.0, 1.0)]).is_err());
        assert!(SpectralMeasure::new([(1.0, 0.5), (1.0, 0.5)]).is_err());
        assert!(SpectralMeasure::new([(1.0, 1.5), (2.0, -0.5)]).is_err());
        let h: SpectralMeasure = "1:0.5, 4:0.5".parse().unwrap();
        assert_eq!(h.atoms().len(), 2);
        assert_eq!(h.to_string().parse::<SpectralMeasure>().unwrap(), h);
        assert_eq!("3".parse::<SpectralMeasure>().unwrap(), SpectralMeasure::point_mass(3.0).unwrap());
    }

    #[test]
    fn eigenvalue_measure_merges_close_values() {
        let h = SpectralMeasure::from_eigenvalues(&[1.0, 1.0 + 1e-12, 4.0, -1e-15], 1e-10).unwrap();
        assert_eq!(h.atoms().len(), 3);
        assert_eq!(h.atoms()[0].location, 0.0);
        assert!((h.atoms()[1].weight - 0.5).abs() < 1e-15);
    }

    #[test]
    fn value_map_examples() {
        let d1 = SpectralMeasure::point_mass(1.0).unwrap();
        let z = companion_value_map(cx(0.0, 1.0), ar(1.0), &d1).unwrap();
        assert!((z - cx(0.5, 0.5)).norm() < 1e-15);

        let z = companion_value_map(cx(-2.0, 0.0), ar(0.25), &d1).unwrap();
        assert!((z - cx(0.25, 0.0)).norm() < 1e-15);
        // lower Marchenko-Pastur edge (1 - √c)²
        assert!((z.re - (1.0 - 0.25f64.sqrt()).powi(2)).abs() < 1e-15);

        let small = companion_value_map(cx(0.0, 1e-9), ar(0.3), &d1).unwrap();
        assert!(small.norm() > 1e8);
    }

    #[test]
    fn value_map_poles() {
        let d1 = SpectralMeasure::point_mass(2.0).unwrap();
        assert!(matches!(companion_value_map(cx(0.0, 0.0), ar(1.0), &d1), Err(Error::Pole { .. })));
        assert!(matches!(companion_value_map(cx(-0.5, 0.0), ar(1.0), &d1), Err(Error::Pole { .. })));
    }

    #[test]
    fn closed_form_examples() {
        let m = mp_closed_form(zp(0.0, 1e6), ar(1.0));
        assert!((m - cx(0.0, 1e-6)).norm() < 1e-11);

        let m = mp_closed_form(zp(4.0, 1e-8), ar(0.25));
        assert!(m.im < 1e-3 && m.im > 0.0);

        // Both roots by the textbook formula; pick Im > 0.
        let z = cx(1.0, 0.5);
        let c = 0.5;
        let s = ((z - 1.0 - c) * (z - 1.0 - c) - 4.0 * c).sqrt();
        let roots = [(-(z + 1.0 - c) + s) / (2.0 * z), (-(z + 1.0 - c) - s) / (2.0 * z)];
        let expected = roots.into_iter().find(|r| r.im > 0.0).unwrap();
        let got = mp_closed_form(zp(1.0, 0.5), ar(c));
        assert!((got - expected).norm() < 1e-14, "{got} vs {expected}");
        assert!((z * got * got + (z + 1.0 - c) * got + 1.0).norm() < 1e-14);
    }

    #[test]
    fn solver_far_field() {
        let d1 = SpectralMeasure::point_mass(1.0).unwrap();
        let pair = solve_companion(zp(0.0, 1e6), ar(0.5), &d1, &SolverOptions::default()).unwrap();
        let expected = cx(0.0, 1e-6);
        assert!((pair.m_companion - expected).norm() / expected.norm() < 1e-5);
    }

    #[test]
    fn solver_matches_closed_form() {
        let d1 = SpectralMeasure::point_mass(1.0).unwrap();
        let z = zp(1.0, 0.5);
        let pair = solve_companion(z, ar(0.5), &d1, &SolverOptions::default()).unwrap();
        assert!((pair.m_companion - mp_closed_form(z, ar(0.5))).norm() < 1e-9);
        assert!(pair.residual < 1e-12);
    }

    #[test]
    fn solver_near_axis_inside_bulk() {
        let d1 = SpectralMeasure::point_mass(1.0).unwrap();
        for &c in &[0.25, 1.0, 2.0] {
            for &u in &[0.3, 1.0, 2.0, 3.5] {
                let z = zp(u, 1e-6);
                let pair = solve_companion(z, ar(c), &d1, &SolverOptions::default()).unwrap();
                let cf = mp_closed_form(z, ar(c));
                assert!((pair.m_companion - cf).norm() < 1e-8, "c={c} u={u}");
            }
        }
    }

    #[test]
    fn solver_reports_non_convergence() {
        let h = SpectralMeasure::new([(1.0, 0.5), (4.0, 0.5)]).unwrap();
        let opts = SolverOptions { max_iters: 1, ..Default::default() };
        let err = solve_companion(zp(2.0, 1e-4), ar(0.3), &h, &opts).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }), "{err}");
    }

    #[test]
    fn options_validation() {
        let h = SpectralMeasure::point_mass(1.0).unwrap();
        for bad in [
            SolverOptions { tol: 0.0, ..Default::default() },
            SolverOptions { max_iters: 0, ..Default::default() },
            SolverOptions { damping: 0.0, ..Default::default() },
            SolverOptions { damping: 1.5, ..Default::default() },
        ] {
            assert!(solve_companion(zp(1.0, 1.0), ar(1.0), &h, &bad).is_err());
        }
        assert!(UpperHalfPoint::new(1.0, 0.0).is_err());
        assert!(AspectRatio::new(0.0).is_err());
        assert!(AspectRatio::new(f64::INFINITY).is_err());
    }

    #[test]
    fn density_examples() {
        let d1 = SpectralMeasure::point_mass(1.0).unwrap();
        let opts = SolverOptions::default();
        assert!(density_at(10.0, ar(0.25), &d1, &opts).unwrap() < 1e-4);
        let oracle = |x: f64, c: f64| {
            let (a, b) = ((1.0 - c.sqrt()).powi(2), (1.0 + c.sqrt()).powi(2));
            ((b - x) * (x - a)).max(0.0).sqrt() / (2.0 * std::f64::consts::PI * c * x)
        };
        let d = density_at(2.0, ar(1.0), &d1, &opts).unwrap();
        assert!((d - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-3);
        assert!((d - oracle(2.0, 1.0)).abs() < 1e-3);
        // the oracle against inversion of the closed form
        let cf = mp_closed_form(zp(2.0, 1e-9), ar(1.0));
        let m = (cf + (1.0 - 1.0) / cx(2.0, 1e-9)) / 1.0;
        assert!((m.im / std::f64::consts::PI - oracle(2.0, 1.0)).abs() < 1e-6);
    }

    #[test]
    fn density_scan_matches_pointwise() {
        let h = SpectralMeasure::new([(1.0, 0.5), (4.0, 0.5)]).unwrap();
        let opts = SolverOptions::default();
        let xs: Vec<f64> = (1..200).map(|i| i as f64 * 0.05).collect();
        let scan = density_scan(&xs, ar(0.3), &h, &opts).unwrap();
        for (x, d) in xs.iter().zip(&scan) {
            let point = density_at(*x, ar(0.3), &h, &opts).unwrap();
            assert!((point - d).abs() < 1e-7, "x={x}: {point} vs {d}");
        }
    }

    #[test]
    fn esd_transform_examples() {
        let m = esd_stieltjes(&[5.0], zp(0.0, 1.0)).unwrap();
        assert!((m - cx(5.0, 1.0) / 26.0).norm() < 1e-15);
        let m = esd_stieltjes(&[1.0; 4], zp(0.0, 2.0)).unwrap();
        assert!((m - cx(1.0, 2.0) / 5.0).norm() < 1e-15);
        assert!(matches!(esd_stieltjes(&[], zp(0.0, 1.0)), Err(Error::EmptySpectrum)));
    }
}
