//! Dense Hermitian eigenvalues and empirical spectral distribution tools.
//!
//! Eigenvalues are computed by unitary Householder reduction to tridiagonal
//! form followed by implicit-shift QL. For complex input the reduced
//! subdiagonal is complex; a diagonal unitary similarity rotates each entry
//! onto its modulus, so the QL kernel only ever sees a real symmetric
//! tridiagonal.

use nalgebra::DMatrix;

use crate::stieltjes::{density_scan, AspectRatio, SolverOptions, SpectralMeasure};
use crate::support::find_support;
use crate::{Error, Result, Scalar};

const HERMITIAN_TOL: f64 = 1e-10;
const CDF_GRID_POINTS: usize = 2048;
const MIN_POINTS_PER_INTERVAL: usize = 64;

/// Eigenvalues sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSpectrum {
    values: Vec<f64>,
}

impl EigenSpectrum {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn min(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Rounds tiny negative eigenvalues of a PSD matrix up to zero.
    pub fn clamp_nonnegative(mut self) -> Self {
        for v in &mut self.values {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self
    }

    pub fn ecdf(&self) -> Result<EmpiricalCdf> {
        EmpiricalCdf::from_sorted(&self.values)
    }
}

fn max_asymmetry<T: Scalar>(m: &DMatrix<T>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conjugate()).modulus());
        }
    }
    worst
}

/// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
/// `(diagonal, subdiagonal)`.
fn tridiagonalize<T: Scalar>(m: &DMatrix<T>) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows();
    let mut a: Vec<T> = m.as_slice().to_vec();
    let idx = |i: usize, j: usize| i + j * n;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];

    for k in 0..n.saturating_sub(2) {
        d[k] = a[idx(k, k)].real();
        let lo = k + 1;
        let norm = (lo..n).map(|i| a[idx(i, k)].modulus_squared()).sum::<f64>().sqrt();
        if norm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let x0 = a[idx(lo, k)];
        let x0_abs = x0.modulus();
        let phase = if x0_abs == 0.0 {
            T::one()
        } else {
            x0 * T::from_real(1.0 / x0_abs)
        };
        // Reflect x onto alpha e1 with alpha = -phase * norm.
        e[k] = norm;
        for i in lo..n {
            v[i] = a[idx(i, k)];
        }
        v[lo] = x0 + phase * T::from_real(norm);
        let vnorm2 = 2.0 * norm * (norm + x0_abs);
        let tau = 2.0 / vnorm2;

        // w = tau * A22 v
        for wi in w.iter_mut().take(n).skip(lo) {
            *wi = T::zero();
        }
        for j in lo..n {
            let vj = v[j];
            for i in lo..n {
                w[i] += a[idx(i, j)] * vj;
            }
        }
        let mut vw = T::zero();
        for i in lo..n {
            w[i] *= T::from_real(tau);
            vw += v[i].conjugate() * w[i];
        }
        let half_k = T::from_real(0.5 * tau * vw.real());
        for i in lo..n {
            w[i] -= half_k * v[i];
        }
        // A22 -= v w* + w v*
        for j in lo..n {
            let wj = w[j].conjugate();
            let vj = v[j].conjugate();
            for i in lo..n {
                a[idx(i, j)] -= v[i] * wj + w[i] * vj;
            }
        }
    }
    if n >= 2 {
        d[n - 2] = a[idx(n - 2, n - 2)].real();
        e[n - 2] = a[idx(n - 1, n - 2)].modulus();
    }
    if n >= 1 {
        d[n - 1] = a[idx(n - 1, n - 1)].real();
    }
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal; `e[i]` couples `i` and
/// `i + 1`. Eigenvalues are left in `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let limit = 30 * n;
    let mut sweeps = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > limit {
                return Err(Error::EigenNonConvergence(limit));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated_early = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated_early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated_early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Result<EigenSpectrum> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let scale = m.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt();
    let asym = max_asymmetry(m);
    if asym > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(asym));
    }
    let (mut d, mut e) = tridiagonalize(m);
    tridiagonal_ql(&mut d, &mut e)?;
    Ok(EigenSpectrum::new(d))
}

/// Squared singular values of `(1/√n) B X`, computed by one-sided Jacobi on
/// the rows of `B X` (no Gram matrix is formed).
pub fn singular_values_scaled<T: Scalar>(b: &DMatrix<T>, x: &DMatrix<T>, n: usize) -> Result<EigenSpectrum> {
    if b.ncols() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "B is {}x{}, X is {}x{}",
            b.nrows(),
            b.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::DimensionMismatch("n must be positive".into()));
    }
    // Columns of z are the rows of Y = B X / sqrt(n).
    let mut z = (b * x).transpose() / T::from_real((n as f64).sqrt());
    let cols = z.ncols();
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let alpha = z.column(i).norm_squared();
                let beta = z.column(j).norm_squared();
                let gamma = z.column(i).dotc(&z.column(j));
                let g = gamma.modulus();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma * T::from_real(1.0 / g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..z.nrows() {
                    let zi = z[(r, i)];
                    let zj = z[(r, j)] * phase.conjugate();
                    z[(r, i)] = zi * T::from_real(c) - zj * T::from_real(s);
                    z[(r, j)] = (zi * T::from_real(s) + zj * T::from_real(c)) * phase;
                }
            }
        }
        if !rotated {
            let values = (0..cols).map(|i| z.column(i).norm_squared()).collect();
            return Ok(EigenSpectrum::new(values));
        }
    }
    Err(Error::EigenNonConvergence(80))
}

/// Number of eigenvalues in the closed interval `[a, b]`.
pub fn count_in_interval(spec: &EigenSpectrum, a: f64, b: f64) -> usize {
    if a > b {
        return 0;
    }
    let lo = spec.values.partition_point(|&v| v < a);
    let hi = spec.values.partition_point(|&v| v <= b);
    hi - lo
}

/// Right-continuous step CDF of a spectrum, `1/p` per eigenvalue.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    points: Vec<f64>,
    cumulative: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_sorted(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        let p = values.len() as f64;
        let mut points = Vec::new();
        let mut cumulative = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if points.last() == Some(&v) {
                *cumulative.last_mut().unwrap() = (i + 1) as f64 / p;
            } else {
                points.push(v);
                cumulative.push((i + 1) as f64 / p);
            }
        }
        Ok(Self { points, cumulative })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|&v| v <= x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// `(jump point, value just before, value at)` for each jump.
    fn jumps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.points.iter().enumerate().map(|(k, &x)| {
            let before = if k == 0 { 0.0 } else { self.cumulative[k - 1] };
            (x, before, self.cumulative[k])
        })
    }
}

/// CDF of the limit law `F`, tabulated by integrating the density over each
/// support interval on cosine-spaced nodes (trapezoid in the angle variable).
#[derive(Clone, Debug)]
pub struct LimitCdf {
    zero_atom: f64,
    pieces: Vec<CdfPiece>,
}

#[derive(Clone, Debug)]
struct CdfPiece {
    xs: Vec<f64>,
    cumulative: Vec<f64>,
    mass_before: f64,
}

impl LimitCdf {
    pub fn build(c: AspectRatio, h: &SpectralMeasure, opts: &SolverOptions) -> Result<Self> {
        let support = find_support(c, h)?;
        let intervals = support.intervals();
        let total_len: f64 = intervals.iter().map(|(l, r)| r - l).sum();
        let mut pieces = Vec::with_capacity(intervals.len());
        let mut mass = support.lsd_zero_atom_weight();
        for &(l, r) in intervals {
            let share = if total_len > 0.0 { (r - l) / total_len } else { 1.0 };
            let nodes = ((CDF_GRID_POINTS as f64 * share) as usize).max(MIN_POINTS_PER_INTERVAL);
            let dtheta = std::f64::consts::PI / nodes as f64;
            let half = 0.5 * (r - l);
            let thetas: Vec<f64> = (0..=nodes).map(|j| j as f64 * dtheta).collect();
            let xs: Vec<f64> = thetas.iter().map(|t| l + half * (1.0 - t.cos())).collect();
            let inner = &xs[1..nodes];
            let mut dens = vec![0.0; nodes + 1];
            let inner_dens = density_scan(inner, c, h, opts)?;
            dens[1..nodes].copy_from_slice(&inner_dens);
            let g: Vec<f64> = thetas
                .iter()
                .zip(&dens)
                .map(|(t, f)| f * half * t.sin())
                .collect();
            let mut cumulative = vec![0.0; nodes + 1];
            for j in 1..=nodes {
                cumulative[j] = cumulative[j - 1] + 0.5 * dtheta * (g[j - 1] + g[j]);
            }
            let piece_mass = cumulative[nodes];
            pieces.push(CdfPiece {
                xs,
                cumulative,
                mass_before: mass,
            });
            mass += piece_mass;
        }
        Ok(Self {
            zero_atom: support.lsd_zero_atom_weight(),
            pieces,
        })
    }

    /// Atom at zero plus the integrated density over the support.
    pub fn total_mass(&self) -> f64 {
        match self.pieces.last() {
            Some(p) => p.mass_before + p.cumulative.last().copied().unwrap_or(0.0),
            None => self.zero_atom,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let mut value = self.zero_atom;
        for piece in &self.pieces {
            let (l, r) = (piece.xs[0], *piece.xs.last().unwrap());
            if x < l {
                return value;
            }
            let end = piece.mass_before + piece.cumulative.last().unwrap();
            if x >= r {
                value = end;
                continue;
            }
            let k = piece.xs.partition_point(|&v| v <= x).clamp(1, piece.xs.len() - 1);
            let (x0, x1) = (piece.xs[k - 1], piece.xs[k]);
            let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
            let c0 = piece.cumulative[k - 1];
            let c1 = piece.cumulative[k];
            return piece.mass_before + c0 + t * (c1 - c0);
        }
        value
    }

    /// Smallest tabulated `x` with `F(x) >= q`, linearly interpolated.
    pub fn quantile(&self, q: f64) -> f64 {
        if q <= self.zero_atom {
            return 0.0;
        }
        for piece in &self.pieces {
            let end = piece.mass_before + piece.cumulative.last().unwrap();
            if q <= end {
                let target = q - piece.mass_before;
                let k = piece.cumulative.partition_point(|&v| v < target).clamp(1, piece.xs.len() - 1);
                let (c0, c1) = (piece.cumulative[k - 1], piece.cumulative[k]);
                let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
                return piece.xs[k - 1] + t * (piece.xs[k] - piece.xs[k - 1]);
            }
        }
        self.pieces.last().map_or(0.0, |p| *p.xs.last().unwrap())
    }
}

/// Kolmogorov distance between an ECDF and a tabulated limit CDF.
pub fn ks_distance_to(ecdf: &EmpiricalCdf, limit: &LimitCdf) -> f64 {
    ecdf.jumps()
        .map(|(x, before, at)| {
            let f = limit.eval(x);
            (at - f).abs().max((before - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov distance between an ECDF and the limit law for `(c, H)`.
pub fn ks_distance(ecdf: &EmpiricalCdf, c: AspectRatio, h: &SpectralMeasure) -> Result<f64> {
    let limit = LimitCdf::build(c, h, &SolverOptions::default())?;
    Ok(ks_distance_to(ecdf, &limit))
}
