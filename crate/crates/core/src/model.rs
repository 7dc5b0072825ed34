//! Observation model `Y = B X`: deterministic `p × m` filters, i.i.d.
//! standardized entry matrices and the sample covariance `S = Y Y* / n`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::eig::hermitian_eigenvalues;
use crate::stieltjes::SpectralMeasure;
use crate::{Error, Result, Scalar};

/// Proximity below which population eigenvalues are merged into one atom.
pub const ATOM_MERGE_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;

/// Per-trial random stream.
pub fn trial_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of the filter `B`. Serialized with a `kind` tag:
///
/// ```json
/// {"kind": "toeplitz_filter", "coefficients": [1.0, 0.5]}
/// ```
///
/// `explicit_sigma_sqrt` takes exactly one of `rows` (full symmetric
/// `p × p` matrix), `diagonal` (length `p`), or `population`
/// (`[[sqrt_value, fraction], ...]`, expanded to a block diagonal whose
/// blocks have `fraction · p` entries).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", from = "FilterKindRepr")]
pub enum FilterKind {
    Identity,
    ScaledIdentity {
        scale: f64,
    },
    ExplicitSigmaSqrt {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rows: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        diagonal: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        population: Option<Vec<(f64, f64)>>,
    },
    ToeplitzFilter {
        coefficients: Vec<f64>,
    },
}

// Unit variants written as empty structs so that stray keys are rejected.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FilterKindRepr {
    Identity {},
    ScaledIdentity {
        scale: f64,
    },
    ExplicitSigmaSqrt {
        #[serde(default)]
        rows: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        diagonal: Option<Vec<f64>>,
        #[serde(default)]
        population: Option<Vec<(f64, f64)>>,
    },
    ToeplitzFilter {
        coefficients: Vec<f64>,
    },
}

impl From<FilterKindRepr> for FilterKind {
    fn from(r: FilterKindRepr) -> Self {
        match r {
            FilterKindRepr::Identity {} => FilterKind::Identity,
            FilterKindRepr::ScaledIdentity { scale } => FilterKind::ScaledIdentity { scale },
            FilterKindRepr::ExplicitSigmaSqrt {
                rows,
                diagonal,
                population,
            } => FilterKind::ExplicitSigmaSqrt {
                rows,
                diagonal,
                population,
            },
            FilterKindRepr::ToeplitzFilter { coefficients } => FilterKind::ToeplitzFilter { coefficients },
        }
    }
}

impl FilterKind {
    pub fn explicit(sigma_sqrt: &DMatrix<f64>) -> Self {
        let rows = sigma_sqrt
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        FilterKind::ExplicitSigmaSqrt {
            rows: Some(rows),
            diagonal: None,
            population: None,
        }
    }

    pub fn explicit_diagonal(diagonal: Vec<f64>) -> Self {
        FilterKind::ExplicitSigmaSqrt {
            rows: None,
            diagonal: Some(diagonal),
            population: None,
        }
    }

    /// Block-diagonal square root with blocks `(value, fraction)`.
    pub fn explicit_population(blocks: Vec<(f64, f64)>) -> Self {
        FilterKind::ExplicitSigmaSqrt {
            rows: None,
            diagonal: None,
            population: Some(blocks),
        }
    }

    /// True when `Σ = B B*` is a multiple of the identity.
    pub fn is_isotropic(&self) -> bool {
        matches!(self, FilterKind::Identity | FilterKind::ScaledIdentity { .. })
    }

    /// The scalar `s²` with `Σ = s² I`, for isotropic filters.
    pub fn isotropic_variance(&self) -> Option<f64> {
        match self {
            FilterKind::Identity => Some(1.0),
            FilterKind::ScaledIdentity { scale } => Some(scale * scale),
            _ => None,
        }
    }
}

/// A filter kind at a concrete dimension `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub p: usize,
}

impl FilterSpec {
    pub fn new(kind: FilterKind, p: usize) -> Self {
        Self { kind, p }
    }

    pub fn identity(p: usize) -> Self {
        Self::new(FilterKind::Identity, p)
    }

    pub fn toeplitz(coefficients: Vec<f64>, p: usize) -> Self {
        Self::new(FilterKind::ToeplitzFilter { coefficients }, p)
    }

    /// Validates the spec and returns the structured operator for `B`.
    pub fn operator(&self) -> Result<LinearOperator> {
        let p = self.p;
        if p == 0 {
            return Err(Error::InvalidFilter("p must be positive".into()));
        }
        match &self.kind {
            FilterKind::Identity => Ok(LinearOperator::Identity(p)),
            FilterKind::ScaledIdentity { scale } => {
                if !scale.is_finite() || *scale == 0.0 {
                    return Err(Error::InvalidFilter(format!("scale {scale} must be finite and nonzero")));
                }
                Ok(LinearOperator::Scaled(p, *scale))
            }
            FilterKind::ToeplitzFilter { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|b| !b.is_finite()) {
                    return Err(Error::InvalidFilter("toeplitz coefficients must be finite and nonempty".into()));
                }
                Ok(LinearOperator::Toeplitz {
                    p,
                    coefficients: coefficients.clone(),
                })
            }
            FilterKind::ExplicitSigmaSqrt {
                rows,
                diagonal,
                population,
            } => {
                let m = match (rows, diagonal, population) {
                    (Some(rows), None, None) => {
                        if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                            return Err(Error::InvalidFilter(format!("sigma_sqrt must be {p} x {p}")));
                        }
                        DMatrix::from_fn(p, p, |i, j| rows[i][j])
                    }
                    (None, Some(diag), None) => {
                        if diag.len() != p {
                            return Err(Error::InvalidFilter(format!(
                                "diagonal has {} entries, expected {p}",
                                diag.len()
                            )));
                        }
                        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()))
                    }
                    (None, None, Some(blocks)) => {
                        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(expand_population(blocks, p)?))
                    }
                    _ => {
                        return Err(Error::InvalidFilter(
                            "explicit_sigma_sqrt needs exactly one of rows, diagonal, population".into(),
                        ))
                    }
                };
                if m.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidFilter("sigma_sqrt has non-finite entries".into()));
                }
                let asym = (&m - m.transpose()).amax();
                if asym > HERMITIAN_TOL * m.amax().max(1.0) {
                    return Err(Error::NotHermitian(asym));
                }
                Ok(LinearOperator::Dense(m))
            }
        }
    }
}

fn expand_population(blocks: &[(f64, f64)], p: usize) -> Result<Vec<f64>> {
    let mut diag = Vec::with_capacity(p);
    for &(value, fraction) in blocks {
        let count = fraction * p as f64;
        if !(fraction > 0.0) || (count - count.round()).abs() > 1e-9 {
            return Err(Error::InvalidFilter(format!(
                "population block fraction {fraction} does not divide p = {p}"
            )));
        }
        diag.extend(std::iter::repeat_n(value, count.round() as usize));
    }
    if diag.len() != p {
        return Err(Error::InvalidFilter(format!(
            "population blocks cover {} of {p} coordinates",
            diag.len()
        )));
    }
    Ok(diag)
}

/// Real linear map with a structured fast path.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearOperator {
    Identity(usize),
    Scaled(usize, f64),
    /// `p × (p + q)` banded filter; row `j` carries `b_0..b_q` at columns
    /// `j..=j+q`.
    Toeplitz { p: usize, coefficients: Vec<f64> },
    Dense(DMatrix<f64>),
    /// `M M*` of the inner operator.
    Gram(Box<LinearOperator>),
}

impl LinearOperator {
    pub fn rows(&self) -> usize {
        match self {
            LinearOperator::Identity(p) | LinearOperator::Scaled(p, _) => *p,
            LinearOperator::Toeplitz { p, .. } => *p,
            LinearOperator::Dense(m) => m.nrows(),
            LinearOperator::Gram(inner) => inner.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            LinearOperator::Identity(p) | LinearOperator::Scaled(p, _) => *p,
            LinearOperator::Toeplitz { p, coefficients } => p + coefficients.len() - 1,
            LinearOperator::Dense(m) => m.ncols(),
            LinearOperator::Gram(inner) => inner.rows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            LinearOperator::Identity(p) => DMatrix::identity(*p, *p),
            LinearOperator::Scaled(p, s) => DMatrix::identity(*p, *p) * *s,
            LinearOperator::Toeplitz { p, coefficients } => {
                let q = coefficients.len() - 1;
                DMatrix::from_fn(*p, p + q, |i, j| {
                    if j >= i && j - i <= q {
                        coefficients[j - i]
                    } else {
                        0.0
                    }
                })
            }
            LinearOperator::Dense(m) => m.clone(),
            LinearOperator::Gram(inner) => {
                let d = inner.to_dense();
                &d * d.transpose()
            }
        }
    }

    /// `y = A x`.
    pub fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols());
        match self {
            LinearOperator::Identity(_) => x.to_vec(),
            LinearOperator::Scaled(_, s) => x.iter().map(|&v| v * T::from_real(*s)).collect(),
            LinearOperator::Toeplitz { p, coefficients } => (0..*p)
                .map(|j| {
                    coefficients
                        .iter()
                        .enumerate()
                        .fold(T::zero(), |acc, (k, &b)| acc + x[j + k] * T::from_real(b))
                })
                .collect(),
            LinearOperator::Dense(m) => (0..m.nrows())
                .map(|i| {
                    (0..m.ncols()).fold(T::zero(), |acc, j| acc + x[j] * T::from_real(m[(i, j)]))
                })
                .collect(),
            LinearOperator::Gram(inner) => inner.apply(&inner.apply_adjoint(x)),
        }
    }

    /// `x = A* y`.
    pub fn apply_adjoint<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows());
        match self {
            LinearOperator::Identity(_) | LinearOperator::Scaled(..) | LinearOperator::Gram(_) => self.apply(y),
            LinearOperator::Toeplitz { p, coefficients } => {
                let mut out = vec![T::zero(); self.cols()];
                for j in 0..*p {
                    for (k, &b) in coefficients.iter().enumerate() {
                        out[j + k] += y[j] * T::from_real(b);
                    }
                }
                out
            }
            LinearOperator::Dense(m) => (0..m.ncols())
                .map(|j| {
                    (0..m.nrows()).fold(T::zero(), |acc, i| acc + y[i] * T::from_real(m[(i, j)]))
                })
                .collect(),
        }
    }

    /// `A X` for a column block `X`.
    pub fn apply_columns<T: Scalar>(&self, x: &DMatrix<T>) -> Result<DMatrix<T>> {
        if x.nrows() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "operator has {} columns, matrix has {} rows",
                self.cols(),
                x.nrows()
            )));
        }
        Ok(match self {
            LinearOperator::Identity(_) => x.clone(),
            LinearOperator::Scaled(_, s) => x.map(|v| v * T::from_real(*s)),
            LinearOperator::Toeplitz { p, coefficients } => {
                let n = x.ncols();
                let mut y = DMatrix::<T>::zeros(*p, n);
                for col in 0..n {
                    let xc = x.column(col);
                    let mut yc = y.column_mut(col);
                    for (k, &b) in coefficients.iter().enumerate() {
                        let b = T::from_real(b);
                        for j in 0..*p {
                            yc[j] += xc[j + k] * b;
                        }
                    }
                }
                y
            }
            LinearOperator::Dense(m) => m.map(T::from_real) * x,
            LinearOperator::Gram(_) => self.to_dense().map(T::from_real) * x,
        })
    }

    /// `trace(A Σ)` for `Σ = B B*`, i.e. `Σ_j ⟨B e_j, A B e_j⟩`.
    pub fn trace_against(&self, b: &LinearOperator) -> Result<f64> {
        if self.cols() != b.rows() || self.rows() != b.rows() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, B has {} rows",
                self.rows(),
                self.cols(),
                b.rows()
            )));
        }
        if let LinearOperator::Identity(_) = self {
            return Ok(b.to_dense().norm_squared());
        }
        let m = b.cols();
        let mut total = 0.0;
        let mut e = vec![0.0f64; m];
        for j in 0..m {
            e[j] = 1.0;
            let col = b.apply(&e);
            let acol = self.apply(&col);
            total += col.iter().zip(&acol).map(|(u, v)| u * v).sum::<f64>();
            e[j] = 0.0;
        }
        Ok(total)
    }
}

/// Dense `B` for a filter spec.
pub fn build_filter(spec: &FilterSpec) -> Result<DMatrix<f64>> {
    Ok(spec.operator()?.to_dense())
}

/// `Σ = B B*` without forming `B` densely where a closed form exists.
pub fn population_covariance(spec: &FilterSpec) -> Result<DMatrix<f64>> {
    let op = spec.operator()?;
    Ok(match &op {
        LinearOperator::Toeplitz { p, coefficients } => {
            let q = coefficients.len() - 1;
            let lag = |d: usize| -> f64 {
                (0..coefficients.len().saturating_sub(d))
                    .map(|k| coefficients[k] * coefficients[k + d])
                    .sum()
            };
            let lags: Vec<f64> = (0..=q).map(lag).collect();
            DMatrix::from_fn(*p, *p, |i, j| {
                let d = i.abs_diff(j);
                if d <= q {
                    lags[d]
                } else {
                    0.0
                }
            })
        }
        _ => {
            let b = op.to_dense();
            &b * b.transpose()
        }
    })
}

/// Empirical spectral distribution `H_n` of `Σ = B B*`.
pub fn filter_spectrum(spec: &FilterSpec) -> Result<SpectralMeasure> {
    if let Some(var) = spec.kind.isotropic_variance() {
        spec.operator()?;
        return SpectralMeasure::point_mass(var);
    }
    let sigma = population_covariance(spec)?;
    let eig = hermitian_eigenvalues(&sigma)?;
    SpectralMeasure::from_eigenvalues(eig.values(), ATOM_MERGE_TOL)
}

/// Law of the standardized entries `x_jk`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", from = "EntryRepr")]
pub enum EntryDistribution {
    GaussianReal,
    /// Real and imaginary parts independent with variance 1/2 each.
    GaussianComplex,
    Rademacher,
    /// Student t with `dof` degrees of freedom, rescaled to unit variance.
    StudentT {
        #[serde(default = "default_dof")]
        dof: f64,
        #[serde(default = "default_margin")]
        moment_margin: f64,
    },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum EntryRepr {
    GaussianReal {},
    GaussianComplex {},
    Rademacher {},
    StudentT {
        #[serde(default = "default_dof")]
        dof: f64,
        #[serde(default = "default_margin")]
        moment_margin: f64,
    },
}

impl From<EntryRepr> for EntryDistribution {
    fn from(r: EntryRepr) -> Self {
        match r {
            EntryRepr::GaussianReal {} => EntryDistribution::GaussianReal,
            EntryRepr::GaussianComplex {} => EntryDistribution::GaussianComplex,
            EntryRepr::Rademacher {} => EntryDistribution::Rademacher,
            EntryRepr::StudentT { dof, moment_margin } => EntryDistribution::StudentT { dof, moment_margin },
        }
    }
}

fn default_dof() -> f64 {
    8.0
}

fn default_margin() -> f64 {
    1.0
}

impl EntryDistribution {
    pub fn student_t(dof: f64) -> Self {
        EntryDistribution::StudentT {
            dof,
            moment_margin: default_margin(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, EntryDistribution::GaussianComplex)
    }

    /// Margin `δ` in the `(6 + δ)`-th moment requirement.
    pub fn moment_margin(&self) -> f64 {
        match self {
            EntryDistribution::StudentT { moment_margin, .. } => *moment_margin,
            _ => default_margin(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let EntryDistribution::StudentT { dof, moment_margin } = *self {
            if !(moment_margin > 0.0) || !(dof > 6.0 + moment_margin) || !dof.is_finite() {
                return Err(Error::InvalidDof {
                    dof,
                    margin: moment_margin,
                });
            }
        }
        Ok(())
    }

    fn sampler(&self) -> Result<EntrySampler> {
        self.validate()?;
        Ok(match *self {
            EntryDistribution::GaussianReal => EntrySampler::Gaussian,
            EntryDistribution::GaussianComplex => EntrySampler::Gaussian,
            EntryDistribution::Rademacher => EntrySampler::Rademacher,
            EntryDistribution::StudentT { dof, .. } => EntrySampler::StudentT(
                StudentT::new(dof).map_err(|_| Error::InvalidDof {
                    dof,
                    margin: self.moment_margin(),
                })?,
                ((dof - 2.0) / dof).sqrt(),
            ),
        })
    }
}

enum EntrySampler {
    Gaussian,
    Rademacher,
    StudentT(StudentT<f64>, f64),
}

impl EntrySampler {
    fn real<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            EntrySampler::Gaussian => rng.sample(StandardNormal),
            EntrySampler::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntrySampler::StudentT(t, scale) => t.sample(rng) * scale,
        }
    }

    fn complex<R: Rng>(&self, rng: &mut R) -> Complex64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Entry matrix in the field dictated by the distribution.
#[derive(Clone, Debug, PartialEq)]
pub enum EntryMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl EntryMatrix {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            EntryMatrix::Real(m) => m.shape(),
            EntryMatrix::Complex(m) => m.shape(),
        }
    }
}

/// `m × n` i.i.d. standardized entries, filled column by column from a
/// ChaCha8 stream seeded with `seed`.
pub fn sample_entries(m: usize, n: usize, dist: &EntryDistribution, seed: u64) -> Result<EntryMatrix> {
    let sampler = dist.sampler()?;
    let mut rng = trial_rng(seed);
    Ok(if dist.is_complex() {
        EntryMatrix::Complex(DMatrix::from_fn(m, n, |_, _| sampler.complex(&mut rng)))
    } else {
        EntryMatrix::Real(DMatrix::from_fn(m, n, |_, _| sampler.real(&mut rng)))
    })
}

/// `m` standardized entries drawn from `rng`.
pub fn sample_vector<R: Rng>(m: usize, dist: &EntryDistribution, rng: &mut R) -> Result<EntryVector> {
    let sampler = dist.sampler()?;
    Ok(if dist.is_complex() {
        EntryVector::Complex((0..m).map(|_| sampler.complex(rng)).collect())
    } else {
        EntryVector::Real((0..m).map(|_| sampler.real(rng)).collect())
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum EntryVector {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

fn hermitize<T: Scalar>(s: &mut DMatrix<T>) {
    let p = s.nrows();
    for j in 0..p {
        s[(j, j)] = T::from_real(s[(j, j)].real());
        for i in (j + 1)..p {
            let avg = (s[(i, j)] + s[(j, i)].conjugate()) * T::from_real(0.5);
            s[(i, j)] = avg;
            s[(j, i)] = avg.conjugate();
        }
    }
}

/// `S = (1/n) Y Y*` for an already filtered `Y = B X`.
pub fn covariance_of_observations<T: Scalar>(y: &DMatrix<T>, n: usize) -> DMatrix<T> {
    let mut s = y * y.adjoint();
    s /= T::from_real(n as f64);
    hermitize(&mut s);
    s
}

/// `S = (1/n) B X X* B*`.
pub fn form_sample_covariance<T: Scalar>(b: &DMatrix<T>, x: &DMatrix<T>, n: usize) -> Result<DMatrix<T>> {
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
    Ok(covariance_of_observations(&(b * x), n))
}

/// Deviations `|x* B* A B x - trace(A Σ)|` over `trials` independent vectors,
/// trial `k` drawing from the stream seeded with `seed + k`.
pub fn quadratic_form_deviation(
    b: &LinearOperator,
    a: &LinearOperator,
    dist: &EntryDistribution,
    trials: usize,
    seed: u64,
    exec: crate::par::Execution,
) -> Result<Vec<f64>> {
    dist.validate()?;
    let trace = a.trace_against(b)?;
    crate::par::try_map_indexed(exec, trials, |k| {
        let mut rng = trial_rng(seed.wrapping_add(k as u64));
        let q = match sample_vector(b.cols(), dist, &mut rng)? {
            EntryVector::Real(x) => {
                let y = b.apply(&x);
                let ay = a.apply(&y);
                y.iter().zip(&ay).map(|(u, v)| u * v).sum::<f64>()
            }
            EntryVector::Complex(x) => {
                let y = b.apply(&x);
                let ay = a.apply(&y);
                y.iter().zip(&ay).map(|(u, v)| u.conj() * v).sum::<Complex64>().re
            }
        };
        Ok((q - trace).abs())
    })
}

/// Full description of one ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpecRepr", into = "ModelSpecRepr")]
pub struct ModelSpec {
    pub filter: FilterSpec,
    pub n: usize,
    pub entry: EntryDistribution,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpecRepr {
    p: usize,
    n: usize,
    filter: FilterKind,
    entry: EntryDistribution,
    seed: u64,
}

impl TryFrom<ModelSpecRepr> for ModelSpec {
    type Error = Error;

    fn try_from(r: ModelSpecRepr) -> Result<Self> {
        let spec = ModelSpec {
            filter: FilterSpec::new(r.filter, r.p),
            n: r.n,
            entry: r.entry,
            seed: r.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<ModelSpec> for ModelSpecRepr {
    fn from(m: ModelSpec) -> Self {
        ModelSpecRepr {
            p: m.filter.p,
            n: m.n,
            filter: m.filter.kind,
            entry: m.entry,
            seed: m.seed,
        }
    }
}

impl ModelSpec {
    pub fn p(&self) -> usize {
        self.filter.p
    }

    /// Columns of `B` (the length of each latent vector).
    pub fn m(&self) -> Result<usize> {
        Ok(self.filter.operator()?.cols())
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.filter.p as f64 / self.n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.filter.p < 2 || self.n < 2 {
            return Err(Error::Config(format!(
                "p = {} and n = {} must both be at least 2",
                self.filter.p, self.n
            )));
        }
        self.filter.operator()?;
        self.entry.validate()
    }

    /// Sample covariance of the trial seeded with `seed`.
    pub fn sample_covariance(&self, seed: u64) -> Result<SampleCovariance> {
        let op = self.filter.operator()?;
        Ok(match sample_entries(op.cols(), self.n, &self.entry, seed)? {
            EntryMatrix::Real(x) => SampleCovariance::Real(covariance_of_observations(&op.apply_columns(&x)?, self.n)),
            EntryMatrix::Complex(x) => {
                SampleCovariance::Complex(covariance_of_observations(&op.apply_columns(&x)?, self.n))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SampleCovariance {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl SampleCovariance {
    pub fn eigenvalues(&self) -> Result<crate::eig::EigenSpectrum> {
        match self {
            SampleCovariance::Real(s) => hermitian_eigenvalues(s),
            SampleCovariance::Complex(s) => hermitian_eigenvalues(s),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            SampleCovariance::Real(s) => s.trace(),
            SampleCovariance::Complex(s) => s.trace().re,
        }
    }
}
