use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use spectral_limits::eig::{
    hermitian_eigenvalues, ks_distance, ks_distance_to, singular_values_scaled, EmpiricalCdf, LimitCdf,
};
use spectral_limits::model::{form_sample_covariance, trial_rng, EntryDistribution, FilterSpec, ModelSpec};
use spectral_limits::stieltjes::{AspectRatio, SolverOptions, SpectralMeasure};

fn gaussian_real(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = trial_rng(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn gaussian_complex(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = trial_rng(seed);
    DMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn hermitian(p: usize, seed: u64) -> DMatrix<Complex64> {
    let g = gaussian_complex(p, p, seed);
    (&g + g.adjoint()).map(|x| x * 0.5)
}

fn spectral_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[test]
fn trace_and_unitary_invariance() {
    for (k, p) in [16usize, 64, 256].into_iter().enumerate() {
        let a = hermitian(p, 10 + k as u64);
        let eig = hermitian_eigenvalues(&a).unwrap();
        let norm = spectral_norm(eig.values());
        let trace: f64 = (0..p).map(|i| a[(i, i)].re).sum();
        assert!((eig.sum() - trace).abs() <= 1e-8 * p as f64 * norm);
        let u = gaussian_complex(p, p, 100 + k as u64).qr().q();
        let rotated = &u * &a * u.adjoint();
        let rotated = (&rotated + rotated.adjoint()).map(|x| x * 0.5);
        let eig_rot = hermitian_eigenvalues(&rotated).unwrap();
        for (x, y) in eig.values().iter().zip(eig_rot.values()) {
            assert!((x - y).abs() <= 1e-8 * norm);
        }
    }
}

#[test]
fn real_symmetric_orthogonal_invariance() {
    let g = gaussian_real(80, 80, 3);
    let a = (&g + g.transpose()) * 0.5;
    let q = gaussian_real(80, 80, 4).qr().q();
    let b = &q * &a * q.transpose();
    let b = (&b + b.transpose()) * 0.5;
    let (ea, eb) = (hermitian_eigenvalues(&a).unwrap(), hermitian_eigenvalues(&b).unwrap());
    let norm = spectral_norm(ea.values());
    for (x, y) in ea.values().iter().zip(eb.values()) {
        assert!((x - y).abs() <= 1e-8 * norm);
    }
}

#[test]
fn sample_covariance_is_psd_and_hermitian() {
    for (p, m, n) in [(40, 40, 20), (30, 35, 100), (60, 60, 60)] {
        let b = gaussian_real(p, m, p as u64).map(Complex64::from);
        let x = gaussian_complex(m, n, n as u64);
        let s = form_sample_covariance(&b, &x, n).unwrap();
        let asym = (&s - s.adjoint()).iter().fold(0.0f64, |acc, v| acc.max(v.norm()));
        assert!(asym < 1e-12);
        let eig = hermitian_eigenvalues(&s).unwrap();
        let norm = spectral_norm(eig.values());
        assert!(eig.values()[0] >= -1e-9 * norm, "{}", eig.values()[0]);
        let frob = (&b * &x).norm_squared() / n as f64;
        assert!((s.trace().re - frob).abs() < 1e-10 * frob);
    }
}

#[test]
fn singular_values_agree_with_eigenvalues() {
    let (p, m, n) = (50, 60, 100);
    for seed in 0..3 {
        let b = gaussian_real(p, m, 200 + seed);
        let x = gaussian_real(m, n, 300 + seed);
        let sv = singular_values_scaled(&b, &x, n).unwrap();
        let ev = hermitian_eigenvalues(&form_sample_covariance(&b, &x, n).unwrap()).unwrap();
        assert_eq!(sv.len(), ev.len());
        for (s, e) in sv.values().iter().zip(ev.values()).skip(p / 2) {
            assert!((s - e).abs() <= 1e-8 * e.abs(), "{s} vs {e}");
        }
        let bc = b.map(Complex64::from);
        let xc = gaussian_complex(m, n, 400 + seed);
        let sv = singular_values_scaled(&bc, &xc, n).unwrap();
        let ev = hermitian_eigenvalues(&form_sample_covariance(&bc, &xc, n).unwrap()).unwrap();
        for (s, e) in sv.values().iter().zip(ev.values()).skip(p / 2) {
            assert!((s - e).abs() <= 1e-8 * e.abs(), "{s} vs {e}");
        }
    }
}

#[test]
fn ks_self_distance_of_limit_quantiles() {
    let opts = SolverOptions::default();
    for (c, h) in [
        (0.5, SpectralMeasure::point_mass(1.0).unwrap()),
        (0.3, SpectralMeasure::new([(1.0, 0.5), (4.0, 0.5)]).unwrap()),
    ] {
        let limit = LimitCdf::build(AspectRatio::new(c).unwrap(), &h, &opts).unwrap();
        let q: Vec<f64> = (0..1000).map(|k| limit.quantile((k as f64 + 0.5) / 1000.0)).collect();
        let ecdf = EmpiricalCdf::from_sorted(&q).unwrap();
        let d = ks_distance_to(&ecdf, &limit);
        assert!(d <= 1e-3 + 1e-3, "c={c}: {d}");
    }
}

fn ks_at(p: usize, seed: u64) -> f64 {
    let model = ModelSpec {
        filter: FilterSpec::identity(p),
        n: 2 * p,
        entry: EntryDistribution::GaussianReal,
        seed,
    };
    let eig = model.sample_covariance(seed).unwrap().eigenvalues().unwrap().clamp_nonnegative();
    ks_distance(&eig.ecdf().unwrap(), AspectRatio::new(0.5).unwrap(), &SpectralMeasure::point_mass(1.0).unwrap()).unwrap()
}

#[test]
fn ks_distance_shrinks_with_dimension() {
    assert!(ks_at(400, 1) < 0.05);
    let wins = (0..20).filter(|&s| ks_at(400, 500 + s) < ks_at(50, 500 + s)).count();
    assert!(wins >= 18, "{wins}/20");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_conservation(p in 1usize..40, seed in any::<u64>(), scale in 1e-3f64..1e3) {
        let a = hermitian(p, seed).map(|x| x * scale);
        let eig = hermitian_eigenvalues(&a).unwrap();
        let norm = spectral_norm(eig.values()).max(f64::MIN_POSITIVE);
        let trace: f64 = (0..p).map(|i| a[(i, i)].re).sum();
        prop_assert!((eig.sum() - trace).abs() <= 1e-8 * p as f64 * norm);
        prop_assert!(eig.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn weyl_rank_one_perturbation(p in 2usize..40, seed in any::<u64>(), eps in 1e-6f64..1e-1) {
        let a = hermitian(p, seed);
        let v = gaussian_complex(p, 1, seed.wrapping_add(1));
        let v = &v / Complex64::from(v.norm());
        let e = (&v * v.adjoint()).map(|x| x * eps);
        let base = hermitian_eigenvalues(&a).unwrap();
        let pert = hermitian_eigenvalues(&(&a + &e)).unwrap();
        for (x, y) in base.values().iter().zip(pert.values()) {
            prop_assert!((x - y).abs() <= eps + 1e-8);
        }
    }
}
