use proptest::prelude::*;
use rand::Rng;

use spectral_limits::model::trial_rng;
use spectral_limits::stieltjes::{companion_value_map, density_at, AspectRatio, SolverOptions, SpectralMeasure};
use spectral_limits::support::{critical_points, find_support, largest_edge, value_map_derivative, value_map_real};

fn ratio(c: f64) -> AspectRatio {
    AspectRatio::new(c).unwrap()
}

fn measure(atoms: &[(f64, f64)]) -> SpectralMeasure {
    SpectralMeasure::new(atoms.iter().copied()).unwrap()
}

fn x_of(mu: f64, c: f64, atoms: &[(f64, f64)]) -> f64 {
    -1.0 / mu + c * atoms.iter().map(|&(t, w)| w * t / (1.0 + t * mu)).sum::<f64>()
}

/// Local extrema of `x` on each negative branch, found on a 10^6-point grid
/// and refined by bisection on the sign of the forward difference.
fn brute_force_critical_values(c: f64, atoms: &[(f64, f64)]) -> Vec<f64> {
    const N: usize = 1_000_000;
    let mut poles: Vec<f64> = atoms.iter().map(|&(t, _)| -1.0 / t).collect();
    poles.sort_by(f64::total_cmp);
    let mut branches: Vec<Box<dyn Fn(f64) -> f64>> = Vec::new();
    let first = poles[0];
    branches.push(Box::new(move |s: f64| first - (s * std::f64::consts::FRAC_PI_2).tan()));
    for w in poles.windows(2) {
        let (a, b) = (w[0], w[1]);
        branches.push(Box::new(move |s: f64| a + (b - a) * s));
    }
    let last = *poles.last().unwrap();
    branches.push(Box::new(move |s: f64| last * (1.0 - s)));

    let f = |mu: f64| x_of(mu, c, atoms);
    let mut values = Vec::new();
    for map in &branches {
        let mus: Vec<f64> = (1..N).map(|i| map(i as f64 / N as f64)).collect();
        let xs: Vec<f64> = mus.iter().map(|&m| f(m)).collect();
        for i in 1..xs.len() - 1 {
            let is_max = xs[i] > xs[i - 1] && xs[i] >= xs[i + 1];
            let is_min = xs[i] < xs[i - 1] && xs[i] <= xs[i + 1];
            if !(is_max || is_min) {
                continue;
            }
            let (mut lo, mut hi) = (mus[i - 1].min(mus[i + 1]), mus[i - 1].max(mus[i + 1]));
            let rising = |m: f64| {
                let h = 1e-7 * m.abs().max(1e-3);
                f(m + h) > f(m - h)
            };
            let lo_rising = rising(lo);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if rising(mid) == lo_rising {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let x = f(0.5 * (lo + hi));
            if x > 0.0 {
                values.push(x);
            }
        }
    }
    values.sort_by(f64::total_cmp);
    values
}

fn endpoints(c: f64, atoms: &[(f64, f64)]) -> Vec<f64> {
    let s = find_support(ratio(c), &measure(atoms)).unwrap();
    s.intervals().iter().flat_map(|&(l, r)| [l, r]).collect()
}

#[test]
fn two_cluster_support_matches_grid_oracle() {
    let atoms = [(1.0, 0.5), (10.0, 0.5)];
    let got = endpoints(0.05, &atoms);
    let want = brute_force_critical_values(0.05, &atoms);
    assert_eq!(got.len(), 4, "{got:?}");
    assert_eq!(want.len(), 4, "{want:?}");
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-8 * w.max(1.0), "{g} vs {w}");
    }
}

#[test]
fn largest_edge_matches_grid_oracle() {
    let atoms = [(1.0, 0.5), (4.0, 0.5)];
    let want = *brute_force_critical_values(0.3, &atoms).last().unwrap();
    let got = largest_edge(ratio(0.3), &measure(&atoms)).unwrap();
    assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
    let all = endpoints(0.3, &atoms);
    let oracle = brute_force_critical_values(0.3, &atoms);
    assert_eq!(all.len(), oracle.len());
}

#[test]
fn derivative_matches_central_differences() {
    let atoms = [(1.0, 0.3), (2.5, 0.3), (6.0, 0.4)];
    let h = measure(&atoms);
    let c = 0.4;
    let poles = [0.0, -1.0, -0.4, -1.0 / 6.0];
    let mut rng = trial_rng(77);
    let mut checked = 0;
    while checked < 100 {
        let mu: f64 = rng.random_range(-3.0..2.0);
        if poles.iter().any(|p| (mu - p).abs() < 0.05) {
            continue;
        }
        let step = 1e-6;
        let fd = (x_of(mu + step, c, &atoms) - x_of(mu - step, c, &atoms)) / (2.0 * step);
        let d = value_map_derivative(mu, ratio(c), &h).unwrap();
        assert!((d - fd).abs() <= 1e-6 * d.abs().max(1.0), "mu={mu}: {d} vs {fd}");
        let x = value_map_real(mu, ratio(c), &h).unwrap();
        assert!((x - x_of(mu, c, &atoms)).abs() < 1e-12 * x.abs().max(1.0));
        checked += 1;
    }
}

#[test]
fn round_trip_through_critical_points() {
    for (c, atoms) in [
        (0.05, vec![(1.0, 0.5), (10.0, 0.5)]),
        (0.3, vec![(1.0, 0.5), (4.0, 0.5)]),
        (0.25, vec![(1.0, 1.0)]),
        (0.1, vec![(0.5, 0.2), (2.0, 0.3), (8.0, 0.5)]),
    ] {
        let h = measure(&atoms);
        let crit = critical_points(ratio(c), &h).unwrap();
        for edge in endpoints(c, &atoms) {
            let hit = crit.iter().find(|cp| (cp.x - edge).abs() < 1e-8).unwrap_or_else(|| {
                panic!("c={c}: no critical point for edge {edge}: {crit:?}")
            });
            assert!(value_map_derivative(hit.mu, ratio(c), &h).unwrap().abs() < 1e-8);
            let z = companion_value_map(num_complex::Complex64::new(hit.mu, 0.0), ratio(c), &h).unwrap();
            assert!((z.re - edge).abs() < 1e-8 && z.im.abs() < 1e-12);
        }
    }
}

#[test]
fn density_vanishes_in_gaps_and_not_in_bulk() {
    let opts = SolverOptions::default();
    for (c, atoms) in [
        (0.05, vec![(1.0, 0.5), (10.0, 0.5)]),
        (0.3, vec![(1.0, 0.5), (4.0, 0.5)]),
        (0.25, vec![(1.0, 1.0)]),
        (0.5, vec![(1.0, 1.0)]),
    ] {
        let h = measure(&atoms);
        let s = find_support(ratio(c), &h).unwrap();
        for &(l, r) in s.intervals() {
            assert!(density_at(0.5 * (l + r), ratio(c), &h, &opts).unwrap() > 1e-3);
        }
        for w in s.intervals().windows(2) {
            let mid = 0.5 * (w[0].1 + w[1].0);
            assert!(density_at(mid, ratio(c), &h, &opts).unwrap() < 1e-4);
        }
    }
}

#[test]
fn right_edge_increases_with_c() {
    let h = measure(&[(1.0, 1.0)]);
    let edges: Vec<f64> = (1..=10).map(|k| largest_edge(ratio(k as f64 / 10.0), &h).unwrap()).collect();
    assert!(edges.windows(2).all(|w| w[1] > w[0]), "{edges:?}");
    for (k, e) in edges.iter().enumerate() {
        let c = (k + 1) as f64 / 10.0;
        assert!((e - (1.0 + c.sqrt()).powi(2)).abs() < 1e-9);
    }
}

#[test]
fn scaling_equivariance_of_support() {
    let atoms = [(1.0, 0.5), (10.0, 0.5)];
    let h = measure(&atoms);
    let base = find_support(ratio(0.05), &h).unwrap();
    for s in [0.5, 2.0, 4.0] {
        let scaled = find_support(ratio(0.05), &h.scaled(s).unwrap()).unwrap();
        assert_eq!(base.intervals().len(), scaled.intervals().len());
        for (a, b) in base.intervals().iter().zip(scaled.intervals()) {
            assert!((a.0 * s - b.0).abs() <= 1e-8 * b.0 && (a.1 * s - b.1).abs() <= 1e-8 * b.1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn support_is_ordered_and_consistent(
        c in 0.02f64..3.0,
        t1 in 0.2f64..3.0,
        ratio_t in 1.5f64..20.0,
        w in 0.1f64..0.9,
    ) {
        let atoms = [(t1, w), (t1 * ratio_t, 1.0 - w)];
        let h = measure(&atoms);
        let s = find_support(ratio(c), &h).unwrap();
        prop_assert!(!s.intervals().is_empty());
        for &(l, r) in s.intervals() {
            prop_assert!(l >= 0.0 && l < r);
        }
        for pair in s.intervals().windows(2) {
            prop_assert!(pair[0].1 < pair[1].0);
        }
        let expected_atom = (1.0 - 1.0 / c).max(0.0);
        prop_assert!((s.lsd_zero_atom_weight() - expected_atom).abs() < 1e-12);
        let edge = s.right_edge().unwrap();
        let floor = if c < 1.0 { h.max_location() * (1.0 - c.sqrt()).powi(2) } else { 0.0 };
        let mean = t1 * w + t1 * ratio_t * (1.0 - w);
        prop_assert!(edge >= floor - 1e-9 && edge >= mean);
        prop_assert!(edge <= h.max_location() * (1.0 + c.sqrt()).powi(2) + 1e-9);
    }
}
