use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::stieltjes::{density_scan, AspectRatio, SolverOptions, SpectralMeasure};
use crate::support::{find_support, SupportSet};
use crate::{Error, Result};

/// Tabulated limit density over the padded support.
#[derive(Clone, Debug)]
pub struct DensityProfile {
    pub xs: Vec<f64>,
    pub density: Vec<f64>,
    pub support: SupportSet,
}

impl DensityProfile {
    /// Trapezoid integral of the density plus the atom at zero.
    pub fn total_mass(&self) -> f64 {
        let integral: f64 = self
            .xs
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
            .sum();
        integral + self.support.lsd_zero_atom_weight()
    }
}

/// Density on a uniform grid of `points` nodes spanning the support padded by
/// 10% on each side (plus the support endpoints themselves).
pub fn density_profile(c: AspectRatio, h: &SpectralMeasure, points: usize) -> Result<DensityProfile> {
    if points < 2 {
        return Err(Error::Config("a density profile needs at least 2 points".into()));
    }
    let support = find_support(c, h)?;
    let (Some(left), Some(right)) = (support.left_edge(), support.right_edge()) else {
        return Err(Error::InvalidMeasure("limit law has no continuous part".into()));
    };
    let pad = 0.1 * (right - left);
    let lo = (left - pad).max(1e-9 * right);
    let hi = right + pad;
    let mut xs: Vec<f64> = (0..points)
        .map(|j| lo + (hi - lo) * j as f64 / (points - 1) as f64)
        .collect();
    for &(l, r) in support.intervals() {
        xs.extend([l, r].into_iter().filter(|&x| x > 0.0));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let density = density_scan(&xs, c, h, &SolverOptions::default())?;
    Ok(DensityProfile { xs, density, support })
}

/// Companion path holding the support endpoints: `density.txt` becomes
/// `density.support.txt`.
pub fn support_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("density");
    path.with_file_name(format!("{stem}.support.txt"))
}

/// Writes `x density` rows to `path` and the support endpoints to
/// [`support_path`].
pub fn emit_density_profile(c: AspectRatio, h: &SpectralMeasure, points: usize, path: &Path) -> Result<DensityProfile> {
    let profile = density_profile(c, h, points)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = String::from("# x density\n");
    for (x, d) in profile.xs.iter().zip(&profile.density) {
        writeln!(out, "{x:.12e} {d:.12e}").expect("write to String");
    }
    std::fs::write(path, out)?;

    let mut sup = format!(
        "# aspect_ratio {}\n# zero_atom {}\n# left right\n",
        c.value(),
        profile.support.lsd_zero_atom_weight()
    );
    for (l, r) in profile.support.intervals() {
        writeln!(sup, "{l:.12e} {r:.12e}").expect("write to String");
    }
    std::fs::write(support_path(path), sup)?;
    Ok(profile)
}

/// Normalized histogram `(bin centre, density)` of `values` with the given
/// bin width, starting at `floor(min / width) * width`.
pub fn histogram(values: &[f64], width: f64) -> Vec<(f64, f64)> {
    if values.is_empty() || !(width > 0.0) {
        return Vec::new();
    }
    let lo = (values.iter().copied().fold(f64::INFINITY, f64::min) / width).floor() * width;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = (((hi - lo) / width).floor() as usize) + 1;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    let scale = 1.0 / (values.len() as f64 * width);
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (lo + (k as f64 + 0.5) * width, c as f64 * scale))
        .collect()
}
