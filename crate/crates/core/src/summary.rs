//! Posterior functional summaries of stored spectral density samples.
//!
//! Stored curves are reduced to a per-frequency median with equal-tailed
//! pointwise quantiles, and to a uniform credible band `f_med +/- zeta * mad`
//! whose half-width multiplier `zeta` is the empirical `1 - alpha` quantile
//! of the per-sample statistic `m_i = max_j |f_i(w_j) - f_med(w_j)| / mad(w_j)`.
//! Curve error against a known spectrum is measured by the integrated
//! absolute difference over `[0, pi]`.
//!
//! Conventions that affect the numbers: quantiles linearly interpolate order
//! statistics (position `p (S - 1)`), and `mad` is the raw median absolute
//! deviation with no consistency factor. Both are part of the external
//! contract; changing either changes `zeta` in the third decimal.

use crate::sampler::ChainTrace;
use crate::spectra::Periodogram;
use crate::{Error, Result};

/// Number of trapezoid nodes for integrated-absolute-error quadrature.
const IAE_NODES: usize = 4097;

/// Posterior spectral density draws evaluated on a fixed frequency grid.
#[derive(Debug, Clone)]
pub struct PsdSamples {
    grid: Vec<f64>,
    curves: Vec<Vec<f64>>,
}

impl PsdSamples {
    /// Validates and stores `curves` (one row per retained draw) over `grid`.
    ///
    /// Requires a strictly increasing grid inside `[0, pi]`, at least two
    /// rows (dispersion needs a spread), equal row lengths, and strictly
    /// positive finite values.
    pub fn new(grid: Vec<f64>, curves: Vec<Vec<f64>>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidSummary("frequency grid is empty".into()));
        }
        for (j, &w) in grid.iter().enumerate() {
            if !w.is_finite() || !(0.0..=std::f64::consts::PI).contains(&w) {
                return Err(Error::InvalidSummary(format!(
                    "grid point {j} is {w}, outside [0, pi]"
                )));
            }
            if j > 0 && w <= grid[j - 1] {
                return Err(Error::InvalidSummary(format!(
                    "grid not strictly increasing at point {j}"
                )));
            }
        }
        if curves.len() < 2 {
            return Err(Error::InvalidSummary(format!(
                "need at least 2 stored curves, got {}",
                curves.len()
            )));
        }
        for (i, row) in curves.iter().enumerate() {
            if row.len() != grid.len() {
                return Err(Error::InvalidSummary(format!(
                    "curve {i} has {} values for {} grid points",
                    row.len(),
                    grid.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|v| !v.is_finite() || **v <= 0.0) {
                return Err(Error::InvalidSummary(format!(
                    "curve {i} contains non-positive or non-finite value {bad}"
                )));
            }
        }
        Ok(Self { grid, curves })
    }

    /// Collects a chain trace's stored spectra over the periodogram grid.
    pub fn from_trace(trace: &ChainTrace, pg: &Periodogram) -> Result<Self> {
        Self::new(pg.frequencies().to_vec(), trace.psd.clone())
    }

    /// Frequency grid the curves are evaluated on.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Stored curves, one row per draw.
    pub fn curves(&self) -> &[Vec<f64>] {
        &self.curves
    }

    /// Number of stored draws.
    pub fn n_samples(&self) -> usize {
        self.curves.len()
    }

    /// Number of grid points.
    pub fn n_grid(&self) -> usize {
        self.grid.len()
    }

    /// Sorted copy of the values at grid point `j`.
    fn sorted_column(&self, j: usize) -> Vec<f64> {
        let mut col: Vec<f64> = self.curves.iter().map(|row| row[j]).collect();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        col
    }
}

/// Empirical quantile by linear interpolation of order statistics: the
/// value at position `p (n - 1)` of the sorted sample. `p = 0` gives the
/// minimum, `p = 1` the maximum.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn check_level(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidSummary(format!(
            "credible level alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Per-frequency median and equal-tailed quantile curves.
#[derive(Debug, Clone)]
pub struct PointwiseSummary {
    /// Per-point empirical median.
    pub median: Vec<f64>,
    /// Per-point `alpha / 2` quantile.
    pub lower: Vec<f64>,
    /// Per-point `1 - alpha / 2` quantile.
    pub upper: Vec<f64>,
}

/// Computes the median curve and the equal-tailed `alpha / 2`,
/// `1 - alpha / 2` quantile curves, one grid point at a time.
pub fn pointwise_summary(samples: &PsdSamples, alpha: f64) -> Result<PointwiseSummary> {
    check_level(alpha)?;
    let g = samples.n_grid();
    let mut median = Vec::with_capacity(g);
    let mut lower = Vec::with_capacity(g);
    let mut upper = Vec::with_capacity(g);
    for j in 0..g {
        let col = samples.sorted_column(j);
        median.push(quantile_sorted(&col, 0.5));
        lower.push(quantile_sorted(&col, alpha / 2.0));
        upper.push(quantile_sorted(&col, 1.0 - alpha / 2.0));
    }
    Ok(PointwiseSummary { median, lower, upper })
}

/// Uniform credible band `median +/- zeta * mad` over the whole grid.
#[derive(Debug, Clone)]
pub struct UniformBand {
    /// Frequency grid the band lives on.
    pub grid: Vec<f64>,
    /// Per-point median curve the band is centered on.
    pub center: Vec<f64>,
    /// Per-point raw median absolute deviation.
    pub mad: Vec<f64>,
    /// `center - zeta * mad`.
    pub lower: Vec<f64>,
    /// `center + zeta * mad`.
    pub upper: Vec<f64>,
    /// Half-width multiplier: empirical `1 - alpha` quantile of the
    /// per-sample maximum normalized deviation.
    pub zeta: f64,
    /// All grid points had zero dispersion; the band is everywhere
    /// zero-width and `zeta` is reported as 0.
    pub degenerate: bool,
}

/// Builds the uniform band at level `alpha`.
///
/// Grid points where `mad = 0` are excluded from each sample's maximum
/// (avoiding 0/0) and get a zero-width band. If every point is degenerate
/// the band collapses onto the median and the result is flagged.
pub fn uniform_band(samples: &PsdSamples, alpha: f64) -> Result<UniformBand> {
    check_level(alpha)?;
    let g = samples.n_grid();
    let s = samples.n_samples();
    let mut center = Vec::with_capacity(g);
    let mut mad = Vec::with_capacity(g);
    for j in 0..g {
        let col = samples.sorted_column(j);
        let med = quantile_sorted(&col, 0.5);
        let mut dev: Vec<f64> = col.iter().map(|v| (v - med).abs()).collect();
        dev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        center.push(med);
        mad.push(quantile_sorted(&dev, 0.5));
    }
    let active: Vec<usize> = (0..g).filter(|&j| mad[j] > 0.0).collect();
    let (zeta, degenerate) = if active.is_empty() {
        (0.0, true)
    } else {
        let mut stats: Vec<f64> = (0..s)
            .map(|i| {
                active
                    .iter()
                    .map(|&j| (samples.curves[i][j] - center[j]).abs() / mad[j])
                    .fold(0.0, f64::max)
            })
            .collect();
        stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (quantile_sorted(&stats, 1.0 - alpha), false)
    };
    let lower: Vec<f64> = center.iter().zip(&mad).map(|(c, m)| c - zeta * m).collect();
    let upper: Vec<f64> = center.iter().zip(&mad).map(|(c, m)| c + zeta * m).collect();
    Ok(UniformBand { grid: samples.grid.clone(), center, mad, lower, upper, zeta, degenerate })
}

/// Full posterior summary: pointwise curves, uniform band, and the scalar
/// parameter traces that accompany the stored spectra.
#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    /// Frequency grid.
    pub grid: Vec<f64>,
    /// Per-point median curve.
    pub median: Vec<f64>,
    /// Pointwise `alpha / 2` quantile curve.
    pub lo_point: Vec<f64>,
    /// Pointwise `1 - alpha / 2` quantile curve.
    pub hi_point: Vec<f64>,
    /// Uniform band lower edge.
    pub lo_unif: Vec<f64>,
    /// Uniform band upper edge.
    pub hi_unif: Vec<f64>,
    /// Uniform band half-width multiplier.
    pub zeta: f64,
    /// Whether the uniform band collapsed to zero width everywhere.
    pub degenerate: bool,
    /// Mixture-size trace aligned with the stored curves.
    pub k_trace: Vec<usize>,
    /// Normalization trace aligned with the stored curves.
    pub tau_trace: Vec<f64>,
}

impl PosteriorSummary {
    /// Assembles the pointwise and uniform summaries at level `alpha`
    /// together with the aligned `k` and `tau` traces.
    pub fn new(
        samples: &PsdSamples,
        alpha: f64,
        k_trace: Vec<usize>,
        tau_trace: Vec<f64>,
    ) -> Result<Self> {
        if k_trace.len() != samples.n_samples() || tau_trace.len() != samples.n_samples() {
            return Err(Error::InvalidSummary(format!(
                "trace lengths {} / {} do not match {} stored curves",
                k_trace.len(),
                tau_trace.len(),
                samples.n_samples()
            )));
        }
        let point = pointwise_summary(samples, alpha)?;
        let band = uniform_band(samples, alpha)?;
        Ok(Self {
            grid: samples.grid.clone(),
            median: point.median,
            lo_point: point.lower,
            hi_point: point.upper,
            lo_unif: band.lower,
            hi_unif: band.upper,
            zeta: band.zeta,
            degenerate: band.degenerate,
            k_trace,
            tau_trace,
        })
    }

    /// Assembles the summary straight from a chain trace.
    pub fn from_trace(trace: &ChainTrace, pg: &Periodogram, alpha: f64) -> Result<Self> {
        let samples = PsdSamples::from_trace(trace, pg)?;
        let k_trace = trace.states.iter().map(|s| s.k).collect();
        let tau_trace = trace.states.iter().map(|s| s.tau).collect();
        Self::new(&samples, alpha, k_trace, tau_trace)
    }
}

/// Integrated absolute difference between a curve known at `grid` points
/// and a reference spectrum, over `[0, pi]`.
///
/// The estimate is piecewise-linearly interpolated between grid points and
/// extended as a constant into the boundary gaps; the integral uses the
/// trapezoidal rule on a dense uniform grid.
pub fn iae<F: Fn(f64) -> f64>(grid: &[f64], estimate: &[f64], truth: F) -> Result<f64> {
    if grid.is_empty() || grid.len() != estimate.len() {
        return Err(Error::InvalidSummary(format!(
            "estimate has {} values for {} grid points",
            estimate.len(),
            grid.len()
        )));
    }
    for (j, &w) in grid.iter().enumerate() {
        if !w.is_finite() || !(0.0..=std::f64::consts::PI).contains(&w) {
            return Err(Error::InvalidSummary(format!(
                "grid point {j} is {w}, outside [0, pi]"
            )));
        }
        if j > 0 && w <= grid[j - 1] {
            return Err(Error::InvalidSummary(format!(
                "grid not strictly increasing at point {j}"
            )));
        }
    }
    let interp = |w: f64| -> f64 {
        if w <= grid[0] {
            return estimate[0];
        }
        if w >= grid[grid.len() - 1] {
            return estimate[grid.len() - 1];
        }
        let hi = grid.partition_point(|&g| g < w);
        let lo = hi - 1;
        let t = (w - grid[lo]) / (grid[hi] - grid[lo]);
        estimate[lo] + t * (estimate[hi] - estimate[lo])
    };
    let h = std::f64::consts::PI / (IAE_NODES - 1) as f64;
    let mut total = 0.0;
    for i in 0..IAE_NODES {
        let w = i as f64 * h;
        let weight = if i == 0 || i == IAE_NODES - 1 { 0.5 } else { 1.0 };
        total += weight * (interp(w) - truth(w)).abs();
    }
    Ok(total * h)
}

/// Whether the reference spectrum lies inside the band at every grid point.
pub fn covered<F: Fn(f64) -> f64>(truth: F, band: &UniformBand) -> bool {
    band.grid
        .iter()
        .enumerate()
        .all(|(j, &w)| {
            let f = truth(w);
            band.lower[j] <= f && f <= band.upper[j]
        })
}
