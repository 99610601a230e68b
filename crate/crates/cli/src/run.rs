//! Single-run pipelines: preprocessing, sampling, summarizing, artifacts.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use specden::sampler::{ChainTrace, Sampler};
use specden::spectra::{
    difference, hann_window, mean_center, periodogram, sqrt_transform, Periodogram, TimeSeries,
};
use specden::summary::PosteriorSummary;

use crate::config::RunConfig;
use crate::io;

/// Everything an estimation run leaves behind.
#[derive(Debug)]
pub struct EstimateOutput {
    pub summary: PosteriorSummary,
    pub series_len: usize,
    pub summary_path: PathBuf,
    pub trace_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Peak of the posterior median spectrum, in cyclic units.
#[derive(Debug, Clone, Copy)]
pub struct SpectralPeak {
    /// Cycles per time unit at the peak Fourier frequency.
    pub frequency: f64,
    /// Reciprocal of the peak frequency, in time units.
    pub period: f64,
}

/// Applies the configured transforms: variance stabilization first, then
/// differencing, then tapering, with centering always last so the
/// periodogram sees a mean-zero series.
pub fn preprocess(ts: TimeSeries, cfg: &RunConfig) -> Result<TimeSeries> {
    let mut ts = ts;
    if cfg.sqrt {
        ts = sqrt_transform(&ts).context("sqrt preprocessing failed")?;
    }
    if cfg.difference {
        ts = difference(&ts).context("difference preprocessing failed")?;
    }
    if cfg.hann {
        ts = hann_window(&ts);
    }
    if cfg.center {
        ts = mean_center(&ts);
    }
    Ok(ts)
}

/// Runs the sampler on a prepared series and summarizes the posterior.
/// Serial by default; a multi-chain config runs the tempered ladder and
/// summarizes its untempered chain.
pub fn run_posterior(
    pg: &Periodogram,
    cfg: &RunConfig,
) -> Result<(ChainTrace, PosteriorSummary)> {
    let prior = cfg.prior_for(pg.series_len());
    let mcmc = cfg.mcmc();
    let sampler = Sampler::new(pg, &prior, &mcmc)?;
    let trace = if cfg.chains > 1 {
        sampler.run_tempered()?.cold
    } else {
        sampler.run_chain()?
    };
    let summary = PosteriorSummary::from_trace(&trace, pg, cfg.alpha)?;
    Ok((trace, summary))
}

fn check_finite(summary: &PosteriorSummary, trace: &ChainTrace) -> Result<()> {
    let curves = [
        &summary.median,
        &summary.lo_point,
        &summary.hi_point,
        &summary.lo_unif,
        &summary.hi_unif,
    ];
    if curves.iter().any(|c| c.iter().any(|v| !v.is_finite())) || !summary.zeta.is_finite() {
        bail!("posterior summary contains non-finite values");
    }
    if trace
        .states
        .iter()
        .zip(&trace.logliks)
        .any(|(s, ll)| !s.tau.is_finite() || !ll.is_finite())
    {
        bail!("stored trace contains non-finite values");
    }
    Ok(())
}

/// Runs the full pipeline on an already loaded series and writes the
/// summary CSV, trace CSV, and replay manifest into the output directory.
pub fn estimate_series(ts: TimeSeries, cfg: &RunConfig) -> Result<EstimateOutput> {
    let prepared = preprocess(ts, cfg)?;
    let series_len = prepared.len();
    let pg = periodogram(&prepared)?;
    let (trace, summary) = run_posterior(&pg, cfg)?;
    check_finite(&summary, &trace)?;
    std::fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create output directory {}", cfg.out.display()))?;
    let summary_path = cfg.out.join("summary.csv");
    let trace_path = cfg.out.join("trace.csv");
    let manifest_path = cfg.out.join("manifest.txt");
    io::write_summary_csv(&summary_path, &summary, cfg.sampling_interval)?;
    io::write_trace_csv(&trace_path, &trace)?;
    io::write_manifest(&manifest_path, cfg, series_len)?;
    Ok(EstimateOutput { summary, series_len, summary_path, trace_path, manifest_path })
}

/// Loads the configured input series and estimates its spectrum.
pub fn estimate(cfg: &RunConfig) -> Result<EstimateOutput> {
    let input = cfg
        .input
        .as_ref()
        .context("estimate needs an input series (--input)")?;
    let ts = io::load_series(input, cfg.sampling_interval)?;
    estimate_series(ts, cfg)
}

/// Location of the argmax of the posterior median spectrum.
pub fn spectral_peak(summary: &PosteriorSummary, sampling_interval: f64) -> SpectralPeak {
    let mut best = 0;
    for j in 1..summary.median.len() {
        if summary.median[j] > summary.median[best] {
            best = j;
        }
    }
    let frequency = io::cycles_per_unit(summary.grid[best], sampling_interval);
    SpectralPeak { frequency, period: 1.0 / frequency }
}

/// The bundled yearly solar activity series, 288 annual means.
pub fn bundled_sunspot_series() -> Result<TimeSeries> {
    let raw = include_str!("../data/sunspot.csv");
    let mut values = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        if idx == 0 {
            continue;
        }
        let (_, value) = line
            .split_once(',')
            .with_context(|| format!("bundled sunspot data line {}: missing comma", idx + 1))?;
        values.push(
            value
                .trim()
                .parse::<f64>()
                .with_context(|| format!("bundled sunspot data line {}: bad value", idx + 1))?,
        );
    }
    TimeSeries::new(values, 1.0).context("bundled sunspot data invalid")
}

/// Estimates the solar activity spectrum and reports its dominant cycle.
pub fn sunspot(cfg: &RunConfig) -> Result<(EstimateOutput, SpectralPeak)> {
    let ts = bundled_sunspot_series()?;
    let output = estimate_series(ts, cfg)?;
    let peak = spectral_peak(&output.summary, cfg.sampling_interval);
    Ok((output, peak))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Mode;

    #[test]
    fn bundled_series_has_288_years() {
        let ts = bundled_sunspot_series().unwrap();
        assert_eq!(ts.len(), 288);
        assert_eq!(ts.sampling_interval(), 1.0);
        assert!(ts.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn preprocessing_applies_in_fixed_order() {
        let mut cfg = RunConfig::defaults(Mode::Estimate);
        cfg.sqrt = true;
        cfg.center = true;
        let ts = TimeSeries::new(vec![1.0, 4.0, 9.0, 16.0, 25.0, 36.0, 49.0, 64.0], 1.0).unwrap();
        let out = preprocess(ts, &cfg).unwrap();
        let mean: f64 = out.values().iter().sum::<f64>() / 8.0;
        assert!(mean.abs() < 1e-12);
        // sqrt first: centered values of 1..8, not of the squares.
        assert!((out.values()[0] - (1.0 - 4.5)).abs() < 1e-12);
    }

    #[test]
    fn peak_reporting_picks_the_argmax_bin() {
        let summary = PosteriorSummary {
            grid: vec![0.5, 1.0, 1.5],
            median: vec![1.0, 3.0, 2.0],
            lo_point: vec![0.5; 3],
            hi_point: vec![4.0; 3],
            lo_unif: vec![0.4; 3],
            hi_unif: vec![5.0; 3],
            zeta: 1.0,
            degenerate: false,
            k_trace: vec![4, 4],
            tau_trace: vec![1.0, 1.0],
        };
        let peak = spectral_peak(&summary, 1.0);
        let expect = 1.0 / (2.0 * std::f64::consts::PI);
        assert!((peak.frequency - expect).abs() < 1e-12);
        assert!((peak.period - 1.0 / expect).abs() < 1e-9);
    }
}
