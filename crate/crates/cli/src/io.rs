//! File ingestion and artifact emission.
//!
//! Everything written is plain text: a summary CSV on the spectral density
//! scale, a scalar trace CSV, and a manifest in config-file syntax that
//! replays the run when passed back through `--config`. Floats are printed
//! in Rust's shortest round-trip form, so identical runs produce identical
//! bytes.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use specden::sampler::ChainTrace;
use specden::spectra::TimeSeries;
use specden::summary::PosteriorSummary;

use crate::config::RunConfig;

/// Loads a single-column CSV of finite reals, with an optional `value`
/// header. Parse failures name the offending line.
pub fn load_series(path: &Path, sampling_interval: f64) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read input series {}", path.display()))?;
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line == "value" {
            continue;
        }
        let v: f64 = line.parse().with_context(|| {
            format!(
                "{}: line {}: expected a number, got `{line}`",
                path.display(),
                idx + 1
            )
        })?;
        if !v.is_finite() {
            bail!("{}: line {}: non-finite value {v}", path.display(), idx + 1);
        }
        values.push(v);
    }
    if values.len() < 8 {
        bail!(
            "{}: need at least 8 observations, found {}",
            path.display(),
            values.len()
        );
    }
    TimeSeries::new(values, sampling_interval)
        .with_context(|| format!("invalid series in {}", path.display()))
}

/// Converts an angular frequency on (0, pi] to cycles per time unit.
pub fn cycles_per_unit(angular: f64, sampling_interval: f64) -> f64 {
    angular / (2.0 * std::f64::consts::PI * sampling_interval)
}

/// Writes the posterior summary CSV: one row per Fourier frequency, the
/// frequency column in cycles per time unit.
pub fn write_summary_csv(
    path: &Path,
    summary: &PosteriorSummary,
    sampling_interval: f64,
) -> Result<()> {
    let mut out = String::from("freq,median,lo_point,hi_point,lo_unif,hi_unif\n");
    for j in 0..summary.grid.len() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            cycles_per_unit(summary.grid[j], sampling_interval),
            summary.median[j],
            summary.lo_point[j],
            summary.hi_point[j],
            summary.lo_unif[j],
            summary.hi_unif[j],
        )
        .unwrap();
    }
    std::fs::write(path, out)
        .with_context(|| format!("cannot write summary CSV {}", path.display()))
}

/// Writes the retained scalar trace: sweep index, mixture size,
/// normalization, and log-likelihood per stored draw.
pub fn write_trace_csv(path: &Path, trace: &ChainTrace) -> Result<()> {
    let mut out = String::from("iter,k,tau,loglik\n");
    for i in 0..trace.len() {
        writeln!(
            out,
            "{},{},{},{}",
            trace.iterations[i],
            trace.states[i].k,
            trace.states[i].tau,
            trace.logliks[i],
        )
        .unwrap();
    }
    std::fs::write(path, out)
        .with_context(|| format!("cannot write trace CSV {}", path.display()))
}

/// Writes the replayable manifest: a comment header with tool metadata,
/// then every resolved config value in `key = value` syntax.
pub fn write_manifest(path: &Path, cfg: &RunConfig, series_len: usize) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# specden {} run manifest", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(out, "# mode = {}", cfg.mode.name()).unwrap();
    writeln!(out, "# series_len = {series_len}").unwrap();
    writeln!(out, "# replay: specden {} --config <this file>", cfg.mode.name()).unwrap();
    for (key, value) in cfg.manifest_pairs(series_len) {
        writeln!(out, "{key} = {value}").unwrap();
    }
    std::fs::write(path, out)
        .with_context(|| format!("cannot write manifest {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn eight_plain_rows_load_as_a_series() {
        let (_d, path) = write_temp("s.csv", "1\n2\n3\n4\n5\n6\n7\n8\n");
        let ts = load_series(&path, 1.0).unwrap();
        assert_eq!(ts.len(), 8);
        assert_eq!(ts.values()[7], 8.0);
    }

    #[test]
    fn a_value_header_is_skipped() {
        let (_d, path) = write_temp("s.csv", "value\n1\n2\n3\n4\n5\n6\n7\n8\n");
        let ts = load_series(&path, 1.0).unwrap();
        assert_eq!(ts.len(), 8);
        assert_eq!(ts.values()[0], 1.0);
    }

    #[test]
    fn a_bad_row_is_reported_with_its_line_number() {
        let (_d, path) = write_temp("s.csv", "1\n2\n3\n4\nabc\n6\n7\n8\n");
        let err = format!("{:#}", load_series(&path, 1.0).unwrap_err());
        assert!(err.contains("line 5"), "message was: {err}");
        assert!(err.contains("abc"), "message was: {err}");
    }

    #[test]
    fn short_files_are_rejected() {
        let (_d, path) = write_temp("s.csv", "1\n2\n3\n");
        let err = format!("{:#}", load_series(&path, 1.0).unwrap_err());
        assert!(err.contains("at least 8"), "message was: {err}");
    }

    #[test]
    fn missing_files_are_reported_by_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("absent.csv");
        let err = format!("{:#}", load_series(&path, 1.0).unwrap_err());
        assert!(err.contains("absent.csv"), "message was: {err}");
    }

    #[test]
    fn angular_to_cyclic_conversion_uses_the_sampling_interval() {
        let f = cycles_per_unit(std::f64::consts::PI, 1.0);
        assert!((f - 0.5).abs() < 1e-15);
        let f = cycles_per_unit(std::f64::consts::PI, 0.5);
        assert!((f - 1.0).abs() < 1e-15);
    }
}
