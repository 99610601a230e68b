//! Time-series preprocessing, periodogram, Whittle log-likelihood, and
//! autoregressive ground truth.
//!
//! The periodogram at the positive Fourier frequencies
//! `lambda_l = 2 pi l / n`, `l = 1 ..= floor((n - 1) / 2)`, is
//! `I(lambda) = |sum_t y_t e^(-i t lambda)|^2 / (2 pi n)`. The Whittle
//! log-likelihood of a candidate spectrum `f` is
//! `-sum_l [ln f(lambda_l) + I(lambda_l) / f(lambda_l)]`, dropping constants.
//! A stationary AR(p) model with coefficients `rho` and innovation variance
//! `sigma^2` has spectral density
//! `sigma^2 / (2 pi) / |1 - sum_j rho_j e^(-i j lambda)|^2`.

use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Centering slack for the periodogram precondition, relative to the
/// sample standard deviation.
const CENTERING_TOL: f64 = 1e-8;

/// Observed series plus sampling metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    sampling_interval: f64,
}

impl TimeSeries {
    /// Wraps finite observations; at least 2 are required so differencing
    /// and windowing stay defined (the periodogram itself needs 8).
    pub fn new(values: Vec<f64>, sampling_interval: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 observations, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries("non-finite observation".into()));
        }
        if !(sampling_interval > 0.0) || !sampling_interval.is_finite() {
            return Err(Error::InvalidSeries(format!(
                "sampling interval must be positive, got {sampling_interval}"
            )));
        }
        Ok(Self {
            values,
            sampling_interval,
        })
    }

    /// Observations in time order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the series is empty (cannot happen for validated series).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time step between observations (metadata only).
    pub fn sampling_interval(&self) -> f64 {
        self.sampling_interval
    }

    fn sample_mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    fn sample_sd(&self) -> f64 {
        let mean = self.sample_mean();
        let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / self.len() as f64).sqrt()
    }
}

/// Subtracts the sample mean.
pub fn mean_center(ts: &TimeSeries) -> TimeSeries {
    let mean = ts.sample_mean();
    TimeSeries {
        values: ts.values.iter().map(|v| v - mean).collect(),
        sampling_interval: ts.sampling_interval,
    }
}

/// First differences `y[t + 1] - y[t]`; output is one shorter.
pub fn difference(ts: &TimeSeries) -> Result<TimeSeries> {
    if ts.len() < 3 {
        return Err(Error::InvalidSeries(
            "differencing needs at least 3 observations".into(),
        ));
    }
    Ok(TimeSeries {
        values: ts.values.windows(2).map(|w| w[1] - w[0]).collect(),
        sampling_interval: ts.sampling_interval,
    })
}

/// Applies the symmetric Hann taper `0.5 (1 - cos(2 pi t / (n - 1)))`,
/// zero at both endpoints.
pub fn hann_window(ts: &TimeSeries) -> TimeSeries {
    let n = ts.len();
    let denom = (n - 1) as f64;
    TimeSeries {
        values: ts
            .values
            .iter()
            .enumerate()
            .map(|(t, v)| v * 0.5 * (1.0 - (2.0 * PI * t as f64 / denom).cos()))
            .collect(),
        sampling_interval: ts.sampling_interval,
    }
}

/// Elementwise square root; all inputs must be nonnegative.
pub fn sqrt_transform(ts: &TimeSeries) -> Result<TimeSeries> {
    if let Some(bad) = ts.values.iter().find(|&&v| v < 0.0) {
        return Err(Error::InvalidSeries(format!(
            "square-root transform needs nonnegative values, found {bad}"
        )));
    }
    Ok(TimeSeries {
        values: ts.values.iter().map(|v| v.sqrt()).collect(),
        sampling_interval: ts.sampling_interval,
    })
}

/// Periodogram ordinates at the positive Fourier frequencies of an
/// `n`-point series.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    series_len: usize,
    sampling_interval: f64,
    frequencies: Vec<f64>,
    ordinates: Vec<f64>,
}

impl Periodogram {
    /// Assembles a periodogram from explicit ordinates for an `n`-point
    /// series; frequencies are derived as `2 pi l / n`.
    pub fn from_ordinates(series_len: usize, sampling_interval: f64, ordinates: Vec<f64>) -> Result<Self> {
        if series_len < 8 {
            return Err(Error::InvalidSeries(format!(
                "periodogram needs at least 8 observations, got {series_len}"
            )));
        }
        let n_freq = (series_len - 1) / 2;
        if ordinates.len() != n_freq {
            return Err(Error::InvalidSeries(format!(
                "expected {n_freq} ordinates for series length {series_len}, got {}",
                ordinates.len()
            )));
        }
        if ordinates.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidSeries(
                "ordinates must be finite and nonnegative".into(),
            ));
        }
        let frequencies = (1..=n_freq)
            .map(|l| 2.0 * PI * l as f64 / series_len as f64)
            .collect();
        Ok(Self {
            series_len,
            sampling_interval,
            frequencies,
            ordinates,
        })
    }

    /// Length `n` of the originating series.
    pub fn series_len(&self) -> usize {
        self.series_len
    }

    /// Sampling interval carried over from the series.
    pub fn sampling_interval(&self) -> f64 {
        self.sampling_interval
    }

    /// Angular frequencies `2 pi l / n`, strictly inside (0, pi).
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Ordinates `I(lambda_l)`.
    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    /// Number of Fourier frequencies `floor((n - 1) / 2)`.
    pub fn len(&self) -> usize {
        self.ordinates.len()
    }

    /// True when no positive Fourier frequency exists (never for n >= 8).
    pub fn is_empty(&self) -> bool {
        self.ordinates.is_empty()
    }
}

/// FFT periodogram of a mean-centered series.
///
/// The input must satisfy `|mean| <= 1e-8 sd` (constant series pass with
/// both sides zero); apply [`mean_center`] first otherwise.
pub fn periodogram(ts: &TimeSeries) -> Result<Periodogram> {
    let n = ts.len();
    if n < 8 {
        return Err(Error::InvalidSeries(format!(
            "periodogram needs at least 8 observations, got {n}"
        )));
    }
    if ts.sample_mean().abs() > CENTERING_TOL * ts.sample_sd() {
        return Err(Error::InvalidSeries(
            "series is not mean-centered; apply mean_center first".into(),
        ));
    }
    let mut buf: Vec<Complex<f64>> = ts
        .values
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (2.0 * PI * n as f64);
    let ordinates = buf[1..=(n - 1) / 2]
        .iter()
        .map(|x| x.norm_sqr() * scale)
        .collect();
    Periodogram::from_ordinates(n, ts.sampling_interval, ordinates)
}

/// Whittle log-likelihood `-sum_l [ln f_l + I_l / f_l]` of a candidate
/// spectrum evaluated at the Fourier frequencies.
///
/// Any nonpositive or non-finite `f_l` is an invalid spectrum; callers
/// running MCMC treat that as log-likelihood negative infinity.
pub fn whittle_loglik(pg: &Periodogram, psd: &[f64]) -> Result<f64> {
    if psd.len() != pg.len() {
        return Err(Error::InvalidSpectrum(format!(
            "spectrum has {} values, periodogram has {}",
            psd.len(),
            pg.len()
        )));
    }
    let mut total = 0.0;
    for (&f, &i) in psd.iter().zip(pg.ordinates()) {
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::InvalidSpectrum(format!(
                "spectrum value {f} is not strictly positive and finite"
            )));
        }
        total -= f.ln() + i / f;
    }
    Ok(total)
}

/// Stationary autoregressive model of order `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    coefficients: Vec<f64>,
    innovation_variance: f64,
}

impl ArModel {
    /// Validates stationarity by running the coefficient step-down: the
    /// model is stationary exactly when every reflection coefficient it
    /// produces lies strictly inside (-1, 1).
    pub fn new(coefficients: Vec<f64>, innovation_variance: f64) -> Result<Self> {
        if !(innovation_variance > 0.0) || !innovation_variance.is_finite() {
            return Err(Error::NonStationaryAr(format!(
                "innovation variance must be positive, got {innovation_variance}"
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonStationaryAr("non-finite coefficient".into()));
        }
        let mut a = coefficients.clone();
        for m in (1..=a.len()).rev() {
            let kappa = a[m - 1];
            if kappa.abs() >= 1.0 {
                return Err(Error::NonStationaryAr(format!(
                    "reflection coefficient at lag {m} is {kappa}"
                )));
            }
            let denom = 1.0 - kappa * kappa;
            let prev: Vec<f64> = (0..m - 1)
                .map(|i| (a[i] + kappa * a[m - 2 - i]) / denom)
                .collect();
            a[..m - 1].copy_from_slice(&prev);
        }
        Ok(Self {
            coefficients,
            innovation_variance,
        })
    }

    /// AR coefficients `rho_1 ..= rho_p`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Innovation variance `sigma^2`.
    pub fn innovation_variance(&self) -> f64 {
        self.innovation_variance
    }

    /// Model order `p`.
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }
}

/// Theoretical AR spectral density at angular frequency `lambda`.
pub fn ar_psd(model: &ArModel, lambda: f64) -> f64 {
    let mut re = 1.0;
    let mut im = 0.0;
    for (j, &rho) in model.coefficients.iter().enumerate() {
        let angle = (j + 1) as f64 * lambda;
        re -= rho * angle.cos();
        im += rho * angle.sin();
    }
    model.innovation_variance / (2.0 * PI) / (re * re + im * im)
}

/// Simulates `n` observations of the AR process with unit sampling
/// interval, discarding a warm-up of `max(10 p, 1000)` draws so the
/// retained stretch is effectively stationary. Deterministic given the
/// generator state.
pub fn simulate_ar<R: Rng + ?Sized>(model: &ArModel, n: usize, rng: &mut R) -> Result<TimeSeries> {
    if n < 8 {
        return Err(Error::InvalidSeries(format!(
            "need at least 8 observations, got {n}"
        )));
    }
    let p = model.order();
    let warm_up = (10 * p).max(1000);
    let sd = model.innovation_variance.sqrt();
    let mut history = vec![0.0f64; p];
    let mut out = Vec::with_capacity(n);
    for step in 0..warm_up + n {
        let eps: f64 = StandardNormal.sample(rng);
        let mut value = sd * eps;
        for (j, &rho) in model.coefficients.iter().enumerate() {
            value += rho * history[j];
        }
        if p > 0 {
            history.rotate_right(1);
            history[0] = value;
        }
        if step >= warm_up {
            out.push(value);
        }
    }
    TimeSeries::new(out, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::new(values.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn mean_center_shifts_to_zero_mean() {
        let out = mean_center(&series(&[1.0, 2.0, 3.0]));
        assert_eq!(out.values(), &[-1.0, 0.0, 1.0]);
        let constant = mean_center(&series(&[5.0, 5.0, 5.0]));
        assert_eq!(constant.values(), &[0.0, 0.0, 0.0]);
        let again = mean_center(&out);
        for (a, b) in again.values().iter().zip(out.values()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn difference_takes_adjacent_gaps() {
        let out = difference(&series(&[1.0, 3.0, 6.0])).unwrap();
        assert_eq!(out.values(), &[2.0, 3.0]);
        let constant = difference(&series(&[4.0, 4.0, 4.0, 4.0])).unwrap();
        assert_eq!(constant.values(), &[0.0, 0.0, 0.0]);
        let ramp = difference(&series(&[0.0, 1.5, 3.0, 4.5])).unwrap();
        for v in ramp.values() {
            assert_relative_eq!(*v, 1.5, epsilon = 1e-12);
        }
        assert!(difference(&series(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn hann_window_weights_for_five_points() {
        let out = hann_window(&series(&[1.0; 5]));
        let expect = [0.0, 0.5, 1.0, 0.5, 0.0];
        for (v, e) in out.values().iter().zip(expect.iter()) {
            assert_relative_eq!(v, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn hann_window_zeroes_endpoints_and_keeps_odd_midpoint() {
        let data: Vec<f64> = (0..9).map(|t| (t as f64).sin() + 2.0).collect();
        let out = hann_window(&series(&data));
        assert_eq!(out.values()[0], 0.0);
        assert_eq!(out.values()[8], 0.0);
        assert_relative_eq!(out.values()[4], data[4], epsilon = 1e-12);
    }

    #[test]
    fn sqrt_transform_takes_roots_and_rejects_negatives() {
        let out = sqrt_transform(&series(&[0.0, 1.0, 4.0])).unwrap();
        assert_eq!(out.values(), &[0.0, 1.0, 2.0]);
        assert!(sqrt_transform(&series(&[1.0, -0.5, 4.0])).is_err());
    }

    #[test]
    fn periodogram_of_zero_series_is_zero() {
        let pg = periodogram(&series(&[0.0; 16])).unwrap();
        assert_eq!(pg.len(), 7);
        assert!(pg.ordinates().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn periodogram_of_unit_cosine_concentrates_at_first_frequency() {
        let n = 64usize;
        let data: Vec<f64> = (0..n)
            .map(|t| (2.0 * PI * t as f64 / n as f64).cos())
            .collect();
        let pg = periodogram(&series(&data)).unwrap();
        assert_relative_eq!(pg.ordinates()[0], n as f64 / (8.0 * PI), epsilon = 1e-10);
        for &v in &pg.ordinates()[1..] {
            assert!(v < 1e-12, "sidelobe {v}");
        }
    }

    #[test]
    fn periodogram_rejects_uncentered_input() {
        let data: Vec<f64> = (0..16).map(|t| t as f64 + 10.0).collect();
        assert!(matches!(
            periodogram(&series(&data)),
            Err(Error::InvalidSeries(_))
        ));
    }

    #[test]
    fn whittle_at_the_periodogram_itself() {
        let pg = Periodogram::from_ordinates(9, 1.0, vec![0.5, 1.5, 2.5, 0.25]).unwrap();
        let expect: f64 = pg.ordinates().iter().map(|i| -(i.ln() + 1.0)).sum();
        let got = whittle_loglik(&pg, pg.ordinates()).unwrap();
        assert_relative_eq!(got, expect, epsilon = 1e-12);
    }

    #[test]
    fn whittle_at_unit_spectrum_is_negative_total_power() {
        let pg = Periodogram::from_ordinates(9, 1.0, vec![0.5, 1.5, 2.5, 0.25]).unwrap();
        let got = whittle_loglik(&pg, &[1.0; 4]).unwrap();
        assert_relative_eq!(got, -4.75, epsilon = 1e-12);
    }

    #[test]
    fn whittle_rejects_nonpositive_spectrum() {
        let pg = Periodogram::from_ordinates(9, 1.0, vec![0.5, 1.5, 2.5, 0.25]).unwrap();
        assert!(matches!(
            whittle_loglik(&pg, &[1.0, 0.0, 1.0, 1.0]),
            Err(Error::InvalidSpectrum(_))
        ));
        assert!(whittle_loglik(&pg, &[1.0; 3]).is_err());
    }

    #[test]
    fn white_noise_psd_is_flat() {
        let model = ArModel::new(vec![], 1.0).unwrap();
        for &lambda in &[0.0, 1.0, PI] {
            assert_relative_eq!(ar_psd(&model, lambda), 1.0 / (2.0 * PI), epsilon = 1e-15);
        }
    }

    #[test]
    fn ar1_psd_at_zero_frequency() {
        let model = ArModel::new(vec![0.9], 1.0).unwrap();
        assert_relative_eq!(ar_psd(&model, 0.0), 1.0 / (2.0 * PI * 0.01), epsilon = 1e-9);
    }

    #[test]
    fn stationarity_check_accepts_and_rejects() {
        assert!(ArModel::new(vec![0.9], 1.0).is_ok());
        assert!(ArModel::new(vec![1.0], 1.0).is_err());
        assert!(ArModel::new(vec![-1.01], 1.0).is_err());
        // The benchmark AR(4) coefficients are stationary.
        assert!(ArModel::new(vec![0.9, -0.9, 0.9, -0.9], 1.0).is_ok());
        // Sum of coefficients 1 puts a root on the unit circle.
        assert!(ArModel::new(vec![0.5, 0.5], 1.0).is_err());
    }

    #[test]
    fn simulate_ar_is_deterministic_given_seed() {
        let model = ArModel::new(vec![0.9, -0.9, 0.9, -0.9], 1.0).unwrap();
        let mut rng_a = ChaCha12Rng::seed_from_u64(9);
        let mut rng_b = ChaCha12Rng::seed_from_u64(9);
        let a = simulate_ar(&model, 64, &mut rng_a).unwrap();
        let b = simulate_ar(&model, 64, &mut rng_b).unwrap();
        assert_eq!(a.values(), b.values());
        let mut rng_c = ChaCha12Rng::seed_from_u64(10);
        let c = simulate_ar(&model, 64, &mut rng_c).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn simulated_white_noise_has_unit_variance() {
        let model = ArModel::new(vec![], 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let ts = simulate_ar(&model, 20_000, &mut rng).unwrap();
        let mean = ts.values().iter().sum::<f64>() / ts.len() as f64;
        let var = ts.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / ts.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }
}
