//! Hierarchical prior for the spectral density model.
//!
//! Two truncated stick-breaking measures drive the mixture: `G` (sticks `v`,
//! atoms `z`) induces the `k` mixture weights through the bin counts
//! `w_j = sum_l p_l 1{(j - 1)/k < z_l <= j/k}`, and `H` (sticks `u`, atoms
//! `x`) induces the `k - r` internal knot differences the same way. Stick
//! masses follow `p_1 = v_1`, `p_l = v_l prod_{j<l} (1 - v_j)`, with the
//! leftover mass `p_0` attached to atom index 0. The mixture size `k` has
//! pmf proportional to `exp(-theta_k k^2)` on its supported range, and the
//! normalization `tau` is inverse-gamma distributed.
//!
//! The Bernstein-polynomial baseline replaces the B-spline densities with
//! fixed Beta(j, k - j + 1) components and ignores the knot measure.

use crate::spectra::Periodogram;
use crate::splines::{BsplineDensityBasis, KnotSequence};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::Distribution;
use statrs::function::gamma::ln_gamma;

/// Mixture family: adaptive-knot B-spline densities or the fixed
/// Bernstein-polynomial (Beta) densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorFamily {
    Bspline,
    Bernstein,
}

/// Base distribution on [0, 1] for stick-breaking atoms, provided as a
/// density and sampler pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseMeasure {
    Uniform,
    Beta { alpha: f64, beta: f64 },
}

impl BaseMeasure {
    /// Log density at `x`; divergent boundary values are treated as
    /// invalid (negative infinity) so Metropolis chains cannot absorb
    /// into a boundary point.
    pub fn log_density(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return f64::NEG_INFINITY;
        }
        match *self {
            BaseMeasure::Uniform => 0.0,
            BaseMeasure::Beta { alpha, beta } => {
                if (x == 0.0 && alpha < 1.0) || (x == 1.0 && beta < 1.0) {
                    return f64::NEG_INFINITY;
                }
                if (x == 0.0 && alpha > 1.0) || (x == 1.0 && beta > 1.0) {
                    return f64::NEG_INFINITY;
                }
                let ln_b = ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta);
                let mut value = -ln_b;
                if alpha != 1.0 {
                    value += (alpha - 1.0) * x.ln();
                }
                if beta != 1.0 {
                    value += (beta - 1.0) * (1.0 - x).ln();
                }
                value
            }
        }
    }

    /// Draws one atom.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            BaseMeasure::Uniform => rng.gen::<f64>(),
            BaseMeasure::Beta { alpha, beta } => rand_distr::Beta::new(alpha, beta)
                .expect("validated Beta parameters")
                .sample(rng),
        }
    }

    fn validate(&self) -> Result<()> {
        if let BaseMeasure::Beta { alpha, beta } = *self {
            if !(alpha > 0.0) || !(beta > 0.0) {
                return Err(Error::InvalidPrior(format!(
                    "Beta base needs positive parameters, got ({alpha}, {beta})"
                )));
            }
        }
        Ok(())
    }
}

/// Truncated stick-breaking measure: `L` sticks plus `L + 1` atoms, the
/// extra atom (index 0) carrying the unallocated remainder mass.
#[derive(Debug, Clone, PartialEq)]
pub struct StickSet {
    sticks: Vec<f64>,
    atoms: Vec<f64>,
    precision: f64,
}

impl StickSet {
    /// Validates component ranges and the sticks/atoms length pairing.
    pub fn new(sticks: Vec<f64>, atoms: Vec<f64>, precision: f64) -> Result<Self> {
        if sticks.is_empty() {
            return Err(Error::InvalidState("need at least one stick".into()));
        }
        if atoms.len() != sticks.len() + 1 {
            return Err(Error::InvalidState(format!(
                "{} sticks need {} atoms, got {}",
                sticks.len(),
                sticks.len() + 1,
                atoms.len()
            )));
        }
        if sticks
            .iter()
            .chain(atoms.iter())
            .any(|t| !(0.0..=1.0).contains(t))
        {
            return Err(Error::InvalidState(
                "sticks and atoms must lie in [0, 1]".into(),
            ));
        }
        if !(precision > 0.0) {
            return Err(Error::InvalidState(format!(
                "precision must be positive, got {precision}"
            )));
        }
        Ok(Self {
            sticks,
            atoms,
            precision,
        })
    }

    /// Draws sticks from Beta(1, `precision`) and atoms from `base`.
    pub fn sample<R: Rng + ?Sized>(
        truncation: usize,
        precision: f64,
        base: &BaseMeasure,
        rng: &mut R,
    ) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::InvalidState("truncation must be at least 1".into()));
        }
        let sticks: Vec<f64> = (0..truncation)
            .map(|_| sample_stick(precision, rng))
            .collect();
        let atoms: Vec<f64> = (0..=truncation).map(|_| base.sample(rng)).collect();
        Self::new(sticks, atoms, precision)
    }

    pub fn sticks(&self) -> &[f64] {
        &self.sticks
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    /// Truncation level `L`.
    pub fn truncation(&self) -> usize {
        self.sticks.len()
    }

    /// Masses `(p_0, p_1, ..., p_L)` with `p_0` the remainder.
    pub fn masses(&self) -> Vec<f64> {
        stick_masses(&self.sticks)
    }
}

/// Draws one stick from Beta(1, `precision`); the unit-precision case is an
/// exact standard uniform.
pub fn sample_stick<R: Rng + ?Sized>(precision: f64, rng: &mut R) -> f64 {
    if precision == 1.0 {
        rng.gen::<f64>()
    } else {
        // Inverse-cdf form of Beta(1, M): 1 - (1 - U)^(1/M).
        1.0 - (1.0 - rng.gen::<f64>()).powf(1.0 / precision)
    }
}

/// Stick-breaking masses `(p_0, p_1, ..., p_L)`: `p_l = v_l prod_{j<l}
/// (1 - v_j)` with the leftover `p_0 = 1 - sum` listed first. Sticks must
/// lie in [0, 1].
pub fn stick_masses(sticks: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(sticks.len() + 1);
    out.push(0.0);
    let mut remaining = 1.0;
    for &v in sticks {
        debug_assert!((0.0..=1.0).contains(&v));
        out.push(remaining * v);
        remaining *= 1.0 - v;
    }
    out[0] = remaining.max(0.0);
    out
}

/// Bin index (1-based) of atom `t` among `bins` right-closed bins, with
/// atoms exactly at 0 assigned to the first bin.
fn bin_of(t: f64, bins: usize) -> usize {
    ((t * bins as f64).ceil() as usize).clamp(1, bins)
}

/// Mixture weights induced by cdf increments of the weight measure over
/// `k` bins: `w_j = sum_l p_l 1{(j - 1)/k < z_l <= j/k}`.
pub fn weights_from_masses(masses: &[f64], atoms: &[f64], k: usize) -> Vec<f64> {
    debug_assert_eq!(masses.len(), atoms.len());
    let mut out = vec![0.0; k];
    for (&p, &z) in masses.iter().zip(atoms) {
        out[bin_of(z, k) - 1] += p;
    }
    out
}

/// Knot differences induced by the knot measure over `k - r` bins,
/// renormalized to sum to exactly 1.
pub fn knot_diffs_from_masses(
    masses: &[f64],
    atoms: &[f64],
    k: usize,
    r: usize,
) -> Result<Vec<f64>> {
    if k <= r {
        return Err(Error::InvalidPrior(format!(
            "mixture size {k} must exceed degree {r} for knot differences"
        )));
    }
    let mut out = weights_from_masses(masses, atoms, k - r);
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        for d in out.iter_mut() {
            *d /= total;
        }
    }
    Ok(out)
}

/// Static configuration of the hierarchical prior.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    /// Spline degree `r`.
    pub degree: usize,
    /// Largest admissible mixture size.
    pub k_max: usize,
    /// Smoothness penalty in `p(k) propto exp(-theta_k k^2)`.
    pub theta_k: f64,
    /// Precision of the weight measure `G`.
    pub m_g: f64,
    /// Precision of the knot measure `H`.
    pub m_h: f64,
    /// Base distribution of weight atoms.
    pub g0: BaseMeasure,
    /// Base distribution of knot atoms.
    pub h0: BaseMeasure,
    /// Inverse-gamma shape for `tau`.
    pub alpha_tau: f64,
    /// Inverse-gamma rate for `tau`.
    pub beta_tau: f64,
    /// Truncation of the weight measure.
    pub l_g: usize,
    /// Truncation of the knot measure.
    pub l_h: usize,
    /// Mixture family.
    pub family: PriorFamily,
}

impl PriorConfig {
    /// Smallest admissible mixture size: a degree-`r` B-spline basis needs
    /// `k >= r + 1`; the Bernstein family is defined down to `k = 1`.
    pub fn k_min(&self) -> usize {
        match self.family {
            PriorFamily::Bspline => self.degree + 1,
            PriorFamily::Bernstein => 1,
        }
    }

    /// Checks all parameter bounds.
    pub fn validate(&self) -> Result<()> {
        if self.k_max < self.k_min() {
            return Err(Error::InvalidPrior(format!(
                "k_max {} below smallest mixture size {}",
                self.k_max,
                self.k_min()
            )));
        }
        if !(self.theta_k > 0.0) {
            return Err(Error::InvalidPrior("theta_k must be positive".into()));
        }
        if !(self.m_g > 0.0) || !(self.m_h > 0.0) {
            return Err(Error::InvalidPrior("precisions must be positive".into()));
        }
        if !(self.alpha_tau > 0.0) || !(self.beta_tau > 0.0) {
            return Err(Error::InvalidPrior(
                "inverse-gamma parameters must be positive".into(),
            ));
        }
        if self.l_g == 0 || self.l_h == 0 {
            return Err(Error::InvalidPrior("truncations must be at least 1".into()));
        }
        self.g0.validate()?;
        self.h0.validate()?;
        Ok(())
    }

    /// Log pmf of the mixture size, normalized over the supported range.
    pub fn k_log_pmf(&self, k: usize) -> f64 {
        if k < self.k_min() || k > self.k_max {
            return f64::NEG_INFINITY;
        }
        let kmin = self.k_min() as f64;
        let log_z: f64 = ((self.k_min()..=self.k_max)
            .map(|m| (-self.theta_k * ((m * m) as f64 - kmin * kmin)).exp())
            .sum::<f64>())
        .ln()
            - self.theta_k * kmin * kmin;
        -self.theta_k * (k * k) as f64 - log_z
    }

    /// Draws a mixture size from the normalized pmf.
    pub fn sample_k<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let kmin = self.k_min();
        let weights: Vec<f64> = (kmin..=self.k_max)
            .map(|m| (-self.theta_k * ((m * m) as f64 - (kmin * kmin) as f64)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        for (offset, w) in weights.iter().enumerate() {
            target -= w;
            if target <= 0.0 {
                return kmin + offset;
            }
        }
        self.k_max
    }
}

/// Full parameter vector of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    /// Weight-measure sticks (length `l_g`).
    pub v: Vec<f64>,
    /// Weight-measure atoms (length `l_g + 1`, remainder atom first).
    pub z: Vec<f64>,
    /// Knot-measure sticks (length `l_h`).
    pub u: Vec<f64>,
    /// Knot-measure atoms (length `l_h + 1`, remainder atom first).
    pub x: Vec<f64>,
    /// Mixture size.
    pub k: usize,
    /// Power normalization.
    pub tau: f64,
}

impl SamplerState {
    /// Checks lengths against the configuration and all component ranges.
    pub fn validate(&self, cfg: &PriorConfig) -> Result<()> {
        if self.v.len() != cfg.l_g || self.z.len() != cfg.l_g + 1 {
            return Err(Error::InvalidState(format!(
                "weight measure needs {} sticks and {} atoms, got {} and {}",
                cfg.l_g,
                cfg.l_g + 1,
                self.v.len(),
                self.z.len()
            )));
        }
        if self.u.len() != cfg.l_h || self.x.len() != cfg.l_h + 1 {
            return Err(Error::InvalidState(format!(
                "knot measure needs {} sticks and {} atoms, got {} and {}",
                cfg.l_h,
                cfg.l_h + 1,
                self.u.len(),
                self.x.len()
            )));
        }
        if self
            .v
            .iter()
            .chain(self.z.iter())
            .chain(self.u.iter())
            .chain(self.x.iter())
            .any(|t| !(0.0..=1.0).contains(t))
        {
            return Err(Error::InvalidState(
                "sticks and atoms must lie in [0, 1]".into(),
            ));
        }
        if self.k < cfg.k_min() || self.k > cfg.k_max {
            return Err(Error::InvalidState(format!(
                "mixture size {} outside [{}, {}]",
                self.k,
                cfg.k_min(),
                cfg.k_max
            )));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidState(format!(
                "tau must be positive and finite, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    /// Induced mixture weights (length `k`).
    pub fn mixture_weights(&self) -> Vec<f64> {
        weights_from_masses(&stick_masses(&self.v), &self.z, self.k)
    }

    /// Induced knot differences (length `k - r`), renormalized.
    pub fn knot_deltas(&self, degree: usize) -> Result<Vec<f64>> {
        knot_diffs_from_masses(&stick_masses(&self.u), &self.x, self.k, degree)
    }
}

/// Draws a complete state from the prior.
pub fn sample_prior<R: Rng + ?Sized>(cfg: &PriorConfig, rng: &mut R) -> Result<SamplerState> {
    cfg.validate()?;
    let g = StickSet::sample(cfg.l_g, cfg.m_g, &cfg.g0, rng)?;
    let h = StickSet::sample(cfg.l_h, cfg.m_h, &cfg.h0, rng)?;
    let k = cfg.sample_k(rng);
    let tau = sample_inv_gamma(cfg.alpha_tau, cfg.beta_tau, rng);
    Ok(SamplerState {
        v: g.sticks().to_vec(),
        z: g.atoms().to_vec(),
        u: h.sticks().to_vec(),
        x: h.atoms().to_vec(),
        k,
        tau,
    })
}

/// Draws from the inverse-gamma distribution with the given shape and rate.
pub fn sample_inv_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let gamma = rand_distr::Gamma::new(shape, 1.0 / rate).expect("validated gamma parameters");
    1.0 / gamma.sample(rng)
}

/// Log density of the inverse-gamma distribution (shape `a`, rate `b`).
pub fn inv_gamma_log_density(tau: f64, a: f64, b: f64) -> f64 {
    if !(tau > 0.0) || !tau.is_finite() {
        return f64::NEG_INFINITY;
    }
    a * b.ln() - ln_gamma(a) - (a + 1.0) * tau.ln() - b / tau
}

/// Log density of one stick under Beta(1, `m`). Exact boundary hits where
/// the density is zero or divergent map to negative infinity so the chain
/// rejects rather than absorbs.
pub fn stick_log_density(v: f64, m: f64) -> f64 {
    if !(0.0..=1.0).contains(&v) {
        return f64::NEG_INFINITY;
    }
    if m == 1.0 {
        return 0.0;
    }
    if v == 1.0 {
        return f64::NEG_INFINITY;
    }
    m.ln() + (m - 1.0) * (1.0 - v).ln()
}

/// Joint log prior of a full state; invalid states give negative infinity.
pub fn log_prior(state: &SamplerState, cfg: &PriorConfig) -> f64 {
    if state.validate(cfg).is_err() {
        return f64::NEG_INFINITY;
    }
    let mut total = 0.0;
    for &v in &state.v {
        total += stick_log_density(v, cfg.m_g);
    }
    for &z in &state.z {
        total += cfg.g0.log_density(z);
    }
    for &u in &state.u {
        total += stick_log_density(u, cfg.m_h);
    }
    for &x in &state.x {
        total += cfg.h0.log_density(x);
    }
    total += cfg.k_log_pmf(state.k);
    total += inv_gamma_log_density(state.tau, cfg.alpha_tau, cfg.beta_tau);
    if total.is_nan() {
        return f64::NEG_INFINITY;
    }
    total
}

/// Spectral density `f(pi omega) = tau * s(omega)` of a B-spline-family
/// state on an `omega` grid in [0, 1].
pub fn state_to_psd(state: &SamplerState, cfg: &PriorConfig, omegas: &[f64]) -> Result<Vec<f64>> {
    state.validate(cfg)?;
    let weights = state.mixture_weights();
    let deltas = state.knot_deltas(cfg.degree)?;
    let basis = BsplineDensityBasis::new(KnotSequence::from_deltas(&deltas, cfg.degree)?)?;
    let effective = basis.effective_weights(&weights)?;
    let mut row = Vec::new();
    let r = cfg.degree;
    omegas
        .iter()
        .map(|&omega| {
            let span = basis.active_densities(omega, &mut row)?;
            let s: f64 = row
                .iter()
                .enumerate()
                .map(|(i, b)| effective[span - r + i] * b)
                .sum();
            Ok(state.tau * s)
        })
        .collect()
}

/// Beta(j, k - j + 1) density at `omega` (`j` numbered from 1), the fixed
/// Bernstein mixture component.
pub fn bernstein_component(omega: f64, j: usize, k: usize) -> f64 {
    debug_assert!(j >= 1 && j <= k);
    if omega == 0.0 {
        return if j == 1 { k as f64 } else { 0.0 };
    }
    if omega == 1.0 {
        return if j == k { k as f64 } else { 0.0 };
    }
    let ln_coeff = ln_gamma(k as f64 + 1.0) - ln_gamma(j as f64) - ln_gamma((k - j + 1) as f64);
    (ln_coeff + (j as f64 - 1.0) * omega.ln() + ((k - j) as f64) * (1.0 - omega).ln()).exp()
}

/// Spectral density of a Bernstein-family state: same weight plumbing, but
/// fixed Beta(j, k - j + 1) components and no knot parameters.
pub fn bernstein_state_to_psd(
    state: &SamplerState,
    cfg: &PriorConfig,
    omegas: &[f64],
) -> Result<Vec<f64>> {
    state.validate(cfg)?;
    let weights = state.mixture_weights();
    let k = state.k;
    Ok(omegas
        .iter()
        .map(|&omega| {
            let s: f64 = weights
                .iter()
                .enumerate()
                .map(|(i, w)| w * bernstein_component(omega, i + 1, k))
                .sum();
            state.tau * s
        })
        .collect())
}

/// Family-dispatching spectral density of a state on an `omega` grid.
pub fn psd_curve(state: &SamplerState, cfg: &PriorConfig, omegas: &[f64]) -> Result<Vec<f64>> {
    match cfg.family {
        PriorFamily::Bspline => state_to_psd(state, cfg, omegas),
        PriorFamily::Bernstein => bernstein_state_to_psd(state, cfg, omegas),
    }
}

/// Spectral density of a state at the Fourier frequencies of `pg`,
/// evaluated at `omega_l = lambda_l / pi = 2 l / n`.
pub fn psd_at_fourier(state: &SamplerState, cfg: &PriorConfig, pg: &Periodogram) -> Result<Vec<f64>> {
    let n = pg.series_len() as f64;
    let omegas: Vec<f64> = (1..=pg.len()).map(|l| 2.0 * l as f64 / n).collect();
    psd_curve(state, cfg, &omegas)
}
