//! Metropolis-within-Gibbs sampler over the Whittle pseudo-posterior, with
//! optional parallel tempering over a geometric inverse-temperature ladder.
//!
//! One sweep updates, in order, every weight stick, weight atom, knot stick,
//! and knot atom by one-at-a-time Metropolis moves with circular-uniform
//! proposals, then the mixture size by a mixed walk/heavy-tailed proposal,
//! then the power scale by its conjugate inverse-gamma draw. Tempering
//! flattens the likelihood only; the prior stays cold, so every tempered
//! target is proper and the unit-temperature chain is unaffected.

use crate::prior::{
    inv_gamma_log_density, log_prior, sample_inv_gamma, sample_prior, stick_log_density,
    PriorConfig, PriorFamily, SamplerState,
};
use crate::spectra::Periodogram;
use crate::splines::{BsplineDensityBasis, KnotSequence};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;

/// Proposal width rule for the circular coordinate updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsSchedule {
    /// Width `l / (l + 2 sqrt(n))` at 1-based position `l` within each block,
    /// where `n` is the underlying series length.
    DataDriven,
    /// One fixed width for every coordinate; 0 freezes the circular blocks.
    Fixed(f64),
}

/// Which conditional blocks a sweep updates. Field names follow the state
/// components; all blocks are on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockToggles {
    /// Weight-measure sticks.
    pub v: bool,
    /// Weight-measure atoms.
    pub z: bool,
    /// Knot-measure sticks.
    pub u: bool,
    /// Knot-measure atoms.
    pub x: bool,
    /// Mixture size.
    pub k: bool,
    /// Power scale.
    pub tau: bool,
}

impl Default for BlockToggles {
    fn default() -> Self {
        Self {
            v: true,
            z: true,
            u: true,
            x: true,
            k: true,
            tau: true,
        }
    }
}

/// Run-length, proposal, and tempering parameters of one MCMC run.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    /// Total sweeps.
    pub iterations: u64,
    /// Sweeps discarded before storage begins.
    pub burn_in: u64,
    /// Keep every `thin`-th post-burn-in sweep.
    pub thin: u64,
    /// Master RNG seed.
    pub seed: u64,
    /// Base RNG stream; chain `c` uses stream `rng_stream + c`.
    pub rng_stream: u64,
    /// Circular proposal widths.
    pub epsilon: EpsSchedule,
    /// Probability of the `{-1, 0, +1}` walk branch in the size proposal.
    pub k_walk_weight: f64,
    /// Scale of the rounded-Cauchy bold branch in the size proposal.
    pub k_cauchy_scale: f64,
    /// Number of tempered chains; 1 runs a single cold chain.
    pub chains: usize,
    /// Smallest inverse temperature of the ladder, in (0, 1].
    pub t_min: f64,
    /// Sweeps between swap proposals; 0 disables swaps.
    pub swap_interval: u64,
    /// Blocks updated per sweep.
    pub blocks: BlockToggles,
    /// Store snapshots for the hotter chains too, not only the cold one.
    pub store_all_chains: bool,
    /// Emit a progress line every this many sweeps; 0 silences them.
    pub progress_every: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iterations: 40_000,
            burn_in: 20_000,
            thin: 10,
            seed: 1,
            rng_stream: 0,
            epsilon: EpsSchedule::DataDriven,
            k_walk_weight: 0.75,
            k_cauchy_scale: 3.0,
            chains: 1,
            t_min: 0.005,
            swap_interval: 10,
            blocks: BlockToggles::default(),
            store_all_chains: false,
            progress_every: 0,
        }
    }
}

impl McmcConfig {
    /// Checks all parameter bounds.
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidMcmc("iterations must be at least 1".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidMcmc(format!(
                "burn-in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidMcmc("thinning factor must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::InvalidMcmc("chain count must be at least 1".into()));
        }
        if !(self.t_min > 0.0 && self.t_min <= 1.0) {
            return Err(Error::InvalidMcmc(format!(
                "smallest inverse temperature {} outside (0, 1]",
                self.t_min
            )));
        }
        if !(0.0..=1.0).contains(&self.k_walk_weight) {
            return Err(Error::InvalidMcmc(format!(
                "size-walk weight {} outside [0, 1]",
                self.k_walk_weight
            )));
        }
        if !(self.k_cauchy_scale > 0.0) {
            return Err(Error::InvalidMcmc(
                "size-proposal Cauchy scale must be positive".into(),
            ));
        }
        if let EpsSchedule::Fixed(e) = self.epsilon {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidMcmc(format!(
                    "fixed proposal width {e} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Number of stored snapshots per chain.
    pub fn snapshot_count(&self) -> u64 {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Geometric inverse-temperature ladder `t_min^((c-1)/(C-1))` with exact
    /// endpoints 1 and `t_min`.
    pub fn ladder(&self) -> Vec<f64> {
        if self.chains == 1 {
            return vec![1.0];
        }
        (0..self.chains)
            .map(|c| {
                if c == 0 {
                    1.0
                } else if c == self.chains - 1 {
                    self.t_min
                } else {
                    self.t_min
                        .powf(c as f64 / (self.chains - 1) as f64)
                }
            })
            .collect()
    }
}

/// Proposed/accepted tally of one update block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlockCounts {
    /// Moves proposed.
    pub proposed: u64,
    /// Moves accepted.
    pub accepted: u64,
}

impl BlockCounts {
    /// Acceptance rate; 0 when nothing was proposed.
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Per-block acceptance tallies of one chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AcceptanceCounts {
    /// Weight-stick moves.
    pub v: BlockCounts,
    /// Weight-atom moves.
    pub z: BlockCounts,
    /// Knot-stick moves.
    pub u: BlockCounts,
    /// Knot-atom moves.
    pub x: BlockCounts,
    /// Mixture-size moves.
    pub k: BlockCounts,
}

/// Thinned post-burn-in record of one chain.
#[derive(Debug, Clone, Default)]
pub struct ChainTrace {
    /// Global sweep index of each snapshot.
    pub iterations: Vec<u64>,
    /// Stored states.
    pub states: Vec<SamplerState>,
    /// Whittle log-likelihood of each stored state.
    pub logliks: Vec<f64>,
    /// Spectral density of each stored state at the Fourier frequencies.
    pub psd: Vec<Vec<f64>>,
    /// Per-block acceptance tallies over the whole run.
    pub accepts: AcceptanceCounts,
}

impl ChainTrace {
    fn with_capacity(cap: usize) -> Self {
        Self {
            iterations: Vec::with_capacity(cap),
            states: Vec::with_capacity(cap),
            logliks: Vec::with_capacity(cap),
            psd: Vec::with_capacity(cap),
            accepts: AcceptanceCounts::default(),
        }
    }

    fn push_snapshot(&mut self, iteration: u64, cached: &Cached) {
        self.iterations.push(iteration);
        self.states.push(cached.state.clone());
        self.logliks.push(cached.loglik);
        self.psd
            .push(cached.s.iter().map(|&x| cached.state.tau * x).collect());
    }

    /// Number of stored snapshots.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Whether no snapshot was stored.
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Result of a tempered run: the cold trace plus swap diagnostics.
#[derive(Debug, Clone)]
pub struct TemperedRun {
    /// Trace of the unit-temperature chain.
    pub cold: ChainTrace,
    /// Traces of chains 2..C, stored only when requested.
    pub hot: Vec<ChainTrace>,
    /// Inverse temperatures, coldest first.
    pub ladder: Vec<f64>,
    /// Swap proposals per adjacent pair (c, c+1).
    pub swap_attempts: Vec<u64>,
    /// Accepted swaps per adjacent pair.
    pub swap_accepts: Vec<u64>,
}

impl TemperedRun {
    /// Swap acceptance rate per adjacent pair; 0 where nothing was proposed.
    pub fn swap_rates(&self) -> Vec<f64> {
        self.swap_attempts
            .iter()
            .zip(self.swap_accepts.iter())
            .map(|(&a, &s)| if a == 0 { 0.0 } else { s as f64 / a as f64 })
            .collect()
    }
}

/// Circular proposal width `l / (l + 2 sqrt(n))` for the coordinate at
/// 1-based position `l` within its block, `n` the series length.
pub fn proposal_width(position: usize, series_len: usize) -> f64 {
    let l = position as f64;
    l / (l + 2.0 * (series_len as f64).sqrt())
}

/// Shifts a point at most one period outside [0, 1] back into the interval.
fn wrap_unit(t: f64) -> f64 {
    if t > 1.0 {
        t - 1.0
    } else if t < 0.0 {
        t + 1.0
    } else {
        t
    }
}

/// Uniform draw on `[x - eps, x + eps]` wrapped around the circular unit
/// interval; symmetric, so no Hastings correction is needed. A width of 0
/// returns `x` unchanged.
pub fn propose_circular<R: Rng + ?Sized>(x: f64, eps: f64, rng: &mut R) -> f64 {
    if eps <= 0.0 {
        return x;
    }
    wrap_unit(x + rng.gen_range(-eps..=eps))
}

/// Mixture-size proposal: with probability `k_walk_weight` a uniform step in
/// `{-1, 0, +1}`, otherwise a rounded Cauchy step (exact zeros redrawn so
/// the bold branch always moves). Returns the unclamped candidate; callers
/// reject candidates outside the admissible range as self-transitions.
pub fn propose_k<R: Rng + ?Sized>(k: usize, cfg: &McmcConfig, rng: &mut R) -> i64 {
    let step = if rng.gen::<f64>() < cfg.k_walk_weight {
        rng.gen_range(-1i64..=1)
    } else {
        let cauchy =
            rand_distr::Cauchy::new(0.0, cfg.k_cauchy_scale).expect("validated Cauchy scale");
        loop {
            let s = cauchy.sample(rng).round();
            if s != 0.0 {
                // f64-to-i64 casts saturate, so arbitrarily wild tail draws
                // stay representable and are rejected by the range check.
                break s as i64;
            }
        }
    };
    k as i64 + step
}

/// Conjugate update of the power scale at unit temperature: draws
/// `tau ~ IG(alpha + N, beta + sum I_l / s(omega_l))` with `N` the number of
/// Fourier ordinates.
pub fn gibbs_tau<R: Rng + ?Sized>(
    pg: &Periodogram,
    state: &SamplerState,
    cfg: &PriorConfig,
    rng: &mut R,
) -> Result<f64> {
    let psd = crate::prior::psd_at_fourier(state, cfg, pg)?;
    let mut ratio_sum = 0.0;
    for (f, i) in psd.iter().zip(pg.ordinates()) {
        let s = f / state.tau;
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidState(
                "mixture density vanishes at a Fourier frequency".into(),
            ));
        }
        ratio_sum += i / s;
    }
    let shape = cfg.alpha_tau + pg.len() as f64;
    let rate = cfg.beta_tau + ratio_sum;
    Ok(sample_inv_gamma(shape, rate, rng))
}

/// Per-frequency component evaluations reused across coordinate updates.
/// Rebuilt only when the knots or the mixture size change.
enum BasisEval {
    /// Active-window density values (`nfreq` rows of `degree + 1`) plus the
    /// span index of each frequency, and the basis for weight redistribution.
    Bspline {
        basis: BsplineDensityBasis,
        rows: Vec<f64>,
        spans: Vec<usize>,
    },
    /// Full component table (`nfreq` rows of `k`).
    Bernstein { rows: Vec<f64>, k: usize },
}

/// One chain's state with every derived quantity the sweep needs. `a` and
/// `b` are the log-density sum and the periodogram ratio sum over Fourier
/// frequencies, so the likelihood is `-(N ln tau + a + b / tau)` and the
/// conjugate power update needs no extra passes.
struct Cached {
    state: SamplerState,
    basis: BasisEval,
    weights: Vec<f64>,
    s: Vec<f64>,
    a: f64,
    b: f64,
    loglik: f64,
    logprior: f64,
}

/// Immutable per-run tables: Fourier grid, proposal widths, prior and
/// periodogram handles.
struct Engine<'a> {
    pg: &'a Periodogram,
    prior: &'a PriorConfig,
    mcmc: &'a McmcConfig,
    omegas: Vec<f64>,
    ln_omegas: Vec<f64>,
    ln_1m_omegas: Vec<f64>,
    eps_v: Vec<f64>,
    eps_z: Vec<f64>,
    eps_u: Vec<f64>,
    eps_x: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(pg: &'a Periodogram, prior: &'a PriorConfig, mcmc: &'a McmcConfig) -> Result<Self> {
        prior.validate()?;
        mcmc.validate()?;
        let n = pg.series_len();
        let omegas: Vec<f64> = (1..=pg.len()).map(|l| 2.0 * l as f64 / n as f64).collect();
        // Fourier points satisfy omega = 2l/n <= (n-1)/n < 1, so the logs
        // below are finite.
        let ln_omegas: Vec<f64> = omegas.iter().map(|w| w.ln()).collect();
        let ln_1m_omegas: Vec<f64> = omegas.iter().map(|w| (1.0 - w).ln()).collect();
        let widths = |len: usize| -> Vec<f64> {
            match mcmc.epsilon {
                EpsSchedule::DataDriven => (1..=len).map(|l| proposal_width(l, n)).collect(),
                EpsSchedule::Fixed(e) => vec![e; len],
            }
        };
        Ok(Self {
            pg,
            prior,
            mcmc,
            omegas,
            ln_omegas,
            ln_1m_omegas,
            eps_v: widths(prior.l_g),
            eps_z: widths(prior.l_g + 1),
            eps_u: widths(prior.l_h),
            eps_x: widths(prior.l_h + 1),
        })
    }

    fn nfreq(&self) -> usize {
        self.omegas.len()
    }

    fn basis_eval(&self, state: &SamplerState) -> Result<BasisEval> {
        match self.prior.family {
            PriorFamily::Bspline => {
                let deltas = state.knot_deltas(self.prior.degree)?;
                let seq = KnotSequence::from_deltas(&deltas, self.prior.degree)?;
                let basis = BsplineDensityBasis::new(seq)?;
                let width = self.prior.degree + 1;
                let mut rows = Vec::with_capacity(self.nfreq() * width);
                let mut spans = Vec::with_capacity(self.nfreq());
                let mut row = Vec::new();
                for &omega in &self.omegas {
                    spans.push(basis.active_densities(omega, &mut row)?);
                    rows.extend_from_slice(&row);
                }
                Ok(BasisEval::Bspline { basis, rows, spans })
            }
            PriorFamily::Bernstein => {
                let k = state.k;
                // Beta(j, k - j + 1) log normalizing constants, computed once
                // per basis size instead of once per table entry.
                let ln_k1 = ln_gamma((k + 1) as f64);
                let ln_coeff: Vec<f64> = (1..=k)
                    .map(|j| ln_k1 - ln_gamma(j as f64) - ln_gamma((k - j + 1) as f64))
                    .collect();
                let mut rows = Vec::with_capacity(self.nfreq() * k);
                for l in 0..self.nfreq() {
                    for (j, lc) in ln_coeff.iter().enumerate() {
                        rows.push(
                            (lc + j as f64 * self.ln_omegas[l]
                                + (k - 1 - j) as f64 * self.ln_1m_omegas[l])
                                .exp(),
                        );
                    }
                }
                Ok(BasisEval::Bernstein { rows, k })
            }
        }
    }

    /// Mixture weights after redistributing mass away from degenerate
    /// components (a no-op for the Bernstein family).
    fn weights_eval(&self, state: &SamplerState, basis: &BasisEval) -> Result<Vec<f64>> {
        let raw = state.mixture_weights();
        match basis {
            BasisEval::Bspline { basis, .. } => basis.effective_weights(&raw),
            BasisEval::Bernstein { .. } => Ok(raw),
        }
    }

    /// Mixture density at every Fourier frequency.
    fn s_eval(&self, basis: &BasisEval, weights: &[f64]) -> Vec<f64> {
        match basis {
            BasisEval::Bspline { rows, spans, .. } => {
                let width = self.prior.degree + 1;
                spans
                    .iter()
                    .enumerate()
                    .map(|(l, &span)| {
                        let first = span + 1 - width;
                        rows[l * width..(l + 1) * width]
                            .iter()
                            .enumerate()
                            .map(|(i, b)| weights[first + i] * b)
                            .sum()
                    })
                    .collect()
            }
            BasisEval::Bernstein { rows, k } => (0..self.nfreq())
                .map(|l| {
                    rows[l * k..(l + 1) * k]
                        .iter()
                        .zip(weights)
                        .map(|(b, w)| w * b)
                        .sum()
                })
                .collect(),
        }
    }

    /// Log-density and periodogram-ratio sums; a vanishing mixture density
    /// marks the state unusable via infinite sentinels.
    fn moments(&self, s: &[f64]) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for (sl, il) in s.iter().zip(self.pg.ordinates()) {
            if !(*sl > 0.0) || !sl.is_finite() {
                return (f64::NEG_INFINITY, f64::INFINITY);
            }
            a += sl.ln();
            b += il / sl;
        }
        (a, b)
    }

    fn loglik(&self, a: f64, b: f64, tau: f64) -> f64 {
        if !a.is_finite() || !b.is_finite() || !(tau > 0.0) || !tau.is_finite() {
            return f64::NEG_INFINITY;
        }
        -(self.nfreq() as f64 * tau.ln() + a + b / tau)
    }

    fn build_cache(&self, state: SamplerState) -> Result<Cached> {
        state.validate(self.prior)?;
        let basis = self.basis_eval(&state)?;
        let weights = self.weights_eval(&state, &basis)?;
        let s = self.s_eval(&basis, &weights);
        let (a, b) = self.moments(&s);
        let loglik = self.loglik(a, b, state.tau);
        let logprior = log_prior(&state, self.prior);
        Ok(Cached {
            state,
            basis,
            weights,
            s,
            a,
            b,
            loglik,
            logprior,
        })
    }

    /// Metropolis decision on `beta * delta_loglik + delta_logprior`. The
    /// uniform draw is skipped for sure accepts, so zero-width proposals
    /// consume no randomness.
    fn accept<R: Rng + ?Sized>(
        &self,
        beta: f64,
        ll_cand: f64,
        ll_cur: f64,
        dlp: f64,
        rng: &mut R,
    ) -> bool {
        // The equality guard keeps moves between two zero-density states
        // (both log-likelihoods -inf) a plain prior-ratio decision instead
        // of a NaN.
        let lik = if beta == 0.0 || ll_cand == ll_cur {
            0.0
        } else {
            beta * (ll_cand - ll_cur)
        };
        let log_ratio = lik + dlp;
        debug_assert!(!log_ratio.is_nan());
        if log_ratio >= 0.0 {
            return true;
        }
        if log_ratio == f64::NEG_INFINITY || log_ratio.is_nan() {
            return false;
        }
        rng.gen::<f64>().ln() < log_ratio
    }

    /// One circular-coordinate update; `coord` reads or writes the moved
    /// entry, `prior_term` is its marginal log prior, and `rebuild` says
    /// whether the move invalidates the knot-dependent basis tables.
    #[allow(clippy::too_many_arguments)]
    fn circular_move<R: Rng + ?Sized>(
        &self,
        cached: &mut Cached,
        which: CoordBlock,
        index: usize,
        eps: f64,
        beta: f64,
        rng: &mut R,
        counts: &mut BlockCounts,
    ) -> Result<()> {
        counts.proposed += 1;
        let old = coord(&cached.state, which, index);
        let cand = propose_circular(old, eps, rng);
        let dlp = self.coord_prior(which, cand) - self.coord_prior(which, old);
        *coord_mut(&mut cached.state, which, index) = cand;
        let rebuild = matches!(which, CoordBlock::U | CoordBlock::X);
        let basis = if rebuild {
            Some(self.basis_eval(&cached.state)?)
        } else {
            None
        };
        let basis_ref = basis.as_ref().unwrap_or(&cached.basis);
        let weights = self.weights_eval(&cached.state, basis_ref)?;
        let s = self.s_eval(basis_ref, &weights);
        let (a, b) = self.moments(&s);
        let ll = self.loglik(a, b, cached.state.tau);
        if self.accept(beta, ll, cached.loglik, dlp, rng) {
            if let Some(basis) = basis {
                cached.basis = basis;
            }
            cached.weights = weights;
            cached.s = s;
            cached.a = a;
            cached.b = b;
            cached.loglik = ll;
            cached.logprior += dlp;
            counts.accepted += 1;
        } else {
            *coord_mut(&mut cached.state, which, index) = old;
        }
        Ok(())
    }

    fn coord_prior(&self, which: CoordBlock, value: f64) -> f64 {
        match which {
            CoordBlock::V => stick_log_density(value, self.prior.m_g),
            CoordBlock::Z => self.prior.g0.log_density(value),
            CoordBlock::U => stick_log_density(value, self.prior.m_h),
            CoordBlock::X => self.prior.h0.log_density(value),
        }
    }

    /// One full sweep at inverse temperature `beta`. Knot blocks are skipped
    /// for the Bernstein family, whose components carry no knots.
    fn sweep<R: Rng + ?Sized>(
        &self,
        cached: &mut Cached,
        beta: f64,
        rng: &mut R,
        counts: &mut AcceptanceCounts,
    ) -> Result<()> {
        let blocks = self.mcmc.blocks;
        if blocks.v {
            for i in 0..self.prior.l_g {
                self.circular_move(cached, CoordBlock::V, i, self.eps_v[i], beta, rng, &mut counts.v)?;
            }
        }
        if blocks.z {
            for i in 0..=self.prior.l_g {
                self.circular_move(cached, CoordBlock::Z, i, self.eps_z[i], beta, rng, &mut counts.z)?;
            }
        }
        let has_knots = self.prior.family == PriorFamily::Bspline;
        if blocks.u && has_knots {
            for i in 0..self.prior.l_h {
                self.circular_move(cached, CoordBlock::U, i, self.eps_u[i], beta, rng, &mut counts.u)?;
            }
        }
        if blocks.x && has_knots {
            for i in 0..=self.prior.l_h {
                self.circular_move(cached, CoordBlock::X, i, self.eps_x[i], beta, rng, &mut counts.x)?;
            }
        }
        if blocks.k {
            self.size_move(cached, beta, rng, &mut counts.k)?;
        }
        if blocks.tau {
            self.power_move(cached, beta, rng);
        }
        Ok(())
    }

    fn size_move<R: Rng + ?Sized>(
        &self,
        cached: &mut Cached,
        beta: f64,
        rng: &mut R,
        counts: &mut BlockCounts,
    ) -> Result<()> {
        counts.proposed += 1;
        let old = cached.state.k;
        let cand = propose_k(old, self.mcmc, rng);
        if cand == old as i64 {
            // Zero-step walk draws propose the current size; the ratio is 1.
            counts.accepted += 1;
            return Ok(());
        }
        if cand < self.prior.k_min() as i64 || cand > self.prior.k_max as i64 {
            // Out-of-range candidates are clamped to the boundary and count
            // as rejected self-transitions.
            return Ok(());
        }
        let cand = cand as usize;
        let dlp = self.prior.k_log_pmf(cand) - self.prior.k_log_pmf(old);
        cached.state.k = cand;
        let basis = self.basis_eval(&cached.state)?;
        let weights = self.weights_eval(&cached.state, &basis)?;
        let s = self.s_eval(&basis, &weights);
        let (a, b) = self.moments(&s);
        let ll = self.loglik(a, b, cached.state.tau);
        if self.accept(beta, ll, cached.loglik, dlp, rng) {
            cached.basis = basis;
            cached.weights = weights;
            cached.s = s;
            cached.a = a;
            cached.b = b;
            cached.loglik = ll;
            cached.logprior += dlp;
            counts.accepted += 1;
        } else {
            cached.state.k = old;
        }
        Ok(())
    }

    /// Conjugate power draw under the tempered likelihood:
    /// `tau ~ IG(alpha + beta N, beta_tau + beta * sum I/s)`. At `beta = 0`
    /// this is exactly the prior, and the possibly infinite cached ratio sum
    /// of a zero-density state is never touched.
    fn power_move<R: Rng + ?Sized>(&self, cached: &mut Cached, beta: f64, rng: &mut R) {
        let shape = self.prior.alpha_tau + beta * self.nfreq() as f64;
        let rate = if beta == 0.0 {
            self.prior.beta_tau
        } else {
            self.prior.beta_tau + beta * cached.b
        };
        if !rate.is_finite() {
            // Zero-density state: the ratio sum is infinite and the
            // conditional is undefined; the Metropolis blocks must move the
            // chain off it first.
            return;
        }
        let cand = sample_inv_gamma(shape, rate, rng);
        let old = cached.state.tau;
        cached.logprior += inv_gamma_log_density(cand, self.prior.alpha_tau, self.prior.beta_tau)
            - inv_gamma_log_density(old, self.prior.alpha_tau, self.prior.beta_tau);
        cached.state.tau = cand;
        cached.loglik = self.loglik(cached.a, cached.b, cand);
    }
}

/// Which circular block a coordinate update touches.
#[derive(Clone, Copy)]
enum CoordBlock {
    V,
    Z,
    U,
    X,
}

fn coord(state: &SamplerState, which: CoordBlock, index: usize) -> f64 {
    match which {
        CoordBlock::V => state.v[index],
        CoordBlock::Z => state.z[index],
        CoordBlock::U => state.u[index],
        CoordBlock::X => state.x[index],
    }
}

fn coord_mut(state: &mut SamplerState, which: CoordBlock, index: usize) -> &mut f64 {
    match which {
        CoordBlock::V => &mut state.v[index],
        CoordBlock::Z => &mut state.z[index],
        CoordBlock::U => &mut state.u[index],
        CoordBlock::X => &mut state.x[index],
    }
}

fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// One full sweep at inverse temperature `beta`, returning the updated
/// state. Convenience wrapper that rebuilds the evaluation cache per call;
/// long runs should use [`Sampler`], which carries the cache across sweeps.
pub fn mh_sweep<R: Rng + ?Sized>(
    state: SamplerState,
    pg: &Periodogram,
    prior: &PriorConfig,
    mcmc: &McmcConfig,
    beta: f64,
    rng: &mut R,
) -> Result<SamplerState> {
    let engine = Engine::new(pg, prior, mcmc)?;
    let mut cached = engine.build_cache(state)?;
    let mut counts = AcceptanceCounts::default();
    engine.sweep(&mut cached, beta, rng, &mut counts)?;
    Ok(cached.state)
}

/// MCMC driver bound to one periodogram and one pair of configurations.
pub struct Sampler<'a> {
    pg: &'a Periodogram,
    prior: &'a PriorConfig,
    mcmc: &'a McmcConfig,
}

impl<'a> Sampler<'a> {
    /// Validates both configurations and binds the sampler to its data.
    pub fn new(pg: &'a Periodogram, prior: &'a PriorConfig, mcmc: &'a McmcConfig) -> Result<Self> {
        prior.validate()?;
        mcmc.validate()?;
        Ok(Self { pg, prior, mcmc })
    }

    /// RNG of chain `index`: the master seed on stream `rng_stream + index`.
    fn chain_rng(&self, index: usize) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.mcmc.seed);
        rng.set_stream(self.mcmc.rng_stream.wrapping_add(index as u64));
        rng
    }

    /// Initial state: sticks and atoms from their priors, the mixture size
    /// started at `min(r + 7, k_max)`, and the power scale variance-matched
    /// to the data via `tau = mean(I) * pi`. Prior draws are retried until
    /// the likelihood is finite (skipped at `beta = 0`, where the
    /// likelihood never enters).
    fn init_cache<R: Rng + ?Sized>(
        &self,
        engine: &Engine,
        beta: f64,
        rng: &mut R,
    ) -> Result<Cached> {
        let mean_ordinate =
            self.pg.ordinates().iter().sum::<f64>() / self.pg.len() as f64;
        let tau0 = mean_ordinate * std::f64::consts::PI;
        let k0 = (self.prior.degree + 7)
            .min(self.prior.k_max)
            .max(self.prior.k_min());
        for _ in 0..1000 {
            let mut state = sample_prior(self.prior, rng)?;
            state.k = k0;
            state.tau = tau0;
            let cached = engine.build_cache(state)?;
            if beta == 0.0 || cached.loglik.is_finite() {
                return Ok(cached);
            }
        }
        Err(Error::InvalidMcmc(
            "no finite-likelihood initial state in 1000 prior draws".into(),
        ))
    }

    /// Runs a single chain at unit temperature.
    pub fn run_chain(&self) -> Result<ChainTrace> {
        self.run_chain_at(1.0)
    }

    /// Runs a single chain at the given inverse temperature, initialized
    /// from the prior.
    pub fn run_chain_at(&self, beta: f64) -> Result<ChainTrace> {
        let engine = Engine::new(self.pg, self.prior, self.mcmc)?;
        let mut rng = self.chain_rng(0);
        let cached = self.init_cache(&engine, beta, &mut rng)?;
        self.drive(&engine, cached, beta, rng)
    }

    /// Runs a single chain at the given inverse temperature from an
    /// explicit initial state.
    pub fn run_chain_from(&self, init: SamplerState, beta: f64) -> Result<ChainTrace> {
        let engine = Engine::new(self.pg, self.prior, self.mcmc)?;
        let rng = self.chain_rng(0);
        let cached = engine.build_cache(init)?;
        self.drive(&engine, cached, beta, rng)
    }

    fn drive(
        &self,
        engine: &Engine,
        mut cached: Cached,
        beta: f64,
        mut rng: ChaCha12Rng,
    ) -> Result<ChainTrace> {
        let cfg = self.mcmc;
        let mut trace = ChainTrace::with_capacity(cfg.snapshot_count() as usize);
        for t in 1..=cfg.iterations {
            engine.sweep(&mut cached, beta, &mut rng, &mut trace.accepts)?;
            if t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 {
                trace.push_snapshot(t, &cached);
            }
            if cfg.progress_every > 0 && t % cfg.progress_every == 0 {
                eprintln!(
                    "iter={t} chain=0 k={} tau={:.6e} loglik={:.6} acc_v={:.3} acc_z={:.3} acc_u={:.3} acc_x={:.3} acc_k={:.3}",
                    cached.state.k,
                    cached.state.tau,
                    cached.loglik,
                    trace.accepts.v.rate(),
                    trace.accepts.z.rate(),
                    trace.accepts.u.rate(),
                    trace.accepts.x.rate(),
                    trace.accepts.k.rate(),
                );
            }
        }
        Ok(trace)
    }

    /// Runs `chains` tempered chains in lockstep with periodic adjacent-pair
    /// state swaps, cycling deterministically through the pairs. Only the
    /// cold chain is stored unless `store_all_chains` is set. Falls back to
    /// a single serial chain when `chains < 2`.
    ///
    /// Chains advance in lockstep within one thread; because every chain
    /// owns its RNG stream and states meet only at the swap exchange, the
    /// traces are identical to a message-passing layout with a swap barrier.
    pub fn run_tempered(&self) -> Result<TemperedRun> {
        let c = self.mcmc.chains;
        if c < 2 {
            let cold = self.run_chain()?;
            return Ok(TemperedRun {
                cold,
                hot: Vec::new(),
                ladder: vec![1.0],
                swap_attempts: Vec::new(),
                swap_accepts: Vec::new(),
            });
        }
        let cfg = self.mcmc;
        let engine = Engine::new(self.pg, self.prior, self.mcmc)?;
        let ladder = cfg.ladder();
        let mut rngs: Vec<ChaCha12Rng> = (0..c).map(|i| self.chain_rng(i)).collect();
        let mut caches = Vec::with_capacity(c);
        for (i, rng) in rngs.iter_mut().enumerate() {
            caches.push(self.init_cache(&engine, ladder[i], rng)?);
        }
        // The swap coordinator draws from its own stream so disabling swaps
        // leaves every chain's draw sequence untouched.
        let mut swap_rng = self.chain_rng(c);
        let cap = cfg.snapshot_count() as usize;
        let mut traces: Vec<ChainTrace> = (0..c)
            .map(|i| {
                if i == 0 || cfg.store_all_chains {
                    ChainTrace::with_capacity(cap)
                } else {
                    ChainTrace::default()
                }
            })
            .collect();
        let mut swap_attempts = vec![0u64; c - 1];
        let mut swap_accepts = vec![0u64; c - 1];
        let mut pair_cursor = 0usize;
        for t in 1..=cfg.iterations {
            for i in 0..c {
                engine.sweep(&mut caches[i], ladder[i], &mut rngs[i], &mut traces[i].accepts)?;
            }
            if cfg.swap_interval > 0 && t % cfg.swap_interval == 0 {
                let i = pair_cursor;
                pair_cursor = (pair_cursor + 1) % (c - 1);
                swap_attempts[i] += 1;
                // Likelihood-only tempering: prior factors cancel in the
                // exchange ratio, leaving (beta_i - beta_j)(ll_j - ll_i).
                let accept = if ladder[i] == ladder[i + 1] {
                    true
                } else {
                    let log_ratio =
                        (ladder[i] - ladder[i + 1]) * (caches[i + 1].loglik - caches[i].loglik);
                    log_ratio >= 0.0 || swap_rng.gen::<f64>().ln() < log_ratio
                };
                if accept {
                    swap_accepts[i] += 1;
                    let (left, right) = caches.split_at_mut(i + 1);
                    std::mem::swap(&mut left[i], &mut right[0]);
                }
            }
            if t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 {
                for i in 0..c {
                    if i == 0 || cfg.store_all_chains {
                        traces[i].push_snapshot(t, &caches[i]);
                    }
                }
            }
            if cfg.progress_every > 0 && t % cfg.progress_every == 0 {
                let rates: Vec<String> = swap_attempts
                    .iter()
                    .zip(swap_accepts.iter())
                    .enumerate()
                    .map(|(p, (&att, &acc))| {
                        let rate = if att == 0 { 0.0 } else { acc as f64 / att as f64 };
                        format!("swap{p}={rate:.3}")
                    })
                    .collect();
                eprintln!(
                    "iter={t} chain=0 k={} tau={:.6e} loglik={:.6} {}",
                    caches[0].state.k,
                    caches[0].state.tau,
                    caches[0].loglik,
                    rates.join(" "),
                );
            }
        }
        let mut iter = traces.into_iter();
        let cold = iter.next().expect("at least one chain");
        let hot = if cfg.store_all_chains {
            iter.collect()
        } else {
            Vec::new()
        };
        Ok(TemperedRun {
            cold,
            hot,
            ladder,
            swap_attempts,
            swap_accepts,
        })
    }
}

/// Consistency helper for tests: the cached sweep quantities recomputed
/// from scratch for one state.
#[cfg(test)]
fn recompute_loglik(
    pg: &Periodogram,
    prior: &PriorConfig,
    state: &SamplerState,
) -> Result<f64> {
    let psd = crate::prior::psd_at_fourier(state, prior, pg)?;
    crate::spectra::whittle_loglik(pg, &psd)
}
