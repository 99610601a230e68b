//! Distributional oracles for the MCMC engine: prior recovery with the
//! likelihood disabled, a reduced-model posterior against dense-grid
//! quadrature, an exact cell-enumeration posterior for the size and atom
//! blocks, the size-proposal mixture law, bookkeeping exactness, and
//! tempering identities.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;
use specden::prior::{psd_at_fourier, BaseMeasure, PriorConfig, PriorFamily, SamplerState};
use specden::sampler::{propose_k, BlockToggles, McmcConfig, Sampler};
use specden::spectra::{mean_center, periodogram, whittle_loglik, Periodogram, TimeSeries};
use statrs::distribution::{ChiSquared, ContinuousCDF, Gamma};

fn white_noise_pg(n: usize, seed: u64) -> Periodogram {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..n)
        .map(|_| rand_distr::StandardNormal.sample(&mut rng))
        .collect();
    let ts = TimeSeries::new(values, 1.0).unwrap();
    periodogram(&mean_center(&ts)).unwrap()
}

/// Inverse-gamma cdf with shape `a` and rate `b`.
fn inv_gamma_cdf(t: f64, a: f64, b: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    1.0 - Gamma::new(a, b).unwrap().cdf(1.0 / t)
}

/// Merges adjacent histogram cells until every expected count reaches
/// `min_expected`, then returns the chi-square statistic and cell count.
fn chi_square_merged(observed: &[f64], expected: &[f64], min_expected: f64) -> (f64, usize) {
    let mut cells: Vec<(f64, f64)> = observed
        .iter()
        .zip(expected.iter())
        .map(|(&o, &e)| (o, e))
        .collect();
    loop {
        let Some(pos) = cells.iter().position(|&(_, e)| e < min_expected) else {
            break;
        };
        if cells.len() == 1 {
            break;
        }
        let merged = cells.remove(pos);
        let neighbor = if pos == 0 { 0 } else { pos - 1 };
        cells[neighbor].0 += merged.0;
        cells[neighbor].1 += merged.1;
    }
    let stat = cells
        .iter()
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum::<f64>();
    (stat, cells.len())
}

/// With the likelihood disabled the chain must sample the joint prior:
/// every marginal is checked against its analytic law at significance 0.01.
#[test]
fn disabled_likelihood_recovers_every_prior_marginal() {
    let prior = PriorConfig {
        degree: 3,
        k_max: 25,
        theta_k: 0.05,
        m_g: 2.0,
        m_h: 1.0,
        g0: BaseMeasure::Uniform,
        h0: BaseMeasure::Uniform,
        alpha_tau: 2.0,
        beta_tau: 2.0,
        l_g: 4,
        l_h: 4,
        family: PriorFamily::Bspline,
    };
    let mcmc = McmcConfig {
        iterations: 100_000,
        burn_in: 10_000,
        thin: 100,
        seed: 71,
        ..McmcConfig::default()
    };
    let pg = white_noise_pg(32, 70);
    let sampler = Sampler::new(&pg, &prior, &mcmc).unwrap();
    let trace = sampler.run_chain_at(0.0).unwrap();
    assert_eq!(trace.len(), 900);

    let pull = |f: &dyn Fn(&SamplerState) -> f64| -> Vec<f64> {
        trace.states.iter().map(f).collect()
    };
    // Sticks: Beta(1, m) has cdf 1 - (1-v)^m.
    let stick_cdf = |m: f64| move |v: f64| 1.0 - (1.0 - v).powf(m);
    let crit = 1.628 / (trace.len() as f64).sqrt();
    let named: Vec<(&str, Vec<f64>, Box<dyn Fn(f64) -> f64>)> = vec![
        ("v_first", pull(&|s| s.v[0]), Box::new(stick_cdf(prior.m_g))),
        ("v_last", pull(&|s| s.v[3]), Box::new(stick_cdf(prior.m_g))),
        ("u_first", pull(&|s| s.u[0]), Box::new(stick_cdf(prior.m_h))),
        ("z_first", pull(&|s| s.z[0]), Box::new(|z| z)),
        ("z_last", pull(&|s| s.z[4]), Box::new(|z| z)),
        ("x_mid", pull(&|s| s.x[2]), Box::new(|x| x)),
        (
            "tau",
            pull(&|s| s.tau),
            Box::new(|t| inv_gamma_cdf(t, 2.0, 2.0)),
        ),
    ];
    for (name, draws, cdf) in &named {
        let ks = common::ks_statistic(draws, cdf);
        assert!(
            ks < crit,
            "{name}: KS statistic {ks:.4} beyond the 0.01 critical value {crit:.4}"
        );
    }

    // Mixture size: chi-square against the renormalized pmf.
    let kmin = 4usize;
    let total = trace.len() as f64;
    let raw: Vec<f64> = (kmin..=prior.k_max)
        .map(|k| (-prior.theta_k * ((k * k) as f64 - (kmin * kmin) as f64)).exp())
        .collect();
    let z: f64 = raw.iter().sum();
    let expected: Vec<f64> = raw.iter().map(|w| w / z * total).collect();
    let mut observed = vec![0.0; expected.len()];
    for s in &trace.states {
        observed[s.k - kmin] += 1.0;
    }
    let (stat, cells) = chi_square_merged(&observed, &expected, 10.0);
    let dof = (cells - 1) as f64;
    let crit_chi = ChiSquared::new(dof).unwrap().inverse_cdf(0.99);
    assert!(
        stat < crit_chi,
        "size pmf chi-square {stat:.2} beyond the 0.01 critical value {crit_chi:.2} ({cells} cells)"
    );
}

/// Two-parameter reduced model: one weight stick plus the power scale, with
/// everything else frozen. The MCMC marginals must match dense-grid
/// quadrature of the posterior within sup-norm 0.02 at 1e5 samples.
#[test]
fn reduced_model_marginals_match_dense_grid_quadrature() {
    let ordinates = vec![
        0.500641, 0.55244, 0.63126, 0.081963, 0.027762, 0.507577, 0.532468, 1.268097,
    ];
    let pg = Periodogram::from_ordinates(17, 1.0, ordinates.clone()).unwrap();
    let prior = PriorConfig {
        degree: 1,
        k_max: 2,
        theta_k: 0.01,
        m_g: 1.0,
        m_h: 1.0,
        g0: BaseMeasure::Uniform,
        h0: BaseMeasure::Uniform,
        alpha_tau: 1.0,
        beta_tau: 1.0,
        l_g: 1,
        l_h: 1,
        family: PriorFamily::Bspline,
    };
    let mcmc = McmcConfig {
        iterations: 530_000,
        burn_in: 30_000,
        thin: 5,
        seed: 41,
        blocks: BlockToggles {
            v: true,
            z: false,
            u: false,
            x: false,
            k: false,
            tau: true,
        },
        ..McmcConfig::default()
    };
    let init = SamplerState {
        v: vec![0.5],
        z: vec![0.2, 0.8],
        u: vec![0.5],
        x: vec![0.5, 0.5],
        k: 2,
        tau: 1.0,
    };
    let sampler = Sampler::new(&pg, &prior, &mcmc).unwrap();
    let trace = sampler.run_chain_from(init, 1.0).unwrap();
    assert_eq!(trace.len(), 100_000);

    // With k = 2 and degree 1 the mixture is (1-V) 2(1-w) + V 2w, the atoms
    // routing the remainder mass to the first component. Integrating tau
    // conjugately leaves the V posterior
    //   h(V) = exp(-A(V)) (beta + B(V))^-(alpha + N)
    // with A the log-density sum and B the periodogram ratio sum.
    let n = 17.0;
    let omegas: Vec<f64> = (1..=8).map(|l| 2.0 * l as f64 / n).collect();
    let moments = |v: f64| -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for (w, i) in omegas.iter().zip(&ordinates) {
            let s = (1.0 - v) * 2.0 * (1.0 - w) + v * 2.0 * w;
            a += s.ln();
            b += i / s;
        }
        (a, b)
    };
    let alpha_post = prior.alpha_tau + 8.0;
    let grid_len = 8193usize;
    let grid: Vec<f64> = (0..grid_len)
        .map(|i| i as f64 / (grid_len - 1) as f64)
        .collect();
    let density: Vec<f64> = grid
        .iter()
        .map(|&v| {
            let (a, b) = moments(v);
            (-a - alpha_post * (prior.beta_tau + b).ln()).exp()
        })
        .collect();
    // Trapezoid cumulative over the uniform grid.
    let h = 1.0 / (grid_len - 1) as f64;
    let mut cum = vec![0.0; grid_len];
    for i in 1..grid_len {
        cum[i] = cum[i - 1] + 0.5 * (density[i - 1] + density[i]) * h;
    }
    let norm = cum[grid_len - 1];
    let v_cdf = |x: f64| -> f64 {
        let t = (x.clamp(0.0, 1.0)) / h;
        let idx = (t.floor() as usize).min(grid_len - 2);
        let frac = t - idx as f64;
        let partial = cum[idx]
            + 0.5 * (density[idx] + density[idx] + frac * (density[idx + 1] - density[idx]))
                * frac
                * h;
        partial / norm
    };
    let v_draws: Vec<f64> = trace.states.iter().map(|s| s.v[0]).collect();
    let v_sup = common::ks_statistic(&v_draws, v_cdf);
    assert!(v_sup < 0.02, "stick marginal sup-norm error {v_sup:.4}");

    // The power marginal mixes the conjugate inverse-gamma over the V grid.
    let weights: Vec<f64> = (0..grid_len)
        .map(|i| {
            let w = if i == 0 || i == grid_len - 1 { 0.5 } else { 1.0 };
            w * density[i] / norm * h
        })
        .collect();
    let rates: Vec<f64> = grid
        .iter()
        .map(|&v| prior.beta_tau + moments(v).1)
        .collect();
    let tau_cdf = |t: f64| -> f64 {
        weights
            .iter()
            .zip(&rates)
            .map(|(w, b)| w * inv_gamma_cdf(t, alpha_post, *b))
            .sum()
    };
    let tau_draws: Vec<f64> = trace.states.iter().map(|s| s.tau).collect();
    let tau_sup = common::ks_statistic(&tau_draws, tau_cdf);
    assert!(tau_sup < 0.02, "power marginal sup-norm error {tau_sup:.4}");
}

/// The size proposal must follow the 0.75/0.25 walk/heavy-tail mixture law.
#[test]
fn size_proposal_histogram_matches_the_mixture_law() {
    let cfg = McmcConfig::default();
    let mut rng = ChaCha12Rng::seed_from_u64(17);
    let k = 50usize;
    let draws = 100_000usize;
    // Steps binned as <= -4, -3 .. 3, >= 4.
    let mut observed = vec![0.0; 9];
    for _ in 0..draws {
        let step = propose_k(k, &cfg, &mut rng) - k as i64;
        let cell = (step.clamp(-4, 4) + 4) as usize;
        observed[cell] += 1.0;
    }
    let scale = cfg.k_cauchy_scale;
    let round_mass = |m: i64| -> f64 {
        let hi = ((m as f64 + 0.5) / scale).atan();
        let lo = ((m as f64 - 0.5) / scale).atan();
        (hi - lo) / std::f64::consts::PI
    };
    let zero_mass = round_mass(0);
    let bold = |m: i64| -> f64 { 0.25 * round_mass(m) / (1.0 - zero_mass) };
    let tail_hi: f64 =
        0.25 * (0.5 - ((3.5) / scale).atan() / std::f64::consts::PI) / (1.0 - zero_mass);
    let mut expected = vec![0.0; 9];
    for (cell, e) in expected.iter_mut().enumerate() {
        let step = cell as i64 - 4;
        *e = match step {
            -4 | 4 => tail_hi,
            -1 | 1 => 0.25 + bold(step),
            0 => 0.25,
            _ => bold(step),
        } * draws as f64;
    }
    let stat: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let crit = ChiSquared::new(8.0).unwrap().inverse_cdf(0.99);
    assert!(
        stat < crit,
        "size proposal chi-square {stat:.2} beyond the 0.01 critical value {crit:.2}"
    );
}

/// Acceptance tallies must count exactly one proposal per coordinate per
/// sweep and never exceed their proposal counts.
#[test]
fn acceptance_bookkeeping_is_exact() {
    let pg = white_noise_pg(32, 21);
    let prior = PriorConfig {
        degree: 2,
        k_max: 15,
        theta_k: 0.02,
        m_g: 1.0,
        m_h: 1.0,
        g0: BaseMeasure::Uniform,
        h0: BaseMeasure::Uniform,
        alpha_tau: 2.0,
        beta_tau: 2.0,
        l_g: 3,
        l_h: 5,
        family: PriorFamily::Bspline,
    };
    let mcmc = McmcConfig {
        iterations: 500,
        burn_in: 100,
        thin: 10,
        seed: 22,
        ..McmcConfig::default()
    };
    let sampler = Sampler::new(&pg, &prior, &mcmc).unwrap();
    let trace = sampler.run_chain().unwrap();
    let acc = trace.accepts;
    assert_eq!(acc.v.proposed, 500 * 3);
    assert_eq!(acc.z.proposed, 500 * 4);
    assert_eq!(acc.u.proposed, 500 * 5);
    assert_eq!(acc.x.proposed, 500 * 6);
    assert_eq!(acc.k.proposed, 500);
    for block in [acc.v, acc.z, acc.u, acc.x, acc.k] {
        assert!(block.accepted <= block.proposed);
        assert!((0.0..=1.0).contains(&block.rate()));
    }
    // The circular blocks with uniform priors accept most moves.
    assert!(acc.v.rate() > 0.2);
}

/// With swaps disabled and a flat ladder, every tempered chain must
/// reproduce the serial chain run on its own RNG stream, bit for bit.
#[test]
fn disabled_swaps_reproduce_independent_serial_chains() {
    let pg = white_noise_pg(32, 31);
    let prior = PriorConfig {
        degree: 2,
        k_max: 15,
        theta_k: 0.02,
        m_g: 1.0,
        m_h: 1.0,
        g0: BaseMeasure::Uniform,
        h0: BaseMeasure::Uniform,
        alpha_tau: 2.0,
        beta_tau: 2.0,
        l_g: 3,
        l_h: 3,
        family: PriorFamily::Bspline,
    };
    let tempered_cfg = McmcConfig {
        iterations: 400,
        burn_in: 100,
        thin: 5,
        seed: 33,
        chains: 2,
        t_min: 1.0,
        swap_interval: 0,
        store_all_chains: true,
        ..McmcConfig::default()
    };
    let run = Sampler::new(&pg, &prior, &tempered_cfg)
        .unwrap()
        .run_tempered()
        .unwrap();
    assert!(run.swap_attempts.iter().all(|&a| a == 0));

    let serial_cfg = McmcConfig {
        chains: 1,
        ..tempered_cfg.clone()
    };
    let serial0 = Sampler::new(&pg, &prior, &serial_cfg)
        .unwrap()
        .run_chain_at(1.0)
        .unwrap();
    let shifted_cfg = McmcConfig {
        rng_stream: 1,
        ..serial_cfg
    };
    let serial1 = Sampler::new(&pg, &prior, &shifted_cfg)
        .unwrap()
        .run_chain_at(1.0)
        .unwrap();
    assert_eq!(run.cold.states, serial0.states);
    assert_eq!(run.cold.logliks, serial0.logliks);
    assert_eq!(run.hot.len(), 1);
    assert_eq!(run.hot[0].states, serial1.states);
    assert_eq!(run.hot[0].logliks, serial1.logliks);
}

/// A short ladder on weak data must keep every adjacent swap channel alive.
#[test]
fn tempered_ladder_accepts_swaps_on_every_adjacent_pair() {
    let pg = white_noise_pg(16, 37);
    let prior = PriorConfig {
        degree: 2,
        k_max: 12,
        theta_k: 0.05,
        m_g: 1.0,
        m_h: 1.0,
        g0: BaseMeasure::Uniform,
        h0: BaseMeasure::Uniform,
        alpha_tau: 2.0,
        beta_tau: 2.0,
        l_g: 2,
        l_h: 2,
        family: PriorFamily::Bspline,
    };
    let mcmc = McmcConfig {
        iterations: 20_000,
        burn_in: 10_000,
        thin: 10,
        seed: 39,
        chains: 4,
        t_min: 0.005,
        swap_interval: 10,
        ..McmcConfig::default()
    };
    let run = Sampler::new(&pg, &prior, &mcmc).unwrap().run_tempered().unwrap();
    assert_eq!(run.ladder[0], 1.0);
    assert_eq!(run.ladder[3], 0.005);
    assert_eq!(run.swap_attempts.len(), 3);
    for (pair, (&attempts, &accepts)) in run
        .swap_attempts
        .iter()
        .zip(run.swap_accepts.iter())
        .enumerate()
    {
        assert!(attempts > 500, "pair {pair} attempted only {attempts}");
        assert!(accepts > 0, "pair {pair} accepted no swaps");
    }
}

/// White noise has a flat spectrum, so the posterior median should stay
/// close to the fitted constant level (the ordinate mean, which is the
/// constant-spectrum Whittle MLE) across nearly all frequencies. The
/// realization-independent level 1/(2 pi) is only held loosely here;
/// short series put sizable sampling error on the total power.
#[test]
fn white_noise_posterior_median_tracks_the_flat_spectrum() {
    let pg = white_noise_pg(128, 43);
    let prior = PriorConfig {
        degree: 3,
        k_max: 50,
        theta_k: 0.01,
        m_g: 1.0,
        m_h: 1.0,
        g0: BaseMeasure::Uniform,
        h0: BaseMeasure::Uniform,
        alpha_tau: 0.001,
        beta_tau: 0.001,
        l_g: 10,
        l_h: 10,
        family: PriorFamily::Bspline,
    };
    let mcmc = McmcConfig {
        iterations: 12_000,
        burn_in: 6_000,
        thin: 10,
        seed: 47,
        ..McmcConfig::default()
    };
    let sampler = Sampler::new(&pg, &prior, &mcmc).unwrap();
    let trace = sampler.run_chain().unwrap();
    assert_eq!(trace.len(), 600);
    let nfreq = pg.len();
    let level = pg.ordinates().iter().sum::<f64>() / nfreq as f64;
    let flat = 1.0 / (2.0 * std::f64::consts::PI);
    let mut close = 0usize;
    let mut sane = 0usize;
    for l in 0..nfreq {
        let mut column: Vec<f64> = trace.psd.iter().map(|row| row[l]).collect();
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = 0.5 * (column[column.len() / 2 - 1] + column[column.len() / 2]);
        if (median - level).abs() / level < 0.35 {
            close += 1;
        }
        if (median - flat).abs() / flat < 0.75 {
            sane += 1;
        }
    }
    assert!(
        close * 10 >= nfreq * 9,
        "median close to the fitted level at only {close} of {nfreq} frequencies"
    );
    assert_eq!(
        sane, nfreq,
        "median strayed beyond 75% of the theoretical level somewhere"
    );
}

/// Integrated autocorrelation time of a scalar series via Geyer's initial
/// positive sequence: pair consecutive lag autocovariances and sum while
/// the pair sums stay positive.
fn iact(series: &[f64]) -> f64 {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let auto = |lag: usize| -> f64 {
        (0..n - lag)
            .map(|i| (series[i] - mean) * (series[i + lag] - mean))
            .sum::<f64>()
            / n as f64
    };
    let c0 = auto(0);
    if c0 == 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut lag = 1;
    while lag + 1 < n {
        let pair = auto(lag) + auto(lag + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        lag += 2;
    }
    (1.0 + 2.0 * sum / c0).max(1.0)
}

/// With every block frozen except the weight atoms and the mixture size,
/// the posterior depends on the atoms only through which of the k
/// equal-width cells each one occupies. Enumerating cell pairs therefore
/// yields the exact size marginal, zero-density states contributing zero
/// mass. The chain must reproduce it in total variation and in mean.
#[test]
fn size_and_atom_posterior_matches_exact_cell_enumeration() {
    let ordinates = vec![0.8, 1.3, 0.5, 2.0, 1.1];
    let pg = Periodogram::from_ordinates(12, 1.0, ordinates).unwrap();
    let prior = PriorConfig {
        degree: 3,
        k_max: 10,
        theta_k: 0.01,
        m_g: 1.0,
        m_h: 1.0,
        g0: BaseMeasure::Uniform,
        h0: BaseMeasure::Uniform,
        alpha_tau: 2.0,
        beta_tau: 2.0,
        l_g: 1,
        l_h: 1,
        family: PriorFamily::Bspline,
    };
    let frozen = SamplerState {
        v: vec![0.5],
        z: vec![0.3, 0.6],
        u: vec![0.5],
        x: vec![0.3, 0.7],
        k: 6,
        tau: 1.0,
    };

    // Exact reference: atoms enter only via cells, each of prior measure
    // 1/k, so the size marginal is the pmf times the cell-pair average of
    // the likelihood at cell centers.
    let kmin = prior.k_min();
    let sizes: Vec<usize> = (kmin..=prior.k_max).collect();
    let mut log_terms: Vec<Vec<f64>> = Vec::new();
    for &k in &sizes {
        let mut terms = Vec::new();
        for b0 in 1..=k {
            for b1 in 1..=k {
                let mut state = frozen.clone();
                state.k = k;
                state.z = vec![
                    (b0 as f64 - 0.5) / k as f64,
                    (b1 as f64 - 0.5) / k as f64,
                ];
                let psd = psd_at_fourier(&state, &prior, &pg).unwrap();
                if psd.iter().all(|&s| s > 0.0) {
                    terms.push(whittle_loglik(&pg, &psd).unwrap());
                }
            }
        }
        log_terms.push(terms);
    }
    let shift = log_terms
        .iter()
        .flatten()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut exact: Vec<f64> = sizes
        .iter()
        .zip(&log_terms)
        .map(|(&k, terms)| {
            let avg = terms.iter().map(|&t| (t - shift).exp()).sum::<f64>()
                / (k * k) as f64;
            prior.k_log_pmf(k).exp() * avg
        })
        .collect();
    let total: f64 = exact.iter().sum();
    for p in &mut exact {
        *p /= total;
    }

    let mcmc = McmcConfig {
        iterations: 800_000,
        burn_in: 40_000,
        thin: 20,
        seed: 5,
        blocks: BlockToggles {
            v: false,
            z: true,
            u: false,
            x: false,
            k: true,
            tau: false,
        },
        ..McmcConfig::default()
    };
    let init_psd = psd_at_fourier(&frozen, &prior, &pg).unwrap();
    assert!(init_psd.iter().all(|&s| s > 0.0));
    let sampler = Sampler::new(&pg, &prior, &mcmc).unwrap();
    let trace = sampler.run_chain_from(frozen, 1.0).unwrap();
    assert_eq!(trace.len(), 38_000);

    let draws: Vec<f64> = trace.states.iter().map(|s| s.k as f64).collect();
    let mut observed = vec![0.0; sizes.len()];
    for s in &trace.states {
        observed[s.k - kmin] += 1.0;
    }
    let n = draws.len() as f64;
    let tv = 0.5
        * observed
            .iter()
            .zip(&exact)
            .map(|(o, e)| (o / n - e).abs())
            .sum::<f64>();
    assert!(tv < 0.035, "size marginal total variation {tv:.4}");

    let exact_mean: f64 = sizes
        .iter()
        .zip(&exact)
        .map(|(&k, p)| k as f64 * p)
        .sum();
    let exact_var: f64 = sizes
        .iter()
        .zip(&exact)
        .map(|(&k, p)| (k as f64 - exact_mean).powi(2) * p)
        .sum();
    let mean = draws.iter().sum::<f64>() / n;
    let se = (exact_var * iact(&draws) / n).sqrt();
    let z = (mean - exact_mean) / se;
    assert!(
        z.abs() < 4.0,
        "size mean {mean:.4} vs exact {exact_mean:.4}, z = {z:.2}"
    );
}
