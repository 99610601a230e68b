//! Run configuration: defaults, config-file parsing, and flag overrides.
//!
//! Precedence is defaults, then `key = value` lines from `--config`, then
//! explicit command-line flags. The resolved configuration is echoed into
//! each run's manifest using the same key names, so a manifest replays the
//! run verbatim when passed back as `--config`.

use std::fmt;
use std::path::PathBuf;

use specden::prior::{BaseMeasure, PriorConfig, PriorFamily};
use specden::sampler::{EpsSchedule, McmcConfig};

/// Which pipeline the process runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Estimate,
    Simulate,
    Sunspot,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Estimate => "estimate",
            Mode::Simulate => "simulate",
            Mode::Sunspot => "sunspot",
        }
    }
}

/// Autoregressive scenario for the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Ar1,
    Ar4,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Ar1 => "ar1",
            Scenario::Ar4 => "ar4",
        }
    }

    /// Model coefficients: a strongly autocorrelated first-order process
    /// and a sharply bimodal fourth-order one.
    pub fn coefficients(self) -> Vec<f64> {
        match self {
            Scenario::Ar1 => vec![0.9],
            Scenario::Ar4 => vec![0.9, -0.9, 0.9, -0.9],
        }
    }
}

/// A configuration problem the user has to fix; reported as a usage error.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Optional overrides gathered from command-line flags.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub prior: Option<String>,
    pub iters: Option<u64>,
    pub burnin: Option<u64>,
    pub thin: Option<u64>,
    pub kmax: Option<usize>,
    pub degree: Option<usize>,
    pub chains: Option<usize>,
    pub tmin: Option<f64>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub scenario: Option<String>,
    pub n: Option<usize>,
    pub sqrt: bool,
    pub difference: bool,
    pub hann: bool,
}

/// Fully resolved configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub family: PriorFamily,
    pub degree: usize,
    pub k_max: usize,
    pub theta_k: f64,
    pub m_g: f64,
    pub m_h: f64,
    pub alpha_tau: f64,
    pub beta_tau: f64,
    /// Stick-breaking truncation override; derived from the series length
    /// when absent.
    pub truncation: Option<usize>,
    pub iterations: u64,
    /// Burn-in; defaults to half the iteration count when unset.
    pub burn_in: Option<u64>,
    pub thin: u64,
    pub chains: usize,
    pub t_min: f64,
    pub swap_interval: u64,
    pub seed: u64,
    pub sqrt: bool,
    pub difference: bool,
    pub hann: bool,
    pub center: bool,
    pub sampling_interval: f64,
    /// Credible level: bands are built at `1 - alpha` coverage.
    pub alpha: f64,
    pub reps: usize,
    pub scenario: Scenario,
    pub n: usize,
}

impl RunConfig {
    /// Baseline defaults for a mode. The sunspot pipeline runs ten times
    /// the desk iteration budget and always square-roots and centers.
    pub fn defaults(mode: Mode) -> Self {
        Self {
            mode,
            input: None,
            out: PathBuf::from("out"),
            family: PriorFamily::Bspline,
            degree: 3,
            k_max: 500,
            theta_k: 0.01,
            m_g: 1.0,
            m_h: 1.0,
            alpha_tau: 0.001,
            beta_tau: 0.001,
            truncation: None,
            iterations: if mode == Mode::Sunspot { 100_000 } else { 40_000 },
            burn_in: None,
            thin: 10,
            chains: 1,
            t_min: 0.005,
            swap_interval: 10,
            seed: 1,
            sqrt: mode == Mode::Sunspot,
            difference: false,
            hann: false,
            center: true,
            sampling_interval: 1.0,
            alpha: 0.1,
            reps: 50,
            scenario: Scenario::Ar1,
            n: 256,
        }
    }

    /// Resolves defaults, then the config file, then flags.
    pub fn resolve(mode: Mode, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = Self::defaults(mode);
        if let Some(path) = &overrides.config {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError(format!("cannot read config file {}: {e}", path.display()))
            })?;
            for (key, value) in parse_config_text(&text)? {
                cfg.apply(&key, &value)?;
            }
        }
        cfg.apply_overrides(overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_overrides(&mut self, ov: &Overrides) -> Result<(), ConfigError> {
        if let Some(v) = &ov.input {
            self.input = Some(v.clone());
        }
        if let Some(v) = &ov.out {
            self.out = v.clone();
        }
        if let Some(v) = &ov.prior {
            self.family = parse_family(v)?;
        }
        if let Some(v) = ov.iters {
            self.iterations = v;
        }
        if let Some(v) = ov.burnin {
            self.burn_in = Some(v);
        }
        if let Some(v) = ov.thin {
            self.thin = v;
        }
        if let Some(v) = ov.kmax {
            self.k_max = v;
        }
        if let Some(v) = ov.degree {
            self.degree = v;
        }
        if let Some(v) = ov.chains {
            self.chains = v;
        }
        if let Some(v) = ov.tmin {
            self.t_min = v;
        }
        if let Some(v) = ov.seed {
            self.seed = v;
        }
        if let Some(v) = ov.reps {
            self.reps = v;
        }
        if let Some(v) = &ov.scenario {
            self.scenario = parse_scenario(v)?;
        }
        if let Some(v) = ov.n {
            self.n = v;
        }
        if ov.sqrt {
            self.sqrt = true;
        }
        if ov.difference {
            self.difference = true;
        }
        if ov.hann {
            self.hann = true;
        }
        Ok(())
    }

    /// Applies one `key = value` pair from a config file or manifest.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |what: &str| ConfigError(format!("config key `{key}`: invalid {what} `{value}`"));
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "prior" => self.family = parse_family(value)?,
            "degree" => self.degree = value.parse().map_err(|_| bad("integer"))?,
            "kmax" => self.k_max = value.parse().map_err(|_| bad("integer"))?,
            "theta_k" => self.theta_k = value.parse().map_err(|_| bad("number"))?,
            "m_g" => self.m_g = value.parse().map_err(|_| bad("number"))?,
            "m_h" => self.m_h = value.parse().map_err(|_| bad("number"))?,
            "alpha_tau" => self.alpha_tau = value.parse().map_err(|_| bad("number"))?,
            "beta_tau" => self.beta_tau = value.parse().map_err(|_| bad("number"))?,
            "truncation" => self.truncation = Some(value.parse().map_err(|_| bad("integer"))?),
            "iters" => self.iterations = value.parse().map_err(|_| bad("integer"))?,
            "burnin" => self.burn_in = Some(value.parse().map_err(|_| bad("integer"))?),
            "thin" => self.thin = value.parse().map_err(|_| bad("integer"))?,
            "chains" => self.chains = value.parse().map_err(|_| bad("integer"))?,
            "tmin" => self.t_min = value.parse().map_err(|_| bad("number"))?,
            "swap_interval" => self.swap_interval = value.parse().map_err(|_| bad("integer"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("integer"))?,
            "sqrt" => self.sqrt = parse_bool(value).ok_or_else(|| bad("boolean"))?,
            "difference" => self.difference = parse_bool(value).ok_or_else(|| bad("boolean"))?,
            "hann" => self.hann = parse_bool(value).ok_or_else(|| bad("boolean"))?,
            "center" => self.center = parse_bool(value).ok_or_else(|| bad("boolean"))?,
            "dt" => self.sampling_interval = value.parse().map_err(|_| bad("number"))?,
            "alpha" => self.alpha = value.parse().map_err(|_| bad("number"))?,
            "reps" => self.reps = value.parse().map_err(|_| bad("integer"))?,
            "scenario" => self.scenario = parse_scenario(value)?,
            "n" => self.n = value.parse().map_err(|_| bad("integer"))?,
            _ => return Err(ConfigError(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.iterations == 0 {
            return Err(ConfigError("iters must be at least 1".into()));
        }
        if let Some(b) = self.burn_in {
            if b >= self.iterations {
                return Err(ConfigError(format!(
                    "burnin {b} must be below iters {}",
                    self.iterations
                )));
            }
        }
        if self.thin == 0 {
            return Err(ConfigError("thin must be at least 1".into()));
        }
        if !(self.t_min > 0.0 && self.t_min <= 1.0) {
            return Err(ConfigError(format!(
                "tmin must lie in (0, 1], got {}",
                self.t_min
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConfigError(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.sampling_interval.is_finite() && self.sampling_interval > 0.0) {
            return Err(ConfigError(format!(
                "dt must be positive, got {}",
                self.sampling_interval
            )));
        }
        if self.mode == Mode::Estimate && self.input.is_none() {
            return Err(ConfigError("estimate needs an input series (--input)".into()));
        }
        if self.mode == Mode::Simulate {
            if self.reps == 0 {
                return Err(ConfigError("reps must be at least 1".into()));
            }
            if ![128, 256, 512].contains(&self.n) {
                return Err(ConfigError(format!(
                    "study length n must be 128, 256, or 512, got {}",
                    self.n
                )));
            }
        }
        Ok(())
    }

    /// Burn-in actually used: half the iterations unless set explicitly.
    pub fn resolved_burn_in(&self) -> u64 {
        self.burn_in.unwrap_or(self.iterations / 2)
    }

    /// Stick-breaking truncation for a series of length `n`: never below
    /// 20, growing with the cube root of the length.
    pub fn truncation_for(&self, n: usize) -> usize {
        self.truncation
            .unwrap_or_else(|| 20usize.max((n as f64).cbrt().ceil() as usize))
    }

    /// Prior configuration for a series of length `n`.
    pub fn prior_for(&self, n: usize) -> PriorConfig {
        let l = self.truncation_for(n);
        PriorConfig {
            degree: self.degree,
            k_max: self.k_max,
            theta_k: self.theta_k,
            m_g: self.m_g,
            m_h: self.m_h,
            g0: BaseMeasure::Uniform,
            h0: BaseMeasure::Uniform,
            alpha_tau: self.alpha_tau,
            beta_tau: self.beta_tau,
            l_g: l,
            l_h: l,
            family: self.family,
        }
    }

    /// Sampler configuration with the resolved burn-in.
    pub fn mcmc(&self) -> McmcConfig {
        McmcConfig {
            iterations: self.iterations,
            burn_in: self.resolved_burn_in(),
            thin: self.thin,
            seed: self.seed,
            rng_stream: 0,
            epsilon: EpsSchedule::DataDriven,
            chains: self.chains,
            t_min: self.t_min,
            swap_interval: self.swap_interval,
            ..McmcConfig::default()
        }
    }

    /// All resolved values as manifest `key = value` pairs, in stable
    /// order. Feeding these back through `apply` reproduces the run.
    pub fn manifest_pairs(&self, n: usize) -> Vec<(String, String)> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| pairs.push((k.to_string(), v));
        if let Some(input) = &self.input {
            push("input", input.display().to_string());
        }
        push("out", self.out.display().to_string());
        push(
            "prior",
            match self.family {
                PriorFamily::Bspline => "bspline".into(),
                PriorFamily::Bernstein => "bernstein".into(),
            },
        );
        push("degree", self.degree.to_string());
        push("kmax", self.k_max.to_string());
        push("theta_k", self.theta_k.to_string());
        push("m_g", self.m_g.to_string());
        push("m_h", self.m_h.to_string());
        push("alpha_tau", self.alpha_tau.to_string());
        push("beta_tau", self.beta_tau.to_string());
        push("truncation", self.truncation_for(n).to_string());
        push("iters", self.iterations.to_string());
        push("burnin", self.resolved_burn_in().to_string());
        push("thin", self.thin.to_string());
        push("chains", self.chains.to_string());
        push("tmin", self.t_min.to_string());
        push("swap_interval", self.swap_interval.to_string());
        push("seed", self.seed.to_string());
        push("sqrt", self.sqrt.to_string());
        push("difference", self.difference.to_string());
        push("hann", self.hann.to_string());
        push("center", self.center.to_string());
        push("dt", self.sampling_interval.to_string());
        push("alpha", self.alpha.to_string());
        if self.mode == Mode::Simulate {
            push("reps", self.reps.to_string());
            push("scenario", self.scenario.name().to_string());
            push("n", self.n.to_string());
        }
        pairs
    }
}

fn parse_bool(value: &str) -> Option<bool> {
    match value {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

fn parse_family(value: &str) -> Result<PriorFamily, ConfigError> {
    match value {
        "bspline" => Ok(PriorFamily::Bspline),
        "bernstein" => Ok(PriorFamily::Bernstein),
        _ => Err(ConfigError(format!(
            "prior must be `bspline` or `bernstein`, got `{value}`"
        ))),
    }
}

fn parse_scenario(value: &str) -> Result<Scenario, ConfigError> {
    match value {
        "ar1" => Ok(Scenario::Ar1),
        "ar4" => Ok(Scenario::Ar4),
        _ => Err(ConfigError(format!(
            "scenario must be `ar1` or `ar4`, got `{value}`"
        ))),
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// later duplicates win because pairs are applied in file order.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError(format!(
                "config line {}: expected `key = value`, got `{line}`",
                idx + 1
            )));
        };
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}
