//! Experiment configuration and its `key = value` file format.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored:
//!
//! ```text
//! scenario = easy          # easy | medium | hard
//! n = 20
//! d = 5
//! horizon = 5000
//! runs = 30
//! policies = colstim, maxinp, random, misspec:colstim
//! true_noise = gumbel      # gumbel | gaussian | exponential
//! true_scale = 1
//! assumed_noise = gumbel   # G used by the CoLSTIM family
//! assumed_scale = 1
//! assumed_model = btl      # F used for estimation (default: induced by assumed_noise)
//! estimator = sgd          # sgd | mle
//! hyper_mode = practical   # practical | theory
//! mu = 0.1                 # theory mode only
//! rho = 0.5                # theory mode only
//! seed = 1
//! output = results.csv
//! policy.misspec.assumed_noise = gaussian
//! policy.misspec.assumed_model = tm
//! ```
//!
//! A `policies` entry is either a built-in name or `label:name`. Built-in
//! names: `colstim`, `colstim-sgd`, `colstim-mle`, `sup-colstim`, `maxinp`,
//! `maxinp-mle`, `dts`, `ss`, `random`. Per-policy keys are `estimator`,
//! `assumed_noise`, `assumed_scale`, `assumed_model`, `c1`, `c2`,
//! `c_thresh`, `tau`, `coupling` (`practical`, `theory` or a constant
//! probability), `learning_rate`, `t0`, `eta` and `alpha`.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::schedule::{
    default_hyperparams, full_mle, maxinp_defaults, practical_sgd, sup_colstim_theory_c1, HyperMode,
    PRACTICAL_LEARNING_RATE,
};
use crate::environment::Scenario;
use crate::error::{Error, Result};
use crate::estimation::EstimatorMode;
use crate::lst::{ComparisonKind, ComparisonModel, PerturbationDistribution, PerturbationKind};
use crate::policies::{CouplingSchedule, HyperParams, MaxInpParams, DTS_ALPHA};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorChoice {
    Sgd,
    Mle,
}

impl FromStr for EstimatorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(EstimatorChoice::Sgd),
            "mle" | "full-mle" | "fullmle" => Ok(EstimatorChoice::Mle),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Colstim,
    SupColstim,
    MaxInP,
    Dts,
    SelfSparring,
    Random,
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Colstim => "colstim",
            PolicyKind::SupColstim => "sup-colstim",
            PolicyKind::MaxInP => "maxinp",
            PolicyKind::Dts => "dts",
            PolicyKind::SelfSparring => "ss",
            PolicyKind::Random => "random",
        })
    }
}

/// Coupling choice for a CoLSTIM-family policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingChoice {
    Practical,
    Theory,
    Constant(f64),
}

/// One policy in an experiment, with optional overrides of the
/// experiment-wide defaults.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolicySpec {
    pub label: String,
    pub kind: Option<PolicyKind>,
    pub estimator: Option<EstimatorChoice>,
    pub assumed_noise: Option<PerturbationKind>,
    pub assumed_scale: Option<f64>,
    pub assumed_model: Option<ComparisonKind>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c_thresh: Option<f64>,
    pub tau: Option<usize>,
    pub coupling: Option<CouplingChoice>,
    pub learning_rate: Option<f64>,
    pub t0: Option<usize>,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
}

impl PolicySpec {
    /// Resolves a built-in name such as `colstim-mle` to a spec labelled `label`.
    pub fn builtin(label: &str, name: &str) -> Result<Self> {
        let (kind, estimator) = match name.to_ascii_lowercase().as_str() {
            "colstim" => (PolicyKind::Colstim, None),
            "colstim-sgd" => (PolicyKind::Colstim, Some(EstimatorChoice::Sgd)),
            "colstim-mle" => (PolicyKind::Colstim, Some(EstimatorChoice::Mle)),
            "sup-colstim" | "supcolstim" => (PolicyKind::SupColstim, None),
            "maxinp" => (PolicyKind::MaxInP, None),
            "maxinp-sgd" => (PolicyKind::MaxInP, Some(EstimatorChoice::Sgd)),
            "maxinp-mle" => (PolicyKind::MaxInP, Some(EstimatorChoice::Mle)),
            "dts" => (PolicyKind::Dts, None),
            "ss" | "self-sparring" => (PolicyKind::SelfSparring, None),
            "random" => (PolicyKind::Random, None),
            other => return Err(Error::Config(format!("unknown policy '{other}'"))),
        };
        Ok(Self { label: label.to_string(), kind: Some(kind), estimator, ..Default::default() })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind.expect("policy kind is set by the parser")
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "estimator" => self.estimator = Some(value.parse()?),
            "assumed_noise" => self.assumed_noise = Some(parse_noise(value)?),
            "assumed_scale" => self.assumed_scale = Some(parse_num(key, value)?),
            "assumed_model" => self.assumed_model = Some(parse_model(value)?),
            "c1" => self.c1 = Some(parse_num(key, value)?),
            "c2" => self.c2 = Some(parse_num(key, value)?),
            "c_thresh" => self.c_thresh = Some(parse_num(key, value)?),
            "tau" => self.tau = Some(parse_num(key, value)?),
            "coupling" => {
                self.coupling = Some(match value.to_ascii_lowercase().as_str() {
                    "practical" => CouplingChoice::Practical,
                    "theory" => CouplingChoice::Theory,
                    v => CouplingChoice::Constant(parse_num(key, v)?),
                })
            }
            "learning_rate" => self.learning_rate = Some(parse_num(key, value)?),
            "t0" => self.t0 = Some(parse_num(key, value)?),
            "eta" => self.eta = Some(parse_num(key, value)?),
            "alpha" => self.alpha = Some(parse_num(key, value)?),
            other => return Err(Error::Config(format!("unknown policy key '{other}'"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub d: usize,
    pub horizon: usize,
    pub runs: usize,
    pub policies: Vec<PolicySpec>,
    pub true_noise: PerturbationDistribution,
    pub assumed_noise: PerturbationDistribution,
    /// `None` means the model induced by `assumed_noise`.
    pub assumed_model: Option<ComparisonKind>,
    pub estimator: EstimatorChoice,
    pub hyper_mode: HyperMode,
    pub mu: f64,
    pub rho: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let gumbel = PerturbationDistribution::standard(PerturbationKind::Gumbel);
        Self {
            scenario: Scenario::Easy,
            n: 20,
            d: 5,
            horizon: 5000,
            runs: 30,
            policies: Vec::new(),
            true_noise: gumbel,
            assumed_noise: gumbel,
            assumed_model: None,
            estimator: EstimatorChoice::Sgd,
            hyper_mode: HyperMode::Practical,
            mu: 0.1,
            rho: 0.5,
            seed: 0,
            output: None,
        }
    }
}

/// Fully resolved per-policy parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyParams {
    Colstim(HyperParams),
    SupColstim(HyperParams),
    MaxInP(MaxInpParams),
    Dts { alpha: f64 },
    SelfSparring,
    Random,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        text.parse()
    }

    /// Adds a built-in policy labelled with its own name.
    pub fn with_policy(mut self, name: &str) -> Result<Self> {
        self.policies.push(PolicySpec::builtin(name, name)?);
        Ok(self)
    }

    pub fn true_model(&self) -> ComparisonModel {
        self.true_noise.induced_model()
    }

    /// Checks ranges and that every policy's initial phase is shorter than the horizon.
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::Config(format!("need at least 2 arms, got {}", self.n)));
        }
        if self.d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if self.scenario == Scenario::Custom {
            return Err(Error::Config("experiments sample theta*; use easy, medium or hard".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("no policies configured".into()));
        }
        let mut seen = HashMap::new();
        for p in &self.policies {
            if seen.insert(p.label.as_str(), ()).is_some() {
                return Err(Error::Config(format!("duplicate policy label '{}'", p.label)));
            }
            if p.label.contains(',') || p.label.contains('"') {
                return Err(Error::Config(format!("policy label '{}' must not contain ',' or '\"'", p.label)));
            }
            let initial = match self.resolve(p)? {
                PolicyParams::Colstim(hp) | PolicyParams::SupColstim(hp) => hp.tau,
                PolicyParams::MaxInP(mp) => mp.t0,
                _ => 0,
            };
            if self.horizon <= initial {
                return Err(Error::Config(format!(
                    "policy '{}': horizon {} must exceed its {initial} initial rounds",
                    p.label, self.horizon
                )));
            }
        }
        Ok(())
    }

    fn estimator_mode(&self, choice: EstimatorChoice, learning_rate: Option<f64>) -> EstimatorMode {
        match choice {
            EstimatorChoice::Mle => full_mle(self.d),
            EstimatorChoice::Sgd => match practical_sgd(self.d) {
                EstimatorMode::Sgd { domain_radius, .. } => EstimatorMode::Sgd {
                    learning_rate: learning_rate.unwrap_or(PRACTICAL_LEARNING_RATE),
                    domain_radius,
                },
                other => other,
            },
        }
    }

    /// Resolves a policy spec against the experiment defaults.
    pub fn resolve(&self, spec: &PolicySpec) -> Result<PolicyParams> {
        let kind = spec.kind.ok_or_else(|| Error::Config(format!("policy '{}' has no kind", spec.label)))?;
        let config_err = |e: Error| Error::Config(format!("policy '{}': {e}", spec.label));
        let default_choice = match self.hyper_mode {
            HyperMode::Practical => self.estimator,
            HyperMode::Theory => EstimatorChoice::Mle,
        };
        let estimator = self.estimator_mode(spec.estimator.unwrap_or(default_choice), spec.learning_rate);
        Ok(match kind {
            PolicyKind::Colstim | PolicyKind::SupColstim => {
                let mut hp = default_hyperparams(self.hyper_mode, self.horizon, self.d, self.n, self.mu, self.rho)
                    .map_err(config_err)?;
                if kind == PolicyKind::SupColstim && self.hyper_mode == HyperMode::Theory {
                    let c1 = sup_colstim_theory_c1(self.n, self.horizon, self.mu);
                    hp.c1 = c1;
                    hp.c2 = c1;
                    hp.c_thresh = c1 / 2.0;
                }
                let noise_kind = spec.assumed_noise.unwrap_or(self.assumed_noise.kind());
                let scale = spec.assumed_scale.unwrap_or(self.assumed_noise.scale());
                hp.perturbation = PerturbationDistribution::new(noise_kind, 0.0, scale).map_err(config_err)?;
                hp.assumed_model = match spec.assumed_model.or(self.assumed_model) {
                    Some(k) => ComparisonModel::new(k, scale).map_err(config_err)?,
                    None => hp.perturbation.induced_model(),
                };
                hp.estimator = estimator;
                if let Some(v) = spec.c1 {
                    hp.c1 = v;
                    hp.c2 = spec.c2.unwrap_or(v);
                    hp.c_thresh = spec.c_thresh.unwrap_or(if hp.relaxed_threshold { v } else { v / 2.0 });
                }
                if let Some(v) = spec.c2 {
                    hp.c2 = v;
                }
                if let Some(v) = spec.c_thresh {
                    hp.c_thresh = v;
                }
                if let Some(v) = spec.tau {
                    hp.tau = v;
                }
                hp.coupling = match spec.coupling {
                    Some(CouplingChoice::Constant(p)) => CouplingSchedule::Constant(p),
                    Some(CouplingChoice::Practical) => {
                        CouplingSchedule::Practical { d: self.d, horizon: self.horizon, tau: hp.tau }
                    }
                    Some(CouplingChoice::Theory) => CouplingSchedule::Theory {
                        d: self.d,
                        horizon: self.horizon,
                        tau: hp.tau,
                        c1: hp.c1,
                        c2: hp.c2,
                    },
                    None => match hp.coupling {
                        CouplingSchedule::Practical { d, horizon, .. } => {
                            CouplingSchedule::Practical { d, horizon, tau: hp.tau }
                        }
                        CouplingSchedule::Theory { d, horizon, .. } => {
                            CouplingSchedule::Theory { d, horizon, tau: hp.tau, c1: hp.c1, c2: hp.c2 }
                        }
                        other => other,
                    },
                };
                hp.validate().map_err(config_err)?;
                if kind == PolicyKind::Colstim {
                    PolicyParams::Colstim(hp)
                } else {
                    PolicyParams::SupColstim(hp)
                }
            }
            PolicyKind::MaxInP => {
                let mut mp = maxinp_defaults(self.n, self.d, self.horizon);
                mp.estimator = estimator;
                if let Some(v) = spec.t0 {
                    mp.t0 = v;
                }
                if let Some(v) = spec.eta {
                    mp.eta = v;
                }
                PolicyParams::MaxInP(mp)
            }
            PolicyKind::Dts => PolicyParams::Dts { alpha: spec.alpha.unwrap_or(DTS_ALPHA) },
            PolicyKind::SelfSparring => PolicyParams::SelfSparring,
            PolicyKind::Random => PolicyParams::Random,
        })
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut overrides: Vec<(usize, String, String, String)> = Vec::new();
        let mut true_scale = None;
        let mut assumed_scale = None;
        let mut true_kind = cfg.true_noise.kind();
        let mut assumed_kind = None;
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected 'key = value'")))?;
            let (key, value) = (key.trim(), value.trim());
            let at = |e: Error| match e {
                Error::Config(m) | Error::Parameter(m) => Error::Config(format!("line {lineno}: {m}")),
                other => Error::Config(format!("line {lineno}: {other}")),
            };
            if let Some(rest) = key.strip_prefix("policy.") {
                let (label, sub) = rest
                    .rsplit_once('.')
                    .ok_or_else(|| Error::Config(format!("line {lineno}: expected policy.<label>.<key>")))?;
                overrides.push((lineno, label.to_string(), sub.to_string(), value.to_string()));
                continue;
            }
            match key {
                "scenario" => cfg.scenario = value.parse().map_err(at)?,
                "n" => cfg.n = parse_num(key, value).map_err(at)?,
                "d" => cfg.d = parse_num(key, value).map_err(at)?,
                "horizon" | "T" => cfg.horizon = parse_num(key, value).map_err(at)?,
                "runs" => cfg.runs = parse_num(key, value).map_err(at)?,
                "policies" => {
                    cfg.policies = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|entry| match entry.split_once(':') {
                            Some((label, name)) => PolicySpec::builtin(label.trim(), name.trim()),
                            None => PolicySpec::builtin(entry, entry),
                        })
                        .collect::<Result<_>>()
                        .map_err(at)?
                }
                "true_noise" => true_kind = parse_noise(value).map_err(at)?,
                "true_scale" => true_scale = Some(parse_num::<f64>(key, value).map_err(at)?),
                "assumed_noise" => assumed_kind = Some(parse_noise(value).map_err(at)?),
                "assumed_scale" => assumed_scale = Some(parse_num::<f64>(key, value).map_err(at)?),
                "assumed_model" => cfg.assumed_model = Some(parse_model(value).map_err(at)?),
                "estimator" => cfg.estimator = value.parse().map_err(at)?,
                "hyper_mode" => cfg.hyper_mode = value.parse().map_err(at)?,
                "mu" => cfg.mu = parse_num(key, value).map_err(at)?,
                "rho" => cfg.rho = parse_num(key, value).map_err(at)?,
                "seed" => cfg.seed = parse_num(key, value).map_err(at)?,
                "output" => cfg.output = Some(PathBuf::from(value)),
                other => return Err(Error::Config(format!("line {lineno}: unknown key '{other}'"))),
            }
        }
        let noise = |kind, scale: Option<f64>| {
            PerturbationDistribution::new(kind, 0.0, scale.unwrap_or(1.0)).map_err(|e| Error::Config(e.to_string()))
        };
        cfg.true_noise = noise(true_kind, true_scale)?;
        cfg.assumed_noise = noise(assumed_kind.unwrap_or(true_kind), assumed_scale.or(true_scale))?;
        for (lineno, label, key, value) in overrides {
            let spec = cfg
                .policies
                .iter_mut()
                .find(|p| p.label == label)
                .ok_or_else(|| Error::Config(format!("line {lineno}: no policy labelled '{label}'")))?;
            spec.set(&key, &value).map_err(|e| Error::Config(format!("line {lineno}: {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

pub(crate) fn parse_noise(value: &str) -> Result<PerturbationKind> {
    value.parse().map_err(as_config)
}

pub(crate) fn parse_model(value: &str) -> Result<ComparisonKind> {
    value.parse().map_err(as_config)
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Parameter(m) => Error::Config(m),
        other => other,
    }
}
