//! Default hyperparameter schedules.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimation::{EstimatorMode, MleOptions};
use crate::gram::DEFAULT_RIDGE;
use crate::lst::{ComparisonModel, PerturbationDistribution, PerturbationKind};
use crate::policies::{CouplingSchedule, HyperParams, MaxInpParams, TheoryConstants};

/// SGD learning rate used by the practical schedules.
pub const PRACTICAL_LEARNING_RATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperMode {
    /// Constants for which the regret bounds hold.
    Theory,
    /// The simplified constants used in simulations.
    Practical,
}

impl fmt::Display for HyperMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HyperMode::Theory => "theory",
            HyperMode::Practical => "practical",
        })
    }
}

impl FromStr for HyperMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "theory" => Ok(HyperMode::Theory),
            "practical" => Ok(HyperMode::Practical),
            other => Err(Error::Parameter(format!("unknown hyperparameter mode '{other}'"))),
        }
    }
}

/// SGD with the practical learning rate, projected onto the radius-`sqrt(d)` ball.
pub fn practical_sgd(d: usize) -> EstimatorMode {
    EstimatorMode::Sgd { learning_rate: PRACTICAL_LEARNING_RATE, domain_radius: (d.max(1) as f64).sqrt() }
}

/// Full MLE refits with [`MleOptions::for_dim`].
pub fn full_mle(d: usize) -> EstimatorMode {
    EstimatorMode::FullMle(MleOptions::for_dim(d))
}

/// CoLSTIM hyperparameters for horizon `T`, dimension `d` and `n` arms.
///
/// Practical: `tau = d n`, `c1 = c2 = c_thresh = sqrt(d ln T)` (the relaxed
/// threshold flag is set), `p_t = min(1, d / sqrt(t - tau) ln(d T))`, SGD.
///
/// Theory: `c1 = c2 = sqrt(d ln(T/d) + 2 ln T) / (2 mu)`, `c_thresh = c2 / 2`,
/// `tau = ceil(d + max(d^2 ln T / (mu^2 rho), d / rho))`, the matching
/// coupling schedule and full MLE. `mu` and `rho` are ignored in practical mode.
///
/// Both modes use standard Gumbel perturbations and the logistic link.
pub fn default_hyperparams(
    mode: HyperMode,
    horizon: usize,
    d: usize,
    n: usize,
    mu: f64,
    rho: f64,
) -> Result<HyperParams> {
    if horizon <= d {
        return Err(Error::Parameter(format!("horizon {horizon} must exceed the dimension {d}")));
    }
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 arms, got {n}")));
    }
    let t = horizon as f64;
    let df = d as f64;
    let perturbation = PerturbationDistribution::standard(PerturbationKind::Gumbel);
    let model = ComparisonModel::btl();
    match mode {
        HyperMode::Practical => {
            let c = (df * t.ln()).sqrt();
            let tau = d * n;
            let hp = HyperParams {
                c1: c,
                c2: c,
                c_thresh: c,
                tau,
                coupling: CouplingSchedule::Practical { d, horizon, tau },
                perturbation,
                assumed_model: model,
                estimator: practical_sgd(d),
                ridge: DEFAULT_RIDGE,
                theory_constants: None,
                relaxed_threshold: true,
            };
            hp.validate()?;
            Ok(hp)
        }
        HyperMode::Theory => {
            if !(mu.is_finite() && mu > 0.0 && rho.is_finite() && rho > 0.0) {
                return Err(Error::Parameter(format!("theory mode needs mu, rho > 0, got mu={mu}, rho={rho}")));
            }
            let c1 = (df * (t / df).ln() + 2.0 * t.ln()).sqrt() / (2.0 * mu);
            let tau = (df + (df * df * t.ln() / (mu * mu * rho)).max(df / rho)).ceil() as usize;
            let mut hp = HyperParams::new(
                c1,
                c1,
                c1 / 2.0,
                tau,
                CouplingSchedule::Theory { d, horizon, tau, c1, c2: c1 },
                perturbation,
                model,
                full_mle(d),
            )?;
            hp.theory_constants = Some(TheoryConstants { mu, rho });
            Ok(hp)
        }
    }
}

/// Theory-mode confidence constant for Sup-CoLSTIM: `3 / (2 mu) sqrt(2 ln(3 n T^2))`.
pub fn sup_colstim_theory_c1(n: usize, horizon: usize, mu: f64) -> f64 {
    let t = horizon as f64;
    3.0 / (2.0 * mu) * (2.0 * (3.0 * n as f64 * t * t).ln()).sqrt()
}

/// MaxInP with `t0 = d n`, `eta = sqrt(d ln T)` and practical SGD.
pub fn maxinp_defaults(n: usize, d: usize, horizon: usize) -> MaxInpParams {
    MaxInpParams::practical(n, d, horizon, practical_sgd(d))
}
