use crate::error::{Error, Result};
use crate::estimation::EstimatorMode;
use crate::gram::DEFAULT_RIDGE;
use crate::lst::{ComparisonModel, PerturbationDistribution};

/// Coupling probability `p_t`: the chance that round `t` draws independent
/// per-arm perturbations rather than one shared draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSchedule {
    /// `min(1, sqrt(2d) / (2 sqrt(t - tau)) (3 c1 + c2) sqrt(ln(2T/d)))`
    Theory { d: usize, horizon: usize, tau: usize, c1: f64, c2: f64 },
    /// `min(1, d / sqrt(t - tau) ln(d T))`
    Practical { d: usize, horizon: usize, tau: usize },
    Constant(f64),
}

impl CouplingSchedule {
    /// `p_t` for the 1-based round `t`. Rounds inside the exploration phase
    /// get `1`.
    pub fn probability(&self, t: usize) -> f64 {
        let p = match *self {
            CouplingSchedule::Theory { d, horizon, tau, c1, c2 } => {
                if t <= tau {
                    return 1.0;
                }
                let d = d as f64;
                let since = (t - tau) as f64;
                (2.0 * d).sqrt() / (2.0 * since.sqrt())
                    * (3.0 * c1 + c2)
                    * (2.0 * horizon as f64 / d).ln().max(0.0).sqrt()
            }
            CouplingSchedule::Practical { d, horizon, tau } => {
                if t <= tau {
                    return 1.0;
                }
                let d = d as f64;
                d / ((t - tau) as f64).sqrt() * (d * horizon as f64).ln()
            }
            CouplingSchedule::Constant(p) => p,
        };
        p.clamp(0.0, 1.0)
    }
}

/// Constants from the smoothness and span assumptions, used only by the
/// theory-mode schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    /// Lower bound on `F'` over the relevant region.
    pub mu: f64,
    /// Lower bound on the smallest eigenvalue of the spanning contexts.
    pub rho: f64,
}

/// Hyperparameters shared by CoLSTIM and Sup-CoLSTIM.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// Confidence width constant.
    pub c1: f64,
    pub c2: f64,
    /// Truncation threshold for perturbation draws.
    pub c_thresh: f64,
    /// Number of uniformly random exploration rounds.
    pub tau: usize,
    pub coupling: CouplingSchedule,
    pub perturbation: PerturbationDistribution,
    pub assumed_model: ComparisonModel,
    pub estimator: EstimatorMode,
    pub ridge: f64,
    pub theory_constants: Option<TheoryConstants>,
    /// Allows `c_thresh == c2`, the experimental setting that breaks the
    /// strict ordering the regret analysis asks for.
    pub relaxed_threshold: bool,
}

impl HyperParams {
    /// Builds and validates `0 < c_thresh < c2 <= c1`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c1: f64,
        c2: f64,
        c_thresh: f64,
        tau: usize,
        coupling: CouplingSchedule,
        perturbation: PerturbationDistribution,
        assumed_model: ComparisonModel,
        estimator: EstimatorMode,
    ) -> Result<Self> {
        let hp = Self {
            c1,
            c2,
            c_thresh,
            tau,
            coupling,
            perturbation,
            assumed_model,
            estimator,
            ridge: DEFAULT_RIDGE,
            theory_constants: None,
            relaxed_threshold: false,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.c1, self.c2, self.c_thresh, self.ridge].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Parameter("hyperparameters must be finite".into()));
        }
        let threshold_ok = if self.relaxed_threshold {
            self.c_thresh <= self.c2
        } else {
            self.c_thresh < self.c2
        };
        if !(self.c_thresh > 0.0 && threshold_ok && self.c2 <= self.c1) {
            return Err(Error::Parameter(format!(
                "need 0 < c_thresh {} c2 <= c1, got c_thresh={}, c2={}, c1={}",
                if self.relaxed_threshold { "<=" } else { "<" },
                self.c_thresh,
                self.c2,
                self.c1
            )));
        }
        if self.ridge <= 0.0 {
            return Err(Error::Parameter(format!("ridge must be positive, got {}", self.ridge)));
        }
        if let CouplingSchedule::Constant(p) = self.coupling {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parameter(format!("coupling probability {p} outside [0, 1]")));
            }
        }
        if let Some(tc) = self.theory_constants {
            if !(tc.mu > 0.0 && tc.rho > 0.0) {
                return Err(Error::Parameter("theory constants mu and rho must be positive".into()));
            }
        }
        Ok(())
    }
}
