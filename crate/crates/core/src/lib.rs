//! Simulation library for contextual dueling bandits under linear stochastic
//! transitivity.
//!
//! A round shows the learner one context vector per arm; it picks two arms,
//! and the environment reports which one won. Arm `k` has utility
//! `<x_k, theta*>` and the win probability of `i` over `j` is `F(u_i - u_j)`
//! for a comparison function `F` (see [`lst`]).

pub mod environment;
pub mod error;
pub mod estimation;
pub mod gram;
pub mod harness;
pub mod lst;
pub mod policies;
pub mod stream;

pub use environment::{ContextMatrix, ProblemInstance, Regret, RegretLedger, Scenario};
pub use error::{Error, Result};
pub use estimation::{fit_mle, EstimatorMode, MleFit, MleOptions, OnlineEstimator};
pub use gram::GramState;
pub use lst::{
    ComparisonKind, ComparisonModel, DuelObservation, PerturbationDistribution, PerturbationKind,
};
pub use policies::{
    Colstim, CouplingSchedule, DoubleThompson, DuelPolicy, HyperParams, MaxInP, MaxInpParams,
    RandomPolicy, SelfSparring, SupColstim,
};
