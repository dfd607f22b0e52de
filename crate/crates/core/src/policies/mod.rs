//! Arm-pair selection policies behind a common select/update interface.
//!
//! Every policy owns its random stream, so a policy's action sequence is a
//! deterministic function of its seed, the contexts and the feedback it sees.
//! Argmax ties resolve to the lowest arm index unless a baseline's own
//! definition says otherwise.

mod colstim;
mod dts;
mod hyper;
mod maxinp;
mod self_sparring;
mod sup_colstim;

pub use colstim::{first_arm, second_arm, Colstim, SelectionDiagnostics};
pub use dts::{DoubleThompson, DTS_ALPHA};
pub use hyper::{CouplingSchedule, HyperParams, TheoryConstants};
pub use maxinp::{MaxInP, MaxInpParams};
pub use self_sparring::SelfSparring;
pub use sup_colstim::{Branch, StageTrace, SupColstim};

use rand::Rng;

use crate::environment::ContextMatrix;
use crate::error::{Error, Result};
use crate::stream::{stream_from_seed, Stream};

/// The interface the experiment harness drives.
pub trait DuelPolicy: Send {
    /// Chooses the pair `(first, second)` to duel in this context.
    fn select(&mut self, ctx: &ContextMatrix) -> Result<(usize, usize)>;

    /// Feeds back the outcome of the pair returned by the last `select`.
    /// `first_won` is `true` when `pair.0` beat `pair.1`.
    fn update(&mut self, ctx: &ContextMatrix, pair: (usize, usize), first_won: bool) -> Result<()>;

    /// Cumulative wall time spent inside weight estimation.
    fn estimator_ns(&self) -> u64 {
        0
    }
}

/// Uniformly random unordered pair of distinct arms, returned as `(lo, hi)`.
pub fn random_select<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(usize, usize)> {
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 arms, got {n}")));
    }
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    Ok((i.min(j), i.max(j)))
}

/// Picks a uniformly random pair each round and ignores feedback.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    n: usize,
    stream: Stream,
}

impl RandomPolicy {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 arms, got {n}")));
        }
        Ok(Self { n, stream: stream_from_seed(seed) })
    }
}

impl DuelPolicy for RandomPolicy {
    fn select(&mut self, ctx: &ContextMatrix) -> Result<(usize, usize)> {
        check_arms(ctx, self.n)?;
        random_select(self.n, &mut self.stream)
    }

    fn update(&mut self, _ctx: &ContextMatrix, _pair: (usize, usize), _first_won: bool) -> Result<()> {
        Ok(())
    }
}

pub(crate) fn check_arms(ctx: &ContextMatrix, n: usize) -> Result<()> {
    if ctx.n() != n {
        return Err(Error::Parameter(format!("context has {} arms, policy expects {n}", ctx.n())));
    }
    Ok(())
}

pub(crate) fn check_pair(n: usize, pair: (usize, usize)) -> Result<()> {
    for k in [pair.0, pair.1] {
        if k >= n {
            return Err(Error::ArmIndex { index: k, n });
        }
    }
    Ok(())
}

/// Index of the largest score; the lowest index wins ties.
pub(crate) fn argmax_lowest<I: IntoIterator<Item = (usize, f64)>>(scores: I) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in scores {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((k, s)),
        }
    }
    best.map(|(k, _)| k)
}
