//! CoLSTIM: imitate the LST choice process with perturbed utility estimates.
//!
//! After `tau` uniformly random exploration rounds, each round
//! 1. draws `B_t ~ Ber(p_t)`; with `B_t = 1` every arm gets its own draw from
//!    `G`, otherwise one draw is shared by all arms (coupling),
//! 2. truncates the draws to `[-c_thresh, c_thresh]`,
//! 3. picks the first arm by `argmax <x_i, theta> + eps_i |x_i|_{M^-1}`,
//! 4. picks its toughest competitor by
//!    `argmax_k <x_k - x_i, theta> + c1 |x_i - x_k|_{M^-1}` over all arms,
//!    which may be the first arm itself.

use rand::Rng;

use super::{argmax_lowest, check_arms, check_pair, random_select, DuelPolicy, HyperParams};
use crate::environment::ContextMatrix;
use crate::error::{Error, Result};
use crate::estimation::OnlineEstimator;
use crate::gram::GramState;
use crate::lst::{dot, truncate_perturbation, DuelObservation};
use crate::stream::{stream_from_seed, Stream};

/// What happened in the most recent `select`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelectionDiagnostics {
    /// 1-based round.
    pub round: usize,
    /// `true` while still in the random exploration phase.
    pub exploring: bool,
    pub coupling_probability: f64,
    /// `true` when `B_t = 0` and one draw was shared by all arms.
    pub coupled: bool,
    /// Truncated perturbation per arm (empty while exploring).
    pub perturbations: Vec<f64>,
}

/// First arm: `argmax_{k in arms} <x_k, theta> + eps_k |x_k|_{M^-1}`.
pub fn first_arm(ctx: &ContextMatrix, arms: &[usize], theta: &[f64], gram: &GramState, eps: &[f64]) -> usize {
    argmax_lowest(
        arms.iter()
            .map(|&k| (k, dot(ctx.arm(k), theta) + eps[k] * gram.norm_unchecked(ctx.arm(k)))),
    )
    .expect("candidate arm set is non-empty")
}

/// Second arm: `argmax_{k in arms} <x_k - x_first, theta> + c1 |x_first - x_k|_{M^-1}`.
pub fn second_arm(
    ctx: &ContextMatrix,
    arms: &[usize],
    theta: &[f64],
    gram: &GramState,
    c1: f64,
    first: usize,
) -> usize {
    let base = dot(ctx.arm(first), theta);
    argmax_lowest(arms.iter().map(|&k| {
        let gap = dot(ctx.arm(k), theta) - base;
        (k, gap + c1 * gram.diff_norm_unchecked(ctx.arm(first), ctx.arm(k)))
    }))
    .expect("candidate arm set is non-empty")
}

/// Draws `B_t` and the truncated per-arm perturbations for round `t`.
pub(crate) fn draw_perturbations(hyper: &HyperParams, t: usize, n: usize, rng: &mut Stream) -> (f64, bool, Vec<f64>) {
    let p = hyper.coupling.probability(t);
    let independent = rng.random::<f64>() < p;
    let eps = if independent {
        (0..n)
            .map(|_| truncate_perturbation(hyper.perturbation.sample(rng), hyper.c_thresh))
            .collect()
    } else {
        let shared = truncate_perturbation(hyper.perturbation.sample(rng), hyper.c_thresh);
        vec![shared; n]
    };
    (p, !independent, eps)
}

#[derive(Debug, Clone)]
pub struct Colstim {
    n: usize,
    d: usize,
    hyper: HyperParams,
    arms: Vec<usize>,
    rounds_done: usize,
    gram: GramState,
    estimator: OnlineEstimator,
    stream: Stream,
    last: SelectionDiagnostics,
}

impl Colstim {
    pub fn new(hyper: HyperParams, n: usize, d: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 arms, got {n}")));
        }
        hyper.validate()?;
        let gram = GramState::new(d, hyper.ridge)?;
        let estimator = OnlineEstimator::new(d, hyper.assumed_model, hyper.estimator)?;
        Ok(Self {
            n,
            d,
            hyper,
            arms: (0..n).collect(),
            rounds_done: 0,
            gram,
            estimator,
            stream: stream_from_seed(seed),
            last: SelectionDiagnostics::default(),
        })
    }

    /// Plays the remaining exploration rounds against `env`, which receives
    /// the random pair and returns that round's context and whether the
    /// first arm won.
    pub fn initialize<F>(&mut self, mut env: F) -> Result<()>
    where
        F: FnMut((usize, usize)) -> Result<(ContextMatrix, bool)>,
    {
        while self.in_exploration() {
            let pair = random_select(self.n, &mut self.stream)?;
            let (ctx, first_won) = env(pair)?;
            check_arms(&ctx, self.n)?;
            self.update(&ctx, pair, first_won)?;
        }
        Ok(())
    }

    pub fn in_exploration(&self) -> bool {
        self.rounds_done < self.hyper.tau
    }

    pub fn rounds_done(&self) -> usize {
        self.rounds_done
    }

    pub fn estimate(&self) -> &[f64] {
        self.estimator.theta()
    }

    pub fn gram(&self) -> &GramState {
        &self.gram
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    pub fn estimator(&self) -> &OnlineEstimator {
        &self.estimator
    }

    pub fn diagnostics(&self) -> &SelectionDiagnostics {
        &self.last
    }
}

impl DuelPolicy for Colstim {
    fn select(&mut self, ctx: &ContextMatrix) -> Result<(usize, usize)> {
        check_arms(ctx, self.n)?;
        let t = self.rounds_done + 1;
        if self.in_exploration() {
            self.last = SelectionDiagnostics { round: t, exploring: true, coupling_probability: 1.0, ..Default::default() };
            return random_select(self.n, &mut self.stream);
        }
        let (p, coupled, eps) = draw_perturbations(&self.hyper, t, self.n, &mut self.stream);
        let theta = self.estimator.theta();
        let i = first_arm(ctx, &self.arms, theta, &self.gram, &eps);
        let j = second_arm(ctx, &self.arms, theta, &self.gram, self.hyper.c1, i);
        self.last = SelectionDiagnostics { round: t, exploring: false, coupling_probability: p, coupled, perturbations: eps };
        Ok((i, j))
    }

    fn update(&mut self, ctx: &ContextMatrix, pair: (usize, usize), first_won: bool) -> Result<()> {
        check_arms(ctx, self.n)?;
        check_pair(self.n, pair)?;
        let z = ctx.contrast(pair.0, pair.1)?;
        debug_assert_eq!(z.len(), self.d);
        self.gram.rank_one_update(&z)?;
        self.rounds_done += 1;
        self.estimator.push(DuelObservation {
            round: self.rounds_done,
            first: pair.0,
            second: pair.1,
            contrast: z,
            outcome: first_won,
        })?;
        if !self.in_exploration() {
            self.estimator.refresh()?;
        }
        Ok(())
    }

    fn estimator_ns(&self) -> u64 {
        self.estimator.elapsed_ns()
    }
}
