//! Sup-CoLSTIM: CoLSTIM embedded in a stage-wise elimination scheme.
//!
//! Stage `s` keeps its own Gram matrix and estimate, fed only by the rounds
//! assigned to it (plus the shared exploration prefix). Each round walks the
//! stages from `s = 1` with the active set `A = [n]`:
//! * every width `c1 |x_i - x_j|_{M_s^-1}` on `A` is at most `1/sqrt(T)`:
//!   choose CoLSTIM-style inside `A` and file the round under stage 0;
//! * every width is at most `2^-s`: keep the arms within `2^-s` of the best
//!   estimated utility and move to stage `s + 1`;
//! * otherwise play a uniformly random pair whose width exceeds `2^-s` and
//!   file the round under stage `s`.

use rand::Rng;

use super::colstim::{draw_perturbations, first_arm, second_arm};
use super::{check_arms, check_pair, random_select, DuelPolicy, HyperParams};
use crate::environment::ContextMatrix;
use crate::error::{Error, Result};
use crate::estimation::OnlineEstimator;
use crate::gram::GramState;
use crate::lst::{dot, DuelObservation};
use crate::stream::{stream_from_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Exploration,
    /// Perturbed choice; the round joins stage 0.
    Perturbed,
    /// Uniform pair among wide pairs; the round joins this stage.
    Uniform,
    /// Ran past the last stage and fell back to the perturbed choice.
    Overflow,
}

/// Stage walk of the most recent `select`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTrace {
    /// Active-set size at each visited stage, starting with stage 1.
    pub active_sizes: Vec<usize>,
    /// Stage the round was filed under (0 for the perturbed branch).
    pub assigned_stage: usize,
    pub branch: Option<Branch>,
}

#[derive(Debug, Clone)]
struct Stage {
    gram: GramState,
    estimator: OnlineEstimator,
    adaptive_rounds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Assignment {
    Exploration,
    StageZero,
    Stage(usize),
}

#[derive(Debug, Clone)]
pub struct SupColstim {
    n: usize,
    horizon: usize,
    hyper: HyperParams,
    stages: Vec<Stage>,
    stage_zero_rounds: usize,
    rounds_done: usize,
    pending: Option<Assignment>,
    stream: Stream,
    last: StageTrace,
}

impl SupColstim {
    pub fn new(hyper: HyperParams, n: usize, d: usize, horizon: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 arms, got {n}")));
        }
        if horizon < 2 {
            return Err(Error::Parameter(format!("horizon must be at least 2, got {horizon}")));
        }
        hyper.validate()?;
        let stage_count = stage_count(horizon);
        let stages = (0..stage_count)
            .map(|_| {
                Ok(Stage {
                    gram: GramState::new(d, hyper.ridge)?,
                    estimator: OnlineEstimator::new(d, hyper.assumed_model, hyper.estimator)?,
                    adaptive_rounds: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            horizon,
            hyper,
            stages,
            stage_zero_rounds: 0,
            rounds_done: 0,
            pending: None,
            stream: stream_from_seed(seed),
            last: StageTrace::default(),
        })
    }

    /// Number of stages `S = floor(log2 T)`.
    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    /// Rounds filed under stage 0 followed by each stage's adaptive rounds.
    pub fn stage_round_counts(&self) -> Vec<usize> {
        std::iter::once(self.stage_zero_rounds)
            .chain(self.stages.iter().map(|s| s.adaptive_rounds))
            .collect()
    }

    pub fn rounds_done(&self) -> usize {
        self.rounds_done
    }

    pub fn exploration_rounds(&self) -> usize {
        self.hyper.tau.min(self.rounds_done)
    }

    pub fn trace(&self) -> &StageTrace {
        &self.last
    }

    /// Estimate of stage `s` (1-based).
    pub fn stage_estimate(&self, s: usize) -> Option<&[f64]> {
        self.stages.get(s.checked_sub(1)?).map(|st| st.estimator.theta())
    }

    fn in_exploration(&self) -> bool {
        self.rounds_done < self.hyper.tau
    }

    fn perturbed_choice(&mut self, ctx: &ContextMatrix, stage: usize, active: &[usize], t: usize) -> (usize, usize) {
        let (_, _, eps) = draw_perturbations(&self.hyper, t, self.n, &mut self.stream);
        let st = &self.stages[stage - 1];
        let theta = st.estimator.theta();
        let i = first_arm(ctx, active, theta, &st.gram, &eps);
        let j = second_arm(ctx, active, theta, &st.gram, self.hyper.c1, i);
        (i, j)
    }
}

/// `floor(log2 T)` for `T >= 1`.
pub(crate) fn stage_count(horizon: usize) -> usize {
    (usize::BITS - 1 - horizon.leading_zeros()) as usize
}

/// Arms whose estimated utility is within `slack` of the best active arm.
pub(crate) fn shrink_active(utilities: &[f64], active: &[usize], slack: f64) -> Vec<usize> {
    let best = active.iter().map(|&k| utilities[k]).fold(f64::NEG_INFINITY, f64::max);
    active.iter().copied().filter(|&k| utilities[k] + slack >= best).collect()
}

impl DuelPolicy for SupColstim {
    fn select(&mut self, ctx: &ContextMatrix) -> Result<(usize, usize)> {
        check_arms(ctx, self.n)?;
        let t = self.rounds_done + 1;
        if self.in_exploration() {
            self.pending = Some(Assignment::Exploration);
            self.last = StageTrace { branch: Some(Branch::Exploration), ..Default::default() };
            return random_select(self.n, &mut self.stream);
        }
        let floor = 1.0 / (self.horizon as f64).sqrt();
        let mut active: Vec<usize> = (0..self.n).collect();
        let mut trace = StageTrace::default();
        let mut s = 1;
        loop {
            if s > self.stages.len() {
                log::warn!("stage walk passed the last stage in round {t}; using the perturbed choice");
                let pair = self.perturbed_choice(ctx, self.stages.len(), &active, t);
                trace.branch = Some(Branch::Overflow);
                trace.assigned_stage = 0;
                self.pending = Some(Assignment::StageZero);
                self.last = trace;
                return Ok(pair);
            }
            trace.active_sizes.push(active.len());
            let st = &self.stages[s - 1];
            let threshold = 0.5f64.powi(s as i32);
            let mut wide = Vec::new();
            let mut max_width: f64 = 0.0;
            for (a, &i) in active.iter().enumerate() {
                for &j in &active[a + 1..] {
                    let w = self.hyper.c1 * st.gram.diff_norm_unchecked(ctx.arm(i), ctx.arm(j));
                    max_width = max_width.max(w);
                    if w > threshold {
                        wide.push((i, j));
                    }
                }
            }
            if max_width <= floor {
                let pair = self.perturbed_choice(ctx, s, &active, t);
                trace.branch = Some(Branch::Perturbed);
                trace.assigned_stage = 0;
                self.pending = Some(Assignment::StageZero);
                self.last = trace;
                return Ok(pair);
            }
            if wide.is_empty() {
                let theta = st.estimator.theta();
                let utilities: Vec<f64> = (0..self.n).map(|k| dot(ctx.arm(k), theta)).collect();
                active = shrink_active(&utilities, &active, threshold);
                s += 1;
                continue;
            }
            let pair = wide[self.stream.random_range(0..wide.len())];
            trace.branch = Some(Branch::Uniform);
            trace.assigned_stage = s;
            self.pending = Some(Assignment::Stage(s));
            self.last = trace;
            return Ok(pair);
        }
    }

    fn update(&mut self, ctx: &ContextMatrix, pair: (usize, usize), first_won: bool) -> Result<()> {
        check_arms(ctx, self.n)?;
        check_pair(self.n, pair)?;
        let assignment = self
            .pending
            .take()
            .ok_or_else(|| Error::Parameter("update called without a preceding select".into()))?;
        self.rounds_done += 1;
        let z = ctx.contrast(pair.0, pair.1)?;
        let obs = DuelObservation { round: self.rounds_done, first: pair.0, second: pair.1, contrast: z, outcome: first_won };
        match assignment {
            Assignment::Exploration => {
                let finished = !self.in_exploration();
                for st in &mut self.stages {
                    st.gram.rank_one_update(&obs.contrast)?;
                    st.estimator.push(obs.clone())?;
                    if finished {
                        st.estimator.refresh()?;
                    }
                }
            }
            Assignment::StageZero => self.stage_zero_rounds += 1,
            Assignment::Stage(s) => {
                let st = &mut self.stages[s - 1];
                st.gram.rank_one_update(&obs.contrast)?;
                st.estimator.push(obs)?;
                st.estimator.refresh()?;
                st.adaptive_rounds += 1;
            }
        }
        Ok(())
    }

    fn estimator_ns(&self) -> u64 {
        self.stages.iter().map(|s| s.estimator.elapsed_ns()).sum()
    }
}
