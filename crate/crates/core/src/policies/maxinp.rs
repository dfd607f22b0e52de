//! Maximum-Informative-Pair: duel the most uncertain pair among the arms
//! that are not confidently beaten.

use super::{check_arms, check_pair, random_select, DuelPolicy};
use crate::environment::ContextMatrix;
use crate::error::{Error, Result};
use crate::estimation::{EstimatorMode, OnlineEstimator};
use crate::gram::{GramState, DEFAULT_RIDGE};
use crate::lst::{dot, ComparisonModel, DuelObservation};
use crate::stream::{stream_from_seed, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct MaxInpParams {
    /// Random initialisation rounds.
    pub t0: usize,
    /// Confidence multiplier for the promising set.
    pub eta: f64,
    pub model: ComparisonModel,
    pub estimator: EstimatorMode,
    pub ridge: f64,
}

impl MaxInpParams {
    /// `t0 = d n`, `eta = sqrt(d ln T)`, logistic link.
    pub fn practical(n: usize, d: usize, horizon: usize, estimator: EstimatorMode) -> Self {
        Self {
            t0: d * n,
            eta: (d as f64 * (horizon as f64).ln()).sqrt(),
            model: ComparisonModel::btl(),
            estimator,
            ridge: DEFAULT_RIDGE,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaxInP {
    n: usize,
    params: MaxInpParams,
    rounds_done: usize,
    gram: GramState,
    estimator: OnlineEstimator,
    stream: Stream,
    widths: Vec<f64>,
    last_promising: Vec<usize>,
}

impl MaxInP {
    pub fn new(params: MaxInpParams, n: usize, d: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 arms, got {n}")));
        }
        if !(params.eta.is_finite() && params.eta >= 0.0) {
            return Err(Error::Parameter(format!("eta must be non-negative, got {}", params.eta)));
        }
        let gram = GramState::new(d, params.ridge)?;
        let estimator = OnlineEstimator::new(d, params.model, params.estimator)?;
        Ok(Self {
            n,
            params,
            rounds_done: 0,
            gram,
            estimator,
            stream: stream_from_seed(seed),
            widths: vec![0.0; n * n],
            last_promising: Vec::new(),
        })
    }

    pub fn estimate(&self) -> &[f64] {
        self.estimator.theta()
    }

    pub fn gram(&self) -> &GramState {
        &self.gram
    }

    /// Promising set computed by the most recent adaptive `select`.
    pub fn last_promising(&self) -> &[usize] {
        &self.last_promising
    }

    fn in_exploration(&self) -> bool {
        self.rounds_done < self.params.t0
    }
}

/// Promising set `{i : <x_i - x_j, theta> + eta w_ij >= 0 for all j}` and the
/// widest pair inside it (lexicographic order on ties, diagonal included).
pub(crate) fn widest_promising_pair(
    utilities: &[f64],
    widths: &[f64],
    eta: f64,
) -> (Vec<usize>, (usize, usize)) {
    let n = utilities.len();
    let mut promising: Vec<usize> = (0..n)
        .filter(|&i| (0..n).all(|j| utilities[i] - utilities[j] + eta * widths[i * n + j] >= 0.0))
        .collect();
    if promising.is_empty() {
        log::warn!("MaxInP promising set is empty; falling back to all arms");
        promising = (0..n).collect();
    }
    let mut best = (promising[0], promising[0]);
    let mut best_w = f64::NEG_INFINITY;
    for (a, &i) in promising.iter().enumerate() {
        for &j in &promising[a..] {
            let w = widths[i * n + j];
            if w > best_w {
                best_w = w;
                best = (i, j);
            }
        }
    }
    (promising, best)
}

impl DuelPolicy for MaxInP {
    fn select(&mut self, ctx: &ContextMatrix) -> Result<(usize, usize)> {
        check_arms(ctx, self.n)?;
        if self.in_exploration() {
            return random_select(self.n, &mut self.stream);
        }
        let n = self.n;
        let theta = self.estimator.theta();
        let utilities: Vec<f64> = (0..n).map(|k| dot(ctx.arm(k), theta)).collect();
        for i in 0..n {
            self.widths[i * n + i] = 0.0;
            for j in i + 1..n {
                let w = self.gram.diff_norm_unchecked(ctx.arm(i), ctx.arm(j));
                self.widths[i * n + j] = w;
                self.widths[j * n + i] = w;
            }
        }
        let (promising, pair) = widest_promising_pair(&utilities, &self.widths, self.params.eta);
        self.last_promising = promising;
        Ok(pair)
    }

    fn update(&mut self, ctx: &ContextMatrix, pair: (usize, usize), first_won: bool) -> Result<()> {
        check_arms(ctx, self.n)?;
        check_pair(self.n, pair)?;
        let z = ctx.contrast(pair.0, pair.1)?;
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

#[cfg(test)]
mod tests {
    use super::*;

    fn params(t0: usize, eta: f64) -> MaxInpParams {
        MaxInpParams {
            t0,
            eta,
            model: ComparisonModel::btl(),
            estimator: EstimatorMode::Sgd { learning_rate: 0.5, domain_radius: 3.0 },
            ridge: 1.0,
        }
    }

    #[test]
    fn practical_params() {
        let p = MaxInpParams::practical(50, 10, 10_000, EstimatorMode::Sgd { learning_rate: 0.5, domain_radius: 1.0 });
        assert_eq!(p.t0, 500);
        assert!((p.eta - (10.0 * 10_000f64.ln()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identical_contexts_self_duel_first_arm() {
        let mut p = MaxInP::new(params(0, 1.0), 3, 2, 1).unwrap();
        let ctx = ContextMatrix::from_arms(&[vec![0.2, 0.1], vec![0.2, 0.1], vec![0.2, 0.1]]).unwrap();
        assert_eq!(p.select(&ctx).unwrap(), (0, 0));
    }

    #[test]
    fn two_arm_example() {
        let mut p = MaxInP::new(params(0, 1.0), 2, 1, 1).unwrap();
        let ctx = ContextMatrix::from_arms(&[vec![0.5], vec![-0.5]]).unwrap();
        assert_eq!(p.select(&ctx).unwrap(), (0, 1));
        assert_eq!(p.last_promising(), &[0, 1]);
    }

    #[test]
    fn singleton_promising_set_self_duels() {
        let u = [1.0, 0.0, -1.0];
        let widths = vec![0.0; 9];
        let (promising, pair) = widest_promising_pair(&u, &widths, 1.0);
        assert_eq!(promising, vec![0]);
        assert_eq!(pair, (0, 0));
    }

    #[test]
    fn promising_set_contains_the_greedy_arm() {
        let mut s = crate::stream::stream_from_seed(6);
        use rand::Rng;
        for _ in 0..500 {
            let n = 6;
            let u: Vec<f64> = (0..n).map(|_| s.random_range(-1.0..1.0)).collect();
            let mut w = vec![0.0; n * n];
            for i in 0..n {
                for j in i + 1..n {
                    let v = s.random_range(0.0..0.5);
                    w[i * n + j] = v;
                    w[j * n + i] = v;
                }
            }
            let eta = s.random_range(0.0..2.0);
            let (promising, (i, j)) = widest_promising_pair(&u, &w, eta);
            let greedy = super::super::argmax_lowest(u.iter().copied().enumerate()).unwrap();
            assert!(promising.contains(&greedy));
            assert!(promising.contains(&i) && promising.contains(&j));
        }
    }

    #[test]
    fn explores_before_t0() {
        let mut p = MaxInP::new(params(3, 1.0), 4, 1, 2).unwrap();
        let ctx = ContextMatrix::from_arms(&[vec![0.1], vec![0.2], vec![0.3], vec![0.4]]).unwrap();
        for _ in 0..3 {
            let (i, j) = p.select(&ctx).unwrap();
            assert!(i < j);
            p.update(&ctx, (i, j), true).unwrap();
        }
        assert_eq!(p.gram().update_count(), 3);
    }
}
