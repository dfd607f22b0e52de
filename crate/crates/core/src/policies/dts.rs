//! Double Thompson Sampling for (non-contextual) dueling bandits.
//!
//! Each round:
//! 1. RUCB-style bounds `U_ij, L_ij = W_ij/N_ij +- sqrt(alpha ln t / N_ij)`
//!    (with `U = 1, L = 0` for unplayed pairs) give optimistic Copeland
//!    scores; the candidates are the arms with the highest score.
//! 2. One posterior sample `theta_ij ~ Beta(W_ij + 1, W_ji + 1)` per pair;
//!    the first arm is the candidate that beats the most arms in the sample.
//! 3. A fresh sample `theta_i,first` for every arm; the second arm maximises
//!    it among arms with `L_i,first <= 1/2` (the first arm itself scores 1/2).
//!
//! Ties are broken uniformly at random from the policy's stream. Contexts
//! are ignored.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::{check_arms, check_pair, DuelPolicy};
use crate::environment::ContextMatrix;
use crate::error::{Error, Result};
use crate::stream::{stream_from_seed, Stream};

/// Exploration exponent for the confidence bounds.
pub const DTS_ALPHA: f64 = 0.51;

#[derive(Debug, Clone)]
pub struct DoubleThompson {
    n: usize,
    alpha: f64,
    /// `wins[i * n + j]`: times `i` beat `j`.
    wins: Vec<u64>,
    round: usize,
    stream: Stream,
}

impl DoubleThompson {
    pub fn new(n: usize, alpha: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 arms, got {n}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { n, alpha, wins: vec![0; n * n], round: 0, stream: stream_from_seed(seed) })
    }

    pub fn wins(&self, i: usize, j: usize) -> u64 {
        self.wins[i * self.n + j]
    }

    /// Posterior mean of `P(i beats j)` under the `Beta(1 + wins, 1 + losses)` posterior.
    pub fn posterior_mean(&self, i: usize, j: usize) -> f64 {
        let w = self.wins(i, j) as f64;
        let l = self.wins(j, i) as f64;
        (1.0 + w) / (2.0 + w + l)
    }

    fn bounds(&self, i: usize, j: usize, log_t: f64) -> (f64, f64) {
        if i == j {
            return (0.5, 0.5);
        }
        let w = self.wins(i, j) as f64;
        let total = w + self.wins(j, i) as f64;
        if total == 0.0 {
            return (1.0, 0.0);
        }
        let mean = w / total;
        let radius = (self.alpha * log_t / total).sqrt();
        (mean + radius, mean - radius)
    }

    fn beta_sample(&mut self, i: usize, j: usize) -> f64 {
        let a = self.wins(i, j) as f64 + 1.0;
        let b = self.wins(j, i) as f64 + 1.0;
        Beta::new(a, b).expect("beta parameters are >= 1").sample(&mut self.stream)
    }
}

/// Uniformly random index among the maximisers of `score`.
fn argmax_random<R: Rng + ?Sized>(candidates: &[usize], score: impl Fn(usize) -> f64, rng: &mut R) -> usize {
    let best = candidates.iter().map(|&k| score(k)).fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = candidates.iter().copied().filter(|&k| score(k) == best).collect();
    ties[rng.random_range(0..ties.len())]
}

impl DuelPolicy for DoubleThompson {
    fn select(&mut self, ctx: &ContextMatrix) -> Result<(usize, usize)> {
        check_arms(ctx, self.n)?;
        let n = self.n;
        let t = self.round + 1;
        let log_t = (t as f64).ln();

        let copeland: Vec<usize> = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && self.bounds(i, j, log_t).0 > 0.5).count())
            .collect();
        let top = *copeland.iter().max().expect("n >= 2");
        let candidates: Vec<usize> = (0..n).filter(|&i| copeland[i] == top).collect();

        let mut sample = vec![0.5; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = self.beta_sample(i, j);
                sample[i * n + j] = v;
                sample[j * n + i] = 1.0 - v;
            }
        }
        let beats = |i: usize| (0..n).filter(|&j| j != i && sample[i * n + j] > 0.5).count() as f64;
        let first = argmax_random(&candidates, beats, &mut self.stream);

        let mut challenge = vec![0.5; n];
        for i in (0..n).filter(|&i| i != first) {
            challenge[i] = self.beta_sample(i, first);
        }
        let challengers: Vec<usize> = (0..n).filter(|&i| self.bounds(i, first, log_t).1 <= 0.5).collect();
        let second = argmax_random(&challengers, |i| challenge[i], &mut self.stream);
        Ok((first, second))
    }

    fn update(&mut self, ctx: &ContextMatrix, pair: (usize, usize), first_won: bool) -> Result<()> {
        check_arms(ctx, self.n)?;
        check_pair(self.n, pair)?;
        self.round += 1;
        if pair.0 != pair.1 {
            let (winner, loser) = if first_won { pair } else { (pair.1, pair.0) };
            self.wins[winner * self.n + loser] += 1;
        }
        Ok(())
    }
}
