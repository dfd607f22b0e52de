//! Self-Sparring with an independent Beta posterior per arm.

use rand_distr::{Beta, Distribution};

use super::{check_arms, check_pair, DuelPolicy};
use crate::environment::ContextMatrix;
use crate::error::{Error, Result};
use crate::stream::{stream_from_seed, Stream};

/// Each arm holds `Beta(1 + wins, 1 + losses)`. A round draws one sample per
/// arm and duels the two highest samples; the winner gains a win and the
/// loser a loss.
#[derive(Debug, Clone)]
pub struct SelfSparring {
    wins: Vec<u64>,
    losses: Vec<u64>,
    stream: Stream,
}

impl SelfSparring {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("need at least 2 arms, got {n}")));
        }
        Ok(Self { wins: vec![0; n], losses: vec![0; n], stream: stream_from_seed(seed) })
    }

    pub fn record(&self, arm: usize) -> (u64, u64) {
        (self.wins[arm], self.losses[arm])
    }

    /// Overrides an arm's counts, e.g. to encode prior knowledge.
    pub fn set_record(&mut self, arm: usize, wins: u64, losses: u64) {
        self.wins[arm] = wins;
        self.losses[arm] = losses;
    }

    fn n(&self) -> usize {
        self.wins.len()
    }
}

impl DuelPolicy for SelfSparring {
    fn select(&mut self, ctx: &ContextMatrix) -> Result<(usize, usize)> {
        check_arms(ctx, self.n())?;
        let mut first = (0, f64::NEG_INFINITY);
        let mut second = (0, f64::NEG_INFINITY);
        for k in 0..self.n() {
            let beta = Beta::new(self.wins[k] as f64 + 1.0, self.losses[k] as f64 + 1.0)
                .expect("beta parameters are >= 1");
            let v = beta.sample(&mut self.stream);
            if v > first.1 {
                second = first;
                first = (k, v);
            } else if v > second.1 {
                second = (k, v);
            }
        }
        Ok((first.0, second.0))
    }

    fn update(&mut self, ctx: &ContextMatrix, pair: (usize, usize), first_won: bool) -> Result<()> {
        check_arms(ctx, self.n())?;
        check_pair(self.n(), pair)?;
        let (winner, loser) = if first_won { pair } else { (pair.1, pair.0) };
        self.wins[winner] += 1;
        self.losses[loser] += 1;
        Ok(())
    }
}
