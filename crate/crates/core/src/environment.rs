//! Ground-truth problem instances, context generation, feedback and regret.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lst::{dot, ComparisonModel, PerturbationDistribution};
use crate::stream::open_unit;

/// Slack allowed on the unit-ball constraint for contexts built by callers.
const BALL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// `0 < |theta*| <= 1/sqrt(d)`
    Easy,
    /// `1/sqrt(d) <= |theta*| <= 1`
    Medium,
    /// `1 <= |theta*| <= sqrt(d)`
    Hard,
    /// Caller-supplied `theta*`.
    Custom,
}

impl Scenario {
    /// Closed norm band for `theta*` in dimension `d`.
    pub fn norm_band(&self, d: usize) -> Option<(f64, f64)> {
        let root = (d as f64).sqrt();
        match self {
            Scenario::Easy => Some((0.0, 1.0 / root)),
            Scenario::Medium => Some((1.0 / root, 1.0)),
            Scenario::Hard => Some((1.0, root)),
            Scenario::Custom => None,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::Easy => "easy",
            Scenario::Medium => "medium",
            Scenario::Hard => "hard",
            Scenario::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "easy" | "e" => Ok(Scenario::Easy),
            "medium" | "m" => Ok(Scenario::Medium),
            "hard" | "h" => Ok(Scenario::Hard),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::Parameter(format!("unknown scenario '{other}'"))),
        }
    }
}

/// A contextual dueling problem: arm count, dimension, `theta*` and the true
/// feedback model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    n: usize,
    d: usize,
    theta_star: Vec<f64>,
    true_model: ComparisonModel,
    true_noise: PerturbationDistribution,
    scenario: Scenario,
}

impl ProblemInstance {
    /// Builds an instance from an explicit `theta*`.
    pub fn new(
        n: usize,
        theta_star: Vec<f64>,
        true_model: ComparisonModel,
        true_noise: PerturbationDistribution,
    ) -> Result<Self> {
        check_sizes(n, theta_star.len())?;
        if theta_star.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("theta* must be finite".into()));
        }
        Ok(Self { n, d: theta_star.len(), theta_star, true_model, true_noise, scenario: Scenario::Custom })
    }

    /// Samples `theta*` uniformly (by volume) from the scenario's shell
    /// `lo <= |theta| <= hi`.
    pub fn generate<R: Rng + ?Sized>(
        scenario: Scenario,
        n: usize,
        d: usize,
        true_model: ComparisonModel,
        true_noise: PerturbationDistribution,
        rng: &mut R,
    ) -> Result<Self> {
        check_sizes(n, d)?;
        let (lo, hi) = scenario
            .norm_band(d)
            .ok_or_else(|| Error::Parameter("custom scenarios need an explicit theta*".into()))?;
        let direction = unit_direction(d, rng);
        // Radius by inverse CDF of r^d on [lo, hi]; open_unit excludes 0,
        // which keeps the easy band's lower edge open.
        let dim = d as i32;
        let norm = (lo.powi(dim) + (hi.powi(dim) - lo.powi(dim)) * open_unit(rng)).powf(1.0 / d as f64);
        let norm = norm.clamp(lo, hi);
        let theta_star = direction.into_iter().map(|v| v * norm).collect();
        Ok(Self { n, d, theta_star, true_model, true_noise, scenario })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn true_model(&self) -> &ComparisonModel {
        &self.true_model
    }

    pub fn true_noise(&self) -> &PerturbationDistribution {
        &self.true_noise
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// Draws a fresh context: `n` columns iid uniform in the unit ball.
    pub fn sample_context<R: Rng + ?Sized>(&self, rng: &mut R) -> ContextMatrix {
        let mut data = Vec::with_capacity(self.n * self.d);
        for _ in 0..self.n {
            data.extend(uniform_in_ball(self.d, rng));
        }
        ContextMatrix { d: self.d, n: self.n, data }
    }

    /// True utilities `u*_k = <x_k, theta*>`.
    pub fn utilities(&self, ctx: &ContextMatrix) -> Result<Vec<f64>> {
        self.check_ctx(ctx)?;
        Ok((0..ctx.n).map(|k| dot(ctx.arm(k), &self.theta_star)).collect())
    }

    /// Bernoulli outcome of duelling `i` against `j`: `true` when `i` wins,
    /// with probability `F*(<x_i - x_j, theta*>)`.
    pub fn sample_feedback<R: Rng + ?Sized>(
        &self,
        ctx: &ContextMatrix,
        i: usize,
        j: usize,
        rng: &mut R,
    ) -> Result<bool> {
        let p = self.win_probability(ctx, i, j)?;
        Ok(rng.random::<f64>() < p)
    }

    pub fn win_probability(&self, ctx: &ContextMatrix, i: usize, j: usize) -> Result<f64> {
        self.check_ctx(ctx)?;
        ctx.check_arm(i)?;
        ctx.check_arm(j)?;
        let delta = dot(ctx.arm(i), &self.theta_star) - dot(ctx.arm(j), &self.theta_star);
        Ok(self.true_model.cdf(delta))
    }

    /// Average and weak regret of playing `(i, j)` in context `ctx`.
    pub fn instant_regret(&self, ctx: &ContextMatrix, i: usize, j: usize) -> Result<Regret> {
        let u = self.utilities(ctx)?;
        regret_from_utilities(&u, i, j)
    }

    fn check_ctx(&self, ctx: &ContextMatrix) -> Result<()> {
        if ctx.d != self.d || ctx.n != self.n {
            return Err(Error::Parameter(format!(
                "context is {}x{}, instance expects {}x{}",
                ctx.d, ctx.n, self.d, self.n
            )));
        }
        Ok(())
    }
}

fn check_sizes(n: usize, d: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Parameter(format!("need at least 2 arms, got {n}")));
    }
    if d == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    Ok(())
}

fn unit_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform point in the `d`-dimensional unit ball (direction times `U^(1/d)`).
pub fn uniform_in_ball<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    let dir = unit_direction(d, rng);
    let r = rng.random::<f64>().powf(1.0 / d as f64);
    dir.into_iter().map(|x| x * r).collect()
}

/// The per-round context: one feature vector per arm, each in the unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextMatrix {
    d: usize,
    n: usize,
    // arm-major: arm k occupies data[k*d .. (k+1)*d]
    data: Vec<f64>,
}

impl ContextMatrix {
    pub fn from_arms(arms: &[Vec<f64>]) -> Result<Self> {
        let d = arms.first().map(Vec::len).unwrap_or(0);
        if d == 0 {
            return Err(Error::Parameter("context needs at least one non-empty arm".into()));
        }
        let mut data = Vec::with_capacity(d * arms.len());
        for (k, x) in arms.iter().enumerate() {
            if x.len() != d {
                return Err(Error::Dimension { expected: d, actual: x.len() });
            }
            let norm = dot(x, x).sqrt();
            if !(norm <= 1.0 + BALL_SLACK) {
                return Err(Error::Parameter(format!("arm {k} has norm {norm} outside the unit ball")));
            }
            data.extend_from_slice(x);
        }
        Ok(Self { d, n: arms.len(), data })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Feature vector of arm `k`. Panics if `k >= n`.
    pub fn arm(&self, k: usize) -> &[f64] {
        &self.data[k * self.d..(k + 1) * self.d]
    }

    pub fn arms(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// Contrast vector `x_i - x_j`.
    pub fn contrast(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        self.check_arm(i)?;
        self.check_arm(j)?;
        Ok(self.arm(i).iter().zip(self.arm(j)).map(|(a, b)| a - b).collect())
    }

    pub(crate) fn check_arm(&self, k: usize) -> Result<()> {
        if k < self.n {
            Ok(())
        } else {
            Err(Error::ArmIndex { index: k, n: self.n })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regret {
    pub average: f64,
    pub weak: f64,
}

/// Average and weak regret from true utilities. The best arm is the lowest
/// index maximiser; regret does not depend on that choice.
pub fn regret_from_utilities(u: &[f64], i: usize, j: usize) -> Result<Regret> {
    for k in [i, j] {
        if k >= u.len() {
            return Err(Error::ArmIndex { index: k, n: u.len() });
        }
    }
    let best = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (hi, lo) = if u[i] >= u[j] { (u[i], u[j]) } else { (u[j], u[i]) };
    let weak = best - hi;
    // (2 best - u_i - u_j) / 2, written so that average >= weak survives rounding.
    let average = weak + (hi - lo) / 2.0;
    Ok(Regret { average, weak })
}

/// Per-round and cumulative regret accounting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretLedger {
    average: Vec<f64>,
    weak: Vec<f64>,
    cum_average: Vec<f64>,
    cum_weak: Vec<f64>,
}

impl RegretLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: Regret) -> Result<()> {
        if !(r.weak >= 0.0 && r.weak <= r.average) {
            return Err(Error::Domain(format!(
                "regret violates 0 <= weak <= average: weak {}, average {}",
                r.weak, r.average
            )));
        }
        let prev_a = self.cum_average.last().copied().unwrap_or(0.0);
        let prev_w = self.cum_weak.last().copied().unwrap_or(0.0);
        self.average.push(r.average);
        self.weak.push(r.weak);
        self.cum_average.push(prev_a + r.average);
        self.cum_weak.push(prev_w + r.weak);
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        self.average.len()
    }

    pub fn average(&self) -> &[f64] {
        &self.average
    }

    pub fn weak(&self) -> &[f64] {
        &self.weak
    }

    pub fn cumulative_average(&self) -> &[f64] {
        &self.cum_average
    }

    pub fn cumulative_weak(&self) -> &[f64] {
        &self.cum_weak
    }

    pub fn total_average(&self) -> f64 {
        self.cum_average.last().copied().unwrap_or(0.0)
    }

    pub fn total_weak(&self) -> f64 {
        self.cum_weak.last().copied().unwrap_or(0.0)
    }
}
