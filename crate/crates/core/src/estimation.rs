//! Weight-vector estimation: constrained maximum likelihood over the full
//! history, and the one-observation-at-a-time SGD variant.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::lst::{dot, log_likelihood, ComparisonModel, DuelObservation};

/// Options for [`fit_mle`]. The parameter space is the Euclidean ball of
/// radius `domain_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub domain_radius: f64,
    /// Initial step length of each line search, in `(0, 1]`.
    pub step_damping: f64,
}

impl MleOptions {
    /// Defaults for dimension `d`: radius `sqrt(d)`, tolerance `1e-6`.
    pub fn for_dim(d: usize) -> Self {
        Self {
            max_iterations: 100,
            gradient_tolerance: 1e-6,
            domain_radius: (d.max(1) as f64).sqrt(),
            step_damping: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.domain_radius.is_finite() && self.domain_radius > 0.0) {
            return Err(Error::Parameter(format!("domain radius must be positive, got {}", self.domain_radius)));
        }
        if !(self.gradient_tolerance.is_finite() && self.gradient_tolerance > 0.0) {
            return Err(Error::Parameter(format!(
                "gradient tolerance must be positive, got {}",
                self.gradient_tolerance
            )));
        }
        if !(self.step_damping > 0.0 && self.step_damping <= 1.0) {
            return Err(Error::Parameter(format!("step damping must lie in (0, 1], got {}", self.step_damping)));
        }
        Ok(())
    }
}

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub theta: Vec<f64>,
    /// `false` when `max_iterations` ran out or the line search stalled
    /// before the projected gradient dropped below tolerance.
    pub converged: bool,
    pub iterations: usize,
    /// Norm of the projected gradient step `P(theta + g) - theta` at `theta`.
    pub projected_gradient_norm: f64,
}

/// Projects `theta` onto the ball of radius `radius` in place.
pub fn project_to_ball(theta: &mut [f64], radius: f64) {
    let norm = dot(theta, theta).sqrt();
    if norm > radius {
        let s = radius / norm;
        theta.iter_mut().for_each(|v| *v *= s);
    }
}

fn projected_gradient_norm(theta: &[f64], grad: &[f64], radius: f64) -> f64 {
    let mut moved: Vec<f64> = theta.iter().zip(grad).map(|(t, g)| t + g).collect();
    project_to_ball(&mut moved, radius);
    moved.iter().zip(theta).map(|(m, t)| (m - t).powi(2)).sum::<f64>().sqrt()
}

/// Gradient and expected information `sum w(eta) z z^T` in one pass.
fn score_and_information(theta: &[f64], obs: &[DuelObservation], model: &ComparisonModel) -> (Vec<f64>, DMatrix<f64>) {
    let d = theta.len();
    let mut grad = vec![0.0; d];
    let mut info = DMatrix::<f64>::zeros(d, d);
    for o in obs {
        let z = &o.contrast;
        let eta = dot(theta, z);
        let s = model.score_weight(eta, o.outcome);
        let w = model.fisher_weight(eta);
        for c in 0..d {
            grad[c] += s * z[c];
            let wz = w * z[c];
            if wz == 0.0 {
                continue;
            }
            for r in c..d {
                info[(r, c)] += wz * z[r];
            }
        }
    }
    for c in 0..d {
        for r in c + 1..d {
            info[(c, r)] = info[(r, c)];
        }
    }
    (grad, info)
}

/// Maximises the log-likelihood of `obs` over the ball of radius
/// `opts.domain_radius`, starting from `warm_start`.
///
/// Each iteration takes a Fisher-scoring step (exactly Newton's method for
/// BTL) with a backtracking line search and projection onto the ball; when
/// that step fails to increase the likelihood a projected gradient step is
/// tried instead. An empty history yields the zero vector.
pub fn fit_mle(
    obs: &[DuelObservation],
    model: &ComparisonModel,
    opts: &MleOptions,
    warm_start: &[f64],
) -> Result<MleFit> {
    opts.validate()?;
    let d = warm_start.len();
    if obs.is_empty() {
        return Ok(MleFit { theta: vec![0.0; d], converged: true, iterations: 0, projected_gradient_norm: 0.0 });
    }
    for o in obs {
        check_dim(d, o.contrast.len())?;
    }
    let radius = opts.domain_radius;
    let mut theta = warm_start.to_vec();
    project_to_ball(&mut theta, radius);
    let mut ll = log_likelihood(&theta, obs, model)?;
    let mut stalls = 0;

    for it in 0..opts.max_iterations {
        let (grad, info) = score_and_information(&theta, obs, model);
        let pg = projected_gradient_norm(&theta, &grad, radius);
        if pg <= opts.gradient_tolerance {
            return Ok(MleFit { theta, converged: true, iterations: it, projected_gradient_norm: pg });
        }
        let scoring_dir = solve_spd(info, &grad);
        let mut accepted = None;
        if let Some(dir) = scoring_dir {
            accepted = line_search(&theta, ll, &grad, &dir, opts.step_damping, radius, obs, model);
        }
        // On the sphere a projected scoring step can collapse to almost no
        // move while the projected gradient still makes progress.
        if accepted.as_ref().is_none_or(|a| a.2) {
            if let Some(g) = line_search(&theta, ll, &grad, &grad, opts.step_damping, radius, obs, model) {
                if !g.2 || accepted.is_none() {
                    accepted = Some(g);
                }
            }
        }
        match accepted {
            Some((next, next_ll, unresolved)) => {
                theta = next;
                ll = next_ll;
                stalls = if unresolved { stalls + 1 } else { 0 };
                if stalls >= 2 {
                    let grad = crate::lst::log_likelihood_grad(&theta, obs, model)?;
                    let pg = projected_gradient_norm(&theta, &grad, radius);
                    let converged = pg <= opts.gradient_tolerance;
                    return Ok(MleFit { theta, converged, iterations: it + 1, projected_gradient_norm: pg });
                }
            }
            None => {
                // No representable ascent step remains.
                return Ok(MleFit { theta, converged: false, iterations: it + 1, projected_gradient_norm: pg });
            }
        }
    }
    let grad = crate::lst::log_likelihood_grad(&theta, obs, model)?;
    let pg = projected_gradient_norm(&theta, &grad, radius);
    Ok(MleFit {
        converged: pg <= opts.gradient_tolerance,
        theta,
        iterations: opts.max_iterations,
        projected_gradient_norm: pg,
    })
}

fn solve_spd(mut info: DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let d = rhs.len();
    let trace: f64 = (0..d).map(|k| info[(k, k)]).sum();
    // Tiny Levenberg shift keeps rank-deficient histories solvable.
    let shift = 1e-10 * (trace / d as f64).max(1e-12);
    for k in 0..d {
        info[(k, k)] += shift;
    }
    let chol = info.cholesky()?;
    let x = chol.solve(&DVector::from_column_slice(rhs));
    x.iter().all(|v| v.is_finite()).then(|| x.as_slice().to_vec())
}

#[allow(clippy::too_many_arguments)]
fn line_search(
    theta: &[f64],
    ll: f64,
    grad: &[f64],
    dir: &[f64],
    initial_step: f64,
    radius: f64,
    obs: &[DuelObservation],
    model: &ComparisonModel,
) -> Option<(Vec<f64>, f64, bool)> {
    let mut step = initial_step;
    for _ in 0..50 {
        let mut cand: Vec<f64> = theta.iter().zip(dir).map(|(t, v)| t + step * v).collect();
        project_to_ball(&mut cand, radius);
        let moved: Vec<f64> = cand.iter().zip(theta).map(|(c, t)| c - t).collect();
        let predicted = dot(grad, &moved);
        if predicted <= 0.0 {
            step *= 0.5;
            continue;
        }
        // Below this the likelihood cannot resolve the gain: trust a full
        // step, give up on a damped one.
        if predicted <= 1e-13 * ll.abs().max(1.0) {
            return (step == initial_step).then_some((cand, ll, true));
        }
        let cand_ll = log_likelihood(&cand, obs, model).ok()?;
        if cand_ll >= ll + 1e-4 * predicted {
            return Some((cand, cand_ll, false));
        }
        step *= 0.5;
    }
    None
}

/// One projected stochastic-gradient ascent step on a single observation:
/// `P_B(theta + lr * grad l(theta))`.
pub fn sgd_step(
    theta: &[f64],
    obs: &DuelObservation,
    model: &ComparisonModel,
    learning_rate: f64,
    domain_radius: f64,
) -> Result<Vec<f64>> {
    check_dim(theta.len(), obs.contrast.len())?;
    if !(learning_rate.is_finite() && learning_rate > 0.0) {
        return Err(Error::Parameter(format!("learning rate must be positive, got {learning_rate}")));
    }
    let w = model.score_weight(dot(theta, &obs.contrast), obs.outcome);
    let mut next: Vec<f64> = theta.iter().zip(&obs.contrast).map(|(t, z)| t + learning_rate * w * z).collect();
    project_to_ball(&mut next, domain_radius);
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorMode {
    /// Refit the constrained MLE on the full history.
    FullMle(MleOptions),
    /// One SGD step per observation with a fixed learning rate.
    Sgd { learning_rate: f64, domain_radius: f64 },
}

/// A running estimate of `theta` fed one observation at a time.
///
/// In full-MLE mode observations are buffered and [`OnlineEstimator::refresh`]
/// refits warm-started from the previous estimate. In SGD mode every pushed
/// observation triggers one step and `refresh` does nothing.
#[derive(Debug, Clone)]
pub struct OnlineEstimator {
    mode: EstimatorMode,
    model: ComparisonModel,
    theta: Vec<f64>,
    history: Vec<DuelObservation>,
    elapsed_ns: u64,
    failed_fits: u64,
}

impl OnlineEstimator {
    pub fn new(d: usize, model: ComparisonModel, mode: EstimatorMode) -> Result<Self> {
        if let EstimatorMode::FullMle(opts) = &mode {
            opts.validate()?;
        }
        Ok(Self { mode, model, theta: vec![0.0; d], history: Vec::new(), elapsed_ns: 0, failed_fits: 0 })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn history(&self) -> &[DuelObservation] {
        &self.history
    }

    pub fn mode(&self) -> &EstimatorMode {
        &self.mode
    }

    /// Wall time spent inside estimation so far.
    pub fn elapsed_ns(&self) -> u64 {
        self.elapsed_ns
    }

    /// Number of full-MLE fits that ended unconverged.
    pub fn failed_fits(&self) -> u64 {
        self.failed_fits
    }

    pub fn push(&mut self, obs: DuelObservation) -> Result<()> {
        check_dim(self.theta.len(), obs.contrast.len())?;
        match self.mode {
            EstimatorMode::FullMle(_) => self.history.push(obs),
            EstimatorMode::Sgd { learning_rate, domain_radius } => {
                let start = Instant::now();
                self.theta = sgd_step(&self.theta, &obs, &self.model, learning_rate, domain_radius)?;
                self.elapsed_ns += start.elapsed().as_nanos() as u64;
            }
        }
        Ok(())
    }

    pub fn refresh(&mut self) -> Result<()> {
        if let EstimatorMode::FullMle(opts) = self.mode {
            let start = Instant::now();
            let fit = fit_mle(&self.history, &self.model, &opts, &self.theta)?;
            self.elapsed_ns += start.elapsed().as_nanos() as u64;
            if !fit.converged {
                self.failed_fits += 1;
                log::debug!(
                    "MLE did not converge on {} observations (projected gradient {:.3e})",
                    self.history.len(),
                    fit.projected_gradient_norm
                );
            }
            self.theta = fit.theta;
        }
        Ok(())
    }
}
