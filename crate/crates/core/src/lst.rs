//! Linear stochastic transitivity models.
//!
//! An LST model assigns `P(i beats j) = F(u_i - u_j)` for a symmetric CDF `F`
//! (the comparison function). `F` is induced by a perturbation distribution
//! `G`: if `e_i, e_j ~ G` are iid then `e_j - e_i ~ F`, so ranking the
//! perturbed utilities `u_k + e_k` reproduces the model's duel outcomes.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::stream::open_unit;

/// Floor applied to probabilities before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComparisonKind {
    /// Logistic `F`, induced by Gumbel perturbations.
    Btl,
    /// Normal `F` with variance `2 scale^2`, induced by Gaussian perturbations.
    ThurstoneMosteller,
    /// Laplace `F`, induced by exponential perturbations.
    ExponentialNoise,
}

impl FromStr for ComparisonKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "btl" | "logistic" => Ok(ComparisonKind::Btl),
            "tm" | "thurstone" | "thurstone-mosteller" => Ok(ComparisonKind::ThurstoneMosteller),
            "exponential" | "exp" => Ok(ComparisonKind::ExponentialNoise),
            other => Err(Error::Parameter(format!("unknown comparison model '{other}'"))),
        }
    }
}

/// The comparison function `F` of an LST model together with its derivative.
///
/// `scale` is the scale of the inducing perturbation distribution; the
/// standard models use `1.0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonModel {
    kind: ComparisonKind,
    scale: f64,
}

/// Value of `F'` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    /// Set when the value is a one-sided derivative (exponential noise at 0).
    pub one_sided: bool,
}

impl ComparisonModel {
    pub fn new(kind: ComparisonKind, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Parameter(format!(
                "comparison scale must be finite and positive, got {scale}"
            )));
        }
        Ok(Self { kind, scale })
    }

    pub fn btl() -> Self {
        Self { kind: ComparisonKind::Btl, scale: 1.0 }
    }

    pub fn thurstone_mosteller() -> Self {
        Self { kind: ComparisonKind::ThurstoneMosteller, scale: 1.0 }
    }

    /// Laplace comparison function with scale `lambda`.
    pub fn exponential_noise(lambda: f64) -> Result<Self> {
        Self::new(ComparisonKind::ExponentialNoise, lambda)
    }

    pub fn kind(&self) -> ComparisonKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `F(delta)` for a finite utility difference.
    pub fn prob(&self, delta: f64) -> Result<f64> {
        if !delta.is_finite() {
            return Err(Error::Domain(format!("utility difference {delta} is not finite")));
        }
        Ok(self.cdf(delta))
    }

    /// `F'(delta)`. For exponential noise at `delta == 0` the right derivative
    /// is returned and flagged.
    pub fn deriv(&self, delta: f64) -> Result<Derivative> {
        if !delta.is_finite() {
            return Err(Error::Domain(format!("utility difference {delta} is not finite")));
        }
        Ok(Derivative {
            value: self.density(delta),
            one_sided: self.kind == ComparisonKind::ExponentialNoise && delta == 0.0,
        })
    }

    /// Unchecked `F(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let t = x / self.scale;
        match self.kind {
            ComparisonKind::Btl => logistic(t),
            // Phi(x / (s sqrt 2)) = erfc(-x / (2 s)) / 2
            ComparisonKind::ThurstoneMosteller => 0.5 * libm::erfc(-0.5 * t),
            ComparisonKind::ExponentialNoise => {
                if t < 0.0 {
                    0.5 * t.exp()
                } else {
                    1.0 - 0.5 * (-t).exp()
                }
            }
        }
    }

    /// Unchecked `F'(x)`.
    pub fn density(&self, x: f64) -> f64 {
        let t = x / self.scale;
        match self.kind {
            ComparisonKind::Btl => {
                let p = logistic(t);
                p * logistic(-t) / self.scale
            }
            ComparisonKind::ThurstoneMosteller => {
                (-0.25 * t * t).exp() / (2.0 * self.scale * PI.sqrt())
            }
            ComparisonKind::ExponentialNoise => (-t.abs()).exp() / (2.0 * self.scale),
        }
    }

    /// The perturbation distribution that induces this comparison function.
    pub fn inducing_perturbation(&self) -> PerturbationDistribution {
        let kind = match self.kind {
            ComparisonKind::Btl => PerturbationKind::Gumbel,
            ComparisonKind::ThurstoneMosteller => PerturbationKind::Gaussian,
            ComparisonKind::ExponentialNoise => PerturbationKind::Exponential,
        };
        PerturbationDistribution { kind, location: 0.0, scale: self.scale }
    }

    /// Derivative of the per-observation log-likelihood with respect to
    /// `eta = <theta, z>`.
    ///
    /// Terms whose probability is below [`PROB_FLOOR`] are clamped in the
    /// likelihood and therefore contribute zero here.
    pub(crate) fn score_weight(&self, eta: f64, won: bool) -> f64 {
        let dens = self.density(eta);
        if won {
            let p = self.cdf(eta);
            if p > PROB_FLOOR {
                dens / p
            } else {
                0.0
            }
        } else {
            let q = self.cdf(-eta);
            if q > PROB_FLOOR {
                -dens / q
            } else {
                0.0
            }
        }
    }

    /// Expected information weight `F'^2 / (F (1 - F))` at `eta`.
    pub(crate) fn fisher_weight(&self, eta: f64) -> f64 {
        let dens = self.density(eta);
        let p = self.cdf(eta).max(PROB_FLOOR);
        let q = self.cdf(-eta).max(PROB_FLOOR);
        dens * dens / (p * q)
    }

    pub(crate) fn log_prob(&self, eta: f64, won: bool) -> f64 {
        let p = if won { self.cdf(eta) } else { self.cdf(-eta) };
        p.max(PROB_FLOOR).ln()
    }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbationKind {
    Gumbel,
    Gaussian,
    Exponential,
}

impl FromStr for PerturbationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gumbel" => Ok(PerturbationKind::Gumbel),
            "gaussian" | "normal" => Ok(PerturbationKind::Gaussian),
            "exponential" | "exp" => Ok(PerturbationKind::Exponential),
            other => Err(Error::Parameter(format!("unknown noise distribution '{other}'"))),
        }
    }
}

/// The perturbation distribution `G` used to randomise utilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationDistribution {
    kind: PerturbationKind,
    location: f64,
    scale: f64,
}

impl PerturbationDistribution {
    pub fn new(kind: PerturbationKind, location: f64, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Parameter(format!(
                "perturbation scale must be finite and positive, got {scale}"
            )));
        }
        if !location.is_finite() {
            return Err(Error::Parameter(format!("perturbation location {location} is not finite")));
        }
        Ok(Self { kind, location, scale })
    }

    pub fn standard(kind: PerturbationKind) -> Self {
        Self { kind, location: 0.0, scale: 1.0 }
    }

    pub fn kind(&self) -> PerturbationKind {
        self.kind
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// One draw from `G`. Gumbel and exponential draws use the inverse CDF of
    /// a single open-interval uniform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let standard = match self.kind {
            PerturbationKind::Gumbel => -(-open_unit(rng).ln()).ln(),
            PerturbationKind::Gaussian => StandardNormal.sample(rng),
            PerturbationKind::Exponential => -open_unit(rng).ln(),
        };
        self.location + self.scale * standard
    }

    /// The comparison function induced by differences of two iid draws.
    pub fn induced_model(&self) -> ComparisonModel {
        let kind = match self.kind {
            PerturbationKind::Gumbel => ComparisonKind::Btl,
            PerturbationKind::Gaussian => ComparisonKind::ThurstoneMosteller,
            PerturbationKind::Exponential => ComparisonKind::ExponentialNoise,
        };
        ComparisonModel { kind, scale: self.scale }
    }
}

/// Clamps a perturbation draw to `[-c_thresh, c_thresh]`.
pub fn truncate_perturbation(eps: f64, c_thresh: f64) -> f64 {
    eps.max(-c_thresh).min(c_thresh)
}

/// One observed duel: `first` was compared against `second` in `round`.
#[derive(Debug, Clone, PartialEq)]
pub struct DuelObservation {
    pub round: usize,
    pub first: usize,
    pub second: usize,
    /// `x_first - x_second`.
    pub contrast: Vec<f64>,
    /// `true` when `first` won.
    pub outcome: bool,
}

impl DuelObservation {
    pub fn y(&self) -> f64 {
        if self.outcome {
            1.0
        } else {
            0.0
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum of `y ln F(<theta,z>) + (1-y) ln F(-<theta,z>)` over the observations,
/// with probabilities floored at [`PROB_FLOOR`].
pub fn log_likelihood(theta: &[f64], obs: &[DuelObservation], model: &ComparisonModel) -> Result<f64> {
    let mut total = 0.0;
    for o in obs {
        check_dim(theta.len(), o.contrast.len())?;
        total += model.log_prob(dot(theta, &o.contrast), o.outcome);
    }
    Ok(total)
}

/// Gradient of [`log_likelihood`] with respect to `theta`.
///
/// For BTL this is `sum (y - F(<theta,z>)) z`; for the other models each
/// summand carries the factor `F' / (F (1 - F))`.
pub fn log_likelihood_grad(
    theta: &[f64],
    obs: &[DuelObservation],
    model: &ComparisonModel,
) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; theta.len()];
    for o in obs {
        check_dim(theta.len(), o.contrast.len())?;
        let w = model.score_weight(dot(theta, &o.contrast), o.outcome);
        for (g, z) in grad.iter_mut().zip(&o.contrast) {
            *g += w * z;
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::stream_from_seed;
    use approx::assert_relative_eq;
    use rand::Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn all_models() -> Vec<ComparisonModel> {
        vec![
            ComparisonModel::btl(),
            ComparisonModel::thurstone_mosteller(),
            ComparisonModel::exponential_noise(1.0).unwrap(),
            ComparisonModel::exponential_noise(0.5).unwrap(),
        ]
    }

    // High-precision scalar oracle: 1 / (1 + e^-1) evaluated with a series for e.
    fn btl_oracle(delta: f64) -> f64 {
        let e_neg: f64 = (0..30)
            .map(|k| (-delta).powi(k) / (1..=k).map(f64::from).product::<f64>())
            .sum();
        1.0 / (1.0 + e_neg)
    }

    #[test]
    fn comparison_prob_examples() {
        assert_eq!(ComparisonModel::btl().prob(0.0).unwrap(), 0.5);
        assert_relative_eq!(ComparisonModel::btl().prob(1.0).unwrap(), btl_oracle(1.0), epsilon = 1e-15);
        assert_relative_eq!(ComparisonModel::btl().prob(1.0).unwrap(), 0.731059, epsilon = 1e-6);
        let exp = ComparisonModel::exponential_noise(1.0).unwrap();
        assert_relative_eq!(exp.prob(2f64.ln()).unwrap(), 0.75, epsilon = 1e-15);
        assert_eq!(ComparisonModel::thurstone_mosteller().prob(0.0).unwrap(), 0.5);
    }

    #[test]
    fn every_model_is_half_at_zero() {
        for m in all_models() {
            assert_eq!(m.cdf(0.0), 0.5, "{m:?}");
        }
    }

    #[test]
    fn non_finite_delta_is_a_domain_error() {
        let m = ComparisonModel::btl();
        assert!(matches!(m.prob(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(m.prob(f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(m.deriv(f64::NEG_INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_scales_are_rejected() {
        assert!(ComparisonModel::exponential_noise(0.0).is_err());
        assert!(PerturbationDistribution::new(PerturbationKind::Gumbel, 0.0, -1.0).is_err());
        assert!(PerturbationDistribution::new(PerturbationKind::Gaussian, 0.0, 0.0).is_err());
    }

    fn central_difference(m: &ComparisonModel, x: f64) -> f64 {
        let h = 1e-5;
        (m.cdf(x + h) - m.cdf(x - h)) / (2.0 * h)
    }

    #[test]
    fn comparison_deriv_examples() {
        let btl = ComparisonModel::btl();
        let d0 = btl.deriv(0.0).unwrap();
        assert_eq!(d0.value, 0.25);
        assert!(!d0.one_sided);
        assert_relative_eq!(central_difference(&btl, 0.0), 0.25, max_relative = 1e-8);

        let mut s = stream_from_seed(3);
        for _ in 0..100 {
            let x: f64 = s.random_range(-8.0..8.0);
            assert_relative_eq!(btl.deriv(x).unwrap().value, btl.deriv(-x).unwrap().value, max_relative = 1e-12);
        }

        // F(x) = Phi(x / sqrt 2), so F'(0) = phi(0) / sqrt 2 = 1 / (2 sqrt pi).
        let tm = ComparisonModel::thurstone_mosteller();
        let fd = central_difference(&tm, 0.0);
        let phi0 = 1.0 / (2.0 * PI).sqrt();
        assert_relative_eq!(tm.deriv(0.0).unwrap().value, phi0 * FRAC_1_SQRT_2, max_relative = 1e-12);
        assert_relative_eq!(tm.deriv(0.0).unwrap().value, fd, max_relative = 1e-6);
        assert_relative_eq!(fd, 0.282095, max_relative = 1e-6);
    }

    #[test]
    fn exponential_noise_derivative_at_zero_is_flagged() {
        let m = ComparisonModel::exponential_noise(2.0).unwrap();
        let d = m.deriv(0.0).unwrap();
        assert!(d.one_sided);
        assert_eq!(d.value, 0.25);
        let right = (m.cdf(1e-7) - m.cdf(0.0)) / 1e-7;
        assert_relative_eq!(d.value, right, max_relative = 1e-6);
        assert!(!m.deriv(0.3).unwrap().one_sided);
    }

    #[test]
    fn densities_match_finite_differences() {
        let mut s = stream_from_seed(11);
        for m in all_models() {
            for _ in 0..200 {
                let x: f64 = s.random_range(-6.0..6.0);
                if x.abs() < 1e-3 {
                    continue;
                }
                assert_relative_eq!(m.density(x), central_difference(&m, x), max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn symmetry_and_monotonicity() {
        let mut s = stream_from_seed(5);
        for m in all_models() {
            let mut xs: Vec<f64> = (0..1000).map(|_| s.random_range(-10.0..10.0)).collect();
            for &x in &xs {
                assert!((m.cdf(x) + m.cdf(-x) - 1.0).abs() <= 1e-12, "{m:?} at {x}");
            }
            xs.sort_by(f64::total_cmp);
            for w in xs.windows(2) {
                assert!(m.cdf(w[0]) <= m.cdf(w[1]));
            }
            if m.kind() != ComparisonKind::ExponentialNoise {
                assert!(xs.iter().all(|&x| m.density(x) > 0.0));
            }
        }
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate_perturbation(5.0, 1.0), 1.0);
        assert_eq!(truncate_perturbation(-5.0, 1.0), -1.0);
        assert_eq!(truncate_perturbation(0.3, 1.0), 0.3);
    }

    #[test]
    fn perturbation_sample_moments() {
        let draws = 1_000_000;
        let gumbel = PerturbationDistribution::standard(PerturbationKind::Gumbel);
        let gauss = PerturbationDistribution::standard(PerturbationKind::Gaussian);
        let mut s = stream_from_seed(2024);
        let g_mean: f64 = (0..draws).map(|_| gumbel.sample(&mut s)).sum::<f64>() / draws as f64;
        let n_mean: f64 = (0..draws).map(|_| gauss.sample(&mut s)).sum::<f64>() / draws as f64;
        // Euler-Mascheroni constant
        assert!((g_mean - 0.577_215_664_9).abs() < 0.01, "{g_mean}");
        assert!(n_mean.abs() < 0.01, "{n_mean}");
    }

    #[test]
    fn perturbation_sampling_is_deterministic() {
        for kind in [PerturbationKind::Gumbel, PerturbationKind::Gaussian, PerturbationKind::Exponential] {
            let g = PerturbationDistribution::new(kind, 0.3, 2.0).unwrap();
            let mut a = stream_from_seed(9);
            let mut b = stream_from_seed(9);
            let xa: Vec<f64> = (0..64).map(|_| g.sample(&mut a)).collect();
            let xb: Vec<f64> = (0..64).map(|_| g.sample(&mut b)).collect();
            assert_eq!(xa, xb);
        }
    }

    #[test]
    fn induced_models_round_trip() {
        for kind in [PerturbationKind::Gumbel, PerturbationKind::Gaussian, PerturbationKind::Exponential] {
            let g = PerturbationDistribution::new(kind, 0.0, 1.5).unwrap();
            assert_eq!(g.induced_model().inducing_perturbation(), g);
        }
    }

    #[test]
    fn sorting_perturbed_utilities_reproduces_btl() {
        let gumbel = PerturbationDistribution::standard(PerturbationKind::Gumbel);
        let mut s = stream_from_seed(77);
        let trials = 1_000_000u32;
        let wins = (0..trials)
            .filter(|_| 1.0 + gumbel.sample(&mut s) > gumbel.sample(&mut s))
            .count() as f64;
        let p = ComparisonModel::btl().cdf(1.0);
        let sigma = (p * (1.0 - p) / f64::from(trials)).sqrt();
        assert!((wins / f64::from(trials) - p).abs() <= 3.0 * sigma);
    }

    #[test]
    fn sorting_perturbed_utilities_reproduces_other_models() {
        let mut s = stream_from_seed(78);
        for kind in [PerturbationKind::Gaussian, PerturbationKind::Exponential] {
            let g = PerturbationDistribution::standard(kind);
            let trials = 200_000u32;
            let wins = (0..trials)
                .filter(|_| 0.7 + g.sample(&mut s) > g.sample(&mut s))
                .count() as f64;
            let p = g.induced_model().cdf(0.7);
            let sigma = (p * (1.0 - p) / f64::from(trials)).sqrt();
            assert!((wins / f64::from(trials) - p).abs() <= 4.0 * sigma, "{kind:?}");
        }
    }

    fn obs(contrast: Vec<f64>, outcome: bool) -> DuelObservation {
        DuelObservation { round: 0, first: 0, second: 1, contrast, outcome }
    }

    #[test]
    fn log_likelihood_examples() {
        let btl = ComparisonModel::btl();
        let ll = log_likelihood(&[0.0], &[obs(vec![1.0], true)], &btl).unwrap();
        assert_relative_eq!(ll, -std::f64::consts::LN_2, epsilon = 1e-15);
        let ll = log_likelihood(&[1.0], &[obs(vec![1.0], true)], &btl).unwrap();
        assert_relative_eq!(ll, btl_oracle(1.0).ln(), epsilon = 1e-14);
        assert_relative_eq!(ll, -0.313262, epsilon = 1e-6);
        assert_eq!(log_likelihood(&[1.0, 2.0], &[], &btl).unwrap(), 0.0);
    }

    #[test]
    fn log_likelihood_floors_vanishing_probabilities() {
        let btl = ComparisonModel::btl();
        let ll = log_likelihood(&[1.0], &[obs(vec![-1000.0], true)], &btl).unwrap();
        assert_eq!(ll, PROB_FLOOR.ln());
        let g = log_likelihood_grad(&[1.0], &[obs(vec![-1000.0], true)], &btl).unwrap();
        assert_eq!(g, vec![0.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let btl = ComparisonModel::btl();
        let r = log_likelihood(&[0.0, 0.0], &[obs(vec![1.0], true)], &btl);
        assert!(matches!(r, Err(Error::Dimension { expected: 2, actual: 1 })));
        assert!(log_likelihood_grad(&[0.0], &[obs(vec![1.0, 1.0], true)], &btl).is_err());
    }

    #[test]
    fn gradient_examples() {
        let btl = ComparisonModel::btl();
        let g = log_likelihood_grad(&[0.3, -0.2], &[obs(vec![0.0, 0.0], true)], &btl).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        let g = log_likelihood_grad(&[0.0], &[obs(vec![2.0], true)], &btl).unwrap();
        assert_relative_eq!(g[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn btl_gradient_is_the_glm_score() {
        let btl = ComparisonModel::btl();
        let mut s = stream_from_seed(31);
        for _ in 0..50 {
            let theta: Vec<f64> = (0..3).map(|_| s.random_range(-1.0..1.0)).collect();
            let data: Vec<DuelObservation> = (0..10)
                .map(|_| obs((0..3).map(|_| s.random_range(-1.0..1.0)).collect(), s.random()))
                .collect();
            let g = log_likelihood_grad(&theta, &data, &btl).unwrap();
            let mut glm = [0.0; 3];
            for o in &data {
                let r = o.y() - btl.cdf(dot(&theta, &o.contrast));
                for k in 0..3 {
                    glm[k] += r * o.contrast[k];
                }
            }
            for k in 0..3 {
                assert_relative_eq!(g[k], glm[k], epsilon = 1e-12);
            }
        }
    }
}
