use duelsim_core::environment::{regret_from_utilities, uniform_in_ball};
use duelsim_core::estimation::{fit_mle, sgd_step, MleOptions};
use duelsim_core::harness::{default_hyperparams, HyperMode};
use duelsim_core::lst::{log_likelihood, log_likelihood_grad, truncate_perturbation};
use duelsim_core::policies::{first_arm, CouplingSchedule, DuelPolicy, DTS_ALPHA};
use duelsim_core::stream::stream_from_seed;
use duelsim_core::{
    Colstim, ComparisonModel, ContextMatrix, DoubleThompson, DuelObservation, EstimatorMode, GramState, HyperParams,
    MaxInP, MaxInpParams, PerturbationDistribution, PerturbationKind, ProblemInstance, RandomPolicy, Scenario,
    SelfSparring, SupColstim,
};
use proptest::prelude::*;
use rand::Rng;

fn model_strategy() -> impl Strategy<Value = ComparisonModel> {
    prop_oneof![
        (0.2f64..5.0).prop_map(|s| ComparisonModel::new(duelsim_core::ComparisonKind::Btl, s).unwrap()),
        (0.2f64..5.0).prop_map(|s| ComparisonModel::new(duelsim_core::ComparisonKind::ThurstoneMosteller, s).unwrap()),
        (0.2f64..5.0).prop_map(|l| ComparisonModel::exponential_noise(l).unwrap()),
    ]
}

fn vec_strategy(d: usize, lim: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-lim..lim, d)
}

fn obs_from(contrasts: &[Vec<f64>], outcomes: &[bool]) -> Vec<DuelObservation> {
    contrasts
        .iter()
        .zip(outcomes)
        .enumerate()
        .map(|(round, (z, &y))| DuelObservation { round, first: 0, second: 1, contrast: z.clone(), outcome: y })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn comparison_is_antisymmetric_and_monotone(model in model_strategy(), a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let pa = model.prob(a).unwrap();
        let pn = model.prob(-a).unwrap();
        prop_assert!((pa + pn - 1.0).abs() <= 1e-12);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(model.prob(lo).unwrap() <= model.prob(hi).unwrap());
    }

    #[test]
    fn gradient_matches_finite_differences(
        model in model_strategy(),
        d in 1usize..5,
        seed in any::<u64>(),
        count in 1usize..25,
    ) {
        let mut rng = stream_from_seed(seed);
        let contrasts: Vec<Vec<f64>> = (0..count).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let outcomes: Vec<bool> = (0..count).map(|_| rng.random()).collect();
        let obs = obs_from(&contrasts, &outcomes);
        let theta: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let g = log_likelihood_grad(&theta, &obs, &model).unwrap();
        let h = 1e-5;
        let mut diff = 0.0;
        for k in 0..d {
            let mut p = theta.clone();
            let mut m = theta.clone();
            p[k] += h;
            m[k] -= h;
            let fd = (log_likelihood(&p, &obs, &model).unwrap() - log_likelihood(&m, &obs, &model).unwrap()) / (2.0 * h);
            diff += (g[k] - fd).powi(2);
        }
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(diff.sqrt() <= 1e-5 * norm.max(1.0), "{} vs {}", diff.sqrt(), norm);
    }

    #[test]
    fn gram_tracks_the_rebuilt_matrix(d in 1usize..7, zs in prop::collection::vec(vec_strategy(6, 2.0), 1..60)) {
        let ridge = 0.5;
        let mut gram = GramState::new(d, ridge).unwrap();
        let mut lam = gram.min_eigenvalue();
        let mut rebuilt = nalgebra::DMatrix::<f64>::identity(d, d) * ridge;
        for z in &zs {
            let z = &z[..d];
            gram.rank_one_update(z).unwrap();
            let v = nalgebra::DVector::from_column_slice(z);
            rebuilt += &v * v.transpose();
            let now = gram.min_eigenvalue();
            prop_assert!(now >= lam - 1e-9 * lam.abs().max(1.0));
            lam = now;
        }
        prop_assert!((gram.matrix() - &rebuilt).abs().max() <= 1e-9);
        let inv = rebuilt.try_inverse().unwrap();
        prop_assert!((gram.inverse() - inv).abs().max() <= 1e-8);
    }

    #[test]
    fn weighted_norm_reverse_triangle(
        zs in prop::collection::vec(vec_strategy(4, 1.0), 0..20),
        x in vec_strategy(4, 3.0),
        y in vec_strategy(4, 3.0),
    ) {
        let mut gram = GramState::new(4, 1e-2).unwrap();
        for z in &zs {
            gram.rank_one_update(z).unwrap();
        }
        let nx = gram.weighted_norm(&x).unwrap();
        let ny = gram.weighted_norm(&y).unwrap();
        let nd = gram.weighted_norm_of_difference(&x, &y).unwrap();
        prop_assert!((nx - ny).abs() <= nd + 1e-9 * (nx + ny).max(1.0));
    }

    #[test]
    fn weak_regret_bounded_and_shift_invariant(
        u in prop::collection::vec(-3.0f64..3.0, 2..12),
        a in any::<prop::sample::Index>(),
        b in any::<prop::sample::Index>(),
        shift in -5.0f64..5.0,
    ) {
        let (i, j) = (a.index(u.len()), b.index(u.len()));
        let r = regret_from_utilities(&u, i, j).unwrap();
        prop_assert!(0.0 <= r.weak && r.weak <= r.average);
        let moved: Vec<f64> = u.iter().map(|v| v + shift).collect();
        let s = regret_from_utilities(&moved, i, j).unwrap();
        prop_assert!((r.average - s.average).abs() <= 1e-12 * 16.0);
        prop_assert!((r.weak - s.weak).abs() <= 1e-12 * 16.0);
    }

    #[test]
    fn sgd_never_leaves_the_ball(
        model in model_strategy(),
        theta in vec_strategy(3, 2.0),
        z in vec_strategy(3, 2.0),
        y in any::<bool>(),
        lr in 0.01f64..5.0,
        radius in 0.1f64..3.0,
    ) {
        let obs = DuelObservation { round: 0, first: 0, second: 1, contrast: z, outcome: y };
        let mut start = theta;
        let n = dot(&start, &start).sqrt();
        if n > radius {
            start.iter_mut().for_each(|v| *v *= radius / n);
        }
        let next = sgd_step(&start, &obs, &model, lr, radius).unwrap();
        prop_assert!(dot(&next, &next).sqrt() <= radius * (1.0 + 1e-12));
    }

    #[test]
    fn interior_mle_is_stationary(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = stream_from_seed(seed);
        let model = ComparisonModel::btl();
        let theta = uniform_in_ball(d, &mut rng);
        let obs: Vec<DuelObservation> = (0..60)
            .map(|round| {
                let z: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y = rng.random::<f64>() < model.prob(dot(&theta, &z)).unwrap();
                DuelObservation { round, first: 0, second: 1, contrast: z, outcome: y }
            })
            .collect();
        let opts = MleOptions::for_dim(d);
        let fit = fit_mle(&obs, &model, &opts, &vec![0.0; d]).unwrap();
        let norm = dot(&fit.theta, &fit.theta).sqrt();
        if norm < opts.domain_radius * (1.0 - 1e-6) {
            let g = log_likelihood_grad(&fit.theta, &obs, &model).unwrap();
            prop_assert!(dot(&g, &g).sqrt() <= 1e-4, "gradient {:?}", g);
        }
    }

    #[test]
    fn truncation_bound(eps in -1e6f64..1e6, c in 1e-3f64..50.0) {
        let t = truncate_perturbation(eps, c);
        prop_assert!(t.abs() <= c);
        if eps.abs() <= c {
            prop_assert_eq!(t, eps);
        }
    }

    #[test]
    fn hyperparams_enforce_ordering(c1 in -1.0f64..5.0, c2 in -1.0f64..5.0, ct in -1.0f64..5.0) {
        let made = HyperParams::new(
            c1,
            c2,
            ct,
            5,
            CouplingSchedule::Constant(0.5),
            PerturbationDistribution::standard(PerturbationKind::Gumbel),
            ComparisonModel::btl(),
            EstimatorMode::Sgd { learning_rate: 0.5, domain_radius: 1.0 },
        );
        prop_assert_eq!(made.is_ok(), 0.0 < ct && ct < c2 && c2 <= c1);
    }

    #[test]
    fn first_arm_ignores_a_common_score_shift(
        seed in any::<u64>(),
        shift in -10.0f64..10.0,
    ) {
        // Shifting every perturbed score by the same amount keeps the argmax.
        let mut rng = stream_from_seed(seed);
        let (n, d) = (7, 3);
        let arms: Vec<Vec<f64>> = (0..n).map(|_| uniform_in_ball(d, &mut rng)).collect();
        let ctx = ContextMatrix::from_arms(&arms).unwrap();
        let theta = uniform_in_ball(d, &mut rng);
        let mut gram = GramState::new(d, 1.0).unwrap();
        for _ in 0..5 {
            gram.rank_one_update(&uniform_in_ball(d, &mut rng)).unwrap();
        }
        let eps: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let all: Vec<usize> = (0..n).collect();
        let chosen = first_arm(&ctx, &all, &theta, &gram, &eps);
        let scores: Vec<f64> = (0..n)
            .map(|k| dot(ctx.arm(k), &theta) + eps[k] * gram.weighted_norm(ctx.arm(k)).unwrap() + shift)
            .collect();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expect = scores.iter().position(|&s| s == best).unwrap();
        prop_assert_eq!(chosen, expect);
    }

    #[test]
    fn sup_colstim_rounds_add_up(seed in any::<u64>(), n in 2usize..8, d in 1usize..4, horizon in 10usize..400) {
        prop_assume!(horizon > d);
        let hp = default_hyperparams(HyperMode::Practical, horizon, d, n, 0.1, 0.5).unwrap();
        let mut rng = stream_from_seed(seed);
        let inst = ProblemInstance::generate(
            Scenario::Medium,
            n,
            d,
            ComparisonModel::btl(),
            PerturbationDistribution::standard(PerturbationKind::Gumbel),
            &mut rng,
        )
        .unwrap();
        let mut policy = SupColstim::new(hp, n, d, horizon, seed ^ 1).unwrap();
        for _ in 0..horizon {
            let ctx = inst.sample_context(&mut rng);
            let pair = policy.select(&ctx).unwrap();
            let won = inst.sample_feedback(&ctx, pair.0, pair.1, &mut rng).unwrap();
            policy.update(&ctx, pair, won).unwrap();
        }
        let total = policy.exploration_rounds() + policy.stage_round_counts().iter().sum::<usize>();
        prop_assert_eq!(total, horizon);
    }
}

fn policies(n: usize, d: usize, horizon: usize, seed: u64) -> Vec<Box<dyn DuelPolicy>> {
    let hp = default_hyperparams(HyperMode::Practical, horizon, d, n, 0.1, 0.5).unwrap();
    let mut short = hp.clone();
    short.tau = 10;
    let mp = MaxInpParams { t0: 10, ..MaxInpParams::practical(n, d, horizon, hp.estimator.clone()) };
    vec![
        Box::new(Colstim::new(short.clone(), n, d, seed).unwrap()),
        Box::new(SupColstim::new(short, n, d, horizon, seed).unwrap()),
        Box::new(MaxInP::new(mp, n, d, seed).unwrap()),
        Box::new(DoubleThompson::new(n, DTS_ALPHA, seed).unwrap()),
        Box::new(SelfSparring::new(n, seed).unwrap()),
        Box::new(RandomPolicy::new(n, seed).unwrap()),
    ]
}

fn play(policy: &mut dyn DuelPolicy, inst: &ProblemInstance, horizon: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = stream_from_seed(seed);
    (0..horizon)
        .map(|_| {
            let ctx = inst.sample_context(&mut rng);
            let pair = policy.select(&ctx).unwrap();
            let won = inst.sample_feedback(&ctx, pair.0, pair.1, &mut rng).unwrap();
            policy.update(&ctx, pair, won).unwrap();
            pair
        })
        .collect()
}

#[test]
fn same_seed_same_actions() {
    let (n, d, horizon) = (6, 3, 150);
    let inst = ProblemInstance::generate(
        Scenario::Medium,
        n,
        d,
        ComparisonModel::btl(),
        PerturbationDistribution::standard(PerturbationKind::Gumbel),
        &mut stream_from_seed(3),
    )
    .unwrap();
    let mut a = policies(n, d, horizon, 17);
    let mut b = policies(n, d, horizon, 17);
    let mut c = policies(n, d, horizon, 18);
    let mut differs = 0;
    for ((pa, pb), pc) in a.iter_mut().zip(b.iter_mut()).zip(c.iter_mut()) {
        let xa = play(pa.as_mut(), &inst, horizon, 5);
        assert_eq!(xa, play(pb.as_mut(), &inst, horizon, 5));
        if xa != play(pc.as_mut(), &inst, horizon, 5) {
            differs += 1;
        }
    }
    assert!(differs >= 4, "seeds should matter for the randomised policies");
}

#[test]
fn perturbed_utilities_induce_btl() {
    // With Gumbel noise the arm with the larger perturbed utility wins with
    // probability logistic(u_i - u_j).
    let g = PerturbationDistribution::standard(PerturbationKind::Gumbel);
    let mut rng = stream_from_seed(99);
    let trials = 1_000_000;
    let wins = (0..trials).filter(|_| 1.0 + g.sample(&mut rng) > g.sample(&mut rng)).count();
    let p = ComparisonModel::btl().prob(1.0).unwrap();
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let freq = wins as f64 / trials as f64;
    assert!((freq - p).abs() <= 3.0 * sigma, "{freq} vs {p}");
    assert!((p - 1.0 / (1.0 + (-1.0f64).exp())).abs() <= 1e-15);
}
