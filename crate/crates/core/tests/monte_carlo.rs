//! Statistical oracles. Every check uses a fixed seed and a 5-standard-error band.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vits_core::agents::{langevin_step, Agent, LmcTsAgent, UniformAgent};
use vits_core::bandit::{ArmSet, EnvKind, Environment};
use vits_core::diagnostics::stein_identity_check;
use vits_core::engine::{
    compute_schedule, hessian_free_a, init_state, standard_normal, update_posterior, Mode,
    VariationalState,
};
use vits_core::linalg::{Matrix, Vector};
use vits_core::model::{
    exact_posterior, HyperParams, LinearPotential, LogisticPotential, SufficientStats,
};
use vits_core::sim::Simulation;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_stats(d: usize, n: usize, rng: &mut ChaCha8Rng) -> SufficientStats {
    let mut s = SufficientStats::new(d, 1.0).unwrap();
    for _ in 0..n {
        let phi = standard_normal(d, rng).normalize() * rng.random::<f64>();
        s.update(&phi, rng.random_range(-1.0..1.0)).unwrap();
    }
    s
}

fn state(d: usize, rng: &mut ChaCha8Rng) -> VariationalState {
    let mu = standard_normal(d, rng);
    let b = Matrix::identity(d, d) + Matrix::from_fn(d, d, |_, _| rng.random_range(-0.3..0.3));
    VariationalState::from_parts(mu, b, Mode::Vits1).unwrap()
}

#[test]
fn sample_covariance_matches_factor() {
    let mut rng = rng(1);
    let st = state(3, &mut rng);
    let sigma = st.covariance();
    let n = 100_000;
    let draws: Vec<Vector> = (0..n).map(|_| st.sample(&mut rng) - st.mu()).collect();
    for i in 0..3 {
        for j in 0..3 {
            let prods: Vec<f64> = draws.iter().map(|x| x[i] * x[j]).collect();
            let mean = prods.iter().sum::<f64>() / n as f64;
            let var = prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - sigma[(i, j)]).abs() <= 5.0 * se,
                "({i},{j}): {mean} vs {}",
                sigma[(i, j)]
            );
        }
    }
}

#[test]
fn hessian_free_mean_is_scaled_gram() {
    let mut rng = rng(2);
    let eta = 0.6;
    let stats = random_stats(3, 6, &mut rng);
    let target = stats.v() * eta;
    let potential = LinearPotential::new(stats, eta);
    let st = state(3, &mut rng);
    let c = st.precision().unwrap().cholesky().unwrap().l().transpose();
    let n = 100_000;
    let mut sum = Matrix::zeros(3, 3);
    let mut sq = Matrix::zeros(3, 3);
    for _ in 0..n {
        let theta = st.sample(&mut rng);
        let grad = vits_core::model::Potential::grad(&potential, &theta).unwrap();
        let a = hessian_free_a(&c, &theta, st.mu(), &grad);
        sq += a.component_mul(&a);
        sum += a;
    }
    let mean = &sum / n as f64;
    for i in 0..3 {
        for j in 0..3 {
            let var = (sq[(i, j)] / n as f64 - mean[(i, j)].powi(2)) * n as f64 / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!(
                (mean[(i, j)] - target[(i, j)]).abs() <= 5.0 * se,
                "({i},{j})"
            );
        }
    }
}

#[test]
fn stein_check_passes_on_linear_and_logistic() {
    let mut rng = rng(3);
    let stats = random_stats(3, 5, &mut rng);
    let linear = LinearPotential::new(stats, 0.8);
    let st = state(3, &mut rng);
    let report = stein_identity_check(&st, &linear, 100_000, &mut rng).unwrap();
    assert!(report.pass, "{report:?}");

    let history = vec![
        (Vector::from_vec(vec![0.6, 0.0, 0.8]), 1.0),
        (Vector::from_vec(vec![0.0, 1.0, 0.0]), 0.0),
    ];
    let logistic = LogisticPotential::from_history(3, 0.8, 1.0, &history).unwrap();
    let report = stein_identity_check(&st, &logistic, 100_000, &mut rng).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn stein_check_on_zero_potential() {
    let mut rng = rng(4);
    let zero = LinearPotential::new(SufficientStats::new(3, 1.0).unwrap(), 0.0);
    let st = state(3, &mut rng);
    let report = stein_identity_check(&st, &zero, 10_000, &mut rng).unwrap();
    assert!(report.pass);
    assert_eq!(report.worst_violation, -5.0);
}

#[test]
fn langevin_noise_variance_is_two_h() {
    let mut rng = rng(5);
    let h = 0.03;
    let n = 100_000;
    let zero = Vector::zeros(2);
    let incs: Vec<f64> = (0..n)
        .map(|_| {
            let xi = standard_normal(2, &mut rng);
            langevin_step(&zero, &zero, h, &xi)[0]
        })
        .collect();
    let var = incs.iter().map(|x| x * x).sum::<f64>() / n as f64;
    // Var of a chi-square-type second moment: 2 (2h)^2.
    let se = (2.0_f64).sqrt() * 2.0 * h / (n as f64).sqrt();
    assert!((var - 2.0 * h).abs() <= 5.0 * se, "{var}");
}

#[test]
fn langevin_stationary_covariance() {
    let mut rng = rng(6);
    let d = 3;
    let eta = 1.0;
    let stats = random_stats(d, 8, &mut rng);
    let target = exact_posterior(&stats, eta).sigma_hat;
    let params = HyperParams::new(d, 100, 1.0, 1.0)
        .unwrap()
        .with_eta(eta)
        .unwrap();
    let h = 0.1 / (eta * stats.lambda_max());
    let potential = Box::new(LinearPotential::new(stats, eta));
    let mut agent = LmcTsAgent::new(&params, potential, Some(h), 1, &mut rng).unwrap();
    let burn = 5_000;
    let n = 100_000;
    let mut draws = Vec::with_capacity(n);
    for i in 0..burn + n {
        agent.advance(&mut rng).unwrap();
        if i >= burn {
            draws.push(agent.theta().clone());
        }
    }
    let mean = draws.iter().fold(Vector::zeros(d), |acc, x| acc + x) / n as f64;
    let cov = draws.iter().fold(Matrix::zeros(d, d), |acc, x| {
        acc + (x - &mean) * (x - &mean).transpose()
    }) / (n - 1) as f64;
    let rel = (&cov - &target).norm() / target.norm();
    assert!(rel <= 0.10, "relative Frobenius gap {rel}");
}

#[test]
fn vits1_terminal_mean_is_unbiased() {
    let mut rng = rng(7);
    let d = 3;
    let params = HyperParams::new(d, 20, 1.0, 1.0)
        .unwrap()
        .with_eta(1.0)
        .unwrap();
    let stats = random_stats(d, 10, &mut rng);
    let mu_hat = exact_posterior(&stats, params.eta).mu_hat;
    let potential = LinearPotential::new(stats.clone(), params.eta);
    let schedule = compute_schedule(&stats, &params).unwrap();
    let n = 200;
    let finals: Vec<Vector> = (0..n)
        .map(|_| {
            let mut st = init_state(&params, Mode::Vits1, &mut rng);
            update_posterior(&mut st, &potential, &schedule, &mut rng).unwrap();
            st.mu().clone()
        })
        .collect();
    for i in 0..d {
        let xs: Vec<f64> = finals.iter().map(|m| m[i]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - mu_hat[i]).abs() <= 5.0 * se,
            "coordinate {i}: {mean} vs {}",
            mu_hat[i]
        );
    }
}

#[test]
fn uniform_regret_matches_mean_gap() {
    let theta = Vector::from_vec(vec![0.6, 0.8]);
    let env = Environment::new(theta.clone(), EnvKind::LinearGaussian, 1.0).unwrap();
    let feats = Matrix::from_row_slice(3, 2, &[0.6, 0.8, 1.0, 0.0, 0.0, -1.0]);
    let arms = ArmSet::new(feats.clone()).unwrap();
    let gaps: Vec<f64> = (0..3)
        .map(|a| 1.0 - feats.row(a).transpose().dot(&theta))
        .collect();
    let expected = gaps.iter().sum::<f64>() / 3.0;
    let var = gaps.iter().map(|g| (g - expected).powi(2)).sum::<f64>() / 3.0;
    let n = 100_000;
    let mut sim = Simulation::with_arms(env, arms, 8);
    let records = sim.run(&mut UniformAgent, n).unwrap();
    let mean = records.last().unwrap().cum_regret / n as f64;
    assert!(
        (mean - expected).abs() <= 5.0 * (var / n as f64).sqrt(),
        "{mean} vs {expected}"
    );
}

#[test]
fn uniform_picks_every_arm() {
    let mut rng = rng(9);
    let arms = ArmSet::new(Matrix::identity(4, 4)).unwrap();
    let mut counts = [0usize; 4];
    let mut agent = UniformAgent;
    for _ in 0..4000 {
        counts[agent.select(&arms, &mut rng).unwrap()] += 1;
    }
    assert!(counts.iter().all(|c| (850..1150).contains(c)), "{counts:?}");
}
