//! Synthetic contextual-bandit environments and regret accounting.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::engine::standard_normal;
use crate::error::{invalid, Result, VitsError};
use crate::linalg::{check_dim, Matrix, Vector};
use crate::model::sigmoid;

const UNIT_NORM_TOL: f64 = 1e-12;

/// Standard deviation of the perturbation that produces the near-optimal arm.
pub const NEAR_OPTIMAL_PERTURBATION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    /// `r = phi^T theta* + noise_std xi`, `xi ~ N(0, 1)`.
    LinearGaussian,
    /// `r ~ Bernoulli(sigma(phi^T theta*))`.
    Logistic,
}

/// The feature vectors offered in one round, one row per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSet {
    features: Matrix,
}

impl ArmSet {
    pub fn new(features: Matrix) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(VitsError::EmptyArmSet);
        }
        for (i, row) in features.row_iter().enumerate() {
            let n = row.norm();
            if n.is_nan() || n > 1.0 + 1e-9 {
                return Err(invalid("arms", format!("arm {i} has norm {n} > 1")));
            }
        }
        Ok(Self { features })
    }

    pub fn n_arms(&self) -> usize {
        self.features.nrows()
    }
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
    pub fn features(&self) -> &Matrix {
        &self.features
    }
    pub fn arm(&self, a: usize) -> Vector {
        self.features.row(a).transpose()
    }
}

/// Index of the row maximising `phi^T theta`; ties go to the lowest index.
pub fn select_arm(theta: &Vector, arms: &ArmSet) -> Result<usize> {
    if arms.n_arms() == 0 {
        return Err(VitsError::EmptyArmSet);
    }
    check_dim(arms.dim(), theta.len())?;
    let scores = arms.features() * theta;
    let mut best = 0;
    for a in 1..scores.len() {
        if scores[a] > scores[best] {
            best = a;
        }
    }
    Ok(best)
}

/// Expected-reward gap `phi*^T theta* - phi_chosen^T theta*`.
pub fn instantaneous_regret(arms: &ArmSet, theta_star: &Vector, chosen: usize) -> f64 {
    let scores = arms.features() * theta_star;
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    best - scores[chosen]
}

fn unit_gaussian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    loop {
        let v = standard_normal(d, rng);
        let n = v.norm();
        if n > 0.0 {
            return v / n;
        }
    }
}

/// Arm 0 is `theta*`, arm 1 is `theta*` perturbed by `N(0, 0.1^2 I)` and renormalised,
/// the remaining arms are independent uniformly random unit vectors.
pub fn build_synthetic_arms<R: Rng + ?Sized>(
    theta_star: &Vector,
    n_arms: usize,
    rng: &mut R,
) -> Result<ArmSet> {
    if n_arms < 2 {
        return Err(invalid(
            "K",
            "the synthetic arm set needs at least two arms",
        ));
    }
    let d = theta_star.len();
    let mut features = Matrix::zeros(n_arms, d);
    features.set_row(0, &theta_star.transpose());
    let perturbed = loop {
        let eps: Vector = Vector::from_fn(d, |_, _| {
            NEAR_OPTIMAL_PERTURBATION * rng.sample::<f64, _>(StandardNormal)
        });
        let v = theta_star + eps;
        let n = v.norm();
        if n > 0.0 {
            break v / n;
        }
    };
    features.set_row(1, &perturbed.transpose());
    for a in 2..n_arms {
        features.set_row(a, &unit_gaussian(d, rng).transpose());
    }
    ArmSet::new(features)
}

/// Ground truth of a synthetic problem. Only the simulator sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    theta_star: Vector,
    kind: EnvKind,
    noise_std: f64,
}

impl Environment {
    pub fn new(theta_star: Vector, kind: EnvKind, noise_std: f64) -> Result<Self> {
        if (theta_star.norm() - 1.0).abs() > UNIT_NORM_TOL {
            return Err(invalid("theta_star", "must have unit norm"));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(invalid("noise_std", format!("{noise_std} is not >= 0")));
        }
        Ok(Self {
            theta_star,
            kind,
            noise_std,
        })
    }

    /// `theta* ~ N(0, I)` rescaled to unit norm.
    pub fn random<R: Rng + ?Sized>(
        d: usize,
        kind: EnvKind,
        noise_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        Self::new(unit_gaussian(d, rng), kind, noise_std)
    }

    pub fn theta_star(&self) -> &Vector {
        &self.theta_star
    }
    pub fn kind(&self) -> EnvKind {
        self.kind
    }
    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// Draws a reward for feature `phi`. Consumes the same amount of randomness
    /// whatever `phi` is, so agents sharing a noise stream see coupled rewards.
    pub fn pull<R: Rng + ?Sized>(&self, phi: &Vector, rng: &mut R) -> f64 {
        let z = phi.dot(&self.theta_star);
        match self.kind {
            EnvKind::LinearGaussian => {
                let xi: f64 = rng.sample(StandardNormal);
                z + self.noise_std * xi
            }
            EnvKind::Logistic => {
                let u: f64 = rng.random();
                if u < sigmoid(z) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn optimal_arm(&self, arms: &ArmSet) -> usize {
        // Unit-norm theta* against an arm set of matching dimension cannot fail.
        select_arm(&self.theta_star, arms).unwrap_or(0)
    }

    pub fn regret(&self, arms: &ArmSet, chosen: usize) -> f64 {
        instantaneous_regret(arms, &self.theta_star, chosen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rows(v: &[&[f64]]) -> ArmSet {
        let d = v[0].len();
        ArmSet::new(Matrix::from_fn(v.len(), d, |i, j| v[i][j])).unwrap()
    }

    #[test]
    fn select_examples() {
        let arms = rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(
            select_arm(&Vector::from_vec(vec![1.0, 0.0]), &arms).unwrap(),
            0
        );
        let same = rows(&[&[0.6, 0.8], &[0.6, 0.8], &[0.6, 0.8]]);
        assert_eq!(
            select_arm(&Vector::from_vec(vec![0.3, -2.0]), &same).unwrap(),
            0
        );
        assert!(select_arm(&Vector::zeros(3), &arms).is_err());
        assert_eq!(
            ArmSet::new(Matrix::zeros(0, 2)),
            Err(VitsError::EmptyArmSet)
        );
    }

    #[test]
    fn select_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let arms =
                ArmSet::new(Matrix::from_fn(5, 3, |_, _| rng.random_range(-0.5..0.5))).unwrap();
            let theta = standard_normal(3, &mut rng);
            let mut best = (0, f64::NEG_INFINITY);
            for a in 0..5 {
                let s: f64 = (0..3).map(|j| arms.features()[(a, j)] * theta[j]).sum();
                if s > best.1 {
                    best = (a, s);
                }
            }
            assert_eq!(select_arm(&theta, &arms).unwrap(), best.0);
        }
    }

    #[test]
    fn synthetic_arms_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let env = Environment::random(10, EnvKind::LinearGaussian, 1.0, &mut rng).unwrap();
        let arms = build_synthetic_arms(env.theta_star(), 10, &mut rng).unwrap();
        assert_eq!(arms.n_arms(), 10);
        for a in 0..10 {
            assert!((arms.arm(a).norm() - 1.0).abs() < 1e-12);
        }
        assert!((arms.arm(0).dot(env.theta_star()) - 1.0).abs() < 1e-12);
        assert_eq!(env.optimal_arm(&arms), 0);
        assert_eq!(env.regret(&arms, 0), 0.0);
        assert!(build_synthetic_arms(env.theta_star(), 1, &mut rng).is_err());
    }

    #[test]
    fn near_optimal_arm_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut ordered = 0;
        for _ in 0..1000 {
            let env = Environment::random(10, EnvKind::LinearGaussian, 1.0, &mut rng).unwrap();
            let arms = build_synthetic_arms(env.theta_star(), 10, &mut rng).unwrap();
            let mu: Vec<f64> = (0..10).map(|a| arms.arm(a).dot(env.theta_star())).collect();
            let rest = mu[2..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if mu[1] < 1.0 && mu[1] > rest {
                ordered += 1;
            }
        }
        assert!(ordered >= 990, "ordering held in {ordered} / 1000");
    }

    #[test]
    fn regret_matches_direct_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let env = Environment::random(4, EnvKind::Logistic, 0.0, &mut rng).unwrap();
            let arms = build_synthetic_arms(env.theta_star(), 6, &mut rng).unwrap();
            let chosen = rng.random_range(0..6);
            let mu: Vec<f64> = (0..6).map(|a| arms.arm(a).dot(env.theta_star())).collect();
            let max = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let r = env.regret(&arms, chosen);
            assert_eq!(r, max - mu[chosen]);
            assert!(r >= 0.0);
        }
    }

    #[test]
    fn noiseless_linear_pull() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let env = Environment::random(3, EnvKind::LinearGaussian, 0.0, &mut rng).unwrap();
        let phi = Vector::from_vec(vec![0.2, -0.3, 0.5]);
        assert_eq!(env.pull(&phi, &mut rng), phi.dot(env.theta_star()));
    }

    #[test]
    fn linear_pull_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let env = Environment::random(3, EnvKind::LinearGaussian, 1.5, &mut rng).unwrap();
        let phi = Vector::from_vec(vec![0.6, 0.0, 0.8]);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| env.pull(&phi, &mut rng)).sum::<f64>() / n as f64;
        let target = phi.dot(env.theta_star());
        assert!((mean - target).abs() <= 5.0 * 1.5 / (n as f64).sqrt());
    }

    #[test]
    fn logistic_pull_at_zero_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let env = Environment::random(3, EnvKind::Logistic, 0.0, &mut rng).unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let r = env.pull(&Vector::zeros(3), &mut rng);
            assert!(r == 0.0 || r == 1.0);
            sum += r;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn environment_rejects_non_unit_theta() {
        assert!(
            Environment::new(Vector::from_vec(vec![1.0, 1.0]), EnvKind::Logistic, 0.0).is_err()
        );
        assert!(Environment::new(
            Vector::from_vec(vec![1.0, 0.0]),
            EnvKind::LinearGaussian,
            -1.0
        )
        .is_err());
    }
}
