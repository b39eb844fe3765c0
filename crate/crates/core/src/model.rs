//! Problem constants, posterior sufficient statistics and the potentials `U_t`.
//!
//! A potential is the (η-scaled) negative log posterior. The engine only ever talks
//! to it through [`Potential`], so the same update code drives the linear-Gaussian
//! and the Bernoulli-logistic models.

use serde::{Deserialize, Serialize};

use crate::engine::compute_eta;
use crate::error::{invalid, Result, VitsError};
use crate::linalg::{
    all_finite_vec, check_dim, check_square, outer, sym_extreme_eigenvalues, symmetrize, Matrix,
    Vector,
};

/// Slack allowed on `|phi|_2 <= 1` to absorb normalisation round-off.
const UNIT_NORM_SLACK: f64 = 1e-9;

/// Smallest admissible eigenvalue of `V` before the run is declared numerically broken.
const LAMBDA_MIN_FLOOR: f64 = 1e-12;

/// How the variational mean is initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanInit {
    /// `mu = 0`.
    #[default]
    Zero,
    /// `mu ~ N(0, I / (11 eta lambda))`.
    Gaussian,
}

/// Problem constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Parameter dimension.
    pub d: usize,
    /// Horizon `T`.
    pub horizon: usize,
    /// Prior precision scale, in `(0, 1]`.
    pub lambda: f64,
    /// Sub-Gaussian constant, `>= 1`.
    pub r: f64,
    /// Inverse temperature, in `(0, 1]`.
    pub eta: f64,
    pub mean_init: MeanInit,
}

impl HyperParams {
    /// Builds the constants with `eta` taken from [`compute_eta`].
    pub fn new(d: usize, horizon: usize, lambda: f64, r: f64) -> Result<Self> {
        let params = Self {
            d,
            horizon,
            lambda,
            r,
            eta: 1.0,
            mean_init: MeanInit::Zero,
        };
        params.validate_base()?;
        let eta = compute_eta(lambda, r, d, horizon);
        Ok(Self { eta, ..params })
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mean_init(mut self, mean_init: MeanInit) -> Self {
        self.mean_init = mean_init;
        self
    }

    fn validate_base(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d", "must be positive"));
        }
        if self.horizon == 0 {
            return Err(invalid("T", "must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(invalid("lambda", format!("{} not in (0, 1]", self.lambda)));
        }
        if !(self.r >= 1.0 && self.r.is_finite()) {
            return Err(invalid("R", format!("{} is not >= 1", self.r)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_base()?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta", format!("{} not in (0, 1]", self.eta)));
        }
        Ok(())
    }
}

/// Regularised Gram matrix `V = lambda I + sum phi phi^T`, response vector `b = sum r phi`,
/// the cached inverse of `V` and its extreme eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    lambda: f64,
    v: Matrix,
    v_inv: Matrix,
    b: Vector,
    lambda_min: f64,
    lambda_max: f64,
    n_obs: usize,
}

impl SufficientStats {
    pub fn new(d: usize, lambda: f64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "must be positive"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("{lambda} is not positive")));
        }
        Ok(Self {
            lambda,
            v: Matrix::identity(d, d) * lambda,
            v_inv: Matrix::identity(d, d) / lambda,
            b: Vector::zeros(d),
            lambda_min: lambda,
            lambda_max: lambda,
            n_obs: 0,
        })
    }

    /// Builds statistics from an explicit `V`, `b` pair, inverting `V` densely.
    ///
    /// Intended for tests and diagnostics that need an arbitrary SPD instance.
    pub fn from_parts(v: Matrix, b: Vector, lambda: f64) -> Result<Self> {
        let d = b.len();
        check_square(&v, d)?;
        let v = symmetrize(&v);
        let v_inv = v
            .clone()
            .cholesky()
            .ok_or(VitsError::NotPositiveDefinite("V"))?
            .inverse();
        let (lambda_min, lambda_max) = sym_extreme_eigenvalues(&v);
        Ok(Self {
            lambda,
            v,
            v_inv: symmetrize(&v_inv),
            b,
            lambda_min,
            lambda_max,
            n_obs: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn v(&self) -> &Matrix {
        &self.v
    }
    pub fn v_inv(&self) -> &Matrix {
        &self.v_inv
    }
    pub fn b(&self) -> &Vector {
        &self.b
    }
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }
    /// Condition number `lambda_max / lambda_min`.
    pub fn kappa(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }

    /// Absorbs one observation: rank-one Sherman–Morrison update of the inverse,
    /// followed by an eigenvalue refresh.
    pub fn update(&mut self, phi: &Vector, reward: f64) -> Result<()> {
        check_dim(self.dim(), phi.len())?;
        if !all_finite_vec(phi) {
            return Err(VitsError::NonFinite("feature vector"));
        }
        if !reward.is_finite() {
            return Err(VitsError::NonFinite("reward"));
        }
        let norm = phi.norm();
        if norm > 1.0 + UNIT_NORM_SLACK {
            return Err(invalid("phi", format!("norm {norm} exceeds 1")));
        }

        let v_inv_phi = &self.v_inv * phi;
        let denom = 1.0 + phi.dot(&v_inv_phi);
        self.v_inv -= outer(&v_inv_phi, &v_inv_phi) / denom;
        self.v_inv = symmetrize(&self.v_inv);
        self.v += outer(phi, phi);
        self.b.axpy(reward, phi, 1.0);
        self.n_obs += 1;

        let (lo, hi) = sym_extreme_eigenvalues(&self.v);
        if lo.is_nan() || lo < LAMBDA_MIN_FLOOR {
            return Err(VitsError::NumericalFloor(lo));
        }
        self.lambda_min = lo;
        self.lambda_max = hi;
        Ok(())
    }
}

/// Functional form of [`SufficientStats::update`].
pub fn sherman_morrison_update(
    stats: &SufficientStats,
    phi: &Vector,
    reward: f64,
) -> Result<SufficientStats> {
    let mut next = stats.clone();
    next.update(phi, reward)?;
    Ok(next)
}

/// `eta (V theta - b)`.
pub fn grad_linear(theta: &Vector, stats: &SufficientStats, eta: f64) -> Result<Vector> {
    check_dim(stats.dim(), theta.len())?;
    Ok((stats.v() * theta - stats.b()) * eta)
}

/// `eta V`.
pub fn hessian_linear(stats: &SufficientStats, eta: f64) -> Matrix {
    stats.v() * eta
}

/// Logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn check_binary(r: f64) -> Result<()> {
    if r == 0.0 || r == 1.0 {
        Ok(())
    } else {
        Err(VitsError::NonBinaryReward(r))
    }
}

/// Gradient of the eta-scaled logistic negative log posterior over a raw history:
/// `eta [sum_s phi_s (sigma(phi_s^T theta) - r_s) + lambda theta]`.
pub fn grad_logistic(
    theta: &Vector,
    history: &[(Vector, f64)],
    eta: f64,
    lambda: f64,
) -> Result<Vector> {
    let mut g = theta * lambda;
    for (phi, r) in history {
        check_dim(theta.len(), phi.len())?;
        check_binary(*r)?;
        g.axpy(sigmoid(phi.dot(theta)) - r, phi, 1.0);
    }
    Ok(g * eta)
}

/// `eta [sum_s sigma'(phi_s^T theta) phi_s phi_s^T + lambda I]`.
pub fn hessian_logistic(
    theta: &Vector,
    history: &[(Vector, f64)],
    eta: f64,
    lambda: f64,
) -> Result<Matrix> {
    let d = theta.len();
    let mut h = Matrix::identity(d, d) * lambda;
    for (phi, r) in history {
        check_dim(d, phi.len())?;
        check_binary(*r)?;
        let s = sigmoid(phi.dot(theta));
        h.ger(s * (1.0 - s), phi, phi, 1.0);
    }
    Ok(h * eta)
}

/// Gaussian posterior of the linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    pub mu_hat: Vector,
    pub sigma_hat: Matrix,
}

/// `mu_hat = V^{-1} b`, `sigma_hat = V^{-1} / eta`.
pub fn exact_posterior(stats: &SufficientStats, eta: f64) -> ExactPosterior {
    ExactPosterior {
        mu_hat: stats.v_inv() * stats.b(),
        sigma_hat: symmetrize(stats.v_inv()) / eta,
    }
}

/// Negative log posterior `U_t` (up to an additive constant) and its derivatives.
pub trait Potential: Send {
    fn dim(&self) -> usize;

    fn eta(&self) -> f64;

    fn value(&self, theta: &Vector) -> Result<f64>;

    fn grad(&self, theta: &Vector) -> Result<Vector>;

    fn hessian(&self, theta: &Vector) -> Result<Matrix>;

    /// Folds one `(phi, reward)` observation into the potential.
    fn observe(&mut self, phi: &Vector, reward: f64) -> Result<()>;

    /// Feature Gram statistics `lambda I + sum phi phi^T`, used for schedules.
    fn gram(&self) -> &SufficientStats;

    /// Closed-form `(E[grad U], E[hess U])` under `N(mu, cov)`, when available.
    fn gaussian_expectations(
        &self,
        _mu: &Vector,
        _cov: &Matrix,
    ) -> Option<Result<(Vector, Matrix)>> {
        None
    }
}

/// `U(theta) = eta (theta^T V theta / 2 - b^T theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPotential {
    stats: SufficientStats,
    eta: f64,
}

impl LinearPotential {
    pub fn new(stats: SufficientStats, eta: f64) -> Self {
        Self { stats, eta }
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    pub fn posterior(&self) -> ExactPosterior {
        exact_posterior(&self.stats, self.eta)
    }
}

impl Potential for LinearPotential {
    fn dim(&self) -> usize {
        self.stats.dim()
    }

    fn eta(&self) -> f64 {
        self.eta
    }

    fn value(&self, theta: &Vector) -> Result<f64> {
        check_dim(self.dim(), theta.len())?;
        let quad = theta.dot(&(self.stats.v() * theta));
        Ok(self.eta * (0.5 * quad - self.stats.b().dot(theta)))
    }

    fn grad(&self, theta: &Vector) -> Result<Vector> {
        grad_linear(theta, &self.stats, self.eta)
    }

    fn hessian(&self, theta: &Vector) -> Result<Matrix> {
        check_dim(self.dim(), theta.len())?;
        Ok(hessian_linear(&self.stats, self.eta))
    }

    fn observe(&mut self, phi: &Vector, reward: f64) -> Result<()> {
        self.stats.update(phi, reward)
    }

    fn gram(&self) -> &SufficientStats {
        &self.stats
    }

    fn gaussian_expectations(
        &self,
        mu: &Vector,
        _cov: &Matrix,
    ) -> Option<Result<(Vector, Matrix)>> {
        Some(
            self.grad(mu)
                .map(|g| (g, hessian_linear(&self.stats, self.eta))),
        )
    }
}

/// Observations sharing one feature vector.
#[derive(Debug, Clone, PartialEq)]
struct FeatureGroup {
    phi: Vector,
    count: f64,
    successes: f64,
}

/// Bernoulli-logistic potential with a `N(0, I / lambda)` prior, scaled by `eta`.
///
/// Observations are grouped by identical feature vector, so a fixed arm set costs
/// `O(K d)` per gradient regardless of the number of rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticPotential {
    groups: Vec<FeatureGroup>,
    gram: SufficientStats,
    eta: f64,
    lambda: f64,
}

impl LogisticPotential {
    pub fn new(d: usize, eta: f64, lambda: f64) -> Result<Self> {
        Ok(Self {
            groups: Vec::new(),
            gram: SufficientStats::new(d, lambda)?,
            eta,
            lambda,
        })
    }

    pub fn from_history(
        d: usize,
        eta: f64,
        lambda: f64,
        history: &[(Vector, f64)],
    ) -> Result<Self> {
        let mut p = Self::new(d, eta, lambda)?;
        for (phi, r) in history {
            p.observe(phi, *r)?;
        }
        Ok(p)
    }

    pub fn n_obs(&self) -> usize {
        self.gram.n_obs()
    }
}

impl Potential for LogisticPotential {
    fn dim(&self) -> usize {
        self.gram.dim()
    }

    fn eta(&self) -> f64 {
        self.eta
    }

    fn value(&self, theta: &Vector) -> Result<f64> {
        check_dim(self.dim(), theta.len())?;
        let mut u = 0.5 * self.lambda * theta.norm_squared();
        for g in &self.groups {
            let z = g.phi.dot(theta);
            u += g.count * softplus(z) - g.successes * z;
        }
        Ok(self.eta * u)
    }

    fn grad(&self, theta: &Vector) -> Result<Vector> {
        check_dim(self.dim(), theta.len())?;
        let mut grad = theta * self.lambda;
        for g in &self.groups {
            let s = sigmoid(g.phi.dot(theta));
            grad.axpy(g.count * s - g.successes, &g.phi, 1.0);
        }
        Ok(grad * self.eta)
    }

    fn hessian(&self, theta: &Vector) -> Result<Matrix> {
        let d = self.dim();
        check_dim(d, theta.len())?;
        let mut h = Matrix::identity(d, d) * self.lambda;
        for g in &self.groups {
            let s = sigmoid(g.phi.dot(theta));
            h.ger(g.count * s * (1.0 - s), &g.phi, &g.phi, 1.0);
        }
        Ok(h * self.eta)
    }

    fn observe(&mut self, phi: &Vector, reward: f64) -> Result<()> {
        check_binary(reward)?;
        self.gram.update(phi, reward)?;
        match self.groups.iter_mut().find(|g| g.phi == *phi) {
            Some(g) => {
                g.count += 1.0;
                g.successes += reward;
            }
            None => self.groups.push(FeatureGroup {
                phi: phi.clone(),
                count: 1.0,
                successes: reward,
            }),
        }
        Ok(())
    }

    fn gram(&self) -> &SufficientStats {
        &self.gram
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inverse;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_unit(d: usize, rng: &mut impl Rng) -> Vector {
        let v = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        v.normalize()
    }

    fn random_vec(d: usize, rng: &mut impl Rng) -> Vector {
        Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn sherman_morrison_two_by_two() {
        let stats = SufficientStats::new(2, 1.0).unwrap();
        let next = sherman_morrison_update(&stats, &Vector::from_vec(vec![1.0, 0.0]), 0.0).unwrap();
        assert_eq!(
            next.v(),
            &Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]))
        );
        assert!(
            (next.v_inv() - Matrix::from_diagonal(&Vector::from_vec(vec![0.5, 1.0]))).norm()
                < 1e-15
        );
        assert_eq!(next.b(), &Vector::zeros(2));
        assert_eq!(next.n_obs(), 1);
        assert_eq!(next.lambda_max(), 2.0);
        assert_eq!(next.lambda_min(), 1.0);
    }

    #[test]
    fn zero_feature_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut stats = SufficientStats::new(3, 0.5).unwrap();
        for _ in 0..5 {
            stats.update(&random_unit(3, &mut rng), 1.3).unwrap();
        }
        let next = sherman_morrison_update(&stats, &Vector::zeros(3), 42.0).unwrap();
        assert_eq!(next.v_inv(), stats.v_inv());
        assert_eq!(next.b(), stats.b());
    }

    #[test]
    fn sherman_morrison_tracks_dense_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut stats = SufficientStats::new(5, 1.0).unwrap();
        let mut worst = 0.0_f64;
        for _ in 0..200 {
            stats
                .update(&random_unit(5, &mut rng), rng.random())
                .unwrap();
            let dense = inverse(stats.v(), "V").unwrap();
            worst = worst.max((stats.v_inv() - dense).norm());
        }
        assert!(worst <= 1e-9, "worst gap {worst:e}");
    }

    #[test]
    fn update_rejects_bad_input() {
        let mut stats = SufficientStats::new(2, 1.0).unwrap();
        let nan = Vector::from_vec(vec![f64::NAN, 0.0]);
        assert_eq!(
            stats.update(&nan, 0.0),
            Err(VitsError::NonFinite("feature vector"))
        );
        let phi = Vector::from_vec(vec![0.6, 0.0]);
        assert_eq!(
            stats.update(&phi, f64::INFINITY),
            Err(VitsError::NonFinite("reward"))
        );
        assert!(matches!(
            stats.update(&Vector::from_vec(vec![1.0, 1.0]), 0.0),
            Err(VitsError::InvalidParameter { name: "phi", .. })
        ));
        assert!(matches!(
            stats.update(&Vector::zeros(3), 0.0),
            Err(VitsError::DimensionMismatch {
                expected: 2,
                got: 3
            })
        ));
        assert_eq!(stats.n_obs(), 0);
    }

    #[test]
    fn linear_gradient_examples() {
        let stats = SufficientStats::from_parts(
            Matrix::from_element(1, 1, 2.0),
            Vector::from_element(1, 1.0),
            1.0,
        )
        .unwrap();
        let g = grad_linear(&Vector::from_element(1, 3.0), &stats, 0.5).unwrap();
        assert_eq!(g[0], 2.5);
        let g0 = grad_linear(&Vector::from_element(1, 3.0), &stats, 0.0).unwrap();
        assert_eq!(g0[0], 0.0);
        assert!(grad_linear(&Vector::zeros(2), &stats, 1.0).is_err());
    }

    #[test]
    fn linear_gradient_vanishes_at_posterior_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut stats = SufficientStats::new(4, 1.0).unwrap();
        for _ in 0..30 {
            let r = rng.sample::<f64, _>(StandardNormal);
            stats.update(&random_unit(4, &mut rng), r).unwrap();
        }
        let post = exact_posterior(&stats, 0.3);
        let g = grad_linear(&post.mu_hat, &stats, 0.3).unwrap();
        assert!(g.norm() < 1e-10);
    }

    #[test]
    fn linear_hessian_examples() {
        let id = SufficientStats::new(3, 1.0).unwrap();
        assert_eq!(hessian_linear(&id, 1.0), Matrix::identity(3, 3));
        let stats = SufficientStats::from_parts(
            Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 4.0])),
            Vector::zeros(2),
            1.0,
        )
        .unwrap();
        assert_eq!(
            hessian_linear(&stats, 0.5),
            Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0]))
        );
    }

    #[test]
    fn exact_posterior_examples() {
        let prior = SufficientStats::new(3, 1.0).unwrap();
        let post = exact_posterior(&prior, 1.0);
        assert_eq!(post.mu_hat, Vector::zeros(3));
        assert_eq!(post.sigma_hat, Matrix::identity(3, 3));

        let stats = SufficientStats::from_parts(
            Matrix::from_element(1, 1, 2.0),
            Vector::from_element(1, 1.0),
            1.0,
        )
        .unwrap();
        let post = exact_posterior(&stats, 0.5);
        assert!((post.mu_hat[0] - 0.5).abs() < 1e-15);
        assert!((post.sigma_hat[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn logistic_examples() {
        let theta = Vector::from_vec(vec![0.3, -1.2]);
        assert_eq!(grad_logistic(&theta, &[], 1.0, 1.0).unwrap(), theta);
        assert_eq!(
            hessian_logistic(&theta, &[], 1.0, 1.0).unwrap(),
            Matrix::identity(2, 2)
        );

        let hist = vec![(Vector::from_vec(vec![1.0, 0.0]), 1.0)];
        let g = grad_logistic(&Vector::zeros(2), &hist, 1.0, 0.0).unwrap();
        assert_eq!(g, Vector::from_vec(vec![-0.5, 0.0]));
        let h = hessian_logistic(&Vector::zeros(2), &hist, 1.0, 0.0).unwrap();
        let mut expected = Matrix::zeros(2, 2);
        expected[(0, 0)] = 0.25;
        assert_eq!(h, expected);

        let bad = vec![(Vector::from_vec(vec![1.0, 0.0]), 0.5)];
        assert_eq!(
            grad_logistic(&Vector::zeros(2), &bad, 1.0, 1.0),
            Err(VitsError::NonBinaryReward(0.5))
        );
        assert!(hessian_logistic(&Vector::zeros(2), &bad, 1.0, 1.0).is_err());
    }

    #[test]
    fn grouped_logistic_matches_raw_history() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let arms: Vec<Vector> = (0..3).map(|_| random_unit(4, &mut rng)).collect();
        let history: Vec<(Vector, f64)> = (0..40)
            .map(|i| (arms[i % 3].clone(), f64::from(rng.random_bool(0.4) as u8)))
            .collect();
        let pot = LogisticPotential::from_history(4, 0.7, 0.5, &history).unwrap();
        for _ in 0..5 {
            let theta = random_vec(4, &mut rng);
            let g_raw = grad_logistic(&theta, &history, 0.7, 0.5).unwrap();
            let h_raw = hessian_logistic(&theta, &history, 0.7, 0.5).unwrap();
            assert!((pot.grad(&theta).unwrap() - g_raw).norm() < 1e-12);
            assert!((pot.hessian(&theta).unwrap() - h_raw).norm() < 1e-12);
        }
        assert_eq!(pot.n_obs(), 40);
        assert!(matches!(
            LogisticPotential::new(2, 1.0, 1.0)
                .unwrap()
                .observe(&Vector::zeros(2), 2.0),
            Err(VitsError::NonBinaryReward(_))
        ));
    }

    #[test]
    fn hyper_params_validation() {
        assert!(HyperParams::new(0, 10, 1.0, 1.0).is_err());
        assert!(HyperParams::new(2, 0, 1.0, 1.0).is_err());
        assert!(HyperParams::new(2, 10, 1.5, 1.0).is_err());
        assert!(HyperParams::new(2, 10, 1.0, 0.5).is_err());
        let p = HyperParams::new(2, 10, 1.0, 1.0).unwrap();
        assert!(p.eta > 0.0 && p.eta <= 1.0);
        assert!(p.clone().with_eta(1.5).is_err());
        assert!(p.with_eta(1.0).is_ok());
    }
}
