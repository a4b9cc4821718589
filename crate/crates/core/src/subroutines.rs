//! Restartable online regressors used as experts: moving average, projected
//! online gradient descent, Online Newton Step and the Vovk-Azoury-Warmuth
//! forecaster.
//!
//! Every learner predicts 0 before it has seen any data.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::learner::Subroutine;
use crate::linalg;

/// Running mean of the outputs observed since birth. Ignores inputs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MovingAverage {
    count: usize,
    sum: f64,
}

impl MovingAverage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }
}

impl Subroutine for MovingAverage {
    fn predict(&self, _x: &[f64]) -> f64 {
        self.mean()
    }

    fn observe(&mut self, _x: &[f64], y: f64) {
        self.count += 1;
        self.sum += y;
    }
}

/// How a gradient-based learner obtains its gradient-norm bound `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradBound {
    Fixed(f64),
    /// Running maximum of the observed gradient norms.
    Adaptive,
}

/// Projected online gradient descent on the square loss over the ℓ2 ball of
/// radius `B`, with step `B / (G √k)` at the `k`-th update since birth.
#[derive(Debug, Clone, PartialEq)]
pub struct Ogd {
    theta: DVector<f64>,
    round_since_birth: usize,
    radius: f64,
    grad_bound: GradBound,
    grad_max: f64,
}

impl Ogd {
    pub fn new(dim: usize, radius: f64, grad_bound: GradBound) -> Self {
        assert!(radius > 0.0, "OGD radius must be positive");
        let grad_max = match grad_bound {
            GradBound::Fixed(g) => {
                assert!(g > 0.0, "OGD gradient bound must be positive");
                g
            }
            GradBound::Adaptive => 0.0,
        };
        Self {
            theta: DVector::zeros(dim),
            round_since_birth: 0,
            radius,
            grad_bound,
            grad_max,
        }
    }

    /// Starts from a given iterate (projected onto the ball).
    pub fn with_theta(mut self, theta: &[f64]) -> Self {
        self.theta = DVector::from_column_slice(theta);
        linalg::project_ball(&mut self.theta, self.radius);
        self
    }

    pub fn theta(&self) -> &[f64] {
        self.theta.as_slice()
    }

    pub fn rounds(&self) -> usize {
        self.round_since_birth
    }

    /// One projected gradient step on `(x·θ - y)²`.
    pub fn step(&mut self, x: &[f64], y: f64) {
        let x = DVector::from_column_slice(x);
        self.round_since_birth += 1;
        let residual = x.dot(&self.theta) - y;
        let grad = x * (2.0 * residual);
        let grad_norm = grad.norm();
        if let GradBound::Adaptive = self.grad_bound {
            self.grad_max = self.grad_max.max(grad_norm);
        }
        if grad_norm == 0.0 || self.grad_max == 0.0 {
            return;
        }
        let eta = self.radius / (self.grad_max * (self.round_since_birth as f64).sqrt());
        self.theta.axpy(-eta, &grad, 1.0);
        linalg::project_ball(&mut self.theta, self.radius);
    }
}

impl Subroutine for Ogd {
    fn predict(&self, x: &[f64]) -> f64 {
        dot(x, self.theta.as_slice())
    }

    fn observe(&mut self, x: &[f64], y: f64) {
        self.step(x, y)
    }
}

/// Constants of the Online Newton Step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnsTuning {
    /// Explicit `γ` and `ε`.
    Fixed { gamma: f64, epsilon: f64 },
    /// `γ = ½·min{1/(4GD), α}`, `ε = 1/(γ²D²)` with `D = 2B` and `G` the
    /// running max of gradient norms. `α` defaults to `1/(32Y²)` with `Y`
    /// the running max `|y|` seen by this instance.
    Adaptive { alpha: Option<f64> },
    /// Explicit `γ` with `ε = 1/(γ²D²)`, `D = 2B`.
    Gamma { gamma: f64 },
}

/// Online Newton Step on the square loss over the ℓ2 ball of radius `B`,
/// keeping `A⁻¹` by rank-one updates and projecting in the `A`-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Ons {
    theta: DVector<f64>,
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    gamma: f64,
    epsilon: f64,
    radius: f64,
    tuning: OnsTuning,
    grad_max: f64,
    y_max: f64,
    initialized: bool,
    fallbacks: usize,
}

impl Ons {
    pub fn new(dim: usize, radius: f64, tuning: OnsTuning) -> Self {
        assert!(radius > 0.0, "ONS radius must be positive");
        let (gamma, epsilon, initialized) = match tuning {
            OnsTuning::Fixed { gamma, epsilon } => {
                assert!(
                    gamma > 0.0 && epsilon > 0.0,
                    "ONS constants must be positive"
                );
                (gamma, epsilon, true)
            }
            OnsTuning::Gamma { gamma } => {
                assert!(gamma > 0.0, "ONS gamma must be positive");
                let diameter = 2.0 * radius;
                (gamma, 1.0 / (gamma * gamma * diameter * diameter), true)
            }
            // replaced at the first non-zero gradient
            OnsTuning::Adaptive { .. } => (1.0, 1.0, false),
        };
        Self {
            theta: DVector::zeros(dim),
            a: DMatrix::identity(dim, dim) * epsilon,
            a_inv: DMatrix::identity(dim, dim) / epsilon,
            gamma,
            epsilon,
            radius,
            tuning,
            grad_max: 0.0,
            y_max: 0.0,
            initialized,
            fallbacks: 0,
        }
    }

    pub fn theta(&self) -> &[f64] {
        self.theta.as_slice()
    }

    pub fn a_inv(&self) -> &DMatrix<f64> {
        &self.a_inv
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of rank-one updates that needed the direct-solve fallback.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    pub fn step(&mut self, x: &[f64], y: f64) {
        let x = DVector::from_column_slice(x);
        self.y_max = self.y_max.max(y.abs());
        let residual = x.dot(&self.theta) - y;
        let grad = x * (2.0 * residual);
        let grad_norm = grad.norm();
        if grad_norm == 0.0 {
            return;
        }
        self.grad_max = self.grad_max.max(grad_norm);
        if let OnsTuning::Adaptive { alpha } = self.tuning {
            let diameter = 2.0 * self.radius;
            let alpha = alpha.unwrap_or_else(|| {
                if self.y_max > 0.0 {
                    1.0 / (32.0 * self.y_max * self.y_max)
                } else {
                    f64::INFINITY
                }
            });
            self.gamma = 0.5 * (1.0 / (4.0 * self.grad_max * diameter)).min(alpha);
            if !self.initialized {
                let dim = self.theta.len();
                self.epsilon = 1.0 / (self.gamma * self.gamma * diameter * diameter);
                self.a = DMatrix::identity(dim, dim) * self.epsilon;
                self.a_inv = DMatrix::identity(dim, dim) / self.epsilon;
                self.initialized = true;
            }
        }
        self.a.ger(1.0, &grad, &grad, 1.0);
        if linalg::rank_one_inverse_update(&mut self.a_inv, &grad) {
            self.fallbacks += 1;
        }
        let raw = &self.theta - (&self.a_inv * &grad) / self.gamma;
        self.theta = linalg::project_ball_weighted(&raw, &self.a, self.radius);
    }
}

impl Subroutine for Ons {
    fn predict(&self, x: &[f64]) -> f64 {
        dot(x, self.theta.as_slice())
    }

    fn observe(&mut self, x: &[f64], y: f64) {
        self.step(x, y)
    }
}

/// Vovk-Azoury-Warmuth forecaster: ridge regression that also counts the
/// current input in the regularizer.
///
/// Keeps `P = (λI + Σ x xᵀ)⁻¹` and `b = Σ y x`; the prediction at `x` is
/// `xᵀ (P⁻¹ + x xᵀ)⁻¹ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Awv {
    p: DMatrix<f64>,
    b: DVector<f64>,
    lambda: f64,
    fallbacks: usize,
}

impl Awv {
    pub fn new(dim: usize, lambda: f64) -> Self {
        assert!(lambda > 0.0, "AWV regularization must be positive");
        Self {
            p: DMatrix::identity(dim, dim) / lambda,
            b: DVector::zeros(dim),
            lambda,
            fallbacks: 0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn inverse_gram(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn target_moment(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }
}

impl Subroutine for Awv {
    fn predict(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        linalg::rank_one_quadratic(&self.p, &x, &self.b)
    }

    fn observe(&mut self, x: &[f64], y: f64) {
        let x = DVector::from_column_slice(x);
        if linalg::rank_one_inverse_update(&mut self.p, &x) {
            self.fallbacks += 1;
        }
        self.b.axpy(y, &x, 1.0);
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}
