//! Kernels, the Kernel-AWV forecaster, effective dimension and the
//! regularization schedule for kernel experts.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::Subroutine;

/// Positive-definite kernel on `ℝ^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum KernelFunction {
    Linear,
    /// `exp(-‖x - x'‖² / (2 bandwidth²))`
    Gaussian {
        bandwidth: f64,
    },
    /// `(x·x' + offset)^degree`
    Polynomial {
        degree: u32,
        offset: f64,
    },
}

impl KernelFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelFunction::Linear => Ok(()),
            KernelFunction::Gaussian { bandwidth } if bandwidth > 0.0 && bandwidth.is_finite() => {
                Ok(())
            }
            KernelFunction::Gaussian { bandwidth } => Err(Error::Config(format!(
                "gaussian bandwidth must be positive, got {bandwidth}"
            ))),
            KernelFunction::Polynomial { degree, offset } if degree >= 1 && offset >= 0.0 => Ok(()),
            KernelFunction::Polynomial { degree, offset } => Err(Error::Config(format!(
                "polynomial kernel needs degree >= 1 and offset >= 0, got ({degree}, {offset})"
            ))),
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), z.len());
        match *self {
            KernelFunction::Linear => x.iter().zip(z).map(|(a, b)| a * b).sum(),
            KernelFunction::Gaussian { bandwidth } => {
                let dist_sq: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-dist_sq / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelFunction::Polynomial { degree, offset } => {
                let inner: f64 = x.iter().zip(z).map(|(a, b)| a * b).sum();
                (inner + offset).powi(degree as i32)
            }
        }
    }

    /// `κ² = max_t k(x_t, x_t)` over the given inputs.
    pub fn kappa_sq<'a>(&self, inputs: impl IntoIterator<Item = &'a [f64]>) -> f64 {
        inputs
            .into_iter()
            .map(|x| self.eval(x, x))
            .fold(0.0, f64::max)
    }

    pub fn gram(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval(&points[i], &points[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }
}

pub fn kernel_eval(kernel: &KernelFunction, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::Domain(format!(
            "kernel inputs differ in dimension: {} vs {}",
            x.len(),
            z.len()
        )));
    }
    Ok(kernel.eval(x, z))
}

/// Pivot floor below which the factor extension is jittered.
const PIVOT_FLOOR: f64 = 1e-10;
const JITTER: f64 = 1e-8;

/// Kernel-AWV in representer form.
///
/// Keeps the lower-triangular factor `L` of `K + λI` over the inputs seen
/// since birth, extended by one row per observation (O(t²) per round), and
/// `z = L⁻¹ y`. With the query appended, the prediction
/// `k_xᵀ (K + λI)⁻¹ (y, 0)` reduces to `λ (lᵀ z) / δ²`, where `l` and `δ`
/// are the would-be new row and pivot of the factor.
#[derive(Debug, Clone)]
pub struct KernelAwv {
    kernel: KernelFunction,
    lambda: f64,
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    /// Row-packed lower factor: row `i` holds `i + 1` entries.
    chol: Vec<Vec<f64>>,
    z: Vec<f64>,
    kappa_sq: f64,
    jittered: usize,
}

impl KernelAwv {
    pub fn new(kernel: KernelFunction, lambda: f64) -> Self {
        assert!(lambda > 0.0, "Kernel-AWV regularization must be positive");
        Self {
            kernel,
            lambda,
            xs: Vec::new(),
            ys: Vec::new(),
            chol: Vec::new(),
            z: Vec::new(),
            kappa_sq: 0.0,
            jittered: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.ys
    }

    /// Count of factor extensions that needed diagonal jitter.
    pub fn jittered(&self) -> usize {
        self.jittered
    }

    /// Number of stored factor entries, `t(t+1)/2` after `t` observations.
    pub fn factor_entries(&self) -> usize {
        self.chol.iter().map(Vec::len).sum()
    }

    /// The factor as a dense lower-triangular matrix.
    pub fn factor(&self) -> DMatrix<f64> {
        let n = self.chol.len();
        let mut l = DMatrix::zeros(n, n);
        for (i, row) in self.chol.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                l[(i, j)] = v;
            }
        }
        l
    }

    /// `K + λI` recomputed densely from the stored inputs.
    pub fn regularized_gram(&self) -> DMatrix<f64> {
        let mut k = self.kernel.gram(&self.xs);
        for i in 0..k.nrows() {
            k[(i, i)] += self.lambda;
        }
        k
    }

    /// New factor row `l` (solving `L l = k_past(x)`) and squared pivot.
    fn extension(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let s = self.xs.len();
        let mut l = Vec::with_capacity(s);
        for i in 0..s {
            let row = &self.chol[i];
            let mut acc = self.kernel.eval(&self.xs[i], x);
            for j in 0..i {
                acc -= row[j] * l[j];
            }
            l.push(acc / row[i]);
        }
        let pivot_sq = self.kernel.eval(x, x) + self.lambda - l.iter().map(|v| v * v).sum::<f64>();
        (l, pivot_sq)
    }
}

impl Subroutine for KernelAwv {
    fn predict(&self, x: &[f64]) -> f64 {
        if self.xs.is_empty() {
            return 0.0;
        }
        let (l, pivot_sq) = self.extension(x);
        let pivot_sq = if pivot_sq <= PIVOT_FLOOR {
            pivot_sq.max(0.0) + JITTER * self.kappa_sq.max(self.kernel.eval(x, x)).max(1.0)
        } else {
            pivot_sq
        };
        let lz: f64 = l.iter().zip(&self.z).map(|(a, b)| a * b).sum();
        self.lambda * lz / pivot_sq
    }

    fn observe(&mut self, x: &[f64], y: f64) {
        self.kappa_sq = self.kappa_sq.max(self.kernel.eval(x, x));
        let (mut row, mut pivot_sq) = self.extension(x);
        if pivot_sq <= PIVOT_FLOOR {
            pivot_sq = pivot_sq.max(0.0) + JITTER * self.kappa_sq.max(1.0);
            self.jittered += 1;
            log::debug!(
                "kernel-awv factor pivot jittered at size {}",
                self.xs.len() + 1
            );
        }
        let pivot = pivot_sq.sqrt();
        let lz: f64 = row.iter().zip(&self.z).map(|(a, b)| a * b).sum();
        self.z.push((y - lz) / pivot);
        row.push(pivot);
        self.chol.push(row);
        self.xs.push(x.to_vec());
        self.ys.push(y);
    }
}

fn check_symmetric_psd(k: &DMatrix<f64>) -> Result<()> {
    if !k.is_square() {
        return Err(Error::Domain(format!(
            "kernel matrix must be square, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    let scale = k.amax().max(1.0);
    let n = k.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (k[(i, j)] - k[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Domain(format!(
                    "kernel matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let mut shifted = k.clone();
    for i in 0..n {
        shifted[(i, i)] += 1e-8;
    }
    if n > 0 && shifted.cholesky().is_none() {
        return Err(Error::Domain(
            "kernel matrix has an eigenvalue below -1e-8".into(),
        ));
    }
    Ok(())
}

/// `Tr(K (K + λI)⁻¹)` by a Cholesky solve of `(K + λI) W = K`.
pub fn effective_dimension(k: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    check_symmetric_psd(k)?;
    let n = k.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut reg = k.clone();
    for i in 0..n {
        reg[(i, i)] += lambda;
    }
    let chol = reg
        .cholesky()
        .ok_or_else(|| Error::Domain("K + λI is not positive definite".into()))?;
    let w = chol.solve(k);
    Ok(w.trace().clamp(0.0, n as f64))
}

/// `Σ_k log(1 + λ_k(K)/λ) = log det(I + K/λ)`, the capacity term in the
/// Kernel-AWV regret bound.
pub fn log_det_capacity(k: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Domain(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    check_symmetric_psd(k)?;
    let n = k.nrows();
    let mut m = k / lambda;
    for i in 0..n {
        m[(i, i)] += 1.0;
    }
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Domain("I + K/λ is not positive definite".into()))?;
    Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// Regularization `(n/m)^{β/(β+1)}` for kernel experts under the capacity
/// condition `d_eff(λ, n) ≤ (n/λ)^β`.
pub fn lambda_schedule(n: usize, m: usize, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    if m < 1 || n < m {
        return Err(Error::Domain(format!("need n >= m >= 1, got n={n}, m={m}")));
    }
    Ok((n as f64 / m as f64).powf(beta / (beta + 1.0)))
}

/// Least-squares fit of `log d_eff(λ)` against `log λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityFit {
    pub slope: f64,
    pub intercept: f64,
    /// `-slope`, the empirical exponent `β` in `d_eff(λ) ≈ c λ^{-β}`.
    pub beta: f64,
}

/// Measures the capacity exponent of a kernel matrix over a grid of `λ`.
pub fn capacity_fit(k: &DMatrix<f64>, lambdas: &[f64]) -> Result<CapacityFit> {
    let points: Vec<(f64, f64)> = lambdas
        .iter()
        .map(|&l| effective_dimension(k, l).map(|d| (l.ln(), d)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&(_, d)| d > 0.0)
        .map(|(ll, d)| (ll, d.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::Domain(
            "capacity fit needs at least two lambdas with positive effective dimension".into(),
        ));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("capacity fit needs distinct lambdas".into()));
    }
    let slope = sxy / sxx;
    Ok(CapacityFit {
        slope,
        intercept: my - slope * mx,
        beta: -slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_eval_examples() {
        assert_eq!(
            kernel_eval(&KernelFunction::Linear, &[1.0, 0.0], &[1.0, 0.0]).unwrap(),
            1.0
        );
        let g = KernelFunction::Gaussian { bandwidth: 1.0 };
        assert_eq!(kernel_eval(&g, &[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        let p = KernelFunction::Polynomial {
            degree: 2,
            offset: 1.0,
        };
        assert_eq!(kernel_eval(&p, &[1.0], &[1.0]).unwrap(), 4.0);
        assert!(kernel_eval(&p, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn kernel_validation() {
        assert!(KernelFunction::Gaussian { bandwidth: 0.0 }
            .validate()
            .is_err());
        assert!(KernelFunction::Polynomial {
            degree: 0,
            offset: 1.0
        }
        .validate()
        .is_err());
        assert!(KernelFunction::Polynomial {
            degree: 3,
            offset: 0.0
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn kernel_awv_examples() {
        let mut awv = KernelAwv::new(KernelFunction::Linear, 1.0);
        assert_eq!(awv.predict(&[1.0]), 0.0);
        awv.observe(&[1.0], 1.0);
        assert_eq!(awv.len(), 1);
        // (K + I)⁻¹ ỹ = (2/3, -1/3) with K = [[1,1],[1,1]] → 2/3 - 1/3
        assert_relative_eq!(awv.predict(&[1.0]), 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn kernel_awv_orthogonal_query() {
        let mut awv = KernelAwv::new(KernelFunction::Linear, 0.5);
        awv.observe(&[1.0, 0.0], 2.0);
        awv.observe(&[3.0, 0.0], -1.0);
        assert_eq!(awv.predict(&[0.0, 1.0]), 0.0);
    }

    #[test]
    fn kernel_awv_factor_reconstructs_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut awv = KernelAwv::new(KernelFunction::Gaussian { bandwidth: 0.7 }, 0.3);
        for _ in 0..10 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            awv.observe(&x, rng.random_range(-1.0..1.0));
        }
        let l = awv.factor();
        let diff = &l * l.transpose() - awv.regularized_gram();
        assert!(diff.amax() <= 1e-8);
        assert_eq!(awv.factor_entries(), 55);
    }

    #[test]
    fn kernel_awv_duplicates_stay_spd() {
        let mut awv = KernelAwv::new(KernelFunction::Gaussian { bandwidth: 1.0 }, 0.1);
        for _ in 0..20 {
            awv.observe(&[0.5, 0.5], 1.0);
        }
        assert!(awv.regularized_gram().cholesky().is_some());
        assert_eq!(awv.jittered(), 0);
        assert!(awv.predict(&[0.5, 0.5]).is_finite());
    }

    #[test]
    fn kernel_awv_matches_dense_representer_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let kernel = KernelFunction::Polynomial {
            degree: 2,
            offset: 1.0,
        };
        let mut awv = KernelAwv::new(kernel, 2.0);
        for _ in 0..15 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            awv.observe(&x, rng.random_range(-1.0..1.0));
        }
        let q = vec![0.2, -0.4];
        let mut pts = awv.inputs().to_vec();
        pts.push(q.clone());
        let mut m = kernel.gram(&pts);
        let kx = m.column(pts.len() - 1).into_owned();
        for i in 0..pts.len() {
            m[(i, i)] += 2.0;
        }
        let mut ytil: Vec<f64> = awv.outputs().to_vec();
        ytil.push(0.0);
        let alpha = m.lu().solve(&DVector::from_vec(ytil)).unwrap();
        assert_relative_eq!(awv.predict(&q), kx.dot(&alpha), epsilon = 1e-10);
    }

    #[test]
    fn effective_dimension_examples() {
        let eye = DMatrix::<f64>::identity(2, 2);
        assert_relative_eq!(
            effective_dimension(&eye, 1.0).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        assert_eq!(
            effective_dimension(&DMatrix::zeros(3, 3), 1.0).unwrap(),
            0.0
        );
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]));
        assert_relative_eq!(
            effective_dimension(&diag, 1.0).unwrap(),
            1.25,
            epsilon = 1e-14
        );
    }

    #[test]
    fn effective_dimension_rejects_indefinite() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            effective_dimension(&k, 1.0),
            Err(Error::Domain(_))
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(effective_dimension(&asym, 1.0).is_err());
    }

    #[test]
    fn log_det_capacity_matches_spectrum() {
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 0.0]));
        let expected = (1.0f64 + 3.0 / 0.5).ln() + (1.0f64 + 1.0 / 0.5).ln();
        assert_relative_eq!(
            log_det_capacity(&diag, 0.5).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn lambda_schedule_examples() {
        assert_eq!(lambda_schedule(7, 7, 0.5).unwrap(), 1.0);
        assert_relative_eq!(
            lambda_schedule(1024, 1, 1.0 / 3.0).unwrap(),
            1024f64.powf(0.25),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            lambda_schedule(1024, 1, 1.0 / 3.0).unwrap(),
            5.656854,
            epsilon = 1e-6
        );
        assert!((lambda_schedule(100, 3, 1e-9).unwrap() - 1.0).abs() < 1e-7);
        assert!(lambda_schedule(10, 1, 0.0).is_err());
        assert!(lambda_schedule(10, 1, 1.0).is_err());
        assert!(lambda_schedule(1, 2, 0.5).is_err());
    }

    #[test]
    fn capacity_fit_on_power_law_spectrum() {
        // eigenvalues k^{-2}: d_eff(λ) ~ λ^{-1/2}
        let n = 400;
        let spectrum = DVector::from_iterator(n, (1..=n).map(|k| (k as f64).powi(-2)));
        let k = DMatrix::from_diagonal(&spectrum);
        let fit = capacity_fit(&k, &[1e-4, 1e-3, 1e-2]).unwrap();
        assert!((fit.beta - 0.5).abs() < 0.05, "beta = {}", fit.beta);
    }
}
