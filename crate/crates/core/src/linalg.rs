//! Small dense linear-algebra helpers shared by the matrix-carrying learners.

use nalgebra::{DMatrix, DVector};

/// Denominator floor for rank-one inverse updates.
pub const RANK_ONE_FLOOR: f64 = 1e-12;

/// Replaces `inv = A⁻¹` by `(A + v vᵀ)⁻¹` using the Sherman-Morrison identity.
///
/// Returns `true` when the update denominator fell below [`RANK_ONE_FLOOR`]
/// and the inverse had to be rebuilt by a direct jittered SPD solve.
pub fn rank_one_inverse_update(inv: &mut DMatrix<f64>, v: &DVector<f64>) -> bool {
    let pv = &*inv * v;
    let denom = 1.0 + v.dot(&pv);
    if denom.is_finite() && denom > RANK_ONE_FLOOR {
        inv.ger(-1.0 / denom, &pv, &pv, 1.0);
        symmetrize(inv);
        false
    } else {
        let mut a = spd_inverse(inv, 1e-8);
        a.ger(1.0, v, v, 1.0);
        *inv = spd_inverse(&a, 1e-8);
        true
    }
}

/// `xᵀ (A + x xᵀ)⁻¹ b` from `P = A⁻¹` without forming the updated inverse.
pub fn rank_one_quadratic(inv: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let px = inv * x;
    let xpx = x.dot(&px);
    px.dot(b) / (1.0 + xpx)
}

/// Inverts a (numerically) symmetric positive-definite matrix, adding
/// growing diagonal jitter until the Cholesky factorization succeeds.
pub fn spd_inverse(a: &DMatrix<f64>, jitter: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut sym = a.clone();
    symmetrize(&mut sym);
    let scale = (0..n)
        .map(|i| sym[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut eps = 0.0;
    for _ in 0..20 {
        let mut trial = sym.clone();
        for i in 0..n {
            trial[(i, i)] += eps;
        }
        if let Some(chol) = trial.cholesky() {
            let mut inv = chol.inverse();
            symmetrize(&mut inv);
            return inv;
        }
        eps = if eps == 0.0 {
            jitter * scale
        } else {
            eps * 10.0
        };
    }
    // Unreachable for the matrices built here: the diagonal dominates long before.
    DMatrix::identity(n, n) / scale
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Euclidean projection onto `{‖θ‖₂ ≤ radius}`.
pub fn project_ball(theta: &mut DVector<f64>, radius: f64) {
    let norm = theta.norm();
    if norm > radius {
        *theta *= radius / norm;
    }
}

/// Projection onto `{‖θ‖₂ ≤ radius}` in the norm induced by the SPD matrix `a`:
/// `argmin_{‖θ‖ ≤ radius} (θ - z)ᵀ A (θ - z)`.
///
/// The minimizer is `θ(μ) = (A + μI)⁻¹ A z` with `μ ≥ 0` chosen so that
/// `‖θ(μ)‖ = radius`; `μ` is found by bisection in the eigenbasis of `A`.
pub fn project_ball_weighted(z: &DVector<f64>, a: &DMatrix<f64>, radius: f64) -> DVector<f64> {
    if z.norm() <= radius {
        return z.clone();
    }
    let mut sym = a.clone();
    symmetrize(&mut sym);
    let eig = sym.symmetric_eigen();
    let coords = eig.eigenvectors.transpose() * z;
    let lambdas: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let norm_sq = |mu: f64| -> f64 {
        lambdas
            .iter()
            .zip(coords.iter())
            .map(|(&l, &c)| {
                let s = if l + mu > 0.0 { l / (l + mu) } else { 0.0 };
                (s * c) * (s * c)
            })
            .sum()
    };
    let target = radius * radius;
    let mut hi = lambdas.iter().copied().fold(1.0, f64::max);
    while norm_sq(hi) > target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_sq(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    let shrink = DVector::from_iterator(
        lambdas.len(),
        lambdas
            .iter()
            .zip(coords.iter())
            .map(|(&l, &c)| if l + hi > 0.0 { l / (l + hi) * c } else { 0.0 }),
    );
    let mut theta = &eig.eigenvectors * shrink;
    // bisection leaves us on the feasible side; clean up rounding
    project_ball(&mut theta, radius);
    theta
}
