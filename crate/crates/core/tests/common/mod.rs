//! Dense reference implementations used to cross-check the factorized paths.
//!
//! Everything here is deliberately naive: full matrices, explicit inverses,
//! no reuse. Slow but obviously faithful to the definitions.

use nalgebra::{DMatrix, DVector};
use rkhs_bounds::problem::Problem;

/// Dense surrogate covariance `C^T K C + (sum_j sigma_j^-2 P_j)^-1`.
pub fn dense_khat(problem: &Problem, sigma: &[f64]) -> DMatrix<f64> {
    let n = problem.n();
    let gram = rkhs_bounds::kernels::assemble_training_gram(
        &problem.kernel,
        &problem.inputs,
        &problem.measurements,
    )
    .unwrap();
    let mut precision = DMatrix::zeros(n, n);
    for (j, c) in problem.noise.constraints().iter().enumerate() {
        let w = 1.0 / (sigma[j] * sigma[j]);
        for (a, &ia) in c.support().iter().enumerate() {
            for (b, &ib) in c.support().iter().enumerate() {
                precision[(ia, ib)] += w * c.block()[(a, b)];
            }
        }
    }
    let noise_cov = precision
        .try_inverse()
        .expect("noise precision invertible for finite scales");
    gram + noise_cov
}

/// Cross-covariance block `B` with columns `k(x*, x_i) c_i` (n_f x N).
pub fn dense_cross(problem: &Problem, x_star: &DVector<f64>) -> DMatrix<f64> {
    let n = problem.n();
    let n_f = problem.n_f();
    let mut b = DMatrix::zeros(n_f, n);
    for i in 0..n {
        let block = problem.kernel.eval(x_star, &problem.inputs[i]).unwrap();
        b.set_column(i, &(block * &problem.measurements[i]));
    }
    b
}

/// Reference certificate pieces at fixed scales, all via dense inverses:
/// `(value, beta, mean, dir_variance)` for direction `h` at `x_star`.
pub fn dense_certificate(
    problem: &Problem,
    x_star: &DVector<f64>,
    h: &DVector<f64>,
    sigma: &[f64],
) -> Option<(f64, f64, f64, f64)> {
    let khat = dense_khat(problem, sigma);
    let khat_inv = khat.try_inverse()?;
    let b = dense_cross(problem, x_star);
    let k_star = problem.kernel.eval(x_star, x_star).unwrap();

    let mu = &b * &khat_inv * &problem.y;
    let cov = k_star - &b * &khat_inv * b.transpose();
    let mean = h.dot(&mu);
    let dir_var = (h.transpose() * cov * h)[(0, 0)].max(0.0);

    let mut budget = problem.gamma_f * problem.gamma_f;
    for (j, c) in problem.noise.constraints().iter().enumerate() {
        budget += (c.gamma() / sigma[j]).powi(2);
    }
    let y_quad = (problem.y.transpose() * &khat_inv * &problem.y)[(0, 0)];
    let radicand = budget - y_quad;
    if radicand < 0.0 {
        return None;
    }
    let beta = radicand.sqrt();
    Some((mean + beta * dir_var.sqrt(), beta, mean, dir_var))
}
