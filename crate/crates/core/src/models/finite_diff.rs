//! Central finite differences, the oracle for every analytic derivative in
//! this module.

use nalgebra::{DMatrix, DVector};

/// Default base step; the effective step in coordinate `i` is
/// `step * max(1, |theta_i|)`.
pub const FD_BASE_STEP: f64 = 1e-4;

fn step_for(step: f64, x: f64) -> f64 {
    step * x.abs().max(1.0)
}

/// Central-difference gradient of a scalar function.
pub fn finite_diff_grad<F>(f: F, theta: &DVector<f64>, step: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut grad = DVector::zeros(theta.len());
    let mut point = theta.clone();
    for i in 0..theta.len() {
        let h = step_for(step, theta[i]);
        point[i] = theta[i] + h;
        let hi = f(&point);
        point[i] = theta[i] - h;
        let lo = f(&point);
        point[i] = theta[i];
        grad[i] = (hi - lo) / (2.0 * h);
    }
    grad
}

/// Central-difference Hessian of a scalar function, symmetrized.
pub fn finite_diff_hessian<F>(f: F, theta: &DVector<f64>, step: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let k = theta.len();
    let mut h = DMatrix::zeros(k, k);
    let mut point = theta.clone();
    for i in 0..k {
        let hi = step_for(step, theta[i]);
        for j in i..k {
            let hj = step_for(step, theta[j]);
            let mut eval = |si: f64, sj: f64| {
                point[i] += si * hi;
                point[j] += sj * hj;
                let v = f(&point);
                point[i] = theta[i];
                point[j] = theta[j];
                v
            };
            let value = if i == j {
                let center = eval(0.0, 0.0);
                (eval(1.0, 0.0) - 2.0 * center + eval(-1.0, 0.0)) / (hi * hi)
            } else {
                (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                    / (4.0 * hi * hj)
            };
            h[(i, j)] = value;
            h[(j, i)] = value;
        }
    }
    h
}

/// Hessian as central differences of a gradient function, symmetrized.
/// Costs `2k` gradient evaluations instead of `O(k^2)` function evaluations.
pub fn hessian_from_grad<F>(grad: F, theta: &DVector<f64>, step: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let k = theta.len();
    let mut h = DMatrix::zeros(k, k);
    let mut point = theta.clone();
    for j in 0..k {
        let hj = step_for(step, theta[j]);
        point[j] = theta[j] + hj;
        let hi = grad(&point);
        point[j] = theta[j] - hj;
        let lo = grad(&point);
        point[j] = theta[j];
        let col = (hi - lo) / (2.0 * hj);
        h.set_column(j, &col);
    }
    (&h + h.transpose()) * 0.5
}
