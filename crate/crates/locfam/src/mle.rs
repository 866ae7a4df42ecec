//! Maximum likelihood estimation of the location parameter.
//!
//! The MLE minimizes the smooth convex objective
//! `g_n(theta) = (1/n) sum_j V(X_j - theta)`. A damped Newton iteration with
//! Armijo backtracking starts from the sample mean; the Newton system is
//! solved by Cholesky with a small ridge retry, falling back to a gradient
//! step when the Hessian is numerically singular (possible for the radial
//! family near its flat basin).

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::model::Potential;
use crate::sampler::Dataset;
use crate::{Error, Result};

/// Solver options. `init = None` starts from the sample mean.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub init: Option<DVector<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            init: None,
        }
    }
}

/// Fitted location with solver telemetry.
#[derive(Debug, Clone)]
pub struct MleResult {
    pub theta_hat: DVector<f64>,
    /// Final objective gradient norm.
    pub grad_norm: f64,
    pub iterations: usize,
    /// Smallest eigenvalue of the objective Hessian at `theta_hat`.
    pub hessian_min_eig: f64,
    /// True only when the final gradient norm is within tolerance.
    pub converged: bool,
    /// Objective values along accepted iterates, starting point included.
    pub objective_trace: Vec<f64>,
}

/// Empirical objective, gradient and Hessian at `theta`.
///
/// Exact finite sums: value `(1/n) sum V(X_j - theta)`, gradient
/// `-(1/n) sum V'(X_j - theta)`, Hessian `(1/n) sum V''(X_j - theta)`.
pub fn objective(
    pot: &dyn Potential,
    data: &Dataset,
    theta: &DVector<f64>,
) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    check_inputs(pot, data, theta)?;
    let d = pot.dim();
    let mut grad = DVector::zeros(d);
    let mut diff = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut hess = DMatrix::zeros(d, d);
    let mut hwork = DMatrix::zeros(d, d);
    let mut value = 0.0;
    for row in data.rows() {
        for ((df, &x), t) in diff.iter_mut().zip(row).zip(theta.iter()) {
            *df = x - t;
        }
        value += pot.value(&diff);
        pot.grad_into(&diff, &mut g);
        for (acc, &gi) in grad.iter_mut().zip(&g) {
            *acc -= gi;
        }
        pot.hess_into(&diff, &mut hwork);
        hess += &hwork;
    }
    let nf = data.n() as f64;
    Ok((value / nf, grad / nf, hess / nf))
}

fn check_inputs(pot: &dyn Potential, data: &Dataset, theta: &DVector<f64>) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    if data.dim() != pot.dim() {
        return Err(Error::DimensionMismatch {
            expected: pot.dim(),
            got: data.dim(),
        });
    }
    if theta.len() != pot.dim() {
        return Err(Error::DimensionMismatch {
            expected: pot.dim(),
            got: theta.len(),
        });
    }
    Ok(())
}

fn value_and_grad(
    pot: &dyn Potential,
    data: &Dataset,
    theta: &DVector<f64>,
    grad: &mut DVector<f64>,
    diff: &mut [f64],
    g: &mut [f64],
) -> f64 {
    grad.fill(0.0);
    let mut value = 0.0;
    for row in data.rows() {
        for ((df, &x), t) in diff.iter_mut().zip(row).zip(theta.iter()) {
            *df = x - t;
        }
        value += pot.value(diff);
        pot.grad_into(diff, g);
        for (acc, &gi) in grad.iter_mut().zip(g.iter()) {
            *acc -= gi;
        }
    }
    let nf = data.n() as f64;
    *grad /= nf;
    value / nf
}

fn value_only(pot: &dyn Potential, data: &Dataset, theta: &DVector<f64>, diff: &mut [f64]) -> f64 {
    let mut value = 0.0;
    for row in data.rows() {
        for ((df, &x), t) in diff.iter_mut().zip(row).zip(theta.iter()) {
            *df = x - t;
        }
        value += pot.value(diff);
    }
    value / data.n() as f64
}

fn hess_at(
    pot: &dyn Potential,
    data: &Dataset,
    theta: &DVector<f64>,
    hess: &mut DMatrix<f64>,
    hwork: &mut DMatrix<f64>,
    diff: &mut [f64],
) {
    hess.fill(0.0);
    for row in data.rows() {
        for ((df, &x), t) in diff.iter_mut().zip(row).zip(theta.iter()) {
            *df = x - t;
        }
        pot.hess_into(diff, hwork);
        *hess += &*hwork;
    }
    *hess /= data.n() as f64;
}

const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MIN_STEP: f64 = 1e-14;
const RIDGE: f64 = 1e-12;

/// Fits the location MLE.
///
/// A non-converged run is not an error: the best iterate is returned with
/// `converged = false`.
pub fn fit_mle(pot: &dyn Potential, data: &Dataset, opts: &FitOptions) -> Result<MleResult> {
    newton_fit(pot, data, opts, true)
}

/// Lean fit used by bootstrap chains: no Hessian eigendecomposition, no trace.
pub(crate) fn fit_location(
    pot: &dyn Potential,
    data: &Dataset,
    opts: &FitOptions,
) -> Result<MleResult> {
    newton_fit(pot, data, opts, false)
}

fn newton_fit(
    pot: &dyn Potential,
    data: &Dataset,
    opts: &FitOptions,
    telemetry: bool,
) -> Result<MleResult> {
    let d = pot.dim();
    let mut theta = match &opts.init {
        Some(t) => {
            if t.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: t.len(),
                });
            }
            t.clone()
        }
        None => data.mean(),
    };
    check_inputs(pot, data, &theta)?;

    let mut grad = DVector::zeros(d);
    let mut diff = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut hess = DMatrix::zeros(d, d);
    let mut hwork = DMatrix::zeros(d, d);
    let mut trace = Vec::new();

    let mut value = value_and_grad(pot, data, &theta, &mut grad, &mut diff, &mut g);
    if telemetry {
        trace.push(value);
    }
    let mut grad_norm = grad.norm();
    let mut iterations = 0;
    let mut converged = grad_norm <= opts.tol;

    while !converged && iterations < opts.max_iter {
        hess_at(pot, data, &theta, &mut hess, &mut hwork, &mut diff);
        let mut direction = newton_direction(&hess, &grad);
        if direction.dot(&grad) >= 0.0 {
            direction = -&grad;
        }
        let mut accepted = line_search(pot, data, &theta, value, &grad, &direction, &mut diff);
        if accepted.is_none() {
            // Newton direction stalled; retry once along the gradient
            let gdir = -&grad;
            accepted = line_search(pot, data, &theta, value, &grad, &gdir, &mut diff);
        }
        let Some((new_theta, new_value, step_norm)) = accepted else {
            break;
        };
        theta = new_theta;
        if telemetry {
            trace.push(new_value);
        }
        iterations += 1;
        value = value_and_grad(pot, data, &theta, &mut grad, &mut diff, &mut g);
        grad_norm = grad.norm();
        if grad_norm <= opts.tol || step_norm <= opts.tol * (1.0 + theta.norm()) {
            converged = grad_norm <= opts.tol;
            break;
        }
    }

    let hessian_min_eig = if telemetry {
        hess_at(pot, data, &theta, &mut hess, &mut hwork, &mut diff);
        hess.clone().symmetric_eigen().eigenvalues.min()
    } else {
        f64::NAN
    };

    Ok(MleResult {
        theta_hat: theta,
        grad_norm,
        iterations,
        hessian_min_eig,
        converged,
        objective_trace: trace,
    })
}

fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    if let Some(chol) = Cholesky::new(hess.clone()) {
        return -chol.solve(grad);
    }
    let d = hess.nrows();
    let ridged = hess + DMatrix::identity(d, d) * RIDGE;
    if let Some(chol) = Cholesky::new(ridged) {
        return -chol.solve(grad);
    }
    -grad
}

/// Armijo backtracking from unit step; returns `(theta, value, step_norm)`
/// of the first accepted point.
fn line_search(
    pot: &dyn Potential,
    data: &Dataset,
    theta: &DVector<f64>,
    value: f64,
    grad: &DVector<f64>,
    direction: &DVector<f64>,
    diff: &mut [f64],
) -> Option<(DVector<f64>, f64, f64)> {
    let slope = grad.dot(direction);
    let mut step = 1.0;
    while step >= MIN_STEP {
        let candidate = theta + direction * step;
        let candidate_value = value_only(pot, data, &candidate, diff);
        if candidate_value <= value + ARMIJO_C * step * slope {
            return Some((candidate, candidate_value, direction.norm() * step));
        }
        step *= BACKTRACK;
    }
    None
}
