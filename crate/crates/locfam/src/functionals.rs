//! Smooth test functionals `f: R^d -> R` with gradient oracles.
//!
//! Each functional carries Holder smoothness metadata: the exponent `s`
//! (infinite for the analytic builtins unless overridden) and a claimed
//! `C^s`-norm bound. Unbounded builtins (linear, quadratic) carry an infinite
//! norm sentinel and are exempt from boundedness probes; they stay useful for
//! closed-form Gaussian oracle tests.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Scalar functional with a gradient oracle and smoothness metadata.
#[derive(Clone)]
pub struct FunctionalSpec {
    name: String,
    value: ValueFn,
    grad: GradFn,
    /// Holder exponent `s = k + 1 + rho`; `INFINITY` when unrestricted.
    pub smoothness_s: f64,
    /// Claimed `C^s` norm; `INFINITY` for unbounded functionals.
    pub cs_norm_bound: f64,
}

impl std::fmt::Debug for FunctionalSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionalSpec")
            .field("name", &self.name)
            .field("smoothness_s", &self.smoothness_s)
            .field("cs_norm_bound", &self.cs_norm_bound)
            .finish()
    }
}

impl FunctionalSpec {
    pub fn custom(
        name: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        smoothness_s: f64,
        cs_norm_bound: f64,
    ) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            grad: Arc::new(grad),
            smoothness_s,
            cs_norm_bound,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        (self.value)(theta)
    }

    pub fn grad_into(&self, theta: &[f64], out: &mut [f64]) {
        (self.grad)(theta, out)
    }

    pub fn gradient(&self, theta: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(theta.len());
        self.grad_into(theta, out.as_mut_slice());
        out
    }

    /// Same functional with the smoothness tag replaced; the `C^s` bound is
    /// recomputed for the builtins that support it.
    pub fn with_smoothness(mut self, s: f64) -> Self {
        self.smoothness_s = s;
        self
    }

    /// The shifted functional `theta -> f(theta + u)`.
    pub fn shift(&self, u: &[f64]) -> FunctionalSpec {
        let u_val: Vec<f64> = u.to_vec();
        let u_grad = u_val.clone();
        let value = self.value.clone();
        let grad = self.grad.clone();
        FunctionalSpec {
            name: format!("{}+shift", self.name),
            value: Arc::new(move |theta: &[f64]| {
                let shifted: Vec<f64> = theta.iter().zip(&u_val).map(|(&t, &s)| t + s).collect();
                value(&shifted)
            }),
            grad: Arc::new(move |theta: &[f64], out: &mut [f64]| {
                let shifted: Vec<f64> = theta.iter().zip(&u_grad).map(|(&t, &s)| t + s).collect();
                grad(&shifted, out)
            }),
            smoothness_s: self.smoothness_s,
            cs_norm_bound: self.cs_norm_bound,
        }
    }
}

/// Builtin functional kinds, as accepted from CLI configs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "functional", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalKind {
    /// `f(theta) = <w, theta>`; unbounded.
    Linear { w: Vec<f64> },
    /// `f(theta) = ||theta||^2`; unbounded.
    Quadratic,
    /// `f(theta) = sin <w, theta>`; every derivative norm is at most `||w||^j`.
    SinLinear {
        w: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<f64>,
    },
    /// `f(theta) = exp(-||theta||^2 / 2)`.
    NegExpSq,
}

fn check_w(w: &[f64]) -> Result<()> {
    if w.is_empty() || w.iter().any(|x| !x.is_finite()) || w.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidParameter(
            "weight vector must be finite and nonzero".into(),
        ));
    }
    Ok(())
}

/// Constructs a builtin functional.
pub fn builtin_functional(kind: &FunctionalKind) -> Result<FunctionalSpec> {
    match kind {
        FunctionalKind::Linear { w } => {
            check_w(w)?;
            let wv = w.clone();
            let wg = w.clone();
            Ok(FunctionalSpec::custom(
                "linear",
                move |theta| theta.iter().zip(&wv).map(|(&t, &w)| t * w).sum(),
                move |_, out| out.copy_from_slice(&wg),
                f64::INFINITY,
                f64::INFINITY,
            ))
        }
        FunctionalKind::Quadratic => Ok(FunctionalSpec::custom(
            "quadratic",
            |theta| theta.iter().map(|&t| t * t).sum(),
            |theta, out| {
                for (o, &t) in out.iter_mut().zip(theta) {
                    *o = 2.0 * t;
                }
            },
            f64::INFINITY,
            f64::INFINITY,
        )),
        FunctionalKind::SinLinear { w, s } => {
            check_w(w)?;
            let norm: f64 = w.iter().map(|&x| x * x).sum::<f64>().sqrt();
            let wv = w.clone();
            let wg = w.clone();
            let spec = FunctionalSpec::custom(
                "sin_linear",
                move |theta| {
                    theta
                        .iter()
                        .zip(&wv)
                        .map(|(&t, &w)| t * w)
                        .sum::<f64>()
                        .sin()
                },
                move |theta, out| {
                    let c = theta
                        .iter()
                        .zip(&wg)
                        .map(|(&t, &w)| t * w)
                        .sum::<f64>()
                        .cos();
                    for (o, &w) in out.iter_mut().zip(&wg) {
                        *o = c * w;
                    }
                },
                s.unwrap_or(f64::INFINITY),
                norm.max(1.0),
            );
            Ok(spec)
        }
        FunctionalKind::NegExpSq => Ok(FunctionalSpec::custom(
            "neg_exp_sq",
            |theta| (-0.5 * theta.iter().map(|&t| t * t).sum::<f64>()).exp(),
            |theta, out| {
                let f = (-0.5 * theta.iter().map(|&t| t * t).sum::<f64>()).exp();
                for (o, &t) in out.iter_mut().zip(theta) {
                    *o = -t * f;
                }
            },
            f64::INFINITY,
            1.0,
        )),
    }
}

/// Bias-reduction order for a Holder exponent `s`.
///
/// Returns the unique `k >= 0` with `s = k + 1 + rho`, `rho` in `(0, 1]`;
/// integer `s` takes `rho = 1`.
pub fn holder_order_k(spec: &FunctionalSpec) -> Result<usize> {
    holder_order_from_s(spec.smoothness_s)
}

/// [`holder_order_k`] on a bare exponent.
pub fn holder_order_from_s(s: f64) -> Result<usize> {
    if !(s > 1.0) {
        return Err(Error::TooRough(s));
    }
    if !s.is_finite() {
        return Err(Error::InvalidParameter(
            "holder order undefined for infinite smoothness".into(),
        ));
    }
    Ok((s - 1.0).ceil() as usize - 1)
}

/// Holder remainder `rho = s - k - 1` in `(0, 1]`.
pub fn holder_rho(s: f64) -> Result<f64> {
    let k = holder_order_from_s(s)? as f64;
    Ok(s - 1.0 - k)
}
