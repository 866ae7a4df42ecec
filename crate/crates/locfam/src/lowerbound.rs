//! Bayesian Cramer-Rao (van Trees) and minimax lower-bound formulas.
//!
//! The bounds are evaluated numerically from their closed forms: the prior
//! Fisher information by adaptive quadrature, the parameter bound
//! `(1/n) tr((I + J_pi / (delta^2 n))^{-1})` by spectral shift, and the
//! functional bound by its three-term expression with the modulus integral
//! taken against the rescaled prior. Bounds are reported unclamped except
//! for the global rate, which caps at one.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::quad::adaptive_simpson;
use crate::{Error, Result};

type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One-dimensional prior with bounded support and a density derivative oracle.
#[derive(Clone)]
pub struct Prior1D {
    name: String,
    support: (f64, f64),
    density: DensityFn,
    derivative: DensityFn,
}

impl std::fmt::Debug for Prior1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Prior1D")
            .field("name", &self.name)
            .field("support", &self.support)
            .finish()
    }
}

impl Prior1D {
    pub fn new(
        name: impl Into<String>,
        support: (f64, f64),
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            support,
            density: Arc::new(density),
            derivative: Arc::new(derivative),
        }
    }

    /// `pi(s) = (3/4) cos^3(s)` on `[-pi/2, pi/2]`; its Fisher information
    /// is `9/2` per coordinate.
    pub fn cos_cubed() -> Self {
        use std::f64::consts::FRAC_PI_2;
        Self::new(
            "cos_cubed",
            (-FRAC_PI_2, FRAC_PI_2),
            |s| {
                if s.abs() >= FRAC_PI_2 {
                    0.0
                } else {
                    0.75 * s.cos().powi(3)
                }
            },
            |s| {
                if s.abs() >= FRAC_PI_2 {
                    0.0
                } else {
                    -2.25 * s.cos().powi(2) * s.sin()
                }
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn density(&self, s: f64) -> f64 {
        if s < self.support.0 || s > self.support.1 {
            0.0
        } else {
            (self.density)(s)
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        if s < self.support.0 || s > self.support.1 {
            0.0
        } else {
            (self.derivative)(s)
        }
    }

    /// The rescaled prior with density `delta^{-1} pi(delta^{-1} s)`.
    pub fn rescaled(&self, delta: f64) -> Result<Prior1D> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        let density = self.density.clone();
        let derivative = self.derivative.clone();
        Ok(Prior1D {
            name: format!("{}(delta={delta})", self.name),
            support: (self.support.0 * delta, self.support.1 * delta),
            density: Arc::new(move |s| density(s / delta) / delta),
            derivative: Arc::new(move |s| derivative(s / delta) / (delta * delta)),
        })
    }

    /// Checks unit mass (1e-8), nonnegativity and vanishing endpoints.
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.support;
        let mass = adaptive_simpson(|s| self.density(s), a, b, 1e-10, 48)?;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "prior mass {mass} differs from 1"
            )));
        }
        for i in 0..=1000 {
            let s = a + (b - a) * i as f64 / 1000.0;
            if self.density(s) < 0.0 {
                return Err(Error::InvalidParameter("prior density negative".into()));
            }
        }
        if self.density(a).abs() > 1e-8 || self.density(b).abs() > 1e-8 {
            return Err(Error::InvalidParameter(
                "prior density must vanish at the support endpoints".into(),
            ));
        }
        Ok(())
    }
}

/// Density floor below which the score ratio `pi'^2 / pi` is treated as zero.
const DENSITY_GUARD: f64 = 1e-300;

/// Prior Fisher information `J_pi = int pi'(s)^2 / pi(s) ds`.
pub fn prior_fisher_info(prior: &Prior1D) -> Result<f64> {
    let (a, b) = prior.support();
    adaptive_simpson(
        |s| {
            let p = prior.density(s);
            if p < DENSITY_GUARD {
                0.0
            } else {
                let dp = prior.derivative(s);
                dp * dp / p
            }
        },
        a,
        b,
        1e-9,
        48,
    )
    .map_err(|_| Error::NonIntegrable("prior fisher information"))
}

/// Van Trees bound for the location parameter:
/// `(1/n) tr((I_fisher + J_pi / (delta^2 n))^{-1})`.
///
/// A scalar `j_pi` stands for the prior Fisher matrix `j_pi * I`.
pub fn van_trees_theta(fisher: &DMatrix<f64>, j_pi: f64, delta: f64, n: usize) -> Result<f64> {
    if !(delta > 0.0) || n == 0 || !(j_pi >= 0.0) {
        return Err(Error::InvalidParameter(
            "van_trees_theta needs delta > 0, n >= 1, j_pi >= 0".into(),
        ));
    }
    let shift = j_pi / (delta * delta * n as f64);
    let eig = fisher.clone().symmetric_eigen();
    let mut trace_inv = 0.0;
    for &lambda in eig.eigenvalues.iter() {
        let shifted = lambda + shift;
        if !(shifted > 0.0) {
            return Err(Error::SingularMatrix);
        }
        trace_inv += 1.0 / shifted;
    }
    Ok(trace_inv / n as f64)
}

/// Van Trees bound for a scalar functional:
/// first-order efficiency term minus the prior penalty minus the modulus
/// integral against the rescaled prior.
///
/// * `sigma_inv_grad_norm`: `||I^{-1/2} f'(theta_0)|| = sigma_f(theta_0)`;
/// * `inv_grad_norm`: `||I^{-1} f'(theta_0)||`;
/// * `modulus`: nondecreasing continuity modulus of `I^{-1/2} f'` with
///   `modulus(0) = 0`.
///
/// The result may be negative for aggressive priors; callers clamp.
pub fn van_trees_functional(
    sigma_inv_grad_norm: f64,
    inv_grad_norm: f64,
    j_pi: f64,
    delta: f64,
    n: usize,
    modulus: &dyn Fn(f64) -> f64,
    prior: &Prior1D,
) -> Result<f64> {
    if !(sigma_inv_grad_norm >= 0.0 && inv_grad_norm >= 0.0 && j_pi >= 0.0 && delta > 0.0)
        || n == 0
    {
        return Err(Error::InvalidParameter(
            "van_trees_functional needs nonnegative inputs, delta > 0, n >= 1".into(),
        ));
    }
    let penalty = (j_pi / (delta * delta * n as f64)).sqrt() * inv_grad_norm;
    let (a, b) = prior.support();
    // integral of modulus(|s|) against the rescaled prior, by substitution
    let smear = adaptive_simpson(
        |u| modulus((delta * u).abs()) * prior.density(u),
        a,
        b,
        1e-10,
        48,
    )
    .map_err(|_| Error::NonIntegrable("modulus integral"))?;
    Ok(sigma_inv_grad_norm - penalty - smear)
}

/// Local minimax efficiency floor over a `c / sqrt(n)` neighborhood:
/// `1 - 3 pi / (sqrt(8 m) c) - (2 / sqrt(m)) (||f||_{C^s} / sigma_f) (c / sqrt(n))^rho`.
pub fn local_minimax_bound(m: f64, c: f64, cs_over_sigma: f64, rho: f64, n: usize) -> f64 {
    let penalty_prior = 3.0 * std::f64::consts::PI / ((8.0 * m).sqrt() * c);
    let penalty_modulus =
        2.0 / m.sqrt() * cs_over_sigma * (c / (n as f64).sqrt()).powf(rho);
    1.0 - penalty_prior - penalty_modulus
}

/// Global minimax rate `max(n^{-1/2}, (d/n)^{s/2})` capped at one.
///
/// Rate only; the constant is unspecified.
pub fn global_minimax_rate(n: usize, d: usize, s: f64) -> f64 {
    let nf = n as f64;
    let parametric = nf.powf(-0.5);
    let nonparametric = (d as f64 / nf).powf(s / 2.0);
    parametric.max(nonparametric).min(1.0)
}

/// Structured record of one evaluated bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub formula_id: String,
    pub inputs: serde_json::Value,
    pub bound_value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Gaussian;
    use crate::model::Potential;
    use crate::rng::substream;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn cos_cubed_prior_is_valid_with_fisher_nine_halves() {
        let prior = Prior1D::cos_cubed();
        prior.validate().unwrap();
        let j = prior_fisher_info(&prior).unwrap();
        assert_abs_diff_eq!(j, 4.5, epsilon = 1e-6);
    }

    #[test]
    fn rescaling_divides_fisher_info_by_delta_squared() {
        let prior = Prior1D::cos_cubed();
        let j = prior_fisher_info(&prior).unwrap();
        for delta in [0.5, 1.0, 2.0, 5.0] {
            let scaled = prior.rescaled(delta).unwrap();
            scaled.validate().unwrap();
            let js = prior_fisher_info(&scaled).unwrap();
            assert_abs_diff_eq!(js, j / (delta * delta), epsilon = 1e-6);
        }
    }

    #[test]
    fn smooth_bump_prior_matches_midpoint_oracle() {
        // pi ~ exp(-1/(1 - s^2)) on (-1, 1), normalized numerically
        let z = adaptive_simpson(
            |s: f64| (-1.0 / (1.0 - s * s)).exp(),
            -1.0,
            1.0,
            1e-12,
            48,
        )
        .unwrap();
        let prior = Prior1D::new(
            "bump",
            (-1.0, 1.0),
            move |s| {
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - s * s)).exp() / z
                }
            },
            move |s| {
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    let w = 1.0 - s * s;
                    (-1.0 / w).exp() / z * (-2.0 * s / (w * w))
                }
            },
        );
        prior.validate().unwrap();
        let j = prior_fisher_info(&prior).unwrap();
        // independent midpoint rule with 1e6 nodes
        let nodes = 1_000_000;
        let h = 2.0 / nodes as f64;
        let mut oracle = 0.0;
        for i in 0..nodes {
            let s = -1.0 + (i as f64 + 0.5) * h;
            let p = prior.density(s);
            if p > 1e-300 {
                let dp = prior.derivative(s);
                oracle += dp * dp / p * h;
            }
        }
        assert_abs_diff_eq!(j, oracle, epsilon = 1e-6);
    }

    #[test]
    fn van_trees_theta_examples() {
        let d = 3;
        let n = 400;
        let id = DMatrix::identity(d, d);
        // delta -> infinity recovers the Cramer-Rao trace d/n
        let loose = van_trees_theta(&id, 4.5, 1e9, n).unwrap();
        assert!((loose - d as f64 / n as f64).abs() / (d as f64 / n as f64) <= 1e-9);
        // j_pi = 0 is exact
        assert_abs_diff_eq!(
            van_trees_theta(&id, 0.0, 1.0, n).unwrap(),
            d as f64 / n as f64,
            epsilon = 1e-15
        );
        // d = 2 worked example vs direct inversion
        let id2 = DMatrix::identity(2, 2);
        let n2 = 100;
        let delta = 2.0 / (PI * (n2 as f64).sqrt());
        let got = van_trees_theta(&id2, 4.5, delta, n2).unwrap();
        let closed = (1.0 / n2 as f64) * 2.0 / (1.0 + 4.5 * PI * PI / 4.0);
        assert_abs_diff_eq!(got, closed, epsilon = 1e-12);
        let shift = 4.5 / (delta * delta * n2 as f64);
        let direct = (&id2 + DMatrix::identity(2, 2) * shift)
            .try_inverse()
            .unwrap()
            .trace()
            / n2 as f64;
        assert_abs_diff_eq!(got, direct, epsilon = 1e-12);
    }

    #[test]
    fn van_trees_theta_monotonicity() {
        let mut rng = substream(61, &[]);
        use rand::Rng;
        for _ in 0..20 {
            let d = 3;
            let mut a = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() - 0.5);
            a = &a * a.transpose() + DMatrix::identity(d, d) * 0.2;
            let base = van_trees_theta(&a, 4.5, 1.0, 50).unwrap();
            let larger_delta = van_trees_theta(&a, 4.5, 2.0, 50).unwrap();
            let larger_jpi = van_trees_theta(&a, 9.0, 1.0, 50).unwrap();
            assert!(larger_delta >= base);
            assert!(larger_jpi <= base);
        }
    }

    #[test]
    fn van_trees_functional_examples() {
        let prior = Prior1D::cos_cubed();
        // zero modulus and zero prior information reduce to sigma_f
        let v = van_trees_functional(1.7, 0.9, 0.0, 0.3, 50, &|_| 0.0, &prior).unwrap();
        assert_abs_diff_eq!(v, 1.7, epsilon = 1e-12);

        // linear modulus integrates to slope * delta * E|s|
        let (slope, delta, n) = (0.8, 0.25, 200);
        let v = van_trees_functional(1.7, 0.9, 4.5, delta, n, &|r| slope * r, &prior).unwrap();
        let mean_abs = FRAC_PI_2 - 7.0 / 6.0; // closed form for the cos^3 prior
        let expected = 1.7 - (4.5 / (delta * delta * n as f64)).sqrt() * 0.9
            - slope * delta * mean_abs;
        assert_abs_diff_eq!(v, expected, epsilon = 1e-9);

        // aggressive prior makes the bound negative; it is returned as-is
        let v = van_trees_functional(0.1, 5.0, 100.0, 0.01, 10, &|_| 0.0, &prior).unwrap();
        assert!(v < 0.0);
    }

    #[test]
    fn local_minimax_examples() {
        let v = local_minimax_bound(1.0, 10.0, 1.0, 1.0, 10_000);
        let closed = 1.0 - 3.0 * PI / (20.0 * 2.0f64.sqrt()) - 0.2;
        assert_abs_diff_eq!(v, closed, epsilon = 1e-10);

        // both penalties vanish in the joint limit: the prior term as c grows,
        // the modulus term as n outgrows c^2
        let v = local_minimax_bound(1.0, 1e6, 0.0, 1.0, usize::MAX);
        assert!((v - 1.0).abs() < 1e-5);
        let coarse = local_minimax_bound(1.0, 1e6, 1.0, 1.0, 1_000_000_000_000_000_000);
        let finer = local_minimax_bound(1.0, 1e8, 1.0, 1.0, usize::MAX);
        assert!(1.0 - coarse > 1.0 - finer);
        assert!((1.0 - coarse).abs() < 3e-3);

        // c solving 3 pi / (sqrt(8 m) c) = 1 drives the bound to <= 0
        let c = 3.0 * PI / 8.0f64.sqrt();
        let v = local_minimax_bound(1.0, c, 1.0, 1.0, 10_000);
        assert!(v <= 0.0);
    }

    #[test]
    fn global_rate_examples() {
        assert_eq!(global_minimax_rate(100, 100, 3.0), 1.0);
        assert_abs_diff_eq!(global_minimax_rate(10_000, 10, 2.0), 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(
            global_minimax_rate(10_000, 10, 400.0),
            0.01,
            epsilon = 1e-12
        );
    }

    #[test]
    fn empirical_bayes_risk_of_the_mean_dominates_van_trees() {
        // Gaussian d = 5, n = 200, product cos^3 prior rescaled by
        // delta = 2c/(pi sqrt(n)), c = 5; the sample-mean risk must sit
        // above the bound.
        use rand::Rng;
        let (d, n, c) = (5usize, 200usize, 5.0);
        let delta = 2.0 * c / (PI * (n as f64).sqrt());
        let prior = Prior1D::cos_cubed();
        let j_pi = prior_fisher_info(&prior).unwrap();
        let bound = van_trees_theta(&DMatrix::identity(d, d), j_pi, delta, n).unwrap();

        let pot = Gaussian::new(d).unwrap();
        let sampler = pot.make_sampler().unwrap();
        // inverse CDF of the cos^3 prior by bisection
        let cdf = |s: f64| 0.5 + 0.75 * (s.sin() - s.sin().powi(3) / 3.0);
        let draw_prior = |u: f64| {
            let (mut lo, mut hi) = (-FRAC_PI_2, FRAC_PI_2);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if cdf(mid) < u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let reps = 10_000;
        let mut rng = substream(62, &[]);
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..reps {
            let theta: Vec<f64> = (0..d)
                .map(|_| delta * draw_prior(rng.random::<f64>()))
                .collect();
            let data = sampler.sample_data(&theta, n, &mut rng).unwrap();
            let mean = data.mean();
            let err: f64 = mean
                .iter()
                .zip(&theta)
                .map(|(&m, &t)| (m - t) * (m - t))
                .sum();
            sum += err;
            sumsq += err * err;
        }
        let risk = sum / reps as f64;
        let var = (sumsq / reps as f64 - risk * risk).max(0.0);
        let se = (var / reps as f64).sqrt();
        assert!(
            risk >= bound - 3.0 * se,
            "risk {risk} below bound {bound} (se {se})"
        );
    }
}
