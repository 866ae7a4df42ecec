//! Log-concave location-family potentials and information quantities.
//!
//! A potential is the convex function `V` in the density `exp(-V(x - theta))`,
//! exposed with exact gradient and Hessian oracles plus the regularity
//! constants `M` (sup norm of `V''`), `L` (Lipschitz constant of `V''`) and
//! `m` (lower bound on the Fisher information spectrum). Three builtin
//! families are provided:
//!
//! * [`Gaussian`]: `V(x) = ||x||^2 / 2`.
//! * [`ProductLogCosh`]: `V(x) = sum_i v(x_i)` with
//!   `v(t) = t^2/2 + alpha * log cosh(beta t)`. `alpha = 0` degenerates to the
//!   Gaussian coordinate law, which is useful for validating the inverse-CDF
//!   sampling path against the exact normal.
//! * [`RadialSmooth`]: `V(x) = phi(||x||^2)` with `phi` convex and `phi''`
//!   a polynomial bump supported on `[0, 1]`, so the Hessian of `V` is not
//!   bounded below at the origin while the Fisher information still is.
//!
//! Family-level scalars with no closed form (Fisher scalar, noise variance,
//! sup/Lipschitz bounds for the radial family) are computed once at
//! construction by 1-D quadrature or dense maximization and cached.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::functionals::FunctionalSpec;
use crate::quad::adaptive_simpson;
use crate::rng::{derive_key, domain, substream};
use crate::sampler::NoiseSampler;
use crate::{Error, Result};

/// Convex potential of a log-concave location family.
///
/// Implementations must keep `value`, `gradient` and `hessian` mutually
/// consistent (finite differences of one reproduce the next) and the claimed
/// constants valid: `||V''(x)|| <= M`, `||V''(x) - V''(y)|| <= L ||x - y||`
/// and `Fisher >= m I`.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    /// `V(x)`, up to an additive constant.
    fn value(&self, x: &[f64]) -> f64;
    /// Writes `V'(x)` into `out`.
    fn grad_into(&self, x: &[f64], out: &mut [f64]);
    /// Writes `V''(x)` into `out` (dense symmetric).
    fn hess_into(&self, x: &[f64], out: &mut DMatrix<f64>);
    /// Claimed sup-norm bound `M` on the Hessian.
    fn sup_hess_norm(&self) -> f64;
    /// Claimed Lipschitz constant `L` of the Hessian.
    fn hess_lipschitz(&self) -> f64;
    /// Claimed lower bound `m` on the eigenvalues of the Fisher information.
    fn fisher_floor(&self) -> f64;
    /// True when the Hessian of `V` is bounded below by a positive multiple
    /// of the identity uniformly in `x`.
    fn strongly_convex(&self) -> bool;
    /// Heuristic upper bound on the Poincare constant of `exp(-V)`; reported
    /// metadata only, never used in computations.
    fn poincare_upper(&self) -> Option<f64>;
    /// Fisher information to quadrature accuracy, when the family admits it.
    fn exact_fisher(&self) -> Option<DMatrix<f64>> {
        None
    }
    /// Exact or inverse-CDF sampler for the noise `xi ~ exp(-V)`.
    fn make_sampler(&self) -> Option<NoiseSampler> {
        None
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.grad_into(x, out.as_mut_slice());
        out
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        self.hess_into(x, &mut out);
        out
    }
}

fn check_dim(pot: &dyn Potential, x: &[f64]) -> Result<()> {
    if x.len() != pot.dim() {
        return Err(Error::DimensionMismatch {
            expected: pot.dim(),
            got: x.len(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Gaussian family
// ---------------------------------------------------------------------------

/// Standard Gaussian potential `V(x) = ||x||^2 / 2`.
#[derive(Debug, Clone)]
pub struct Gaussian {
    dim: usize,
}

impl Gaussian {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be positive".into()));
        }
        Ok(Self { dim })
    }
}

impl Potential for Gaussian {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|&t| t * t).sum::<f64>()
    }
    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn hess_into(&self, _x: &[f64], out: &mut DMatrix<f64>) {
        out.fill(0.0);
        out.fill_diagonal(1.0);
    }
    fn sup_hess_norm(&self) -> f64 {
        1.0
    }
    fn hess_lipschitz(&self) -> f64 {
        0.0
    }
    fn fisher_floor(&self) -> f64 {
        1.0
    }
    fn strongly_convex(&self) -> bool {
        true
    }
    fn poincare_upper(&self) -> Option<f64> {
        Some((self.dim as f64).powf(0.1))
    }
    fn exact_fisher(&self) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.dim, self.dim))
    }
    fn make_sampler(&self) -> Option<NoiseSampler> {
        Some(NoiseSampler::exact_gaussian(self.dim))
    }
}

// ---------------------------------------------------------------------------
// Product log-cosh family
// ---------------------------------------------------------------------------

/// Numerically stable `log cosh(u)`.
#[inline]
pub(crate) fn log_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Numerically stable `sech(u)^2`.
#[inline]
pub(crate) fn sech_sq(u: f64) -> f64 {
    let e = (-u.abs()).exp();
    let s = 2.0 * e / (1.0 + e * e);
    s * s
}

/// Half-width of the 1-D tabulation domain; `exp(-t^2/2)` mass beyond it is
/// below 1e-17, far under the 1e-12 tail budget.
const PRODUCT_HALF_WIDTH: f64 = 9.0;

/// Product potential `V(x) = sum_i v(x_i)`, `v(t) = t^2/2 + alpha log cosh(beta t)`.
#[derive(Debug, Clone)]
pub struct ProductLogCosh {
    dim: usize,
    alpha: f64,
    beta: f64,
    fisher_scalar: f64,
    noise_var: f64,
}

impl ProductLogCosh {
    pub fn new(dim: usize, alpha: f64, beta: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be positive".into()));
        }
        if !(alpha >= 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(
                "product_logcosh needs alpha >= 0 and beta > 0".into(),
            ));
        }
        let v = |t: f64| 0.5 * t * t + alpha * log_cosh(beta * t);
        let vpp = |t: f64| 1.0 + alpha * beta * beta * sech_sq(beta * t);
        let t = PRODUCT_HALF_WIDTH;
        let z = adaptive_simpson(|x| (-v(x)).exp(), -t, t, 1e-13, 48)?;
        let fisher_scalar = adaptive_simpson(|x| vpp(x) * (-v(x)).exp(), -t, t, 1e-13, 48)? / z;
        let noise_var = adaptive_simpson(|x| x * x * (-v(x)).exp(), -t, t, 1e-13, 48)? / z;
        Ok(Self {
            dim,
            alpha,
            beta,
            fisher_scalar,
            noise_var,
        })
    }

    #[inline]
    pub(crate) fn v1(&self, t: f64) -> f64 {
        0.5 * t * t + self.alpha * log_cosh(self.beta * t)
    }
    #[inline]
    fn v1p(&self, t: f64) -> f64 {
        t + self.alpha * self.beta * (self.beta * t).tanh()
    }
    #[inline]
    fn v1pp(&self, t: f64) -> f64 {
        1.0 + self.alpha * self.beta * self.beta * sech_sq(self.beta * t)
    }

    /// Per-coordinate Fisher scalar `E v''(xi)`, from quadrature.
    pub fn fisher_scalar(&self) -> f64 {
        self.fisher_scalar
    }
    /// Per-coordinate noise variance `E xi^2`, from quadrature.
    pub fn noise_variance(&self) -> f64 {
        self.noise_var
    }
}

impl Potential for ProductLogCosh {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.v1(t)).sum()
    }
    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, &t) in out.iter_mut().zip(x) {
            *o = self.v1p(t);
        }
    }
    fn hess_into(&self, x: &[f64], out: &mut DMatrix<f64>) {
        out.fill(0.0);
        for (i, &t) in x.iter().enumerate() {
            out[(i, i)] = self.v1pp(t);
        }
    }
    fn sup_hess_norm(&self) -> f64 {
        1.0 + self.alpha * self.beta * self.beta
    }
    fn hess_lipschitz(&self) -> f64 {
        // max |v'''| = alpha beta^3 * max |d sech^2| = alpha beta^3 * 4/(3 sqrt 3)
        self.alpha * self.beta.powi(3) * 4.0 / (3.0 * 3.0f64.sqrt())
    }
    fn fisher_floor(&self) -> f64 {
        self.fisher_scalar
    }
    fn strongly_convex(&self) -> bool {
        // v'' >= 1 uniformly
        true
    }
    fn poincare_upper(&self) -> Option<f64> {
        Some(self.noise_var * (self.dim as f64).powf(0.1))
    }
    fn exact_fisher(&self) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.dim, self.dim) * self.fisher_scalar)
    }
    fn make_sampler(&self) -> Option<NoiseSampler> {
        NoiseSampler::product_1d(self.dim, &|t| self.v1(t), PRODUCT_HALF_WIDTH).ok()
    }
}

// ---------------------------------------------------------------------------
// Radial family
// ---------------------------------------------------------------------------

/// Radial potential `V(x) = phi(||x||^2)` with
/// `phi''(t) = amplitude * t^4 (1-t)^4` on `[0, 1]` and zero elsewhere.
///
/// `phi'` and `phi` integrate in closed form, so all derivative oracles are
/// exact. Beyond `t = 1` the potential grows linearly in `t = ||x||^2`,
/// giving Gaussian-type tails.
#[derive(Debug, Clone)]
pub struct RadialSmooth {
    dim: usize,
    amplitude: f64,
    sup_hess: f64,
    lip: f64,
    fisher_scalar: f64,
    second_moment: f64,
    radius_max: f64,
}

pub(crate) const RADIAL_DEFAULT_AMPLITUDE: f64 = 630.0;

impl RadialSmooth {
    pub fn new(dim: usize, amplitude: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be positive".into()));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidParameter("amplitude must be positive".into()));
        }
        let a = amplitude;
        let sup_hess = refine_max(|r| 2.0 * phi_p(a, r) + 4.0 * r * phi_pp(a, r), 0.0, 1.0);
        let lip = refine_max(
            |rho| {
                let r = rho * rho;
                12.0 * phi_pp(a, r) * rho + 8.0 * phi_ppp(a, r).abs() * rho.powi(3)
            },
            0.0,
            1.0,
        );
        let d = dim as f64;
        let log_radius = |r: f64| (d - 1.0) * r.max(1e-300).ln() - phi(a, r * r);
        let coarse_top = 10.0 + d.sqrt() * 40.0_f64.sqrt();
        let ln_peak = (0..=4000)
            .map(|i| log_radius(coarse_top * i as f64 / 4000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut radius_max = (0.5 * d).sqrt().max(1.5);
        while log_radius(radius_max) > ln_peak - 46.0 {
            radius_max += 0.25;
        }
        let w = |r: f64| ((d - 1.0) * r.max(1e-300).ln() - phi(a, r * r) - ln_peak).exp();
        let z = adaptive_simpson(&w, 0.0, radius_max, 1e-13, 48)?;
        let fisher_scalar = adaptive_simpson(
            |r| (2.0 * phi_p(a, r * r) + 4.0 / d * phi_pp(a, r * r) * r * r) * w(r),
            0.0,
            radius_max,
            1e-13,
            48,
        )? / z;
        let second_moment = adaptive_simpson(|r| r * r * w(r), 0.0, radius_max, 1e-12, 48)? / z;
        Ok(Self {
            dim,
            amplitude,
            sup_hess,
            lip,
            fisher_scalar,
            second_moment,
            radius_max,
        })
    }

    pub fn fisher_scalar(&self) -> f64 {
        self.fisher_scalar
    }
    /// `E ||xi||^2`, from quadrature.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }
    pub(crate) fn phi_of(&self, t: f64) -> f64 {
        phi(self.amplitude, t)
    }
}

/// `phi(t)`: closed-form double integral of the bump.
fn phi(a: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        a / 1260.0 + a / 630.0 * (t - 1.0)
    } else {
        let t6 = t.powi(6);
        a * (t6 / 30.0 - 2.0 * t6 * t / 21.0 + 3.0 * t6 * t * t / 28.0 - t6 * t * t * t / 18.0
            + t6 * t.powi(4) / 90.0)
    }
}

/// `phi'(t)`: closed-form integral of the bump.
fn phi_p(a: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        a / 630.0
    } else {
        let t5 = t.powi(5);
        a * (t5 / 5.0 - 2.0 * t5 * t / 3.0 + 6.0 * t5 * t * t / 7.0 - t5 * t * t * t / 2.0
            + t5 * t.powi(4) / 9.0)
    }
}

/// `phi''(t) = a t^4 (1-t)^4` on `[0, 1]`.
fn phi_pp(a: f64, t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let u = t * (1.0 - t);
        a * u * u * u * u
    }
}

fn phi_ppp(a: f64, t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let u = t * (1.0 - t);
        4.0 * a * u * u * u * (1.0 - 2.0 * t)
    }
}

/// Dense grid maximum followed by golden-section refinement.
fn refine_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 100_000;
    let mut best = f64::NEG_INFINITY;
    let mut best_i = 0;
    for i in 0..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let y = f(x);
        if y > best {
            best = y;
            best_i = i;
        }
    }
    let step = (hi - lo) / n as f64;
    let mut a = (lo + (best_i as f64 - 1.0) * step).max(lo);
    let mut b = (lo + (best_i as f64 + 1.0) * step).min(hi);
    let inv_phi = 0.618_033_988_749_894_9;
    for _ in 0..80 {
        let c = b - inv_phi * (b - a);
        let d = a + inv_phi * (b - a);
        if f(c) < f(d) {
            a = c;
        } else {
            b = d;
        }
    }
    best.max(f(0.5 * (a + b)))
}

impl Potential for RadialSmooth {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        phi(self.amplitude, x.iter().map(|&t| t * t).sum())
    }
    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        let r: f64 = x.iter().map(|&t| t * t).sum();
        let c = 2.0 * phi_p(self.amplitude, r);
        for (o, &t) in out.iter_mut().zip(x) {
            *o = c * t;
        }
    }
    fn hess_into(&self, x: &[f64], out: &mut DMatrix<f64>) {
        let r: f64 = x.iter().map(|&t| t * t).sum();
        let c1 = 2.0 * phi_p(self.amplitude, r);
        let c2 = 4.0 * phi_pp(self.amplitude, r);
        for j in 0..self.dim {
            for i in 0..self.dim {
                out[(i, j)] = c2 * x[i] * x[j];
            }
            out[(j, j)] += c1;
        }
    }
    fn sup_hess_norm(&self) -> f64 {
        self.sup_hess
    }
    fn hess_lipschitz(&self) -> f64 {
        self.lip
    }
    fn fisher_floor(&self) -> f64 {
        self.fisher_scalar
    }
    fn strongly_convex(&self) -> bool {
        // V''(0) = 0
        false
    }
    fn poincare_upper(&self) -> Option<f64> {
        let d = self.dim as f64;
        Some(self.second_moment / d * d.powf(0.1))
    }
    fn exact_fisher(&self) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.dim, self.dim) * self.fisher_scalar)
    }
    fn make_sampler(&self) -> Option<NoiseSampler> {
        NoiseSampler::radial(self.dim, &|t| self.phi_of(t), self.radius_max).ok()
    }
}

// ---------------------------------------------------------------------------
// Family config schema
// ---------------------------------------------------------------------------

fn default_alpha() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    1.0
}
fn default_amplitude() -> f64 {
    RADIAL_DEFAULT_AMPLITUDE
}

/// Family specification as consumed from CLI configs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Gaussian {
        dim: usize,
    },
    ProductLogcosh {
        dim: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    RadialSmooth {
        dim: usize,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

impl FamilySpec {
    pub fn dim(&self) -> usize {
        match *self {
            FamilySpec::Gaussian { dim }
            | FamilySpec::ProductLogcosh { dim, .. }
            | FamilySpec::RadialSmooth { dim, .. } => dim,
        }
    }

    pub fn with_dim(&self, dim: usize) -> FamilySpec {
        let mut s = self.clone();
        match &mut s {
            FamilySpec::Gaussian { dim: d }
            | FamilySpec::ProductLogcosh { dim: d, .. }
            | FamilySpec::RadialSmooth { dim: d, .. } => *d = dim,
        }
        s
    }

    pub fn build(&self) -> Result<Box<dyn Potential>> {
        Ok(match *self {
            FamilySpec::Gaussian { dim } => Box::new(Gaussian::new(dim)?),
            FamilySpec::ProductLogcosh { dim, alpha, beta } => {
                Box::new(ProductLogCosh::new(dim, alpha, beta)?)
            }
            FamilySpec::RadialSmooth { dim, amplitude } => {
                Box::new(RadialSmooth::new(dim, amplitude)?)
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Fisher information
// ---------------------------------------------------------------------------

/// Estimation route for the Fisher information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMethod {
    /// Average of `V'(xi) (x) V'(xi)`.
    Score,
    /// Average of `V''(xi)`.
    Hessian,
}

/// Monte Carlo Fisher information estimate with entrywise standard errors.
#[derive(Debug, Clone)]
pub struct FisherEstimate {
    pub matrix: DMatrix<f64>,
    pub mc_se: DMatrix<f64>,
    pub method: FisherMethod,
    pub samples: usize,
}

const FISHER_CHUNK: usize = 4096;

/// Monte Carlo Fisher information over i.i.d. noise draws.
///
/// Chunks of samples run in parallel on disjoint substreams derived from the
/// caller's stream; the reduction is in chunk order, so the result does not
/// depend on the number of worker threads.
pub fn fisher_information(
    pot: &dyn Potential,
    method: FisherMethod,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FisherEstimate> {
    let sampler = pot.make_sampler().ok_or(Error::UnsupportedSampler)?;
    fisher_information_with(pot, &sampler, method, samples, rng)
}

/// [`fisher_information`] with a caller-supplied sampler.
pub fn fisher_information_with(
    pot: &dyn Potential,
    sampler: &NoiseSampler,
    method: FisherMethod,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FisherEstimate> {
    if samples < 100 {
        return Err(Error::InvalidParameter("fisher needs samples >= 100".into()));
    }
    let d = pot.dim();
    let master = derive_key(rng);
    let n_chunks = samples.div_ceil(FISHER_CHUNK);
    let partials: Vec<Result<(DMatrix<f64>, DMatrix<f64>)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let len = FISHER_CHUNK.min(samples - c * FISHER_CHUNK);
            let mut rng = substream(master, &[domain::FISHER, c as u64]);
            let noise = sampler.sample_noise(len, &mut rng)?;
            let mut sum = DMatrix::zeros(d, d);
            let mut sumsq = DMatrix::zeros(d, d);
            let mut work = DMatrix::zeros(d, d);
            let mut grad = vec![0.0; d];
            for row in noise.rows() {
                match method {
                    FisherMethod::Score => {
                        pot.grad_into(row, &mut grad);
                        for j in 0..d {
                            for i in 0..d {
                                work[(i, j)] = grad[i] * grad[j];
                            }
                        }
                    }
                    FisherMethod::Hessian => pot.hess_into(row, &mut work),
                }
                for (s, (q, &w)) in sum
                    .iter_mut()
                    .zip(sumsq.iter_mut().zip(work.iter()))
                {
                    if !w.is_finite() {
                        return Err(Error::NonFinite("fisher sample"));
                    }
                    *s += w;
                    *q += w * w;
                }
            }
            Ok((sum, sumsq))
        })
        .collect();

    let mut sum = DMatrix::zeros(d, d);
    let mut sumsq = DMatrix::zeros(d, d);
    for p in partials {
        let (s, q) = p?;
        sum += s;
        sumsq += q;
    }
    let nf = samples as f64;
    let mean = sum / nf;
    let mut se = DMatrix::zeros(d, d);
    for (e, (&m, &q)) in se.iter_mut().zip(mean.iter().zip(sumsq.iter())) {
        let var = ((q / nf - m * m) * nf / (nf - 1.0)).max(0.0);
        *e = (var / nf).sqrt();
    }
    let sym_mean = (&mean + mean.transpose()) * 0.5;
    let sym_se = (&se + se.transpose()) * 0.5;
    Ok(FisherEstimate {
        matrix: sym_mean,
        mc_se: sym_se,
        method,
        samples,
    })
}

/// Floor below which the Fisher matrix is treated as singular.
pub const FISHER_EIG_FLOOR: f64 = 1e-10;

/// Efficient standard deviation `sigma_f = sqrt(<I^{-1} f'(theta), f'(theta)>)`.
pub fn sigma_f(
    fisher: &FisherEstimate,
    functional: &FunctionalSpec,
    theta: &[f64],
) -> Result<f64> {
    sigma_f_from_matrix(&fisher.matrix, &functional.gradient(theta))
}

/// [`sigma_f`] against an explicit Fisher matrix.
pub fn sigma_f_from_matrix(fisher: &DMatrix<f64>, grad: &DVector<f64>) -> Result<f64> {
    let eig = fisher.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.min();
    if !(min_eig > FISHER_EIG_FLOOR) {
        return Err(Error::SingularFisher { min_eig });
    }
    let mut quad = 0.0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let proj = eig.eigenvectors.column(i).dot(grad);
        quad += proj * proj / lambda;
    }
    Ok(quad.sqrt())
}

/// Scalar Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalarWithSe {
    pub value: f64,
    pub se: f64,
}

/// Monte Carlo Kullback-Leibler divergence `K(P_theta || P_theta')`.
///
/// Uses the location identity `K = E[V(xi + theta - theta') - V(xi)]`.
pub fn kl_divergence_mc(
    pot: &dyn Potential,
    theta: &[f64],
    theta_prime: &[f64],
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ScalarWithSe> {
    check_dim(pot, theta)?;
    check_dim(pot, theta_prime)?;
    if samples < 100 {
        return Err(Error::InvalidParameter("kl needs samples >= 100".into()));
    }
    let sampler = pot.make_sampler().ok_or(Error::UnsupportedSampler)?;
    let shift: Vec<f64> = theta
        .iter()
        .zip(theta_prime)
        .map(|(&a, &b)| a - b)
        .collect();
    if shift.iter().all(|&s| s == 0.0) {
        return Ok(ScalarWithSe { value: 0.0, se: 0.0 });
    }
    let master = derive_key(rng);
    let n_chunks = samples.div_ceil(FISHER_CHUNK);
    let partials: Vec<Result<(f64, f64)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let len = FISHER_CHUNK.min(samples - c * FISHER_CHUNK);
            let mut rng = substream(master, &[domain::KL, c as u64]);
            let noise = sampler.sample_noise(len, &mut rng)?;
            let mut shifted = vec![0.0; shift.len()];
            let (mut sum, mut sumsq) = (0.0, 0.0);
            for row in noise.rows() {
                for (s, (&x, &h)) in shifted.iter_mut().zip(row.iter().zip(&shift)) {
                    *s = x + h;
                }
                let y = pot.value(&shifted) - pot.value(row);
                if !y.is_finite() {
                    return Err(Error::NonFinite("kl sample"));
                }
                sum += y;
                sumsq += y * y;
            }
            Ok((sum, sumsq))
        })
        .collect();
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for p in partials {
        let (s, q) = p?;
        sum += s;
        sumsq += q;
    }
    let nf = samples as f64;
    let mean = sum / nf;
    let var = ((sumsq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    Ok(ScalarWithSe {
        value: mean,
        se: (var / nf).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Derivative validation probes
// ---------------------------------------------------------------------------

/// Worst-case discrepancies from a finite-difference validation sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DerivativeCheck {
    pub grad_rel_err: f64,
    pub hess_rel_err: f64,
    pub min_hess_eig: f64,
    pub max_hess_norm: f64,
    pub max_lipschitz_ratio: f64,
}

/// Probes derivative oracles at `probes` points drawn from `N(0, 4 I)`.
///
/// Gradient is compared against central differences of the value, the
/// Hessian against central differences of the gradient, and the claimed
/// `M` / `L` constants against observed operator norms.
pub fn check_derivatives(
    pot: &dyn Potential,
    probes: usize,
    rng: &mut ChaCha8Rng,
) -> DerivativeCheck {
    use rand_distr::{Distribution, StandardNormal};
    let d = pot.dim();
    let normal = StandardNormal;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..d)
            .map(|_| 2.0 * <StandardNormal as Distribution<f64>>::sample(&normal, rng))
            .collect()
    };
    let mut out = DerivativeCheck {
        grad_rel_err: 0.0,
        hess_rel_err: 0.0,
        min_hess_eig: f64::INFINITY,
        max_hess_norm: 0.0,
        max_lipschitz_ratio: 0.0,
    };
    let mut prev: Option<(Vec<f64>, DMatrix<f64>)> = None;
    for _ in 0..probes {
        let x = draw(rng);
        let grad = pot.gradient(&x);
        let grad_scale = grad.norm().max(1.0);
        let mut xp = x.clone();
        for i in 0..d {
            let h = 1e-5 * (1.0 + x[i].abs());
            xp[i] = x[i] + h;
            let vp = pot.value(&xp);
            xp[i] = x[i] - h;
            let vm = pot.value(&xp);
            xp[i] = x[i];
            let fd = (vp - vm) / (2.0 * h);
            out.grad_rel_err = out.grad_rel_err.max((fd - grad[i]).abs() / grad_scale);
        }
        let hess = pot.hessian(&x);
        let eig = hess.clone().symmetric_eigen();
        let norm = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        out.min_hess_eig = out.min_hess_eig.min(eig.eigenvalues.min());
        out.max_hess_norm = out.max_hess_norm.max(norm);
        let hess_scale = norm.max(1.0);
        for j in 0..d {
            let h = 1e-5 * (1.0 + x[j].abs());
            xp[j] = x[j] + h;
            let gp = pot.gradient(&xp);
            xp[j] = x[j] - h;
            let gm = pot.gradient(&xp);
            xp[j] = x[j];
            for i in 0..d {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                out.hess_rel_err = out.hess_rel_err.max((fd - hess[(i, j)]).abs() / hess_scale);
            }
        }
        if let Some((px, ph)) = prev.take() {
            let dist: f64 = x
                .iter()
                .zip(&px)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist > 1e-9 {
                let diff = &hess - &ph;
                let dn = diff
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .fold(0.0f64, |a, &l| a.max(l.abs()));
                out.max_lipschitz_ratio = out.max_lipschitz_ratio.max(dn / dist);
            }
        }
        prev = Some((x, hess));
    }
    out
}
