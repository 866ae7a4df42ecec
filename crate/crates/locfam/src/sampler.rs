//! Exact and inverse-CDF samplers for the builtin noise distributions.
//!
//! The Gaussian family samples standard normals directly. Product and radial
//! families reduce to one 1-D density each (a coordinate law, respectively
//! the radius law `r^{d-1} exp(-phi(r^2))`), which is tabulated once into a
//! strictly increasing `(u, q(u))` quantile table and then sampled by
//! monotone cubic interpolation. Tables are built on a 4096-interval base
//! grid over a domain truncated where the tail mass is below 1e-12, with
//! intervals split further wherever the interpolated quantile misses the
//! quadrature CDF by more than 1e-9 at the interval midpoint.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::quad::{adaptive_simpson, MonotoneCubic};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Row-major `n x d` sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    data: Vec<f64>,
}

impl Dataset {
    pub fn zeros(d: usize, n: usize) -> Self {
        Self {
            d,
            data: vec![0.0; d * n],
        }
    }

    pub fn from_vec(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || data.len() % d != 0 {
            return Err(Error::InvalidParameter(
                "dataset length must be a positive multiple of dim".into(),
            ));
        }
        Ok(Self { d, data })
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Coordinatewise sample mean.
    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.d);
        for row in self.rows() {
            for (acc, &x) in m.iter_mut().zip(row) {
                *acc += x;
            }
        }
        m / self.n() as f64
    }

    /// Rowwise shift by `u`.
    pub fn shifted(&self, u: &[f64]) -> Dataset {
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(self.d) {
            for (x, &s) in row.iter_mut().zip(u) {
                *x += s;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Inverse-CDF table
// ---------------------------------------------------------------------------

const BASE_INTERVALS: usize = 4096;
const NODE_MASS_TOL: f64 = 1e-15;
const MIDPOINT_U_TOL: f64 = 1e-9;
const MAX_REFINE_PASSES: usize = 4;

/// Tabulated quantile function of a 1-D density.
#[derive(Debug, Clone)]
pub struct InverseCdfTable {
    us: Vec<f64>,
    qs: Vec<f64>,
    interp: MonotoneCubic,
    /// Log of the (possibly rescaled) normalizing constant of the tabulated
    /// density over its truncated domain.
    pub log_normalizer: f64,
}

impl InverseCdfTable {
    /// Builds the table for an unnormalized density `f >= 0` on `[lo, hi]`.
    pub fn build(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Self> {
        let mut nodes: Vec<f64> = (0..=BASE_INTERVALS)
            .map(|i| lo + (hi - lo) * i as f64 / BASE_INTERVALS as f64)
            .collect();
        let mut masses = interval_masses(f, &nodes)?;
        for _pass in 0..MAX_REFINE_PASSES {
            let (us, total) = normalized_cdf(&masses);
            let table = assemble(f, &nodes, &us, total)?;
            let mut split_at = Vec::new();
            for i in 0..nodes.len() - 1 {
                if us[i + 1] - us[i] < 1e-13 {
                    continue;
                }
                let u_mid = 0.5 * (us[i] + us[i + 1]);
                let q = table.interp.eval(u_mid);
                let partial = adaptive_simpson(f, nodes[i], q.clamp(nodes[i], nodes[i + 1]), NODE_MASS_TOL, 40)?;
                if ((us[i] + partial / total) - u_mid).abs() > MIDPOINT_U_TOL {
                    split_at.push(i);
                }
            }
            if split_at.is_empty() {
                return Ok(table);
            }
            for &i in split_at.iter().rev() {
                let mid = 0.5 * (nodes[i] + nodes[i + 1]);
                let left = adaptive_simpson(f, nodes[i], mid, NODE_MASS_TOL, 40)?;
                let right = adaptive_simpson(f, mid, nodes[i + 1], NODE_MASS_TOL, 40)?;
                nodes.insert(i + 1, mid);
                masses[i] = left;
                masses.insert(i + 1, right);
            }
        }
        let (us, total) = normalized_cdf(&masses);
        assemble(f, &nodes, &us, total)
    }

    /// Quantile lookup; `u` outside `[0, 1]` clamps to the domain endpoints.
    pub fn quantile(&self, u: f64) -> f64 {
        self.interp.eval(u)
    }

    /// Table nodes as `(u, q)` pairs.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.us.iter().copied().zip(self.qs.iter().copied())
    }
}

fn interval_masses(f: &dyn Fn(f64) -> f64, nodes: &[f64]) -> Result<Vec<f64>> {
    nodes
        .windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], NODE_MASS_TOL, 40))
        .collect()
}

fn normalized_cdf(masses: &[f64]) -> (Vec<f64>, f64) {
    let mut cum = Vec::with_capacity(masses.len() + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for &m in masses {
        acc += m.max(0.0);
        cum.push(acc);
    }
    let total = acc;
    for u in cum.iter_mut() {
        *u /= total;
    }
    (cum, total)
}

fn assemble(
    f: &dyn Fn(f64) -> f64,
    nodes: &[f64],
    us: &[f64],
    total: f64,
) -> Result<InverseCdfTable> {
    // drop nodes whose CDF increment is below resolution, keeping both ends
    let mut ks = vec![0usize];
    for (i, u) in us.iter().enumerate().skip(1) {
        if *u > us[*ks.last().unwrap()] {
            ks.push(i);
        }
    }
    let us_kept: Vec<f64> = ks.iter().map(|&i| us[i]).collect();
    let qs_kept: Vec<f64> = ks.iter().map(|&i| nodes[i]).collect();
    // dq/du = total / f(q)
    let slopes: Vec<f64> = qs_kept
        .iter()
        .map(|&q| {
            let den = f(q);
            if den > 0.0 {
                total / den
            } else {
                0.0
            }
        })
        .collect();
    let interp = MonotoneCubic::with_slopes(us_kept.clone(), qs_kept.clone(), slopes)?;
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::NonIntegrable("density mass"));
    }
    Ok(InverseCdfTable {
        us: us_kept,
        qs: qs_kept,
        interp,
        log_normalizer: total.ln(),
    })
}

// ---------------------------------------------------------------------------
// Noise sampler
// ---------------------------------------------------------------------------

/// Sampling route for a builtin family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMethod {
    ExactGaussian,
    ProductInverseCdf,
    RadialInverseCdf,
}

/// Sampler producing i.i.d. draws `xi ~ exp(-V)` and shifted data `theta + xi`.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    pub(crate) dim: usize,
    pub(crate) method: SampleMethod,
    pub(crate) table: Option<InverseCdfTable>,
}

impl NoiseSampler {
    pub fn exact_gaussian(dim: usize) -> Self {
        Self {
            dim,
            method: SampleMethod::ExactGaussian,
            table: None,
        }
    }

    /// Product family: tabulates the coordinate density `exp(-v)` on
    /// `[-half_width, half_width]`.
    pub fn product_1d(dim: usize, v: &dyn Fn(f64) -> f64, half_width: f64) -> Result<Self> {
        let table = InverseCdfTable::build(&|t| (-v(t)).exp(), -half_width, half_width)?;
        Ok(Self {
            dim,
            method: SampleMethod::ProductInverseCdf,
            table: Some(table),
        })
    }

    /// Radial family: tabulates the radius density `r^{d-1} exp(-phi(r^2))`
    /// on `[0, radius_max]`, rescaled by its log-peak to keep the tabulated
    /// values in range for large `d`.
    pub fn radial(dim: usize, phi: &dyn Fn(f64) -> f64, radius_max: f64) -> Result<Self> {
        let d = dim as f64;
        let log_density = |r: f64| (d - 1.0) * r.max(1e-300).ln() - phi(r * r);
        let ln_peak = (0..=2000)
            .map(|i| log_density(radius_max * i as f64 / 2000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let table =
            InverseCdfTable::build(&|r| (log_density(r) - ln_peak).exp(), 0.0, radius_max)?;
        Ok(Self {
            dim,
            method: SampleMethod::RadialInverseCdf,
            table: Some(table),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn method(&self) -> SampleMethod {
        self.method
    }

    pub fn table(&self) -> Option<&InverseCdfTable> {
        self.table.as_ref()
    }

    /// Draws `n` i.i.d. noise points.
    pub fn sample_noise(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
        let mut out = Dataset::zeros(self.dim, n);
        self.sample_noise_into(&mut out, rng)?;
        Ok(out)
    }

    /// Fills a preallocated dataset with noise draws.
    pub fn sample_noise_into(&self, out: &mut Dataset, rng: &mut ChaCha8Rng) -> Result<()> {
        if out.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: out.dim(),
            });
        }
        match self.method {
            SampleMethod::ExactGaussian => {
                for x in out.data.iter_mut() {
                    *x = StandardNormal.sample(rng);
                }
            }
            SampleMethod::ProductInverseCdf => {
                let table = self.table.as_ref().ok_or(Error::TableNotBuilt)?;
                for x in out.data.iter_mut() {
                    *x = table.quantile(rng.random::<f64>());
                }
            }
            SampleMethod::RadialInverseCdf => {
                let table = self.table.as_ref().ok_or(Error::TableNotBuilt)?;
                let d = self.dim;
                for row in out.data.chunks_exact_mut(d) {
                    loop {
                        let mut norm_sq = 0.0;
                        for x in row.iter_mut() {
                            *x = StandardNormal.sample(rng);
                            norm_sq += *x * *x;
                        }
                        if norm_sq > 0.0 {
                            let scale = table.quantile(rng.random::<f64>()) / norm_sq.sqrt();
                            for x in row.iter_mut() {
                                *x *= scale;
                            }
                            break;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Draws `n` observations `X = theta + xi`: the same noise stream as
    /// [`sample_noise`](Self::sample_noise) plus a deterministic shift.
    pub fn sample_data(&self, theta: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: theta.len(),
            });
        }
        let mut out = self.sample_noise(n, rng)?;
        for row in out.data.chunks_exact_mut(self.dim) {
            for (x, &t) in row.iter_mut().zip(theta) {
                *x += t;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Potential, ProductLogCosh, RadialSmooth, RADIAL_DEFAULT_AMPLITUDE};
    use crate::rng::substream;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn product_sampler(alpha: f64, beta: f64, dim: usize) -> NoiseSampler {
        ProductLogCosh::new(dim, alpha, beta)
            .unwrap()
            .make_sampler()
            .unwrap()
    }

    #[test]
    fn table_is_strictly_increasing_and_inverts_cdf() {
        let v = |t: f64| 0.5 * t * t + crate::model::log_cosh(t);
        let f = |t: f64| (-v(t)).exp();
        let table = InverseCdfTable::build(&f, -9.0, 9.0).unwrap();
        let total = table.log_normalizer.exp();
        let nodes: Vec<(f64, f64)> = table.nodes().collect();
        for w in nodes.windows(2) {
            assert!(w[1].0 > w[0].0, "u not strictly increasing");
            assert!(w[1].1 > w[0].1, "q not strictly increasing");
        }
        // |CDF(q(u)) - u| on the grid and at grid midpoints
        for w in nodes.windows(2) {
            for &u in &[w[0].0, 0.5 * (w[0].0 + w[1].0)] {
                let q = table.quantile(u);
                let cdf = adaptive_simpson(&f, -9.0, q, 1e-13, 48).unwrap() / total;
                assert!(
                    (cdf - u).abs() <= 1e-8,
                    "inversion error {} at u={}",
                    (cdf - u).abs(),
                    u
                );
            }
        }
    }

    #[test]
    fn pure_gaussian_coordinate_through_table_passes_ks() {
        // alpha = 0 makes the tabulated coordinate law exactly standard normal
        let sampler = product_sampler(0.0, 1.0, 1);
        let n = 100_000;
        let mut rng = substream(2024, &[]);
        let draws = sampler.sample_noise(n, &mut rng).unwrap();
        let mut xs: Vec<f64> = draws.as_slice().to_vec();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut ks = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let c = normal.cdf(x);
            ks = ks.max((c - i as f64 / n as f64).abs());
            ks = ks.max(((i + 1) as f64 / n as f64 - c).abs());
        }
        let crit_1pct = 1.6276 / (n as f64).sqrt();
        assert!(ks < crit_1pct, "ks {} >= {}", ks, crit_1pct);
    }

    #[test]
    fn radial_directions_have_unit_norm() {
        let fam = RadialSmooth::new(3, RADIAL_DEFAULT_AMPLITUDE).unwrap();
        let sampler = fam.make_sampler().unwrap();
        let mut rng = substream(5, &[]);
        let draws = sampler.sample_noise(2000, &mut rng).unwrap();
        for row in draws.rows() {
            let norm: f64 = row.iter().map(|&x| x * x).sum::<f64>().sqrt();
            let dir_norm: f64 = row
                .iter()
                .map(|&x| (x / norm) * (x / norm))
                .sum::<f64>()
                .sqrt();
            assert!((dir_norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_family_mean_is_zero() {
        let sampler = product_sampler(1.0, 1.0, 2);
        let mut rng = substream(77, &[]);
        let n = 1_000_000;
        let draws = sampler.sample_noise(n, &mut rng).unwrap();
        let mean = draws.mean();
        let sd = ProductLogCosh::new(1, 1.0, 1.0)
            .unwrap()
            .noise_variance()
            .sqrt();
        let se = sd / (n as f64).sqrt();
        for &m in mean.iter() {
            assert!(m.abs() <= 3.0 * se, "mean {} vs se {}", m, se);
        }
    }

    #[test]
    fn product_noise_matches_quadrature_variance_and_independence() {
        let fam = ProductLogCosh::new(2, 1.0, 1.0).unwrap();
        let sampler = fam.make_sampler().unwrap();
        let mut rng = substream(99, &[]);
        let n = 200_000;
        let draws = sampler.sample_noise(n, &mut rng).unwrap();
        let (mut s00, mut s11, mut s01) = (0.0, 0.0, 0.0);
        for row in draws.rows() {
            s00 += row[0] * row[0];
            s11 += row[1] * row[1];
            s01 += row[0] * row[1];
        }
        let nf = n as f64;
        let var = fam.noise_variance();
        // se of the second moment of a near-Gaussian law: sd ~ var * sqrt 2
        let se = var * (2.0 / nf).sqrt();
        assert!((s00 / nf - var).abs() <= 3.0 * se);
        assert!((s11 / nf - var).abs() <= 3.0 * se);
        let corr = s01 / nf / var;
        assert!(corr.abs() <= 3.0 / nf.sqrt());
    }

    #[test]
    fn sampling_is_deterministic_and_shift_structured() {
        let sampler = product_sampler(1.0, 1.0, 3);
        let theta = [0.5, -1.5, 2.0];

        let a = sampler
            .sample_noise(64, &mut substream(11, &[7]))
            .unwrap();
        let b = sampler
            .sample_noise(64, &mut substream(11, &[7]))
            .unwrap();
        assert_eq!(a, b);

        // zero shift reproduces the noise stream
        let z = sampler
            .sample_data(&[0.0; 3], 64, &mut substream(11, &[7]))
            .unwrap();
        assert_eq!(a, z);

        // data(theta) == noise + theta, elementwise in the same order
        let d = sampler
            .sample_data(&theta, 64, &mut substream(11, &[7]))
            .unwrap();
        assert_eq!(d, a.shifted(&theta));
    }

    #[test]
    fn gaussian_data_mean_recovers_theta() {
        let sampler = NoiseSampler::exact_gaussian(2);
        let mut rng = substream(123, &[]);
        let n = 1_000_000;
        let data = sampler.sample_data(&[1.0, 2.0], n, &mut rng).unwrap();
        let mean = data.mean();
        let se = 1.0 / (n as f64).sqrt();
        assert!((mean[0] - 1.0).abs() <= 3.0 * se);
        assert!((mean[1] - 2.0).abs() <= 3.0 * se);
    }

    #[test]
    fn missing_table_is_reported() {
        let broken = NoiseSampler {
            dim: 1,
            method: SampleMethod::ProductInverseCdf,
            table: None,
        };
        let mut rng = substream(0, &[]);
        assert!(matches!(
            broken.sample_noise(4, &mut rng),
            Err(Error::TableNotBuilt)
        ));
    }
}
