//! Bootstrap chains and bias-reduced functional estimation.
//!
//! Write `(T g)(theta) = E_theta g(theta_hat)` for the bootstrap smoothing
//! operator of the MLE and `B = T - I`. The order-`k` estimator of `f(theta)`
//! is `f_k(theta_hat)` with `f_k = sum_{j<=k} (-1)^j B^j f`, whose bias is
//! `(-1)^k (B^{k+1} f)(theta)`: one extra order of smallness per unit of `k`.
//!
//! Both `f_k` and `B^k f` reduce to signed binomial combinations of `f`
//! along the bootstrap chain `theta_hat^{(0)}, theta_hat^{(1)}, ...`, which
//! this module simulates in two distributionally equal ways:
//!
//! * `nested`: refit the MLE on fresh data drawn at the previous state;
//! * `equivariant`: add i.i.d. MLEs of pure noise to the start point, valid
//!   because the MLE commutes with translations.
//!
//! Replicates are keyed by `(master, replicate, step)` substreams and
//! aggregated in replicate order, so estimates are reproducible and
//! independent of thread count.

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::functionals::FunctionalSpec;
use crate::mle::{fit_location, fit_mle, FitOptions};
use crate::model::{Potential, ScalarWithSe};
use crate::rng::{derive_key, domain, substream};
use crate::sampler::{Dataset, NoiseSampler};
use crate::{Error, Result};

/// Chain simulation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainMode {
    Nested,
    Equivariant,
}

/// Location estimator driving the chain: the MLE of a potential, or the
/// sample mean (used by the suboptimal comparison estimator).
#[derive(Clone, Copy)]
pub(crate) enum LocEngine<'a> {
    Mle(&'a dyn Potential),
    Mean,
}

/// One realized bootstrap chain `theta_hat^{(0)}, ..., theta_hat^{(k)}`.
#[derive(Debug, Clone)]
pub struct ChainPath {
    pub states: Vec<DVector<f64>>,
    pub mode: ChainMode,
    pub seed_key: u64,
}

/// Monte Carlo estimate of `f_k` at the fitted location.
#[derive(Debug, Clone)]
pub struct FkEstimate {
    pub value: f64,
    /// Standard error of the replicate sums; zero for the exact `k = 0` case.
    pub se: f64,
    /// Replicates retained in the average.
    pub replications: usize,
    pub k: usize,
    /// Estimates of `(B^j f)(theta_hat)` for `j = 0..=k`, from the same chains.
    pub per_order: Vec<f64>,
    pub mode: ChainMode,
    /// Replicates dropped because an inner MLE did not converge.
    pub dropped: usize,
    /// Set when more than 1% of replicates dropped.
    pub flagged_invalid: bool,
}

fn binomial(n: u64, k: u64) -> i64 {
    let k = k.min(n - k.min(n));
    let mut acc: i64 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul((n - i) as i64)
            .expect("binomial overflow")
            / (i as i64 + 1);
    }
    acc
}

const MAX_ORDER: usize = 60;

fn check_order(k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "bias-reduction order k = {k} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Weights of `f_k` along the chain: `(-1)^j binom(k+1, j+1)` for `j = 0..=k`.
///
/// They sum to one, so constants pass through unchanged.
pub fn binomial_weights_fk(k: usize) -> Vec<i64> {
    (0..=k)
        .map(|j| {
            let c = binomial(k as u64 + 1, j as u64 + 1);
            if j % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect()
}

/// Weights of the `k`-th order difference `B^k f`:
/// `(-1)^{k-j} binom(k, j)` for `j = 0..=k`. For `k >= 1` they sum to zero.
pub fn binomial_weights_bk(k: usize) -> Vec<i64> {
    (0..=k)
        .map(|j| {
            let c = binomial(k as u64, j as u64);
            if (k - j) % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect()
}

fn chain_fit_options() -> FitOptions {
    FitOptions::default()
}

/// Advances the chain one step, returning the next state.
fn chain_step(
    engine: LocEngine<'_>,
    sampler: &NoiseSampler,
    prev: &DVector<f64>,
    mode: ChainMode,
    scratch: &mut Dataset,
    rng: &mut ChaCha8Rng,
) -> Result<DVector<f64>> {
    sampler.sample_noise_into(scratch, rng)?;
    match mode {
        ChainMode::Equivariant => {
            let inc = locate(engine, scratch)?;
            Ok(prev + inc)
        }
        ChainMode::Nested => {
            let shifted = scratch.shifted(prev.as_slice());
            locate(engine, &shifted)
        }
    }
}

fn locate(engine: LocEngine<'_>, data: &Dataset) -> Result<DVector<f64>> {
    match engine {
        LocEngine::Mean => Ok(data.mean()),
        LocEngine::Mle(pot) => {
            let fit = fit_location(pot, data, &chain_fit_options())?;
            if !fit.converged {
                return Err(Error::MleFailure {
                    grad_norm: fit.grad_norm,
                    iterations: fit.iterations,
                });
            }
            Ok(fit.theta_hat)
        }
    }
}

/// Simulates one bootstrap chain of length `k + 1` started at `start`.
pub fn simulate_chain(
    pot: &dyn Potential,
    sampler: &NoiseSampler,
    n: usize,
    start: &DVector<f64>,
    k: usize,
    mode: ChainMode,
    rng: &mut ChaCha8Rng,
) -> Result<ChainPath> {
    check_order(k)?;
    if n == 0 {
        return Err(Error::InvalidParameter("chain needs n >= 1".into()));
    }
    let key = derive_key(rng);
    let mut states = Vec::with_capacity(k + 1);
    states.push(start.clone());
    let mut scratch = Dataset::zeros(pot.dim(), n);
    for step in 1..=k {
        let mut step_rng = substream(key, &[step as u64]);
        let next = chain_step(
            LocEngine::Mle(pot),
            sampler,
            &states[step - 1],
            mode,
            &mut scratch,
            &mut step_rng,
        )?;
        states.push(next);
    }
    Ok(ChainPath {
        states,
        mode,
        seed_key: key,
    })
}

/// Walks one chain and returns the per-order difference sums
/// `sum_i (-1)^{j-i} binom(j, i) f(theta_hat^{(i)})` for `j = 0..=k`.
#[allow(clippy::too_many_arguments)]
fn replicate_order_sums(
    engine: LocEngine<'_>,
    sampler: &NoiseSampler,
    n: usize,
    start: &DVector<f64>,
    functional: &FunctionalSpec,
    k: usize,
    mode: ChainMode,
    chain_key: u64,
    weights: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let mut scratch = Dataset::zeros(sampler.dim(), n);
    let mut fvals = Vec::with_capacity(k + 1);
    let mut state = start.clone();
    fvals.push(functional.value(state.as_slice()));
    for step in 1..=k {
        let mut step_rng = substream(chain_key, &[step as u64]);
        state = chain_step(engine, sampler, &state, mode, &mut scratch, &mut step_rng)?;
        fvals.push(functional.value(state.as_slice()));
    }
    Ok(weights
        .iter()
        .map(|w| w.iter().zip(&fvals).map(|(&wi, &fi)| wi * fi).sum())
        .collect())
}

struct ChainBatch {
    /// Per-order difference sums per retained replicate, replicate order.
    per_replicate: Vec<Vec<f64>>,
    dropped: usize,
}

/// Runs `replications` chains on substreams `(master, CHAIN, r)`.
///
/// Replicates whose inner MLE fails are dropped and counted; any other error
/// aborts. The retained list preserves replicate order, which keeps every
/// downstream reduction independent of the parallel schedule.
#[allow(clippy::too_many_arguments)]
fn run_chain_batch(
    engine: LocEngine<'_>,
    sampler: &NoiseSampler,
    n: usize,
    start: &DVector<f64>,
    functional: &FunctionalSpec,
    k: usize,
    replications: usize,
    mode: ChainMode,
    master: u64,
) -> Result<ChainBatch> {
    let weights: Vec<Vec<f64>> = (0..=k)
        .map(|j| {
            binomial_weights_bk(j)
                .into_iter()
                .map(|w| w as f64)
                .collect()
        })
        .collect();
    let results: Vec<Result<Vec<f64>>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut key_rng = substream(master, &[domain::CHAIN, r as u64]);
            let chain_key = derive_key(&mut key_rng);
            replicate_order_sums(
                engine, sampler, n, start, functional, k, mode, chain_key, &weights,
            )
        })
        .collect();
    let mut per_replicate = Vec::with_capacity(replications);
    let mut dropped = 0;
    for res in results {
        match res {
            Ok(sums) => per_replicate.push(sums),
            Err(Error::MleFailure { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(ChainBatch {
        per_replicate,
        dropped,
    })
}

fn mean_in_order(values: impl Iterator<Item = f64>, count: usize) -> f64 {
    let mut acc = 0.0;
    for v in values {
        acc += v;
    }
    acc / count as f64
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn estimate_fk_inner(
    engine: LocEngine<'_>,
    sampler: &NoiseSampler,
    data: &Dataset,
    functional: &FunctionalSpec,
    k: usize,
    replications: usize,
    mode: ChainMode,
    master: u64,
) -> Result<FkEstimate> {
    check_order(k)?;
    if replications == 0 {
        return Err(Error::InvalidParameter("need replications >= 1".into()));
    }
    let start = match engine {
        LocEngine::Mean => data.mean(),
        LocEngine::Mle(pot) => {
            let fit = fit_mle(pot, data, &FitOptions::default())?;
            if !fit.converged {
                return Err(Error::MleFailure {
                    grad_norm: fit.grad_norm,
                    iterations: fit.iterations,
                });
            }
            fit.theta_hat
        }
    };
    if k == 0 {
        let value = functional.value(start.as_slice());
        return Ok(FkEstimate {
            value,
            se: 0.0,
            replications: 0,
            k,
            per_order: vec![value],
            mode,
            dropped: 0,
            flagged_invalid: false,
        });
    }
    let batch = run_chain_batch(
        engine,
        sampler,
        data.n(),
        &start,
        functional,
        k,
        replications,
        mode,
        master,
    )?;
    let kept = batch.per_replicate.len();
    if kept == 0 {
        return Err(Error::AllReplicatesFailed(replications));
    }
    let per_order: Vec<f64> = (0..=k)
        .map(|j| mean_in_order(batch.per_replicate.iter().map(|sums| sums[j]), kept))
        .collect();
    let mut value = 0.0;
    for (j, &b) in per_order.iter().enumerate() {
        value += sign(j) * b;
    }
    let replicate_sums: Vec<f64> = batch
        .per_replicate
        .iter()
        .map(|sums| {
            let mut s = 0.0;
            for (j, &b) in sums.iter().enumerate() {
                s += sign(j) * b;
            }
            s
        })
        .collect();
    let se = standard_error(&replicate_sums);
    Ok(FkEstimate {
        value,
        se,
        replications: kept,
        k,
        per_order,
        mode,
        dropped: batch.dropped,
        flagged_invalid: (batch.dropped as f64) > 0.01 * replications as f64,
    })
}

#[inline]
fn sign(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (var / n as f64).sqrt()
}

/// Monte Carlo estimate of `f_k(theta_hat)` for the MLE fitted on `data`.
///
/// Fits the location once, runs `replications` independent chains started
/// there, and averages the weighted chain sums. `k = 0` short-circuits to
/// the exact plug-in `f(theta_hat)` with zero standard error.
#[allow(clippy::too_many_arguments)]
pub fn estimate_fk(
    pot: &dyn Potential,
    sampler: &NoiseSampler,
    data: &Dataset,
    functional: &FunctionalSpec,
    k: usize,
    replications: usize,
    mode: ChainMode,
    rng: &mut ChaCha8Rng,
) -> Result<FkEstimate> {
    let master = derive_key(rng);
    estimate_fk_inner(
        LocEngine::Mle(pot),
        sampler,
        data,
        functional,
        k,
        replications,
        mode,
        master,
    )
}

/// Monte Carlo estimate of `(B^k f)(start)`.
///
/// Chains are keyed exactly as in [`estimate_fk`], so calling both with RNGs
/// in the same state reuses identical chain realizations; the `per_order`
/// entries of [`estimate_fk`] then match these values bitwise. `k = 0`
/// degenerates to averaging `f(start)` itself.
#[allow(clippy::too_many_arguments)]
pub fn estimate_bk(
    pot: &dyn Potential,
    sampler: &NoiseSampler,
    start: &DVector<f64>,
    functional: &FunctionalSpec,
    k: usize,
    n: usize,
    replications: usize,
    mode: ChainMode,
    rng: &mut ChaCha8Rng,
) -> Result<ScalarWithSe> {
    check_order(k)?;
    if replications == 0 || n == 0 {
        return Err(Error::InvalidParameter(
            "need replications >= 1 and n >= 1".into(),
        ));
    }
    let master = derive_key(rng);
    let batch = run_chain_batch(
        LocEngine::Mle(pot),
        sampler,
        n,
        start,
        functional,
        k,
        replications,
        mode,
        master,
    )?;
    let kept = batch.per_replicate.len();
    if kept == 0 {
        return Err(Error::AllReplicatesFailed(replications));
    }
    let value = mean_in_order(batch.per_replicate.iter().map(|sums| sums[k]), kept);
    let order_k: Vec<f64> = batch.per_replicate.iter().map(|sums| sums[k]).collect();
    Ok(ScalarWithSe {
        value,
        se: standard_error(&order_k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{builtin_functional, FunctionalKind};
    use crate::model::Gaussian;
    use crate::rng::substream;

    fn gaussian_setup(d: usize) -> (Gaussian, NoiseSampler) {
        let pot = Gaussian::new(d).unwrap();
        let sampler = pot.make_sampler().unwrap();
        (pot, sampler)
    }

    #[test]
    fn weight_examples() {
        assert_eq!(binomial_weights_fk(0), vec![1]);
        assert_eq!(binomial_weights_fk(1), vec![2, -1]);
        assert_eq!(binomial_weights_fk(2), vec![3, -3, 1]);
        assert_eq!(binomial_weights_bk(1), vec![-1, 1]);
        assert_eq!(binomial_weights_bk(2), vec![1, -2, 1]);
        assert_eq!(binomial_weights_bk(3), vec![-1, 3, -3, 1]);
    }

    #[test]
    fn weights_telescoping_identities() {
        for k in 0..=20 {
            assert_eq!(binomial_weights_fk(k).iter().sum::<i64>(), 1, "fk k={k}");
            if k >= 1 {
                assert_eq!(binomial_weights_bk(k).iter().sum::<i64>(), 0, "bk k={k}");
            }
        }
    }

    #[test]
    fn chain_of_order_zero_is_the_start_point() {
        let (pot, sampler) = gaussian_setup(2);
        let start = DVector::from_vec(vec![0.4, -1.0]);
        for mode in [ChainMode::Nested, ChainMode::Equivariant] {
            let path = simulate_chain(
                &pot,
                &sampler,
                30,
                &start,
                0,
                mode,
                &mut substream(4, &[]),
            )
            .unwrap();
            assert_eq!(path.states.len(), 1);
            assert_eq!(path.states[0], start);
        }
    }

    #[test]
    fn gaussian_equivariant_chain_spread_matches_j_d_over_n() {
        let (pot, sampler) = gaussian_setup(2);
        let (d, n, k, reps) = (2usize, 50usize, 2usize, 10_000usize);
        let start = DVector::from_vec(vec![1.0, -1.0]);
        let mut sums = vec![0.0; k + 1];
        let mut sums_sq = vec![0.0; k + 1];
        for r in 0..reps {
            let path = simulate_chain(
                &pot,
                &sampler,
                n,
                &start,
                k,
                ChainMode::Equivariant,
                &mut substream(1000, &[r as u64]),
            )
            .unwrap();
            for (j, state) in path.states.iter().enumerate() {
                let sq = (state - &start).norm_squared();
                sums[j] += sq;
                sums_sq[j] += sq * sq;
            }
        }
        for j in 1..=k {
            let mean = sums[j] / reps as f64;
            let var = sums_sq[j] / reps as f64 - mean * mean;
            let se = (var / reps as f64).sqrt();
            let expect = j as f64 * d as f64 / n as f64;
            assert!(
                (mean - expect).abs() <= 3.0 * se,
                "j={j}: mean {mean} expect {expect} se {se}"
            );
        }
    }

    #[test]
    fn nested_and_equivariant_chains_agree_in_distribution() {
        let (pot, sampler) = gaussian_setup(2);
        let (n, k, reps) = (50usize, 2usize, 10_000usize);
        let start = DVector::from_vec(vec![0.5, 0.5]);
        let mut stats: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
        for (tag, mode) in [(10u64, ChainMode::Nested), (20u64, ChainMode::Equivariant)] {
            let mut sum: DVector<f64> = DVector::zeros(2);
            let mut sum_sq: DVector<f64> = DVector::zeros(2);
            for r in 0..reps {
                let path = simulate_chain(
                    &pot,
                    &sampler,
                    n,
                    &start,
                    k,
                    mode,
                    &mut substream(2000 + tag, &[r as u64]),
                )
                .unwrap();
                let last = &path.states[k];
                for i in 0..2 {
                    sum[i] += last[i];
                    sum_sq[i] += last[i] * last[i];
                }
            }
            let mean = &sum / reps as f64;
            let var = DVector::from_fn(2, |i, _| sum_sq[i] / reps as f64 - mean[i] * mean[i]);
            stats.push((mean, var));
        }
        let var_expect = k as f64 / n as f64;
        for i in 0..2 {
            let mean_se = (var_expect / reps as f64).sqrt();
            let var_se = var_expect * (2.0 / reps as f64).sqrt();
            let dm = (stats[0].0[i] - stats[1].0[i]).abs();
            let dv = (stats[0].1[i] - stats[1].1[i]).abs();
            assert!(dm <= 3.0 * (2.0f64).sqrt() * mean_se, "means differ: {dm}");
            assert!(dv <= 3.0 * (2.0f64).sqrt() * var_se, "vars differ: {dv}");
        }
    }

    #[test]
    fn plug_in_short_circuit() {
        let (pot, sampler) = gaussian_setup(3);
        let data = sampler
            .sample_data(&[0.1, 0.2, 0.3], 40, &mut substream(5, &[]))
            .unwrap();
        let f = builtin_functional(&FunctionalKind::Quadratic).unwrap();
        let est = estimate_fk(
            &pot,
            &sampler,
            &data,
            &f,
            0,
            200,
            ChainMode::Equivariant,
            &mut substream(6, &[]),
        )
        .unwrap();
        assert_eq!(est.value, f.value(data.mean().as_slice()));
        assert_eq!(est.se, 0.0);
        assert_eq!(est.per_order, vec![est.value]);
    }

    #[test]
    fn constant_functional_has_exact_zero_differences() {
        let (pot, sampler) = gaussian_setup(2);
        let f = FunctionalSpec::custom("const", |_| 2.5, |_, out| out.fill(0.0), f64::INFINITY, 2.5);
        let start = DVector::from_vec(vec![0.3, 0.3]);
        for k in 1..=3 {
            let est = estimate_bk(
                &pot,
                &sampler,
                &start,
                &f,
                k,
                25,
                50,
                ChainMode::Equivariant,
                &mut substream(7, &[k as u64]),
            )
            .unwrap();
            assert_eq!(est.value, 0.0);
            assert_eq!(est.se, 0.0);
        }
    }

    #[test]
    fn gaussian_sin_linear_first_difference_matches_smoothing_oracle() {
        // T f = exp(-a/2) f for f = sin<w, .>, a = ||w||^2 / n
        let (pot, sampler) = gaussian_setup(2);
        let w = vec![2.0, 0.0];
        let f = builtin_functional(&FunctionalKind::SinLinear { w: w.clone(), s: None }).unwrap();
        let theta = DVector::from_vec(vec![0.5, 0.0]);
        let n = 100;
        let a = 4.0 / n as f64;
        let est = estimate_bk(
            &pot,
            &sampler,
            &theta,
            &f,
            1,
            n,
            20_000,
            ChainMode::Equivariant,
            &mut substream(8, &[]),
        )
        .unwrap();
        let oracle = ((-a / 2.0).exp() - 1.0) * (w[0] * theta[0]).sin();
        assert!(
            (est.value - oracle).abs() <= 3.0 * est.se,
            "value {} oracle {} se {}",
            est.value,
            oracle,
            est.se
        );
    }

    #[test]
    fn gaussian_quadratic_second_difference_vanishes() {
        // B f is constant d/n for the quadratic, so B^2 f = 0
        let (pot, sampler) = gaussian_setup(3);
        let f = builtin_functional(&FunctionalKind::Quadratic).unwrap();
        let theta = DVector::from_vec(vec![1.0, 0.0, -1.0]);
        let est = estimate_bk(
            &pot,
            &sampler,
            &theta,
            &f,
            2,
            50,
            20_000,
            ChainMode::Equivariant,
            &mut substream(9, &[]),
        )
        .unwrap();
        assert!(est.value.abs() <= 3.0 * est.se, "B^2 quad = {} se {}", est.value, est.se);
    }

    #[test]
    fn linear_functional_symmetric_noise_differences_vanish() {
        let (pot, sampler) = gaussian_setup(2);
        let f = builtin_functional(&FunctionalKind::Linear { w: vec![1.0, 2.0] }).unwrap();
        let theta = DVector::from_vec(vec![0.2, -0.2]);
        let est = estimate_bk(
            &pot,
            &sampler,
            &theta,
            &f,
            1,
            40,
            20_000,
            ChainMode::Equivariant,
            &mut substream(10, &[]),
        )
        .unwrap();
        assert!(est.value.abs() <= 3.0 * est.se);
    }

    #[test]
    fn representation_consistency_is_bitwise() {
        let (pot, sampler) = gaussian_setup(2);
        let f = builtin_functional(&FunctionalKind::SinLinear {
            w: vec![1.0, -1.0],
            s: None,
        })
        .unwrap();
        let data = sampler
            .sample_data(&[0.6, 0.1], 30, &mut substream(11, &[]))
            .unwrap();
        for k in 1..=3usize {
            let est = estimate_fk(
                &pot,
                &sampler,
                &data,
                &f,
                k,
                64,
                ChainMode::Equivariant,
                &mut substream(12, &[k as u64]),
            )
            .unwrap();
            let theta_hat = fit_mle(&pot, &data, &FitOptions::default())
                .unwrap()
                .theta_hat;
            let mut signed_sum = 0.0;
            for j in 0..=k {
                let bk = estimate_bk(
                    &pot,
                    &sampler,
                    &theta_hat,
                    &f,
                    j,
                    data.n(),
                    64,
                    ChainMode::Equivariant,
                    &mut substream(12, &[k as u64]),
                )
                .unwrap();
                assert_eq!(bk.value, est.per_order[j], "per-order j={j} differs");
                signed_sum += sign(j) * bk.value;
            }
            assert_eq!(signed_sum, est.value, "k={k}");
        }
    }

    #[test]
    fn estimator_is_equivariant() {
        let pot = crate::model::ProductLogCosh::new(2, 1.0, 1.0).unwrap();
        let sampler = pot.make_sampler().unwrap();
        let f = builtin_functional(&FunctionalKind::SinLinear {
            w: vec![0.8, 1.1],
            s: None,
        })
        .unwrap();
        let data = sampler
            .sample_data(&[0.0, 0.4], 50, &mut substream(13, &[]))
            .unwrap();
        let u = [0.9, -1.7];
        let est_shifted_data = estimate_fk(
            &pot,
            &sampler,
            &data.shifted(&u),
            &f,
            2,
            100,
            ChainMode::Equivariant,
            &mut substream(14, &[]),
        )
        .unwrap();
        let est_shifted_f = estimate_fk(
            &pot,
            &sampler,
            &data,
            &f.shift(&u),
            2,
            100,
            ChainMode::Equivariant,
            &mut substream(14, &[]),
        )
        .unwrap();
        assert!(
            (est_shifted_data.value - est_shifted_f.value).abs() <= 1e-8,
            "{} vs {}",
            est_shifted_data.value,
            est_shifted_f.value
        );
    }

    #[test]
    fn order_cap_is_enforced() {
        let (pot, sampler) = gaussian_setup(1);
        let start = DVector::zeros(1);
        let err = simulate_chain(
            &pot,
            &sampler,
            10,
            &start,
            MAX_ORDER + 1,
            ChainMode::Equivariant,
            &mut substream(0, &[]),
        );
        assert!(err.is_err());
    }
}
