//! Experiment harness for risk, efficiency and normality claims.
//!
//! `run_risk_experiment` sweeps a `(n, d)` grid, generating `outer_reps`
//! independent datasets per cell, applying the configured estimators to each
//! and reporting bias, variance, RMSE, efficiency `sqrt(n) * rmse / sigma_f`
//! and the distance of the normalized errors to a standard normal. The
//! benchmark `sigma_f` comes from the family's quadrature-exact Fisher
//! information, not from a Monte Carlo estimate.
//!
//! Everything is keyed off the config seed: datasets by
//! `(seed, cell, replicate)`, chains by `(seed, cell, replicate, estimator, k)`.
//! Reports are assembled in deterministic cell/estimator/k order, so a config
//! reproduces its CSV byte for byte on any worker count.

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::biasreduce::{estimate_fk_inner, ChainMode, FkEstimate, LocEngine};
use crate::functionals::{builtin_functional, FunctionalKind, FunctionalSpec};
use crate::mle::{fit_mle, FitOptions};
use crate::model::{sigma_f_from_matrix, FamilySpec, Potential};
use crate::rng::{derive_key, domain, substream};
use crate::sampler::{Dataset, NoiseSampler};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

/// Estimators the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `f(theta_hat)` for the MLE.
    PluginMle,
    /// `f_k(theta_hat)` for the MLE.
    FkMle,
    /// `f_k` built on the sample mean.
    FkMean,
    /// `f(x_bar)`.
    PluginMean,
}

impl EstimatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::PluginMle => "plugin_mle",
            EstimatorKind::FkMle => "fk_mle",
            EstimatorKind::FkMean => "fk_mean",
            EstimatorKind::PluginMean => "plugin_mean",
        }
    }
    fn tag(&self) -> u64 {
        match self {
            EstimatorKind::PluginMle => 0,
            EstimatorKind::FkMle => 1,
            EstimatorKind::FkMean => 2,
            EstimatorKind::PluginMean => 3,
        }
    }
    fn uses_k(&self) -> bool {
        matches!(self, EstimatorKind::FkMle | EstimatorKind::FkMean)
    }
}

/// True location used to generate the data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSpec {
    Point(Vec<f64>),
    RandomSphere { radius: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct GridCell {
    pub n: usize,
    pub d: usize,
}

pub fn default_outer_reps() -> usize {
    2000
}
pub fn default_replications() -> usize {
    200
}
fn default_mode() -> ChainMode {
    ChainMode::Equivariant
}

/// Full experiment description; the `dim` of the family spec is overridden
/// by each grid cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    pub grid: Vec<GridCell>,
    pub functional: FunctionalKind,
    pub k_values: Vec<usize>,
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_outer_reps")]
    pub outer_reps: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub theta_truth: ThetaSpec,
    #[serde(default = "default_mode")]
    pub mode: ChainMode,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.grid.is_empty() {
            problems.push("grid must be nonempty".to_string());
        }
        for cell in &self.grid {
            if cell.n == 0 || cell.d == 0 {
                problems.push(format!("grid cell ({}, {}) must be positive", cell.n, cell.d));
            }
        }
        if self.estimators.is_empty() {
            problems.push("estimators must be nonempty".to_string());
        }
        if self.outer_reps == 0 {
            problems.push("outer_reps must be positive".to_string());
        }
        if self.replications == 0 {
            problems.push("replications must be positive".to_string());
        }
        if self.k_values.is_empty() && self.estimators.iter().any(|e| e.uses_k()) {
            problems.push("k_values must be nonempty for fk estimators".to_string());
        }
        if let ThetaSpec::RandomSphere { radius } = &self.theta_truth {
            if !(*radius >= 0.0 && radius.is_finite()) {
                problems.push("random_sphere radius must be finite and nonnegative".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// One grid-cell / estimator / order result.
#[derive(Debug, Clone, Serialize)]
pub struct RiskRow {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub estimator: &'static str,
    pub functional: String,
    pub bias: f64,
    pub bias_se: f64,
    pub variance: f64,
    pub rmse: f64,
    pub sigma_f: f64,
    pub efficiency: f64,
    pub w2: f64,
    pub ks: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Column header of the CSV emitted by the experiment subcommand.
pub const CSV_HEADER: &str =
    "n,d,k,estimator,functional,bias,bias_se,variance,rmse,sigma_f,efficiency,w2,ks,reps,seed";

#[derive(Debug, Clone, Serialize)]
pub struct RiskReport {
    pub rows: Vec<RiskRow>,
    /// Cells that failed, with the error text; their rows carry NaN stats.
    pub failures: Vec<String>,
}

impl RiskReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.n,
                r.d,
                r.k,
                r.estimator,
                r.functional,
                r.bias,
                r.bias_se,
                r.variance,
                r.rmse,
                r.sigma_f,
                r.efficiency,
                r.w2,
                r.ks,
                r.reps,
                r.seed
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Risk experiment
// ---------------------------------------------------------------------------

fn resolve_theta(spec: &ThetaSpec, d: usize, seed: u64, cell_idx: u64) -> Result<DVector<f64>> {
    match spec {
        ThetaSpec::Point(p) => {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
            Ok(DVector::from_column_slice(p))
        }
        ThetaSpec::RandomSphere { radius } => {
            let mut rng = substream(seed, &[domain::THETA, cell_idx]);
            loop {
                let v = DVector::from_fn(d, |_, _| {
                    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                });
                let norm = v.norm();
                if norm > 0.0 {
                    return Ok(v * (*radius / norm));
                }
            }
        }
    }
}

fn apply_estimator(
    estimator: EstimatorKind,
    k: usize,
    pot: &dyn Potential,
    sampler: &NoiseSampler,
    data: &Dataset,
    functional: &FunctionalSpec,
    replications: usize,
    mode: ChainMode,
    chain_master: u64,
) -> Result<f64> {
    match estimator {
        EstimatorKind::PluginMle => {
            let fit = fit_mle(pot, data, &FitOptions::default())?;
            if !fit.converged {
                return Err(Error::MleFailure {
                    grad_norm: fit.grad_norm,
                    iterations: fit.iterations,
                });
            }
            Ok(functional.value(fit.theta_hat.as_slice()))
        }
        EstimatorKind::PluginMean => Ok(functional.value(data.mean().as_slice())),
        EstimatorKind::FkMle => Ok(estimate_fk_inner(
            LocEngine::Mle(pot),
            sampler,
            data,
            functional,
            k,
            replications,
            mode,
            chain_master,
        )?
        .value),
        EstimatorKind::FkMean => Ok(estimate_fk_inner(
            LocEngine::Mean,
            sampler,
            data,
            functional,
            k,
            replications,
            mode,
            chain_master,
        )?
        .value),
    }
}

/// Runs the configured grid and assembles the risk report.
pub fn run_risk_experiment(config: &ExperimentConfig) -> Result<RiskReport> {
    config.validate()?;
    let functional = builtin_functional(&config.functional)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();

    for (cell_idx, cell) in config.grid.iter().enumerate() {
        let combos: Vec<(EstimatorKind, usize)> = config
            .estimators
            .iter()
            .flat_map(|&e| {
                if e.uses_k() {
                    config.k_values.iter().map(|&k| (e, k)).collect::<Vec<_>>()
                } else {
                    vec![(e, 0)]
                }
            })
            .collect();

        match run_cell(config, &functional, cell, cell_idx as u64, &combos) {
            Ok(mut cell_rows) => rows.append(&mut cell_rows),
            Err(e) => {
                failures.push(format!("cell (n={}, d={}): {}", cell.n, cell.d, e));
                for &(estimator, k) in &combos {
                    rows.push(RiskRow {
                        n: cell.n,
                        d: cell.d,
                        k,
                        estimator: estimator.label(),
                        functional: functional.name().to_string(),
                        bias: f64::NAN,
                        bias_se: f64::NAN,
                        variance: f64::NAN,
                        rmse: f64::NAN,
                        sigma_f: f64::NAN,
                        efficiency: f64::NAN,
                        w2: f64::NAN,
                        ks: f64::NAN,
                        reps: 0,
                        seed: config.seed,
                    });
                }
            }
        }
    }
    Ok(RiskReport { rows, failures })
}

fn run_cell(
    config: &ExperimentConfig,
    functional: &FunctionalSpec,
    cell: &GridCell,
    cell_idx: u64,
    combos: &[(EstimatorKind, usize)],
) -> Result<Vec<RiskRow>> {
    let pot = config.family.with_dim(cell.d).build()?;
    let sampler = pot.make_sampler().ok_or(Error::UnsupportedSampler)?;
    let theta = resolve_theta(&config.theta_truth, cell.d, config.seed, cell_idx)?;
    let f_true = functional.value(theta.as_slice());
    let sigma = sigma_f_from_matrix(
        &pot.exact_fisher().ok_or(Error::UnsupportedSampler)?,
        &functional.gradient(theta.as_slice()),
    )?;

    let estimates: Vec<Result<Vec<f64>>> = (0..config.outer_reps)
        .into_par_iter()
        .map(|rep| {
            let mut data_rng =
                substream(config.seed, &[domain::OUTER_DATA, cell_idx, rep as u64]);
            let data = sampler.sample_data(theta.as_slice(), cell.n, &mut data_rng)?;
            combos
                .iter()
                .map(|&(estimator, k)| {
                    let chain_master = derive_key(&mut substream(
                        config.seed,
                        &[
                            domain::CHAIN,
                            cell_idx,
                            rep as u64,
                            estimator.tag(),
                            k as u64,
                        ],
                    ));
                    apply_estimator(
                        estimator,
                        k,
                        pot.as_ref(),
                        &sampler,
                        &data,
                        functional,
                        config.replications,
                        config.mode,
                        chain_master,
                    )
                })
                .collect()
        })
        .collect();

    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(config.outer_reps); combos.len()];
    for rep in estimates {
        let vals = rep?;
        for (col, v) in columns.iter_mut().zip(vals) {
            col.push(v);
        }
    }

    let mut rows = Vec::with_capacity(combos.len());
    for (&(estimator, k), col) in combos.iter().zip(&columns) {
        let reps = col.len();
        let nf = reps as f64;
        let mean = col.iter().sum::<f64>() / nf;
        let bias = mean - f_true;
        let variance = if reps > 1 {
            col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0)
        } else {
            0.0
        };
        let bias_se = (variance / nf).sqrt();
        let rmse = (bias * bias + variance).sqrt();
        let efficiency = (cell.n as f64).sqrt() * rmse / sigma;
        let errors: Vec<f64> = col.iter().map(|v| v - f_true).collect();
        let (w2, ks) = match normality_diagnostic(&errors, sigma / (cell.n as f64).sqrt()) {
            Ok(stats) => (stats.w2, stats.ks),
            Err(_) => (f64::NAN, f64::NAN),
        };
        rows.push(RiskRow {
            n: cell.n,
            d: cell.d,
            k,
            estimator: estimator.label(),
            functional: functional.name().to_string(),
            bias,
            bias_se,
            variance,
            rmse,
            sigma_f: sigma,
            efficiency,
            w2,
            ks,
            reps,
            seed: config.seed,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Normality diagnostic
// ---------------------------------------------------------------------------

/// Distance of an error sample to the standard normal law.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormalityStats {
    /// Quantile-coupling Wasserstein-2 distance of `errors / sigma` to `N(0,1)`.
    pub w2: f64,
    /// Kolmogorov-Smirnov statistic of the same sample.
    pub ks: f64,
}

/// Compares `errors / sigma` with the standard normal.
///
/// `w2` is the root mean square difference between the sorted sample and the
/// normal quantiles at levels `(i - 1/2) / N`; `ks` is the sup CDF gap.
pub fn normality_diagnostic(errors: &[f64], sigma: f64) -> Result<NormalityStats> {
    if errors.len() < 100 {
        return Err(Error::InvalidParameter(
            "normality diagnostic needs >= 100 errors".into(),
        ));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter("sigma must be positive".into()));
    }
    let first = errors[0];
    if errors.iter().all(|&e| e == first) {
        return Err(Error::DegenerateSample);
    }
    let mut z: Vec<f64> = errors.iter().map(|&e| e / sigma).collect();
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = z.len();
    let nf = n as f64;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut sq_sum = 0.0;
    let mut ks = 0.0f64;
    for (i, &zi) in z.iter().enumerate() {
        let q = normal.inverse_cdf((i as f64 + 0.5) / nf);
        sq_sum += (zi - q) * (zi - q);
        let c = normal.cdf(zi);
        ks = ks.max((c - i as f64 / nf).abs());
        ks = ks.max(((i as f64 + 1.0) / nf - c).abs());
    }
    Ok(NormalityStats {
        w2: (sq_sum / nf).sqrt(),
        ks,
    })
}

// ---------------------------------------------------------------------------
// MLE concentration
// ---------------------------------------------------------------------------

/// Empirical law of the scaled MLE error `sqrt(n/d) ||theta_hat - theta||`.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    /// `(level, empirical quantile)` at levels 0.5, 0.9, 0.99.
    pub quantiles: Vec<(f64, f64)>,
    /// Mean of `(n/d) ||theta_hat - theta||^2` with its standard error.
    pub mean_scaled_sq: f64,
    pub mean_scaled_sq_se: f64,
    /// Raised when the 0.99 quantile exceeds `10 sqrt(M) / m`.
    pub flag: bool,
    pub reps: usize,
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Refits the MLE on `reps` fresh datasets and summarizes the error law.
pub fn concentration_diagnostic(
    pot: &dyn Potential,
    sampler: &NoiseSampler,
    theta: &DVector<f64>,
    n: usize,
    reps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ConcentrationReport> {
    if reps < 100 {
        return Err(Error::InvalidParameter(
            "concentration diagnostic needs reps >= 100".into(),
        ));
    }
    let master = derive_key(rng);
    let d = pot.dim();
    let scale = (n as f64 / d as f64).sqrt();
    let errors: Vec<Result<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(master, &[domain::CONCENTRATION, r as u64]);
            let data = sampler.sample_data(theta.as_slice(), n, &mut rng)?;
            let fit = fit_mle(pot, &data, &FitOptions::default())?;
            if !fit.converged {
                return Err(Error::MleFailure {
                    grad_norm: fit.grad_norm,
                    iterations: fit.iterations,
                });
            }
            Ok(scale * (&fit.theta_hat - theta).norm())
        })
        .collect();
    let mut scaled: Vec<f64> = Vec::with_capacity(reps);
    for e in errors {
        scaled.push(e?);
    }
    let nf = reps as f64;
    let mean_sq = scaled.iter().map(|&s| s * s).sum::<f64>() / nf;
    let var_sq = scaled
        .iter()
        .map(|&s| (s * s - mean_sq) * (s * s - mean_sq))
        .sum::<f64>()
        / (nf - 1.0);
    let mut sorted = scaled;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantiles: Vec<(f64, f64)> = [0.5, 0.9, 0.99]
        .iter()
        .map(|&p| (p, quantile_sorted(&sorted, p)))
        .collect();
    let threshold = 10.0 * pot.sup_hess_norm().sqrt() / pot.fisher_floor();
    Ok(ConcentrationReport {
        flag: quantiles[2].1 > threshold,
        quantiles,
        mean_scaled_sq: mean_sq,
        mean_scaled_sq_se: (var_sq / nf).sqrt(),
        reps,
    })
}

// ---------------------------------------------------------------------------
// Mean-based comparison estimator
// ---------------------------------------------------------------------------

/// Bias-reduced estimator built on the sample mean instead of the MLE.
///
/// Same chain construction as [`estimate_fk`](crate::biasreduce::estimate_fk)
/// with every location fit replaced by the mean; its limit variance is
/// `<Sigma_xi f', f'>`, at least as large as `sigma_f^2`.
pub fn mean_based_estimator(
    data: &Dataset,
    functional: &FunctionalSpec,
    k: usize,
    replications: usize,
    sampler: &NoiseSampler,
    rng: &mut ChaCha8Rng,
) -> Result<FkEstimate> {
    let master = derive_key(rng);
    estimate_fk_inner(
        LocEngine::Mean,
        sampler,
        data,
        functional,
        k,
        replications,
        ChainMode::Equivariant,
        master,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biasreduce::estimate_fk;
    use crate::model::{Gaussian, ProductLogCosh};
    use crate::rng::substream;

    #[test]
    fn normality_on_exact_normals() {
        let n = 10_000;
        let sigma = 0.35;
        let mut rng = substream(51, &[]);
        let errors: Vec<f64> = (0..n)
            .map(|_| {
                sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            })
            .collect();
        let stats = normality_diagnostic(&errors, sigma).unwrap();
        assert!(stats.w2 <= 0.05, "w2 = {}", stats.w2);
        // DKW bound at the 1% level
        let dkw = ((2.0f64 / 0.01).ln() / (2.0 * n as f64)).sqrt();
        assert!(stats.ks <= dkw, "ks = {} dkw = {}", stats.ks, dkw);
    }

    #[test]
    fn normality_rejects_degenerate_input() {
        let errors = vec![0.7; 200];
        assert!(matches!(
            normality_diagnostic(&errors, 1.0),
            Err(Error::DegenerateSample)
        ));
    }

    #[test]
    fn gaussian_concentration_matches_chi_square_oracle() {
        let pot = Gaussian::new(10).unwrap();
        let sampler = pot.make_sampler().unwrap();
        let theta = DVector::from_element(10, 0.3);
        let mut rng = substream(52, &[]);
        let report =
            concentration_diagnostic(&pot, &sampler, &theta, 1000, 600, &mut rng).unwrap();
        // (n/d) ||theta_hat - theta||^2 ~ chi^2_d / d, mean 1
        assert!(
            (report.mean_scaled_sq - 1.0).abs() <= 3.0 * report.mean_scaled_sq_se,
            "mean {} se {}",
            report.mean_scaled_sq,
            report.mean_scaled_sq_se
        );
        // median of sqrt(chi^2_10 / 10) is ~0.9665
        let median = report.quantiles[0].1;
        assert!((0.9..=1.0).contains(&median), "median {}", median);
        assert!(report.quantiles[0].1 <= report.quantiles[1].1);
        assert!(report.quantiles[1].1 <= report.quantiles[2].1);
        assert!(!report.flag);
    }

    #[test]
    fn mean_based_and_mle_based_coincide_for_gaussian() {
        let pot = Gaussian::new(3).unwrap();
        let sampler = pot.make_sampler().unwrap();
        let data = sampler
            .sample_data(&[0.5, 0.0, -0.5], 60, &mut substream(53, &[]))
            .unwrap();
        let f = builtin_functional(&FunctionalKind::Quadratic).unwrap();
        let a = estimate_fk(
            &pot,
            &sampler,
            &data,
            &f,
            1,
            150,
            ChainMode::Equivariant,
            &mut substream(54, &[]),
        )
        .unwrap();
        let b = mean_based_estimator(&data, &f, 1, 150, &sampler, &mut substream(54, &[])).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.se, b.se);
    }

    #[test]
    fn mean_based_plug_in_is_exact() {
        let pot = ProductLogCosh::new(2, 1.0, 1.0).unwrap();
        let sampler = pot.make_sampler().unwrap();
        let data = sampler
            .sample_data(&[1.0, -1.0], 40, &mut substream(55, &[]))
            .unwrap();
        let f = builtin_functional(&FunctionalKind::Quadratic).unwrap();
        let est = mean_based_estimator(&data, &f, 0, 10, &sampler, &mut substream(56, &[])).unwrap();
        assert_eq!(est.value, f.value(data.mean().as_slice()));
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            family: FamilySpec::Gaussian { dim: 2 },
            grid: vec![GridCell { n: 50, d: 2 }],
            functional: FunctionalKind::Quadratic,
            k_values: vec![1],
            estimators: vec![EstimatorKind::PluginMle, EstimatorKind::FkMle],
            outer_reps: 150,
            replications: 40,
            theta_truth: ThetaSpec::Point(vec![0.6, -0.8]),
            mode: ChainMode::Equivariant,
            seed: 99,
        }
    }

    #[test]
    fn risk_experiment_exact_gaussian_quadratic_bias() {
        let report = run_risk_experiment(&small_config()).unwrap();
        assert!(report.failures.is_empty());
        assert_eq!(report.rows.len(), 2);
        let plugin = &report.rows[0];
        let fk = &report.rows[1];
        // plug-in bias is exactly d/n for the squared norm
        let oracle = 2.0 / 50.0;
        assert!(
            (plugin.bias - oracle).abs() <= 3.0 * plugin.bias_se,
            "plugin bias {} oracle {}",
            plugin.bias,
            oracle
        );
        assert!(fk.bias.abs() <= 3.0 * fk.bias_se, "fk bias {}", fk.bias);
        for row in &report.rows {
            let recomposed = (row.bias * row.bias + row.variance).sqrt();
            assert!((row.rmse - recomposed).abs() <= 1e-10 * row.rmse.max(1.0));
            assert!(row.efficiency > 0.0);
        }
    }

    #[test]
    fn risk_experiment_is_deterministic() {
        let a = run_risk_experiment(&small_config()).unwrap().to_csv();
        let b = run_risk_experiment(&small_config()).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with(CSV_HEADER));
    }
}
