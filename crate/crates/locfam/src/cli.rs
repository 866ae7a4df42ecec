//! Config parsing and subcommand dispatch.
//!
//! A run is described by a single JSON document whose `subcommand` tag picks
//! the operation; scalar flags (`--seed`, `--out`, `--format`) override the
//! corresponding config fields. Unknown fields are rejected. Every stochastic
//! subcommand requires a seed; given one, outputs are byte-identical across
//! invocations and worker counts.
//!
//! Output formats: `jsonl` (a metadata record with the resolved config,
//! then one record per result) for every subcommand; `csv` for `experiment`
//! (the exact risk-report header, then one row per cell and estimator, with
//! the resolved config echoed to a `.meta.json` sidecar when writing to a
//! file). Files are written atomically via a temp file in the target
//! directory followed by a rename.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::biasreduce::{estimate_fk, ChainMode};
use crate::diagnostics::{
    concentration_diagnostic, default_outer_reps, default_replications, run_risk_experiment,
    EstimatorKind, ExperimentConfig, GridCell, ThetaSpec,
};
use crate::functionals::{builtin_functional, FunctionalKind};
use crate::lowerbound::{
    global_minimax_rate, local_minimax_bound, prior_fisher_info, van_trees_functional,
    van_trees_theta, BoundReport, Prior1D,
};
use crate::mle::{fit_mle, FitOptions};
use crate::model::{check_derivatives, fisher_information, FamilySpec, FisherMethod};
use crate::rng::substream;
use crate::sampler::Dataset;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    100
}
fn default_fisher_samples() -> usize {
    100_000
}
fn default_diag_reps() -> usize {
    1000
}
fn default_probes() -> usize {
    100
}
fn default_mode() -> ChainMode {
    ChainMode::Equivariant
}

/// Named priors available from configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorName {
    CosCubed,
}

impl PriorName {
    fn build(&self) -> Prior1D {
        match self {
            PriorName::CosCubed => Prior1D::cos_cubed(),
        }
    }
}

/// Lower-bound formulas available from configs. The functional bound only
/// exposes a linear modulus `omega(r) = modulus_slope * r`; other moduli are
/// available through the library API.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "formula", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundFormula {
    PriorFisherInfo {
        prior: PriorName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
    VanTreesTheta {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fisher: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        identity_dim: Option<usize>,
        j_pi: f64,
        delta: f64,
        n: usize,
    },
    VanTreesFunctional {
        sigma_inv_grad_norm: f64,
        inv_grad_norm: f64,
        j_pi: f64,
        delta: f64,
        n: usize,
        modulus_slope: f64,
        prior: PriorName,
    },
    LocalMinimax {
        m: f64,
        c: f64,
        cs_over_sigma: f64,
        rho: f64,
        n: usize,
    },
    GlobalMinimaxRate {
        n: usize,
        d: usize,
        s: f64,
    },
}

/// Parsed run configuration; one variant per subcommand.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "subcommand", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunConfig {
    Fit {
        family: FamilySpec,
        data: PathBuf,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<OutputFormat>,
    },
    Fisher {
        family: FamilySpec,
        method: FisherMethod,
        #[serde(default = "default_fisher_samples")]
        samples: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<OutputFormat>,
    },
    Estimate {
        family: FamilySpec,
        functional: FunctionalKind,
        data: PathBuf,
        k: usize,
        #[serde(default = "default_replications")]
        replications: usize,
        #[serde(default = "default_mode")]
        mode: ChainMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<OutputFormat>,
    },
    Experiment {
        family: FamilySpec,
        grid: Vec<GridCell>,
        functional: FunctionalKind,
        k_values: Vec<usize>,
        estimators: Vec<EstimatorKind>,
        #[serde(default = "default_outer_reps")]
        outer_reps: usize,
        #[serde(default = "default_replications")]
        replications: usize,
        theta_truth: ThetaSpec,
        #[serde(default = "default_mode")]
        mode: ChainMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<OutputFormat>,
    },
    Lowerbound {
        bound: BoundFormula,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<OutputFormat>,
    },
    Diagnose {
        family: FamilySpec,
        n: usize,
        #[serde(default = "default_diag_reps")]
        reps: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<Vec<f64>>,
        #[serde(default = "default_probes")]
        probes: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        out: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<OutputFormat>,
    },
}

impl RunConfig {
    pub fn subcommand_name(&self) -> &'static str {
        match self {
            RunConfig::Fit { .. } => "fit",
            RunConfig::Fisher { .. } => "fisher",
            RunConfig::Estimate { .. } => "estimate",
            RunConfig::Experiment { .. } => "experiment",
            RunConfig::Lowerbound { .. } => "lowerbound",
            RunConfig::Diagnose { .. } => "diagnose",
        }
    }

    fn seed_slot(&mut self) -> &mut Option<u64> {
        match self {
            RunConfig::Fit { seed, .. }
            | RunConfig::Fisher { seed, .. }
            | RunConfig::Estimate { seed, .. }
            | RunConfig::Experiment { seed, .. }
            | RunConfig::Lowerbound { seed, .. }
            | RunConfig::Diagnose { seed, .. } => seed,
        }
    }

    fn out_slot(&mut self) -> &mut Option<PathBuf> {
        match self {
            RunConfig::Fit { out, .. }
            | RunConfig::Fisher { out, .. }
            | RunConfig::Estimate { out, .. }
            | RunConfig::Experiment { out, .. }
            | RunConfig::Lowerbound { out, .. }
            | RunConfig::Diagnose { out, .. } => out,
        }
    }

    fn format_slot(&mut self) -> &mut Option<OutputFormat> {
        match self {
            RunConfig::Fit { format, .. }
            | RunConfig::Fisher { format, .. }
            | RunConfig::Estimate { format, .. }
            | RunConfig::Experiment { format, .. }
            | RunConfig::Lowerbound { format, .. }
            | RunConfig::Diagnose { format, .. } => format,
        }
    }

    pub fn override_seed(&mut self, seed: u64) {
        *self.seed_slot() = Some(seed);
    }
    pub fn override_out(&mut self, out: PathBuf) {
        *self.out_slot() = Some(out);
    }
    pub fn override_format(&mut self, format: OutputFormat) {
        *self.format_slot() = Some(format);
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            RunConfig::Fit { seed, .. }
            | RunConfig::Fisher { seed, .. }
            | RunConfig::Estimate { seed, .. }
            | RunConfig::Experiment { seed, .. }
            | RunConfig::Lowerbound { seed, .. }
            | RunConfig::Diagnose { seed, .. } => *seed,
        }
    }

    pub fn out(&self) -> Option<&PathBuf> {
        match self {
            RunConfig::Fit { out, .. }
            | RunConfig::Fisher { out, .. }
            | RunConfig::Estimate { out, .. }
            | RunConfig::Experiment { out, .. }
            | RunConfig::Lowerbound { out, .. }
            | RunConfig::Diagnose { out, .. } => out.as_ref(),
        }
    }

    fn format(&self) -> OutputFormat {
        let explicit = match self {
            RunConfig::Fit { format, .. }
            | RunConfig::Fisher { format, .. }
            | RunConfig::Estimate { format, .. }
            | RunConfig::Experiment { format, .. }
            | RunConfig::Lowerbound { format, .. }
            | RunConfig::Diagnose { format, .. } => *format,
        };
        explicit.unwrap_or(match self {
            RunConfig::Experiment { .. } => OutputFormat::Csv,
            _ => OutputFormat::Jsonl,
        })
    }

    fn family(&self) -> Option<&FamilySpec> {
        match self {
            RunConfig::Fit { family, .. }
            | RunConfig::Fisher { family, .. }
            | RunConfig::Estimate { family, .. }
            | RunConfig::Experiment { family, .. }
            | RunConfig::Diagnose { family, .. } => Some(family),
            RunConfig::Lowerbound { .. } => None,
        }
    }

    fn is_stochastic(&self) -> bool {
        !matches!(self, RunConfig::Fit { .. } | RunConfig::Lowerbound { .. })
    }

    /// Collects every violation instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.is_stochastic() && self.seed().is_none() {
            problems.push(format!(
                "seed is required for the stochastic subcommand \"{}\"",
                self.subcommand_name()
            ));
        }
        if let Some(family) = self.family() {
            if family.dim() == 0 {
                problems.push("family dim must be positive".to_string());
            }
        }
        if self.format() == OutputFormat::Csv && !matches!(self, RunConfig::Experiment { .. }) {
            problems.push("csv format is only available for the experiment subcommand".to_string());
        }
        match self {
            RunConfig::Fisher { samples, .. } => {
                if *samples < 100 {
                    problems.push("fisher samples must be >= 100".to_string());
                }
            }
            RunConfig::Estimate { replications, .. } => {
                if *replications == 0 {
                    problems.push("replications must be positive".to_string());
                }
            }
            RunConfig::Experiment { .. } => {
                if let Ok(cfg) = self.experiment_config() {
                    if let Err(Error::Validation(mut v)) = cfg.validate() {
                        problems.append(&mut v);
                    }
                }
            }
            RunConfig::Diagnose { n, reps, theta, family, .. } => {
                if *n == 0 {
                    problems.push("n must be positive".to_string());
                }
                if *reps < 100 {
                    problems.push("diagnose reps must be >= 100".to_string());
                }
                if let Some(t) = theta {
                    if t.len() != family.dim() {
                        problems.push("theta length must match family dim".to_string());
                    }
                }
            }
            _ => {}
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    fn experiment_config(&self) -> Result<ExperimentConfig> {
        if let RunConfig::Experiment {
            family,
            grid,
            functional,
            k_values,
            estimators,
            outer_reps,
            replications,
            theta_truth,
            mode,
            seed,
            ..
        } = self
        {
            Ok(ExperimentConfig {
                family: family.clone(),
                grid: grid.clone(),
                functional: functional.clone(),
                k_values: k_values.clone(),
                estimators: estimators.clone(),
                outer_reps: *outer_reps,
                replications: *replications,
                theta_truth: theta_truth.clone(),
                mode: *mode,
                seed: seed.unwrap_or(0),
            })
        } else {
            Err(Error::InvalidParameter("not an experiment config".into()))
        }
    }
}

/// Parses a single JSON config document.
///
/// Syntax problems map to [`Error::ParseError`]; schema violations (unknown
/// fields, wrong types, out-of-range integers) map to [`Error::Validation`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    match serde_json::from_str::<RunConfig>(text) {
        Ok(cfg) => Ok(cfg),
        Err(e) => match e.classify() {
            serde_json::error::Category::Syntax | serde_json::error::Category::Eof => {
                Err(Error::ParseError(e.to_string()))
            }
            _ => Err(Error::Validation(vec![e.to_string()])),
        },
    }
}

// ---------------------------------------------------------------------------
// Data files
// ---------------------------------------------------------------------------

/// Reads a headerless CSV of observations, one row per point, `dim` columns.
pub fn read_data_csv(path: &Path, dim: usize) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim {
            return Err(Error::ParseError(format!(
                "{}:{}: expected {} columns, found {}",
                path.display(),
                lineno + 1,
                dim,
                fields.len()
            )));
        }
        for field in fields {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::ParseError(format!(
                    "{}:{}: invalid number {:?}",
                    path.display(),
                    lineno + 1,
                    field
                ))
            })?;
            values.push(v);
        }
    }
    if values.is_empty() {
        return Err(Error::ParseError(format!(
            "{}: no observations",
            path.display()
        )));
    }
    Dataset::from_vec(dim, values)
}

/// Writes observations as headerless CSV with round-trip float formatting.
pub fn write_data_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut text = String::new();
    for row in data.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    atomic_write(path, &text)
}

fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

/// Result of a run: the payload text and where it went.
#[derive(Debug)]
pub struct RunOutcome {
    pub payload: String,
    pub written_to: Option<PathBuf>,
    /// Resolved-config echo; embedded in jsonl payloads, emitted as a
    /// `.meta.json` sidecar next to csv files.
    pub meta: String,
}

/// Executes a validated config and materializes its artifacts.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let meta = serde_json::to_string(&json!({ "config": config })).expect("config serializes");
    let records = dispatch(config)?;
    let format = config.format();
    let payload = match format {
        OutputFormat::Jsonl => {
            let mut text = meta.clone();
            text.push('\n');
            for r in &records {
                text.push_str(&serde_json::to_string(r).expect("record serializes"));
                text.push('\n');
            }
            text
        }
        OutputFormat::Csv => match records.first() {
            Some(serde_json::Value::String(csv)) => csv.clone(),
            _ => return Err(Error::InvalidParameter("csv output unavailable".into())),
        },
    };
    let written_to = if let Some(out) = config.out() {
        atomic_write(out, &payload)?;
        if format == OutputFormat::Csv {
            let sidecar = out.with_extension("meta.json");
            atomic_write(&sidecar, &format!("{meta}\n"))?;
        }
        Some(out.clone())
    } else {
        None
    };
    Ok(RunOutcome {
        payload,
        written_to,
        meta,
    })
}

fn dispatch(config: &RunConfig) -> Result<Vec<serde_json::Value>> {
    match config {
        RunConfig::Fit {
            family,
            data,
            tol,
            max_iter,
            ..
        } => {
            let pot = family.build()?;
            let dataset = read_data_csv(data, family.dim())?;
            let fit = fit_mle(
                pot.as_ref(),
                &dataset,
                &FitOptions {
                    tol: *tol,
                    max_iter: *max_iter,
                    init: None,
                },
            )?;
            Ok(vec![json!({
                "theta_hat": fit.theta_hat.as_slice(),
                "grad_norm": fit.grad_norm,
                "iterations": fit.iterations,
                "hessian_min_eig": fit.hessian_min_eig,
                "converged": fit.converged,
            })])
        }
        RunConfig::Fisher {
            family,
            method,
            samples,
            seed,
            ..
        } => {
            let pot = family.build()?;
            let mut rng = substream(seed.unwrap_or(0), &[]);
            let est = fisher_information(pot.as_ref(), *method, *samples, &mut rng)?;
            Ok(vec![json!({
                "matrix": matrix_rows(&est.matrix),
                "mc_se": matrix_rows(&est.mc_se),
                "method": method,
                "samples": est.samples,
            })])
        }
        RunConfig::Estimate {
            family,
            functional,
            data,
            k,
            replications,
            mode,
            seed,
            ..
        } => {
            let pot = family.build()?;
            let sampler = pot.make_sampler().ok_or(Error::UnsupportedSampler)?;
            let f = builtin_functional(functional)?;
            let dataset = read_data_csv(data, family.dim())?;
            let mut rng = substream(seed.unwrap_or(0), &[]);
            let est = estimate_fk(
                pot.as_ref(),
                &sampler,
                &dataset,
                &f,
                *k,
                *replications,
                *mode,
                &mut rng,
            )?;
            Ok(vec![json!({
                "value": est.value,
                "se": est.se,
                "k": est.k,
                "R": est.replications,
                "per_order": est.per_order,
                "mode": est.mode,
                "dropped": est.dropped,
                "flagged_invalid": est.flagged_invalid,
            })])
        }
        RunConfig::Experiment { .. } => {
            let report = run_risk_experiment(&config.experiment_config()?)?;
            match config.format() {
                OutputFormat::Csv => Ok(vec![serde_json::Value::String(report.to_csv())]),
                OutputFormat::Jsonl => {
                    let mut records: Vec<serde_json::Value> = report
                        .rows
                        .iter()
                        .map(|r| serde_json::to_value(r).expect("row serializes"))
                        .collect();
                    if !report.failures.is_empty() {
                        records.push(json!({ "failures": report.failures }));
                    }
                    Ok(records)
                }
            }
        }
        RunConfig::Lowerbound { bound, .. } => {
            let report = eval_bound(bound)?;
            Ok(vec![serde_json::to_value(&report).expect("bound serializes")])
        }
        RunConfig::Diagnose {
            family,
            n,
            reps,
            theta,
            probes,
            seed,
            ..
        } => {
            let pot = family.build()?;
            let sampler = pot.make_sampler().ok_or(Error::UnsupportedSampler)?;
            let theta = match theta {
                Some(t) => DVector::from_column_slice(t),
                None => DVector::zeros(family.dim()),
            };
            let seed = seed.unwrap_or(0);
            let deriv = check_derivatives(pot.as_ref(), *probes, &mut substream(seed, &[1]));
            let conc = concentration_diagnostic(
                pot.as_ref(),
                &sampler,
                &theta,
                *n,
                *reps,
                &mut substream(seed, &[2]),
            )?;
            Ok(vec![json!({
                "derivative_check": deriv,
                "concentration": conc,
                "constants": {
                    "sup_hess_norm": pot.sup_hess_norm(),
                    "hess_lipschitz": pot.hess_lipschitz(),
                    "fisher_floor": pot.fisher_floor(),
                    "strongly_convex": pot.strongly_convex(),
                    "poincare_upper_heuristic": pot.poincare_upper(),
                },
            })])
        }
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn eval_bound(formula: &BoundFormula) -> Result<BoundReport> {
    let inputs = serde_json::to_value(formula).expect("formula serializes");
    let (formula_id, bound_value) = match formula {
        BoundFormula::PriorFisherInfo { prior, delta } => {
            let mut p = prior.build();
            if let Some(delta) = delta {
                p = p.rescaled(*delta)?;
            }
            ("prior_fisher_info", prior_fisher_info(&p)?)
        }
        BoundFormula::VanTreesTheta {
            fisher,
            identity_dim,
            j_pi,
            delta,
            n,
        } => {
            let matrix = match (fisher, identity_dim) {
                (Some(rows), None) => parse_matrix(rows)?,
                (None, Some(d)) => DMatrix::identity(*d, *d),
                _ => {
                    return Err(Error::InvalidParameter(
                        "provide exactly one of fisher or identity_dim".into(),
                    ))
                }
            };
            ("van_trees_theta", van_trees_theta(&matrix, *j_pi, *delta, *n)?)
        }
        BoundFormula::VanTreesFunctional {
            sigma_inv_grad_norm,
            inv_grad_norm,
            j_pi,
            delta,
            n,
            modulus_slope,
            prior,
        } => (
            "van_trees_functional",
            van_trees_functional(
                *sigma_inv_grad_norm,
                *inv_grad_norm,
                *j_pi,
                *delta,
                *n,
                &|r| modulus_slope * r,
                &prior.build(),
            )?,
        ),
        BoundFormula::LocalMinimax {
            m,
            c,
            cs_over_sigma,
            rho,
            n,
        } => (
            "local_minimax",
            local_minimax_bound(*m, *c, *cs_over_sigma, *rho, *n),
        ),
        BoundFormula::GlobalMinimaxRate { n, d, s } => {
            ("global_minimax_rate", global_minimax_rate(*n, *d, *s))
        }
    };
    Ok(BoundReport {
        formula_id: formula_id.to_string(),
        inputs,
        bound_value,
    })
}

fn parse_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidParameter("fisher matrix must be square".into()));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_fit_config_fills_defaults() {
        let cfg = parse_config(
            r#"{"subcommand":"fit","family":{"family":"gaussian","dim":2},"data":"data.csv","seed":1}"#,
        )
        .unwrap();
        match &cfg {
            RunConfig::Fit { tol, max_iter, .. } => {
                assert_eq!(*tol, 1e-10);
                assert_eq!(*max_iter, 100);
            }
            _ => panic!("wrong subcommand"),
        }
        cfg.validate().unwrap();
    }

    #[test]
    fn missing_seed_on_experiment_names_the_field() {
        let cfg = parse_config(
            r#"{"subcommand":"experiment","family":{"family":"gaussian","dim":2},
               "grid":[{"n":50,"d":2}],"functional":{"functional":"quadratic"},
               "k_values":[1],"estimators":["plugin_mle"],
               "theta_truth":{"point":[0.0,0.0]}}"#,
        )
        .unwrap();
        match cfg.validate() {
            Err(Error::Validation(problems)) => {
                assert!(problems.iter().any(|p| p.contains("seed")), "{problems:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn negative_dim_is_a_validation_error() {
        let err = parse_config(
            r#"{"subcommand":"fit","family":{"family":"gaussian","dim":-3},"data":"x.csv","seed":1}"#,
        );
        assert!(matches!(err, Err(Error::Validation(_))), "{err:?}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = parse_config(
            r#"{"subcommand":"fit","family":{"family":"gaussian","dim":2},"data":"x.csv","seed":1,"bogus":true}"#,
        );
        assert!(matches!(err, Err(Error::Validation(_))), "{err:?}");
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        let err = parse_config("{not json");
        assert!(matches!(err, Err(Error::ParseError(_))));
    }

    #[test]
    fn config_round_trips_through_serialization() {
        let cfg = parse_config(
            r#"{"subcommand":"estimate","family":{"family":"product_logcosh","dim":2,"alpha":1.0,"beta":3.0},
               "functional":{"functional":"sin_linear","w":[1.0,2.0]},
               "data":"obs.csv","k":2,"replications":64,"mode":"nested","seed":7}"#,
        )
        .unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn csv_format_is_experiment_only() {
        let mut cfg = parse_config(
            r#"{"subcommand":"fisher","family":{"family":"gaussian","dim":2},"method":"score","seed":1}"#,
        )
        .unwrap();
        cfg.override_format(OutputFormat::Csv);
        assert!(matches!(cfg.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn lowerbound_formula_dispatch() {
        let cfg = parse_config(
            r#"{"subcommand":"lowerbound","bound":{"formula":"local_minimax",
               "m":1.0,"c":10.0,"cs_over_sigma":1.0,"rho":1.0,"n":10000}}"#,
        )
        .unwrap();
        let outcome = run(&cfg).unwrap();
        assert!(outcome.payload.contains("local_minimax"));
        let closed = 1.0 - 3.0 * std::f64::consts::PI / (20.0 * 2.0f64.sqrt()) - 0.2;
        let line = outcome.payload.lines().nth(1).unwrap();
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        let got = record["bound_value"].as_f64().unwrap();
        assert!((got - closed).abs() <= 1e-10);
    }
}
