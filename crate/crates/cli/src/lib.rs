//! Subcommands of the `frontprop` binary.
//!
//! Each command writes human-readable text to the supplied writer and its
//! machine-readable artifact (explanation JSON, scatter CSV) to `--out`.
//! Errors map onto exit codes: [`CliError::Input`] is 2, [`CliError::Check`]
//! is 1.

// `!(a < b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::Args;
use frontprop::engine::BASE_EXACTNESS_TOL;
use frontprop::harness::{
    self, baseline_surrogate, evaluate_scatter, evaluate_surrogate, fd_jacobian, fidelity_metrics,
    sample_neighbors, write_scatter_csv, FeatureRanges, FidelityReport, PerturbationConfig,
};
use frontprop::replica::{random_instance, Architecture};
use frontprop::{frontprop, load_model, Explanation, Model};
use serde::Deserialize;
use thiserror::Error;

/// Added to `--seed` to draw the held-out set in `compare-baseline`.
pub const HOLDOUT_SEED_OFFSET: u64 = 0x005e_ed0f_f5e7;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Check(_) => 1,
        }
    }
}

impl From<harness::HarnessError> for CliError {
    fn from(e: harness::HarnessError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(format!("i/o error: {e}"))
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Instance file: either `{"instance": [...]}` or
/// `{"instances": [[...], ...], "index": n}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default)]
    pub instance: Option<Vec<f64>>,
    #[serde(default)]
    pub instances: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub index: Option<usize>,
}

impl InstanceFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let file: InstanceFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("malformed instance file: {e}")))?;
        match (&file.instance, &file.instances) {
            (Some(_), None) | (None, Some(_)) => Ok(file),
            _ => Err(CliError::Input(
                "instance file needs exactly one of \"instance\" or \"instances\"".into(),
            )),
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        match (&self.instance, &self.instances) {
            (Some(one), _) => std::slice::from_ref(one),
            (None, Some(many)) => many,
            (None, None) => &[],
        }
    }

    /// The base instance: `--index` wins over the file's `index`, default 0.
    pub fn select(&self, index: Option<usize>, input_dim: usize) -> Result<Vec<f64>> {
        let rows = self.rows();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != input_dim {
                return Err(CliError::Input(format!(
                    "instance {i} has {} entries, model input dimension is {input_dim}",
                    row.len()
                )));
            }
        }
        let i = index.or(self.index).unwrap_or(0);
        rows.get(i).cloned().ok_or_else(|| {
            CliError::Input(format!(
                "index {i} out of range for {} instances",
                rows.len()
            ))
        })
    }

    /// Normalization ranges: the model's own, else the dataset's spread.
    pub fn ranges(&self, model: &Model) -> Result<FeatureRanges> {
        if let Some(r) = FeatureRanges::from_model(model.spec()) {
            return Ok(r);
        }
        if self.rows().len() < 2 {
            return Err(CliError::Input(
                "model has no feature_ranges and the instance file is not a dataset; \
                 cannot normalize inputs"
                    .into(),
            ));
        }
        FeatureRanges::from_instances(self.rows()).map_err(|e| {
            CliError::Input(format!("cannot derive feature ranges from instances: {e}"))
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct Inputs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Instance JSON file.
    #[arg(long)]
    pub instances: PathBuf,
    /// Base instance index in a dataset file [default: 0].
    #[arg(long)]
    pub index: Option<usize>,
}

struct Loaded {
    model: Model,
    file: InstanceFile,
    base: Vec<f64>,
}

impl Inputs {
    fn load(&self) -> Result<Loaded> {
        let spec = load_model(&self.model)
            .map_err(|e| CliError::Input(format!("{}: {e}", self.model.display())))?;
        let model = Model::new(spec).map_err(|e| CliError::Input(e.to_string()))?;
        let file = InstanceFile::load(&self.instances)?;
        let base = file.select(self.index, model.input_dim())?;
        Ok(Loaded { model, file, base })
    }
}

#[derive(Debug, Clone, Args)]
pub struct Perturbation {
    /// Maximum deviation per dimension as a fraction of its range, in [0, 1].
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    /// Number of neighbors.
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Gaussian standard deviation as a fraction of the threshold.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub sigma_fraction: f64,
}

impl Perturbation {
    pub fn config(&self) -> PerturbationConfig {
        PerturbationConfig {
            proximity_threshold: self.threshold,
            count: self.points,
            seed: self.seed,
            sigma_fraction: self.sigma_fraction,
        }
    }
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut buf = io::BufWriter::new(tmp.as_file_mut());
        write(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path)
        .map_err(|e| CliError::Input(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

fn explain_checked(model: &Model, base: &[f64]) -> Result<Explanation> {
    let explanation = frontprop(model, base).map_err(|e| CliError::Input(e.to_string()))?;
    let residual = explanation.base_residual();
    if !(residual <= BASE_EXACTNESS_TOL) {
        return Err(CliError::Check(format!(
            "surrogate misses the network at the base instance by {residual:e} \
             (tolerance {BASE_EXACTNESS_TOL:e})"
        )));
    }
    Ok(explanation)
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Explanation JSON output path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_explain(args: &ExplainArgs, stdout: &mut dyn Write) -> Result<Explanation> {
    let Loaded { model, base, .. } = args.inputs.load()?;
    let explanation = explain_checked(&model, &base)?;
    let json = explanation.to_json();
    write_atomic(&args.out, |w| writeln!(w, "{json}"))?;

    for k in 0..explanation.base_output.len() {
        writeln!(
            stdout,
            "output {k}: network {:.10}, intercept {:.10}",
            explanation.base_output[k], explanation.affine.intercept[k]
        )?;
        writeln!(
            stdout,
            "  {:>6}  {:>16}  {:>16}  {:>16}",
            "input", "value", "coefficient", "contribution"
        )?;
        for j in 0..explanation.base_instance.len() {
            writeln!(
                stdout,
                "  {:>6}  {:>16.8e}  {:>16.8e}  {:>16.8e}",
                j,
                explanation.base_instance[j],
                explanation.affine.coefficients[(k, j)],
                explanation.contributions[(k, j)]
            )?;
        }
    }
    for flag in &explanation.flags {
        writeln!(stdout, "warning: {flag}")?;
    }
    writeln!(stdout, "wrote {}", args.out.display())?;
    Ok(explanation)
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub perturbation: Perturbation,
    /// Scatter CSV output path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_validate(args: &ValidateArgs, stdout: &mut dyn Write) -> Result<FidelityReport> {
    let config = args.perturbation.config();
    config.validate()?;
    let Loaded { model, file, base } = args.inputs.load()?;
    let ranges = file.ranges(&model)?;
    let explanation = explain_checked(&model, &base)?;
    let neighbors = sample_neighbors(&base, &config, &ranges)?;
    let records = evaluate_scatter(&model, &explanation, &neighbors, &ranges)
        .map_err(|e| CliError::Input(e.to_string()))?;
    write_atomic(&args.out, |w| write_scatter_csv(&records, w))?;
    let report = fidelity_metrics(&records)?;
    writeln!(
        stdout,
        "threshold {} points {} seed {}",
        config.proximity_threshold, config.count, config.seed
    )?;
    print_report(stdout, &report)?;
    writeln!(stdout, "wrote {}", args.out.display())?;
    Ok(report)
}

fn print_report(stdout: &mut dyn Write, report: &FidelityReport) -> io::Result<()> {
    writeln!(
        stdout,
        "{:>6}  {:>14}  {:>14}  {:>12}",
        "output", "max |err|", "mean |err|", "R^2"
    )?;
    for (k, o) in report.outputs.iter().enumerate() {
        let r2 = o
            .r_squared
            .map_or("undefined".to_owned(), |r| format!("{r:.8}"));
        writeln!(
            stdout,
            "{k:>6}  {:>14.6e}  {:>14.6e}  {r2:>12}",
            o.max_abs_error, o.mean_abs_error
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct CheckJacobianArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub step: f64,
    /// Largest accepted relative deviation.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

/// Denominator floor for relative deviations between coefficient matrices.
pub const JACOBIAN_REL_FLOOR: f64 = 1e-10;

pub fn cmd_check_jacobian(args: &CheckJacobianArgs, stdout: &mut dyn Write) -> Result<f64> {
    if !(args.step > 0.0) || !(args.tol > 0.0) {
        return Err(CliError::Input("--step and --tol must be positive".into()));
    }
    let Loaded { model, base, .. } = args.inputs.load()?;
    let explanation = frontprop(&model, &base).map_err(|e| CliError::Input(e.to_string()))?;
    let fd = fd_jacobian(&model, &base, args.step)?;
    let deviation =
        harness::max_relative_deviation(&explanation.affine.coefficients, &fd, JACOBIAN_REL_FLOOR);
    for kink in explanation.near_kinks(args.step) {
        writeln!(
            stdout,
            "warning: {} is within one step of its kink (gap {:.3e}); \
             finite differences straddle a non-differentiable point",
            kink.flag(),
            kink.gap
        )?;
    }
    writeln!(
        stdout,
        "max relative deviation {deviation:.6e} (tolerance {:e})",
        args.tol
    )?;
    if deviation <= args.tol {
        writeln!(stdout, "ok")?;
        Ok(deviation)
    } else {
        Err(CliError::Check(format!(
            "coefficients deviate from finite differences by {deviation:e} > {:e}",
            args.tol
        )))
    }
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub perturbation: Perturbation,
}

#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub forward_passes: usize,
    pub wall_time: Duration,
    pub holdout: FidelityReport,
    pub coefficients: nalgebra::DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub frontprop: MethodSummary,
    pub baseline: MethodSummary,
}

pub fn cmd_compare_baseline(args: &CompareArgs, stdout: &mut dyn Write) -> Result<Comparison> {
    let config = args.perturbation.config();
    config.validate()?;
    let Loaded { model, file, base } = args.inputs.load()?;
    let ranges = file.ranges(&model)?;

    let counted = frontprop::Counted::new(&model);
    let start = Instant::now();
    let explanation = frontprop(&counted, &base).map_err(|e| CliError::Input(e.to_string()))?;
    let fp_time = start.elapsed();
    let fp_passes = counted.passes();

    counted.reset();
    let start = Instant::now();
    let fit = baseline_surrogate(&counted, &base, &config, &ranges)?;
    let bl_time = start.elapsed();
    let bl_passes = counted.passes();
    debug_assert_eq!(bl_passes, fit.forward_passes);

    let holdout_config = PerturbationConfig {
        seed: config.seed.wrapping_add(HOLDOUT_SEED_OFFSET),
        ..config
    };
    let holdout = sample_neighbors(&base, &holdout_config, &ranges)?;
    let fidelity = |affine| -> Result<FidelityReport> {
        let records = evaluate_surrogate(&model, affine, &base, &holdout, &ranges)
            .map_err(|e| CliError::Input(e.to_string()))?;
        Ok(fidelity_metrics(&records)?)
    };
    let comparison = Comparison {
        frontprop: MethodSummary {
            forward_passes: fp_passes,
            wall_time: fp_time,
            holdout: fidelity(&explanation.affine)?,
            coefficients: explanation.affine.coefficients.clone(),
        },
        baseline: MethodSummary {
            forward_passes: bl_passes,
            wall_time: bl_time,
            holdout: fidelity(&fit.affine)?,
            coefficients: fit.affine.coefficients.clone(),
        },
    };

    writeln!(
        stdout,
        "{:<12}  {:>14}  {:>14}  {:>16}  {:>16}  {:>12}",
        "method",
        "forward passes",
        "wall time (s)",
        "holdout max|err|",
        "holdout mean|err|",
        "min R^2"
    )?;
    for (name, m) in [
        ("frontprop", &comparison.frontprop),
        ("baseline", &comparison.baseline),
    ] {
        let r2 = m
            .holdout
            .min_r_squared()
            .map_or("undefined".to_owned(), |r| format!("{r:.8}"));
        writeln!(
            stdout,
            "{name:<12}  {:>14}  {:>14.6e}  {:>16.6e}  {:>16.6e}  {r2:>12}",
            m.forward_passes,
            m.wall_time.as_secs_f64(),
            m.holdout.max_abs_error(),
            m.holdout.mean_abs_error()
        )?;
    }
    Ok(comparison)
}

#[derive(Debug, Clone, Args)]
pub struct ReplicaArgs {
    /// One of credit, diabetes, temperature.
    #[arg(long)]
    pub arch: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Model JSON output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a dataset of uniform random instances here.
    #[arg(long)]
    pub instances_out: Option<PathBuf>,
    /// Dataset size for --instances-out.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
}

/// Writes a seeded random-weight model on one of the named architectures.
pub fn cmd_replica(args: &ReplicaArgs, stdout: &mut dyn Write) -> Result<()> {
    let arch = Architecture::by_name(&args.arch).ok_or_else(|| {
        CliError::Input(format!(
            "unknown architecture {:?}; expected credit, diabetes or temperature",
            args.arch
        ))
    })?;
    let spec = arch.instantiate(args.seed);
    let json = spec.to_json();
    write_atomic(&args.out, |w| writeln!(w, "{json}"))?;
    writeln!(stdout, "wrote {}", args.out.display())?;
    if let Some(path) = &args.instances_out {
        let rows: Vec<Vec<f64>> = (0..args.count as u64)
            .map(|i| {
                random_instance(
                    arch.input_dim,
                    args.seed.wrapping_mul(1_000_003).wrapping_add(i),
                )
            })
            .collect();
        let json = serde_json::to_string(&serde_json::json!({ "instances": rows }))
            .expect("instances serialize");
        write_atomic(path, |w| writeln!(w, "{json}"))?;
        writeln!(stdout, "wrote {}", path.display())?;
    }
    Ok(())
}
