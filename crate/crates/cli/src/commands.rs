//! The four subcommands: speckle synthesis, despeckling, metric
//! evaluation and batch benchmarking.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use despeckle_core::data_fidelity::{DataModel, DataTermSpec};
use despeckle_core::filter_bank::{BankError, BankSource, FilterBank};
use despeckle_core::ipiano::{assemble_model, ipiano_solve, SolveError, SolverConfig};
use despeckle_core::metrics::{self, MetricsError};
use despeckle_core::speckle::{add_speckle, NoiseSpec};
use despeckle_core::Image;

use crate::io::{self, IoError, LoadedImage};
use crate::presets;
use crate::report::{
    AverageEntry, BenchmarkReport, ConfigEcho, DespeckleReport, FailureEntry, ImageEntry,
    MetricsPair,
};

/// Exit code 1: the numerical pipeline failed. Exit code 2: usage or I/O.
#[derive(Debug)]
pub enum CmdError {
    Io(IoError),
    Bank { path: PathBuf, source: BankError },
    BankRead { path: PathBuf, source: std::io::Error },
    Metrics(MetricsError),
    Solver(SolveError),
    Usage(String),
    ReportWrite { path: PathBuf, source: std::io::Error },
    BenchmarkFailures { failed: usize },
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Io(e) => e.fmt(f),
            CmdError::Bank { path, source } => {
                write!(f, "bank file {}: {source}", path.display())
            }
            CmdError::BankRead { path, source } => {
                write!(f, "cannot read bank file {}: {source}", path.display())
            }
            CmdError::Metrics(e) => e.fmt(f),
            CmdError::Solver(e) => e.fmt(f),
            CmdError::Usage(msg) => f.write_str(msg),
            CmdError::ReportWrite { path, source } => {
                write!(f, "cannot write report {}: {source}", path.display())
            }
            CmdError::BenchmarkFailures { failed } => {
                write!(f, "{failed} benchmark run(s) failed; see report")
            }
        }
    }
}

impl std::error::Error for CmdError {}

impl CmdError {
    /// 1 for solver/numerical failures, 2 for usage and I/O problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Solver(_) | CmdError::BenchmarkFailures { .. } => 1,
            _ => 2,
        }
    }
}

impl From<IoError> for CmdError {
    fn from(e: IoError) -> Self {
        CmdError::Io(e)
    }
}

impl From<MetricsError> for CmdError {
    fn from(e: MetricsError) -> Self {
        CmdError::Metrics(e)
    }
}

impl From<SolveError> for CmdError {
    fn from(e: SolveError) -> Self {
        CmdError::Solver(e)
    }
}

/// Everything a despeckle run needs beyond the input image.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: DataModel,
    /// Explicit weights; `None` selects the preset for `looks` (scaled for
    /// the substitute bank).
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub real_sar_preset: bool,
    pub looks: u32,
    pub seed: u64,
    pub bank_path: Option<PathBuf>,
    pub solver: SolverConfig,
    pub report_path: Option<PathBuf>,
    /// Zero out wall-clock fields so reports are byte-reproducible.
    pub no_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: DataModel::Combined,
            lambda1: None,
            lambda2: None,
            real_sar_preset: false,
            looks: 8,
            seed: 0,
            bank_path: None,
            solver: SolverConfig::default(),
            report_path: None,
            no_timing: false,
        }
    }
}

/// Loads the bank named in the config, or builds the 7x48 substitute.
pub fn resolve_bank(config: &RunConfig) -> Result<FilterBank, CmdError> {
    match &config.bank_path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CmdError::BankRead {
                path: path.clone(),
                source,
            })?;
            FilterBank::parse_foebank(&text).map_err(|source| CmdError::Bank {
                path: path.clone(),
                source,
            })
        }
        None => Ok(FilterBank::substitute(7, 48).expect("substitute bank parameters are valid")),
    }
}

/// Effective weights for the selected model: explicit flags win unscaled;
/// otherwise the preset table for `looks`, scaled for the substitute bank.
pub fn resolve_weights(
    config: &RunConfig,
    source: BankSource,
) -> Result<(f64, f64), CmdError> {
    let scale = presets::lambda_scale(source);
    let preset = if config.real_sar_preset {
        Some(presets::REAL_SAR_L5)
    } else {
        presets::combined_preset(config.looks)
    };
    let (l1, l2) = match config.model {
        DataModel::Combined => {
            let base = preset.map(|(a, b)| (a * scale, b * scale));
            let l1 = config.lambda1.or(base.map(|(a, _)| a));
            let l2 = config.lambda2.or(base.map(|(_, b)| b));
            match (l1, l2) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(no_preset_error(config.looks)),
            }
        }
        // single-model defaults are calibrated against the substitute bank
        // already; no source scaling
        DataModel::NakagamiLog => match config.lambda1.or(presets::nakagami_default(config.looks))
        {
            Some(a) => (a, 0.0),
            None => return Err(no_preset_error(config.looks)),
        },
        DataModel::IDivergence => match config.lambda1.or(presets::idiv_default(config.looks)) {
            Some(a) => (a, 0.0),
            None => return Err(no_preset_error(config.looks)),
        },
    };
    Ok((l1, l2))
}

fn no_preset_error(looks: u32) -> CmdError {
    CmdError::Usage(format!(
        "no weight preset for L = {looks}; pass --lambda1 (and --lambda2 for the combined model) explicitly"
    ))
}

/// Flag-level checks so bad solver parameters exit with a usage error
/// instead of tripping the core's assertions. The negated comparison
/// rejects NaN tolerances too.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn validate_solver(cfg: &SolverConfig) -> Result<(), CmdError> {
    if !(0.0..1.0).contains(&cfg.beta) {
        return Err(CmdError::Usage(format!(
            "--beta must be in [0, 1), got {}",
            cfg.beta
        )));
    }
    if !(cfg.rel_change_tol > 0.0) {
        return Err(CmdError::Usage(format!(
            "--tol must be positive, got {}",
            cfg.rel_change_tol
        )));
    }
    Ok(())
}

fn data_term_spec(model: DataModel, l1: f64, l2: f64, looks: u32) -> DataTermSpec {
    match model {
        DataModel::Combined => DataTermSpec::combined(l1, l2, looks as f64),
        DataModel::NakagamiLog => DataTermSpec::nakagami(l1, looks as f64),
        DataModel::IDivergence => DataTermSpec::idiv(l1, looks as f64),
    }
}

fn config_echo(
    config: &RunConfig,
    weights: (Option<f64>, Option<f64>),
    looks: Vec<u32>,
    source: BankSource,
    peak: f64,
) -> ConfigEcho {
    ConfigEcho {
        model: config.model.to_string(),
        lambda1: weights.0,
        lambda2: weights.1,
        looks,
        seed: config.seed,
        beta: config.solver.beta,
        max_iters: config.solver.max_iters,
        rel_change_tol: config.solver.rel_change_tol,
        bank_path: config
            .bank_path
            .as_ref()
            .map(|p| p.display().to_string()),
        lambda_scale: presets::lambda_scale(source),
        peak,
    }
}

/// `PSNR/SSIM` in the reporting style used throughout: two decimals for
/// the dB value, four for SSIM, `inf/1.0000` for identical images.
pub fn format_quality(psnr: f64, ssim: f64) -> String {
    format!("{psnr:.2}/{ssim:.4}")
}

/// Adds L-look speckle to an image file and reports the degradation.
pub fn cmd_synth(input: &Path, looks: u32, seed: u64, output: &Path) -> Result<(), CmdError> {
    if looks < 1 {
        return Err(CmdError::Usage("--looks must be at least 1".into()));
    }
    let LoadedImage { image, depth } = io::read_image(input)?;
    let noisy = add_speckle(&image, &NoiseSpec { looks, seed });
    io::write_image(output, &noisy, depth)?;
    let written = io::quantized(&noisy, depth);
    let peak = depth.peak();
    let psnr = metrics::psnr(&written, &image, peak)?;
    let ssim = metrics::ssim(&written, &image, peak)?;
    println!(
        "{} -> {}  L={looks} seed={seed}  noisy vs clean: {}",
        input.display(),
        output.display(),
        format_quality(psnr, ssim)
    );
    Ok(())
}

/// Despeckles one image file; the workhorse behind `despeckle` and each
/// benchmark cell.
struct SolveOutcome {
    restored: Image,
    iterations: usize,
    converged: bool,
    initial_energy: f64,
    final_energy: f64,
    final_rel_change: f64,
    max_newton_iterations: u32,
    seconds: f64,
}

fn run_despeckle(
    observed: &Image,
    bank: &FilterBank,
    spec: DataTermSpec,
    solver: &SolverConfig,
) -> Result<SolveOutcome, CmdError> {
    let started = Instant::now();
    let problem =
        assemble_model(spec, bank, observed).map_err(|e| CmdError::Usage(e.to_string()))?;
    let (x, trace) = ipiano_solve(&problem.initial_point(), &problem, solver)?;
    let restored = problem.to_amplitude(&x);
    Ok(SolveOutcome {
        restored,
        iterations: trace.iterations_run,
        converged: trace.converged,
        initial_energy: trace.energies[0],
        final_energy: *trace.energies.last().unwrap(),
        final_rel_change: trace.final_rel_change,
        max_newton_iterations: problem.max_newton_iterations(),
        seconds: started.elapsed().as_secs_f64(),
    })
}

pub fn cmd_despeckle(input: &Path, config: &RunConfig, output: &Path) -> Result<(), CmdError> {
    validate_solver(&config.solver)?;
    let LoadedImage { image, depth } = io::read_image(input)?;
    let bank = resolve_bank(config)?;
    let (l1, l2) = resolve_weights(config, bank.source())?;
    let spec = data_term_spec(config.model, l1, l2, config.looks);
    let outcome = run_despeckle(&image, &bank, spec, &config.solver)?;
    io::write_image(output, &outcome.restored, depth)?;
    let seconds = if config.no_timing { 0.0 } else { outcome.seconds };
    println!(
        "{} -> {}  model={} lambda1={l1} lambda2={l2} bank={}  iters={}{}  energy {:.6e} -> {:.6e}",
        input.display(),
        output.display(),
        config.model,
        bank.source(),
        outcome.iterations,
        if outcome.converged { " (converged)" } else { "" },
        outcome.initial_energy,
        outcome.final_energy,
    );
    if let Some(report_path) = &config.report_path {
        let report = DespeckleReport {
            run_config: config_echo(
                config,
                (Some(l1), Some(l2)),
                vec![config.looks],
                bank.source(),
                depth.peak(),
            ),
            bank_source: bank.source().to_string(),
            initial_energy: outcome.initial_energy,
            final_energy: outcome.final_energy,
            iterations: outcome.iterations,
            converged: outcome.converged,
            final_rel_change: outcome.final_rel_change,
            max_newton_iterations: outcome.max_newton_iterations,
            seconds,
        };
        write_json(report_path, &report)?;
    }
    Ok(())
}

/// Prints `PSNR/SSIM` between a restored image and its reference.
pub fn cmd_eval(restored: &Path, reference: &Path) -> Result<(), CmdError> {
    let a = io::read_image(restored)?;
    let b = io::read_image(reference)?;
    if a.depth != b.depth {
        return Err(CmdError::Usage(format!(
            "bit depths differ: {} is {:?}, {} is {:?}",
            restored.display(),
            a.depth,
            reference.display(),
            b.depth
        )));
    }
    let peak = a.depth.peak();
    let psnr = metrics::psnr(&a.image, &b.image, peak)?;
    let ssim = metrics::ssim(&a.image, &b.image, peak)?;
    println!("{}", format_quality(psnr, ssim));
    Ok(())
}

/// Per-run seed so each (image, looks) cell gets an independent noise
/// field while the whole benchmark stays reproducible from one `--seed`.
fn derive_seed(base: u64, image_index: usize, looks: u32) -> u64 {
    base.wrapping_add(1_000_003u64.wrapping_mul(image_index as u64 + 1))
        .wrapping_add(looks as u64)
}

/// synth -> despeckle -> eval over a directory, with a JSON report.
pub fn cmd_benchmark(
    dataset_dir: &Path,
    looks_list: &[u32],
    config: &RunConfig,
    report_path: &Path,
    out_dir: &Path,
) -> Result<(), CmdError> {
    validate_solver(&config.solver)?;
    if looks_list.is_empty() {
        return Err(CmdError::Usage("--looks list must not be empty".into()));
    }
    if looks_list.iter().any(|&l| l < 1) {
        return Err(CmdError::Usage("--looks values must be at least 1".into()));
    }
    let mut inputs: Vec<PathBuf> = fs::read_dir(dataset_dir)
        .map_err(|source| {
            CmdError::Io(IoError::Read {
                path: dataset_dir.to_path_buf(),
                source,
            })
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| {
                    let e = e.to_ascii_lowercase();
                    e == "png" || e == "pgm"
                })
                .unwrap_or(false)
        })
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(CmdError::Usage(format!(
            "no images found in {}",
            dataset_dir.display()
        )));
    }
    fs::create_dir_all(out_dir).map_err(|source| CmdError::ReportWrite {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let bank = resolve_bank(config)?;
    // fail fast when a looks value has no preset and no explicit weights
    for &looks in looks_list {
        let cell_config = RunConfig {
            looks,
            ..config.clone()
        };
        resolve_weights(&cell_config, bank.source())?;
    }

    let mut per_image = Vec::new();
    let mut failures = Vec::new();
    let mut echo_peak = 255.0;

    for (index, input) in inputs.iter().enumerate() {
        let name = input
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("image")
            .to_string();
        for &looks in looks_list {
            let cell_config = RunConfig {
                looks,
                ..config.clone()
            };
            let (l1, l2) = resolve_weights(&cell_config, bank.source())?;
            match benchmark_cell(
                input,
                &name,
                index,
                looks,
                &cell_config,
                &bank,
                l1,
                l2,
                out_dir,
            ) {
                Ok((entry, peak)) => {
                    echo_peak = peak;
                    per_image.push(entry);
                }
                Err(err) => failures.push(FailureEntry {
                    name: name.clone(),
                    looks,
                    error: err.to_string(),
                }),
            }
        }
    }

    // order-stable rows: sorted by name, then looks
    per_image.sort_by(|a, b| a.name.cmp(&b.name).then(a.looks.cmp(&b.looks)));

    let mut averages = Vec::new();
    for &looks in looks_list {
        let rows: Vec<&ImageEntry> = per_image.iter().filter(|e| e.looks == looks).collect();
        if rows.is_empty() {
            continue;
        }
        let n = rows.len() as f64;
        let avg = |f: &dyn Fn(&ImageEntry) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
        averages.push(AverageEntry {
            looks,
            noisy: MetricsPair {
                psnr: avg(&|r| r.noisy.psnr),
                ssim: avg(&|r| r.noisy.ssim),
            },
            restored: MetricsPair {
                psnr: avg(&|r| r.restored.psnr),
                ssim: avg(&|r| r.restored.ssim),
            },
        });
    }

    for entry in &per_image {
        println!(
            "{} L={}  noisy {}  restored {}  ({} iters)",
            entry.name,
            entry.looks,
            format_quality(entry.noisy.psnr, entry.noisy.ssim),
            format_quality(entry.restored.psnr, entry.restored.ssim),
            entry.iterations,
        );
    }
    for avg in &averages {
        println!(
            "average L={}  noisy {}  restored {}",
            avg.looks,
            format_quality(avg.noisy.psnr, avg.noisy.ssim),
            format_quality(avg.restored.psnr, avg.restored.ssim),
        );
    }

    let failed = failures.len();
    let report = BenchmarkReport {
        run_config: config_echo(
            config,
            (config.lambda1, config.lambda2),
            looks_list.to_vec(),
            bank.source(),
            echo_peak,
        ),
        bank_source: bank.source().to_string(),
        per_image,
        averages,
        failures,
    };
    write_json(report_path, &report)?;

    if failed > 0 {
        return Err(CmdError::BenchmarkFailures { failed });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn benchmark_cell(
    input: &Path,
    name: &str,
    index: usize,
    looks: u32,
    config: &RunConfig,
    bank: &FilterBank,
    l1: f64,
    l2: f64,
    out_dir: &Path,
) -> Result<(ImageEntry, f64), CmdError> {
    let LoadedImage { image, depth } = io::read_image(input)?;
    let peak = depth.peak();
    let seed = derive_seed(config.seed, index, looks);
    let noisy = add_speckle(&image, &NoiseSpec { looks, seed });

    let noisy_path = out_dir.join(format!("{name}_L{looks}_noisy.png"));
    io::write_image(&noisy_path, &noisy, depth)?;
    let noisy_q = io::quantized(&noisy, depth);

    let spec = data_term_spec(config.model, l1, l2, looks);
    let outcome = run_despeckle(&noisy_q, bank, spec, &config.solver)?;
    let restored_path = out_dir.join(format!("{name}_L{looks}_restored.png"));
    io::write_image(&restored_path, &outcome.restored, depth)?;
    let restored_q = io::quantized(&outcome.restored, depth);

    let entry = ImageEntry {
        name: name.to_string(),
        looks,
        noisy: MetricsPair {
            psnr: metrics::psnr(&noisy_q, &image, peak)?,
            ssim: metrics::ssim(&noisy_q, &image, peak)?,
        },
        restored: MetricsPair {
            psnr: metrics::psnr(&restored_q, &image, peak)?,
            ssim: metrics::ssim(&restored_q, &image, peak)?,
        },
        iterations: outcome.iterations,
        seconds: if config.no_timing { 0.0 } else { outcome.seconds },
    };
    Ok((entry, peak))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CmdError> {
    let json = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    fs::write(path, json + "\n").map_err(|source| CmdError::ReportWrite {
        path: path.to_path_buf(),
        source,
    })
}
