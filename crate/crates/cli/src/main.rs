use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use despeckle_core::data_fidelity::DataModel;
use despeckle_core::ipiano::SolverConfig;
use despeckle_foe::commands::{self, RunConfig};

/// Multiplicative-noise (speckle) reduction with a filter-response image
/// prior and an inertial proximal-gradient solver.
#[derive(Parser)]
#[command(name = "despeckle-foe", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Nakagami,
    Idiv,
    Combined,
}

impl From<ModelArg> for DataModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Nakagami => DataModel::NakagamiLog,
            ModelArg::Idiv => DataModel::IDivergence,
            ModelArg::Combined => DataModel::Combined,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    /// lambda1 = 50, lambda2 = 0.15 for 5-look real SAR input.
    RealSarL5,
}

#[derive(Args)]
struct ModelFlags {
    /// Fidelity model.
    #[arg(long, value_enum, default_value = "combined")]
    model: ModelArg,
    /// Data weight (lambda for single-term models, lambda1 for combined).
    /// Explicit values are used as-is, without substitute-bank scaling.
    #[arg(long)]
    lambda1: Option<f64>,
    /// Second data weight of the combined model.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Named weight preset overriding the per-looks table.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// FOEBANK filter file; without it the 7x7/48 DCT substitute bank is used.
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Iteration budget.
    #[arg(long, default_value_t = 200)]
    iters: usize,
    /// Inertia weight in [0, 1).
    #[arg(long, default_value_t = 0.8)]
    beta: f64,
    /// Relative-change stopping tolerance.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Zero out wall-clock fields in reports (byte-reproducible output).
    #[arg(long)]
    no_timing: bool,
}

impl ModelFlags {
    fn run_config(&self, looks: u32, seed: u64, report: Option<PathBuf>) -> RunConfig {
        RunConfig {
            model: self.model.into(),
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            real_sar_preset: matches!(self.preset, Some(PresetArg::RealSarL5)),
            looks,
            seed,
            bank_path: self.bank.clone(),
            solver: SolverConfig {
                beta: self.beta,
                max_iters: self.iters,
                rel_change_tol: self.tol,
                ..SolverConfig::default()
            },
            report_path: report,
            no_timing: self.no_timing,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Corrupt a clean image with synthetic L-look speckle.
    Synth {
        input: PathBuf,
        output: PathBuf,
        /// Number of looks (independent intensities averaged).
        #[arg(long, default_value_t = 8)]
        looks: u32,
        /// Noise seed; the same seed reproduces the same field bit for bit.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Restore a speckled image.
    Despeckle {
        input: PathBuf,
        output: PathBuf,
        /// Number of looks of the noisy input; selects weight presets.
        #[arg(long, default_value_t = 8)]
        looks: u32,
        /// Write a JSON run report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        flags: ModelFlags,
    },
    /// Print PSNR/SSIM between a restored image and its reference.
    Eval {
        restored: PathBuf,
        reference: PathBuf,
    },
    /// synth -> despeckle -> eval over a directory of clean images.
    Benchmark {
        dataset_dir: PathBuf,
        /// Looks to test, e.g. --looks 1,3,8.
        #[arg(long, value_delimiter = ',', default_values_t = [1u32, 3, 8])]
        looks: Vec<u32>,
        /// Noise seed for the synthesis stage.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the JSON report.
        #[arg(long)]
        report: PathBuf,
        /// Directory for emitted noisy/restored images
        /// (default: the report's directory).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        flags: ModelFlags,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth {
            input,
            output,
            looks,
            seed,
        } => commands::cmd_synth(&input, looks, seed, &output),
        Command::Despeckle {
            input,
            output,
            looks,
            report,
            flags,
        } => {
            let config = flags.run_config(looks, 0, report);
            commands::cmd_despeckle(&input, &config, &output)
        }
        Command::Eval {
            restored,
            reference,
        } => commands::cmd_eval(&restored, &reference),
        Command::Benchmark {
            dataset_dir,
            looks,
            seed,
            report,
            out_dir,
            flags,
        } => {
            // the looks list drives per-run weights; the placeholder here
            // is never consulted
            let config = flags.run_config(looks.first().copied().unwrap_or(8), seed, None);
            let out_dir = out_dir.unwrap_or_else(|| {
                report
                    .parent()
                    .map(|p| p.to_path_buf())
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            commands::cmd_benchmark(&dataset_dir, &looks, &config, &report, &out_dir)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
