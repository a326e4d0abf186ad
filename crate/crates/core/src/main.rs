//! Command-line entry point: generate synthetic cohorts, screen features,
//! run the full replicate experiment, train a deployable two-step model,
//! and score individual subjects.
//!
//! Exit codes: 2 for configuration errors, 3 for data errors, 4 when too
//! many replicates fail.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use strainstack::dataset::{self, FeatureSchema};
use strainstack::experiment::{
    self, EvaluationReport, ExperimentConfig, ExperimentError,
};
use strainstack::persist;
use strainstack::stats;
use strainstack::synthgen;

/// Environment variable overriding the output directory.
const OUT_DIR_ENV: &str = "STRAINSTACK_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "strainstack",
    about = "Two-step stacked ensemble toolkit for strain-based CHD classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort CSV from a generator config (or the
    /// built-in default calibration).
    Generate {
        /// Generator config JSON; omit for the default calibration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run t-test screening on a cohort CSV and print the result table.
    Screen {
        /// Cohort CSV path.
        #[arg(long)]
        data: PathBuf,
        /// Significance level.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Train a single two-step model and save it.
    Train {
        /// Experiment config JSON; omit for the default synthetic setup.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output model path.
        #[arg(long)]
        out: PathBuf,
        /// Restrict inputs to the GLPS + clinical columns.
        #[arg(long)]
        glps_only: bool,
    },
    /// Run the replicated evaluation and write the report files.
    Evaluate {
        /// Experiment config JSON; omit for the default synthetic setup.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<usize>,
        /// Output directory (overridden by STRAINSTACK_OUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score one subject row from a saved model.
    Score {
        /// Saved model path.
        #[arg(long)]
        model: PathBuf,
        /// CSV with a single subject row (same format as a cohort file;
        /// the label column may hold any placeholder).
        #[arg(long)]
        subject: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_REPLICATES: u8 = 4;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_experiment_config(
    path: &Option<PathBuf>,
    seed: Option<u64>,
    replicates: Option<usize>,
) -> Result<ExperimentConfig, String> {
    let mut cfg = match path {
        Some(p) => read_json::<ExperimentConfig>(p)?,
        None => ExperimentConfig::default_synthetic(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = replicates {
        cfg.replicates = r;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Generate { config, seed, out } => {
            let mut cfg = match config {
                Some(p) => match read_json::<synthgen::GeneratorConfig>(&p) {
                    Ok(c) => c,
                    Err(e) => return fail(EXIT_CONFIG, e),
                },
                None => synthgen::default_calibration(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let d = match synthgen::generate_cohort(&cfg) {
                Ok(d) => d,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            if let Err(e) = dataset::write_cohort(&d, &out) {
                return fail(EXIT_DATA, e);
            }
            println!(
                "wrote {} subjects ({} positive) to {}",
                d.n(),
                d.positive_count(),
                out.display()
            );
            ExitCode::SUCCESS
        }

        Command::Screen { data, alpha } => {
            if !(0.0 < alpha && alpha < 1.0) {
                return fail(EXIT_CONFIG, "alpha must be in (0,1)");
            }
            let d = match dataset::load_cohort(&data, &FeatureSchema::standard()) {
                Ok(d) => d,
                Err(e) => return fail(EXIT_DATA, e),
            };
            let entries = match stats::screen_features(&d, alpha) {
                Ok(e) => e,
                Err(e) => return fail(EXIT_DATA, e),
            };
            println!(
                "{:<16} {:>10} {:>8} {:>10} {:>12} {:>12}  sig",
                "feature", "t", "df", "p", "mean_case", "mean_ctrl"
            );
            for e in &entries {
                println!(
                    "{:<16} {:>10.4} {:>8.1} {:>10.4} {:>12.4} {:>12.4}  {}",
                    e.feature,
                    e.result.statistic,
                    e.result.degrees_of_freedom,
                    e.result.p_value,
                    e.result.mean_case,
                    e.result.mean_control,
                    if e.significant { "*" } else { "" }
                );
            }
            let n_sig = entries.iter().filter(|e| e.significant).count();
            println!("\n{n_sig} of {} features significant at alpha = {alpha}", entries.len());
            ExitCode::SUCCESS
        }

        Command::Train {
            config,
            seed,
            out,
            glps_only,
        } => {
            let cfg = match load_experiment_config(&config, seed, None) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let saved = match experiment::train_model(&cfg, glps_only) {
                Ok(m) => m,
                Err(ExperimentError::Data(e)) => return fail(EXIT_DATA, e),
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            if let Err(e) = persist::save_model(&saved, &out) {
                return fail(EXIT_DATA, e);
            }
            println!("saved model with K={} to {}", saved.model.k(), out.display());
            ExitCode::SUCCESS
        }

        Command::Evaluate {
            config,
            seed,
            replicates,
            out,
        } => {
            let cfg = match load_experiment_config(&config, seed, replicates) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            let out_dir = std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .or(out)
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let output = match experiment::run_experiment(&cfg) {
                Ok(o) => o,
                Err(e @ ExperimentError::TooManyFailures { .. })
                | Err(e @ ExperimentError::LeakageDetected(_)) => {
                    return fail(EXIT_REPLICATES, e)
                }
                Err(ExperimentError::Data(e)) => return fail(EXIT_DATA, e),
                Err(ExperimentError::Generator(e)) => return fail(EXIT_DATA, e),
                Err(e) => return fail(EXIT_CONFIG, e),
            };
            if let Err(e) = experiment::emit_reports(&output, &out_dir) {
                return fail(EXIT_DATA, e);
            }
            // resolved config beside the outputs, for reproducibility
            if let Ok(bytes) = serde_json::to_vec_pretty(&cfg) {
                let _ = persist::atomic_write(&out_dir.join("config_resolved.json"), &bytes);
            }
            print_summary(&output.report);
            println!("reports written to {}", out_dir.display());
            ExitCode::SUCCESS
        }

        Command::Score { model, subject } => {
            let saved = match persist::load_model(&model) {
                Ok(m) => m,
                Err(e) => return fail(EXIT_DATA, e),
            };
            let d = match dataset::load_cohort(&subject, &FeatureSchema::standard()) {
                Ok(d) => d,
                Err(e) => return fail(EXIT_DATA, e),
            };
            if d.n() != 1 {
                return fail(EXIT_DATA, format!("expected 1 subject row, got {}", d.n()));
            }
            match experiment::score_row(&saved, &d.rows[0]) {
                Ok((label, score, firsts)) => {
                    println!("label: {label}");
                    println!("score: {score:.6}");
                    for (k, s) in firsts.iter().enumerate() {
                        println!("first_step_{:02}: {s:.6}", k + 1);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_DATA, e),
            }
        }
    }
}

fn print_summary(report: &EvaluationReport) {
    println!(
        "replicates: {}/{} succeeded",
        report.replicates_succeeded, report.replicates_requested
    );
    for (name, agg) in &report.ensembles {
        println!(
            "{:<22} accuracy {:.3} ({:.3})  auc {:.3} ({:.3})",
            name, agg.accuracy.mean, agg.accuracy.sd, agg.auc.mean, agg.auc.sd
        );
    }
}
