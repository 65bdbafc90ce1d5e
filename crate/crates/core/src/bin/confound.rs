use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use confound::adjust::{correlation_match, estimate_correlation, threshold_filter};
use confound::corpus::{generate_pool, inject_noise_dataset};
use confound::harness::{
    emit_csv, emit_plotdata, format_robustness_table, read_rows, run_heatmap, run_noise_sweep,
    run_umbrella, ExperimentConfig,
};
use confound::learner::{annotate_z, crossval_z_errors, fit, TrainConfig};
use confound::metrics::phi_correlation;
use confound::{Dataset, Error, Result, Target};

/// Back-door adjusted classification under confounding shift.
#[derive(Parser)]
#[command(name = "confound", version)]
struct Cli {
    /// JSON experiment config; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic pool from the config's `corpus` block.
    Generate {
        #[arg(long)]
        out: PathBuf,
        /// Overrides `corpus.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cross-validate and train the confounder classifier on a preliminary
    /// dataset; optionally annotate a target dataset with its predictions.
    Preliminary {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Fraction of preliminary labels to flip before training.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Target dataset to annotate with z predictions.
        #[arg(long)]
        annotate: Option<PathBuf>,
        /// Overrides `train.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Threshold and correlation-match the z predictions of an annotated
    /// dataset.
    Match {
        /// Dataset annotated by `preliminary --annotate`.
        #[arg(long)]
        data: PathBuf,
        /// `errors.csv` written by `preliminary`.
        #[arg(long)]
        errors: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Overrides `epsilon`.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Run an experiment sweep and write its row file.
    Sweep {
        #[arg(long, value_enum)]
        mode: SweepMode,
        #[arg(long)]
        out: PathBuf,
        /// Replaces the config's seed list; repeatable.
        #[arg(long)]
        seed: Vec<u64>,
        /// Preliminary label noise for the umbrella sweep (default: first
        /// `noise_grid` entry).
        #[arg(long)]
        dz_noise: Option<f64>,
        /// Also write plot-ready summaries here.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
    },
    /// Summarize a row file: robustness table and plot-ready CSVs.
    Report {
        #[arg(long)]
        rows: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepMode {
    Noise,
    Umbrella,
    Heatmap,
}

#[derive(Serialize, Deserialize)]
struct ErrorRow {
    index: usize,
    z: u8,
    z_pred: u8,
    posterior: f64,
    error: u8,
}

#[derive(Serialize)]
struct AdjustedRow {
    index: usize,
    y: u8,
    z_pred: u8,
    posterior: f64,
    z_matched: u8,
    retained: u8,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    match cli.command {
        Command::Generate { out, seed } => {
            let mut corpus = config.corpus;
            if let Some(s) = seed {
                corpus.seed = s;
            }
            let pool = generate_pool(&corpus)?;
            pool.save(&out)?;
            println!("wrote {} instances (vocab {}) to {}", pool.len(), pool.vocab_size, out.display());
        }
        Command::Preliminary {
            data,
            out_dir,
            noise,
            annotate,
            seed,
        } => {
            let train = TrainConfig {
                seed: seed.unwrap_or(config.train.seed),
                ..config.train
            };
            let d_z = inject_noise_dataset(&Dataset::load(&data)?, noise, train.seed)?;
            let cv = crossval_z_errors(&d_z, config.folds, &train)?;
            let fitted = fit(&d_z, Target::Z, &train)?;
            mkdir(&out_dir)?;
            let rows: Vec<ErrorRow> = cv
                .predictions
                .iter()
                .zip(d_z.zs())
                .enumerate()
                .map(|(index, (p, z))| ErrorRow {
                    index,
                    z,
                    z_pred: p.label,
                    posterior: p.posterior,
                    error: cv.errors[index],
                })
                .collect();
            write_csv(&out_dir.join("errors.csv"), &rows)?;
            let model_path = out_dir.join("z_model.txt");
            let file = File::create(&model_path).map_err(|e| Error::io(&model_path, e))?;
            fitted
                .model
                .write_to(BufWriter::new(file))
                .map_err(|e| Error::io(&model_path, e))?;
            println!(
                "f1_z={:.4} accuracy={:.4} converged={}",
                cv.f1(),
                cv.report.accuracy,
                fitted.converged
            );
            if let Some(target) = annotate {
                let annotated = annotate_z(&fitted.model, &Dataset::load(&target)?)?;
                let path = out_dir.join("annotated.tsv");
                annotated.save(&path)?;
                println!("annotated {} instances -> {}", annotated.len(), path.display());
            }
        }
        Command::Match {
            data,
            errors,
            out_dir,
            epsilon,
        } => {
            let annotated = Dataset::load(&data)?;
            let errors = read_errors(&errors)?;
            let epsilon = epsilon.unwrap_or(config.epsilon);
            let est = estimate_correlation(&errors, &annotated)?;
            let matched = correlation_match(&annotated, est.r_hat, config.match_order)?;
            let filtered = threshold_filter(&annotated, epsilon)?;
            let preds = annotated.predictions()?;
            let mut retained = vec![0u8; annotated.len()];
            for &i in &filtered.retained {
                retained[i] = 1;
            }
            let rows: Vec<AdjustedRow> = (0..annotated.len())
                .map(|i| AdjustedRow {
                    index: i,
                    y: annotated.instances[i].y,
                    z_pred: preds[i].label,
                    posterior: preds[i].posterior,
                    z_matched: matched.assignments[i],
                    retained: retained[i],
                })
                .collect();
            mkdir(&out_dir)?;
            write_csv(&out_dir.join("adjusted_z.csv"), &rows)?;
            matched.save_trace(out_dir.join("trace.csv"))?;
            let r_eps = phi_correlation(&filtered.data.ys(), &filtered.data.z_preds()?)?.value;
            println!(
                "r_observed={:.4} r_hat={:.4}{} flips={} final_gap={:.2e}",
                est.r_observed,
                est.r_hat,
                if est.degenerate { " (degenerate, uncorrected)" } else { "" },
                matched.flips,
                matched.final_gap
            );
            println!(
                "epsilon={epsilon} retained={:.4} r_epsilon={r_eps:.4}",
                filtered.retained_fraction
            );
        }
        Command::Sweep {
            mode,
            out,
            seed,
            dz_noise,
            plot_dir,
        } => {
            let mut config = config;
            if !seed.is_empty() {
                config.seeds = seed;
            }
            let result = match mode {
                SweepMode::Noise => run_noise_sweep(&config)?,
                SweepMode::Umbrella => {
                    run_umbrella(&config, dz_noise.unwrap_or(config.noise_grid[0]))?
                }
                SweepMode::Heatmap => run_heatmap(&config)?,
            };
            emit_csv(&result, Some(&config), &out)?;
            if let Some(dir) = plot_dir {
                emit_plotdata(&result, Some(&config), dir)?;
            }
            print!("{}", format_robustness_table(&result));
            if !result.skipped.is_empty() {
                eprintln!("{} cells skipped (see log)", result.skipped.len());
            }
        }
        Command::Report { rows, out_dir } => {
            let result = read_rows(&rows)?;
            print!("{}", format_robustness_table(&result));
            if let Some(dir) = out_dir {
                for path in emit_plotdata(&result, None, dir)? {
                    println!("wrote {}", path.display());
                }
            }
        }
    }
    Ok(())
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_errors(path: &Path) -> Result<Vec<u8>> {
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.into(),
        source,
    })?;
    r.deserialize::<ErrorRow>()
        .map(|row| {
            row.map(|row| row.error).map_err(|source| Error::Csv {
                path: path.into(),
                source,
            })
        })
        .collect()
}
