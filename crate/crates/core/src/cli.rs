//! The `tpsurf` command-line tool.
//!
//! Exit codes: 0 on success, 1 for input and usage errors, 2 for numerical aborts.

use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::field::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::geometry::read_obj;
use crate::io::{export_mesh, load_curves, normalize_curves, perturb_curves, save_curves, CurveSet, NormalizationTransform};
use crate::pipeline::{
    evaluate_metrics, run_experiment_suite, train_with, write_experiment_csv, write_log_csv, write_report_csv, Suite,
    TrainConfig,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "tpsurf", version, about = "Fit a thin-plate-regularized neural surface to sparse curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a field on a curve file (JSON schema or OBJ polylines).
    Train {
        curves: PathBuf,
        /// JSON file with any subset of the training settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "model.ckpt")]
        out: PathBuf,
        /// Per-iteration loss log (CSV).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Feature flag for OBJ polylines (default: true).
        #[arg(long)]
        default_feature: Option<bool>,
    },
    /// Extract the zero-level surface of a checkpoint as OBJ.
    Surface {
        ckpt: PathBuf,
        #[arg(long)]
        res: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure a checkpoint against its curves and an optional reference mesh.
    Eval {
        ckpt: PathBuf,
        curves: PathBuf,
        /// Reference mesh in the same coordinates as the curves.
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 128)]
        res: usize,
        #[arg(long)]
        default_feature: Option<bool>,
    },
    /// Add Gaussian noise (sigma in normalized units) to a curve file.
    Perturb {
        curves: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        default_feature: Option<bool>,
    },
    /// Run an ablation sweep: weight_sweep, qzero_sweep, noise_sweep, or genus_curve.
    Sweep {
        suite: String,
        curves: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        default_feature: Option<bool>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<TrainConfig> {
    match path {
        Some(p) => TrainConfig::load(p),
        None => Ok(TrainConfig::desk()),
    }
}

fn load_normalized(path: &PathBuf, default_feature: Option<bool>) -> Result<(CurveSet, NormalizationTransform)> {
    normalize_curves(&load_curves(path, default_feature)?)
}

fn create(path: &PathBuf) -> Result<BufWriter<std::fs::File>> {
    Ok(BufWriter::new(std::fs::File::create(path)?))
}

fn load_gt(path: Option<&PathBuf>, transform: &NormalizationTransform) -> Result<Option<crate::geometry::TriangleMesh>> {
    path.map(|p| {
        let mut mesh = read_obj(p)?.into_mesh()?;
        mesh.map_vertices(|v| transform.apply(v));
        Ok(mesh)
    })
    .transpose()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            curves,
            config,
            out,
            log,
            default_feature,
        } => {
            let config = load_config(config.as_ref())?;
            let (curves, transform) = load_normalized(&curves, default_feature)?;
            let every = (config.iterations / 20).max(1);
            let result = train_with(&config, &curves, |row| {
                if row.iter % every == 0 {
                    eprintln!("iter {:>6}  total {:.6e}  ({:.1} ms)", row.iter, row.loss.total, row.ms);
                }
            });
            let output = match result {
                Ok(o) => o,
                Err(Error::NumericalAbort { iteration, last_good }) => {
                    let ckpt = Checkpoint {
                        iteration: iteration as u64,
                        transform: Some(transform),
                        ..Checkpoint::new((*last_good).clone())
                    };
                    save_checkpoint(&ckpt, &out)?;
                    eprintln!("last good parameters written to {}", out.display());
                    return Err(Error::NumericalAbort { iteration, last_good });
                }
                Err(e) => return Err(e),
            };
            let ckpt = Checkpoint {
                params: output.params,
                adam: Some(output.adam),
                iteration: config.iterations as u64,
                transform: Some(transform),
            };
            save_checkpoint(&ckpt, &out)?;
            if let Some(path) = log {
                write_log_csv(&output.log, create(&path)?)?;
            }
            println!("wrote {}", out.display());
        }
        Command::Surface { ckpt, res, out } => {
            let ckpt = load_checkpoint(&ckpt)?;
            let (_, stats) = export_mesh(&ckpt.params, res, ckpt.transform.as_ref(), &out)?;
            let genus = stats.genus.map_or("n/a".to_string(), |g| g.to_string());
            println!("wrote {} ({} vertices, {} faces, genus {genus})", out.display(), stats.vertices, stats.faces);
        }
        Command::Eval {
            ckpt,
            curves,
            gt,
            report,
            res,
            default_feature,
        } => {
            let ckpt = load_checkpoint(&ckpt)?;
            let raw = load_curves(&curves, default_feature)?;
            let (curves, transform) = match ckpt.transform {
                Some(t) => (raw.map_points(|p| t.apply(p)), t),
                None => normalize_curves(&raw)?,
            };
            let gt = load_gt(gt.as_ref(), &transform)?;
            let metrics = evaluate_metrics(&ckpt.params, &curves, gt.as_ref(), res)?;
            write_report_csv(&metrics, create(&report)?)?;
            println!("wrote {}", report.display());
        }
        Command::Perturb {
            curves,
            sigma,
            seed,
            out,
            default_feature,
        } => {
            let (normalized, transform) = load_normalized(&curves, default_feature)?;
            let noisy = perturb_curves(&normalized, sigma, seed)?;
            save_curves(&noisy.map_points(|p| transform.invert(p)), &out)?;
            println!("wrote {}", out.display());
        }
        Command::Sweep {
            suite,
            curves,
            out,
            config,
            gt,
            default_feature,
        } => {
            let suite: Suite = suite.parse()?;
            let config = load_config(config.as_ref())?;
            let (curves, transform) = load_normalized(&curves, default_feature)?;
            let gt = load_gt(gt.as_ref(), &transform)?;
            let rows = run_experiment_suite(suite, &config, &curves, gt.as_ref())?;
            write_experiment_csv(&rows, create(&out)?)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the command, and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
