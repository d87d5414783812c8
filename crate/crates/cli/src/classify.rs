//! `classify`: SVM motion classification.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};
use zvins::classifier::{
    fit_trials, predict_stream, smooth, SvmModel, SvmParams, TrialSplit,
    DEFAULT_SMOOTHING_THRESHOLD, DEFAULT_SMOOTHING_WINDOW, DEFAULT_TRIM, DEFAULT_WINDOW,
};
use zvins::io;
use zvins::sim::MotionClass;
use zvins::ImuStream;

use crate::read_imu;

#[derive(Parser, Debug)]
#[command(
    name = "classify",
    about = "Train and apply the walk/run motion classifier"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train on a directory of IMU logs named `<class>_*.csv`, where the
    /// class is a name (walk, jog, run, sprint, crouch, ladder) or index.
    Train {
        #[arg(long)]
        trials: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Classes to keep, e.g. `0,2` or `walk,run`; default all found.
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<String>>,
        /// Window length, samples.
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        /// Samples dropped from each end of a trial.
        #[arg(long, default_value_t = DEFAULT_TRIM)]
        trim: usize,
        /// Training and test windows per class.
        #[arg(long = "windows-per-class", default_value_t = 500)]
        windows_per_class: usize,
        /// RBF width; default 1 / (6 K).
        #[arg(long = "kernel-width")]
        kernel_width: Option<f64>,
        #[arg(long = "c-reg")]
        c_reg: Option<f64>,
    },
    /// Per-sample labels; writes `t,y_raw,y_smooth`.
    Predict {
        #[arg(long)]
        imu: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Mean-filter length, samples (two-class models only).
        #[arg(long, default_value_t = DEFAULT_SMOOTHING_WINDOW)]
        smooth: usize,
        #[arg(long = "smooth-threshold", default_value_t = DEFAULT_SMOOTHING_THRESHOLD)]
        smooth_threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn class_of(path: &Path) -> Result<MotionClass> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    let token = stem.split(['_', '-', '.']).next().unwrap_or_default();
    token
        .parse()
        .with_context(|| format!("cannot tell the motion class of {}", path.display()))
}

fn load_trials(dir: &Path, keep: Option<&[MotionClass]>) -> Result<Vec<(u8, ImuStream)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    paths.sort();
    let mut trials = Vec::new();
    for path in paths {
        let class = class_of(&path)?;
        if keep.is_some_and(|k| !k.contains(&class)) {
            continue;
        }
        info!("trial {} -> {class}", path.display());
        trials.push((class.index(), read_imu(&path)?));
    }
    Ok(trials)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            trials,
            out,
            classes,
            window,
            trim,
            windows_per_class,
            kernel_width,
            c_reg,
        } => {
            let keep = classes
                .map(|cs| {
                    cs.iter()
                        .map(|c| c.parse::<MotionClass>())
                        .collect::<zvins::Result<Vec<_>>>()
                })
                .transpose()?;
            let data = load_trials(&trials, keep.as_deref())?;
            let mut found: Vec<u8> = data.iter().map(|d| d.0).collect();
            found.sort_unstable();
            found.dedup();
            if found.len() < 2 {
                bail!(
                    "need trials of at least two classes in {}, found {found:?}",
                    trials.display()
                );
            }
            let mut params = SvmParams::default_for_window(window);
            if let Some(w) = kernel_width {
                params.kernel_width = w;
            }
            if let Some(c) = c_reg {
                params.c_reg = c;
            }
            let split = TrialSplit {
                k: window,
                trim,
                windows_per_class,
            };
            let fitted = fit_trials(&data, &split, &params)?;
            fitted
                .model
                .save(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            println!("classes = {:?}", fitted.model.classes);
            println!("training_accuracy = {}", fitted.report.training_accuracy);
            println!("test_mean_accuracy = {}", fitted.test.mean_accuracy);
            println!("max_kkt_residual = {}", fitted.report.max_kkt_residual);
            println!("support_vectors = {}", fitted.report.support_vectors);
        }
        Command::Predict {
            imu,
            model,
            smooth: w_s,
            smooth_threshold,
            out,
        } => {
            let stream = read_imu(&imu)?;
            let model = SvmModel::load(&model)
                .with_context(|| format!("loading model {}", model.display()))?;
            let labels = predict_stream(&model, &stream)?;
            let (raw, smoothed) = if model.classes.len() == 2 {
                let raw = zvins::classifier::binarize(&labels, &model.classes)?;
                let s = smooth(&raw, w_s, smooth_threshold)?;
                (raw, s)
            } else {
                warn!("smoothing applies to two-class models only; y_smooth repeats y_raw");
                (labels.clone(), labels)
            };
            io::write_predictions_file(&out, stream.timestamps(), &raw, &smoothed)
                .with_context(|| format!("writing {}", out.display()))?;
        }
    }
    Ok(())
}
