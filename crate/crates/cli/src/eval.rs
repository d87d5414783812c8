//! `eval`: score fixed and adaptive thresholds over a marker course.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use zvins::classifier::{
    binarize, SvmModel, DEFAULT_SMOOTHING_THRESHOLD, DEFAULT_SMOOTHING_WINDOW,
};
use zvins::eval::{run_trial, Method, TrialConfig};
use zvins::survey::MarkerMap;
use zvins::{io, AdaptiveParams};

use crate::{read_imu, ConfigArg, EkfArgs, ShoeArgs};

#[derive(Parser, Debug)]
#[command(
    name = "eval",
    about = "Compare walk, run and adaptive thresholds on a surveyed course"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one trial and write the JSON report.
    Trial(TrialArgs),
}

#[derive(clap::Args, Debug)]
pub struct TrialArgs {
    #[arg(long)]
    pub imu: PathBuf,
    /// Two-class walk/run model.
    #[arg(long)]
    pub model: PathBuf,
    /// JSON `{"gamma_walk": .., "gamma_run": ..}`; falls back to the config.
    #[arg(long)]
    pub gammas: Option<PathBuf>,
    #[arg(long = "gamma-walk")]
    pub gamma_walk: Option<f64>,
    #[arg(long = "gamma-run")]
    pub gamma_run: Option<f64>,
    /// Trigger log `t,marker_id`.
    #[arg(long)]
    pub triggers: PathBuf,
    /// Marker map JSON from `survey map`.
    #[arg(long)]
    pub markers: PathBuf,
    /// Simulator truth CSV; adds the classifier accuracy to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SMOOTHING_WINDOW)]
    pub smooth: usize,
    #[arg(long = "smooth-threshold", default_value_t = DEFAULT_SMOOTHING_THRESHOLD)]
    pub smooth_threshold: f64,
    #[command(flatten)]
    pub shoe: ShoeArgs,
    #[command(flatten)]
    pub ekf: EkfArgs,
    #[arg(long)]
    pub report: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.config.load()?;
    let Command::Trial(args) = cli.command;
    let from_file: Option<AdaptiveParams> = args
        .gammas
        .as_ref()
        .map(|p| io::read_json(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let pick = |flag: Option<f64>, file: Option<f64>, conf: Option<f64>| flag.or(file).or(conf);
    let (Some(gamma_walk), Some(gamma_run)) = (
        pick(
            args.gamma_walk,
            from_file.map(|g| g.gamma_walk),
            cfg.gamma_walk,
        ),
        pick(
            args.gamma_run,
            from_file.map(|g| g.gamma_run),
            cfg.gamma_run,
        ),
    ) else {
        bail!("thresholds missing: pass --gammas, --gamma-walk/--gamma-run, or set them in the config");
    };

    let imu = read_imu(&args.imu)?;
    let model = SvmModel::load(&args.model)
        .with_context(|| format!("loading model {}", args.model.display()))?;
    let triggers = io::read_triggers_file(&args.triggers)
        .with_context(|| format!("reading {}", args.triggers.display()))?;
    let map: MarkerMap = io::read_json(&args.markers)
        .with_context(|| format!("reading {}", args.markers.display()))?;
    let truth = args
        .truth
        .as_ref()
        .map(|p| -> Result<Vec<u8>> {
            let classes = io::read_truth_classes_file(p)
                .with_context(|| format!("reading {}", p.display()))?;
            Ok(binarize(&classes, &model.classes)?)
        })
        .transpose()?;

    let mut tcfg = TrialConfig::new(AdaptiveParams {
        gamma_walk,
        gamma_run,
    });
    tcfg.shoe = args.shoe.apply(cfg.shoe)?;
    tcfg.ekf = args.ekf.apply(cfg.ekf);
    tcfg.smoothing_window = args.smooth;
    tcfg.smoothing_threshold = args.smooth_threshold;
    let report = run_trial(&imu, &model, &tcfg, &triggers, &map, truth.as_deref())?;
    io::write_json(&args.report, &report)
        .with_context(|| format!("writing {}", args.report.display()))?;

    for (method, name) in [
        (Method::GammaWalk, "gamma_walk"),
        (Method::GammaRun, "gamma_run"),
        (Method::GammaAdapt, "gamma_adapt"),
    ] {
        if let Some(e) = report.error(method) {
            println!("{name}: furthest-point error {e:.3} m");
        }
    }
    if let Some(acc) = report.svm_accuracy {
        println!("svm accuracy {acc:.4}");
    }
    Ok(())
}
