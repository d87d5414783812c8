//! `ins`: zero-velocity-aided strapdown navigation.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};
use zvins::classifier::{SvmModel, DEFAULT_SMOOTHING_THRESHOLD, DEFAULT_SMOOTHING_WINDOW};
use zvins::eval::motion_labels;
use zvins::{detect, detect_adaptive, io, run_ins, AdaptiveParams};

use crate::{read_imu, ConfigArg, EkfArgs, ShoeArgs};

#[derive(Parser, Debug)]
#[command(name = "ins", about = "Foot-mounted INS with zero-velocity updates")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate an IMU log; writes `t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,zupt`.
    Run(RunArgs),
}

#[derive(clap::Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub imu: PathBuf,
    /// Fixed detection threshold.
    #[arg(long, conflicts_with = "adaptive")]
    pub gamma: Option<f64>,
    /// Switch thresholds by classified motion.
    #[arg(long, requires = "model")]
    pub adaptive: bool,
    /// Two-class walk/run model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "gamma-walk")]
    pub gamma_walk: Option<f64>,
    #[arg(long = "gamma-run")]
    pub gamma_run: Option<f64>,
    /// Mean-filter length over raw labels, samples.
    #[arg(long, default_value_t = DEFAULT_SMOOTHING_WINDOW)]
    pub smooth: usize,
    #[arg(long = "smooth-threshold", default_value_t = DEFAULT_SMOOTHING_THRESHOLD)]
    pub smooth_threshold: f64,
    #[command(flatten)]
    pub shoe: ShoeArgs,
    #[command(flatten)]
    pub ekf: EkfArgs,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.config.load()?;
    let Command::Run(args) = cli.command;
    let stream = read_imu(&args.imu)?;
    let shoe = args.shoe.apply(cfg.shoe)?;
    let ekf = args.ekf.apply(cfg.ekf);
    let flags = if args.adaptive {
        let path = args.model.as_ref().expect("clap enforces --model");
        let model =
            SvmModel::load(path).with_context(|| format!("loading model {}", path.display()))?;
        let (Some(gamma_walk), Some(gamma_run)) = (
            args.gamma_walk.or(cfg.gamma_walk),
            args.gamma_run.or(cfg.gamma_run),
        ) else {
            bail!("adaptive mode needs --gamma-walk and --gamma-run (or detector.gamma_walk/gamma_run in the config)");
        };
        let (_, motion) = motion_labels(&stream, &model, args.smooth, args.smooth_threshold)?;
        let running = motion.iter().filter(|m| **m == 1).count();
        info!(
            "{running} of {} samples classified as running",
            motion.len()
        );
        detect_adaptive(
            &stream,
            &motion,
            &shoe,
            &AdaptiveParams {
                gamma_walk,
                gamma_run,
            },
        )?
    } else {
        if args.gamma_walk.is_some() || args.gamma_run.is_some() {
            warn!("--gamma-walk/--gamma-run are ignored without --adaptive");
        }
        let Some(gamma) = args.gamma.or(cfg.gamma) else {
            bail!("no threshold: pass --gamma, --adaptive, or set detector.gamma in the config");
        };
        detect(&stream, &shoe.with_gamma(gamma))?
    };
    let traj = run_ins(&stream, &flags, &ekf)?;
    if traj.init_fallback {
        warn!("no stationary start found; attitude leveled from the first samples");
    }
    io::write_trajectory_file(&args.out, &traj)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}
