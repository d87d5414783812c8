//! `zv`: zero-velocity detection and threshold optimization.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use zvins::io;
use zvins::{detect, optimize_gamma, FBetaConfig, MotionKind};

use crate::{read_imu, ConfigArg, ShoeArgs};

#[derive(Parser, Debug)]
#[command(
    name = "zv",
    about = "SHOE zero-velocity detection and threshold tuning"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Flag stationary samples; writes `t,stationary`.
    Detect {
        #[arg(long)]
        imu: PathBuf,
        /// Detection threshold; falls back to `detector.gamma` in the config.
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        shoe: ShoeArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick the threshold that maximizes F-beta against mocap ground truth.
    Optimize {
        #[arg(long)]
        imu: PathBuf,
        #[arg(long)]
        mocap: PathBuf,
        #[arg(long, value_enum)]
        motion: Motion,
        #[arg(long)]
        beta2: Option<f64>,
        /// Foot speed below which mocap samples count as stationary, m/s.
        #[arg(long = "speed-threshold")]
        speed_threshold: Option<f64>,
        #[command(flatten)]
        shoe: ShoeArgs,
        /// Precision-recall curve CSV.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Motion {
    Walk,
    Run,
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = cli.config.load()?;
    match cli.command {
        Command::Detect {
            imu,
            gamma,
            shoe,
            out,
        } => {
            let stream = read_imu(&imu)?;
            let Some(gamma) = gamma.or(cfg.gamma) else {
                bail!("no threshold: pass --gamma or set detector.gamma in the config");
            };
            let params = shoe.apply(cfg.shoe)?.with_gamma(gamma);
            let flags = detect(&stream, &params)?;
            let n = flags.iter().filter(|f| **f).count();
            info!("{n} of {} samples stationary", flags.len());
            io::write_labels_file(&out, stream.timestamps(), &flags)
                .with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Optimize {
            imu,
            mocap,
            motion,
            beta2,
            speed_threshold,
            shoe,
            out,
        } => {
            let stream = read_imu(&imu)?;
            let mocap = io::read_mocap_file(&mocap)
                .with_context(|| format!("reading mocap log {}", mocap.display()))?;
            let mut fcfg = FBetaConfig::for_motion(match motion {
                Motion::Walk => MotionKind::Walk,
                Motion::Run => MotionKind::Run,
            });
            if let Some(b) = beta2 {
                fcfg.beta_sq = b;
            }
            if let Some(s) = speed_threshold {
                fcfg.speed_threshold = s;
            }
            let shoe = shoe.apply(cfg.shoe)?;
            let opt = optimize_gamma(&stream, &mocap, &shoe, &fcfg)?;
            io::write_pr_curve_file(&out, &opt.curve)
                .with_context(|| format!("writing {}", out.display()))?;
            println!("gamma_opt = {}", opt.gamma);
            println!("f_beta = {}", opt.f_beta);
        }
    }
    Ok(())
}
