//! `sim`: synthetic foot-mounted IMU data with ground truth.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use zvins::eval::{course_trial, TrialKind};
use zvins::io;
use zvins::sim::{simulate, GaitPlan, GaitProfile, MotionClass, NoiseModel, Simulation};
use zvins::DEFAULT_RATE_HZ;

#[derive(Parser, Debug)]
#[command(name = "sim", about = "Simulate foot-mounted IMU logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// One gait; writes the IMU log and `t,x,y,z,vx,vy,vz,stance,class` truth.
    Gait {
        /// walk, jog, run, sprint, crouch or ladder.
        #[arg(long)]
        motion: MotionClass,
        /// Seconds of motion, excluding standing at both ends.
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        /// Turn left every this many seconds, walking square laps.
        #[arg(long)]
        laps: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// A walk, run or mixed trial over a surveyed marker course.
    Course {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Trigger log `t,marker_id`.
        #[arg(long)]
        triggers: PathBuf,
        /// Marker map JSON.
        #[arg(long)]
        markers: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(clap::Args, Debug)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Noise::Realistic)]
    noise: Noise,
    #[arg(long, default_value_t = DEFAULT_RATE_HZ)]
    rate: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Also write a mocap log `t,x,y,z` sampled from the truth.
    #[arg(long)]
    mocap: Option<PathBuf>,
    /// Mocap position noise, m.
    #[arg(long = "mocap-noise", default_value_t = 0.0002)]
    mocap_noise: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Noise {
    /// Exact measurements.
    None,
    /// White noise only.
    White,
    /// White noise plus constant sensor biases.
    Realistic,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Kind {
    Walk,
    Run,
    Mixed,
}

impl Noise {
    fn model(self, seed: u64) -> NoiseModel {
        match self {
            Noise::None => NoiseModel::noiseless(seed),
            Noise::White => NoiseModel::default().with_seed(seed),
            Noise::Realistic => NoiseModel::realistic(seed),
        }
    }
}

fn write_outputs(sim: &Simulation, common: &Common) -> Result<()> {
    let ctx = |p: &Path| format!("writing {}", p.display());
    io::write_imu_file(&common.out, &sim.imu).with_context(|| ctx(&common.out))?;
    if let Some(path) = &common.truth {
        io::write_truth_file(path, &sim.truth).with_context(|| ctx(path))?;
    }
    if let Some(path) = &common.mocap {
        let mocap = sim.truth.mocap(1, common.mocap_noise, common.seed)?;
        io::write_mocap_file(path, &mocap).with_context(|| ctx(path))?;
    }
    info!(
        "{} samples, {:.1} m path",
        sim.imu.len(),
        sim.truth.path_length()
    );
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gait {
            motion,
            duration,
            laps,
            common,
        } => {
            let profile = GaitProfile::preset(motion).with_duration(duration);
            let plan = match laps {
                Some(side) => GaitPlan::laps(profile, duration, side)?,
                None => GaitPlan::single(profile),
            };
            let sim = simulate(&plan, &common.noise.model(common.seed), common.rate)?;
            write_outputs(&sim, &common)?;
        }
        Command::Course {
            kind,
            triggers,
            markers,
            common,
        } => {
            let kind = match kind {
                Kind::Walk => TrialKind::Walk,
                Kind::Run => TrialKind::Run,
                Kind::Mixed => TrialKind::Mixed,
            };
            let trial = course_trial(kind, &common.noise.model(common.seed))?;
            write_outputs(&trial.sim, &common)?;
            io::write_triggers_file(&triggers, &trial.triggers)
                .with_context(|| format!("writing {}", triggers.display()))?;
            io::write_json(&markers, &trial.map)
                .with_context(|| format!("writing {}", markers.display()))?;
        }
    }
    Ok(())
}
