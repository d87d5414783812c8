//! Shared plumbing for the command-line tools.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use zvins::{Config, EkfConfig, ShoeParams};

pub mod classify;
pub mod eval;
pub mod ins;
pub mod sim;
pub mod survey;
pub mod zv;

/// Logs to stderr; `RUST_LOG` overrides the default `info` level.
pub fn init_logging() {
    let env = env_logger::Env::default().default_filter_or("info");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

/// Key-value config file with filter and detector defaults.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArg {
    /// Config file of `key = value` lines; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

impl ConfigArg {
    pub fn load(&self) -> Result<Config> {
        match &self.config {
            Some(path) => {
                Config::load(path).with_context(|| format!("loading config {}", path.display()))
            }
            None => Ok(Config::default()),
        }
    }
}

/// SHOE detector settings.
#[derive(Args, Clone, Debug, Default)]
pub struct ShoeArgs {
    /// Detector window, samples.
    #[arg(long)]
    pub window: Option<usize>,
    /// Specific-force noise weight, m/s^2.
    #[arg(long = "sigma-a")]
    pub sigma_a: Option<f64>,
    /// Angular-rate noise weight, rad/s.
    #[arg(long = "sigma-w")]
    pub sigma_w: Option<f64>,
}

impl ShoeArgs {
    pub fn apply(&self, mut shoe: ShoeParams) -> Result<ShoeParams> {
        if let Some(w) = self.window {
            shoe.window = w;
        }
        if let Some(s) = self.sigma_a {
            shoe.sigma_a = s;
        }
        if let Some(s) = self.sigma_w {
            shoe.sigma_w = s;
        }
        shoe.validate()?;
        Ok(shoe)
    }
}

/// Filter noise overrides.
#[derive(Args, Clone, Debug, Default)]
pub struct EkfArgs {
    /// Zero-velocity measurement noise, m/s.
    #[arg(long = "sigma-zupt")]
    pub sigma_zupt: Option<f64>,
    /// Accelerometer process noise, m/s^2.
    #[arg(long = "sigma-accel")]
    pub sigma_accel: Option<f64>,
    /// Gyro process noise, rad/s.
    #[arg(long = "sigma-gyro")]
    pub sigma_gyro: Option<f64>,
}

impl EkfArgs {
    pub fn apply(&self, mut ekf: EkfConfig) -> EkfConfig {
        if let Some(v) = self.sigma_zupt {
            ekf.sigma_zupt = v;
        }
        if let Some(v) = self.sigma_accel {
            ekf.sigma_accel = v;
        }
        if let Some(v) = self.sigma_gyro {
            ekf.sigma_gyro = v;
        }
        ekf
    }
}

pub(crate) fn read_imu(path: &Path) -> Result<zvins::ImuStream> {
    zvins::io::read_imu_file(path, None)
        .with_context(|| format!("reading IMU log {}", path.display()))
}
