//! Key-value configuration for filter and detector defaults.
//!
//! One `key = value` pair per line; `#` starts a comment. Vectors are
//! written as three comma-separated numbers.
//!
//! ```text
//! # filter
//! ekf.sigma_zupt = 0.01
//! ekf.gravity = 9.80665
//! # detector
//! detector.window = 5
//! detector.gamma = 1e5
//! ```

use std::path::Path;

use crate::detector::{AdaptiveParams, ShoeParams};
use crate::ekf::EkfConfig;
use crate::error::{Error, Result};
use crate::types::Vec3;

/// Filter and detector settings; thresholds are optional since most
/// commands take them from flags or files.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Config {
    pub ekf: EkfConfig,
    pub shoe: ShoeParams,
    pub gamma: Option<f64>,
    pub gamma_walk: Option<f64>,
    pub gamma_run: Option<f64>,
}

pub const KEYS: [&str; 17] = [
    "ekf.sigma_accel",
    "ekf.sigma_gyro",
    "ekf.sigma_zupt",
    "ekf.gravity",
    "ekf.p0",
    "ekf.v0",
    "ekf.init_pos_std",
    "ekf.init_vel_std",
    "ekf.init_tilt_std",
    "ekf.init_yaw_std",
    "detector.window",
    "detector.sigma_a",
    "detector.sigma_w",
    "detector.gravity",
    "detector.gamma",
    "detector.gamma_walk",
    "detector.gamma_run",
];

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("config line {line}: {msg}"))
}

fn number(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("{key} expects a number, got {value:?}")))
}

fn vector(line: usize, key: &str, value: &str) -> Result<Vec3> {
    let parts: Vec<f64> = value
        .split(',')
        .map(|p| number(line, key, p.trim()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(parse_err(
            line,
            format!("{key} expects three comma-separated numbers"),
        )),
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                parse_err(line, format!("expected `key = value`, got {content:?}"))
            })?;
            cfg.set(line, key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        Self::parse(&text)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let num = || number(line, key, value);
        match key {
            "ekf.sigma_accel" => self.ekf.sigma_accel = num()?,
            "ekf.sigma_gyro" => self.ekf.sigma_gyro = num()?,
            "ekf.sigma_zupt" => self.ekf.sigma_zupt = num()?,
            "ekf.gravity" => self.ekf.gravity = Vec3::new(0.0, 0.0, -num()?),
            "ekf.p0" => self.ekf.p0 = vector(line, key, value)?,
            "ekf.v0" => self.ekf.v0 = vector(line, key, value)?,
            "ekf.init_pos_std" => self.ekf.init_pos_std = num()?,
            "ekf.init_vel_std" => self.ekf.init_vel_std = num()?,
            "ekf.init_tilt_std" => self.ekf.init_tilt_std = num()?,
            "ekf.init_yaw_std" => self.ekf.init_yaw_std = num()?,
            "detector.window" => {
                self.shoe.window = value.parse().map_err(|_| {
                    parse_err(line, format!("{key} expects an integer, got {value:?}"))
                })?
            }
            "detector.sigma_a" => self.shoe.sigma_a = num()?,
            "detector.sigma_w" => self.shoe.sigma_w = num()?,
            "detector.gravity" => self.shoe.gravity = num()?,
            "detector.gamma" => self.gamma = Some(num()?),
            "detector.gamma_walk" => self.gamma_walk = Some(num()?),
            "detector.gamma_run" => self.gamma_run = Some(num()?),
            other => return Err(parse_err(line, format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.shoe.validate()?;
        let ok = [
            self.ekf.sigma_accel,
            self.ekf.sigma_gyro,
            self.ekf.sigma_zupt,
            self.ekf.init_pos_std,
            self.ekf.init_vel_std,
            self.ekf.init_tilt_std,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if !ok || !(self.ekf.init_yaw_std.is_finite() && self.ekf.init_yaw_std >= 0.0) {
            return Err(Error::InvalidArgument(
                "filter noise settings must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Both adaptive thresholds, when the file sets them.
    pub fn adaptive(&self) -> Option<AdaptiveParams> {
        Some(AdaptiveParams {
            gamma_walk: self.gamma_walk?,
            gamma_run: self.gamma_run?,
        })
    }
}
