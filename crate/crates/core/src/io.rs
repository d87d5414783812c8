//! CSV readers and writers for the log formats used by the command-line tools.
//!
//! Every file has a header row. Floats are written with Rust's shortest
//! round-trip formatting, so output is byte-stable across runs.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ekf::Trajectory;
use crate::error::{invalid, Error, Result};
use crate::eval::{TriggerEvent, TriggerLog};
use crate::sim::Truth;
use crate::threshold::{MocapSample, MocapStream, PrCurve};
use crate::types::{ImuSample, ImuStream, Vec3, ZvLabel, DEFAULT_JITTER_TOLERANCE};

#[derive(Debug, Serialize, Deserialize)]
struct ImuRow {
    t: f64,
    ax: f64,
    ay: f64,
    az: f64,
    wx: f64,
    wy: f64,
    wz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MocapRow {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Debug, Serialize)]
struct TrajectoryRow {
    t: f64,
    px: f64,
    py: f64,
    pz: f64,
    vx: f64,
    vy: f64,
    vz: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
    zupt: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRow {
    t: f64,
    stationary: u8,
}

#[derive(Debug, Serialize)]
struct PredictionRow {
    t: f64,
    y_raw: u8,
    y_smooth: u8,
}

#[derive(Debug, Serialize)]
struct TruthRow {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    vx: f64,
    vy: f64,
    vz: f64,
    stance: u8,
    class: u8,
}

fn read_rows<T: for<'de> Deserialize<'de>>(reader: impl Read, what: &str) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Parse(format!("{what} row {}: {e}", i + 1))))
        .collect()
}

fn write_rows<T: Serialize>(writer: impl Write, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Median sample interval, used as the nominal period of a log.
fn median_step(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return invalid("need at least two samples to infer the sampling rate");
    }
    let mut steps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    steps.sort_by(f64::total_cmp);
    let step = steps[steps.len() / 2];
    if step.is_nan() || step <= 0.0 {
        return invalid("timestamps must be strictly increasing");
    }
    Ok(step)
}

/// Reads `t,ax,ay,az,wx,wy,wz`. The rate is inferred from the median
/// interval unless given.
pub fn read_imu(reader: impl Read, rate_hz: Option<f64>) -> Result<ImuStream> {
    let rows: Vec<ImuRow> = read_rows(reader, "IMU")?;
    let samples: Vec<ImuSample> = rows
        .iter()
        .map(|r| {
            ImuSample::new(
                r.t,
                Vec3::new(r.ax, r.ay, r.az),
                Vec3::new(r.wx, r.wy, r.wz),
            )
        })
        .collect();
    let rate = match rate_hz {
        Some(r) => r,
        None => 1.0 / median_step(&samples.iter().map(|s| s.t).collect::<Vec<_>>())?,
    };
    ImuStream::with_jitter_tolerance(samples, rate, DEFAULT_JITTER_TOLERANCE)
}

pub fn read_imu_file(path: &Path, rate_hz: Option<f64>) -> Result<ImuStream> {
    read_imu(open(path)?, rate_hz)
}

pub fn write_imu(writer: impl Write, imu: &ImuStream) -> Result<()> {
    write_rows(
        writer,
        imu.samples().iter().map(|s| ImuRow {
            t: s.t,
            ax: s.accel.x,
            ay: s.accel.y,
            az: s.accel.z,
            wx: s.gyro.x,
            wy: s.gyro.y,
            wz: s.gyro.z,
        }),
    )
}

pub fn write_imu_file(path: &Path, imu: &ImuStream) -> Result<()> {
    write_imu(create(path)?, imu)
}

/// Reads `t,x,y,z`; the capture rate comes from the median interval.
pub fn read_mocap(reader: impl Read) -> Result<MocapStream> {
    let rows: Vec<MocapRow> = read_rows(reader, "mocap")?;
    MocapStream::from_samples(
        rows.iter()
            .map(|r| MocapSample {
                t: r.t,
                pos: Vec3::new(r.x, r.y, r.z),
            })
            .collect(),
    )
}

pub fn read_mocap_file(path: &Path) -> Result<MocapStream> {
    read_mocap(open(path)?)
}

pub fn write_mocap(writer: impl Write, mocap: &MocapStream) -> Result<()> {
    write_rows(
        writer,
        mocap.samples().iter().map(|s| MocapRow {
            t: s.t,
            x: s.pos.x,
            y: s.pos.y,
            z: s.pos.z,
        }),
    )
}

pub fn write_mocap_file(path: &Path, mocap: &MocapStream) -> Result<()> {
    write_mocap(create(path)?, mocap)
}

pub fn write_trajectory(writer: impl Write, traj: &Trajectory) -> Result<()> {
    write_rows(
        writer,
        traj.points.iter().map(|p| {
            let s = &p.state;
            TrajectoryRow {
                t: p.t,
                px: s.p.x,
                py: s.p.y,
                pz: s.p.z,
                vx: s.v.x,
                vy: s.v.y,
                vz: s.v.z,
                qw: s.q.w,
                qx: s.q.x,
                qy: s.q.y,
                qz: s.q.z,
                zupt: u8::from(p.zupt),
            }
        }),
    )
}

pub fn write_trajectory_file(path: &Path, traj: &Trajectory) -> Result<()> {
    write_trajectory(create(path)?, traj)
}

/// Writes `t,stationary` with 0/1 flags.
pub fn write_labels(
    writer: impl Write,
    t: impl IntoIterator<Item = f64>,
    flags: &[bool],
) -> Result<()> {
    write_rows(
        writer,
        t.into_iter().zip(flags).map(|(t, &s)| LabelRow {
            t,
            stationary: u8::from(s),
        }),
    )
}

pub fn write_labels_file(
    path: &Path,
    t: impl IntoIterator<Item = f64>,
    flags: &[bool],
) -> Result<()> {
    write_labels(create(path)?, t, flags)
}

pub fn read_labels(reader: impl Read) -> Result<Vec<ZvLabel>> {
    let rows: Vec<LabelRow> = read_rows(reader, "label")?;
    rows.iter()
        .map(|r| match r.stationary {
            0 | 1 => Ok(ZvLabel {
                t: r.t,
                stationary: r.stationary == 1,
            }),
            v => invalid(format!("stationary flag must be 0 or 1, got {v}")),
        })
        .collect()
}

pub fn write_pr_curve(writer: impl Write, curve: &PrCurve) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        gamma: f64,
        precision: f64,
        recall: f64,
        f_beta: f64,
    }
    write_rows(
        writer,
        curve.points.iter().map(|p| Row {
            gamma: p.gamma,
            precision: p.precision,
            recall: p.recall,
            f_beta: p.f_beta,
        }),
    )
}

pub fn write_pr_curve_file(path: &Path, curve: &PrCurve) -> Result<()> {
    write_pr_curve(create(path)?, curve)
}

/// Reads `t,marker_id`.
pub fn read_triggers(reader: impl Read) -> Result<TriggerLog> {
    TriggerLog::new(read_rows::<TriggerEvent>(reader, "trigger")?)
}

pub fn read_triggers_file(path: &Path) -> Result<TriggerLog> {
    read_triggers(open(path)?)
}

pub fn write_triggers(writer: impl Write, log: &TriggerLog) -> Result<()> {
    write_rows(writer, log.events())
}

pub fn write_triggers_file(path: &Path, log: &TriggerLog) -> Result<()> {
    write_triggers(create(path)?, log)
}

/// Writes `t,y_raw,y_smooth`.
pub fn write_predictions(
    writer: impl Write,
    t: impl IntoIterator<Item = f64>,
    raw: &[u8],
    smooth: &[u8],
) -> Result<()> {
    if raw.len() != smooth.len() {
        return invalid("raw and smoothed label lengths differ");
    }
    write_rows(
        writer,
        t.into_iter()
            .zip(raw.iter().zip(smooth))
            .map(|(t, (&y_raw, &y_smooth))| PredictionRow { t, y_raw, y_smooth }),
    )
}

pub fn write_predictions_file(
    path: &Path,
    t: impl IntoIterator<Item = f64>,
    raw: &[u8],
    smooth: &[u8],
) -> Result<()> {
    write_predictions(create(path)?, t, raw, smooth)
}

/// Writes `t,x,y,z,vx,vy,vz,stance,class` with the class as its index.
pub fn write_truth(writer: impl Write, truth: &Truth) -> Result<()> {
    write_rows(
        writer,
        (0..truth.len()).map(|k| {
            let (p, v) = (truth.positions[k], truth.velocities[k]);
            TruthRow {
                t: truth.t[k],
                x: p.x,
                y: p.y,
                z: p.z,
                vx: v.x,
                vy: v.y,
                vz: v.z,
                stance: u8::from(truth.stance[k]),
                class: truth.class[k].index(),
            }
        }),
    )
}

pub fn write_truth_file(path: &Path, truth: &Truth) -> Result<()> {
    write_truth(create(path)?, truth)
}

/// Per-sample class column of a truth file.
pub fn read_truth_classes(reader: impl Read) -> Result<Vec<u8>> {
    #[derive(Deserialize)]
    struct Row {
        class: u8,
    }
    Ok(read_rows::<Row>(reader, "truth")?
        .into_iter()
        .map(|r| r.class)
        .collect())
}

pub fn read_truth_classes_file(path: &Path) -> Result<Vec<u8>> {
    read_truth_classes(open(path)?)
}

/// Reads a JSON file into `T`.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
