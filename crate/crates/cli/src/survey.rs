//! `survey`: marker maps from total-station style tag observations.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use zvins::io;
use zvins::survey::{
    map_from_survey, synthetic_survey, MarkerMap, SurveyInput, TagTemplate, DEFAULT_TAG_SIDE,
};
use zvins::{Mat3, Se3Transform};

#[derive(Parser, Debug)]
#[command(name = "survey", about = "Chain tag observations into a marker map")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the marker map; writes `{markers, loop_closure_m, path_length_m}`.
    Map {
        #[arg(long)]
        observations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Tag side length, m.
        #[arg(long, default_value_t = DEFAULT_TAG_SIDE)]
        side: f64,
    },
    /// Simulate a forward and reverse survey of the markers in a map file.
    Synth {
        #[arg(long)]
        markers: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Point noise, m.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TAG_SIDE)]
        side: f64,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Map {
            observations,
            out,
            side,
        } => {
            let input: SurveyInput = io::read_json(&observations)
                .with_context(|| format!("reading {}", observations.display()))?;
            let map = map_from_survey(&input, &TagTemplate { side })?;
            match map.loop_closure_error {
                Some(e) => info!("{} markers, loop closure {e:.4} m", map.markers.len()),
                None => info!("{} markers, no reverse survey", map.markers.len()),
            }
            io::write_json(&out, &map).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Synth {
            markers,
            out,
            noise,
            seed,
            side,
        } => {
            let map: MarkerMap = io::read_json(&markers)
                .with_context(|| format!("reading {}", markers.display()))?;
            let poses: Vec<Se3Transform> = map
                .markers
                .iter()
                .map(|m| Se3Transform::new(Mat3::identity(), m.pos))
                .collect::<zvins::Result<_>>()?;
            let input = synthetic_survey(&poses, &TagTemplate { side }, noise, true, seed)?;
            io::write_json(&out, &input).with_context(|| format!("writing {}", out.display()))?;
        }
    }
    Ok(())
}
