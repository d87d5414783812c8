use clap::Parser;
use zvins_cli::{init_logging, sim};

fn main() -> anyhow::Result<()> {
    init_logging();
    sim::run(sim::Cli::parse())
}
