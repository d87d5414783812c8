use clap::Parser;
use zvins_cli::{init_logging, zv};

fn main() -> anyhow::Result<()> {
    init_logging();
    zv::run(zv::Cli::parse())
}
