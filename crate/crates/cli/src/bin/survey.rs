use clap::Parser;
use zvins_cli::{init_logging, survey};

fn main() -> anyhow::Result<()> {
    init_logging();
    survey::run(survey::Cli::parse())
}
