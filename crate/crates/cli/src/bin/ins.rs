use clap::Parser;
use zvins_cli::{init_logging, ins};

fn main() -> anyhow::Result<()> {
    init_logging();
    ins::run(ins::Cli::parse())
}
