use clap::Parser;
use zvins_cli::{eval, init_logging};

fn main() -> anyhow::Result<()> {
    init_logging();
    eval::run(eval::Cli::parse())
}
