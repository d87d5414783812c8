use clap::Parser;
use zvins_cli::{classify, init_logging};

fn main() -> anyhow::Result<()> {
    init_logging();
    classify::run(classify::Cli::parse())
}
