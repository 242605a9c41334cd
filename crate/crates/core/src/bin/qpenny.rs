use clap::Parser;
use qpenny::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
