use clap::Parser;

use vix_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("{}", e.report());
        std::process::exit(e.exit_code());
    }
}
