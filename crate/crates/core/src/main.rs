use clap::Parser;

use wqed::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    match execute(&cli, std::env::args().collect(), std::env::vars()) {
        Ok(outcome) => {
            for p in outcome.outputs.iter().chain(&outcome.manifest) {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("wqed: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
