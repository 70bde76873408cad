use clap::Parser;
use mather_lab::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let outcome = run(&cli);
    if !outcome.stdout.is_empty() {
        print!("{}", outcome.stdout);
    }
    if let Some(msg) = &outcome.diagnostic {
        eprintln!("mather-lab: {msg}");
    }
    std::process::exit(outcome.code);
}
