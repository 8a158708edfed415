use clap::Parser;
use lacuna::cli::{execute, Args};

fn main() {
    let args = Args::parse();
    std::process::exit(execute(&args));
}
