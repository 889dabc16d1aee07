mod cli;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::EvaluatePairs(a) => commands::pairs::run(a),
        Command::Frechet(a) => commands::features::frechet(a),
        Command::SameSelect(a) => commands::same::run(a),
        Command::Subtract(a) => commands::volumes::subtract(a),
        Command::Stack(a) => commands::volumes::stack(a),
        Command::Kinetics(a) => commands::kinetics::run(a),
        Command::Phantom(a) => commands::phantom::run(a),
        Command::ExtractFeatures(a) => commands::features::extract(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.to_json());
            ExitCode::FAILURE
        }
    }
}
