use std::io;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frontprop_cli::{
    cmd_check_jacobian, cmd_compare_baseline, cmd_explain, cmd_replica, cmd_validate,
    CheckJacobianArgs, CompareArgs, ExplainArgs, ReplicaArgs, ValidateArgs,
};

/// Local linear explanations of feed-forward networks.
#[derive(Debug, Parser)]
#[command(name = "frontprop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract the local affine surrogate at a base instance.
    Explain(ExplainArgs),
    /// Compare network and surrogate on seeded neighbors; write a scatter CSV.
    Validate(ValidateArgs),
    /// Check surrogate coefficients against central finite differences.
    CheckJacobian(CheckJacobianArgs),
    /// Compare against a least-squares fit over perturbed neighbors.
    CompareBaseline(CompareArgs),
    /// Write a seeded random-weight model on a named architecture.
    Replica(ReplicaArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut stdout = io::stdout().lock();
    let result = match &cli.command {
        Command::Explain(args) => cmd_explain(args, &mut stdout).map(drop),
        Command::Validate(args) => cmd_validate(args, &mut stdout).map(drop),
        Command::CheckJacobian(args) => cmd_check_jacobian(args, &mut stdout).map(drop),
        Command::CompareBaseline(args) => cmd_compare_baseline(args, &mut stdout).map(drop),
        Command::Replica(args) => cmd_replica(args, &mut stdout),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
