use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use multisym_cli::{
    cmd_classify, cmd_derive, cmd_integrate, cmd_verify, CliError, IntegrateOptions, Model, Report, VerifyOptions,
};

#[derive(Parser)]
#[command(
    name = "multisym",
    version,
    about = "Derive and verify multisymplectic field theories"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print forms, Legendre maps, H, field equations and operators.
    Derive { model: PathBuf },
    /// Regularity of the Lagrangian.
    Classify { model: PathBuf },
    /// Run the identity suite.
    Verify {
        model: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Write the JSON report here (`-` for stdout).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Integrate the numeric block and meter the result.
    Integrate {
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn emit(report: &Report, json: Option<&PathBuf>) -> Result<(), CliError> {
    match json {
        Some(p) if p.as_os_str() == "-" => print!("{}", report.to_json()),
        Some(p) => {
            std::fs::write(p, report.to_json()).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            print!("{}", report.render_text());
        }
        None => print!("{}", report.render_text()),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.cmd {
        Cmd::Derive { model } => {
            print!("{}", cmd_derive(&Model::load(&model)?)?);
            Ok(true)
        }
        Cmd::Classify { model } => {
            print!("{}", cmd_classify(&Model::load(&model)?)?);
            Ok(true)
        }
        Cmd::Verify {
            model,
            seed,
            samples,
            json,
        } => {
            let r = cmd_verify(&Model::load(&model)?, &VerifyOptions { seed, samples })?;
            emit(&r, json.as_ref())?;
            Ok(r.all_pass())
        }
        Cmd::Integrate { model, out, json } => {
            let r = cmd_integrate(&Model::load(&model)?, &IntegrateOptions { out })?;
            emit(&r, json.as_ref())?;
            Ok(r.all_pass())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
