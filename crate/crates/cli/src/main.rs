mod commands;
mod error;
mod rows;
mod suite;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Command, Params};
use error::CliError;

#[derive(Parser)]
#[command(name = "majsos", version, about = "Bounds, certificates and witnesses for Majorana Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample an SYK_q (or, with --n1, 2-colored) instance as JSON.
    Sample(Params),
    /// Exact Opt by diagonalization.
    Diag(Params),
    /// Upper-bound certificates (--method schatten4|tau|frag42|chernoff|all).
    Certify(Params),
    /// Lower bounds and witnesses (--method fooling|gaussian-round|syk-witness|variational|all).
    Lower(Params),
    /// Delsarte theta of a Johnson-scheme graph, or theta of a transitive graph.
    Theta(Params),
    /// Independence number with a witness set.
    Alpha(Params),
    /// Local search for Psi of an anticommutation graph.
    Psi(Params),
    /// First/second-derivative check at an independent-set point.
    Localopt(Params),
    #[command(subcommand)]
    Gaussian(GaussCmd),
    #[command(subcommand)]
    Variational(VarCmd),
    /// Run a batch of jobs from --config.
    Suite(Params),
    /// Summarize a results CSV (--in).
    Summarize(Params),
}

#[derive(Subcommand)]
enum GaussCmd {
    Sdp(Params),
    Round(Params),
    Witness(Params),
    Lowrank(Params),
}

#[derive(Subcommand)]
enum VarCmd {
    /// θ curve as CSV rows (theta, value).
    Sweep(Params),
    Witness(Params),
    Trotter(Params),
}

fn calibrate() -> Result<(), CliError> {
    majsos::certify::ensure_calibrated()?;
    Ok(())
}

fn emit(cmd: Command, p: &Params) -> Result<(), CliError> {
    if cmd.certifies() {
        calibrate()?;
    }
    let rows = commands::run(cmd, p)?;
    rows::write_rows(&rows, p.out.as_deref())
}

fn write_text(text: &str, out: Option<&std::path::Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            writeln!(std::io::stdout().lock(), "{text}")?;
            Ok(())
        }
    }
}

fn sweep_curve(p: &Params) -> Result<(), CliError> {
    let rows = commands::run(Command::VarSweep, p)?;
    let extra = rows[0].extra_json();
    let sink: Box<dyn std::io::Write> = match &p.out {
        Some(path) => Box::new(std::fs::File::create(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["theta", "value"])?;
    for pt in extra["curve"].as_array().into_iter().flatten() {
        w.write_record([pt[0].to_string(), pt[1].to_string()])?;
    }
    w.flush()?;
    eprintln!("best θ = {}, value = {}", extra["best_theta"], rows[0].value.unwrap_or(f64::NAN));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Sample(p) => {
            let inst = commands::instance_from(&Params { input: None, ..p.clone() })?;
            write_text(&inst.to_json_string(), p.out.as_deref())
        }
        Cmd::Diag(p) => emit(Command::Diag, &p),
        Cmd::Certify(p) => emit(Command::Certify, &p),
        Cmd::Lower(p) => emit(Command::Lower, &p),
        Cmd::Theta(p) => emit(Command::Theta, &p),
        Cmd::Alpha(p) => emit(Command::Alpha, &p),
        Cmd::Psi(p) => emit(Command::Psi, &p),
        Cmd::Localopt(p) => emit(Command::LocalOpt, &p),
        Cmd::Gaussian(g) => match g {
            GaussCmd::Sdp(p) => emit(Command::GaussSdp, &p),
            GaussCmd::Round(p) => emit(Command::GaussRound, &p),
            GaussCmd::Witness(p) => emit(Command::GaussWitness, &p),
            GaussCmd::Lowrank(p) => emit(Command::GaussLowrank, &p),
        },
        Cmd::Variational(v) => match v {
            VarCmd::Sweep(p) => sweep_curve(&p),
            VarCmd::Witness(p) => emit(Command::VarWitness, &p),
            VarCmd::Trotter(p) => emit(Command::VarTrotter, &p),
        },
        Cmd::Suite(p) => {
            let path = p.config.as_ref().ok_or_else(|| CliError::Validation("suite needs --config".into()))?;
            let cfg = suite::SuiteConfig::load(path)?;
            if cfg.needs_calibration() {
                calibrate()?;
            }
            let out = suite::run_suite(&cfg)?;
            write_text(&out.display().to_string(), None)
        }
        Cmd::Summarize(p) => {
            let path = p.input.as_ref().ok_or_else(|| CliError::Validation("summarize needs --in results.csv".into()))?;
            let summary = suite::summarize(&rows::read_rows(path)?);
            write_text(&serde_json::to_string_pretty(&summary).expect("summary serializes"), p.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
