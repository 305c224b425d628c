use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kpp_core::harness::{run_study, Config};
use kpp_core::Error;

#[derive(Parser, Debug)]
#[command(name = "kpp-lab", version, about = "Sharp-interface experiments for the rescaled Fisher-KPP equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct StudyArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Also emit SVG plots.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Travelling waves and their tails.
    Wave(StudyArgs),
    /// Plain runs with checkpoint dumps.
    Simulate(StudyArgs),
    /// Fitted front speed over the epsilon ladder.
    Speed(StudyArgs),
    /// Layer thickness and tube constant over the ladder.
    Thickness(StudyArgs),
    /// Generation time over the ladder.
    Generation(StudyArgs),
    /// Probe values for algebraically decaying data and a compact control.
    NoInterface(StudyArgs),
    /// Sub- and super-solution sandwich checks.
    Barriers(StudyArgs),
}

impl Command {
    fn split(&self) -> (&'static str, &StudyArgs) {
        match self {
            Command::Wave(a) => ("wave", a),
            Command::Simulate(a) => ("simulate", a),
            Command::Speed(a) => ("speed", a),
            Command::Thickness(a) => ("thickness", a),
            Command::Generation(a) => ("generation", a),
            Command::NoInterface(a) => ("no-interface", a),
            Command::Barriers(a) => ("barriers", a),
        }
    }
}

fn execute(name: &str, args: &StudyArgs) -> Result<bool, Error> {
    let cfg = Config::load(&args.config)?;
    let out = run_study(name, &cfg)?;
    out.write(&args.out, args.svg)?;
    for c in &out.report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {}", args.out.join("report.csv").display());
    Ok(out.report.all_passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, args) = cli.command.split();
    match execute(name, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("kpp-lab {name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
