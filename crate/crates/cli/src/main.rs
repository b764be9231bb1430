//! `hardy`: command-line front end.
//!
//! Exit codes: 0 ok, 1 usage or configuration error, 2 numerical failure,
//! 3 certificate not established.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hardy_core::audit::{audit_inequality, verify_certificate_levels, AuditTarget, SampleSpec, Verdict};
use hardy_core::error::Error;
use hardy_core::explorer::{run_sweep, solve_problem, SweepConfig};
use hardy_core::kernel::build_fractional_table;
use hardy_core::profile::{make_template, TemplateForm};

#[derive(Parser)]
#[command(name = "hardy", version, about = "Numerical lab for parabolic equations with a Hardy potential")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample every kernel inequality and print the empirical constants as JSON.
    Lemmas {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Restrict to one target (e.g. power_smoothing).
        #[arg(long)]
        target: Option<String>,
    },
    /// Check Φ[ū] ≤ ū for a template built on the configured problem.
    Certify {
        #[arg(long)]
        template: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Run the Picard iteration for the configured problem.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the configured parameter sweep and write its reports.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build a fractional kernel table.
    KernelTable {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 512)]
        resolution: usize,
        #[arg(long, default_value_t = 100.0)]
        rmax: f64,
        /// Write the table here as JSON; otherwise print a summary only.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const USAGE: u8 = 1;
const NUMERICAL: u8 = 2;
const CERTIFICATE: u8 = 3;

fn code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::Io(_) | Error::Format(_) | Error::Unsupported(_) => USAGE,
        Error::Budget { .. } | Error::Divergent { .. } => NUMERICAL,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("hardy: {e}");
    ExitCode::from(code(&e))
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("report serializes"));
}

fn run(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Lemmas { samples, seed, dim, target } => {
            let targets = match target {
                Some(t) => vec![AuditTarget::parse(&t)?],
                None => AuditTarget::ALL.to_vec(),
            };
            let spec = SampleSpec::default().with_samples(samples).with_dim(dim);
            let mut out = Vec::new();
            for t in targets {
                out.push(audit_inequality(t, &spec, seed)?);
            }
            print_json(&out);
            Ok(0)
        }
        Command::Certify { template, config, levels } => {
            let form = TemplateForm::parse(&template)?;
            let cfg = SweepConfig::from_file(&config)?;
            let problem = cfg.problem.base_problem()?;
            let t = make_template(&problem, form, cfg.problem.amplitude, cfg.problem.c0)?;
            let report = verify_certificate_levels(&t, &problem, &cfg.grid, &cfg.quad, levels)?;
            print_json(&report);
            Ok(if report.verdict == Verdict::Certified { 0 } else { CERTIFICATE })
        }
        Command::Solve { config } => {
            let cfg = SweepConfig::from_file(&config)?;
            let problem = cfg.problem.base_problem()?;
            let report = solve_problem(&problem, &cfg.grid, &cfg.quad, &cfg.solver)?;
            print_json(&report);
            Ok(0)
        }
        Command::Sweep { config } => {
            let cfg = SweepConfig::from_file(&config)?;
            let (table, paths) = run_sweep(&cfg)?;
            for p in paths {
                println!("{}", p.display());
            }
            for v in &table.monotonicity_violations {
                eprintln!("warning: {v}");
            }
            Ok(0)
        }
        Command::KernelTable { theta, dim, resolution, rmax, out } => {
            let table = build_fractional_table(theta, dim, resolution, rmax)?;
            println!(
                "theta {theta} dim {dim}: {resolution} nodes to r = {rmax}, mass {:.12}, build tolerance {:e}",
                table.mass(),
                table.build_tolerance
            );
            if let Some(path) = out {
                table.save(&path)?;
                println!("{}", path.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(c) => ExitCode::from(c),
        Err(e) => fail(e),
    }
}
