use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use symindex_cli::report_v1::{self, ReportV1};
use symindex_cli::scenario::{self, ConfigFile, OutputFormat};

/// Symplectic and variational indices of periodic orbits: CLM/Maslov
/// index, spectral flow, free- and fixed-period spectral indices, and the
/// parity instability criterion, cross-validated against eigenvalue
/// oracles.
#[derive(Parser)]
#[command(name = "symindex", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the index pipeline on one or more scenarios.
    Run {
        /// Preset name (flat_torus, circle_free_particle, harmonic_loop,
        /// kepler_circular, negative_P_synthetic[:drift|:well]) or a path
        /// to an orbit_v1 JSON file. Repeat for a batch.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        /// Integration steps for the fundamental solution.
        #[arg(long)]
        steps: Option<usize>,
        /// Galerkin truncation level N.
        #[arg(long = "galerkin-n")]
        galerkin_n: Option<usize>,
        /// Output format: json, csv or text.
        #[arg(long)]
        format: Option<OutputFormat>,
        /// Output path; plot-ready curve CSVs are written alongside.
        /// Without it the report goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// TOML config file; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the acceptance suite and print one pass/fail line per
    /// criterion.
    Verify {
        /// Run a single criterion (1-12).
        #[arg(long)]
        only: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenarios, steps, galerkin_n, format, out, config } => {
            run(scenarios, steps, galerkin_n, format, out, config)
        }
        Command::Verify { only } => verify(only),
    }
}

fn run(
    scenarios: Vec<String>,
    steps: Option<usize>,
    galerkin_n: Option<usize>,
    format: Option<OutputFormat>,
    out: Option<PathBuf>,
    config: Option<PathBuf>,
) -> ExitCode {
    let config_file = match config.map(|p| ConfigFile::load(&p)).transpose() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let settings = match scenario::resolve(
        &scenarios,
        steps,
        galerkin_n,
        format,
        out,
        config_file.as_ref(),
    ) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };

    let mut reports = Vec::new();
    for sc in &settings.scenarios {
        match sc.run(&settings.pipeline) {
            Ok(report) => reports.push(report),
            Err(e) => {
                eprintln!("error: scenario {}: {e}", sc.name());
                return ExitCode::from(scenario::exit_code_for(&e) as u8);
            }
        }
    }

    let views: Vec<ReportV1> = reports.iter().map(ReportV1::from_report).collect();
    let payload = match settings.format {
        OutputFormat::Json => {
            if views.len() == 1 {
                views[0].to_json().unwrap()
            } else {
                serde_json::to_string_pretty(&views).unwrap()
            }
        }
        OutputFormat::Csv => report_v1::to_csv(&views),
        OutputFormat::Text => {
            views.iter().map(report_v1::to_text).collect::<Vec<_>>().join("\n")
        }
    };

    match &settings.out {
        None => println!("{payload}"),
        Some(path) => {
            if let Err(e) = std::fs::write(path, payload) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(1);
            }
            for report in &reports {
                let base = if reports.len() == 1 {
                    path.clone()
                } else {
                    let stem = path.with_extension("");
                    PathBuf::from(format!(
                        "{}_{}.csv",
                        stem.to_string_lossy(),
                        report.scenario.replace([':', '/'], "_")
                    ))
                };
                if let Err(e) = report_v1::write_curves(report, &base) {
                    eprintln!("error: writing curves: {e:#}");
                    return ExitCode::from(1);
                }
            }
        }
    }
    ExitCode::SUCCESS
}

fn verify(only: Option<usize>) -> ExitCode {
    let results = match only {
        None => symindex_cli::acceptance::run_all(),
        Some(id) => {
            let all = [
                symindex_cli::acceptance::criterion_01 as fn() -> _,
                symindex_cli::acceptance::criterion_02,
                symindex_cli::acceptance::criterion_03,
                symindex_cli::acceptance::criterion_04,
                symindex_cli::acceptance::criterion_05,
                symindex_cli::acceptance::criterion_06,
                symindex_cli::acceptance::criterion_07,
                symindex_cli::acceptance::criterion_08,
                symindex_cli::acceptance::criterion_09,
                symindex_cli::acceptance::criterion_10,
                symindex_cli::acceptance::criterion_11,
                symindex_cli::acceptance::criterion_12,
            ];
            if id == 0 || id > all.len() {
                eprintln!("error: criterion {id} out of range (1-12)");
                return ExitCode::from(1);
            }
            vec![all[id - 1]()]
        }
    };
    let mut all_passed = true;
    for r in &results {
        println!("{}", r.line());
        all_passed &= r.passed;
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
