//! Command-line front end: capacity evaluation, parameter sweeps, protocol
//! demos, the breaking-threshold scan, and the self-verification battery.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ebnet::capacity::{
    capacity_sweep, ea_capacity_depolarizing, holevo_capacity_depolarizing, CapacitySample,
    RATE_FLOOR,
};
use ebnet::ebcheck::eb_threshold_scan;
use ebnet::protocols::{
    bob_solo_rate_demo, butterfly_demo, dense_coding_superadditivity_demo, noisy_extension_i_demo,
    noisy_extension_ii_demo, teleportation_demo, ProtocolReport,
};
use ebnet::qcore::random_pure_state;
use ebnet::verify::run_all;
use ebnet::Error;

const EXIT_VERIFICATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

/// Tolerance a demo's discrepancy must meet for a zero exit.
const DEMO_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "ebnet",
    version,
    about = "Exact simulations of entanglement-assisted coding through measure-and-forward networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print both capacities of the noisy wire at one parameter point
    Capacity {
        /// qudit dimension
        #[arg(long)]
        d: usize,
        /// depolarizing strength in [0, 1]
        #[arg(long)]
        x: f64,
    },
    /// Tabulate capacities over an x grid to CSV or JSON
    Sweep {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.0)]
        x_min: f64,
        #[arg(long, default_value_t = 1.0)]
        x_max: f64,
        /// number of grid points (at least 2)
        #[arg(long, default_value_t = 21)]
        steps: usize,
        /// output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// evaluate grid points on the thread pool
        #[arg(long)]
        parallel: bool,
    },
    /// Run one protocol simulation and report its metric as JSON
    Demo {
        #[arg(value_enum)]
        name: DemoName,
        #[arg(long)]
        d: usize,
        /// depolarizing strength (densecode, bobsolo, butterfly)
        #[arg(long)]
        x: Option<f64>,
        /// measurement noise weight (noisy-i, noisy-ii)
        #[arg(long)]
        q: Option<f64>,
        /// seed for random test-state generation (teleport, noisy-ii)
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Locate the entanglement-breaking threshold of the noisy wire
    EbThreshold {
        #[arg(long)]
        d: usize,
    },
    /// Run the full self-verification battery
    VerifyAll {
        /// largest qudit dimension to exercise (2..=4)
        #[arg(long, default_value_t = 2)]
        d_max: usize,
        /// run independent checks on the thread pool
        #[arg(long)]
        parallel: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum DemoName {
    Teleport,
    Densecode,
    Bobsolo,
    #[value(name = "noisy-i")]
    NoisyI,
    #[value(name = "noisy-ii")]
    NoisyII,
    Butterfly,
}

/// Failure that carries its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn io(err: std::io::Error, path: &PathBuf) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("cannot write {}: {err}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::ParameterOutOfRange(_)
            | Error::DimensionMismatch(_)
            | Error::IndexOutOfRange(_)
            | Error::InvalidDistribution(_) => EXIT_USAGE,
            _ => EXIT_VERIFICATION,
        };
        Failure { code, message: err.to_string() }
    }
}

/// Fixed 12-significant-digit decimal rendering, so reruns are
/// byte-identical and diffs stay meaningful.
fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return format!("{:.11}", 0.0);
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let decimals = (11 - v.abs().log10().floor() as i64).max(0) as usize;
    format!("{v:.decimals$}")
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::io(e, path)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sweep_csv(rows: &[CapacitySample]) -> String {
    let mut text = String::from("d,x,C,C_E,ratio,eb\n");
    for row in rows {
        let ratio = row.ratio.map(fmt_sig).unwrap_or_default();
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            row.d,
            fmt_sig(row.x),
            fmt_sig(row.c),
            fmt_sig(row.c_e),
            ratio,
            row.eb
        );
    }
    text
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Capacity { d, x } => {
            let c = holevo_capacity_depolarizing(d, x)?;
            let c_e = ea_capacity_depolarizing(d, x)?;
            let threshold = d as f64 / (d as f64 + 1.0);
            println!("d = {d}, x = {}", fmt_sig(x));
            println!("C     = {}", fmt_sig(c));
            println!("C_E   = {}", fmt_sig(c_e));
            if c > RATE_FLOOR {
                println!("ratio = {}", fmt_sig(c_e / c));
            } else {
                println!("ratio = n/a (C below rate floor)");
            }
            println!("entanglement_breaking = {}", x >= threshold - 1e-12);
            Ok(())
        }
        Command::Sweep { d, x_min, x_max, steps, out, format, parallel } => {
            let rows = capacity_sweep(d, x_min, x_max, steps, parallel)?;
            let text = match format {
                Format::Csv => sweep_csv(&rows),
                Format::Json => {
                    let mut t = serde_json::to_string_pretty(&rows)
                        .expect("sweep rows always serialize");
                    t.push('\n');
                    t
                }
            };
            emit(&text, out.as_ref())
        }
        Command::Demo { name, d, x, q, seed, out } => {
            let report = run_demo(name, d, x, q, seed)?;
            let mut text = serde_json::to_string_pretty(&report)
                .expect("protocol reports always serialize");
            text.push('\n');
            emit(&text, out.as_ref())?;
            if report.discrepancy <= DEMO_TOL {
                Ok(())
            } else {
                Err(Failure {
                    code: EXIT_VERIFICATION,
                    message: format!(
                        "{}: discrepancy {:.3e} exceeds {DEMO_TOL:.0e}",
                        report.name, report.discrepancy
                    ),
                })
            }
        }
        Command::EbThreshold { d } => {
            let found = eb_threshold_scan(d)?;
            println!("d = {d}");
            println!("threshold_x = {}", fmt_sig(found));
            println!("closed_form = {}", fmt_sig(d as f64 / (d as f64 + 1.0)));
            Ok(())
        }
        Command::VerifyAll { d_max, parallel } => {
            let results = run_all(d_max, parallel)?;
            let mut failures = 0usize;
            for r in &results {
                let tag = if r.passed { "PASS" } else { "FAIL" };
                println!("{tag}  {:<42} {}", r.name, r.detail);
                if !r.passed {
                    failures += 1;
                }
            }
            println!("{} checks, {} failed", results.len(), failures);
            if failures == 0 {
                Ok(())
            } else {
                Err(Failure {
                    code: EXIT_VERIFICATION,
                    message: format!("{failures} verification checks failed"),
                })
            }
        }
    }
}

fn require(name: &str, value: Option<f64>, demo: &str) -> Result<f64, Failure> {
    value.ok_or_else(|| Failure::usage(format!("demo {demo} requires --{name}")))
}

fn run_demo(
    name: DemoName,
    d: usize,
    x: Option<f64>,
    q: Option<f64>,
    seed: u64,
) -> Result<ProtocolReport, Failure> {
    let report = match name {
        DemoName::Teleport => {
            let input = random_pure_state(d, seed)?;
            teleportation_demo(d, &input, seed)?
        }
        DemoName::Densecode => dense_coding_superadditivity_demo(d, require("x", x, "densecode")?)?,
        DemoName::Bobsolo => bob_solo_rate_demo(d, require("x", x, "bobsolo")?)?,
        DemoName::NoisyI => noisy_extension_i_demo(d, require("q", q, "noisy-i")?)?,
        DemoName::NoisyII => noisy_extension_ii_demo(d, require("q", q, "noisy-ii")?, seed)?,
        DemoName::Butterfly => butterfly_demo(d, require("x", x, "butterfly")?)?,
    };
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
