//! `torus-rot`: run experiment configs, the topology selftest, and fixture
//! regeneration.
//!
//! Exit codes: `0` success, `1` failed check or I/O error, `2` violated
//! numerical precondition, `3` bad config or usage.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use torus_rot::experiment::{self, ExperimentConfig};
use torus_rot::selftest::{self, Fixtures};
use torus_rot::Error;

#[derive(Parser)]
#[command(name = "torus-rot", version, about = "Rotation theory experiments for torus homeomorphisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its report and artifacts.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's out_dir, else ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Record wall time in the report (outputs are then not reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Oracle-equivalence and lemma checks on the reference fixtures.
    Selftest {
        /// Fixture directory (default: the fixtures built into the binary).
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write selftest.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare or regenerate the reference fixtures from the naive oracles.
    Fixtures {
        #[arg(long)]
        regen: bool,
        #[arg(long, default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures"))]
        dir: PathBuf,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn report_error(e: &Error) {
    let kind = match e {
        Error::Config(_) | Error::Json(_) => "config error",
        e if e.is_precondition() => "precondition failed",
        _ => "error",
    };
    eprintln!("torus-rot: {kind}: {e}");
}

fn run(config: &Path, out: Option<PathBuf>, seed: Option<u64>, timing: bool) -> ExitCode {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("torus-rot: config error: cannot read {}: {e}", config.display());
            return code(3);
        }
    };
    let mut cfg = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            report_error(&e);
            return code(3);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let t0 = Instant::now();
    let result = experiment::run(&cfg);
    let status = experiment::exit_code(&result);
    match result {
        Ok(mut o) => {
            if timing {
                o.report.timing_ms = Some(t0.elapsed().as_millis() as u64);
            }
            if let Err(e) = o.write(&dir) {
                report_error(&e);
                return code(1);
            }
            if let Some(msg) = &o.failed {
                eprintln!("torus-rot: check failed: {msg}");
            }
            println!("wrote {}", dir.join("report.json").display());
        }
        Err(e) => report_error(&e),
    }
    code(status)
}

fn selftest(fixtures: Option<PathBuf>, seed: u64, out: Option<PathBuf>) -> ExitCode {
    let fx = match &fixtures {
        Some(d) => Fixtures::load(d),
        None => Fixtures::embedded(),
    };
    let fx = match fx {
        Ok(f) => f,
        Err(e) => {
            eprintln!("torus-rot: selftest: cannot load fixtures: {e}");
            return code(1);
        }
    };
    let report = selftest::run_selftest(&fx, seed);
    for c in &report.checks {
        println!("{} {} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(dir) = out {
        let written = std::fs::create_dir_all(&dir).and_then(|_| {
            let text = serde_json::to_string_pretty(&report).map_err(std::io::Error::other)? + "\n";
            std::fs::write(dir.join("selftest.json"), text)
        });
        if let Err(e) = written {
            eprintln!("torus-rot: selftest: {e}");
            return code(1);
        }
    }
    match report.first_failure() {
        Some(c) => {
            eprintln!("torus-rot: selftest failed at {}: {}", c.name, c.detail);
            code(1)
        }
        None => code(0),
    }
}

fn fixtures(regen: bool, dir: &Path) -> ExitCode {
    let fresh = selftest::regenerate();
    if regen {
        return match fresh.write(dir) {
            Ok(()) => {
                println!("wrote {} files to {}", fresh.files.len() + 1, dir.display());
                code(0)
            }
            Err(e) => {
                eprintln!("torus-rot: fixtures: {e}");
                code(1)
            }
        };
    }
    match Fixtures::load(dir) {
        Ok(f) if f == fresh => {
            println!("fixtures in {} are up to date", dir.display());
            code(0)
        }
        Ok(_) => {
            eprintln!("torus-rot: fixtures in {} differ from the oracles; rerun with --regen", dir.display());
            code(1)
        }
        Err(e) => {
            eprintln!("torus-rot: fixtures: {e}");
            code(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return code(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match cli.command {
        Command::Run { config, out, seed, timing } => run(&config, out, seed, timing),
        Command::Selftest { fixtures, seed, out } => selftest(fixtures, seed, out),
        Command::Fixtures { regen, dir } => fixtures(regen, &dir),
    }
}
