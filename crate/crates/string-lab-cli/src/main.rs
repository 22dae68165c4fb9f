mod config;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use string_lab::compat::{check_compatibility, initial_jet, CompatibilityReport};
use string_lab::dynamics::{simulate, ScenarioConfig};
use string_lab::io::{data_csv, read_data_csv, write_trajectory, OutputDir};
use string_lab::prep::{repair_data, RepairMode, RepairOptions};
use string_lab::Vec3;

use config::{RunConfig, Scenario};

const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Parser)]
#[command(name = "string-lab", version, about = "Hanging and whirling inextensible string simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its trajectory directory.
    Simulate {
        #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        builtin: Option<Scenario>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        n_cells: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the compatibility conditions of initial data, optionally repairing it.
    CheckData {
        path: PathBuf,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        repair: bool,
        #[arg(long, requires = "repair")]
        constrained: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_delimiter = ',', num_args = 3, allow_negative_numbers = true, default_values_t = [0.0, 0.0, -1.0])]
        gravity: Vec<f64>,
        /// Repaired data path; defaults to <stem>.repaired.csv beside the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a self-check suite and print a JSON summary.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Serialize)]
struct RunManifest<'a> {
    config: &'a RunConfig,
    resolved: &'a ScenarioConfig,
    version: &'static str,
    wall_time_s: f64,
    files: Vec<String>,
    exit_status: u8,
    status: &'static str,
    error: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Simulate { config, builtin, t_end, n_cells, out } => {
            cmd_simulate(config.as_deref(), builtin, t_end, n_cells, &out)
        }
        Command::CheckData { path, order, repair, constrained, tol, gravity, out } => {
            let mode = if constrained { RepairMode::Constrained } else { RepairMode::Free };
            let g = Vec3::new(gravity[0], gravity[1], gravity[2]);
            cmd_check_data(&path, order, repair.then_some(mode), tol, g, out)
        }
        Command::Verify { suite, jobs } => cmd_verify(&suite, jobs),
    };
    ExitCode::from(code)
}

fn cmd_simulate(
    path: Option<&Path>,
    builtin: Option<Scenario>,
    t_end: Option<f64>,
    n_cells: Option<usize>,
    out: &Path,
) -> u8 {
    let mut run = match (path, builtin) {
        (Some(p), _) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return 1;
            }
        },
        (None, Some(s)) => RunConfig::builtin(s),
        (None, None) => unreachable!("clap requires one source"),
    };
    run.t_end = t_end.or(run.t_end);
    run.n_cells = n_cells.or(run.n_cells);
    let prepared = run.scenario_config().and_then(|cfg| run.initial_state(&cfg).map(|st| (cfg, st)));
    let (cfg, initial) = match prepared {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let mut dir = match OutputDir::create(out) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {}: {e}", out.display());
            return 1;
        }
    };

    let start = Instant::now();
    let (record, cause) = match simulate(&cfg, &initial) {
        Ok(r) => (r, None),
        Err(abort) => (abort.record, Some(abort.cause.to_string())),
    };
    let mut exit = if cause.is_some() { 2 } else { 0 };
    let mut error = cause;
    if let Err(e) = write_trajectory(&mut dir, &record) {
        error.get_or_insert_with(|| e.to_string());
        exit = exit.max(1);
    }
    let wall = start.elapsed().as_secs_f64();

    if let Some(last) = record.last_state() {
        println!("snapshots: {}  steps: {}  t: {}", record.snapshots.len(), record.steps, last.t);
        if let Some(exact) = run.exact_state(&cfg, last.t) {
            let err = last.x.iter().zip(&exact.x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            println!("final position error: {err:.6e}");
        }
    }
    if let Some(e) = &error {
        eprintln!("error: {e}");
    }

    let mut files = dir.files().to_vec();
    files.push("manifest.json".into());
    let manifest = RunManifest {
        config: &run,
        resolved: &cfg,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: wall,
        files,
        exit_status: exit,
        status: match exit {
            0 => "ok",
            2 => "aborted",
            _ => "io-error",
        },
        error,
    };
    if let Err(e) = dir.write_json("manifest.json", &manifest) {
        eprintln!("error: {e}");
        return exit.max(1);
    }
    println!("wrote {}", dir.root().display());
    exit
}

fn print_report(report: &CompatibilityReport) {
    println!("{:>5}  {:>12}", "order", "residual");
    for (j, r) in report.residuals.iter().enumerate() {
        println!("{j:>5}  {r:>12.4e}");
    }
    match report.first_failure {
        None => println!("PASS"),
        Some((j, r)) => println!("FAIL order={j} residual={r:e}"),
    }
}

fn check(x0: &[Vec3], x1: &[Vec3], g: &Vec3, m: usize, tol: f64, grid: &string_lab::Grid) -> string_lab::Result<CompatibilityReport> {
    let jet = initial_jet(x0, x1, g, m, grid)?;
    check_compatibility(&jet, m - 1, tol)
}

fn cmd_check_data(path: &Path, m: usize, repair: Option<RepairMode>, tol: f64, g: Vec3, out: Option<PathBuf>) -> u8 {
    let (grid, x0, x1) = match read_data_csv(path) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return 1;
        }
    };
    if m < 2 {
        eprintln!("error: order must be at least 2");
        return 1;
    }
    let report = match check(&x0, &x1, &g, m, tol, &grid) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    print_report(&report);
    let Some(mode) = repair else {
        return if report.pass { 0 } else { 2 };
    };

    let options = RepairOptions { mode, tol, ..Default::default() };
    let fixed = match repair_data(&x0, &x1, &g, m, &grid, &options) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("repair failed: {e}");
            return 3;
        }
    };
    let out = out.unwrap_or_else(|| {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into());
        path.with_file_name(format!("{stem}.repaired.csv"))
    });
    let report_path = out.with_extension("json");
    let written = std::fs::write(&out, data_csv(&fixed.x0, &fixed.x1, &grid))
        .map_err(|e| e.to_string())
        .and_then(|_| serde_json::to_string_pretty(&fixed.report).map_err(|e| e.to_string()))
        .and_then(|json| std::fs::write(&report_path, json + "\n").map_err(|e| e.to_string()));
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 1;
    }
    println!(
        "repaired in {} Newton passes, correction norm {:.4e}",
        fixed.report.newton_iters, fixed.report.correction_norm
    );
    println!("wrote {} and {}", out.display(), report_path.display());

    let reread = read_data_csv(&out).map_err(|e| e.to_string());
    let recheck = reread.and_then(|(grid, x0, x1)| check(&x0, &x1, &g, m, tol, &grid).map_err(|e| e.to_string()));
    match recheck {
        Ok(r) => {
            println!("re-check:");
            print_report(&r);
            if r.pass {
                0
            } else {
                3
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn seed_from_env() -> Result<u64, String> {
    match std::env::var("STRING_LAB_SEED") {
        Err(_) => Ok(DEFAULT_SEED),
        Ok(v) => {
            let v = v.trim();
            let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
                Some(hex) => u64::from_str_radix(hex, 16),
                None => v.parse(),
            };
            parsed.map_err(|_| format!("STRING_LAB_SEED must be an unsigned integer, got {v:?}"))
        }
    }
}

fn cmd_verify(suite: &str, jobs: usize) -> u8 {
    let seed = match seed_from_env() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let Some(summary) = verify::run(suite, seed, jobs.max(1)) else {
        eprintln!("error: unknown suite {suite:?}; expected one of {}, all", verify::SUITES.join(", "));
        return 1;
    };
    match serde_json::to_string_pretty(&summary) {
        Ok(json) => println!("{json}"),
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    }
    if summary.pass {
        0
    } else {
        2
    }
}
