//! contacton: scenario-driven runner for the contact workbench.
//!
//! `contacton run <configs...>` executes each JSON config, writes
//! report.json plus plot CSVs and solution dumps into one directory per
//! config, and exits 0 only when every check in every report passed.

mod config;
mod csv;
mod report;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ScenarioConfig, SCENARIOS};

#[derive(Parser)]
#[command(name = "contacton", about = "contact workbench scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario configs and write their reports.
    Run {
        /// JSON config files, one scenario each.
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Base directory for run outputs (used when a config does not
        /// set out_dir); each run gets <out>/<config-stem>/.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Fan independent configs out over this many parallel worker
        /// processes.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Per-check console output and timing.
        #[arg(long)]
        verbose: bool,
    },
    /// List the registered scenarios.
    ListScenarios,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::ListScenarios => {
            for (name, what) in SCENARIOS {
                println!("{name:18} {what}");
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            configs,
            out,
            jobs,
            verbose,
        } => {
            let all_pass = if jobs > 1 && configs.len() > 1 {
                run_in_processes(&configs, &out, jobs, verbose)
            } else {
                configs
                    .iter()
                    .map(|path| run_one(path, &out, verbose))
                    .fold(true, |acc, ok| acc && ok)
            };
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

/// Runs a single config in this process; prints a one-line outcome.
fn run_one(path: &Path, out_base: &Path, verbose: bool) -> bool {
    let started = std::time::Instant::now();
    let cfg = match ScenarioConfig::from_file(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return false;
        }
    };
    let dir = run_dir(&cfg, path, out_base);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("{}: cannot create {}: {e}", path.display(), dir.display());
        return false;
    }
    if verbose {
        println!("{}: scenario {} -> {}", path.display(), cfg.scenario, dir.display());
    }
    match scenarios::run(&cfg, &dir, verbose) {
        Ok(report) => {
            if let Err(e) = report.write(&dir) {
                eprintln!("{}: cannot write report: {e}", path.display());
                return false;
            }
            let passed = report.checks.iter().filter(|c| c.pass).count();
            println!(
                "{}: {} {} ({passed}/{} checks) -> {}",
                path.display(),
                cfg.scenario,
                if report.pass { "PASS" } else { "FAIL" },
                report.checks.len(),
                dir.display()
            );
            if verbose {
                for c in report.checks.iter().filter(|c| !c.pass) {
                    println!("  failed: {} = {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
                }
                println!("  {:.2}s", started.elapsed().as_secs_f64());
            }
            report.pass
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            false
        }
    }
}

/// Output directory for one run: the config's own out_dir when set,
/// otherwise <out_base>/<config file stem>.
fn run_dir(cfg: &ScenarioConfig, path: &Path, out_base: &Path) -> PathBuf {
    match &cfg.out_dir {
        Some(dir) => PathBuf::from(dir),
        None => {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| cfg.scenario.clone());
            out_base.join(stem)
        }
    }
}

/// Fans configs out over worker processes, at most `jobs` at a time.
/// Each worker is this same binary running one config; outputs are
/// reprinted in submission order once workers finish.
fn run_in_processes(configs: &[PathBuf], out: &Path, jobs: usize, verbose: bool) -> bool {
    let exe = match std::env::current_exe() {
        Ok(exe) => exe,
        Err(e) => {
            eprintln!("cannot locate own executable: {e}");
            return false;
        }
    };
    let mut all_pass = true;
    for batch in configs.chunks(jobs) {
        let children: Vec<_> = batch
            .iter()
            .map(|path| {
                let mut cmd = std::process::Command::new(&exe);
                cmd.arg("run")
                    .arg(path)
                    .arg("--out")
                    .arg(out)
                    .stdout(std::process::Stdio::piped())
                    .stderr(std::process::Stdio::piped());
                if verbose {
                    cmd.arg("--verbose");
                }
                (path, cmd.spawn())
            })
            .collect();
        for (path, child) in children {
            let outcome = child.and_then(|c| c.wait_with_output());
            match outcome {
                Ok(output) => {
                    print!("{}", String::from_utf8_lossy(&output.stdout));
                    eprint!("{}", String::from_utf8_lossy(&output.stderr));
                    all_pass &= output.status.success();
                }
                Err(e) => {
                    eprintln!("{}: worker failed: {e}", path.display());
                    all_pass = false;
                }
            }
        }
    }
    all_pass
}
