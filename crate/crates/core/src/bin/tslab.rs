use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tslab::runner::{run, run_batch};
use tslab::scenario::{explain, Scenario, ScenarioKind};
use tslab::verify::run_suite;
use tslab::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "tslab", version, about = "Observability, control and damping experiments on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for randomized runs; overrides `seed` in the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: runs/<config stem>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Dotted-key override, e.g. `numerics.horizon=2.0`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run several scenarios in a worker pool, one subdirectory each.
    Sweep {
        /// Scenario files; repeatable.
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        /// Vary one key over comma-separated values, e.g. `numerics.horizon=0.5,1,2`.
        #[arg(long, value_name = "KEY=V1,V2,...")]
        vary: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the default scenario for a kind.
    Explain {
        /// observability | control | damp | zygmund | ingham | density | directions
        kind: Option<String>,
    },
    /// Re-run the acceptance suite.
    Verify {
        /// Only checks whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_config() || matches!(e, Error::Io(_)) {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

fn set_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))?;
    }
    Ok(())
}

fn with_seed(common: &Common) -> Vec<String> {
    let mut o = common.overrides.clone();
    if let Some(s) = common.seed {
        o.push(format!("seed={s}"));
    }
    o
}

fn default_out(config: &Path) -> PathBuf {
    let stem = config.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
    PathBuf::from("runs").join(stem)
}

/// Splits `a,[b,c],d` at top-level commas.
fn split_values(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    let (mut depth, mut cur) = (0i32, String::new());
    for ch in raw.chars() {
        match ch {
            '[' | '{' => depth += 1,
            ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur);
    out
}

fn cmd_run(config: &Path, common: &Common) -> Result<(), Error> {
    set_threads(common.threads)?;
    let scenario = Scenario::load(config, &with_seed(common))?;
    let out = common.out.clone().unwrap_or_else(|| default_out(config));
    let summary = run(&scenario, &out)?;
    println!("{} -> {}", scenario.kind.name(), summary.dir.display());
    for f in &summary.files {
        println!("  {f}");
    }
    Ok(())
}

fn cmd_sweep(configs: &[PathBuf], vary: Option<&str>, common: &Common) -> Result<bool, Error> {
    set_threads(common.threads)?;
    let base = with_seed(common);
    let variants: Vec<Vec<String>> = match vary {
        None => vec![Vec::new()],
        Some(v) => {
            let (key, values) = v
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--vary '{v}' is not of the form key=v1,v2,...")))?;
            split_values(values).into_iter().map(|x| vec![format!("{key}={x}")]).collect()
        }
    };
    let mut scenarios = Vec::new();
    for c in configs {
        for extra in &variants {
            let mut o = base.clone();
            o.extend(extra.iter().cloned());
            scenarios.push(Scenario::load(c, &o)?);
        }
    }
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("runs").join("sweep"));
    let mut ok = true;
    for (dir, r) in run_batch(&scenarios, &out) {
        match r {
            Ok(_) => println!("ok     {}", dir.display()),
            Err(e) => {
                ok = false;
                println!("failed {}: {e}", dir.display());
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, common } => cmd_run(config, common).map(|_| true),
        Command::Sweep { config, vary, common } => cmd_sweep(config, vary.as_deref(), common),
        Command::Explain { kind } => match kind.as_deref() {
            None => {
                print!("{}", explain(ScenarioKind::Observability));
                Ok(true)
            }
            Some(k) => match ScenarioKind::parse(k) {
                Some(kind) => {
                    print!("{}", explain(kind));
                    Ok(true)
                }
                None => Err(Error::Config(format!("unknown scenario kind '{k}'"))),
            },
        },
        Command::Verify { filter, threads } => set_threads(*threads).map(|_| {
            let checks = run_suite(filter.as_deref(), |c| println!("{c}"));
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", checks.len());
            failed == 0
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NUMERICAL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
