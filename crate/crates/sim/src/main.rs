use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arena_sim::plot::plot_all;
use arena_sim::record::{read_csv, write_csv, Record};
use arena_sim::selftest::run_selftest;
use arena_sim::sweep::{render_summary, summarize};
use arena_sim::{run_scenario, sweep, Backend, HarnessError, Model, ScenarioConfig};
use clap::{Parser, Subcommand};

/// Discrete-event simulator for task tokens on a ring of CGRA nodes.
#[derive(Parser)]
#[command(name = "arena", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write its CSV row.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a scenario over node counts, models and backends.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
        nodes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "arena,bsp")]
        models: Vec<Model>,
        #[arg(long, value_delimiter = ',', default_value = "cgra")]
        backends: Vec<Backend>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Summarize and plot every CSV in a directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run one scenario and compare it against the serial oracle.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn save(dir: &Path, name: &str, records: &[Record]) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let path = dir.join(name);
    let f = std::fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
    write_csv(f, records)?;
    Ok(path)
}

fn stem(cfg: &ScenarioConfig) -> String {
    format!("{}_{}_s{}", cfg.kernel, cfg.size, cfg.seed)
}

fn run(cmd: Cmd) -> Result<(), HarnessError> {
    match cmd {
        Cmd::Run { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let rep = run_scenario(&cfg)?;
            let r = &rep.record;
            let path =
                save(&out, &format!("{}_{}_n{}.csv", stem(&cfg), cfg.model, cfg.nodes), std::slice::from_ref(r))?;
            println!(
                "{} {} n={} cycles={} speedup={:.3} bytes={} oracle={}",
                r.kernel,
                r.model,
                r.nodes,
                r.total_cycles,
                r.speedup,
                r.total_bytes,
                if r.oracle_ok { "ok" } else { "MISMATCH" }
            );
            println!("wrote {}", path.display());
            if !r.oracle_ok {
                return Err(HarnessError::OracleMismatch(r.digest.clone()));
            }
        }
        Cmd::Sweep { config, nodes, models, backends, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let rows = sweep(&cfg, &nodes, &models, &backends)?;
            let path = save(&out, &format!("{}.csv", stem(&cfg)), &rows)?;
            print!("{}", render_summary(&summarize(&rows)));
            println!("wrote {}", path.display());
            if let Some(bad) = rows.iter().find(|r| !r.oracle_ok) {
                return Err(HarnessError::OracleMismatch(format!("{} {} n={}", bad.kernel, bad.model, bad.nodes)));
            }
        }
        Cmd::Report { input } => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(&input)
                .map_err(|e| HarnessError::io(&input, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            files.sort();
            let mut rows = Vec::new();
            for f in &files {
                let file = std::fs::File::open(f).map_err(|e| HarnessError::io(f, e))?;
                rows.extend(read_csv(file)?);
            }
            print!("{}", render_summary(&summarize(&rows)));
            for p in plot_all(&rows, &input)? {
                println!("wrote {}", p.display());
            }
        }
        Cmd::Verify { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let rep = run_scenario(&cfg)?;
            if !rep.record.oracle_ok {
                return Err(HarnessError::OracleMismatch(format!(
                    "got {} want {}",
                    rep.record.digest,
                    rep.oracle.result.digest()
                )));
            }
            println!("ok {}", rep.record.digest);
        }
        Cmd::Selftest => {
            let checks = run_selftest();
            let failed: Vec<_> = checks.iter().filter(|c| !c.ok).collect();
            for c in &checks {
                println!("{} {} {}", if c.ok { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if !failed.is_empty() {
                return Err(HarnessError::OracleMismatch(format!("{} checks failed", failed.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("ARENA_LOG")).init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
