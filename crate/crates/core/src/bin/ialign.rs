use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;

use ialign::harness::{self, FeasibilitySpec, ResultTable, ScenarioSpec};

#[derive(Parser)]
#[command(name = "ialign", version, about = "Interference alignment experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo sweep of one algorithm over a power grid.
    Run(RunArgs),
    /// Interference fraction per stream allocation.
    Feasibility(RunArgs),
    /// Two-slot relay sweep over three single-antenna pairs.
    Relay(RunArgs),
    /// Core invariants on small random instances.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    spec: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the CSV to standard output.
    #[arg(long)]
    stdout: bool,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

enum Sink {
    Stdout,
    File(PathBuf),
}

fn sink(args: &RunArgs, spec_out: &Option<PathBuf>) -> anyhow::Result<Sink> {
    if args.stdout {
        return Ok(Sink::Stdout);
    }
    match args.out.clone().or_else(|| spec_out.clone()) {
        Some(p) => Ok(Sink::File(p)),
        None => bail!("no output path: pass --out, --stdout or set output_path"),
    }
}

fn write_with(sink: &Sink, f: impl FnOnce(&mut dyn Write) -> ialign::Result<()>) -> anyhow::Result<()> {
    match sink {
        Sink::Stdout => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
        }
        Sink::File(path) => {
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = std::io::BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
            info!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn pool(threads: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

fn load_scenario(args: &RunArgs) -> anyhow::Result<ScenarioSpec> {
    let mut spec = ScenarioSpec::load(&args.spec).with_context(|| format!("loading {}", args.spec.display()))?;
    if let Some(s) = args.seed {
        spec.base_seed = s;
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    spec.validate()?;
    Ok(spec)
}

fn report(table: &ResultTable) {
    for s in harness::summarize(table) {
        info!(
            "{:>6.1} dB  mean sum rate {:.4}  median {:.4}  ({} used, {} excluded)",
            s.p_db, s.mean_sum_rate, s.median_sum_rate, s.included, s.excluded
        );
    }
    let grid: Vec<f64> = harness::summarize(table).iter().map(|s| s.p_db).collect();
    if grid.len() >= 2 {
        let (a, b) = (grid[grid.len() - 2], grid[grid.len() - 1]);
        if let Ok(slope) = harness::slope_between(table, a, b) {
            info!("slope over {a}..{b} dB: {slope:.4}");
        }
    }
}

fn sweep(args: &RunArgs, relay: bool) -> anyhow::Result<()> {
    let spec = load_scenario(args)?;
    let sink = sink(args, &spec.output_path)?;
    info!("{}: {} trials x {} power points", spec.name, spec.trials, spec.power_grid_db.len());
    let table =
        pool(args.threads)?.install(
            || {
                if relay {
                    harness::relay_sweep(&spec)
                } else {
                    harness::run_scenario(&spec)
                }
            },
        )?;
    report(&table);
    write_with(&sink, |w| harness::write_csv(&table, w))
}

fn feasibility(args: &RunArgs) -> anyhow::Result<()> {
    let mut spec = FeasibilitySpec::load(&args.spec).with_context(|| format!("loading {}", args.spec.display()))?;
    if let Some(s) = args.seed {
        spec.base_seed = s;
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    spec.validate()?;
    let sink = sink(args, &spec.output_path)?;
    let rows = pool(args.threads)?.install(|| harness::feasibility_table(&spec))?;
    for r in &rows {
        info!("{:?}: {} streams, median p {:.3e}, mean p {:.3e}", r.allocation, r.total_streams, r.median_p, r.mean_p);
    }
    write_with(&sink, |w| harness::write_feasibility_csv(&rows, w))
}

fn selftest(seed: u64, trials: usize) -> anyhow::Result<()> {
    let checks = harness::selftest(seed, trials);
    let mut failed = 0;
    for c in &checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        bail!("{failed} of {} checks failed", checks.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => sweep(a, false),
        Command::Relay(a) => sweep(a, true),
        Command::Feasibility(a) => feasibility(a),
        Command::Selftest { seed, trials } => selftest(*seed, *trials),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
