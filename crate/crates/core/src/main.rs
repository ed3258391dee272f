use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use clap::{Parser, Subcommand};

use faas_sim::runner::{csv_string, write_csv};
use faas_sim::{execute_all, expand, parse_config, TraceMode};

#[derive(Parser)]
#[command(name = "faas-sim", version, about = "Serverless multi-tenancy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute every run of a config and write one CSV row per run.
    Run {
        config: PathBuf,
        /// CSV destination; overrides `output` in the config. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a JSONL trace per run into the config's `trace_dir`.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Added to every seed of the config.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Run the shipped case-study configs and plot them if the plotting
    /// scripts are available.
    Reproduce {
        #[arg(long, default_value = "configs")]
        configs: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        match self {
            Failure::Config(m) => {
                eprintln!("error: {m}");
                ExitCode::from(1)
            }
            Failure::Runtime(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
        }
    }
}

/// Runs one config. The CSV goes to `out`, else the config's `output`, else
/// `fallback`, else stdout.
fn run_config(
    path: &Path,
    out: Option<PathBuf>,
    fallback: Option<PathBuf>,
    trace: bool,
    jobs: usize,
    seed_offset: u64,
) -> Result<Option<PathBuf>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let config = parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let specs = expand(&config, seed_offset);
    let mode = if trace || config.trace {
        TraceMode::Dir(config.trace_dir.clone())
    } else {
        TraceMode::Off
    };
    let rows = execute_all(&specs, jobs, &mode).map_err(|e| Failure::Runtime(e.to_string()))?;
    match out.or(config.output.clone()).or(fallback) {
        Some(dest) => {
            write_csv(&rows, &dest).map_err(|e| Failure::Config(format!("cannot write {}: {e}", dest.display())))?;
            eprintln!("{} runs -> {}", rows.len(), dest.display());
            Ok(Some(dest))
        }
        None => {
            print!("{}", csv_string(&rows));
            Ok(None)
        }
    }
}

fn plot(script: &Path, args: &[&Path]) {
    if !script.exists() {
        eprintln!("plotting skipped: {} not found", script.display());
        return;
    }
    match Command::new("python3").arg(script).args(args).status() {
        Ok(s) if s.success() => {}
        Ok(s) => eprintln!("plotting with {} exited with {s}", script.display()),
        Err(e) => eprintln!("plotting with {} failed: {e}", script.display()),
    }
}

fn reproduce(dir: &Path, jobs: usize) -> Result<(), Failure> {
    let names = ["case_study_A", "case_study_B1", "case_study_B2", "case_study_B3"];
    let mut outputs = Vec::new();
    for name in names {
        let cfg = dir.join(format!("{name}.cfg"));
        let fallback = PathBuf::from(format!("results/{name}_result.csv"));
        let out = run_config(&cfg, None, Some(fallback), false, jobs, 0)?.expect("destination");
        outputs.push(out);
    }
    let figures = Path::new("figs");
    if Path::new("plots").is_dir() {
        std::fs::create_dir_all(figures).map_err(|e| Failure::Config(format!("cannot create figs/: {e}")))?;
    }
    plot(Path::new("plots/plot_case_a.py"), &[&outputs[0], &figures.join("case_study_A.png")]);
    let axes = ["intensity", "queue_limit", "num_workers"];
    for (i, axis) in axes.iter().enumerate() {
        let out = figures.join(format!("{}.png", names[i + 1]));
        plot(Path::new("plots/plot_sweep.py"), &[&outputs[i + 1], Path::new(axis), &out]);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run {
            config,
            out,
            trace,
            jobs,
            seed_offset,
        } => run_config(&config, out, None, trace, jobs, seed_offset).map(|_| ()),
        Cmd::Reproduce { configs, jobs } => reproduce(&configs, jobs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
