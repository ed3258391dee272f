//! Sweep expansion, run execution and CSV output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::adversary::wrap;
use crate::config::{ExperimentConfig, RunParams};
use crate::error::SimError;
use crate::metrics::RunMetrics;
use crate::rng;
use crate::scheduler::{build_policy, PolicyOptions, SchedulerKind};
use crate::sim::{SimOutcome, Simulation};
use crate::trace::{TraceRecord, TraceSink};
use crate::workload::{ArrivalSource, BenignWorkload};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub ordinal: usize,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    /// Sweep axis values of this run, in declaration order.
    pub axes: Vec<(String, String)>,
    pub params: RunParams,
}

#[derive(Debug, Clone)]
pub enum TraceMode {
    Off,
    Memory,
    /// One JSONL file per run inside this directory.
    Dir(PathBuf),
}

#[derive(Debug, Error)]
#[error("run {ordinal} (seed {seed}) failed: {source}")]
pub struct RunError {
    pub ordinal: usize,
    pub seed: u64,
    #[source]
    pub source: SimError,
}

#[derive(Debug, Clone)]
pub struct RunRow {
    pub ordinal: usize,
    pub scheduler: SchedulerKind,
    pub seed: u64,
    pub num_workers: usize,
    pub queue_limit: usize,
    pub intensity: f64,
    pub metrics: RunMetrics,
    /// Present only for [`TraceMode::Memory`].
    pub trace: Option<Vec<TraceRecord>>,
}

/// All runs of a config: sweep grid (outermost axis first), then scheduler,
/// then seed. Seeds are shifted by `seed_offset`.
pub fn expand(config: &ExperimentConfig, seed_offset: u64) -> Vec<RunSpec> {
    let mut specs = Vec::new();
    for (axes, params) in config.grid() {
        for &scheduler in &config.schedulers {
            for &seed in &config.seeds {
                specs.push(RunSpec {
                    ordinal: specs.len(),
                    scheduler,
                    seed: seed.wrapping_add(seed_offset),
                    axes: axes.clone(),
                    params: params.clone(),
                });
            }
        }
    }
    specs
}

pub fn trace_path(dir: &Path, ordinal: usize) -> PathBuf {
    dir.join(format!("run_{ordinal:05}.jsonl"))
}

pub fn simulate(spec: &RunSpec, sink: TraceSink) -> Result<SimOutcome, SimError> {
    let p = &spec.params;
    let benign = BenignWorkload::new(
        p.workload.clone(),
        p.service,
        rng::stream(spec.seed, rng::WORKLOAD),
        rng::stream(spec.seed, rng::SERVICE),
    );
    let source: Box<dyn ArrivalSource> = match &p.attack {
        Some(attack) => Box::new(
            wrap(benign, &p.workload, attack.clone(), rng::stream(spec.seed, rng::ATTACKER))
                .map_err(SimError::Consistency)?,
        ),
        None => Box::new(benign),
    };
    let policy = build_policy(
        spec.scheduler,
        p.num_workers(),
        PolicyOptions {
            recency_window: p.recency_window,
        },
        rng::stream(spec.seed, rng::SCHEDULER),
    );
    Simulation::new(p.platform.clone(), policy, source, p.workload.batch_size)
        .with_prewarm(p.prewarm.clone())
        .with_trace(sink)
        .run()
}

pub fn execute(spec: &RunSpec, trace: &TraceMode) -> Result<RunRow, RunError> {
    let fail = |source| RunError {
        ordinal: spec.ordinal,
        seed: spec.seed,
        source,
    };
    let sink = match trace {
        TraceMode::Off => TraceSink::Off,
        TraceMode::Memory => TraceSink::Memory(Vec::new()),
        TraceMode::Dir(dir) => TraceSink::file(&trace_path(dir, spec.ordinal)).map_err(|e| fail(e.into()))?,
    };
    let outcome = simulate(spec, sink).map_err(fail)?;
    Ok(RunRow {
        ordinal: spec.ordinal,
        scheduler: spec.scheduler,
        seed: spec.seed,
        num_workers: spec.params.num_workers(),
        queue_limit: spec.params.platform.queue_limit,
        intensity: spec.params.intensity(),
        metrics: outcome.metrics,
        trace: outcome.trace,
    })
}

/// Executes every spec, on `jobs` threads when `jobs > 1`. Rows come back in
/// spec order either way.
pub fn execute_all(specs: &[RunSpec], jobs: usize, trace: &TraceMode) -> Result<Vec<RunRow>, RunError> {
    if jobs <= 1 {
        return specs.iter().map(|s| execute(s, trace)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| specs.par_iter().map(|s| execute(s, trace)).collect())
}

pub const CSV_COLUMNS: [&str; 23] = [
    "run_id",
    "scheduler",
    "seed",
    "num_workers",
    "queue_limit",
    "intensity",
    "cold_starts",
    "warm_starts",
    "coloc_count",
    "coloc_probability",
    "time_to_first_coloc",
    "total_arrivals",
    "total_drops",
    "victim_arrivals",
    "victim_drops",
    "victim_drop_rate",
    "victim_mean_latency",
    "victim_p95_latency",
    "victim_cold_start_rate",
    "attacker_arrivals",
    "attacker_drops",
    "attacker_drop_rate",
    "flags",
];

/// `%g`-style rendering with 6 significant digits.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn flags(m: &RunMetrics) -> String {
    let mut f = Vec::new();
    if m.victim_arrivals == 0 {
        f.push("no_victim_arrivals");
    }
    if m.victim_latency_empty {
        f.push("no_victim_latency");
    }
    f.join(";")
}

pub fn csv_row(row: &RunRow) -> String {
    let m = &row.metrics;
    let fields = [
        row.ordinal.to_string(),
        row.scheduler.to_string(),
        row.seed.to_string(),
        row.num_workers.to_string(),
        row.queue_limit.to_string(),
        format_number(row.intensity),
        m.cold_starts.to_string(),
        m.warm_starts.to_string(),
        m.coloc_count.to_string(),
        format_number(m.coloc_probability()),
        m.time_to_first_coloc.map(format_number).unwrap_or_default(),
        m.total_arrivals.to_string(),
        m.total_drops.to_string(),
        m.victim_arrivals.to_string(),
        m.victim_drops.to_string(),
        format_number(m.victim_drop_rate),
        format_number(m.victim_mean_latency),
        format_number(m.victim_p95_latency),
        format_number(m.victim_cold_start_rate()),
        m.attacker_arrivals.to_string(),
        m.attacker_drops.to_string(),
        format_number(m.attacker_drop_rate),
        flags(m),
    ];
    fields.join(",")
}

pub fn csv_string(rows: &[RunRow]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        writeln!(out, "{}", csv_row(row)).expect("string write");
    }
    out
}

pub fn write_csv(rows: &[RunRow], path: &Path) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, csv_string(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(5.0), "5");
        assert_eq!(format_number(0.25), "0.25");
        assert_eq!(format_number(1.0 / 3.0), "0.333333");
        assert_eq!(format_number(123456.7), "123457");
        assert_eq!(format_number(1234567.0), "1.23457e+06");
        assert_eq!(format_number(0.000012345678), "1.23457e-05");
        assert_eq!(format_number(0.0001), "0.0001");
        assert_eq!(format_number(999999.5), "1e+06");
        assert_eq!(format_number(-2.5), "-2.5");
    }

    #[test]
    fn header_only_for_no_rows() {
        let s = csv_string(&[]);
        assert_eq!(s.lines().count(), 1);
        assert!(s.starts_with("run_id,scheduler,seed,num_workers,queue_limit,intensity,"));
    }
}
