use std::path::PathBuf;

use faas_sim::runner::{csv_string, execute_all};
use faas_sim::trace::replay;
use faas_sim::{expand, parse_config, ExperimentConfig, RunRow, SchedulerKind, TraceMode};

const SMALL: &str = "\
platform.num_workers = 12
platform.cpu = 4
platform.memory = 4
platform.idle_timeout = 20
platform.cold_start_latency = 2
platform.queue_limit = 2
workload.rate = 3
workload.total = 600
workload.tenants = 6
workload.functions_per_tenant = 3
service.mean = 4
attack.enabled = true
attack.intensity = 3
";

/// The small base config plus `extra`, minus any base key `extra` sweeps.
fn small(extra: &str) -> ExperimentConfig {
    let swept: Vec<&str> = extra
        .lines()
        .filter_map(|l| l.strip_prefix("sweep."))
        .filter_map(|l| l.split('=').next())
        .map(str::trim)
        .collect();
    let base: String = SMALL
        .lines()
        .filter(|l| !swept.iter().any(|k| l.split('=').next().unwrap().trim() == *k))
        .map(|l| format!("{l}\n"))
        .collect();
    parse_config(&format!("{base}{extra}")).unwrap()
}

fn run_all(cfg: &ExperimentConfig, jobs: usize) -> Vec<RunRow> {
    execute_all(&expand(cfg, 0), jobs, &TraceMode::Off).unwrap()
}

fn shipped(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    parse_config(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn shipped_configs_expand_to_expected_run_counts() {
    assert_eq!(expand(&shipped("case_study_A.cfg"), 0).len(), 80);
    assert_eq!(expand(&shipped("case_study_A_desk.cfg"), 0).len(), 80);
    assert_eq!(expand(&shipped("case_study_B1.cfg"), 0).len(), 360);
    assert_eq!(expand(&shipped("case_study_B2.cfg"), 0).len(), 180);
    assert_eq!(expand(&shipped("case_study_B3.cfg"), 0).len(), 100);
    assert_eq!(expand(&shipped("mm1k.cfg"), 0).len(), 20);
}

#[test]
fn expansion_order_is_grid_then_scheduler_then_seed() {
    let cfg = small("scheduler = random, helper\nseeds = 0..2\nsweep.platform.queue_limit = 0, 5\n");
    let specs = expand(&cfg, 10);
    let got: Vec<(usize, SchedulerKind, u64)> = specs
        .iter()
        .map(|s| (s.params.platform.queue_limit, s.scheduler, s.seed))
        .collect();
    use SchedulerKind::*;
    assert_eq!(
        got,
        vec![
            (0, Random, 10),
            (0, Random, 11),
            (0, Helper, 10),
            (0, Helper, 11),
            (5, Random, 10),
            (5, Random, 11),
            (5, Helper, 10),
            (5, Helper, 11),
        ]
    );
    assert!(specs.iter().enumerate().all(|(i, s)| s.ordinal == i));
}

#[test]
fn same_seed_same_csv() {
    let cfg = small("scheduler = random, doubledip, helper, openwhisk\nseeds = 0..3\n");
    assert_eq!(csv_string(&run_all(&cfg, 1)), csv_string(&run_all(&cfg, 1)));
}

#[test]
fn parallel_matches_serial() {
    let cfg = small("scheduler = random, doubledip, helper, openwhisk\nseeds = 0..3\n");
    assert_eq!(csv_string(&run_all(&cfg, 1)), csv_string(&run_all(&cfg, 3)));
}

#[test]
fn sweep_point_matches_standalone_run() {
    let swept = run_all(&small("scheduler = helper\nseeds = 4\nsweep.attack.intensity = 1, 3, 5\n"), 1);
    let mut alone = run_all(&small("scheduler = helper\nseeds = 4\n"), 1);
    let point = swept.iter().find(|r| r.intensity == 3.0).unwrap();
    let alone = alone.remove(0);
    assert_eq!(point.metrics, alone.metrics);
}

#[test]
fn zero_intensity_has_no_attackers() {
    let rows = run_all(&small("scheduler = random, helper\nseeds = 0..2\nsweep.attack.intensity = 0\n"), 1);
    assert!(rows.iter().all(|r| r.metrics.attacker_arrivals == 0 && r.metrics.coloc_count == 0));
    assert!(rows.iter().all(|r| r.metrics.victim_arrivals > 0));
}

#[test]
fn seed_offset_shifts_every_seed() {
    let cfg = small("scheduler = random\nseeds = 3, 5\n");
    let seeds: Vec<u64> = expand(&cfg, 100).iter().map(|s| s.seed).collect();
    assert_eq!(seeds, vec![103, 105]);
    let shifted = execute_all(&expand(&cfg, 100), 1, &TraceMode::Off).unwrap();
    let direct = run_all(&small("scheduler = random\nseeds = 103, 105\n"), 1);
    assert_eq!(
        shifted.iter().map(|r| &r.metrics).collect::<Vec<_>>(),
        direct.iter().map(|r| &r.metrics).collect::<Vec<_>>()
    );
}

#[test]
fn different_seeds_differ() {
    let rows = run_all(&small("scheduler = random\nseeds = 0, 1\n"), 1);
    assert_ne!(rows[0].metrics, rows[1].metrics);
}

#[test]
fn memory_trace_replays_to_collector_metrics() {
    let cfg = small("scheduler = random, doubledip, helper, openwhisk\nseeds = 0..2\n");
    let rows = execute_all(&expand(&cfg, 0), 1, &TraceMode::Memory).unwrap();
    for row in rows {
        let trace = row.trace.as_ref().unwrap();
        assert_eq!(replay(trace).unwrap(), row.metrics, "run {}", row.ordinal);
    }
}

#[test]
fn tracing_does_not_change_results() {
    let cfg = small("scheduler = random, doubledip, helper, openwhisk\nseeds = 0..2\n");
    let dir = tempfile::tempdir().unwrap();
    let on = execute_all(&expand(&cfg, 0), 1, &TraceMode::Dir(dir.path().to_path_buf())).unwrap();
    assert_eq!(csv_string(&on), csv_string(&run_all(&cfg, 1)));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), on.len());
}

#[test]
fn csv_has_one_row_per_run_and_fixed_header() {
    let rows = run_all(&small("scheduler = helper\nseeds = 0..3\n"), 1);
    let csv = csv_string(&rows);
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 23);
    assert!(header.ends_with("attacker_drops,attacker_drop_rate,flags"));
    assert!(lines.all(|l| l.split(',').count() == 23));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn full_scale_case_a_run_drains_every_event() {
    let cfg = shipped("case_study_A.cfg");
    let spec = expand(&cfg, 0).remove(0);
    let out = faas_sim::runner::simulate(&spec, faas_sim::trace::TraceSink::Off).unwrap();
    let m = &out.metrics;
    assert!(out.report.drained);
    assert_eq!(m.total_arrivals, 20_000 + m.attacker_arrivals);
    // Arrival, execution start and completion per admitted invocation, an
    // arrival per drop, plus reclaims.
    assert!(out.report.events_processed >= 3 * m.total_completions + m.total_drops);
    assert!(out.report.events_processed >= 3 * 20_000);
}
