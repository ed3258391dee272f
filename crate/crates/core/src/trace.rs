//! Fine-grained event trace and an independent replay of run metrics.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::EventKind;
use crate::metrics::{ratio, RunMetrics};
use crate::model::{ContainerId, InvocationId, Role, WorkerId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceOutcome {
    Warm,
    Cold,
    Enqueued,
    Dropped,
    Completed,
    Reclaimed,
}

/// One line of the trace. `event` is the kind of the dispatched engine event
/// the record was produced under: an `arrival` record carries the admission
/// outcome, an `execution_start` record the start kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time: f64,
    pub event: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invocation: Option<InvocationId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worker: Option<WorkerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<ContainerId>,
    pub outcome: TraceOutcome,
    /// New attacker-victim overlaps created by this execution start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlaps: Option<u64>,
}

pub enum TraceSink {
    Off,
    Memory(Vec<TraceRecord>),
    File(BufWriter<File>),
}

impl TraceSink {
    pub fn file(path: &Path) -> std::io::Result<TraceSink> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        Ok(TraceSink::File(BufWriter::new(File::create(path)?)))
    }

    pub fn is_on(&self) -> bool {
        !matches!(self, TraceSink::Off)
    }

    pub fn record(&mut self, rec: TraceRecord) -> std::io::Result<()> {
        match self {
            TraceSink::Off => Ok(()),
            TraceSink::Memory(v) => {
                v.push(rec);
                Ok(())
            }
            TraceSink::File(w) => {
                serde_json::to_writer(&mut *w, &rec)?;
                w.write_all(b"\n")
            }
        }
    }

    pub fn finish(&mut self) -> std::io::Result<()> {
        match self {
            TraceSink::File(w) => w.flush(),
            _ => Ok(()),
        }
    }

    pub fn into_records(self) -> Option<Vec<TraceRecord>> {
        match self {
            TraceSink::Memory(v) => Some(v),
            _ => None,
        }
    }
}

pub fn read_jsonl(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[derive(Debug, Default)]
struct Life {
    role: Option<Role>,
    arrival: Option<f64>,
    start: Option<(f64, WorkerId, TraceOutcome)>,
    end: Option<f64>,
    dropped: bool,
}

/// Recomputes [`RunMetrics`] from a trace without reusing the collector.
///
/// Co-location is derived from per-worker execution intervals `[start, end)`
/// rather than from start-time bookkeeping.
pub fn replay(records: &[TraceRecord]) -> Result<RunMetrics, String> {
    let mut lives: HashMap<InvocationId, Life> = HashMap::new();
    for r in records {
        let Some(id) = r.invocation else { continue };
        let life = lives.entry(id).or_default();
        if let Some(role) = r.role {
            if life.role.is_some_and(|x| x != role) {
                return Err(format!("invocation {id} changes role"));
            }
            life.role = Some(role);
        }
        match (r.event, r.outcome) {
            (EventKind::Arrival, outcome) => {
                if life.arrival.replace(r.time).is_some() {
                    return Err(format!("invocation {id} arrives twice"));
                }
                if outcome == TraceOutcome::Dropped {
                    life.dropped = true;
                }
            }
            (EventKind::ExecutionStart, TraceOutcome::Warm | TraceOutcome::Cold) => {
                let worker = r.worker.ok_or_else(|| format!("start of {id} without worker"))?;
                if life.start.replace((r.time, worker, r.outcome)).is_some() {
                    return Err(format!("invocation {id} starts twice"));
                }
            }
            (EventKind::Completion, TraceOutcome::Completed) => {
                if life.end.replace(r.time).is_some() {
                    return Err(format!("invocation {id} completes twice"));
                }
            }
            _ => {}
        }
    }

    let mut ids: Vec<InvocationId> = lives.keys().copied().collect();
    ids.sort();

    let mut m = RunMetrics {
        cold_starts: 0,
        warm_starts: 0,
        coloc_count: 0,
        coloc_overlaps: 0,
        time_to_first_coloc: None,
        total_arrivals: 0,
        total_drops: 0,
        total_completions: 0,
        victim_arrivals: 0,
        victim_drops: 0,
        victim_completions: 0,
        victim_drop_rate: 0.0,
        victim_mean_latency: 0.0,
        victim_p95_latency: 0.0,
        victim_latency_empty: true,
        victim_cold_starts: 0,
        victim_starts: 0,
        attacker_arrivals: 0,
        attacker_drops: 0,
        attacker_completions: 0,
        attacker_drop_rate: 0.0,
    };
    let mut victim_latency = Vec::new();
    // Per worker: (start, end) of victims and attackers.
    let mut victims: HashMap<WorkerId, Vec<(f64, f64, InvocationId)>> = HashMap::new();
    let mut attackers: HashMap<WorkerId, Vec<(f64, f64)>> = HashMap::new();

    for id in &ids {
        let life = &lives[id];
        let role = life.role.ok_or_else(|| format!("invocation {id} has no role"))?;
        let arrival = life.arrival.ok_or_else(|| format!("invocation {id} never arrived"))?;
        m.total_arrivals += 1;
        let victim = role == Role::Victim;
        let attacker = role == Role::Attacker;
        if victim {
            m.victim_arrivals += 1;
        }
        if attacker {
            m.attacker_arrivals += 1;
        }
        if life.dropped {
            m.total_drops += 1;
            m.victim_drops += victim as u64;
            m.attacker_drops += attacker as u64;
            continue;
        }
        let (start, worker, kind) = life.start.ok_or_else(|| format!("invocation {id} never started"))?;
        let end = life.end.ok_or_else(|| format!("invocation {id} never completed"))?;
        if kind == TraceOutcome::Cold {
            m.cold_starts += 1;
        } else {
            m.warm_starts += 1;
        }
        m.total_completions += 1;
        if victim {
            m.victim_completions += 1;
            m.victim_starts += 1;
            m.victim_cold_starts += (kind == TraceOutcome::Cold) as u64;
            victim_latency.push(end - arrival);
            victims.entry(worker).or_default().push((start, end, *id));
        }
        if attacker {
            m.attacker_completions += 1;
            attackers.entry(worker).or_default().push((start, end));
        }
    }

    let mut first: Option<f64> = None;
    for (worker, vs) in &victims {
        let Some(atts) = attackers.get(worker) else { continue };
        for &(vs_, ve, _) in vs {
            let mut hit = false;
            for &(as_, ae) in atts {
                if as_ < ve && vs_ < ae {
                    hit = true;
                    m.coloc_overlaps += 1;
                    let t = as_.max(vs_);
                    first = Some(first.map_or(t, |f: f64| f.min(t)));
                }
            }
            m.coloc_count += hit as u64;
        }
    }
    m.time_to_first_coloc = first;

    m.victim_drop_rate = ratio(m.victim_drops, m.victim_arrivals);
    m.attacker_drop_rate = ratio(m.attacker_drops, m.attacker_arrivals);
    if !victim_latency.is_empty() {
        victim_latency.sort_by(f64::total_cmp);
        let n = victim_latency.len();
        // Smallest rank k with k/n >= 0.95.
        let mut k = 1;
        while 100 * k < 95 * n {
            k += 1;
        }
        m.victim_mean_latency = victim_latency.iter().sum::<f64>() / n as f64;
        m.victim_p95_latency = victim_latency[k - 1];
        m.victim_latency_empty = false;
    }
    Ok(m)
}
