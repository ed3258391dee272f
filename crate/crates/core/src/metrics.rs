//! Per-run security and performance metrics.
//!
//! The collector only observes: it is fed by the dispatcher and never
//! influences placement or execution. Co-location is tracked from execution
//! start/completion notifications alone, independent of platform internals.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::{InvocationId, InvocationRecord, Role, WorkerId};
use crate::platform::StartKind;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Completed { worker: WorkerId },
    Dropped,
}

/// Summary of one run. Counts are exact; rates and latency summaries are
/// derived in [`MetricsCollector::finalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub cold_starts: u64,
    pub warm_starts: u64,
    /// Distinct victim invocations that ever executed alongside an attacker
    /// execution on the same worker.
    pub coloc_count: u64,
    /// Raw number of (attacker, victim) overlaps observed at start events.
    pub coloc_overlaps: u64,
    pub time_to_first_coloc: Option<f64>,
    pub total_arrivals: u64,
    pub total_drops: u64,
    pub total_completions: u64,
    pub victim_arrivals: u64,
    pub victim_drops: u64,
    pub victim_completions: u64,
    pub victim_drop_rate: f64,
    pub victim_mean_latency: f64,
    pub victim_p95_latency: f64,
    /// No victim invocation completed; latency fields are 0.
    pub victim_latency_empty: bool,
    pub victim_cold_starts: u64,
    pub victim_starts: u64,
    pub attacker_arrivals: u64,
    pub attacker_drops: u64,
    pub attacker_completions: u64,
    pub attacker_drop_rate: f64,
}

impl RunMetrics {
    /// Co-location per victim invocation; 0 when there were no victims.
    pub fn coloc_probability(&self) -> f64 {
        ratio(self.coloc_count, self.victim_arrivals)
    }

    /// Victim cold starts over victim execution starts.
    pub fn victim_cold_start_rate(&self) -> f64 {
        ratio(self.victim_cold_starts, self.victim_starts)
    }

    pub fn total_drop_rate(&self) -> f64 {
        ratio(self.total_drops, self.total_arrivals)
    }

    /// Arrivals equal completions plus drops, overall and per role.
    pub fn check_conservation(&self) -> Result<(), String> {
        let check = |name: &str, a: u64, c: u64, d: u64| {
            if a == c + d {
                Ok(())
            } else {
                Err(format!("{name}: {a} arrivals != {c} completions + {d} drops"))
            }
        };
        check("total", self.total_arrivals, self.total_completions, self.total_drops)?;
        check("victim", self.victim_arrivals, self.victim_completions, self.victim_drops)?;
        check("attacker", self.attacker_arrivals, self.attacker_completions, self.attacker_drops)?;
        let starts = self.cold_starts + self.warm_starts;
        if starts != self.total_arrivals - self.total_drops {
            return Err(format!(
                "{starts} execution starts != {} admitted invocations",
                self.total_arrivals - self.total_drops
            ));
        }
        if self.time_to_first_coloc.is_some() != (self.coloc_count > 0) {
            return Err("time_to_first_coloc presence disagrees with coloc_count".into());
        }
        if self.coloc_count > self.victim_arrivals {
            return Err("coloc_count exceeds victim arrivals".into());
        }
        Ok(())
    }
}

pub fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Nearest-rank percentile of `sorted` (ascending); `pct` in (0, 100].
pub fn nearest_rank(sorted: &[f64], pct: u32) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let n = sorted.len();
    let rank = (pct as usize * n).div_ceil(100).max(1);
    sorted[rank - 1]
}

/// Mean and p95 of a latency sample; `None` when empty.
pub fn latency_summary(latencies: &[f64]) -> Option<(f64, f64)> {
    if latencies.is_empty() {
        return None;
    }
    let mut sorted = latencies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Some((mean, nearest_rank(&sorted, 95)))
}

#[derive(Debug, Default, Clone)]
struct RoleTally {
    arrivals: u64,
    drops: u64,
    completions: u64,
    latencies: Vec<f64>,
}

#[derive(Debug)]
pub struct MetricsCollector {
    roles: [RoleTally; 3],
    cold_starts: u64,
    warm_starts: u64,
    victim_cold_starts: u64,
    victim_starts: u64,
    pending: HashMap<InvocationId, (SimTime, Role)>,
    executing_victims: Vec<Vec<InvocationId>>,
    executing_attackers: Vec<u32>,
    colocated: HashSet<InvocationId>,
    coloc_overlaps: u64,
    first_coloc: Option<SimTime>,
}

impl MetricsCollector {
    pub fn new(num_workers: usize) -> Self {
        MetricsCollector {
            roles: Default::default(),
            cold_starts: 0,
            warm_starts: 0,
            victim_cold_starts: 0,
            victim_starts: 0,
            pending: HashMap::new(),
            executing_victims: vec![Vec::new(); num_workers],
            executing_attackers: vec![0; num_workers],
            colocated: HashSet::new(),
            coloc_overlaps: 0,
            first_coloc: None,
        }
    }

    pub fn in_flight(&self) -> usize {
        self.pending.len()
    }

    pub fn on_arrival(&mut self, inv: &InvocationRecord) -> Result<(), SimError> {
        if self.pending.insert(inv.id, (inv.arrival, inv.role)).is_some() {
            return Err(SimError::consistency(format!("invocation {} arrived twice", inv.id)));
        }
        self.roles[inv.role.index()].arrivals += 1;
        Ok(())
    }

    /// Records an execution start and returns the number of new
    /// attacker–victim overlaps it creates.
    pub fn on_execution_start(
        &mut self,
        inv: &InvocationRecord,
        worker: WorkerId,
        kind: StartKind,
        now: SimTime,
    ) -> u64 {
        match kind {
            StartKind::Cold => self.cold_starts += 1,
            StartKind::Warm => self.warm_starts += 1,
        }
        let w = worker.0;
        let mut overlaps = 0;
        match inv.role {
            Role::Attacker => {
                self.executing_attackers[w] += 1;
                overlaps = self.executing_victims[w].len() as u64;
                for &victim in &self.executing_victims[w] {
                    self.colocated.insert(victim);
                }
            }
            Role::Victim => {
                self.victim_starts += 1;
                if kind == StartKind::Cold {
                    self.victim_cold_starts += 1;
                }
                self.executing_victims[w].push(inv.id);
                overlaps = self.executing_attackers[w] as u64;
                if overlaps > 0 {
                    self.colocated.insert(inv.id);
                }
            }
            Role::Benign => {}
        }
        if overlaps > 0 {
            self.coloc_overlaps += overlaps;
            self.first_coloc.get_or_insert(now);
        }
        overlaps
    }

    pub fn on_terminal(
        &mut self,
        inv: &InvocationRecord,
        outcome: Terminal,
        now: SimTime,
    ) -> Result<(), SimError> {
        let Some((arrival, role)) = self.pending.remove(&inv.id) else {
            return Err(SimError::consistency(format!(
                "invocation {} reached a terminal state twice or never arrived",
                inv.id
            )));
        };
        let tally = &mut self.roles[role.index()];
        match outcome {
            Terminal::Dropped => tally.drops += 1,
            Terminal::Completed { worker } => {
                tally.completions += 1;
                tally.latencies.push(now - arrival);
                match role {
                    Role::Attacker => self.executing_attackers[worker.0] -= 1,
                    Role::Victim => self.executing_victims[worker.0].retain(|&v| v != inv.id),
                    Role::Benign => {}
                }
            }
        }
        Ok(())
    }

    pub fn finalize(&self) -> RunMetrics {
        let victim = &self.roles[Role::Victim.index()];
        let attacker = &self.roles[Role::Attacker.index()];
        let total = |f: fn(&RoleTally) -> u64| self.roles.iter().map(f).sum::<u64>();
        let summary = latency_summary(&victim.latencies);
        let (mean, p95) = summary.unwrap_or((0.0, 0.0));
        RunMetrics {
            cold_starts: self.cold_starts,
            warm_starts: self.warm_starts,
            coloc_count: self.colocated.len() as u64,
            coloc_overlaps: self.coloc_overlaps,
            time_to_first_coloc: self.first_coloc.map(SimTime::value),
            total_arrivals: total(|t| t.arrivals),
            total_drops: total(|t| t.drops),
            total_completions: total(|t| t.completions),
            victim_arrivals: victim.arrivals,
            victim_drops: victim.drops,
            victim_completions: victim.completions,
            victim_drop_rate: ratio(victim.drops, victim.arrivals),
            victim_mean_latency: mean,
            victim_p95_latency: p95,
            victim_latency_empty: summary.is_none(),
            victim_cold_starts: self.victim_cold_starts,
            victim_starts: self.victim_starts,
            attacker_arrivals: attacker.arrivals,
            attacker_drops: attacker.drops,
            attacker_completions: attacker.completions,
            attacker_drop_rate: ratio(attacker.drops, attacker.arrivals),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FunctionKey;

    fn rec(id: u64, role: Role, arrival: f64) -> InvocationRecord {
        InvocationRecord {
            id: InvocationId(id),
            function: FunctionKey::new(0, 0),
            arrival: SimTime::new(arrival),
            service_time: 1.0,
            role,
        }
    }

    fn t(v: f64) -> SimTime {
        SimTime::new(v)
    }

    #[test]
    fn attacker_start_beside_running_victim_colocates() {
        let mut m = MetricsCollector::new(2);
        let v = rec(0, Role::Victim, 0.0);
        let a = rec(1, Role::Attacker, 0.0);
        m.on_arrival(&v).unwrap();
        m.on_arrival(&a).unwrap();
        m.on_execution_start(&v, WorkerId(0), StartKind::Cold, t(1.0));
        assert_eq!(m.on_execution_start(&a, WorkerId(0), StartKind::Cold, t(5.0)), 1);
        let r = m.finalize();
        assert_eq!(r.coloc_count, 1);
        assert_eq!(r.time_to_first_coloc, Some(5.0));
    }

    #[test]
    fn different_workers_do_not_colocate() {
        let mut m = MetricsCollector::new(2);
        let v = rec(0, Role::Victim, 0.0);
        let a = rec(1, Role::Attacker, 0.0);
        m.on_arrival(&v).unwrap();
        m.on_arrival(&a).unwrap();
        m.on_execution_start(&v, WorkerId(1), StartKind::Cold, t(1.0));
        m.on_execution_start(&a, WorkerId(0), StartKind::Cold, t(2.0));
        assert_eq!(m.finalize().coloc_count, 0);
        assert_eq!(m.finalize().time_to_first_coloc, None);
    }

    #[test]
    fn finished_victim_does_not_colocate() {
        let mut m = MetricsCollector::new(1);
        let v = rec(0, Role::Victim, 0.0);
        let a = rec(1, Role::Attacker, 0.0);
        m.on_arrival(&v).unwrap();
        m.on_arrival(&a).unwrap();
        m.on_execution_start(&v, WorkerId(0), StartKind::Cold, t(1.0));
        m.on_terminal(&v, Terminal::Completed { worker: WorkerId(0) }, t(2.0)).unwrap();
        // Only an idle victim container remains.
        m.on_execution_start(&a, WorkerId(0), StartKind::Cold, t(3.0));
        assert_eq!(m.finalize().coloc_count, 0);
    }

    #[test]
    fn each_victim_counted_once() {
        let mut m = MetricsCollector::new(1);
        let v = rec(0, Role::Victim, 0.0);
        m.on_arrival(&v).unwrap();
        m.on_execution_start(&v, WorkerId(0), StartKind::Warm, t(0.0));
        for i in 1..4 {
            let a = rec(i, Role::Attacker, 0.0);
            m.on_arrival(&a).unwrap();
            m.on_execution_start(&a, WorkerId(0), StartKind::Warm, t(i as f64));
        }
        let r = m.finalize();
        assert_eq!(r.coloc_count, 1);
        assert_eq!(r.coloc_overlaps, 3);
        assert_eq!(r.time_to_first_coloc, Some(1.0));
    }

    #[test]
    fn drops_are_counted_per_role() {
        let mut m = MetricsCollector::new(1);
        let v = rec(0, Role::Victim, 0.0);
        let b = rec(1, Role::Benign, 0.0);
        m.on_arrival(&v).unwrap();
        m.on_arrival(&b).unwrap();
        m.on_terminal(&v, Terminal::Dropped, t(0.0)).unwrap();
        m.on_terminal(&b, Terminal::Dropped, t(0.0)).unwrap();
        let r = m.finalize();
        assert_eq!((r.victim_drops, r.total_drops), (1, 2));
        assert_eq!(r.victim_drop_rate, 1.0);
    }

    #[test]
    fn victim_latency_is_arrival_to_completion() {
        let mut m = MetricsCollector::new(1);
        let v = rec(0, Role::Victim, 100.0);
        m.on_arrival(&v).unwrap();
        m.on_execution_start(&v, WorkerId(0), StartKind::Cold, t(110.0));
        m.on_terminal(&v, Terminal::Completed { worker: WorkerId(0) }, t(350.0)).unwrap();
        let r = m.finalize();
        assert_eq!(r.victim_mean_latency, 250.0);
        assert_eq!(r.victim_p95_latency, 250.0);
        assert!(!r.victim_latency_empty);
    }

    #[test]
    fn double_terminal_is_an_error() {
        let mut m = MetricsCollector::new(1);
        let v = rec(0, Role::Victim, 0.0);
        m.on_arrival(&v).unwrap();
        m.on_terminal(&v, Terminal::Dropped, t(0.0)).unwrap();
        assert!(m.on_terminal(&v, Terminal::Dropped, t(0.0)).is_err());
    }

    #[test]
    fn nearest_rank_p95() {
        let a: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank(&a, 95), 95.0);
        let b: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(nearest_rank(&b, 95), 19.0);
        assert_eq!(nearest_rank(&[7.0], 95), 7.0);
    }

    #[test]
    fn empty_latency_is_flagged() {
        let m = MetricsCollector::new(1);
        let r = m.finalize();
        assert!(r.victim_latency_empty);
        assert_eq!((r.victim_mean_latency, r.victim_p95_latency), (0.0, 0.0));
        assert_eq!(r.victim_drop_rate, 0.0);
    }

    #[test]
    fn coloc_probability_examples() {
        let mut r = MetricsCollector::new(1).finalize();
        r.victim_arrivals = 100;
        assert_eq!(r.coloc_probability(), 0.0);
        r.coloc_count = 25;
        assert_eq!(r.coloc_probability(), 0.25);
        r.coloc_count = 100;
        assert_eq!(r.coloc_probability(), 1.0);
        r.victim_arrivals = 0;
        r.coloc_count = 0;
        assert_eq!(r.coloc_probability(), 0.0);
    }
}
