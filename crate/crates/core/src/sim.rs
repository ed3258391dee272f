//! Event dispatcher tying the engine, platform, policy, workload and metrics
//! together for one run.

use std::collections::HashMap;

use crate::engine::{Engine, Event, EventHandler, EventKind, EventQueue, Payload, SimReport};
use crate::error::SimError;
use crate::metrics::{MetricsCollector, RunMetrics, Terminal};
use crate::model::{ContainerId, FunctionKey, InvocationId, InvocationRecord, WorkerId};
use crate::platform::{Execution, PlacementOutcome, Platform, PlatformConfig, StartKind};
use crate::scheduler::{PlacementDecision, PlacementPolicy};
use crate::time::SimTime;
use crate::trace::{TraceOutcome, TraceRecord, TraceSink};
use crate::workload::ArrivalSource;

#[derive(Debug)]
pub struct SimOutcome {
    pub metrics: RunMetrics,
    pub report: SimReport,
    /// Records collected by an in-memory sink.
    pub trace: Option<Vec<TraceRecord>>,
    /// Prewarm containers that could not be placed.
    pub prewarm_shortfall: usize,
}

pub struct Simulation {
    platform: Platform,
    policy: Box<dyn PlacementPolicy>,
    source: Box<dyn ArrivalSource>,
    batch_size: usize,
    prewarm: Vec<(FunctionKey, usize)>,
    records: HashMap<InvocationId, InvocationRecord>,
    scheduled_arrivals: usize,
    metrics: MetricsCollector,
    trace: TraceSink,
    check_invariants: bool,
}

impl Simulation {
    pub fn new(
        config: PlatformConfig,
        policy: Box<dyn PlacementPolicy>,
        source: Box<dyn ArrivalSource>,
        batch_size: usize,
    ) -> Self {
        let metrics = MetricsCollector::new(config.capacities.len());
        Simulation {
            platform: Platform::new(config),
            policy,
            source,
            batch_size: batch_size.max(1),
            prewarm: Vec::new(),
            records: HashMap::new(),
            scheduled_arrivals: 0,
            metrics,
            trace: TraceSink::Off,
            check_invariants: cfg!(debug_assertions),
        }
    }

    pub fn with_trace(mut self, sink: TraceSink) -> Self {
        self.trace = sink;
        self
    }

    pub fn with_prewarm(mut self, prewarm: Vec<(FunctionKey, usize)>) -> Self {
        self.prewarm = prewarm;
        self
    }

    /// Re-verify worker accounting after every dispatch.
    pub fn with_invariant_checks(mut self, on: bool) -> Self {
        self.check_invariants = on;
        self
    }

    pub fn run(mut self) -> Result<SimOutcome, SimError> {
        let mut engine = Engine::new();
        let mut shortfall = 0;
        for (function, count) in std::mem::take(&mut self.prewarm) {
            let placed = self.platform.prewarm(function, count, engine.queue_mut())?;
            shortfall += count - placed;
        }
        self.feed(engine.queue_mut())?;
        let report = engine.run(&mut self, None)?;

        if !self.records.is_empty() || self.metrics.in_flight() > 0 {
            return Err(SimError::consistency(format!(
                "{} invocations unresolved after drain",
                self.metrics.in_flight().max(self.records.len())
            )));
        }
        if self.platform.executions_in_flight() > 0 || self.platform.queued_total() > 0 {
            return Err(SimError::consistency("platform not idle after drain"));
        }
        self.platform.check_all()?;
        self.trace.finish()?;
        let metrics = self.metrics.finalize();
        metrics.check_conservation().map_err(SimError::Consistency)?;
        Ok(SimOutcome {
            metrics,
            report,
            trace: self.trace.into_records(),
            prewarm_shortfall: shortfall,
        })
    }

    fn feed(&mut self, queue: &mut EventQueue) -> Result<(), SimError> {
        for rec in self.source.next_arrivals(self.batch_size) {
            queue.schedule(Event::new(rec.arrival, EventKind::Arrival, Payload::Invocation(rec.id)))?;
            if self.records.insert(rec.id, rec).is_some() {
                return Err(SimError::consistency("duplicate invocation id from workload"));
            }
            self.scheduled_arrivals += 1;
        }
        Ok(())
    }

    fn record(&self, id: InvocationId) -> Result<&InvocationRecord, SimError> {
        self.records
            .get(&id)
            .ok_or_else(|| SimError::consistency(format!("unknown invocation {id}")))
    }

    fn emit(
        &mut self,
        now: SimTime,
        event: EventKind,
        inv: Option<&InvocationRecord>,
        worker: Option<WorkerId>,
        container: Option<ContainerId>,
        outcome: TraceOutcome,
        overlaps: Option<u64>,
    ) -> Result<(), SimError> {
        if !self.trace.is_on() {
            return Ok(());
        }
        self.trace.record(TraceRecord {
            time: now.value(),
            event,
            invocation: inv.map(|r| r.id),
            role: inv.map(|r| r.role),
            worker,
            container,
            outcome,
            overlaps,
        })?;
        Ok(())
    }

    fn on_arrival(&mut self, id: InvocationId, now: SimTime, queue: &mut EventQueue) -> Result<Option<WorkerId>, SimError> {
        let rec = self.record(id)?.clone();
        self.metrics.on_arrival(&rec)?;
        let decision = self.policy.place(&rec, &self.platform.view(now));
        let (worker, outcome) = match decision {
            PlacementDecision::Failure => (None, PlacementOutcome::Dropped),
            PlacementDecision::Worker(w) => {
                let (outcome, _) = self.platform.admit(w, id, rec.function, now, queue)?;
                (Some(w), outcome)
            }
        };
        let traced = match outcome {
            PlacementOutcome::StartedWarm => TraceOutcome::Warm,
            PlacementOutcome::StartedCold => TraceOutcome::Cold,
            PlacementOutcome::Enqueued => TraceOutcome::Enqueued,
            PlacementOutcome::Dropped => TraceOutcome::Dropped,
        };
        self.emit(now, EventKind::Arrival, Some(&rec), worker, None, traced, None)?;
        if outcome == PlacementOutcome::Dropped {
            self.metrics.on_terminal(&rec, Terminal::Dropped, now)?;
            self.records.remove(&id);
        }
        self.scheduled_arrivals -= 1;
        if self.scheduled_arrivals == 0 {
            self.feed(queue)?;
        }
        Ok(worker)
    }

    fn execution(&self, id: InvocationId) -> Result<Execution, SimError> {
        self.platform
            .execution(id)
            .copied()
            .ok_or_else(|| SimError::consistency(format!("invocation {id} has no execution")))
    }

    fn on_start(&mut self, id: InvocationId, now: SimTime, queue: &mut EventQueue) -> Result<WorkerId, SimError> {
        let exec = self.execution(id)?;
        let rec = self.record(id)?.clone();
        let overlaps = self.metrics.on_execution_start(&rec, exec.worker, exec.kind, now);
        queue.schedule(Event::new(
            now + rec.service_time,
            EventKind::Completion,
            Payload::Invocation(id),
        ))?;
        let outcome = match exec.kind {
            StartKind::Warm => TraceOutcome::Warm,
            StartKind::Cold => TraceOutcome::Cold,
        };
        let overlaps = (overlaps > 0).then_some(overlaps);
        self.emit(now, EventKind::ExecutionStart, Some(&rec), Some(exec.worker), Some(exec.container), outcome, overlaps)?;
        Ok(exec.worker)
    }

    fn on_completion(&mut self, id: InvocationId, now: SimTime, queue: &mut EventQueue) -> Result<WorkerId, SimError> {
        let exec = self.execution(id)?;
        let started = self.platform.complete(exec.worker, id, now, queue)?;
        let rec = self
            .records
            .remove(&id)
            .ok_or_else(|| SimError::consistency(format!("unknown invocation {id}")))?;
        self.metrics.on_terminal(&rec, Terminal::Completed { worker: exec.worker }, now)?;
        self.emit(now, EventKind::Completion, Some(&rec), Some(exec.worker), Some(exec.container), TraceOutcome::Completed, None)?;
        if self.trace.is_on() {
            for next in started {
                let next_rec = self.record(next.invocation)?.clone();
                let outcome = match next.kind {
                    StartKind::Warm => TraceOutcome::Warm,
                    StartKind::Cold => TraceOutcome::Cold,
                };
                self.emit(now, EventKind::Completion, Some(&next_rec), Some(next.worker), Some(next.container), outcome, None)?;
            }
        }
        Ok(exec.worker)
    }
}

impl EventHandler for Simulation {
    fn handle(&mut self, event: &Event, queue: &mut EventQueue) -> Result<(), SimError> {
        let now = event.time;
        let touched = match (event.kind, event.payload) {
            (EventKind::Arrival, Payload::Invocation(id)) => self.on_arrival(id, now, queue)?,
            (EventKind::ExecutionStart, Payload::Invocation(id)) => Some(self.on_start(id, now, queue)?),
            (EventKind::Completion, Payload::Invocation(id)) => Some(self.on_completion(id, now, queue)?),
            (EventKind::Reclaim, Payload::Container { worker, container }) => {
                if self.platform.reclaim(worker, container, now) {
                    self.emit(now, EventKind::Reclaim, None, Some(worker), Some(container), TraceOutcome::Reclaimed, None)?;
                }
                Some(worker)
            }
            (kind, payload) => {
                return Err(SimError::consistency(format!("{kind:?} event with payload {payload:?}")))
            }
        };
        if self.check_invariants {
            if let Some(w) = touched {
                self.platform.check_worker(w)?;
            }
        }
        Ok(())
    }
}
