//! Event queue and run loop.
//!
//! The engine owns the logical clock and a min-heap of timestamped events.
//! It knows nothing about what an event means; a [`EventHandler`] receives
//! every dispatched event together with the queue so it can schedule
//! follow-up events.
//!
//! Events are totally ordered by `(time, kind rank, sequence)`. Completions
//! rank first at equal timestamps so capacity freed at `t` is visible to an
//! arrival at the same `t`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::model::{ContainerId, InvocationId, WorkerId};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    ExecutionStart,
    Completion,
    Reclaim,
}

impl EventKind {
    /// Tie-break rank among events with equal timestamps.
    pub fn rank(self) -> u8 {
        match self {
            EventKind::Completion => 0,
            EventKind::Reclaim => 1,
            EventKind::Arrival => 2,
            EventKind::ExecutionStart => 3,
        }
    }

    /// Housekeeping events alone do not keep a run alive.
    pub fn is_housekeeping(self) -> bool {
        matches!(self, EventKind::Reclaim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    Invocation(InvocationId),
    Container {
        worker: WorkerId,
        container: ContainerId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: SimTime,
    pub kind: EventKind,
    /// Assigned by [`EventQueue::schedule`]; unique per run.
    pub sequence: u64,
    pub payload: Payload,
}

impl Event {
    pub fn new(time: SimTime, kind: EventKind, payload: Payload) -> Self {
        Event {
            time,
            kind,
            sequence: 0,
            payload,
        }
    }

    fn key(&self) -> (SimTime, u8, u64) {
        (self.time, self.kind.rank(), self.sequence)
    }
}

/// Heap entry ordered so that `BinaryHeap` pops the smallest key first.
#[derive(Debug)]
struct Queued(Event);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.0.key() == other.0.key()
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.key().cmp(&self.0.key())
    }
}

/// Pending events plus the logical clock.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Queued>,
    now: SimTime,
    next_sequence: u64,
    housekeeping: usize,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Number of queued events that are not housekeeping.
    pub fn live(&self) -> usize {
        self.heap.len() - self.housekeeping
    }

    /// Enqueues `event`, assigning its sequence number. Scheduling into the
    /// past is rejected.
    pub fn schedule(&mut self, mut event: Event) -> Result<u64, SimError> {
        if event.time < self.now {
            return Err(SimError::PastEvent {
                event: event.time,
                now: self.now,
            });
        }
        event.sequence = self.next_sequence;
        self.next_sequence += 1;
        if event.kind.is_housekeeping() {
            self.housekeeping += 1;
        }
        self.heap.push(Queued(event));
        Ok(event.sequence)
    }

    pub fn peek(&self) -> Option<&Event> {
        self.heap.peek().map(|q| &q.0)
    }

    /// Removes the next event and advances the clock to its timestamp.
    pub fn pop(&mut self) -> Option<Event> {
        let Queued(event) = self.heap.pop()?;
        if event.kind.is_housekeeping() {
            self.housekeeping -= 1;
        }
        debug_assert!(event.time >= self.now);
        self.now = event.time;
        Some(event)
    }
}

pub trait EventHandler {
    fn handle(&mut self, event: &Event, queue: &mut EventQueue) -> Result<(), SimError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimReport {
    pub events_processed: u64,
    pub final_time: SimTime,
    /// No live events remain. Trailing housekeeping events are discarded
    /// once nothing else is pending.
    pub drained: bool,
}

#[derive(Debug, Default)]
pub struct Engine {
    queue: EventQueue,
    processed: u64,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn queue(&self) -> &EventQueue {
        &self.queue
    }

    pub fn queue_mut(&mut self) -> &mut EventQueue {
        &mut self.queue
    }

    pub fn schedule(&mut self, event: Event) -> Result<u64, SimError> {
        self.queue.schedule(event)
    }

    /// Dispatches events in order until only housekeeping remains or the next
    /// event lies beyond `limit`.
    pub fn run<H: EventHandler>(
        &mut self,
        handler: &mut H,
        limit: Option<SimTime>,
    ) -> Result<SimReport, SimError> {
        let mut last = self.queue.now();
        while self.queue.live() > 0 {
            let next = self.queue.peek().expect("live events are queued").time;
            if limit.is_some_and(|l| next > l) {
                break;
            }
            let event = self.queue.pop().expect("peeked");
            last = event.time;
            self.processed += 1;
            handler
                .handle(&event, &mut self.queue)
                .map_err(|e| SimError::Dispatch {
                    time: event.time,
                    kind: event.kind,
                    source: Box::new(e),
                })?;
        }
        Ok(SimReport {
            events_processed: self.processed,
            final_time: last,
            drained: self.queue.live() == 0,
        })
    }
}
