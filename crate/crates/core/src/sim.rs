//! Deterministic discrete-event scheduler.
//!
//! Events are ordered by `(fire_time, sequence)`. The sequence counter is
//! assigned at scheduling time, so events sharing a fire time are processed
//! in insertion order. Cancelled events stay in the heap and are skipped
//! when popped.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

/// Virtual time in seconds.
pub type SimTime = f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("event scheduled in the past: fire_time {fire_time} < clock {clock}")]
    InPast { fire_time: SimTime, clock: SimTime },
    #[error("event fire_time is not a finite number: {0}")]
    NotFinite(SimTime),
}

/// Opaque handle returned by [`Scheduler::schedule`], used for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventHandle(u64);

impl EventHandle {
    pub fn sequence(self) -> u64 {
        self.0
    }
}

struct Pending<E> {
    fire_time: SimTime,
    sequence: u64,
    payload: E,
}

impl<E> PartialEq for Pending<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Pending<E> {}

impl<E> PartialOrd for Pending<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Pending<E> {
    // Reversed: BinaryHeap is a max-heap and we want the earliest event on top.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_time
            .total_cmp(&self.fire_time)
            .then_with(|| other.sequence.cmp(&self.sequence))
    }
}

/// Outcome of [`Scheduler::run_until`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub clock: SimTime,
    /// Events handled during this call.
    pub processed: u64,
    /// Live events left in the queue with `fire_time > clock`.
    pub in_flight: u64,
}

/// Lifetime counters, used to check that no event is ever lost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SchedulerStats {
    pub scheduled: u64,
    pub processed: u64,
    pub cancelled: u64,
}

pub struct Scheduler<E> {
    clock: SimTime,
    next_sequence: u64,
    queue: BinaryHeap<Pending<E>>,
    cancelled: HashSet<u64>,
    stats: SchedulerStats,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Self {
            clock: 0.0,
            next_sequence: 0,
            queue: BinaryHeap::new(),
            cancelled: HashSet::new(),
            stats: SchedulerStats::default(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    pub fn stats(&self) -> SchedulerStats {
        self.stats
    }

    pub fn schedule(
        &mut self,
        fire_time: SimTime,
        payload: E,
    ) -> Result<EventHandle, ScheduleError> {
        if !fire_time.is_finite() {
            return Err(ScheduleError::NotFinite(fire_time));
        }
        if fire_time < self.clock {
            return Err(ScheduleError::InPast {
                fire_time,
                clock: self.clock,
            });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.queue.push(Pending {
            fire_time,
            sequence,
            payload,
        });
        self.stats.scheduled += 1;
        Ok(EventHandle(sequence))
    }

    /// Schedules `payload` `delay` seconds from now.
    pub fn schedule_in(
        &mut self,
        delay: SimTime,
        payload: E,
    ) -> Result<EventHandle, ScheduleError> {
        self.schedule(self.clock + delay, payload)
    }

    /// Cancels a pending event. Returns false if it already fired, was
    /// already cancelled, or never existed.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if handle.0 >= self.next_sequence || self.cancelled.contains(&handle.0) {
            return false;
        }
        if !self.queue.iter().any(|p| p.sequence == handle.0) {
            return false;
        }
        self.cancelled.insert(handle.0);
        self.stats.cancelled += 1;
        true
    }

    /// Number of live (not cancelled) events still queued.
    pub fn pending(&self) -> u64 {
        self.queue.len() as u64 - self.cancelled.len() as u64
    }

    /// Iterates over live pending payloads in no particular order.
    pub fn pending_payloads(&self) -> impl Iterator<Item = (SimTime, &E)> {
        self.queue
            .iter()
            .filter(|p| !self.cancelled.contains(&p.sequence))
            .map(|p| (p.fire_time, &p.payload))
    }

    /// Pops the next live event with `fire_time <= t_end`, advancing the clock.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<(SimTime, E)> {
        loop {
            let top = self.queue.peek()?;
            if top.fire_time > t_end {
                return None;
            }
            let p = self.queue.pop().expect("peeked");
            if self.cancelled.remove(&p.sequence) {
                continue;
            }
            self.clock = p.fire_time;
            self.stats.processed += 1;
            return Some((p.fire_time, p.payload));
        }
    }

    /// Processes every event with `fire_time <= t_end` in order, then sets
    /// the clock to `t_end` (if it is ahead of the clock).
    ///
    /// The handler receives the scheduler so it can schedule follow-up events.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> RunSummary
    where
        F: FnMut(&mut Self, SimTime, E),
    {
        let mut processed = 0;
        while let Some((t, ev)) = self.pop_until(t_end) {
            processed += 1;
            handler(self, t, ev);
        }
        if t_end > self.clock {
            self.clock = t_end;
        }
        RunSummary {
            clock: self.clock,
            processed,
            in_flight: self.pending(),
        }
    }
}
