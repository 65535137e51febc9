//! Simulation clock and the (time, sequence) ordered event queue.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use crate::error::{Error, Result};

/// Simulation time in integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    /// Rounds to the nearest nanosecond; negative input is an error.
    pub fn from_secs(s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidDuration(s));
        }
        Ok(SimTime((s * 1e9).round() as u64))
    }

    pub fn secs(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn after(self, s: f64) -> Result<Self> {
        Ok(SimTime(self.0 + SimTime::from_secs(s)?.0))
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}s", self.secs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    BeaconTx,
    FrameRx,
    ForwardTx,
    ServerEval,
    CommandRx,
    MobilityTick,
}

impl EventKind {
    pub const ALL: [EventKind; 6] = [
        EventKind::BeaconTx,
        EventKind::FrameRx,
        EventKind::ForwardTx,
        EventKind::ServerEval,
        EventKind::CommandRx,
        EventKind::MobilityTick,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::BeaconTx => "beacon_tx",
            EventKind::FrameRx => "frame_rx",
            EventKind::ForwardTx => "forward_tx",
            EventKind::ServerEval => "server_eval",
            EventKind::CommandRx => "command_rx",
            EventKind::MobilityTick => "mobility_tick",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event<P> {
    pub time: SimTime,
    pub sequence: u64,
    pub payload: P,
}

#[derive(Debug)]
struct Entry<P> {
    key: (SimTime, u64),
    payload: P,
}

impl<P> PartialEq for Entry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl<P> Eq for Entry<P> {}
impl<P> PartialOrd for Entry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<P> Ord for Entry<P> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

/// Min-queue keyed by (time, sequence). Sequence numbers are handed out in
/// insertion order, so simultaneous events fire first-scheduled first.
#[derive(Debug)]
pub struct EventQueue<P> {
    heap: BinaryHeap<Reverse<Entry<P>>>,
    next_seq: u64,
    now: SimTime,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: SimTime::ZERO,
        }
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

    /// Rejects events in the past.
    pub fn schedule(&mut self, time: SimTime, payload: P, what: &str) -> Result<u64> {
        if time < self.now {
            return Err(Error::InvariantViolation {
                event: what.to_string(),
                detail: format!("scheduled at {time}, before the current time {}", self.now),
            });
        }
        let sequence = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry {
            key: (time, sequence),
            payload,
        }));
        Ok(sequence)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(e)| e.key.0)
    }

    pub fn pop(&mut self) -> Option<Event<P>> {
        let Reverse(e) = self.heap.pop()?;
        self.now = e.key.0;
        Some(Event {
            time: e.key.0,
            sequence: e.key.1,
            payload: e.payload,
        })
    }
}
