//! Idealized wireless link layer.
//!
//! Each node owns one FIFO interface queue served at the link rate. A frame
//! reaches every node in radio range of the transmitter when its service
//! completes: the unicast destination gets it as [`Reception::Addressed`],
//! everyone else overhears it as [`Reception::Promiscuous`]. There is no
//! collision model.

use std::collections::VecDeque;
use std::rc::Rc;

use crate::mobility::Mobility;
use crate::packet::Packet;
use crate::sim::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDest {
    Unicast(NodeId),
    Broadcast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub transmitter: NodeId,
    pub link_dest: LinkDest,
    pub packet: Rc<Packet>,
    /// Time the frame was handed to the queue.
    pub tx_time: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reception {
    Addressed,
    Promiscuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    DroppedOverflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub rate_bps: f64,
    pub frame_overhead: u32,
    pub propagation_delay: SimTime,
    pub queue_capacity: usize,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            rate_bps: 2_000_000.0,
            frame_overhead: 24,
            propagation_delay: 1e-6,
            queue_capacity: 50,
        }
    }
}

impl LinkParams {
    /// Seconds needed to put `payload_bytes` (plus frame overhead) on the air.
    pub fn service_time(&self, payload_bytes: u32) -> SimTime {
        f64::from(payload_bytes + self.frame_overhead) * 8.0 / self.rate_bps
    }
}

#[derive(Debug, Clone)]
pub struct InterfaceQueue {
    capacity: usize,
    frames: VecDeque<Frame>,
    busy: bool,
}

impl InterfaceQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            frames: VecDeque::with_capacity(capacity),
            busy: false,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn occupancy(&self) -> usize {
        self.frames.len()
    }

    pub fn free(&self) -> usize {
        self.capacity - self.frames.len()
    }

    pub fn enqueue(&mut self, frame: Frame) -> EnqueueOutcome {
        if self.frames.len() >= self.capacity {
            return EnqueueOutcome::DroppedOverflow;
        }
        self.frames.push_back(frame);
        EnqueueOutcome::Accepted
    }

    /// Occupancy over capacity, in `[0, 1]`.
    pub fn congestion_parameter(&self) -> f64 {
        if self.capacity == 0 {
            return 1.0;
        }
        self.frames.len() as f64 / self.capacity as f64
    }

    pub fn is_busy(&self) -> bool {
        self.busy
    }

    /// Marks the head frame as being transmitted and returns it.
    pub fn begin_service(&mut self) -> Option<&Frame> {
        if self.busy {
            return None;
        }
        let head = self.frames.front()?;
        self.busy = true;
        Some(head)
    }

    /// Removes the head frame once its service time has elapsed.
    pub fn finish_service(&mut self) -> Option<Frame> {
        self.busy = false;
        self.frames.pop_front()
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.frames.iter()
    }
}

/// Receivers of `frame` if it comes off the air at `t`, ascending by node id.
pub fn deliver(frame: &Frame, mobility: &Mobility, t: SimTime) -> Vec<(NodeId, Reception)> {
    let neighbors = mobility
        .neighbors(frame.transmitter, t)
        .expect("transmitter is a known node");
    neighbors
        .into_iter()
        .map(|n| {
            let kind = match frame.link_dest {
                LinkDest::Broadcast => Reception::Addressed,
                LinkDest::Unicast(d) if d == n => Reception::Addressed,
                LinkDest::Unicast(_) => Reception::Promiscuous,
            };
            (n, kind)
        })
        .collect()
}
