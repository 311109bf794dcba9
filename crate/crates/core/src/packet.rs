//! Network-layer packets carried by the simulator.

use std::fmt;

use crate::NodeId;

/// Per-kind packet body.
#[derive(Debug, Clone, PartialEq)]
pub enum PacketBody {
    Data,
    /// Route request. `route_record` starts at the requester and grows by one
    /// node per hop; `avoid_list` carries the faulty lists merged along the way.
    Rreq {
        route_record: Vec<NodeId>,
        avoid_list: Vec<NodeId>,
    },
    /// Route reply carrying a discovered route from the requester to the target.
    Rrep {
        request_id: u64,
        path: Vec<NodeId>,
    },
    /// Route error: the link `from -> to` is unusable.
    Rerr {
        broken_link: (NodeId, NodeId),
    },
    /// One-hop accusation broadcast.
    Warning {
        accused: NodeId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Data,
    Rreq,
    Rrep,
    Rerr,
    Warning,
}

impl PacketKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Data => "DATA",
            PacketKind::Rreq => "RREQ",
            PacketKind::Rrep => "RREP",
            PacketKind::Rerr => "RERR",
            PacketKind::Warning => "WARNING",
        }
    }

    pub fn is_control(self) -> bool {
        !matches!(self, PacketKind::Data)
    }
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub origin: NodeId,
    pub final_dest: NodeId,
    /// Per-origin sequence number (DATA) or request id (RREQ).
    pub seq: u64,
    /// Hop-by-hop route for unicast packets, from the sender of this packet
    /// to `final_dest`. Empty for broadcasts.
    pub source_route: Vec<NodeId>,
    pub payload_size: u32,
    /// Probe packet of a knock test; excluded from traffic metrics.
    pub knock: bool,
    pub body: PacketBody,
}

// Fixed header sizes used for transmission time only.
const BASE_HEADER: u32 = 8;
const ADDR: u32 = 4;

impl Packet {
    pub fn data(origin: NodeId, final_dest: NodeId, seq: u64, payload_size: u32) -> Self {
        Self {
            origin,
            final_dest,
            seq,
            source_route: Vec::new(),
            payload_size,
            knock: false,
            body: PacketBody::Data,
        }
    }

    pub fn kind(&self) -> PacketKind {
        match self.body {
            PacketBody::Data => PacketKind::Data,
            PacketBody::Rreq { .. } => PacketKind::Rreq,
            PacketBody::Rrep { .. } => PacketKind::Rrep,
            PacketBody::Rerr { .. } => PacketKind::Rerr,
            PacketBody::Warning { .. } => PacketKind::Warning,
        }
    }

    pub fn is_data(&self) -> bool {
        matches!(self.body, PacketBody::Data)
    }

    /// Bytes handed to the link layer, before the per-frame overhead.
    pub fn wire_size(&self) -> u32 {
        match &self.body {
            PacketBody::Data => self.payload_size,
            PacketBody::Rreq {
                route_record,
                avoid_list,
            } => BASE_HEADER + ADDR * (2 + route_record.len() + avoid_list.len()) as u32,
            PacketBody::Rrep { path, .. } => BASE_HEADER + ADDR * (2 + path.len()) as u32,
            PacketBody::Rerr { .. } => BASE_HEADER + ADDR * 4,
            PacketBody::Warning { .. } => BASE_HEADER + ADDR * 2,
        }
    }

    /// Next hop after `node` on the source route.
    pub fn next_hop_after(&self, node: NodeId) -> Option<NodeId> {
        let i = self.source_route.iter().position(|&n| n == node)?;
        self.source_route.get(i + 1).copied()
    }
}

/// True if no node appears twice.
pub fn is_loop_free(route: &[NodeId]) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(route.len());
    route.iter().all(|n| seen.insert(*n))
}
