//! CBR traffic and per-node forwarding behavior.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::packet::Packet;
use crate::sim::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct CbrConnection {
    pub src: NodeId,
    pub dst: NodeId,
    /// Packets per second.
    pub rate: f64,
    pub payload: u32,
    pub start_time: SimTime,
}

impl CbrConnection {
    pub fn interval(&self) -> SimTime {
        1.0 / self.rate
    }

    /// Origination times in `[start_time, until]`.
    pub fn send_times(&self, until: SimTime) -> impl Iterator<Item = SimTime> + '_ {
        (0u64..)
            .map(move |k| self.start_time + k as f64 * self.interval())
            .take_while(move |&t| t <= until)
    }
}

/// Draws `count` distinct `(src, dst)` pairs with `src != dst` and start
/// times uniform in `[0, stagger)`, in draw order.
pub fn random_connections<R: Rng>(
    nodes: usize,
    count: usize,
    rate: f64,
    payload: u32,
    stagger: SimTime,
    rng: &mut R,
) -> Vec<CbrConnection> {
    let mut pairs: Vec<(u32, u32)> = (0..nodes as u32)
        .flat_map(|s| {
            (0..nodes as u32)
                .filter(move |&d| d != s)
                .map(move |d| (s, d))
        })
        .collect();
    pairs.shuffle(rng);
    pairs
        .into_iter()
        .take(count)
        .map(|(s, d)| CbrConnection {
            src: NodeId(s),
            dst: NodeId(d),
            rate,
            payload,
            start_time: if stagger > 0.0 {
                rng.gen_range(0.0..stagger)
            } else {
                0.0
            },
        })
        .collect()
}

/// Writes the connection schedule as `src dst start rate` lines.
pub fn dump_connections<W: Write>(conns: &[CbrConnection], mut out: W) -> io::Result<()> {
    for c in conns {
        writeln!(out, "{} {} {} {}", c.src, c.dst, c.start_time, c.rate)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BehaviorKind {
    Cooperative,
    Malicious,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorProfile {
    pub kind: BehaviorKind,
    pub data_drop_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Forward,
    Drop,
}

impl BehaviorProfile {
    pub fn cooperative() -> Self {
        Self {
            kind: BehaviorKind::Cooperative,
            data_drop_probability: 0.0,
        }
    }

    pub fn malicious(data_drop_probability: f64) -> Self {
        Self {
            kind: BehaviorKind::Malicious,
            data_drop_probability,
        }
    }

    pub fn is_malicious(&self) -> bool {
        self.kind == BehaviorKind::Malicious
    }

    /// Relay decision for a packet this node did not originate. Control
    /// packets are always forwarded; data is dropped with the profile's
    /// probability.
    pub fn decide<R: Rng>(&self, pkt: &Packet, rng: &mut R) -> Decision {
        if !pkt.is_data() || self.data_drop_probability <= 0.0 {
            return Decision::Forward;
        }
        if self.data_drop_probability >= 1.0 || rng.gen_bool(self.data_drop_probability) {
            Decision::Drop
        } else {
            Decision::Forward
        }
    }
}

/// Picks the first `ceil(n * fraction)` ids of a seeded shuffle.
pub fn pick_malicious<R: Rng>(nodes: usize, fraction: f64, rng: &mut R) -> Vec<NodeId> {
    let count = malicious_count(nodes, fraction);
    let mut ids: Vec<u32> = (0..nodes as u32).collect();
    ids.shuffle(rng);
    let mut out: Vec<NodeId> = ids.into_iter().take(count).map(NodeId).collect();
    out.sort();
    out
}

/// `ceil(nodes * fraction)`, robust to representation error (20 * 0.3 = 6).
pub fn malicious_count(nodes: usize, fraction: f64) -> usize {
    let exact = nodes as f64 * fraction;
    let rounded = exact.round();
    let count = if (exact - rounded).abs() < 1e-9 {
        rounded
    } else {
        exact.ceil()
    };
    (count as usize).min(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::PacketBody;
    use crate::rng::{stream, StreamLabel};

    #[test]
    fn cbr_schedule() {
        let c = CbrConnection {
            src: NodeId(0),
            dst: NodeId(1),
            rate: 4.0,
            payload: 64,
            start_time: 0.0,
        };
        let t: Vec<_> = c.send_times(0.6).collect();
        assert_eq!(t, vec![0.0, 0.25, 0.5]);
        // 900 s at 4 pkt/s; the tick at exactly 900 is past the end of the run
        assert_eq!(c.send_times(900.0).filter(|&t| t < 900.0).count(), 3600);
    }

    #[test]
    fn connections_are_distinct_pairs() {
        let mut rng = stream(3, StreamLabel::Traffic);
        let conns = random_connections(10, 5, 4.0, 64, 10.0, &mut rng);
        assert_eq!(conns.len(), 5);
        for (i, c) in conns.iter().enumerate() {
            assert_ne!(c.src, c.dst);
            assert!((0.0..10.0).contains(&c.start_time));
            for d in &conns[i + 1..] {
                assert!((c.src, c.dst) != (d.src, d.dst));
            }
        }
    }

    #[test]
    fn malicious_counts() {
        assert_eq!(malicious_count(20, 0.3), 6);
        assert_eq!(malicious_count(20, 0.1), 2);
        assert_eq!(malicious_count(10, 0.25), 3);
        assert_eq!(malicious_count(10, 1.0), 10);
        assert_eq!(malicious_count(10, 0.0), 0);
        for k in 1..=10 {
            assert_eq!(malicious_count(20, k as f64 / 10.0), 2 * k);
        }
    }

    #[test]
    fn cooperative_always_forwards() {
        let mut rng = stream(1, StreamLabel::Adversary);
        let p = BehaviorProfile::cooperative();
        let d = Packet::data(NodeId(0), NodeId(1), 0, 64);
        assert!((0..100).all(|_| p.decide(&d, &mut rng) == Decision::Forward));
    }

    #[test]
    fn malicious_forwards_control() {
        let mut rng = stream(1, StreamLabel::Adversary);
        let p = BehaviorProfile::malicious(1.0);
        let mut rreq = Packet::data(NodeId(0), NodeId(1), 0, 64);
        rreq.body = PacketBody::Rreq {
            route_record: vec![NodeId(0)],
            avoid_list: vec![],
        };
        assert_eq!(p.decide(&rreq, &mut rng), Decision::Forward);
        let d = Packet::data(NodeId(0), NodeId(1), 0, 64);
        assert_eq!(p.decide(&d, &mut rng), Decision::Drop);
    }

    #[test]
    fn drop_frequency_converges() {
        // binomial(10_000, 0.99): mean 9900, sd ~ 9.95; allow 3 sd
        let mut rng = stream(2024, StreamLabel::Adversary);
        let p = BehaviorProfile::malicious(0.99);
        let d = Packet::data(NodeId(0), NodeId(1), 0, 64);
        let dropped = (0..10_000)
            .filter(|_| p.decide(&d, &mut rng) == Decision::Drop)
            .count() as f64;
        let sd = (10_000.0f64 * 0.99 * 0.01).sqrt();
        assert!((dropped - 9_900.0).abs() <= 3.0 * sd, "dropped {dropped}");
    }
}
