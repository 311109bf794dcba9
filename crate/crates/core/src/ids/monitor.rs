use std::collections::{BTreeMap, HashMap};

use crate::sim::SimTime;
use crate::NodeId;

/// Identifies a registered data packet awaiting its passive acknowledgement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint {
    pub origin: NodeId,
    pub seq: u64,
    pub next_hop: NodeId,
}

/// Per-neighbor tally for the current timing window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActivityLog {
    pub neighbor: NodeId,
    pub registered: u32,
    pub acked: u32,
}

impl ActivityLog {
    pub fn missing(&self) -> u32 {
        self.registered - self.acked
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Appraisal {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowReport {
    pub neighbor: NodeId,
    pub registered: u32,
    pub acked: u32,
    pub missing: u32,
    pub threshold: f64,
    pub appraisal: Appraisal,
}

/// Passive-acknowledgement monitor of one node.
#[derive(Debug, Clone, Default)]
pub struct Monitor {
    window_start: SimTime,
    /// Packets registered less than this long before a window closes are
    /// still in transit and carry over into the next window.
    grace: SimTime,
    registry: HashMap<Fingerprint, SimTime>,
    logs: BTreeMap<NodeId, ActivityLog>,
}

impl Monitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_grace(grace: SimTime) -> Self {
        Self {
            grace,
            ..Self::default()
        }
    }

    pub fn window_start(&self) -> SimTime {
        self.window_start
    }

    pub fn log(&self, neighbor: NodeId) -> Option<&ActivityLog> {
        self.logs.get(&neighbor)
    }

    pub fn is_registered(&self, fp: &Fingerprint) -> bool {
        self.registry.contains_key(fp)
    }

    pub fn pending(&self) -> usize {
        self.registry.len()
    }

    /// Records a data packet handed to `fp.next_hop` for forwarding.
    pub fn register_sent(&mut self, fp: Fingerprint, now: SimTime) {
        if self.registry.insert(fp, now).is_some() {
            return;
        }
        self.logs
            .entry(fp.next_hop)
            .or_insert(ActivityLog {
                neighbor: fp.next_hop,
                registered: 0,
                acked: 0,
            })
            .registered += 1;
    }

    /// Matches an overheard transmission of `(origin, seq)` by `transmitter`.
    /// Returns true if it acknowledged a registered packet.
    pub fn on_overhear(&mut self, transmitter: NodeId, origin: NodeId, seq: u64) -> bool {
        let fp = Fingerprint {
            origin,
            seq,
            next_hop: transmitter,
        };
        if self.registry.remove(&fp).is_none() {
            return false;
        }
        if let Some(log) = self.logs.get_mut(&transmitter) {
            log.acked += 1;
        }
        true
    }

    /// Forgets a registered packet that never reached its next hop.
    pub fn withdraw(&mut self, fp: &Fingerprint) -> bool {
        if self.registry.remove(fp).is_none() {
            return false;
        }
        if let Some(log) = self.logs.get_mut(&fp.next_hop) {
            log.registered -= 1;
        }
        true
    }

    /// Drops the current-window tally of `neighbor`.
    pub fn clear_neighbor(&mut self, neighbor: NodeId) {
        self.logs.remove(&neighbor);
        self.registry.retain(|fp, _| fp.next_hop != neighbor);
    }

    /// Appraises every neighbor that had packets registered this window and
    /// starts a new window.
    ///
    /// The tolerated number of missing packets is
    /// `max_packet_rate * congestion`; exceeding it is a negative appraisal.
    pub fn close_window(
        &mut self,
        now: SimTime,
        congestion: f64,
        max_packet_rate: f64,
    ) -> Vec<WindowReport> {
        let threshold = max_packet_rate * congestion;
        let mut carried: Vec<(Fingerprint, SimTime)> = self
            .registry
            .iter()
            .filter(|(_, &t)| now - t < self.grace)
            .map(|(fp, &t)| (*fp, t))
            .collect();
        carried.sort_by_key(|c| c.0);
        for (fp, _) in &carried {
            if let Some(log) = self.logs.get_mut(&fp.next_hop) {
                log.registered -= 1;
            }
        }
        let reports = self
            .logs
            .values()
            .filter(|log| log.registered > 0)
            .map(|log| {
                let missing = log.missing();
                WindowReport {
                    neighbor: log.neighbor,
                    registered: log.registered,
                    acked: log.acked,
                    missing,
                    threshold,
                    appraisal: if f64::from(missing) > threshold {
                        Appraisal::Negative
                    } else {
                        Appraisal::Positive
                    },
                }
            })
            .collect();
        self.logs.clear();
        self.registry.clear();
        self.window_start = now;
        for (fp, t) in carried {
            self.register_sent(fp, t);
        }
        reports
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: NodeId = NodeId(0);
    const C: NodeId = NodeId(2);
    const D: NodeId = NodeId(3);

    fn fp(seq: u64) -> Fingerprint {
        Fingerprint {
            origin: A,
            seq,
            next_hop: C,
        }
    }

    #[test]
    fn registration_counts_per_neighbor() {
        let mut m = Monitor::new();
        m.register_sent(fp(7), 0.1);
        assert!(m.is_registered(&fp(7)));
        assert_eq!(m.log(C).unwrap().registered, 1);
        m.register_sent(fp(8), 0.2);
        assert_eq!(m.log(C).unwrap().registered, 2);
    }

    #[test]
    fn overhearing_matches_once() {
        let mut m = Monitor::new();
        m.register_sent(fp(7), 0.1);
        assert!(m.on_overhear(C, A, 7));
        assert!(!m.is_registered(&fp(7)));
        assert_eq!(m.log(C).unwrap().acked, 1);
        assert!(!m.on_overhear(C, A, 7), "duplicate overhear is a no-op");
        assert_eq!(m.log(C).unwrap().acked, 1);
        assert!(!m.on_overhear(D, A, 9), "unrelated frame");
    }

    #[test]
    fn all_acked_is_positive_regardless_of_threshold() {
        let mut m = Monitor::new();
        for s in 0..4 {
            m.register_sent(fp(s), 0.0);
            m.on_overhear(C, A, s);
        }
        let r = m.close_window(1.0, 0.0, 20.0);
        assert_eq!(r[0].appraisal, Appraisal::Positive);
        assert_eq!(r[0].missing, 0);
    }

    #[test]
    fn uncongested_drops_are_negative() {
        let mut m = Monitor::new();
        for s in 0..4 {
            m.register_sent(fp(s), 0.0);
        }
        let r = m.close_window(1.0, 0.0, 20.0);
        assert_eq!(r[0].threshold, 0.0);
        assert_eq!(r[0].missing, 4);
        assert_eq!(r[0].appraisal, Appraisal::Negative);
    }

    #[test]
    fn congestion_raises_tolerance() {
        let mut m = Monitor::new();
        for s in 0..4 {
            m.register_sent(fp(s), 0.0);
        }
        m.on_overhear(C, A, 0);
        m.on_overhear(C, A, 1);
        let r = m.close_window(1.0, 0.25, 20.0);
        assert_eq!(r[0].threshold, 5.0);
        assert_eq!(r[0].missing, 2);
        assert_eq!(r[0].appraisal, Appraisal::Positive);
    }

    #[test]
    fn window_close_starts_fresh() {
        let mut m = Monitor::new();
        m.register_sent(fp(1), 0.5);
        m.close_window(1.0, 0.0, 20.0);
        assert_eq!(m.pending(), 0);
        assert!(m.log(C).is_none());
        assert!(!m.on_overhear(C, A, 1), "stale entries were purged");
        assert!(m.close_window(2.0, 0.0, 20.0).is_empty());
        assert_eq!(m.window_start(), 2.0);
    }

    #[test]
    fn recent_registrations_carry_over() {
        let mut m = Monitor::with_grace(0.1);
        m.register_sent(fp(1), 0.5);
        m.register_sent(fp(2), 0.95);
        let r = m.close_window(1.0, 0.0, 20.0);
        assert_eq!((r[0].registered, r[0].missing), (1, 1));
        assert!(m.is_registered(&fp(2)));
        assert!(m.on_overhear(C, A, 2));
        let r = m.close_window(2.0, 0.0, 20.0);
        assert_eq!((r[0].registered, r[0].acked), (1, 1));
        assert_eq!(r[0].appraisal, Appraisal::Positive);
    }

    #[test]
    fn route_error_clears_neighbor() {
        let mut m = Monitor::new();
        for s in 0..3 {
            m.register_sent(fp(s), 0.0);
        }
        m.register_sent(
            Fingerprint {
                origin: A,
                seq: 9,
                next_hop: D,
            },
            0.0,
        );
        m.clear_neighbor(C);
        assert!(m.log(C).is_none());
        let r = m.close_window(1.0, 0.0, 20.0);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].neighbor, D);
    }

    #[test]
    fn withdrawn_packets_are_not_counted() {
        let mut m = Monitor::new();
        m.register_sent(fp(1), 0.0);
        m.register_sent(fp(2), 0.0);
        assert!(m.withdraw(&fp(1)));
        assert!(!m.withdraw(&fp(1)));
        assert_eq!(m.log(C).unwrap().registered, 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        #[derive(Debug, Clone)]
        enum Op {
            Register(u64, u32),
            Overhear(u64, u32),
            Withdraw(u64, u32),
            Clear(u32),
        }

        fn op() -> impl Strategy<Value = Op> {
            prop_oneof![
                (0u64..20, 0u32..4).prop_map(|(s, n)| Op::Register(s, n)),
                (0u64..20, 0u32..4).prop_map(|(s, n)| Op::Overhear(s, n)),
                (0u64..20, 0u32..4).prop_map(|(s, n)| Op::Withdraw(s, n)),
                (0u32..4).prop_map(Op::Clear),
            ]
        }

        proptest! {
            #[test]
            fn accounting_stays_consistent(ops in proptest::collection::vec(op(), 0..200)) {
                let mut m = Monitor::new();
                let f = |s, n| Fingerprint { origin: A, seq: s, next_hop: NodeId(n) };
                for o in ops {
                    match o {
                        Op::Register(s, n) => m.register_sent(f(s, n), 0.0),
                        Op::Overhear(s, n) => { m.on_overhear(NodeId(n), A, s); }
                        Op::Withdraw(s, n) => { m.withdraw(&f(s, n)); }
                        Op::Clear(n) => m.clear_neighbor(NodeId(n)),
                    }
                    for log in m.logs.values() {
                        prop_assert!(log.acked <= log.registered);
                        let pending = m.registry.keys().filter(|k| k.next_hop == log.neighbor).count() as u32;
                        prop_assert_eq!(pending, log.missing());
                    }
                }
            }
        }
    }
}
