//! Dynamic Source Routing with avoid lists.
//!
//! This module holds per-node protocol state and the pure decision rules for
//! route requests and replies. Packet I/O is driven by [`crate::network`].

mod cache;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

pub use cache::{RouteCache, RouteCacheEntry};

use crate::packet::{is_loop_free, Packet};
use crate::sim::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsrParams {
    pub rreq_backoff_initial: SimTime,
    pub rreq_backoff_max: SimTime,
    pub send_buffer: usize,
    pub cache_capacity: usize,
    /// Intermediate nodes answer requests from their route cache.
    pub cache_replies: bool,
}

impl Default for DsrParams {
    fn default() -> Self {
        Self {
            rreq_backoff_initial: 0.5,
            rreq_backoff_max: 10.0,
            send_buffer: 64,
            cache_capacity: 64,
            cache_replies: true,
        }
    }
}

/// Why a route request was not processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RreqDrop {
    Duplicate,
    OwnRequest,
    /// This node is on the request's avoid list.
    Avoided,
    /// Previous hop is in this node's malicious list.
    FromMalicious,
    Loop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RreqDecision {
    Drop(RreqDrop),
    /// Answer with `path` (requester .. target).
    Reply {
        path: Vec<NodeId>,
        from_cache: bool,
    },
    Forward {
        route_record: Vec<NodeId>,
        avoid_list: Vec<NodeId>,
    },
}

/// What a node knows when a route request reaches it.
#[derive(Debug, Clone, Copy)]
pub struct RreqInput<'a> {
    pub me: NodeId,
    pub transmitter: NodeId,
    pub origin: NodeId,
    pub request_id: u64,
    pub target: NodeId,
    pub route_record: &'a [NodeId],
    pub avoid_list: &'a [NodeId],
    /// This node's malicious list (empty when the IDS is off).
    pub faulty: &'a [NodeId],
    /// Honest nodes respect avoid lists; misbehaving ones ignore them.
    pub honest: bool,
}

#[derive(Debug, Clone, Copy)]
struct Discovery {
    backoff: SimTime,
    request_id: u64,
}

#[derive(Debug, Clone)]
pub struct DsrState {
    me: NodeId,
    params: DsrParams,
    pub cache: RouteCache,
    send_buffer: BTreeMap<NodeId, VecDeque<Packet>>,
    discovery: BTreeMap<NodeId, Discovery>,
    seen_requests: HashSet<(NodeId, u64)>,
    next_request_id: u64,
    /// Avoid list sent with each of our own requests, by request id.
    outstanding: HashMap<u64, Vec<NodeId>>,
    last_rerr: HashMap<(NodeId, NodeId, NodeId), SimTime>,
    /// Data flows relayed by this node: (origin, dest) -> (route, last seen).
    relayed: BTreeMap<(NodeId, NodeId), (Vec<NodeId>, SimTime)>,
}

impl DsrState {
    pub fn new(me: NodeId, params: DsrParams) -> Self {
        Self {
            me,
            params,
            cache: RouteCache::new(me, params.cache_capacity),
            send_buffer: BTreeMap::new(),
            discovery: BTreeMap::new(),
            seen_requests: HashSet::new(),
            next_request_id: 0,
            outstanding: HashMap::new(),
            last_rerr: HashMap::new(),
            relayed: BTreeMap::new(),
        }
    }

    pub fn params(&self) -> &DsrParams {
        &self.params
    }

    /// Buffers a data packet awaiting a route. Returns the evicted oldest
    /// packet when the per-destination buffer overflows.
    pub fn buffer_data(&mut self, pkt: Packet) -> Option<Packet> {
        let q = self.send_buffer.entry(pkt.final_dest).or_default();
        q.push_back(pkt);
        if q.len() > self.params.send_buffer {
            q.pop_front()
        } else {
            None
        }
    }

    pub fn buffered(&self, dst: NodeId) -> usize {
        self.send_buffer.get(&dst).map_or(0, VecDeque::len)
    }

    pub fn buffered_total(&self) -> usize {
        self.send_buffer.values().map(VecDeque::len).sum()
    }

    pub fn buffered_packets(&self) -> impl Iterator<Item = &Packet> {
        self.send_buffer.values().flatten()
    }

    /// Destinations with buffered data, ascending.
    pub fn pending_destinations(&self) -> Vec<NodeId> {
        self.send_buffer
            .iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|(d, _)| *d)
            .collect()
    }

    pub fn pop_buffered(&mut self, dst: NodeId) -> Option<Packet> {
        self.send_buffer.get_mut(&dst)?.pop_front()
    }

    /// Starts a route discovery for `dst` unless one is already running.
    /// Returns the new request id and the delay until the first retry.
    pub fn begin_discovery(&mut self, dst: NodeId) -> Option<(u64, SimTime)> {
        if self.discovery.contains_key(&dst) {
            return None;
        }
        let backoff = self.params.rreq_backoff_initial;
        let request_id = self.fresh_request_id();
        self.discovery.insert(
            dst,
            Discovery {
                backoff,
                request_id,
            },
        );
        Some((request_id, backoff))
    }

    pub fn discovery_active(&self, dst: NodeId) -> bool {
        self.discovery.contains_key(&dst)
    }

    /// Retry timer for `dst` fired. Returns a new request id and the next
    /// retry delay if the discovery is still running.
    pub fn retry_discovery(&mut self, dst: NodeId) -> Option<(u64, SimTime)> {
        let max = self.params.rreq_backoff_max;
        self.discovery.get(&dst)?;
        let request_id = self.fresh_request_id();
        let d = self.discovery.get_mut(&dst).expect("checked above");
        d.backoff = (d.backoff * 2.0).min(max);
        d.request_id = request_id;
        Some((request_id, d.backoff))
    }

    /// Id of the latest request sent by the running discovery for `dst`.
    pub fn discovery_request(&self, dst: NodeId) -> Option<u64> {
        self.discovery.get(&dst).map(|d| d.request_id)
    }

    /// Whether this node already processed request `(origin, request_id)`.
    pub fn has_seen(&self, origin: NodeId, request_id: u64) -> bool {
        self.seen_requests.contains(&(origin, request_id))
    }

    pub fn end_discovery(&mut self, dst: NodeId) {
        self.discovery.remove(&dst);
    }

    fn fresh_request_id(&mut self) -> u64 {
        let id = self.next_request_id;
        self.next_request_id += 1;
        self.seen_requests.insert((self.me, id));
        id
    }

    pub fn remember_request(&mut self, request_id: u64, avoid_list: Vec<NodeId>) {
        self.outstanding.insert(request_id, avoid_list);
        // keep only recent requests
        if self.outstanding.len() > 64 {
            let oldest = *self.outstanding.keys().min().expect("non-empty");
            self.outstanding.remove(&oldest);
        }
    }

    pub fn request_avoid_list(&self, request_id: u64) -> Option<&[NodeId]> {
        self.outstanding.get(&request_id).map(Vec::as_slice)
    }

    /// Applies the request rules: duplicate suppression, avoid-list check,
    /// reply at the target or from cache, otherwise forward with this node
    /// appended and its faulty list merged into the avoid list.
    pub fn handle_rreq<F>(&mut self, input: RreqInput<'_>, score: F) -> RreqDecision
    where
        F: FnMut(&[NodeId]) -> f64,
    {
        let me = input.me;
        if input.origin == me {
            return RreqDecision::Drop(RreqDrop::OwnRequest);
        }
        if input.faulty.contains(&input.transmitter) {
            return RreqDecision::Drop(RreqDrop::FromMalicious);
        }
        if input.route_record.contains(&me) {
            return RreqDecision::Drop(RreqDrop::Loop);
        }
        let mut record = input.route_record.to_vec();
        record.push(me);
        if !self.seen_requests.insert((input.origin, input.request_id)) {
            return RreqDecision::Drop(RreqDrop::Duplicate);
        }
        if input.honest && input.avoid_list.contains(&me) {
            return RreqDecision::Drop(RreqDrop::Avoided);
        }
        if input.target == me {
            return RreqDecision::Reply {
                path: record,
                from_cache: false,
            };
        }
        if self.params.cache_replies {
            if let Some(suffix) = self.cache.best_route(input.target, score) {
                let mut path = record.clone();
                path.extend_from_slice(&suffix[1..]);
                let clean = !suffix
                    .iter()
                    .any(|n| input.avoid_list.contains(n) || input.faulty.contains(n));
                if is_loop_free(&path) && (clean || !input.honest) {
                    return RreqDecision::Reply {
                        path,
                        from_cache: true,
                    };
                }
            }
        }
        let mut avoid_list = input.avoid_list.to_vec();
        for &f in input.faulty {
            if !avoid_list.contains(&f) {
                avoid_list.push(f);
            }
        }
        RreqDecision::Forward {
            route_record: record,
            avoid_list,
        }
    }

    /// Records a data flow relayed through this node.
    pub fn note_relayed(&mut self, pkt: &Packet, now: SimTime) {
        self.relayed.insert(
            (pkt.origin, pkt.final_dest),
            (pkt.source_route.clone(), now),
        );
    }

    /// Relayed flows seen since `since` whose next hop after this node is `next`.
    pub fn flows_via(&self, next: NodeId, since: SimTime) -> Vec<(NodeId, Vec<NodeId>)> {
        self.relayed
            .iter()
            .filter(|(_, (route, seen))| {
                *seen >= since && route.windows(2).any(|w| w[0] == self.me && w[1] == next)
            })
            .map(|((origin, _), (route, _))| (*origin, route.clone()))
            .collect()
    }

    /// Rate limit for route errors about one link sent to one origin.
    pub fn should_send_rerr(
        &mut self,
        link: (NodeId, NodeId),
        origin: NodeId,
        now: SimTime,
        gap: SimTime,
    ) -> bool {
        let key = (link.0, link.1, origin);
        match self.last_rerr.get(&key) {
            Some(&t) if now - t < gap => false,
            _ => {
                self.last_rerr.insert(key, now);
                true
            }
        }
    }
}

/// Whether a route reply may be accepted (or forwarded) by a node.
///
/// Replies are refused when the previous hop or any node on the path is in
/// the node's malicious list, or when the path touches the avoid list the
/// node itself sent with the request.
pub fn rrep_admissible(
    path: &[NodeId],
    transmitter: NodeId,
    faulty: &[NodeId],
    own_avoid_list: Option<&[NodeId]>,
) -> bool {
    if faulty.contains(&transmitter) || path.iter().any(|n| faulty.contains(n)) {
        return false;
    }
    if let Some(avoid) = own_avoid_list {
        if path.iter().any(|n| avoid.contains(n)) {
            return false;
        }
    }
    is_loop_free(path)
}

/// Route from `node` back to the start of `route` (reversed prefix).
pub fn reverse_prefix(route: &[NodeId], node: NodeId) -> Option<Vec<NodeId>> {
    let i = route.iter().position(|&n| n == node)?;
    Some(route[..=i].iter().rev().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&x| NodeId(x)).collect()
    }

    const A: NodeId = NodeId(0);
    const B: NodeId = NodeId(1);
    const D: NodeId = NodeId(3);
    const M: NodeId = NodeId(9);
    const X: NodeId = NodeId(7);

    fn input<'a>(
        me: NodeId,
        record: &'a [NodeId],
        avoid: &'a [NodeId],
        faulty: &'a [NodeId],
    ) -> RreqInput<'a> {
        RreqInput {
            me,
            transmitter: *record.last().unwrap(),
            origin: record[0],
            request_id: 1,
            target: D,
            route_record: record,
            avoid_list: avoid,
            faulty,
            honest: true,
        }
    }

    fn hops(p: &[NodeId]) -> f64 {
        1.0 / (p.len() - 1) as f64
    }

    #[test]
    fn avoided_honest_node_drops() {
        let mut s = DsrState::new(M, DsrParams::default());
        let rec = n(&[0]);
        let d = s.handle_rreq(input(M, &rec, &[M], &[]), hops);
        assert_eq!(d, RreqDecision::Drop(RreqDrop::Avoided));
    }

    #[test]
    fn misbehaving_node_ignores_avoid_list() {
        let mut s = DsrState::new(M, DsrParams::default());
        let rec = n(&[0]);
        let mut i = input(M, &rec, &[M], &[]);
        i.honest = false;
        match s.handle_rreq(i, hops) {
            RreqDecision::Forward { route_record, .. } => assert_eq!(route_record, vec![A, M]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn forward_merges_faulty_list_without_duplicates() {
        let mut s = DsrState::new(B, DsrParams::default());
        let rec = n(&[0]);
        let d = s.handle_rreq(input(B, &rec, &[X], &[M, X]), hops);
        assert_eq!(
            d,
            RreqDecision::Forward {
                route_record: vec![A, B],
                avoid_list: vec![X, M],
            }
        );
        // second copy of the same request is suppressed
        let d = s.handle_rreq(input(B, &rec, &[X], &[M]), hops);
        assert_eq!(d, RreqDecision::Drop(RreqDrop::Duplicate));
    }

    #[test]
    fn target_replies_with_record() {
        let mut s = DsrState::new(D, DsrParams::default());
        let rec = n(&[0, 1, 2]);
        let d = s.handle_rreq(input(D, &rec, &[], &[]), hops);
        assert_eq!(
            d,
            RreqDecision::Reply {
                path: n(&[0, 1, 2, 3]),
                from_cache: false
            }
        );
    }

    #[test]
    fn target_answers_first_copy_only() {
        let mut s = DsrState::new(D, DsrParams::default());
        let r1 = n(&[0, 1]);
        let r2 = n(&[0, 2]);
        assert!(matches!(
            s.handle_rreq(input(D, &r1, &[], &[]), hops),
            RreqDecision::Reply { .. }
        ));
        assert_eq!(
            s.handle_rreq(input(D, &r2, &[], &[]), hops),
            RreqDecision::Drop(RreqDrop::Duplicate)
        );
    }

    #[test]
    fn cache_reply_splices_route() {
        let mut s = DsrState::new(B, DsrParams::default());
        s.cache.insert(n(&[1, 5, 3]), 0.5, 0.0);
        let rec = n(&[0]);
        let d = s.handle_rreq(input(B, &rec, &[], &[]), hops);
        assert_eq!(
            d,
            RreqDecision::Reply {
                path: n(&[0, 1, 5, 3]),
                from_cache: true
            }
        );
    }

    #[test]
    fn honest_cache_reply_respects_avoid_list() {
        let mut s = DsrState::new(B, DsrParams::default());
        s.cache.insert(n(&[1, 9, 3]), 0.5, 0.0);
        let rec = n(&[0]);
        let d = s.handle_rreq(input(B, &rec, &[M], &[]), hops);
        assert!(matches!(d, RreqDecision::Forward { .. }));
    }

    #[test]
    fn requests_from_malicious_neighbors_ignored() {
        let mut s = DsrState::new(B, DsrParams::default());
        let rec = n(&[0, 9]);
        let d = s.handle_rreq(input(B, &rec, &[], &[M]), hops);
        assert_eq!(d, RreqDecision::Drop(RreqDrop::FromMalicious));
    }

    #[test]
    fn reply_suppression_rules() {
        let path = n(&[0, 9, 3]);
        assert!(!rrep_admissible(&path, M, &[M], None));
        assert!(!rrep_admissible(&path, NodeId(2), &[M], None));
        assert!(!rrep_admissible(&path, M, &[], Some(&[M])));
        assert!(rrep_admissible(&path, M, &[], Some(&[])));
    }

    #[test]
    fn discovery_backoff_doubles_and_caps() {
        let mut s = DsrState::new(A, DsrParams::default());
        let (id0, d0) = s.begin_discovery(D).unwrap();
        assert_eq!(d0, 0.5);
        assert!(
            s.begin_discovery(D).is_none(),
            "suppressed while in progress"
        );
        let mut delays = vec![];
        for _ in 0..7 {
            let (id, d) = s.retry_discovery(D).unwrap();
            assert!(id > id0);
            delays.push(d);
        }
        assert_eq!(delays, vec![1.0, 2.0, 4.0, 8.0, 10.0, 10.0, 10.0]);
        s.end_discovery(D);
        assert!(s.retry_discovery(D).is_none());
        assert_eq!(s.begin_discovery(D).unwrap().1, 0.5);
    }

    #[test]
    fn send_buffer_drops_oldest() {
        let mut s = DsrState::new(
            A,
            DsrParams {
                send_buffer: 2,
                ..DsrParams::default()
            },
        );
        assert!(s.buffer_data(Packet::data(A, D, 0, 64)).is_none());
        assert!(s.buffer_data(Packet::data(A, D, 1, 64)).is_none());
        let evicted = s.buffer_data(Packet::data(A, D, 2, 64)).unwrap();
        assert_eq!(evicted.seq, 0);
        assert_eq!(s.buffered(D), 2);
    }

    #[test]
    fn relayed_flows_by_next_hop() {
        let mut s = DsrState::new(B, DsrParams::default());
        let mut p = Packet::data(A, D, 0, 64);
        p.source_route = n(&[0, 1, 9, 3]);
        s.note_relayed(&p, 5.0);
        assert_eq!(s.flows_via(M, 4.0), vec![(A, p.source_route.clone())]);
        assert!(s.flows_via(M, 6.0).is_empty());
        assert!(s.flows_via(D, 0.0).is_empty());
    }

    #[test]
    fn reverse_prefix_builds_return_route() {
        assert_eq!(
            reverse_prefix(&n(&[0, 1, 2, 3]), NodeId(2)),
            Some(n(&[2, 1, 0]))
        );
        assert_eq!(reverse_prefix(&n(&[0, 1]), NodeId(5)), None);
    }
}
