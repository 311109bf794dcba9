//! The simulation engine.
//!
//! [`Simulation`] owns the scheduler, the nodes' link queues, DSR state and
//! (with the IDS enabled) each node's monitor and reputation table, and moves
//! packets between them. Every event is handled by one method below; nodes
//! only ever touch their own state, and frames reach other nodes through
//! scheduled receptions.

use std::collections::BTreeMap;
use std::rc::Rc;

use rand_chacha::ChaCha8Rng;

use crate::config::{Protocol, ScenarioConfig};
use crate::dsr::{
    reverse_prefix, rrep_admissible, DsrParams, DsrState, RouteCache, RreqDecision, RreqInput,
};
use crate::ids::{
    path_priority, Appraisal, Category, Evidence, FadeOutcome, Fingerprint, IdsConfig, Monitor,
    ReputationTable,
};
use crate::link::{
    deliver, EnqueueOutcome, Frame, InterfaceQueue, LinkDest, LinkParams, Reception,
};
use crate::metrics::{DropCause, MetricEvent, Metrics, MetricsReport};
use crate::mobility::Mobility;
use crate::packet::{Packet, PacketBody, PacketKind};
use crate::rng::{stream, StreamLabel};
use crate::scenario::Scenario;
use crate::sim::{RunSummary, Scheduler, SchedulerStats, SimTime};
use crate::trace::TraceRecord;
use crate::workload::{BehaviorProfile, CbrConnection, Decision};
use crate::NodeId;

/// Registrations younger than this at window close wait for the next window.
const PACK_GRACE: SimTime = 0.1;
/// Minimum spacing of identical route errors to one origin.
const RERR_GAP: SimTime = 0.5;
/// A convicted node's flows seen within this many windows get a route error.
const FLOW_MEMORY_WINDOWS: f64 = 2.0;

/// Externally scripted stimuli, mainly for tests and examples.
#[derive(Debug, Clone, PartialEq)]
pub enum Injection {
    /// `receiver` gets a WARNING from `accuser` about `accused`.
    Warning {
        receiver: NodeId,
        accuser: NodeId,
        accused: NodeId,
    },
    /// Puts `path` into the route cache of its first node.
    Route { path: Vec<NodeId> },
}

#[derive(Debug, Clone)]
enum Event {
    CbrSend {
        conn: usize,
        k: u64,
    },
    TxComplete {
        node: NodeId,
    },
    Receive {
        receiver: NodeId,
        frame: Rc<Frame>,
        kind: Reception,
    },
    WindowClose {
        node: NodeId,
        k: u64,
    },
    FadeTick {
        observer: NodeId,
        subject: NodeId,
    },
    KnockDeadline {
        observer: NodeId,
        suspect: NodeId,
        seq: u64,
    },
    RreqRetry {
        node: NodeId,
        dst: NodeId,
        request_id: u64,
    },
    Inject(Injection),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub protocol: Protocol,
    pub duration: SimTime,
    pub link: LinkParams,
    pub dsr: DsrParams,
    pub ids: IdsConfig,
    pub count_forwards: bool,
    pub trace: bool,
}

impl SimSettings {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            protocol: cfg.protocol,
            duration: cfg.duration,
            link: cfg.link_params(),
            dsr: cfg.dsr_params(),
            ids: cfg.ids,
            count_forwards: cfg.count_forwards,
            trace: false,
        }
    }
}

impl Default for SimSettings {
    fn default() -> Self {
        Self::from_config(&ScenarioConfig::default())
    }
}

struct IdsState {
    monitor: Monitor,
    table: ReputationTable,
    /// Outstanding knock tests: suspect -> probe sequence number.
    knocks: BTreeMap<NodeId, u64>,
}

struct Node {
    behavior: BehaviorProfile,
    queue: InterfaceQueue,
    dsr: DsrState,
    ids: Option<IdsState>,
    next_seq: u64,
}

impl Node {
    fn fresh_seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    fn faulty(&self) -> Vec<NodeId> {
        self.ids
            .as_ref()
            .map(|i| i.table.faulty_list())
            .unwrap_or_default()
    }

    fn thinks_malicious(&self, n: NodeId) -> bool {
        self.ids.as_ref().is_some_and(|i| i.table.is_malicious(n))
    }
}

/// Outcome of a finished run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub report: MetricsReport,
    pub summary: RunSummary,
    pub stats: SchedulerStats,
    pub trace: Vec<TraceRecord>,
}

pub struct Simulation {
    settings: SimSettings,
    mobility: Mobility,
    connections: Vec<CbrConnection>,
    nodes: Vec<Node>,
    sched: Scheduler<Event>,
    metrics: Metrics,
    adversary: ChaCha8Rng,
    trace: Option<Vec<TraceRecord>>,
}

fn hop_score(path: &[NodeId]) -> f64 {
    1.0 / (path.len() - 1) as f64
}

impl Simulation {
    /// Builds a simulation of `scenario`; `seed` feeds the adversary stream.
    pub fn new(scenario: Scenario, settings: SimSettings, seed: u64) -> Self {
        let ids_on = settings.protocol.ids_enabled();
        let nodes: Vec<Node> = scenario
            .behaviors
            .iter()
            .enumerate()
            .map(|(i, &behavior)| Node {
                behavior,
                queue: InterfaceQueue::new(settings.link.queue_capacity),
                dsr: DsrState::new(NodeId(i as u32), settings.dsr),
                ids: ids_on.then(|| IdsState {
                    monitor: Monitor::with_grace(PACK_GRACE),
                    table: ReputationTable::new(settings.ids),
                    knocks: BTreeMap::new(),
                }),
                next_seq: 0,
            })
            .collect();
        assert_eq!(
            nodes.len(),
            scenario.mobility.node_count(),
            "one trajectory per node"
        );
        let mut sim = Self {
            metrics: Metrics::new(settings.count_forwards),
            trace: settings.trace.then(Vec::new),
            settings,
            mobility: scenario.mobility,
            connections: scenario.connections,
            nodes,
            sched: Scheduler::new(),
            adversary: stream(seed, StreamLabel::Adversary),
        };
        for conn in 0..sim.connections.len() {
            let t = sim.connections[conn].start_time;
            sim.at(t, Event::CbrSend { conn, k: 0 });
        }
        if ids_on {
            let w = sim.settings.ids.timing_window;
            for i in 0..sim.nodes.len() {
                sim.at(
                    w,
                    Event::WindowClose {
                        node: NodeId(i as u32),
                        k: 1,
                    },
                );
            }
        }
        sim
    }

    /// Random scenario for `cfg` and run seed `seed`.
    pub fn from_config(cfg: &ScenarioConfig, seed: u64) -> Self {
        Self::new(
            Scenario::generate(cfg, seed),
            SimSettings::from_config(cfg),
            seed,
        )
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn settings(&self) -> &SimSettings {
        &self.settings
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn mobility(&self) -> &Mobility {
        &self.mobility
    }

    pub fn connections(&self) -> &[CbrConnection] {
        &self.connections
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    /// Reputation table of `node`, `None` when the IDS is off.
    pub fn table(&self, node: NodeId) -> Option<&ReputationTable> {
        self.nodes[node.index()].ids.as_ref().map(|i| &i.table)
    }

    pub fn monitor(&self, node: NodeId) -> Option<&Monitor> {
        self.nodes[node.index()].ids.as_ref().map(|i| &i.monitor)
    }

    pub fn cache(&self, node: NodeId) -> &RouteCache {
        &self.nodes[node.index()].dsr.cache
    }

    pub fn queue(&self, node: NodeId) -> &InterfaceQueue {
        &self.nodes[node.index()].queue
    }

    pub fn trace(&self) -> &[TraceRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    /// Schedules an injected stimulus at `time`.
    pub fn inject(&mut self, time: SimTime, injection: Injection) {
        self.at(time, Event::Inject(injection));
    }

    /// No node's cache holds a path through a node it considers malicious.
    pub fn caches_are_clean(&self) -> bool {
        self.nodes.iter().all(|n| match &n.ids {
            None => true,
            Some(ids) => n
                .dsr
                .cache
                .entries()
                .iter()
                .all(|e| e.path.iter().all(|&p| !ids.table.is_malicious(p))),
        })
    }

    /// Processes every event up to `t_end`.
    pub fn run_until(&mut self, t_end: SimTime) -> RunSummary {
        let mut processed = 0;
        while let Some((_, ev)) = self.sched.pop_until(t_end) {
            processed += 1;
            self.handle(ev);
        }
        let rest = self
            .sched
            .run_until(t_end, |_, _, _| unreachable!("queue drained"));
        RunSummary { processed, ..rest }
    }

    /// Runs to the configured duration and reports.
    pub fn run(mut self) -> RunResult {
        let summary = self.run_until(self.settings.duration);
        let stats = self.sched.stats();
        RunResult {
            report: self.report(),
            summary: RunSummary {
                processed: stats.processed,
                ..summary
            },
            stats,
            trace: self.trace.take().unwrap_or_default(),
        }
    }

    /// Metrics so far, counting undelivered live data as in flight.
    pub fn report(&self) -> MetricsReport {
        self.metrics.finalize(self.in_flight_data())
    }

    /// Data packets (not knock probes) still buffered, queued or on the air.
    pub fn in_flight_data(&self) -> u64 {
        let live = |p: &Packet| p.is_data() && !p.knock;
        let mut n = 0;
        for node in &self.nodes {
            n += node.dsr.buffered_packets().filter(|p| live(p)).count();
            n += node.queue.frames().filter(|f| live(&f.packet)).count();
        }
        n += self
            .sched
            .pending_payloads()
            .filter(|(_, e)| {
                matches!(e, Event::Receive { frame, kind: Reception::Addressed, .. } if live(&frame.packet))
            })
            .count();
        n as u64
    }

    // ---- plumbing ----

    fn at(&mut self, t: SimTime, ev: Event) {
        self.sched
            .schedule(t, ev)
            .expect("events are never scheduled in the past");
    }

    fn record(&mut self, node: NodeId, kind: &'static str, detail: impl FnOnce() -> String) {
        if let Some(tr) = &mut self.trace {
            tr.push(TraceRecord {
                time: self.sched.now(),
                node,
                kind,
                detail: detail(),
            });
        }
    }

    fn count(&mut self, ev: MetricEvent) {
        self.metrics.record(ev);
    }

    fn drop_data(&mut self, node: NodeId, pkt: &Packet, cause: DropCause, why: &'static str) {
        self.count(MetricEvent::DataDropped {
            cause,
            knock: pkt.knock,
        });
        self.record(node, "data-drop", || {
            format!(
                "{} {} {}->{} seq {}",
                cause.as_str(),
                why,
                pkt.origin,
                pkt.final_dest,
                pkt.seq
            )
        });
    }

    fn ids_on(&self) -> bool {
        self.settings.protocol.ids_enabled()
    }

    fn enqueue(&mut self, node: NodeId, dest: LinkDest, packet: Rc<Packet>) -> EnqueueOutcome {
        let frame = Frame {
            transmitter: node,
            link_dest: dest,
            packet,
            tx_time: self.now(),
        };
        let out = self.nodes[node.index()].queue.enqueue(frame);
        if out == EnqueueOutcome::Accepted {
            self.kick(node);
        }
        out
    }

    fn kick(&mut self, node: NodeId) {
        let q = &mut self.nodes[node.index()].queue;
        if let Some(f) = q.begin_service() {
            let dt = self.settings.link.service_time(f.packet.wire_size());
            let t = self.now() + dt;
            self.at(t, Event::TxComplete { node });
        }
    }

    fn select_route(&mut self, node: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
        let Node { dsr, ids, .. } = &mut self.nodes[node.index()];
        match ids {
            Some(ids) => dsr.cache.best_route(dst, |p| path_priority(p, &ids.table)),
            None => dsr.cache.best_route(dst, hop_score),
        }
    }

    fn score(&self, node: NodeId, path: &[NodeId]) -> f64 {
        match &self.nodes[node.index()].ids {
            Some(ids) => path_priority(path, &ids.table),
            None => hop_score(path),
        }
    }

    fn handle(&mut self, ev: Event) {
        match ev {
            Event::CbrSend { conn, k } => self.on_cbr(conn, k),
            Event::TxComplete { node } => self.on_tx_complete(node),
            Event::Receive {
                receiver,
                frame,
                kind,
            } => self.on_receive(receiver, frame, kind),
            Event::WindowClose { node, k } => self.on_window_close(node, k),
            Event::FadeTick { observer, subject } => self.on_fade_tick(observer, subject),
            Event::KnockDeadline {
                observer,
                suspect,
                seq,
            } => self.on_knock_deadline(observer, suspect, seq),
            Event::RreqRetry {
                node,
                dst,
                request_id,
            } => self.on_rreq_retry(node, dst, request_id),
            Event::Inject(inj) => self.on_inject(inj),
        }
    }

    // ---- traffic and routing ----

    fn on_cbr(&mut self, conn: usize, k: u64) {
        let c = &self.connections[conn];
        let (src, dst, payload) = (c.src, c.dst, c.payload);
        let next = c.start_time + (k + 1) as f64 * c.interval();
        if self.now() >= self.settings.duration {
            return;
        }
        self.at(next, Event::CbrSend { conn, k: k + 1 });
        self.count(MetricEvent::DataSent { knock: false });
        let seq = self.nodes[src.index()].fresh_seq();
        self.record(src, "cbr-send", || format!("{src}->{dst} seq {seq}"));
        let pkt = Packet::data(src, dst, seq, payload);
        if let Some(old) = self.nodes[src.index()].dsr.buffer_data(pkt) {
            self.drop_data(src, &old, DropCause::NoRoute, "buffer-full");
        }
        self.pump(src);
    }

    /// Moves buffered data into the interface queue while routes and queue
    /// space allow; starts discoveries for destinations without a route.
    fn pump(&mut self, node: NodeId) {
        for dst in self.nodes[node.index()].dsr.pending_destinations() {
            loop {
                let n = &self.nodes[node.index()];
                if n.queue.free() == 0 {
                    return;
                }
                if n.dsr.buffered(dst) == 0 {
                    break;
                }
                match self.select_route(node, dst) {
                    Some(route) => {
                        let pkt = self.nodes[node.index()]
                            .dsr
                            .pop_buffered(dst)
                            .expect("buffer is non-empty");
                        self.nodes[node.index()].dsr.end_discovery(dst);
                        self.send_on_route(node, pkt, route);
                    }
                    None => {
                        self.start_discovery(node, dst);
                        break;
                    }
                }
            }
        }
    }

    fn send_on_route(&mut self, node: NodeId, mut pkt: Packet, route: Vec<NodeId>) {
        let next = route[1];
        pkt.source_route = route;
        let pkt = Rc::new(pkt);
        self.transmit_data(node, next, pkt);
    }

    /// Hands a data packet to the link towards `next`, registering it with
    /// the monitor when `next` is expected to forward it.
    fn transmit_data(&mut self, node: NodeId, next: NodeId, pkt: Rc<Packet>) -> bool {
        match self.enqueue(node, LinkDest::Unicast(next), Rc::clone(&pkt)) {
            EnqueueOutcome::Accepted => {
                if next != pkt.final_dest {
                    let now = self.now();
                    if let Some(ids) = &mut self.nodes[node.index()].ids {
                        ids.monitor.register_sent(
                            Fingerprint {
                                origin: pkt.origin,
                                seq: pkt.seq,
                                next_hop: next,
                            },
                            now,
                        );
                    }
                }
                true
            }
            EnqueueOutcome::DroppedOverflow => {
                self.drop_data(node, &pkt, DropCause::QueueOverflow, "queue-full");
                false
            }
        }
    }

    fn start_discovery(&mut self, node: NodeId, dst: NodeId) {
        if let Some((id, delay)) = self.nodes[node.index()].dsr.begin_discovery(dst) {
            self.send_rreq(node, dst, id);
            let t = self.now() + delay;
            self.at(
                t,
                Event::RreqRetry {
                    node,
                    dst,
                    request_id: id,
                },
            );
        }
    }

    fn on_rreq_retry(&mut self, node: NodeId, dst: NodeId, request_id: u64) {
        let n = &mut self.nodes[node.index()];
        if n.dsr.discovery_request(dst) != Some(request_id) {
            return;
        }
        if n.dsr.buffered(dst) == 0 {
            n.dsr.end_discovery(dst);
            return;
        }
        if self.select_route(node, dst).is_some() {
            self.nodes[node.index()].dsr.end_discovery(dst);
            self.pump(node);
            return;
        }
        if let Some((id, delay)) = self.nodes[node.index()].dsr.retry_discovery(dst) {
            self.send_rreq(node, dst, id);
            let t = self.now() + delay;
            self.at(
                t,
                Event::RreqRetry {
                    node,
                    dst,
                    request_id: id,
                },
            );
        }
    }

    fn send_rreq(&mut self, node: NodeId, dst: NodeId, id: u64) {
        let faulty = self.nodes[node.index()].faulty();
        self.nodes[node.index()]
            .dsr
            .remember_request(id, faulty.clone());
        self.record(node, "rreq", || {
            format!("originate {node}->{dst} id {id} avoid {faulty:?}")
        });
        let pkt = Packet {
            origin: node,
            final_dest: dst,
            seq: id,
            source_route: Vec::new(),
            payload_size: 0,
            knock: false,
            body: PacketBody::Rreq {
                route_record: vec![node],
                avoid_list: faulty,
            },
        };
        self.count(MetricEvent::Control {
            kind: PacketKind::Rreq,
            originated: true,
        });
        self.enqueue(node, LinkDest::Broadcast, Rc::new(pkt));
    }

    fn on_tx_complete(&mut self, node: NodeId) {
        let frame = self.nodes[node.index()]
            .queue
            .finish_service()
            .expect("a frame was in service");
        let now = self.now();
        let receivers = deliver(&frame, &self.mobility, now);
        self.record(node, "tx", || {
            let p = &frame.packet;
            let to = match frame.link_dest {
                LinkDest::Unicast(d) => d.to_string(),
                LinkDest::Broadcast => "*".into(),
            };
            format!(
                "{} {}->{} seq {} to {} heard {}",
                p.kind(),
                p.origin,
                p.final_dest,
                p.seq,
                to,
                receivers.len()
            )
        });
        let addressed = receivers.iter().any(|(_, k)| *k == Reception::Addressed);
        let frame = Rc::new(frame);
        let t = now + self.settings.link.propagation_delay;
        for (receiver, kind) in receivers {
            self.at(
                t,
                Event::Receive {
                    receiver,
                    frame: Rc::clone(&frame),
                    kind,
                },
            );
        }
        if let LinkDest::Unicast(next) = frame.link_dest {
            if !addressed {
                self.link_failure(node, &frame, next);
            }
        }
        self.kick(node);
        self.pump(node);
    }

    fn link_failure(&mut self, node: NodeId, frame: &Frame, next: NodeId) {
        let pkt = &frame.packet;
        self.record(node, "link-fail", || format!("{} to {next}", pkt.kind()));
        self.nodes[node.index()].dsr.cache.prune_link(node, next);
        if !pkt.is_data() {
            return;
        }
        self.drop_data(node, pkt, DropCause::LinkLoss, "unreachable");
        let mut knock_na = false;
        if let Some(ids) = &mut self.nodes[node.index()].ids {
            ids.monitor.withdraw(&Fingerprint {
                origin: pkt.origin,
                seq: pkt.seq,
                next_hop: next,
            });
            if pkt.knock && pkt.origin == node && ids.knocks.get(&next) == Some(&pkt.seq) {
                ids.knocks.remove(&next);
                knock_na = true;
            }
        }
        if knock_na {
            self.record(node, "knock", || format!("NA {next} unreachable"));
        }
        if pkt.origin != node {
            self.send_rerr(node, (node, next), pkt.origin, &pkt.source_route);
        }
    }

    fn send_rerr(
        &mut self,
        node: NodeId,
        link: (NodeId, NodeId),
        origin: NodeId,
        route: &[NodeId],
    ) {
        let now = self.now();
        if !self.nodes[node.index()]
            .dsr
            .should_send_rerr(link, origin, now, RERR_GAP)
        {
            return;
        }
        let Some(back) = reverse_prefix(route, node) else {
            return;
        };
        if back.len() < 2 {
            return;
        }
        self.record(node, "rerr", || {
            format!("originate {}-{} to {origin}", link.0, link.1)
        });
        let next = back[1];
        let pkt = Packet {
            origin: node,
            final_dest: origin,
            seq: 0,
            source_route: back,
            payload_size: 0,
            knock: false,
            body: PacketBody::Rerr { broken_link: link },
        };
        self.count(MetricEvent::Control {
            kind: PacketKind::Rerr,
            originated: true,
        });
        self.enqueue(node, LinkDest::Unicast(next), Rc::new(pkt));
    }

    fn on_receive(&mut self, node: NodeId, frame: Rc<Frame>, kind: Reception) {
        let pkt = Rc::clone(&frame.packet);
        if pkt.is_data() && self.ids_on() {
            self.overhear_data(node, frame.transmitter, &pkt);
        }
        if kind == Reception::Promiscuous {
            return;
        }
        match &pkt.body {
            PacketBody::Data => self.on_data(node, frame.transmitter, pkt),
            PacketBody::Rreq {
                route_record,
                avoid_list,
            } => self.on_rreq(node, frame.transmitter, &pkt, route_record, avoid_list),
            PacketBody::Rrep { request_id, path } => {
                self.on_rrep(node, frame.transmitter, &pkt, *request_id, path)
            }
            PacketBody::Rerr { broken_link } => self.on_rerr(node, &pkt, *broken_link),
            PacketBody::Warning { accused } => self.on_warning(node, frame.transmitter, *accused),
        }
    }

    fn on_data(&mut self, node: NodeId, transmitter: NodeId, pkt: Rc<Packet>) {
        let n = &self.nodes[node.index()];
        if n.thinks_malicious(transmitter) || (pkt.origin != node && n.thinks_malicious(pkt.origin))
        {
            self.drop_data(node, &pkt, DropCause::NoRoute, "refused");
            return;
        }
        if pkt.final_dest == node {
            self.count(MetricEvent::DataReceived { knock: pkt.knock });
            self.record(node, "data-recv", || {
                format!("{}->{} seq {}", pkt.origin, node, pkt.seq)
            });
            return;
        }
        let Some(next) = pkt.next_hop_after(node) else {
            self.drop_data(node, &pkt, DropCause::NoRoute, "not-on-route");
            return;
        };
        let behavior = self.nodes[node.index()].behavior;
        if behavior.decide(&pkt, &mut self.adversary) == Decision::Drop {
            self.drop_data(node, &pkt, DropCause::Behavior, "misbehavior");
            return;
        }
        if self.nodes[node.index()].thinks_malicious(next) {
            self.drop_data(node, &pkt, DropCause::NoRoute, "next-hop-malicious");
            self.send_rerr(node, (node, next), pkt.origin, &pkt.source_route);
            return;
        }
        let now = self.now();
        self.nodes[node.index()].dsr.note_relayed(&pkt, now);
        self.record(node, "data-fwd", || {
            format!(
                "{}->{} seq {} to {next}",
                pkt.origin, pkt.final_dest, pkt.seq
            )
        });
        self.transmit_data(node, next, pkt);
    }

    fn on_rreq(
        &mut self,
        node: NodeId,
        transmitter: NodeId,
        pkt: &Packet,
        route_record: &[NodeId],
        avoid_list: &[NodeId],
    ) {
        let fresh = !self.nodes[node.index()].dsr.has_seen(pkt.origin, pkt.seq);
        let n = &self.nodes[node.index()];
        let faulty = n.faulty();
        let honest = !n.behavior.is_malicious();
        let input = RreqInput {
            me: node,
            transmitter,
            origin: pkt.origin,
            request_id: pkt.seq,
            target: pkt.final_dest,
            route_record,
            avoid_list,
            faulty: &faulty,
            honest,
        };
        let decision = {
            let Node { dsr, ids, .. } = &mut self.nodes[node.index()];
            match ids {
                Some(ids) => dsr.handle_rreq(input, |p| path_priority(p, &ids.table)),
                None => dsr.handle_rreq(input, hop_score),
            }
        };
        let evidence_ok = fresh
            && !matches!(
                decision,
                RreqDecision::Drop(
                    crate::dsr::RreqDrop::FromMalicious | crate::dsr::RreqDrop::OwnRequest
                )
            );
        if evidence_ok && self.ids_on() {
            for &subject in avoid_list {
                if subject != node {
                    self.indirect_evidence(node, subject, Evidence::AvoidList);
                }
            }
        }
        match decision {
            RreqDecision::Drop(why) => {
                if why != crate::dsr::RreqDrop::Duplicate {
                    self.record(node, "rreq", || {
                        format!("drop {why:?} from {} id {}", pkt.origin, pkt.seq)
                    });
                }
            }
            RreqDecision::Reply { path, from_cache } => {
                let mut back: Vec<NodeId> = route_record.to_vec();
                back.push(node);
                back.reverse();
                self.record(node, "rrep", || {
                    format!("originate {path:?} cache {from_cache}")
                });
                let next = back[1];
                let reply = Packet {
                    origin: node,
                    final_dest: pkt.origin,
                    seq: pkt.seq,
                    source_route: back,
                    payload_size: 0,
                    knock: false,
                    body: PacketBody::Rrep {
                        request_id: pkt.seq,
                        path,
                    },
                };
                self.count(MetricEvent::Control {
                    kind: PacketKind::Rrep,
                    originated: true,
                });
                self.enqueue(node, LinkDest::Unicast(next), Rc::new(reply));
            }
            RreqDecision::Forward {
                route_record,
                avoid_list,
            } => {
                let fwd = Packet {
                    body: PacketBody::Rreq {
                        route_record,
                        avoid_list,
                    },
                    ..pkt.clone()
                };
                self.count(MetricEvent::Control {
                    kind: PacketKind::Rreq,
                    originated: false,
                });
                self.enqueue(node, LinkDest::Broadcast, Rc::new(fwd));
            }
        }
    }

    fn on_rrep(
        &mut self,
        node: NodeId,
        transmitter: NodeId,
        pkt: &Packet,
        request_id: u64,
        path: &[NodeId],
    ) {
        let n = &self.nodes[node.index()];
        let faulty = n.faulty();
        let own_avoid = (pkt.final_dest == node)
            .then(|| n.dsr.request_avoid_list(request_id))
            .flatten();
        if !rrep_admissible(path, transmitter, &faulty, own_avoid) {
            self.record(node, "rrep", || {
                format!("suppress {path:?} from {transmitter}")
            });
            return;
        }
        let Some(i) = path.iter().position(|&p| p == node) else {
            return;
        };
        let now = self.now();
        let suffix = path[i..].to_vec();
        if suffix.len() >= 2 {
            let score = self.score(node, &suffix);
            if score > 0.0 {
                self.nodes[node.index()]
                    .dsr
                    .cache
                    .insert(suffix, score, now);
            }
        }
        if pkt.final_dest == node {
            self.record(node, "rrep", || format!("accept {path:?}"));
            if let Some(&target) = path.last() {
                self.nodes[node.index()].dsr.end_discovery(target);
            }
            self.pump(node);
            return;
        }
        if let Some(next) = pkt.next_hop_after(node) {
            self.count(MetricEvent::Control {
                kind: PacketKind::Rrep,
                originated: false,
            });
            self.enqueue(node, LinkDest::Unicast(next), Rc::new(pkt.clone()));
        }
    }

    fn on_rerr(&mut self, node: NodeId, pkt: &Packet, (a, b): (NodeId, NodeId)) {
        self.nodes[node.index()].dsr.cache.prune_link(a, b);
        if let Some(ids) = &mut self.nodes[node.index()].ids {
            ids.monitor.clear_neighbor(pkt.origin);
        }
        self.record(node, "rerr", || {
            format!("receive {a}-{b} from {}", pkt.origin)
        });
        if pkt.final_dest == node {
            self.pump(node);
            return;
        }
        if let Some(next) = pkt.next_hop_after(node) {
            self.count(MetricEvent::Control {
                kind: PacketKind::Rerr,
                originated: false,
            });
            self.enqueue(node, LinkDest::Unicast(next), Rc::new(pkt.clone()));
        }
    }

    fn on_inject(&mut self, inj: Injection) {
        match inj {
            Injection::Warning {
                receiver,
                accuser,
                accused,
            } => self.on_warning(receiver, accuser, accused),
            Injection::Route { path } => {
                let Some(&owner) = path.first() else {
                    return;
                };
                let score = self.score(owner, &path);
                let now = self.now();
                if score > 0.0 {
                    self.nodes[owner.index()].dsr.cache.insert(path, score, now);
                }
            }
        }
    }

    // ---- intrusion detection ----

    fn overhear_data(&mut self, node: NodeId, transmitter: NodeId, pkt: &Packet) {
        let Some(ids) = &mut self.nodes[node.index()].ids else {
            return;
        };
        ids.monitor.on_overhear(transmitter, pkt.origin, pkt.seq);
        if pkt.knock && pkt.origin == node && ids.knocks.get(&transmitter) == Some(&pkt.seq) {
            ids.knocks.remove(&transmitter);
            let passed = ids.table.knock_passed(transmitter);
            let rating = ids.table.rating(transmitter);
            self.record(node, "knock", || {
                format!("PASS {transmitter} rating {rating} applied {passed}")
            });
        }
    }

    fn on_warning(&mut self, node: NodeId, accuser: NodeId, accused: NodeId) {
        if !self.ids_on() || accuser == node {
            return;
        }
        if accused == node {
            self.record(node, "warning-rx", || {
                format!("ignored self-accusation by {accuser}")
            });
            return;
        }
        self.record(node, "warning-rx", || {
            format!("{accuser} accuses {accused}")
        });
        self.indirect_evidence(node, accused, Evidence::Warning);
    }

    fn indirect_evidence(&mut self, node: NodeId, subject: NodeId, evidence: Evidence) {
        let now = self.now();
        let Some(ids) = &mut self.nodes[node.index()].ids else {
            return;
        };
        let out = ids.table.apply_evidence(subject, evidence, now);
        if out.before != out.after {
            self.record(node, "category-change", || {
                format!(
                    "{subject} {} -> {} rating {} by {evidence:?}",
                    out.before.as_str(),
                    out.after.as_str(),
                    out.rating
                )
            });
        }
        if out.knock_candidate {
            self.request_knock(node, subject);
        }
    }

    fn request_knock(&mut self, observer: NodeId, suspect: NodeId) {
        let now = self.now();
        let n = &self.nodes[observer.index()];
        let Some(ids) = &n.ids else {
            return;
        };
        if ids.knocks.contains_key(&suspect) {
            return;
        }
        if !self
            .mobility
            .in_range(observer, suspect, now)
            .unwrap_or(false)
        {
            self.record(observer, "knock", || format!("NA {suspect} not a neighbor"));
            return;
        }
        let Some(witness) = n
            .dsr
            .cache
            .neighbors_of(suspect)
            .into_iter()
            .find(|&w| w != observer)
        else {
            self.record(observer, "knock", || format!("NA {suspect} no witness"));
            return;
        };
        let payload = self.connections.first().map_or(64, |c| c.payload);
        let seq = self.nodes[observer.index()].fresh_seq();
        let mut probe = Packet::data(observer, witness, seq, payload);
        probe.knock = true;
        probe.source_route = vec![observer, suspect, witness];
        self.count(MetricEvent::DataSent { knock: true });
        if self.transmit_data(observer, suspect, Rc::new(probe)) {
            if let Some(ids) = &mut self.nodes[observer.index()].ids {
                ids.knocks.insert(suspect, seq);
            }
            self.record(observer, "knock", || {
                format!("probe {suspect} via witness {witness} seq {seq}")
            });
            let deadline = now + self.settings.ids.timing_window;
            self.at(
                deadline,
                Event::KnockDeadline {
                    observer,
                    suspect,
                    seq,
                },
            );
        } else {
            self.record(observer, "knock", || format!("NA {suspect} queue full"));
        }
    }

    fn on_knock_deadline(&mut self, observer: NodeId, suspect: NodeId, seq: u64) {
        let now = self.now();
        let Some(ids) = &mut self.nodes[observer.index()].ids else {
            return;
        };
        if ids.knocks.get(&suspect) != Some(&seq) {
            return;
        }
        ids.knocks.remove(&suspect);
        let declared = ids.table.declare_malicious(suspect, now);
        self.record(observer, "knock", || format!("FAIL {suspect}"));
        if declared {
            self.on_declared(observer, suspect, Category::Suspicious);
        }
    }

    fn on_window_close(&mut self, node: NodeId, k: u64) {
        let now = self.now();
        let w = self.settings.ids.timing_window;
        self.at((k + 1) as f64 * w, Event::WindowClose { node, k: k + 1 });
        let max_rate = self.settings.ids.max_packet_rate;
        let n = &mut self.nodes[node.index()];
        let congestion = n.queue.congestion_parameter();
        let Some(ids) = &mut n.ids else {
            return;
        };
        let reports = ids.monitor.close_window(now, congestion, max_rate);
        if reports.is_empty() {
            return;
        }
        self.record(node, "window-close", || {
            format!("congestion {congestion} neighbors {}", reports.len())
        });
        for r in reports {
            let evidence = match r.appraisal {
                Appraisal::Positive => Evidence::SelfPositive,
                Appraisal::Negative => Evidence::SelfNegative,
            };
            self.record(node, "appraisal", || {
                let sign = if r.appraisal == Appraisal::Positive {
                    '+'
                } else {
                    '-'
                };
                format!(
                    "{sign} {} registered {} acked {} threshold {}",
                    r.neighbor, r.registered, r.acked, r.threshold
                )
            });
            let ids = self.nodes[node.index()].ids.as_mut().expect("ids enabled");
            let out = ids.table.apply_evidence(r.neighbor, evidence, now);
            if out.declared {
                self.on_declared(node, r.neighbor, out.before);
            } else if out.before != out.after {
                self.record(node, "category-change", || {
                    format!(
                        "{} {} -> {} rating {}",
                        r.neighbor,
                        out.before.as_str(),
                        out.after.as_str(),
                        out.rating
                    )
                });
            }
        }
    }

    /// Side effects of `observer` putting `subject` on its malicious list.
    fn on_declared(&mut self, observer: NodeId, subject: NodeId, before: Category) {
        let now = self.now();
        let rec = self
            .table(observer)
            .and_then(|t| t.record(subject))
            .cloned()
            .expect("declared subject has a record");
        self.record(observer, "category-change", || {
            format!(
                "{subject} {} -> {} rating {}",
                before.as_str(),
                Category::Malicious.as_str(),
                rec.rating
            )
        });

        self.record(observer, "warning-tx", || format!("accuses {subject}"));
        self.count(MetricEvent::Warning);
        let warning = Packet {
            origin: observer,
            final_dest: observer,
            seq: 0,
            source_route: Vec::new(),
            payload_size: 0,
            knock: false,
            body: PacketBody::Warning { accused: subject },
        };
        self.enqueue(observer, LinkDest::Broadcast, Rc::new(warning));

        let since = now - FLOW_MEMORY_WINDOWS * self.settings.ids.timing_window;
        let n = &mut self.nodes[observer.index()];
        n.dsr.cache.purge_node(subject);
        let flows = n.dsr.flows_via(subject, since);
        for (origin, route) in flows {
            if origin != observer {
                self.send_rerr(observer, (observer, subject), origin, &route);
            }
        }
        if let Some(t) = rec.next_fade_time {
            self.at(t.max(now), Event::FadeTick { observer, subject });
        }
    }

    fn on_fade_tick(&mut self, observer: NodeId, subject: NodeId) {
        let now = self.now();
        let Some(ids) = &mut self.nodes[observer.index()].ids else {
            return;
        };
        match ids.table.fade_tick(subject, now) {
            FadeOutcome::NotMalicious => {}
            FadeOutcome::Wait(t) => self.at(t, Event::FadeTick { observer, subject }),
            FadeOutcome::Stepped { rating, next } => {
                self.record(observer, "fade", || format!("{subject} rating {rating}"));
                self.at(next, Event::FadeTick { observer, subject });
            }
            FadeOutcome::Redeemed { rating } => {
                self.record(observer, "fade", || format!("{subject} rating {rating}"));
                self.record(observer, "category-change", || {
                    format!("{subject} MALICIOUS -> SUSPICIOUS rating {rating} redeemed")
                });
            }
        }
    }
}
