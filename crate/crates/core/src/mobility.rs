//! Random waypoint mobility and unit-disk connectivity.
//!
//! Every node's whole trajectory is drawn up front, so positions are closed-form
//! functions of time and connectivity is evaluated at transmission instants.

use std::io::{self, Write};

use rand::Rng;
use thiserror::Error;

use crate::sim::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Field {
    pub width: f64,
    pub height: f64,
}

impl Field {
    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Point {
        Point::new(
            rng.gen_range(0.0..=self.width),
            rng.gen_range(0.0..=self.height),
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MobilityError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// One pause-then-move segment of a trajectory.
///
/// The node sits at `origin` from `start` until `depart_time`, then moves in
/// a straight line to `destination` at `speed`, arriving at `arrive_time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityState {
    pub start: SimTime,
    pub origin: Point,
    pub destination: Point,
    pub speed: f64,
    pub depart_time: SimTime,
    pub arrive_time: SimTime,
}

impl MobilityState {
    fn stationary(at: Point, start: SimTime) -> Self {
        Self {
            start,
            origin: at,
            destination: at,
            speed: 0.0,
            depart_time: SimTime::INFINITY,
            arrive_time: SimTime::INFINITY,
        }
    }

    fn position_at(&self, t: SimTime) -> Point {
        if t <= self.depart_time || self.speed == 0.0 {
            return self.origin;
        }
        if t >= self.arrive_time {
            return self.destination;
        }
        let frac = (t - self.depart_time) / (self.arrive_time - self.depart_time);
        Point::new(
            self.origin.x + (self.destination.x - self.origin.x) * frac,
            self.origin.y + (self.destination.y - self.origin.y) * frac,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointParams {
    pub field: Field,
    pub max_speed: f64,
    pub pause_time: SimTime,
    pub duration: SimTime,
}

#[derive(Debug, Clone)]
pub struct Mobility {
    radio_range: f64,
    tracks: Vec<Vec<MobilityState>>,
}

impl Mobility {
    /// Nodes that never move.
    pub fn stationary(positions: &[Point], radio_range: f64) -> Self {
        Self {
            radio_range,
            tracks: positions
                .iter()
                .map(|&p| vec![MobilityState::stationary(p, 0.0)])
                .collect(),
        }
    }

    /// Random waypoint trajectories for nodes starting at `initial`.
    ///
    /// Every node first pauses for `pause_time`, then repeatedly picks a uniform
    /// destination and a uniform speed in `(0, max_speed]`, travels there and
    /// pauses again. All draws come from `rng`, node by node.
    pub fn random_waypoint<R: Rng>(
        initial: &[Point],
        params: &WaypointParams,
        radio_range: f64,
        rng: &mut R,
    ) -> Self {
        let tracks = initial
            .iter()
            .map(|&start| {
                let mut legs = Vec::new();
                let mut here = start;
                let mut t = 0.0;
                loop {
                    let depart = t + params.pause_time;
                    if depart >= params.duration || params.max_speed <= 0.0 {
                        legs.push(MobilityState {
                            depart_time: SimTime::INFINITY,
                            arrive_time: SimTime::INFINITY,
                            ..MobilityState::stationary(here, t)
                        });
                        break;
                    }
                    let destination = params.field.sample(rng);
                    let mut speed = 0.0;
                    while speed <= 0.0 {
                        speed = rng.gen_range(0.0..=params.max_speed);
                    }
                    let arrive = depart + here.distance(destination) / speed;
                    legs.push(MobilityState {
                        start: t,
                        origin: here,
                        destination,
                        speed,
                        depart_time: depart,
                        arrive_time: arrive,
                    });
                    here = destination;
                    t = arrive;
                    if t >= params.duration {
                        break;
                    }
                }
                legs
            })
            .collect();
        Self {
            radio_range,
            tracks,
        }
    }

    pub fn node_count(&self) -> usize {
        self.tracks.len()
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn legs(&self, node: NodeId) -> Result<&[MobilityState], MobilityError> {
        self.tracks
            .get(node.index())
            .map(Vec::as_slice)
            .ok_or(MobilityError::UnknownNode(node))
    }

    pub fn position_at(&self, node: NodeId, t: SimTime) -> Result<Point, MobilityError> {
        let legs = self.legs(node)?;
        let i = legs.partition_point(|l| l.start <= t).saturating_sub(1);
        Ok(legs[i].position_at(t))
    }

    fn pos(&self, node: usize, t: SimTime) -> Point {
        self.position_at(NodeId(node as u32), t)
            .expect("index in range")
    }

    pub fn in_range(&self, a: NodeId, b: NodeId, t: SimTime) -> Result<bool, MobilityError> {
        let pa = self.position_at(a, t)?;
        let pb = self.position_at(b, t)?;
        Ok(a != b && pa.distance(pb) <= self.radio_range)
    }

    /// Other nodes within radio range at `t` (distance <= range), ascending id.
    pub fn neighbors(&self, node: NodeId, t: SimTime) -> Result<Vec<NodeId>, MobilityError> {
        let here = self.position_at(node, t)?;
        Ok((0..self.tracks.len())
            .filter(|&j| j != node.index() && here.distance(self.pos(j, t)) <= self.radio_range)
            .map(|j| NodeId(j as u32))
            .collect())
    }

    /// Writes the waypoint schedule as `time node x y speed` lines: one line
    /// per departure (position and speed of the move) plus the initial placement.
    pub fn dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (n, legs) in self.tracks.iter().enumerate() {
            let first = legs[0].origin;
            writeln!(out, "0 {n} {} {} 0", first.x, first.y)?;
            for leg in legs.iter().filter(|l| l.depart_time.is_finite()) {
                writeln!(
                    out,
                    "{} {n} {} {} {}",
                    leg.depart_time, leg.destination.x, leg.destination.y, leg.speed
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamLabel};

    fn params(pause: f64) -> WaypointParams {
        WaypointParams {
            field: Field {
                width: 1000.0,
                height: 1000.0,
            },
            max_speed: 10.0,
            pause_time: pause,
            duration: 900.0,
        }
    }

    #[test]
    fn long_pause_keeps_nodes_static() {
        let mut rng = stream(1, StreamLabel::Mobility);
        let start = [Point::new(10.0, 20.0), Point::new(500.0, 500.0)];
        let m = Mobility::random_waypoint(&start, &params(900.0), 250.0, &mut rng);
        for t in [0.0, 1.0, 450.0, 900.0] {
            assert_eq!(m.position_at(NodeId(0), t).unwrap(), start[0]);
        }
    }

    #[test]
    fn linear_motion_interpolates() {
        let leg = MobilityState {
            start: 0.0,
            origin: Point::new(0.0, 0.0),
            destination: Point::new(100.0, 0.0),
            speed: 10.0,
            depart_time: 0.0,
            arrive_time: 10.0,
        };
        assert_eq!(leg.position_at(5.0), Point::new(50.0, 0.0));
        assert_eq!(leg.position_at(12.0), Point::new(100.0, 0.0));
    }

    #[test]
    fn initial_pause_then_movement() {
        let mut rng = stream(3, StreamLabel::Mobility);
        let start = [Point::new(100.0, 100.0)];
        let m = Mobility::random_waypoint(&start, &params(100.0), 250.0, &mut rng);
        assert_eq!(m.position_at(NodeId(0), 99.9).unwrap(), start[0]);
        let legs = m.legs(NodeId(0)).unwrap();
        assert_eq!(legs[0].depart_time, 100.0);
        assert!(legs[0].speed > 0.0 && legs[0].speed <= 10.0);
    }

    #[test]
    fn range_boundary_is_inclusive() {
        let m = Mobility::stationary(&[Point::new(0.0, 0.0), Point::new(250.0, 0.0)], 250.0);
        assert_eq!(m.neighbors(NodeId(0), 0.0).unwrap(), vec![NodeId(1)]);
        assert_eq!(m.neighbors(NodeId(1), 0.0).unwrap(), vec![NodeId(0)]);
        let m = Mobility::stationary(&[Point::new(0.0, 0.0), Point::new(250.1, 0.0)], 250.0);
        assert!(m.neighbors(NodeId(0), 0.0).unwrap().is_empty());
    }

    #[test]
    fn unknown_node_is_an_error() {
        let m = Mobility::stationary(&[Point::new(0.0, 0.0)], 250.0);
        assert_eq!(
            m.position_at(NodeId(4), 0.0),
            Err(MobilityError::UnknownNode(NodeId(4)))
        );
        assert!(m.neighbors(NodeId(4), 0.0).is_err());
    }

    #[test]
    fn neighbors_match_all_pairs_distance_filter() {
        let field = params(0.0).field;
        let mut place = stream(11, StreamLabel::Scenario);
        let start: Vec<Point> = (0..10).map(|_| field.sample(&mut place)).collect();
        let mut rng = stream(11, StreamLabel::Mobility);
        let m = Mobility::random_waypoint(&start, &params(0.0), 250.0, &mut rng);
        for step in 0..90 {
            let t = step as f64 * 10.0;
            let pos: Vec<Point> = (0..10)
                .map(|i| m.position_at(NodeId(i), t).unwrap())
                .collect();
            for i in 0..10u32 {
                let mut expected = Vec::new();
                for j in 0..10u32 {
                    if i == j {
                        continue;
                    }
                    let (a, b) = (pos[i as usize], pos[j as usize]);
                    let d2 = (a.x - b.x).powi(2) + (a.y - b.y).powi(2);
                    if d2.sqrt() <= 250.0 {
                        expected.push(NodeId(j));
                    }
                }
                assert_eq!(m.neighbors(NodeId(i), t).unwrap(), expected);
            }
        }
    }

    #[test]
    fn dump_lists_every_departure() {
        let mut rng = stream(5, StreamLabel::Mobility);
        let m = Mobility::random_waypoint(&[Point::new(1.0, 2.0)], &params(300.0), 250.0, &mut rng);
        let mut buf = Vec::new();
        m.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "0 0 1 2 0");
        let moves = m
            .legs(NodeId(0))
            .unwrap()
            .iter()
            .filter(|l| l.depart_time.is_finite())
            .count();
        assert_eq!(lines.len(), 1 + moves);
        assert!(lines[1].starts_with("300 0 "));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn trajectories_stay_in_field_and_links_are_symmetric(
                seed in any::<u64>(),
                pause in prop_oneof![Just(0.0), Just(100.0), Just(300.0), Just(600.0)],
            ) {
                let p = params(pause);
                let mut place = stream(seed, StreamLabel::Scenario);
                let start: Vec<Point> = (0..8).map(|_| p.field.sample(&mut place)).collect();
                let mut rng = stream(seed, StreamLabel::Mobility);
                let m = Mobility::random_waypoint(&start, &p, 250.0, &mut rng);
                for step in 0..=180 {
                    let t = step as f64 * 5.0;
                    for a in 0..8u32 {
                        let pa = m.position_at(NodeId(a), t).unwrap();
                        prop_assert!(p.field.contains(pa));
                        let na = m.neighbors(NodeId(a), t).unwrap();
                        prop_assert!(!na.contains(&NodeId(a)));
                        for b in na {
                            prop_assert!(m.neighbors(b, t).unwrap().contains(&NodeId(a)));
                        }
                    }
                }
                // continuity: small steps move at most max_speed * dt
                for a in 0..8u32 {
                    let mut prev = m.position_at(NodeId(a), 0.0).unwrap();
                    for step in 1..=900 {
                        let cur = m.position_at(NodeId(a), step as f64).unwrap();
                        prop_assert!(prev.distance(cur) <= 10.0 + 1e-9);
                        prev = cur;
                    }
                }
            }
        }
    }
}
