//! Scenario configuration: defaults, the `key = value` file format and
//! validation.
//!
//! ```text
//! # 20 nodes, a third of them droppers
//! nodes = 20
//! malicious_fraction = 0.3
//! pause_time = 100
//! ids.w_self = -5
//! ```

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dsr::DsrParams;
use crate::ids::IdsConfig;
use crate::link::LinkParams;
use crate::mobility::{Field, WaypointParams};
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    /// Plain DSR without any detection.
    Dsr,
    /// DSR with the reputation-based IDS.
    Rism,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Dsr => "dsr",
            Protocol::Rism => "rism",
        }
    }

    pub fn ids_enabled(self) -> bool {
        self == Protocol::Rism
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dsr" => Ok(Protocol::Dsr),
            "rism" => Ok(Protocol::Rism),
            _ => Err(format!("expected dsr or rism, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub field_width: f64,
    pub field_height: f64,
    pub nodes: usize,
    pub malicious_fraction: f64,
    /// Data drop probability of malicious relays.
    pub drop_probability: f64,
    pub pause_time: SimTime,
    pub max_speed: f64,
    pub radio_range: f64,
    pub link_rate: f64,
    /// `None` picks 5 connections for 10 nodes and 10 for 20.
    pub connections: Option<usize>,
    pub packet_size: u32,
    pub cbr_rate: f64,
    /// CBR start times are uniform in `[0, cbr_stagger)`.
    pub cbr_stagger: SimTime,
    pub duration: SimTime,
    pub protocol: Protocol,
    pub queue_capacity: usize,
    pub send_buffer: usize,
    pub route_cache_size: usize,
    pub rreq_backoff_initial: SimTime,
    pub rreq_backoff_max: SimTime,
    pub cache_replies: bool,
    pub count_forwards: bool,
    pub master_seed: u64,
    pub seeds: usize,
    pub ids: IdsConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            field_width: 1000.0,
            field_height: 1000.0,
            nodes: 20,
            malicious_fraction: 0.0,
            drop_probability: 0.99,
            pause_time: 0.0,
            max_speed: 10.0,
            radio_range: 250.0,
            link_rate: 2_000_000.0,
            connections: None,
            packet_size: 64,
            cbr_rate: 4.0,
            cbr_stagger: 10.0,
            duration: 900.0,
            protocol: Protocol::Rism,
            queue_capacity: 50,
            send_buffer: 64,
            route_cache_size: 64,
            rreq_backoff_initial: 0.5,
            rreq_backoff_max: 10.0,
            cache_replies: true,
            count_forwards: false,
            master_seed: 1,
            seeds: 1,
            ids: IdsConfig::default(),
        }
    }
}

/// Every key accepted by [`ScenarioConfig::set`].
pub const KEYS: &[&str] = &[
    "field_width",
    "field_height",
    "nodes",
    "malicious_fraction",
    "drop_probability",
    "pause_time",
    "max_speed",
    "radio_range",
    "link_rate",
    "connections",
    "packet_size",
    "cbr_rate",
    "cbr_stagger",
    "duration",
    "protocol",
    "queue_capacity",
    "send_buffer",
    "route_cache_size",
    "rreq_backoff_initial",
    "rreq_backoff_max",
    "cache_replies",
    "count_forwards",
    "master_seed",
    "seeds",
    "ids.timing_window",
    "ids.max_packet_rate",
    "ids.suspicious_threshold",
    "ids.malicious_threshold",
    "ids.rating_floor",
    "ids.w_self",
    "ids.w_warning",
    "ids.w_avoid",
    "ids.w_positive",
    "ids.fade_inactivity",
    "ids.fade_interval",
    "ids.fade_step",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigErrorKind {
    #[error("malformed line {0:?}, expected `key = value`")]
    Malformed(String),
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{key}: {reason}")]
    Invariant { key: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    /// 1-based line in the config document, when the error came from one.
    pub line: Option<usize>,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

impl From<ConfigErrorKind> for ConfigError {
    fn from(kind: ConfigErrorKind) -> Self {
        Self { line: None, kind }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigErrorKind>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| ConfigErrorKind::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: e.to_string(),
        })
}

impl ScenarioConfig {
    /// Parses a config document on top of the defaults and validates it.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut lines_of: Vec<(String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |kind| ConfigError {
                line: Some(line_no),
                kind,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(ConfigErrorKind::Malformed(line.to_string())))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(at(ConfigErrorKind::Malformed(line.to_string())));
            }
            cfg.set(key, value).map_err(at)?;
            lines_of.push((key.to_string(), line_no));
        }
        cfg.validate().map_err(|mut e| {
            if let ConfigErrorKind::Invariant { key, .. } = &e.kind {
                e.line = lines_of
                    .iter()
                    .rev()
                    .find(|(k, _)| k == key)
                    .map(|(_, l)| *l);
            }
            e
        })?;
        Ok(cfg)
    }

    /// Sets one field from its textual value. Does not validate cross-field
    /// invariants; call [`validate`](Self::validate) afterwards.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigErrorKind> {
        let v = value;
        match key {
            "field_width" => self.field_width = parse_value(key, v)?,
            "field_height" => self.field_height = parse_value(key, v)?,
            "nodes" => self.nodes = parse_value(key, v)?,
            "malicious_fraction" => self.malicious_fraction = parse_value(key, v)?,
            "drop_probability" => self.drop_probability = parse_value(key, v)?,
            "pause_time" => self.pause_time = parse_value(key, v)?,
            "max_speed" => self.max_speed = parse_value(key, v)?,
            "radio_range" => self.radio_range = parse_value(key, v)?,
            "link_rate" => self.link_rate = parse_value(key, v)?,
            "connections" => self.connections = Some(parse_value(key, v)?),
            "packet_size" => self.packet_size = parse_value(key, v)?,
            "cbr_rate" => self.cbr_rate = parse_value(key, v)?,
            "cbr_stagger" => self.cbr_stagger = parse_value(key, v)?,
            "duration" => self.duration = parse_value(key, v)?,
            "protocol" => self.protocol = parse_value(key, v)?,
            "queue_capacity" => self.queue_capacity = parse_value(key, v)?,
            "send_buffer" => self.send_buffer = parse_value(key, v)?,
            "route_cache_size" => self.route_cache_size = parse_value(key, v)?,
            "rreq_backoff_initial" => self.rreq_backoff_initial = parse_value(key, v)?,
            "rreq_backoff_max" => self.rreq_backoff_max = parse_value(key, v)?,
            "cache_replies" => self.cache_replies = parse_value(key, v)?,
            "count_forwards" => self.count_forwards = parse_value(key, v)?,
            "master_seed" => self.master_seed = parse_value(key, v)?,
            "seeds" => self.seeds = parse_value(key, v)?,
            "ids.timing_window" => self.ids.timing_window = parse_value(key, v)?,
            "ids.max_packet_rate" => self.ids.max_packet_rate = parse_value(key, v)?,
            "ids.suspicious_threshold" => self.ids.suspicious_threshold = parse_value(key, v)?,
            "ids.malicious_threshold" => self.ids.malicious_threshold = parse_value(key, v)?,
            "ids.rating_floor" => self.ids.rating_floor = parse_value(key, v)?,
            "ids.w_self" => self.ids.w_self = parse_value(key, v)?,
            "ids.w_warning" => self.ids.w_warning = parse_value(key, v)?,
            "ids.w_avoid" => self.ids.w_avoid = parse_value(key, v)?,
            "ids.w_positive" => self.ids.w_positive = parse_value(key, v)?,
            "ids.fade_inactivity" => self.ids.fade_inactivity = parse_value(key, v)?,
            "ids.fade_interval" => self.ids.fade_interval = parse_value(key, v)?,
            "ids.fade_step" => self.ids.fade_step = parse_value(key, v)?,
            _ => return Err(ConfigErrorKind::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Number of CBR connections actually generated.
    pub fn connection_count(&self) -> usize {
        self.connections.unwrap_or(match self.nodes {
            10 => 5,
            20 => 10,
            n => n / 2,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |key: &str, reason: &str| -> Result<(), ConfigError> {
            Err(ConfigErrorKind::Invariant {
                key: key.to_string(),
                reason: reason.to_string(),
            }
            .into())
        };
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !unit(self.malicious_fraction) {
            return fail("malicious_fraction", "must be within [0, 1]");
        }
        if !unit(self.drop_probability) {
            return fail("drop_probability", "must be within [0, 1]");
        }
        if self.nodes < 2 {
            return fail("nodes", "need at least 2 nodes");
        }
        for (key, v) in [
            ("field_width", self.field_width),
            ("field_height", self.field_height),
            ("radio_range", self.radio_range),
            ("link_rate", self.link_rate),
            ("cbr_rate", self.cbr_rate),
            ("duration", self.duration),
            ("rreq_backoff_initial", self.rreq_backoff_initial),
            ("rreq_backoff_max", self.rreq_backoff_max),
        ] {
            if !positive(v) {
                return fail(key, "must be positive");
            }
        }
        for (key, v) in [
            ("pause_time", self.pause_time),
            ("max_speed", self.max_speed),
            ("cbr_stagger", self.cbr_stagger),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(key, "must be non-negative");
            }
        }
        if self.packet_size == 0 {
            return fail("packet_size", "must be positive");
        }
        if self.queue_capacity == 0 {
            return fail("queue_capacity", "must be positive");
        }
        if self.send_buffer == 0 {
            return fail("send_buffer", "must be positive");
        }
        if self.route_cache_size == 0 {
            return fail("route_cache_size", "must be positive");
        }
        if self.seeds == 0 {
            return fail("seeds", "need at least one seed");
        }
        if self.connection_count() > self.nodes * (self.nodes - 1) {
            return fail("connections", "more connections than distinct node pairs");
        }
        if let Err(e) = self.ids.validate() {
            let key = match e {
                crate::ids::IdsConfigError::ThresholdOrder => {
                    "ids.suspicious_threshold".to_string()
                }
                crate::ids::IdsConfigError::WeightOrder => "ids.w_self".to_string(),
                crate::ids::IdsConfigError::NotPositive(k) => format!("ids.{k}"),
            };
            return fail(&key, &e.to_string());
        }
        Ok(())
    }

    pub fn link_params(&self) -> LinkParams {
        LinkParams {
            rate_bps: self.link_rate,
            queue_capacity: self.queue_capacity,
            ..LinkParams::default()
        }
    }

    pub fn dsr_params(&self) -> DsrParams {
        DsrParams {
            rreq_backoff_initial: self.rreq_backoff_initial,
            rreq_backoff_max: self.rreq_backoff_max,
            send_buffer: self.send_buffer,
            cache_capacity: self.route_cache_size,
            cache_replies: self.cache_replies,
        }
    }

    pub fn field(&self) -> Field {
        Field {
            width: self.field_width,
            height: self.field_height,
        }
    }

    pub fn waypoint_params(&self) -> WaypointParams {
        WaypointParams {
            field: self.field(),
            max_speed: self.max_speed,
            pause_time: self.pause_time,
            duration: self.duration,
        }
    }
}
