//! Reputation-based intrusion detection.
//!
//! Each node runs three cooperating pieces:
//!
//! - a [`Monitor`] that registers every data packet handed to a next hop and
//!   matches it against forwards overheard in promiscuous mode, tallying
//!   missing packets per neighbor over a fixed timing window;
//! - a [`ReputationTable`] that turns window appraisals, one-hop WARNINGs and
//!   RREQ avoid lists into ratings and Normal / Suspicious / Malicious
//!   categories, including knock tests and fading;
//! - [`path_priority`], used by the route cache to rank discovered paths.

mod monitor;
mod path;
mod reputation;

use thiserror::Error;

pub use monitor::{ActivityLog, Appraisal, Fingerprint, Monitor, WindowReport};
pub use path::path_priority;
pub use reputation::{
    Category, Evidence, EvidenceOutcome, FadeOutcome, ReputationRecord, ReputationTable,
};

use crate::sim::SimTime;

/// Tunables of the detection system. Ratings live in `[rating_floor, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdsConfig {
    pub timing_window: SimTime,
    /// Packets per window tolerated at full congestion.
    pub max_packet_rate: f64,
    pub suspicious_threshold: f64,
    pub malicious_threshold: f64,
    pub rating_floor: f64,
    pub w_self: f64,
    pub w_warning: f64,
    pub w_avoid: f64,
    pub w_positive: f64,
    pub fade_inactivity: SimTime,
    pub fade_interval: SimTime,
    pub fade_step: f64,
}

impl Default for IdsConfig {
    fn default() -> Self {
        Self {
            timing_window: 1.0,
            max_packet_rate: 20.0,
            suspicious_threshold: -10.0,
            malicious_threshold: -40.0,
            rating_floor: -60.0,
            w_self: -5.0,
            w_warning: -2.0,
            w_avoid: -1.0,
            w_positive: 1.0,
            fade_inactivity: 200.0,
            fade_interval: 50.0,
            fade_step: 5.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdsConfigError {
    #[error(
        "thresholds must satisfy rating_floor < malicious_threshold < suspicious_threshold < 0"
    )]
    ThresholdOrder,
    #[error("weights must satisfy |w_self| > |w_warning| >= |w_avoid|, all negative")]
    WeightOrder,
    #[error("{0} must be positive")]
    NotPositive(&'static str),
}

impl IdsConfig {
    /// Rating given to a node that passes a knock test or fades back.
    pub fn suspicious_midpoint(&self) -> f64 {
        (self.suspicious_threshold + self.malicious_threshold) / 2.0
    }

    pub fn validate(&self) -> Result<(), IdsConfigError> {
        if !(self.rating_floor < self.malicious_threshold
            && self.malicious_threshold < self.suspicious_threshold
            && self.suspicious_threshold < 0.0)
        {
            return Err(IdsConfigError::ThresholdOrder);
        }
        if !(self.w_self < 0.0 && self.w_warning < 0.0 && self.w_avoid < 0.0)
            || !(self.w_self.abs() > self.w_warning.abs()
                && self.w_warning.abs() >= self.w_avoid.abs())
        {
            return Err(IdsConfigError::WeightOrder);
        }
        for (name, v) in [
            ("timing_window", self.timing_window),
            ("max_packet_rate", self.max_packet_rate),
            ("w_positive", self.w_positive),
            ("fade_inactivity", self.fade_inactivity),
            ("fade_interval", self.fade_interval),
            ("fade_step", self.fade_step),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(IdsConfigError::NotPositive(name));
            }
        }
        Ok(())
    }
}
