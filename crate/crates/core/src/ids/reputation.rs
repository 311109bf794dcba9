use std::collections::BTreeMap;

use super::IdsConfig;
use crate::sim::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Normal,
    Suspicious,
    Malicious,
}

impl Category {
    pub fn of(rating: f64, cfg: &IdsConfig) -> Self {
        if rating <= cfg.malicious_threshold {
            Category::Malicious
        } else if rating <= cfg.suspicious_threshold {
            Category::Suspicious
        } else {
            Category::Normal
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Normal => "NORMAL",
            Category::Suspicious => "SUSPICIOUS",
            Category::Malicious => "MALICIOUS",
        }
    }
}

/// Source of a rating change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Evidence {
    /// Window closed with more missing packets than tolerated.
    SelfNegative,
    /// Window closed within tolerance.
    SelfPositive,
    /// A neighbor's one-hop WARNING.
    Warning,
    /// Subject listed in a received RREQ avoid list.
    AvoidList,
}

impl Evidence {
    pub fn is_indirect(self) -> bool {
        matches!(self, Evidence::Warning | Evidence::AvoidList)
    }
}

/// One node's view of another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReputationRecord {
    pub subject: NodeId,
    pub rating: f64,
    /// On the malicious list. Set by conviction and kept while the rating
    /// fades back up, until it reaches the suspicious midpoint.
    pub listed: bool,
    /// Set when the subject faded back from Malicious; the next self-observed
    /// misbehavior convicts it again immediately.
    pub redeemed: bool,
    pub last_accusation_time: Option<SimTime>,
    pub next_fade_time: Option<SimTime>,
}

impl ReputationRecord {
    pub fn category(&self, cfg: &IdsConfig) -> Category {
        if self.listed {
            Category::Malicious
        } else {
            Category::of(self.rating, cfg)
        }
    }

    fn neutral(subject: NodeId) -> Self {
        Self {
            subject,
            rating: 0.0,
            listed: false,
            redeemed: false,
            last_accusation_time: None,
            next_fade_time: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvidenceOutcome {
    pub before: Category,
    pub after: Category,
    pub rating: f64,
    /// The subject was newly declared malicious by this evidence.
    pub declared: bool,
    /// Indirect evidence against an already suspicious subject: a knock test
    /// should be run if the subject is an immediate neighbor.
    pub knock_candidate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadeOutcome {
    /// Subject is not malicious; the fade schedule is over.
    NotMalicious,
    /// Inactivity was interrupted; check again at the given time.
    Wait(SimTime),
    Stepped {
        rating: f64,
        next: SimTime,
    },
    /// Rating reached the suspicious midpoint; subject left the malicious list.
    Redeemed {
        rating: f64,
    },
}

#[derive(Debug, Clone)]
pub struct ReputationTable {
    cfg: IdsConfig,
    records: BTreeMap<NodeId, ReputationRecord>,
}

impl ReputationTable {
    pub fn new(cfg: IdsConfig) -> Self {
        Self {
            cfg,
            records: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &IdsConfig {
        &self.cfg
    }

    pub fn record(&self, subject: NodeId) -> Option<&ReputationRecord> {
        self.records.get(&subject)
    }

    pub fn records(&self) -> impl Iterator<Item = &ReputationRecord> {
        self.records.values()
    }

    /// Rating of `subject`; nodes never observed are neutral (0).
    pub fn rating(&self, subject: NodeId) -> f64 {
        self.records.get(&subject).map_or(0.0, |r| r.rating)
    }

    pub fn category(&self, subject: NodeId) -> Category {
        self.records
            .get(&subject)
            .map_or(Category::Normal, |r| r.category(&self.cfg))
    }

    pub fn is_malicious(&self, subject: NodeId) -> bool {
        self.category(subject) == Category::Malicious
    }

    /// Nodes currently in the malicious list, ascending.
    pub fn faulty_list(&self) -> Vec<NodeId> {
        self.records
            .values()
            .filter(|r| r.listed)
            .map(|r| r.subject)
            .collect()
    }

    fn entry(&mut self, subject: NodeId) -> &mut ReputationRecord {
        self.records
            .entry(subject)
            .or_insert_with(|| ReputationRecord::neutral(subject))
    }

    pub fn apply_evidence(
        &mut self,
        subject: NodeId,
        evidence: Evidence,
        now: SimTime,
    ) -> EvidenceOutcome {
        let cfg = self.cfg;
        let rec = self.entry(subject);
        let before = rec.category(&cfg);
        let mut knock_candidate = false;
        let mut convict = false;
        match evidence {
            Evidence::SelfPositive => {
                // Fading is the only way out of the malicious list.
                if before != Category::Malicious {
                    rec.rating = (rec.rating + cfg.w_positive).min(0.0);
                }
            }
            Evidence::SelfNegative => {
                rec.rating = (rec.rating + cfg.w_self).max(cfg.rating_floor);
                convict = rec.rating <= cfg.malicious_threshold || rec.redeemed;
            }
            Evidence::Warning | Evidence::AvoidList => {
                let w = if evidence == Evidence::Warning {
                    cfg.w_warning
                } else {
                    cfg.w_avoid
                };
                rec.last_accusation_time = Some(now);
                if before == Category::Malicious {
                    rec.next_fade_time = Some(now + cfg.fade_inactivity + cfg.fade_interval);
                }
                knock_candidate = before == Category::Suspicious;
                if rec.rating > cfg.suspicious_threshold {
                    rec.rating = (rec.rating + w).max(cfg.suspicious_threshold);
                }
            }
        }
        let declared = convict && before != Category::Malicious;
        if declared {
            convict_record(rec, &cfg, now);
        }
        let rating = rec.rating;
        EvidenceOutcome {
            before,
            after: rec.category(&cfg),
            rating,
            declared,
            knock_candidate,
        }
    }

    /// Puts `subject` in the malicious list. Returns false if it already was.
    ///
    /// Only self-observation (a window appraisal or a failed knock test) may
    /// call this.
    pub fn declare_malicious(&mut self, subject: NodeId, now: SimTime) -> bool {
        let cfg = self.cfg;
        let rec = self.entry(subject);
        if rec.listed {
            return false;
        }
        convict_record(rec, &cfg, now);
        true
    }

    /// A knock test on `subject` saw the probe forwarded. Returns false if the
    /// subject was convicted meanwhile and the result no longer applies.
    pub fn knock_passed(&mut self, subject: NodeId) -> bool {
        let cfg = self.cfg;
        let rec = self.entry(subject);
        if rec.listed {
            return false;
        }
        rec.rating = cfg.suspicious_midpoint();
        rec.redeemed = false;
        true
    }

    /// Advances the fade schedule of a malicious `subject` at `now`.
    pub fn fade_tick(&mut self, subject: NodeId, now: SimTime) -> FadeOutcome {
        let cfg = self.cfg;
        let rec = self.entry(subject);
        if !rec.listed {
            rec.next_fade_time = None;
            return FadeOutcome::NotMalicious;
        }
        let due = rec
            .next_fade_time
            .unwrap_or(now + cfg.fade_inactivity + cfg.fade_interval);
        if now < due {
            rec.next_fade_time = Some(due);
            return FadeOutcome::Wait(due);
        }
        let midpoint = cfg.suspicious_midpoint();
        rec.rating = (rec.rating + cfg.fade_step).min(midpoint);
        if rec.rating >= midpoint {
            rec.rating = midpoint;
            rec.listed = false;
            rec.redeemed = true;
            rec.next_fade_time = None;
            return FadeOutcome::Redeemed { rating: midpoint };
        }
        let next = due + cfg.fade_interval;
        rec.next_fade_time = Some(next);
        FadeOutcome::Stepped {
            rating: rec.rating,
            next,
        }
    }
}

fn convict_record(rec: &mut ReputationRecord, cfg: &IdsConfig, now: SimTime) {
    rec.rating = rec.rating.min(cfg.malicious_threshold);
    rec.listed = true;
    rec.redeemed = false;
    rec.last_accusation_time = Some(now);
    rec.next_fade_time = Some(now + cfg.fade_inactivity + cfg.fade_interval);
}
