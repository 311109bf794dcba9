//! Traffic counters, packet delivery ratio, routing overhead, CSV output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::packet::PacketKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropCause {
    Behavior,
    QueueOverflow,
    NoRoute,
    LinkLoss,
}

impl DropCause {
    pub fn as_str(self) -> &'static str {
        match self {
            DropCause::Behavior => "behavior",
            DropCause::QueueOverflow => "queue-overflow",
            DropCause::NoRoute => "no-route",
            DropCause::LinkLoss => "link-loss",
        }
    }
}

/// One countable occurrence. Knock probes never reach the data counters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricEvent {
    DataSent {
        knock: bool,
    },
    DataReceived {
        knock: bool,
    },
    DataDropped {
        cause: DropCause,
        knock: bool,
    },
    /// A RREQ, RREP or RERR put on the air; `originated` is false for
    /// forwards and rebroadcasts.
    Control {
        kind: PacketKind,
        originated: bool,
    },
    Warning,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Drops {
    pub behavior: u64,
    pub queue: u64,
    pub noroute: u64,
    pub linkloss: u64,
}

impl Drops {
    pub fn total(&self) -> u64 {
        self.behavior + self.queue + self.noroute + self.linkloss
    }

    fn bump(&mut self, cause: DropCause) {
        match cause {
            DropCause::Behavior => self.behavior += 1,
            DropCause::QueueOverflow => self.queue += 1,
            DropCause::NoRoute => self.noroute += 1,
            DropCause::LinkLoss => self.linkloss += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    /// Count forwarded control packets too, not only originations.
    pub count_forwards: bool,
    pub data_sent: u64,
    pub data_received: u64,
    pub control_generated: u64,
    pub warning_count: u64,
    pub drops: Drops,
}

impl Metrics {
    pub fn new(count_forwards: bool) -> Self {
        Self {
            count_forwards,
            ..Self::default()
        }
    }

    pub fn record(&mut self, event: MetricEvent) {
        match event {
            MetricEvent::DataSent { knock: false } => self.data_sent += 1,
            MetricEvent::DataReceived { knock: false } => self.data_received += 1,
            MetricEvent::DataDropped {
                cause,
                knock: false,
            } => self.drops.bump(cause),
            MetricEvent::DataSent { .. }
            | MetricEvent::DataReceived { .. }
            | MetricEvent::DataDropped { .. } => {}
            MetricEvent::Control { kind, originated } => {
                if matches!(kind, PacketKind::Rreq | PacketKind::Rrep | PacketKind::Rerr)
                    && (originated || self.count_forwards)
                {
                    self.control_generated += 1;
                }
            }
            MetricEvent::Warning => self.warning_count += 1,
        }
    }

    /// Derives the ratios. `in_flight` is the number of data packets still
    /// buffered, queued or on the air when the run ended.
    pub fn finalize(&self, in_flight: u64) -> MetricsReport {
        let ratio = |num: u64| {
            if self.data_sent == 0 {
                0.0
            } else {
                num as f64 / self.data_sent as f64
            }
        };
        MetricsReport {
            data_sent: self.data_sent,
            data_received: self.data_received,
            control_generated: self.control_generated,
            warning_count: self.warning_count,
            drops: self.drops,
            in_flight,
            pdr: ratio(self.data_received),
            overhead_ratio: ratio(self.control_generated),
            overhead_ratio_with_ids: ratio(self.control_generated + self.warning_count),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub data_sent: u64,
    pub data_received: u64,
    pub control_generated: u64,
    pub warning_count: u64,
    pub drops: Drops,
    pub in_flight: u64,
    pub pdr: f64,
    pub overhead_ratio: f64,
    pub overhead_ratio_with_ids: f64,
}

impl MetricsReport {
    /// `data_sent = data_received + drops + in_flight`.
    pub fn is_conserved(&self) -> bool {
        self.data_sent == self.data_received + self.drops.total() + self.in_flight
    }
}

/// Exact column order of the results CSV.
pub const CSV_HEADER: &str = "run_id,seed,protocol,nodes,malicious_pct,pause_time,connections,data_sent,data_received,pdr,control_generated,overhead_ratio,warning_count,overhead_ratio_with_ids,drops_behavior,drops_queue,drops_noroute,drops_linkloss";

/// One line of the results CSV. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub run_id: u64,
    pub seed: u64,
    pub protocol: String,
    pub nodes: usize,
    pub malicious_pct: f64,
    pub pause_time: f64,
    pub connections: usize,
    pub data_sent: u64,
    pub data_received: u64,
    pub pdr: f64,
    pub control_generated: u64,
    pub overhead_ratio: f64,
    pub warning_count: u64,
    pub overhead_ratio_with_ids: f64,
    pub drops_behavior: u64,
    pub drops_queue: u64,
    pub drops_noroute: u64,
    pub drops_linkloss: u64,
}

pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    // header only, when there are no rows
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> csv::Result<Vec<CsvRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counters_increment_once() {
        let mut m = Metrics::new(false);
        m.record(MetricEvent::DataSent { knock: false });
        m.record(MetricEvent::DataSent { knock: true });
        m.record(MetricEvent::DataReceived { knock: true });
        assert_eq!(m.data_sent, 1);
        assert_eq!(m.data_received, 0);
    }

    #[test]
    fn only_originations_count_by_default() {
        let mut m = Metrics::new(false);
        m.record(MetricEvent::Control {
            kind: PacketKind::Rreq,
            originated: false,
        });
        assert_eq!(m.control_generated, 0);
        m.record(MetricEvent::Control {
            kind: PacketKind::Rreq,
            originated: true,
        });
        m.record(MetricEvent::Control {
            kind: PacketKind::Warning,
            originated: true,
        });
        assert_eq!(m.control_generated, 1);
        let mut m = Metrics::new(true);
        m.record(MetricEvent::Control {
            kind: PacketKind::Rrep,
            originated: false,
        });
        assert_eq!(m.control_generated, 1);
    }

    #[test]
    fn ratios() {
        let m = Metrics {
            data_sent: 3600,
            data_received: 3240,
            control_generated: 1800,
            warning_count: 36,
            ..Metrics::default()
        };
        let r = m.finalize(0);
        assert!((r.pdr - 0.9).abs() < 1e-15);
        assert_eq!(r.overhead_ratio, 0.5);
        assert_eq!(r.overhead_ratio_with_ids, 0.51);
    }

    #[test]
    fn empty_run_has_zero_pdr() {
        let r = Metrics::default().finalize(0);
        assert_eq!(r.pdr, 0.0);
        assert_eq!(r.overhead_ratio, 0.0);
        assert!(r.is_conserved());
    }

    #[test]
    fn conservation_identity() {
        let mut m = Metrics::default();
        for _ in 0..5 {
            m.record(MetricEvent::DataSent { knock: false });
        }
        m.record(MetricEvent::DataReceived { knock: false });
        m.record(MetricEvent::DataDropped {
            cause: DropCause::Behavior,
            knock: false,
        });
        m.record(MetricEvent::DataDropped {
            cause: DropCause::LinkLoss,
            knock: true,
        });
        assert!(m.finalize(3).is_conserved());
        assert!(!m.finalize(2).is_conserved());
    }

    fn row() -> CsvRow {
        CsvRow {
            run_id: 0,
            seed: 42,
            protocol: "rism".into(),
            nodes: 20,
            malicious_pct: 30.0,
            pause_time: 0.0,
            connections: 10,
            data_sent: 10,
            data_received: 9,
            pdr: 0.9,
            control_generated: 3,
            overhead_ratio: 0.3,
            warning_count: 1,
            overhead_ratio_with_ids: 0.4,
            drops_behavior: 1,
            drops_queue: 0,
            drops_noroute: 0,
            drops_linkloss: 0,
        }
    }

    #[test]
    fn csv_header_is_exact() {
        let mut buf = Vec::new();
        write_csv(&[row()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "0,42,rism,20,30.0,0.0,10,10,9,0.9,3,0.3,1,0.4,1,0,0,0"
        );
        let mut empty = Vec::new();
        write_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim_end(), CSV_HEADER);
    }

    #[test]
    fn csv_reads_back() {
        let mut buf = Vec::new();
        write_csv(&[row(), row()], &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), vec![row(), row()]);
    }
}
