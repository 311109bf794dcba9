//! Structured event trace: one `time,node,kind,detail` record per event.

use std::fmt;
use std::io::{self, Write};

use crate::sim::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub kind: &'static str,
    pub detail: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.time, self.node, self.kind, self.detail
        )
    }
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    for r in records {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_format() {
        let r = TraceRecord {
            time: 1.5,
            node: NodeId(3),
            kind: "tx",
            detail: "DATA 0->2".into(),
        };
        assert_eq!(r.to_string(), "1.5,3,tx,DATA 0->2");
        let r = TraceRecord {
            detail: String::new(),
            ..r
        };
        assert_eq!(r.to_string(), "1.5,3,tx,");
    }
}
