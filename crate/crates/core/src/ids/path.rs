use super::{Category, ReputationTable};
use crate::NodeId;

/// Preference score of a source route; higher is better.
///
/// With `b = 1 + |lowest rating among intermediate nodes|` and `h` hops the
/// score is `1 / (b * h)`, so both shorter and cleaner paths rank higher. A
/// path through a malicious node scores 0. Nodes without a record count as
/// neutral.
pub fn path_priority(path: &[NodeId], table: &ReputationTable) -> f64 {
    if path.len() < 2 {
        return 0.0;
    }
    let hops = (path.len() - 1) as f64;
    let intermediate = &path[1..path.len() - 1];
    if intermediate
        .iter()
        .any(|&n| table.category(n) == Category::Malicious)
    {
        return 0.0;
    }
    let r_min = intermediate
        .iter()
        .map(|&n| table.rating(n))
        .fold(0.0_f64, f64::min);
    1.0 / ((1.0 + r_min.abs()) * hops)
}
