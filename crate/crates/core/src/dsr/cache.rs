use crate::sim::SimTime;
use crate::NodeId;

/// A cached source route starting at the cache owner.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteCacheEntry {
    pub path: Vec<NodeId>,
    pub priority: f64,
    pub learned_at: SimTime,
}

#[derive(Debug, Clone)]
pub struct RouteCache {
    owner: NodeId,
    capacity: usize,
    entries: Vec<RouteCacheEntry>,
}

impl RouteCache {
    pub fn new(owner: NodeId, capacity: usize) -> Self {
        Self {
            owner,
            capacity,
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[RouteCacheEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds or refreshes a path. Paths must start at the owner and have at
    /// least one hop; anything else is ignored. Returns true if stored.
    pub fn insert(&mut self, path: Vec<NodeId>, priority: f64, now: SimTime) -> bool {
        if path.len() < 2 || path[0] != self.owner {
            return false;
        }
        if let Some(e) = self.entries.iter_mut().find(|e| e.path == path) {
            e.priority = priority;
            e.learned_at = now;
            return true;
        }
        if self.entries.len() >= self.capacity {
            // evict the oldest entry
            if let Some((i, _)) = self
                .entries
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.learned_at.total_cmp(&b.1.learned_at))
            {
                self.entries.remove(i);
            }
        }
        self.entries.push(RouteCacheEntry {
            path,
            priority,
            learned_at: now,
        });
        true
    }

    /// Removes every path using the link `a - b` in either direction.
    pub fn prune_link(&mut self, a: NodeId, b: NodeId) -> usize {
        let before = self.entries.len();
        self.entries.retain(|e| {
            !e.path
                .windows(2)
                .any(|w| (w[0] == a && w[1] == b) || (w[0] == b && w[1] == a))
        });
        before - self.entries.len()
    }

    /// Removes every path that contains `node`.
    pub fn purge_node(&mut self, node: NodeId) -> usize {
        let before = self.entries.len();
        self.entries.retain(|e| !e.path.contains(&node));
        before - self.entries.len()
    }

    /// Best route to `dst` among cached paths (or their prefixes), by `score`.
    /// Ties go to the most recently learned path. Routes scoring 0 or less
    /// are never returned.
    pub fn best_route<F>(&mut self, dst: NodeId, mut score: F) -> Option<Vec<NodeId>>
    where
        F: FnMut(&[NodeId]) -> f64,
    {
        let mut best: Option<(f64, SimTime, Vec<NodeId>)> = None;
        for e in &mut self.entries {
            let Some(i) = e.path.iter().position(|&n| n == dst) else {
                continue;
            };
            if i == 0 {
                continue;
            }
            let prefix = &e.path[..=i];
            let s = score(prefix);
            if i + 1 == e.path.len() {
                e.priority = s;
            }
            if s <= 0.0 {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bs, bt, _)) => s > *bs || (s == *bs && e.learned_at > *bt),
            };
            if better {
                best = Some((s, e.learned_at, prefix.to_vec()));
            }
        }
        best.map(|(_, _, p)| p)
    }

    /// Nodes seen right after or before `node` on cached paths, excluding the
    /// owner. These are known neighbors of `node`.
    pub fn neighbors_of(&self, node: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        for e in &self.entries {
            for w in e.path.windows(2) {
                let other = if w[0] == node {
                    w[1]
                } else if w[1] == node {
                    w[0]
                } else {
                    continue;
                };
                if other != self.owner && !out.contains(&other) {
                    out.push(other);
                }
            }
        }
        out
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        self.entries.iter().any(|e| e.path.contains(&node))
    }
}
