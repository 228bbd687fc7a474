//! Cluster shape: nodes, job slots, dynamic resources.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

/// Static resources are job slots (busy or not); dynamic resources are
/// named per-node capacities that jobs consume partially, e.g. memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub node_count: u32,
    pub slots_per_node: u32,
    /// Resource name -> capacity per node.
    #[serde(default)]
    pub dynamic_resources: BTreeMap<String, u64>,
}

impl ClusterSpec {
    pub fn total_slots(&self) -> u64 {
        self.node_count as u64 * self.slots_per_node as u64
    }

    /// Builds a cluster of exactly `processors` slots, preferring
    /// `preferred_slots_per_node` and falling back to the largest divisor
    /// of `processors` at or below it so that `P = nodes * slots` stays
    /// exact.
    pub fn for_processors(
        processors: u32,
        preferred_slots_per_node: u32,
        dynamic_resources: BTreeMap<String, u64>,
    ) -> ClusterSpec {
        assert!(processors > 0 && preferred_slots_per_node > 0);
        let mut spn = preferred_slots_per_node.min(processors);
        while !processors.is_multiple_of(spn) {
            spn -= 1;
        }
        ClusterSpec {
            node_count: processors / spn,
            slots_per_node: spn,
            dynamic_resources,
        }
    }

    /// Default per-node memory pool: 2048 units per slot.
    pub fn with_default_memory(mut self) -> ClusterSpec {
        self.dynamic_resources
            .entry("memory".to_string())
            .or_insert(self.slots_per_node as u64 * 2048);
        self
    }

    pub fn memory_per_node(&self) -> u64 {
        self.dynamic_resources.get("memory").copied().unwrap_or(u64::MAX)
    }
}
