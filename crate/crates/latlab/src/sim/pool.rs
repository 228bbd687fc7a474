//! Slot and dynamic-resource bookkeeping.

use crate::model::ClusterSpec;
use crate::time::Micros;

use super::SimError;

/// Occupancy state of every slot plus per-node memory accounting.
/// Slots are identified as (node index, slot index); selection is always
/// lowest-first for determinism.
pub struct SlotPool {
    nodes: Vec<NodeState>,
    free_total: u64,
}

struct NodeState {
    busy: Vec<bool>,
    free: u32,
    mem_used: u64,
    mem_cap: u64,
}

impl SlotPool {
    pub fn new(cluster: &ClusterSpec) -> SlotPool {
        let mem_cap = cluster.memory_per_node();
        let nodes = (0..cluster.node_count)
            .map(|_| NodeState {
                busy: vec![false; cluster.slots_per_node as usize],
                free: cluster.slots_per_node,
                mem_used: 0,
                mem_cap,
            })
            .collect();
        SlotPool { nodes, free_total: cluster.total_slots() }
    }

    pub fn free_total(&self) -> u64 {
        self.free_total
    }

    pub fn node_has_free(&self, node: u32) -> bool {
        self.nodes[node as usize].free > 0
    }

    pub fn node_count(&self) -> u32 {
        self.nodes.len() as u32
    }

    /// How many more tasks of `mem_per_slot` the node can take, counting
    /// both free slots and memory headroom.
    fn usable_on_node(&self, node: usize, mem_per_slot: u64) -> u32 {
        let n = &self.nodes[node];
        match (n.mem_cap - n.mem_used).checked_div(mem_per_slot) {
            Some(by_memory) => n.free.min(by_memory.min(u64::from(u32::MAX)) as u32),
            None => n.free,
        }
    }

    fn lowest_free_slots(&self, node: usize, take: u32, out: &mut Vec<(u32, u32)>) {
        let mut taken = 0;
        for (slot, busy) in self.nodes[node].busy.iter().enumerate() {
            if taken == take {
                break;
            }
            if !busy {
                out.push((node as u32, slot as u32));
                taken += 1;
            }
        }
        debug_assert_eq!(taken, take);
    }

    /// All-or-nothing selection of `need` slots anywhere in the cluster.
    pub fn collect_cluster(&self, need: u32, mem_per_slot: u64) -> Option<Vec<(u32, u32)>> {
        if (self.free_total) < need as u64 {
            return None;
        }
        let mut out = Vec::with_capacity(need as usize);
        for node in 0..self.nodes.len() {
            let take = self.usable_on_node(node, mem_per_slot).min(need - out.len() as u32);
            if take > 0 {
                self.lowest_free_slots(node, take, &mut out);
            }
            if out.len() as u32 == need {
                return Some(out);
            }
        }
        None
    }

    /// All-or-nothing selection restricted to one node.
    pub fn collect_node(&self, node: u32, need: u32, mem_per_slot: u64) -> Option<Vec<(u32, u32)>> {
        if self.usable_on_node(node as usize, mem_per_slot) < need {
            return None;
        }
        let mut out = Vec::with_capacity(need as usize);
        self.lowest_free_slots(node as usize, need, &mut out);
        Some(out)
    }

    /// Selection out of an explicit offered set, in offer order. Memory is
    /// re-checked against the pool because earlier acceptances in the same
    /// round may have consumed headroom.
    pub fn collect_offered(
        &self,
        offered: &[(u32, u32)],
        need: u32,
        mem_per_slot: u64,
    ) -> Option<Vec<(u32, u32)>> {
        if (offered.len() as u32) < need {
            return None;
        }
        let mut out = Vec::with_capacity(need as usize);
        let mut per_node_extra = std::collections::BTreeMap::new();
        for &(node, slot) in offered {
            let extra = per_node_extra.entry(node).or_insert(0u32);
            if self.usable_on_node(node as usize, mem_per_slot) < *extra + 1 {
                continue;
            }
            out.push((node, slot));
            *extra += 1;
            if out.len() as u32 == need {
                return Some(out);
            }
        }
        None
    }

    /// The lowest `batch` free slots with memory headroom, for an offer round.
    pub fn offer(&self, batch: u32, mem_per_slot: u64) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for node in 0..self.nodes.len() {
            if out.len() as u32 >= batch {
                break;
            }
            let take = self.usable_on_node(node, mem_per_slot).min(batch - out.len() as u32);
            if take > 0 {
                self.lowest_free_slots(node, take, &mut out);
            }
        }
        out
    }

    pub fn reserve(
        &mut self,
        slots: &[(u32, u32)],
        mem_per_slot: u64,
        at: Micros,
    ) -> Result<(), SimError> {
        for &(node, slot) in slots {
            let n = &mut self.nodes[node as usize];
            if n.busy[slot as usize] {
                return Err(SimError::SlotOccupied { node, slot, at });
            }
            n.busy[slot as usize] = true;
            n.free -= 1;
            n.mem_used += mem_per_slot;
            debug_assert!(n.mem_used <= n.mem_cap, "dynamic resource oversubscription");
            self.free_total -= 1;
        }
        Ok(())
    }

    pub fn release(&mut self, slots: &[(u32, u32)], mem_per_slot: u64) {
        for &(node, slot) in slots {
            let n = &mut self.nodes[node as usize];
            debug_assert!(n.busy[slot as usize]);
            n.busy[slot as usize] = false;
            n.free += 1;
            n.mem_used -= mem_per_slot;
            self.free_total += 1;
        }
    }
}
