use alloc::vec;
use alloc::vec::Vec;

use crate::cgra::MAX_GROUPS;
use crate::Cycle;

/// Where an inter-node byte is charged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ByteCategory {
    /// Task tokens hopping along the ring.
    TaskMovement,
    /// Remote data a task declared it needs.
    EssentialData,
    /// Exchange traffic the compute-centric baseline moves wholesale.
    NonessentialData,
}

impl ByteCategory {
    pub const ALL: [ByteCategory; 3] =
        [ByteCategory::TaskMovement, ByteCategory::EssentialData, ByteCategory::NonessentialData];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ByteCategory::TaskMovement => "task_movement",
            ByteCategory::EssentialData => "essential_data",
            ByteCategory::NonessentialData => "nonessential_data",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TokenCounters {
    pub root: u64,
    pub spawned: u64,
    /// Extra tokens produced by splits (children minus the parent).
    pub split_extra: u64,
    pub splits: u64,
    pub merged_away: u64,
    pub forwarded: u64,
    pub executed: u64,
    pub orphaned: u64,
    pub terminate_injected: u64,
    pub terminate_retired: u64,
    pub hops: u64,
}

impl TokenCounters {
    pub fn created(&self) -> u64 {
        self.root + self.spawned + self.split_extra + self.terminate_injected
    }

    pub fn consumed(&self) -> u64 {
        self.executed + self.merged_away + self.orphaned + self.terminate_retired
    }

    /// Fraction of spawned tokens that disappeared into a merge.
    pub fn merge_ratio(&self) -> f64 {
        if self.spawned == 0 {
            0.0
        } else {
            self.merged_away as f64 / self.spawned as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MetricsLedger {
    pub nodes: usize,
    /// Cycle at which the last node halted.
    pub total_cycles: Cycle,
    /// Cycle at which the last task completed.
    pub work_cycles: Cycle,
    pub first_launch: Option<Cycle>,
    pub busy_cycles: Vec<Cycle>,
    pub idle_cycles: Vec<Cycle>,
    /// Cycles spent with 0..=4 groups occupied, summed over nodes.
    pub group_occupancy: [Cycle; MAX_GROUPS + 1],
    pub bytes: [u64; 3],
    pub tokens: TokenCounters,
    pub ops: u64,
    pub exec_cycles: Cycle,
    pub reconfigurations: u64,
    pub reconfig_cycles: Cycle,
    pub spawn_cycles: Cycle,
    pub remote_acquisitions: u64,
    pub link_stall_cycles: Cycle,
    pub filter_stalls: u64,
    pub duplicate_work: u64,
    pub events: u64,
}

impl MetricsLedger {
    pub fn new(nodes: usize) -> Self {
        MetricsLedger {
            nodes,
            total_cycles: 0,
            work_cycles: 0,
            first_launch: None,
            busy_cycles: vec![0; nodes],
            idle_cycles: vec![0; nodes],
            group_occupancy: [0; MAX_GROUPS + 1],
            bytes: [0; 3],
            tokens: TokenCounters::default(),
            ops: 0,
            exec_cycles: 0,
            reconfigurations: 0,
            reconfig_cycles: 0,
            spawn_cycles: 0,
            remote_acquisitions: 0,
            link_stall_cycles: 0,
            filter_stalls: 0,
            duplicate_work: 0,
            events: 0,
        }
    }

    pub fn charge(&mut self, cat: ByteCategory, bytes: u64) {
        self.bytes[cat.index()] += bytes;
    }

    pub fn bytes_of(&self, cat: ByteCategory) -> u64 {
        self.bytes[cat.index()]
    }

    pub fn total_bytes(&self) -> u64 {
        self.bytes.iter().sum()
    }

    pub fn tokens_balanced(&self) -> bool {
        self.tokens.created() == self.tokens.consumed()
    }

    /// Busy plus idle cycles over all nodes equals `nodes * total_cycles`.
    pub fn cycles_balanced(&self) -> bool {
        let sum: Cycle = self.busy_cycles.iter().chain(&self.idle_cycles).sum();
        sum == self.nodes as Cycle * self.total_cycles
    }

    /// Span from the first launch to the last completion.
    pub fn makespan(&self) -> Cycle {
        self.first_launch.map_or(0, |f| self.work_cycles - f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_on_fresh_ledger() {
        let mut m = MetricsLedger::new(2);
        assert!(m.tokens_balanced());
        assert!(m.cycles_balanced());
        m.total_cycles = 10;
        m.busy_cycles = vec![3, 10];
        m.idle_cycles = vec![7, 0];
        assert!(m.cycles_balanced());
        m.charge(ByteCategory::TaskMovement, 21);
        m.charge(ByteCategory::EssentialData, 4);
        assert_eq!(m.total_bytes(), 25);
        assert_eq!(m.bytes_of(ByteCategory::NonessentialData), 0);
    }
}
