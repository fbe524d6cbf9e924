use crate::cgra::{CostModel, MAX_GROUPS};
use crate::Cycle;

/// Every knob of one simulation run. Defaults follow the prototype: 800 MHz
/// clock, 1 us token hops, 80 Gb/s data links, 8-entry dispatcher queues,
/// four 4-entry spawn queues.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub nodes: usize,
    pub seed: u64,
    pub cost: CostModel,
    /// Tile groups per node CGRA. One group with unit speedup models a CPU.
    pub groups: usize,

    pub hop_cycles: Cycle,
    /// Minimum spacing between two tokens entering the same link.
    pub slot_cycles: Cycle,
    /// Extra per-hop delay drawn uniformly from `0..=link_jitter`.
    pub link_jitter: Cycle,
    /// Data-transfer network bandwidth.
    pub data_bits_per_cycle: u64,

    pub recv_capacity: usize,
    pub wait_capacity: usize,
    pub send_capacity: usize,
    pub spawn_queue_capacity: usize,

    pub coalesce: bool,
    pub coalesce_window: usize,
    /// Release every pending spawned token per iteration instead of one.
    pub coalesce_drain_all: bool,
    /// Launch as many wait-queue heads per iteration as resources allow.
    pub greedy_launch: bool,

    /// Cost of one runtime loop iteration.
    pub iteration_cycles: Cycle,
    /// Node 0 injects TERMINATE after staying quiet this long; defaults to
    /// one hop.
    pub quiet_cycles: Option<Cycle>,

    /// Per-address execution tracking and full-state cross checks.
    pub strict_checks: bool,
    pub max_events: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nodes: 4,
            seed: 0,
            cost: CostModel::default(),
            groups: MAX_GROUPS,
            hop_cycles: 800,
            // 21 bytes at 100 bits per cycle
            slot_cycles: 2,
            link_jitter: 0,
            data_bits_per_cycle: 100,
            recv_capacity: 8,
            wait_capacity: 8,
            send_capacity: 8,
            spawn_queue_capacity: 4,
            coalesce: true,
            coalesce_window: 16,
            coalesce_drain_all: false,
            greedy_launch: false,
            iteration_cycles: 1,
            quiet_cycles: None,
            strict_checks: false,
            max_events: 2_000_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("nodes must be between 1 and 16, got {0}")]
    Nodes(usize),
    #[error("groups must be 1, 2 or 4, got {0}")]
    Groups(usize),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=16).contains(&self.nodes) {
            return Err(ConfigError::Nodes(self.nodes));
        }
        if !matches!(self.groups, 1 | 2 | 4) {
            return Err(ConfigError::Groups(self.groups));
        }
        for (name, v) in [
            ("recv_capacity", self.recv_capacity),
            ("wait_capacity", self.wait_capacity),
            ("send_capacity", self.send_capacity),
            ("spawn_queue_capacity", self.spawn_queue_capacity),
            ("coalesce_window", self.coalesce_window),
        ] {
            if v == 0 {
                return Err(ConfigError::Zero(name));
            }
        }
        if self.data_bits_per_cycle == 0 {
            return Err(ConfigError::Zero("data_bits_per_cycle"));
        }
        if self.slot_cycles == 0 {
            return Err(ConfigError::Zero("slot_cycles"));
        }
        Ok(())
    }

    pub fn quiet_interval(&self) -> Cycle {
        self.quiet_cycles.unwrap_or(self.hop_cycles)
    }

    /// Upper bound on one trip of an idle ring: every hop at its slowest
    /// plus one loop iteration at each node.
    pub fn lap_cycles(&self) -> Cycle {
        self.nodes as Cycle * (self.hop_cycles + self.link_jitter + self.slot_cycles + self.iteration_cycles)
    }

    /// Longest wait from global quiescence to the last halt: the quiet
    /// interval before injection, then two laps of the sentinel.
    pub fn termination_bound(&self) -> Cycle {
        self.quiet_interval() + 2 * self.lap_cycles()
    }

    /// Zero-latency networks and free loop iterations, for calibration.
    pub fn ideal(mut self) -> Self {
        self.hop_cycles = 0;
        self.slot_cycles = 1;
        self.link_jitter = 0;
        self.data_bits_per_cycle = u64::MAX / 8;
        self.iteration_cycles = 0;
        self.quiet_cycles = Some(0);
        self
    }
}
