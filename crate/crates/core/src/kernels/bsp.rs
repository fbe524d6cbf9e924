//! Cost accounting for the bulk-synchronous baselines. Supersteps are
//! charged analytically with the same hop latency and bandwidth the ring
//! simulation uses; no second network is simulated.

use crate::cgra::SpeedupTable;
use crate::config::SimConfig;
use crate::metrics::ByteCategory;
use crate::Cycle;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BspParams {
    pub nodes: usize,
    pub hop: Cycle,
    pub bits_per_cycle: u64,
    /// Whole-node acceleration: each superstep's compute uses every group.
    pub speedup: SpeedupTable,
    pub groups: usize,
}

impl BspParams {
    pub fn from_config(cfg: &SimConfig, speedup: SpeedupTable) -> Self {
        BspParams {
            nodes: cfg.nodes,
            hop: cfg.hop_cycles,
            bits_per_cycle: cfg.data_bits_per_cycle,
            speedup,
            groups: cfg.groups,
        }
    }

    fn serialize(&self, bytes: u64) -> Cycle {
        bytes.saturating_mul(8).div_ceil(self.bits_per_cycle)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BspLedger {
    pub nodes: usize,
    pub supersteps: u64,
    pub ops: u64,
    pub compute_cycles: Cycle,
    pub comm_cycles: Cycle,
    pub bytes: [u64; 3],
    pub messages: u64,
}

impl BspLedger {
    pub fn new(nodes: usize) -> Self {
        BspLedger { nodes, ..Default::default() }
    }

    pub fn total_cycles(&self) -> Cycle {
        self.compute_cycles + self.comm_cycles
    }

    pub fn total_bytes(&self) -> u64 {
        self.bytes.iter().sum()
    }

    /// Local compute phase; the slowest node sets the pace.
    pub fn compute(&mut self, p: &BspParams, per_node_ops: &[u64]) {
        self.supersteps += 1;
        self.ops += per_node_ops.iter().sum::<u64>();
        let slowest = per_node_ops.iter().map(|&o| p.speedup.accelerated(o, p.groups)).max().unwrap_or(0);
        self.compute_cycles += slowest;
    }

    /// Ring allgather: node `i` contributes `per_node[i]` bytes and ends up
    /// with everyone's.
    pub fn allgather(&mut self, p: &BspParams, per_node: &[u64]) {
        let n = p.nodes as u64;
        if n < 2 {
            return;
        }
        let total: u64 = per_node.iter().sum();
        self.bytes[ByteCategory::NonessentialData.index()] += total * (n - 1);
        self.messages += n * (n - 1);
        let received = per_node.iter().map(|b| total - b).max().unwrap_or(0);
        self.comm_cycles += (n - 1) * p.hop + p.serialize(received);
    }

    /// Binomial-tree broadcast of `bytes` from one root.
    pub fn bcast(&mut self, p: &BspParams, bytes: u64) {
        let n = p.nodes as u64;
        if n < 2 {
            return;
        }
        self.bytes[ByteCategory::NonessentialData.index()] += bytes * (n - 1);
        self.messages += n - 1;
        let rounds = (u64::BITS - (n - 1).leading_zeros()) as u64;
        self.comm_cycles += rounds * (p.hop + p.serialize(bytes));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(nodes: usize) -> BspParams {
        BspParams { nodes, hop: 800, bits_per_cycle: 100, speedup: SpeedupTable::UNIT, groups: 4 }
    }

    #[test]
    fn collectives_charge_per_receiver() {
        let p = params(4);
        let mut l = BspLedger::new(4);
        l.allgather(&p, &[4, 4, 4, 4]);
        assert_eq!(l.total_bytes(), 16 * 3);
        assert_eq!(l.comm_cycles, 3 * 800 + 1);
        l.bcast(&p, 40);
        assert_eq!(l.total_bytes(), 48 + 120);
        // two rounds for four nodes
        assert_eq!(l.comm_cycles, 2401 + 2 * (800 + 4));
    }

    #[test]
    fn single_node_moves_nothing() {
        let p = params(1);
        let mut l = BspLedger::new(1);
        l.allgather(&p, &[100]);
        l.bcast(&p, 100);
        l.compute(&p, &[50]);
        assert_eq!((l.total_bytes(), l.comm_cycles, l.compute_cycles), (0, 0, 50));
    }
}
