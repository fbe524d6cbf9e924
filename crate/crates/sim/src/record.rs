//! One row of results, shared by `run`, `sweep` and `report`, and its CSV
//! form. Column order is part of the file format; see [`CSV_HEADER`].

use std::io::{Read, Write};

use arena_core::kernels::bsp::BspLedger;
use arena_core::metrics::{ByteCategory, MetricsLedger};
use serde::{Deserialize, Serialize};

use crate::scenario::{Model, ScenarioConfig};
use crate::workload::{KernelResult, Oracle, Workload};
use crate::HarnessError;

pub const CSV_HEADER: &str = "kernel,size,seed,nodes,model,backend,\
total_cycles,work_cycles,serial_cycles,speedup,\
task_bytes,essential_bytes,nonessential_bytes,total_bytes,bytes_vs_bsp,\
tokens_created,tokens_spawned,tokens_merged,tokens_split,tokens_forwarded,tokens_executed,tokens_orphaned,token_hops,\
duplicate_work,reconfigurations,busy_cycles,idle_cycles,oracle_ok,digest";

/// `model` is `arena`, `bsp` or `serial`. The serial row carries the
/// baseline every speedup divides by.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub kernel: String,
    pub size: u32,
    pub seed: u64,
    pub nodes: usize,
    pub model: String,
    pub backend: String,
    pub total_cycles: u64,
    pub work_cycles: u64,
    pub serial_cycles: u64,
    pub speedup: f64,
    pub task_bytes: u64,
    pub essential_bytes: u64,
    pub nonessential_bytes: u64,
    pub total_bytes: u64,
    /// Total bytes over the BSP run with the same nodes and backend.
    pub bytes_vs_bsp: f64,
    pub tokens_created: u64,
    pub tokens_spawned: u64,
    pub tokens_merged: u64,
    pub tokens_split: u64,
    pub tokens_forwarded: u64,
    pub tokens_executed: u64,
    pub tokens_orphaned: u64,
    pub token_hops: u64,
    pub duplicate_work: u64,
    pub reconfigurations: u64,
    pub busy_cycles: u64,
    pub idle_cycles: u64,
    pub oracle_ok: bool,
    pub digest: String,
}

fn speedup(serial: u64, cycles: u64) -> f64 {
    if cycles == 0 {
        0.0
    } else {
        serial as f64 / cycles as f64
    }
}

impl Record {
    fn base(cfg: &ScenarioConfig, oracle: &Oracle) -> Record {
        Record {
            kernel: cfg.kernel.name().into(),
            size: cfg.size,
            seed: cfg.seed,
            nodes: cfg.nodes,
            model: cfg.model.name().into(),
            backend: cfg.backend.name().into(),
            serial_cycles: oracle.serial_ops,
            ..Record::default()
        }
    }

    fn set_bytes(&mut self, bytes: [u64; 3]) {
        self.task_bytes = bytes[ByteCategory::TaskMovement.index()];
        self.essential_bytes = bytes[ByteCategory::EssentialData.index()];
        self.nonessential_bytes = bytes[ByteCategory::NonessentialData.index()];
        self.total_bytes = bytes.iter().sum();
    }

    pub fn from_arena(cfg: &ScenarioConfig, oracle: &Oracle, l: &MetricsLedger, result: &KernelResult) -> Record {
        let mut r = Record::base(cfg, oracle);
        r.total_cycles = l.total_cycles;
        r.work_cycles = l.work_cycles;
        r.speedup = speedup(oracle.serial_ops, l.total_cycles);
        r.set_bytes(l.bytes);
        let t = &l.tokens;
        r.tokens_created = t.created();
        r.tokens_spawned = t.spawned;
        r.tokens_merged = t.merged_away;
        r.tokens_split = t.splits;
        r.tokens_forwarded = t.forwarded;
        r.tokens_executed = t.executed;
        r.tokens_orphaned = t.orphaned;
        r.token_hops = t.hops;
        r.duplicate_work = l.duplicate_work;
        r.reconfigurations = l.reconfigurations;
        r.busy_cycles = l.busy_cycles.iter().sum();
        r.idle_cycles = l.idle_cycles.iter().sum();
        r.oracle_ok = result.matches(&oracle.result);
        r.digest = result.digest();
        r
    }

    pub fn from_bsp(cfg: &ScenarioConfig, oracle: &Oracle, l: &BspLedger, result: &KernelResult) -> Record {
        let mut r = Record::base(cfg, oracle);
        r.total_cycles = l.total_cycles();
        r.work_cycles = l.total_cycles();
        r.speedup = speedup(oracle.serial_ops, l.total_cycles());
        r.set_bytes(l.bytes);
        r.bytes_vs_bsp = 1.0;
        r.oracle_ok = result.matches(&oracle.result);
        r.digest = result.digest();
        r
    }

    /// The one-node serial baseline: one operation per cycle.
    pub fn serial(cfg: &ScenarioConfig, oracle: &Oracle) -> Record {
        Record {
            nodes: 1,
            model: "serial".into(),
            backend: "cpu".into(),
            total_cycles: oracle.serial_ops,
            work_cycles: oracle.serial_ops,
            speedup: 1.0,
            oracle_ok: true,
            digest: oracle.result.digest(),
            ..Record::base(cfg, oracle)
        }
    }
}

/// Outcome of one scenario.
pub struct RunReport {
    pub record: Record,
    pub result: KernelResult,
    pub oracle: Oracle,
    /// Per-node halt cycles; empty for BSP.
    pub halt_times: Vec<u64>,
    pub quiescent_at: u64,
    pub ledger: Option<MetricsLedger>,
    pub bsp: Option<BspLedger>,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport, HarnessError> {
    cfg.validate()?;
    let wl = Workload::build(cfg)?;
    let oracle = wl.oracle();
    run_with(cfg, &wl, oracle)
}

/// Runs `cfg` on an already built workload and oracle.
pub fn run_with(cfg: &ScenarioConfig, wl: &Workload, oracle: Oracle) -> Result<RunReport, HarnessError> {
    wl.check_nodes(cfg.nodes)?;
    log::debug!("{} {} n={} size={} seed={}", cfg.model, cfg.kernel, cfg.nodes, cfg.size, cfg.seed);
    match cfg.model {
        Model::Arena => {
            let run = wl.run_arena(cfg.sim_config())?;
            let record = Record::from_arena(cfg, &oracle, &run.ledger, &run.result);
            Ok(RunReport {
                record,
                result: run.result,
                oracle,
                halt_times: run.halt_times,
                quiescent_at: run.quiescent_at,
                ledger: Some(run.ledger),
                bsp: None,
            })
        }
        Model::Bsp => {
            let (l, result) = wl.run_bsp(&cfg.bsp_params(wl.speedup()));
            let record = Record::from_bsp(cfg, &oracle, &l, &result);
            Ok(RunReport {
                record,
                result,
                oracle,
                halt_times: Vec::new(),
                quiescent_at: 0,
                ledger: None,
                bsp: Some(l),
            })
        }
    }
}

pub fn write_csv<W: Write>(out: W, records: &[Record]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::Io { path: "<csv>".into(), source: e })?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<Record>, HarnessError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(HarnessError::Config {
            field: "csv header".into(),
            reason: format!("unexpected columns: {header}"),
        });
    }
    rd.deserialize().map(|r| r.map_err(HarnessError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Kernel;

    #[test]
    fn header_matches_struct_order() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[Record::default()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        let mut empty = Vec::new();
        write_csv(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim_end(), CSV_HEADER);
    }

    #[test]
    fn sssp_digest_equals_oracle_digest() {
        for nodes in [1, 3, 4] {
            let mut cfg = ScenarioConfig::new(Kernel::Sssp, 32, nodes, 5);
            cfg.workload.density = 0.15;
            let rep = run_scenario(&cfg).unwrap();
            assert!(rep.record.oracle_ok);
            assert_eq!(rep.record.digest, rep.oracle.result.digest());
        }
    }
}
