use arena_core::cgra::SpeedupTable;
use arena_core::kernels::bsp::{BspLedger, BspParams};
use arena_core::kernels::gemm::{gemm_bsp, gemm_oracle, GemmApp};
use arena_core::kernels::nw::{nw_bsp, nw_oracle, NwApp};
use arena_core::kernels::spmv::{random_vector, spmv_bsp, spmv_oracle, SpmvApp};
use arena_core::kernels::sssp::{dijkstra_oracle, serial_ops, sssp_bsp, Graph, GraphSpec, SsspApp};
use arena_core::runtime::{run_app, RunOutcome};
use arena_core::{MetricsLedger, SimConfig, SimError};
use sha2::{Digest, Sha256};

use crate::formats::{parse_instance, Instance};
use crate::scenario::{Kernel, ScenarioConfig};
use crate::HarnessError;

/// Final application state in a model-independent form.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelResult {
    Ints(Vec<i64>),
    Floats(Vec<f64>),
}

pub const FLOAT_TOLERANCE: f64 = 1e-9;

impl KernelResult {
    /// Exact for integers, relative `FLOAT_TOLERANCE` for floats.
    pub fn matches(&self, want: &KernelResult) -> bool {
        match (self, want) {
            (KernelResult::Ints(a), KernelResult::Ints(b)) => a == b,
            (KernelResult::Floats(a), KernelResult::Floats(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= FLOAT_TOLERANCE * y.abs().max(1.0))
            }
            _ => false,
        }
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        match self {
            KernelResult::Ints(v) => {
                h.update(b"i64");
                v.iter().for_each(|x| h.update(x.to_le_bytes()));
            }
            KernelResult::Floats(v) => {
                h.update(b"f64");
                v.iter().for_each(|x| h.update(x.to_bits().to_le_bytes()));
            }
        }
        format!("{:x}", h.finalize())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Oracle {
    pub result: KernelResult,
    /// Serial operation count; one operation is one cycle on one core.
    pub serial_ops: u64,
}

pub struct ArenaRun {
    pub ledger: MetricsLedger,
    pub result: KernelResult,
    pub quiescent_at: u64,
    pub halt_times: Vec<u64>,
}

pub enum Workload {
    Sssp(SsspApp),
    Gemm(GemmApp),
    Spmv(SpmvApp),
    Nw(NwApp),
}

fn ints<T: Copy + Into<i64>>(v: &[T]) -> KernelResult {
    KernelResult::Ints(v.iter().map(|&x| x.into()).collect())
}

fn arena<M>(out: RunOutcome<M>, result: KernelResult) -> ArenaRun {
    ArenaRun { ledger: out.ledger, result, quiescent_at: out.quiescent_at, halt_times: out.halt_times }
}

impl Workload {
    /// The instance a scenario describes. Kernel speedups follow the
    /// scenario's backend.
    pub fn build(cfg: &ScenarioConfig) -> Result<Self, HarnessError> {
        let w = &cfg.workload;
        let loaded = match &w.input {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
                Some(parse_instance(&text)?.1)
            }
            None => None,
        };
        let mismatch = || HarnessError::Config {
            field: "workload.input".into(),
            reason: format!("instance kind does not fit kernel {}", cfg.kernel),
        };
        let mut wl = match cfg.kernel {
            Kernel::Sssp => {
                let g = match loaded {
                    Some(Instance::Graph(g)) => g,
                    Some(_) => return Err(mismatch()),
                    None => {
                        Graph::generate(&GraphSpec { size: cfg.size, density: w.density, band: w.band, seed: cfg.seed })
                    }
                };
                Workload::Sssp(SsspApp::new(g, 0))
            }
            Kernel::Gemm => {
                if loaded.is_some() {
                    return Err(mismatch());
                }
                Workload::Gemm(GemmApp::random(cfg.size, cfg.seed))
            }
            Kernel::Spmv => match loaded {
                Some(Instance::Csr(a)) => {
                    let x = random_vector(a.n, cfg.seed);
                    Workload::Spmv(SpmvApp::new(a, x))
                }
                Some(_) => return Err(mismatch()),
                None => Workload::Spmv(match w.band {
                    Some(b) => SpmvApp::banded(cfg.size, w.density, b, cfg.seed),
                    None => SpmvApp::random(cfg.size, w.density, cfg.seed),
                }),
            },
            Kernel::Nw => match loaded {
                Some(Instance::Pair(a, b)) => Workload::Nw(NwApp::new(a, b, w.block)),
                Some(_) => return Err(mismatch()),
                None => Workload::Nw(NwApp::random(cfg.size, w.block, cfg.seed)),
            },
        };
        let table = cfg.speedup(wl.default_speedup());
        wl.set_speedup(table);
        wl.check_nodes(cfg.nodes)?;
        Ok(wl)
    }

    pub fn kernel(&self) -> Kernel {
        match self {
            Workload::Sssp(_) => Kernel::Sssp,
            Workload::Gemm(_) => Kernel::Gemm,
            Workload::Spmv(_) => Kernel::Spmv,
            Workload::Nw(_) => Kernel::Nw,
        }
    }

    pub fn default_speedup(&self) -> SpeedupTable {
        match self {
            Workload::Sssp(_) => SpeedupTable::BFS,
            _ => SpeedupTable::AVERAGE,
        }
    }

    pub fn speedup(&self) -> SpeedupTable {
        match self {
            Workload::Sssp(a) => a.speedup,
            Workload::Gemm(a) => a.speedup,
            Workload::Spmv(a) => a.speedup,
            Workload::Nw(a) => a.speedup,
        }
    }

    pub fn set_speedup(&mut self, t: SpeedupTable) {
        match self {
            Workload::Sssp(a) => a.speedup = t,
            Workload::Gemm(a) => a.speedup = t,
            Workload::Spmv(a) => a.speedup = t,
            Workload::Nw(a) => a.speedup = t,
        }
    }

    /// Every node needs a non-empty partition.
    pub fn check_nodes(&self, nodes: usize) -> Result<(), HarnessError> {
        let units = match self {
            Workload::Sssp(a) => a.graph.size,
            Workload::Gemm(a) => a.n,
            Workload::Spmv(a) => a.a.n,
            Workload::Nw(a) => a.grid().blocks(),
        };
        if (units as usize) < nodes {
            let what = if matches!(self, Workload::Nw(_)) { "NW blocks" } else { "rows" };
            return Err(HarnessError::Config {
                field: "nodes".into(),
                reason: format!("{nodes} nodes but only {units} {what} to partition"),
            });
        }
        Ok(())
    }

    pub fn oracle(&self) -> Oracle {
        match self {
            Workload::Sssp(a) => {
                Oracle { result: ints(&dijkstra_oracle(&a.graph, a.src)), serial_ops: serial_ops(&a.graph, a.src) }
            }
            Workload::Gemm(a) => {
                let (c, ops) = gemm_oracle(a.n, &a.a, &a.b);
                Oracle { result: KernelResult::Floats(c), serial_ops: ops }
            }
            Workload::Spmv(a) => {
                let (y, ops) = spmv_oracle(&a.a, &a.x);
                Oracle { result: KernelResult::Floats(y), serial_ops: ops }
            }
            Workload::Nw(a) => {
                let (_, row, ops) = nw_oracle(&a.a, &a.b, a.scoring);
                Oracle { result: ints(&row), serial_ops: ops }
            }
        }
    }

    pub fn run_arena(&self, cfg: SimConfig) -> Result<ArenaRun, SimError> {
        Ok(match self {
            Workload::Sssp(a) => {
                let out = run_app(a, cfg)?;
                let r = ints(&a.distances(&out.memories));
                arena(out, r)
            }
            Workload::Gemm(a) => {
                let out = run_app(a, cfg)?;
                let r = KernelResult::Floats(a.gather(&out.memories));
                arena(out, r)
            }
            Workload::Spmv(a) => {
                let out = run_app(a, cfg)?;
                let r = KernelResult::Floats(a.gather(&out.memories));
                arena(out, r)
            }
            Workload::Nw(a) => {
                let out = run_app(a, cfg)?;
                let r = ints(&a.last_row(&out.memories, &out.partitions));
                arena(out, r)
            }
        })
    }

    pub fn run_bsp(&self, p: &BspParams) -> (BspLedger, KernelResult) {
        match self {
            Workload::Sssp(a) => {
                let (d, l) = sssp_bsp(&a.graph, a.src, p);
                (l, ints(&d))
            }
            Workload::Gemm(a) => {
                let (c, l) = gemm_bsp(a, p);
                (l, KernelResult::Floats(c))
            }
            Workload::Spmv(a) => {
                let (y, l) = spmv_bsp(a, p);
                (l, KernelResult::Floats(y))
            }
            Workload::Nw(a) => {
                let (_, row, l) = nw_bsp(a, p);
                (l, ints(&row))
            }
        }
    }
}
