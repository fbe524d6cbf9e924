//! Dense `C = A * B` with row-partitioned operands. Each node's C band is
//! built from one task per row chunk of B, and each task streams its chunk
//! in through the remote range.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bsp::{BspLedger, BspParams};
use crate::cgra::SpeedupTable;
use crate::range::AddressRange;
use crate::registry::{RegistryError, TaskRegistry};
use crate::runtime::{balanced_partitions, Application, KernelCtx, KernelFault};
use crate::token::TaskToken;
use crate::NodeId;

pub const GEMM_GEN: u8 = 1;
pub const GEMM_BLOCK: u8 = 2;
/// B is streamed in this many row chunks regardless of the node count.
pub const CHUNKS: u32 = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct GemmApp {
    pub n: u32,
    /// Row-major operands.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub speedup: SpeedupTable,
}

pub struct GemmMem {
    pub n: u32,
    pub chunk_rows: u32,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl GemmApp {
    pub fn new(n: u32, a: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(a.len(), (n * n) as usize);
        assert_eq!(b.len(), (n * n) as usize);
        GemmApp { n, a, b, speedup: SpeedupTable::AVERAGE }
    }

    pub fn random(n: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let a = draw();
        let b = draw();
        GemmApp::new(n, a, b)
    }

    pub fn identity(n: u32) -> Self {
        let eye: Vec<f64> = (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect();
        GemmApp::new(n, eye.clone(), eye)
    }

    fn chunk_rows(&self) -> u32 {
        self.n.div_ceil(CHUNKS).max(1)
    }

    pub fn gather(&self, memories: &[GemmMem]) -> Vec<f64> {
        memories.iter().flat_map(|m| m.c.iter().copied()).collect()
    }
}

/// Serial `i-k-j` product; one multiply-add per operation.
pub fn gemm_oracle(n: u32, a: &[f64], b: &[f64]) -> (Vec<f64>, u64) {
    let n = n as usize;
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    (c, (n * n * n) as u64)
}

fn gemm_gen(ctx: &mut KernelCtx<'_, GemmMem, f64>) -> Result<(), KernelFault> {
    let n = ctx.mem.n;
    let chunk = ctx.mem.chunk_rows;
    let r = ctx.range();
    let mut k0 = 0;
    while k0 < n {
        let k1 = (k0 + chunk).min(n);
        ctx.task_spawn(GEMM_BLOCK, r.start, r.end, k0 / chunk, k0 * n, k1 * n)?;
        ctx.op();
        k0 = k1;
    }
    Ok(())
}

fn gemm_block(ctx: &mut KernelCtx<'_, GemmMem, f64>) -> Result<(), KernelFault> {
    let n = ctx.mem.n as usize;
    let r = ctx.range();
    let remote = ctx.token().remote_range;
    let (k0, k1) = ((remote.start as usize) / n, (remote.end as usize) / n);
    let first = ctx.local_offset(r.start)?;
    ctx.local_offset(r.end - 1)?;
    let rows = r.len() as usize / n;
    for i in 0..rows {
        let row = first / n + i;
        for k in k0..k1 {
            let aik = ctx.mem.a[row * n + k];
            let bk = &ctx.staged()[(k - k0) * n..(k - k0 + 1) * n];
            let c = &mut ctx.mem.c[row * n..(row + 1) * n];
            for (cj, bkj) in c.iter_mut().zip(bk) {
                *cj += aik * bkj;
            }
        }
    }
    ctx.ops((rows * (k1 - k0) * n) as u64);
    Ok(())
}

impl Application for GemmApp {
    type Mem = GemmMem;
    type Word = f64;

    fn name(&self) -> &'static str {
        "gemm"
    }

    fn address_space(&self) -> u32 {
        self.n * self.n
    }

    fn word_bytes(&self) -> u64 {
        8
    }

    /// Whole rows per node.
    fn partitions(&self, nodes: usize) -> Vec<AddressRange> {
        balanced_partitions(self.n, nodes)
            .into_iter()
            .map(|r| AddressRange::new(r.start * self.n, r.end * self.n))
            .collect()
    }

    fn init_memory(&self, _node: NodeId, local: AddressRange) -> GemmMem {
        let span = local.start as usize..local.end as usize;
        GemmMem {
            n: self.n,
            chunk_rows: self.chunk_rows(),
            a: self.a[span.clone()].to_vec(),
            b: self.b[span].to_vec(),
            c: vec![0.0; local.len() as usize],
        }
    }

    fn register(&self, reg: &mut TaskRegistry<GemmMem, f64>) -> Result<(), RegistryError> {
        reg.task_register(GEMM_GEN, "gemm_gen", gemm_gen, true, self.speedup)?;
        reg.task_register(GEMM_BLOCK, "gemm_block", gemm_block, false, self.speedup)
    }

    fn root_token(&self) -> TaskToken {
        TaskToken::new(GEMM_GEN, AddressRange::new(0, self.n * self.n), 0)
    }

    fn read_word(&self, mem: &GemmMem, local: AddressRange, addr: u32) -> f64 {
        mem.b[(addr - local.start) as usize]
    }
}

/// One superstep: allgather B, then every node multiplies its band.
pub fn gemm_bsp(app: &GemmApp, p: &BspParams) -> (Vec<f64>, BspLedger) {
    let n = app.n as usize;
    let parts = balanced_partitions(app.n, p.nodes);
    let mut ledger = BspLedger::new(p.nodes);
    let band_bytes: Vec<u64> = parts.iter().map(|r| r.len() as u64 * n as u64 * 8).collect();
    ledger.allgather(p, &band_bytes);
    let mut c = Vec::with_capacity(n * n);
    let mut ops = Vec::new();
    for r in &parts {
        let rows = r.start as usize * n..r.end as usize * n;
        let (band, o) = gemm_rows(&app.a[rows], &app.b, n);
        c.extend(band);
        ops.push(o);
    }
    ledger.compute(p, &ops);
    (c, ledger)
}

fn gemm_rows(a: &[f64], b: &[f64], n: usize) -> (Vec<f64>, u64) {
    let rows = a.len() / n;
    let mut c = vec![0.0; rows * n];
    for i in 0..rows {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    (c, (rows * n * n) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::runtime::run_app;

    #[test]
    fn identity_squared_is_identity() {
        let app = GemmApp::identity(8);
        let out = run_app(&app, SimConfig { nodes: 4, ..Default::default() }).unwrap();
        assert_eq!(app.gather(&out.memories), app.a);
        assert_eq!(out.ledger.ops, 8 * 8 * 8 + 4 * 8);
    }

    #[test]
    fn random_product_matches_oracle() {
        let app = GemmApp::random(12, 5);
        let (want, _) = gemm_oracle(12, &app.a, &app.b);
        let out = run_app(&app, SimConfig { nodes: 3, ..Default::default() }).unwrap();
        for (x, y) in app.gather(&out.memories).iter().zip(&want) {
            assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
        }
        let p = BspParams { nodes: 3, hop: 800, bits_per_cycle: 100, speedup: SpeedupTable::UNIT, groups: 4 };
        assert_eq!(gemm_bsp(&app, &p).0, want);
    }
}
