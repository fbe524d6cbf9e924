//! Sparse `y = A * x` with A in CSR, rows and x partitioned alike. A node's
//! band runs one task per x chunk its rows actually reference; the chunk
//! arrives through the remote range.

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

pub const SPMV_GEN: u8 = 1;
pub const SPMV_BAND: u8 = 2;
pub const CHUNKS: u32 = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub n: u32,
    pub row_ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn random(n: u32, density: f64, seed: u64) -> Self {
        Csr::generate(n, density, None, seed)
    }

    /// Nonzeros only within `band` of the diagonal.
    pub fn banded(n: u32, density: f64, band: u32, seed: u64) -> Self {
        Csr::generate(n, density, Some(band), seed)
    }

    fn generate(n: u32, density: f64, band: Option<u32>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut row_ptr = vec![0];
        let mut col = Vec::new();
        let mut val = Vec::new();
        for i in 0..n {
            let (lo, hi) = match band {
                Some(b) => (i.saturating_sub(b), (i + b + 1).min(n)),
                None => (0, n),
            };
            for j in lo..hi {
                if rng.random_bool(density) {
                    col.push(j);
                    val.push(rng.random_range(-1.0..1.0));
                }
            }
            row_ptr.push(col.len());
        }
        Csr { n, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let s = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col[s.clone()], &self.val[s])
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n as usize;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[i * n + j as usize] = v;
            }
        }
        d
    }
}

/// Matrix-vector product from the dense expansion, or for large `n` from
/// a column-ordered scatter over the nonzeros. One multiply-add per stored
/// nonzero is the serial operation count.
pub fn spmv_oracle(a: &Csr, x: &[f64]) -> (Vec<f64>, u64) {
    let n = a.n as usize;
    if n <= 4096 {
        let dense = a.to_dense();
        let y = (0..n).map(|i| (0..n).map(|j| dense[i * n + j] * x[j]).sum()).collect();
        return (y, a.nnz() as u64);
    }
    let mut coo: Vec<(u32, usize, f64)> = Vec::with_capacity(a.nnz());
    for i in 0..n {
        let (cols, vals) = a.row(i);
        coo.extend(cols.iter().zip(vals).map(|(&j, &v)| (j, i, v)));
    }
    coo.sort_by_key(|&(j, i, _)| (j, i));
    let mut y = vec![0.0; n];
    for (j, i, v) in coo {
        y[i] += v * x[j as usize];
    }
    (y, a.nnz() as u64)
}

/// The dense operand `x` drawn for a given seed.
pub fn random_vector(n: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub struct SpmvApp {
    pub a: Csr,
    pub x: Vec<f64>,
    pub speedup: SpeedupTable,
}

pub struct SpmvMem {
    pub chunk: u32,
    /// Local slice of A, rows rebased to the band start.
    pub a: Csr,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// x chunks referenced by this band.
    pub chunks_used: Vec<u32>,
}

impl SpmvApp {
    pub fn new(a: Csr, x: Vec<f64>) -> Self {
        assert_eq!(x.len(), a.n as usize);
        SpmvApp { a, x, speedup: SpeedupTable::AVERAGE }
    }

    pub fn random(n: u32, density: f64, seed: u64) -> Self {
        SpmvApp::with_matrix(Csr::random(n, density, seed), seed)
    }

    pub fn banded(n: u32, density: f64, band: u32, seed: u64) -> Self {
        SpmvApp::with_matrix(Csr::banded(n, density, band, seed), seed)
    }

    fn with_matrix(a: Csr, seed: u64) -> Self {
        let x = random_vector(a.n, seed);
        SpmvApp::new(a, x)
    }

    fn chunk(&self) -> u32 {
        self.a.n.div_ceil(CHUNKS).max(1)
    }

    pub fn gather(&self, memories: &[SpmvMem]) -> Vec<f64> {
        memories.iter().flat_map(|m| m.y.iter().copied()).collect()
    }
}

fn spmv_gen(ctx: &mut KernelCtx<'_, SpmvMem, f64>) -> Result<(), KernelFault> {
    let r = ctx.range();
    let chunk = ctx.mem.chunk;
    let n = ctx.mem.a.n;
    for i in 0..ctx.mem.chunks_used.len() {
        let c = ctx.mem.chunks_used[i];
        let (c0, c1) = (c * chunk, ((c + 1) * chunk).min(n));
        ctx.task_spawn(SPMV_BAND, r.start, r.end, c, c0, c1)?;
        ctx.op();
    }
    Ok(())
}

fn spmv_band(ctx: &mut KernelCtx<'_, SpmvMem, f64>) -> Result<(), KernelFault> {
    let r = ctx.range();
    let remote = ctx.token().remote_range;
    let staged = ctx.staged();
    let first = ctx.local_offset(r.start)?;
    ctx.local_offset(r.end - 1)?;
    let mut ops = 0;
    for i in first..first + r.len() as usize {
        let (cols, vals) = ctx.mem.a.row(i);
        let lo = cols.partition_point(|&c| c < remote.start);
        let hi = cols.partition_point(|&c| c < remote.end);
        let mut acc = 0.0;
        for k in lo..hi {
            acc += vals[k] * staged[(cols[k] - remote.start) as usize];
        }
        ctx.mem.y[i] += acc;
        ops += (hi - lo) as u64;
    }
    ctx.ops(ops);
    Ok(())
}

impl Application for SpmvApp {
    type Mem = SpmvMem;
    type Word = f64;

    fn name(&self) -> &'static str {
        "spmv"
    }

    fn address_space(&self) -> u32 {
        self.a.n
    }

    fn word_bytes(&self) -> u64 {
        8
    }

    fn init_memory(&self, _node: NodeId, local: AddressRange) -> SpmvMem {
        let chunk = self.chunk();
        let mut row_ptr = vec![0];
        let mut col = Vec::new();
        let mut val = Vec::new();
        let mut used = vec![false; CHUNKS as usize];
        for i in local.iter() {
            let (c, v) = self.a.row(i as usize);
            col.extend_from_slice(c);
            val.extend_from_slice(v);
            row_ptr.push(col.len());
            for &j in c {
                used[(j / chunk) as usize] = true;
            }
        }
        SpmvMem {
            chunk,
            a: Csr { n: self.a.n, row_ptr, col, val },
            x: self.x[local.start as usize..local.end as usize].to_vec(),
            y: vec![0.0; local.len() as usize],
            chunks_used: (0..CHUNKS).filter(|&c| used[c as usize]).collect(),
        }
    }

    fn register(&self, reg: &mut TaskRegistry<SpmvMem, f64>) -> Result<(), RegistryError> {
        reg.task_register(SPMV_GEN, "spmv_gen", spmv_gen, true, self.speedup)?;
        reg.task_register(SPMV_BAND, "spmv_band", spmv_band, false, self.speedup)
    }

    fn root_token(&self) -> TaskToken {
        TaskToken::new(SPMV_GEN, AddressRange::new(0, self.a.n), 0)
    }

    fn read_word(&self, mem: &SpmvMem, local: AddressRange, addr: u32) -> f64 {
        mem.x[(addr - local.start) as usize]
    }
}

/// One superstep: allgather x, then each node multiplies its rows.
pub fn spmv_bsp(app: &SpmvApp, p: &BspParams) -> (Vec<f64>, BspLedger) {
    let parts = balanced_partitions(app.a.n, p.nodes);
    let mut ledger = BspLedger::new(p.nodes);
    ledger.allgather(p, &parts.iter().map(|r| r.len() as u64 * 8).collect::<Vec<_>>());
    let mut y = Vec::with_capacity(app.a.n as usize);
    let mut ops = Vec::new();
    for r in &parts {
        let mut o = 0;
        for i in r.iter() {
            let (cols, vals) = app.a.row(i as usize);
            y.push(cols.iter().zip(vals).map(|(&j, v)| v * app.x[j as usize]).sum());
            o += cols.len() as u64;
        }
        ops.push(o);
    }
    ledger.compute(p, &ops);
    (y, ledger)
}
