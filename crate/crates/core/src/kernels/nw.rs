//! Needleman-Wunsch global alignment, tiled into blocks that form a
//! wavefront. Every block owns a slot of `2B + 1` words: its south edge
//! (corner plus bottom row) followed by its east edge. A finished block
//! spawns its east and south successors with the remote range pointing at
//! the edge they need; a block computes once both inputs have arrived.

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

pub const NW_BLOCK: u8 = 1;
pub const FROM_START: u32 = 0;
pub const FROM_NORTH: u32 = 1;
pub const FROM_WEST: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scoring {
    pub matched: i32,
    pub mismatch: i32,
    pub gap: i32,
}

impl Default for Scoring {
    fn default() -> Self {
        Scoring { matched: 1, mismatch: -1, gap: -1 }
    }
}

impl Scoring {
    fn score(&self, x: u8, y: u8) -> i32 {
        if x == y {
            self.matched
        } else {
            self.mismatch
        }
    }
}

/// Full-table DP. Returns the final score, the last row of the table and
/// the cell count as the serial operation count.
pub fn nw_oracle(a: &[u8], b: &[u8], s: Scoring) -> (i32, Vec<i32>, u64) {
    let mut prev: Vec<i32> = (0..=b.len() as i32).map(|j| j * s.gap).collect();
    for (i, &x) in a.iter().enumerate() {
        let mut cur = vec![(i as i32 + 1) * s.gap; b.len() + 1];
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + s.score(x, y)).max(prev[j + 1] + s.gap).max(cur[j] + s.gap);
        }
        prev = cur;
    }
    (*prev.last().expect("non-empty row"), prev, (a.len() * b.len()) as u64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NwApp {
    pub a: Vec<u8>,
    pub b: Vec<u8>,
    pub block: u32,
    pub scoring: Scoring,
    pub speedup: SpeedupTable,
}

/// Shape of the block grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub na: u32,
    pub nb: u32,
    pub block: u32,
    pub rows: u32,
    pub cols: u32,
}

impl Grid {
    pub fn slot(&self) -> u32 {
        2 * self.block + 1
    }

    pub fn blocks(&self) -> u32 {
        self.rows * self.cols
    }

    /// Height and width of block `(bi, bj)`.
    pub fn dims(&self, bi: u32, bj: u32) -> (u32, u32) {
        ((self.na - bi * self.block).min(self.block), (self.nb - bj * self.block).min(self.block))
    }

    pub fn base(&self, bi: u32, bj: u32) -> u32 {
        (bi * self.cols + bj) * self.slot()
    }

    pub fn south(&self, bi: u32, bj: u32) -> AddressRange {
        let b = self.base(bi, bj);
        AddressRange::new(b, b + self.dims(bi, bj).1 + 1)
    }

    pub fn east(&self, bi: u32, bj: u32) -> AddressRange {
        let b = self.base(bi, bj) + self.block + 1;
        AddressRange::new(b, b + self.dims(bi, bj).0)
    }

    pub fn block_of(&self, addr: u32) -> (u32, u32) {
        let idx = addr / self.slot();
        (idx / self.cols, idx % self.cols)
    }
}

#[derive(Clone, Debug, Default)]
struct BlockState {
    north: Option<Vec<i32>>,
    west: Option<Vec<i32>>,
    done: bool,
}

pub struct NwMem {
    grid: Grid,
    a: Vec<u8>,
    b: Vec<u8>,
    scoring: Scoring,
    first_block: u32,
    blocks: Vec<BlockState>,
    /// Edge words of the local slots.
    pub words: Vec<i32>,
}

impl NwApp {
    pub fn new(a: Vec<u8>, b: Vec<u8>, block: u32) -> Self {
        assert!(!a.is_empty() && !b.is_empty() && block > 0);
        NwApp { a, b, block, scoring: Scoring::default(), speedup: SpeedupTable::AVERAGE }
    }

    pub fn random(len: u32, block: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seq = || (0..len).map(|_| b"ACGT"[rng.random_range(0..4)]).collect::<Vec<u8>>();
        let a = seq();
        let b = seq();
        NwApp::new(a, b, block)
    }

    pub fn grid(&self) -> Grid {
        let (na, nb) = (self.a.len() as u32, self.b.len() as u32);
        Grid { na, nb, block: self.block, rows: na.div_ceil(self.block), cols: nb.div_ceil(self.block) }
    }

    /// Bottom row of the table, read from the last block row's south edges.
    pub fn last_row(&self, memories: &[NwMem], partitions: &[AddressRange]) -> Vec<i32> {
        let g = self.grid();
        let mut row = Vec::with_capacity(g.nb as usize + 1);
        for bj in 0..g.cols {
            let s = g.south(g.rows - 1, bj);
            let owner = partitions.iter().position(|p| p.contains(s.start)).expect("partitions cover");
            let local = partitions[owner];
            let edge = &memories[owner].words[(s.start - local.start) as usize..(s.end - local.start) as usize];
            row.extend_from_slice(if bj == 0 { edge } else { &edge[1..] });
        }
        row
    }
}

/// Fill one block. Returns the south edge (corner first) and east edge.
fn fill_block(a: &[u8], b: &[u8], s: Scoring, north: &[i32], west: &[i32]) -> (Vec<i32>, Vec<i32>) {
    let mut prev = north.to_vec();
    let mut east = Vec::with_capacity(a.len());
    for (i, &x) in a.iter().enumerate() {
        let mut cur = vec![west[i]; b.len() + 1];
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + s.score(x, y)).max(prev[j + 1] + s.gap).max(cur[j] + s.gap);
        }
        east.push(cur[b.len()]);
        prev = cur;
    }
    (prev, east)
}

fn boundary_north(g: &Grid, s: Scoring, bj: u32, w: u32) -> Vec<i32> {
    (0..=w).map(|t| (bj * g.block + t) as i32 * s.gap).collect()
}

fn boundary_west(g: &Grid, s: Scoring, bi: u32, h: u32) -> Vec<i32> {
    (0..h).map(|t| (bi * g.block + 1 + t) as i32 * s.gap).collect()
}

fn nw_block(ctx: &mut KernelCtx<'_, NwMem, i32>) -> Result<(), KernelFault> {
    let g = ctx.mem.grid;
    let r = ctx.range();
    ctx.local_offset(r.start)?;
    let (bi, bj) = g.block_of(r.start);
    let (h, w) = g.dims(bi, bj);
    let slot = (bi * g.cols + bj - ctx.mem.first_block) as usize;
    let staged = ctx.staged();
    match ctx.param() {
        FROM_NORTH => ctx.mem.blocks[slot].north = Some(staged.to_vec()),
        FROM_WEST => ctx.mem.blocks[slot].west = Some(staged.to_vec()),
        _ => {}
    }
    ctx.ops(staged.len() as u64);

    let st = &ctx.mem.blocks[slot];
    if (bi > 0 && st.north.is_none()) || (bj > 0 && st.west.is_none()) {
        return Ok(());
    }
    if st.done {
        return Err(KernelFault::App("block filled twice"));
    }
    let s = ctx.mem.scoring;
    let north = st.north.clone().unwrap_or_else(|| boundary_north(&g, s, bj, w));
    let west = st.west.clone().unwrap_or_else(|| boundary_west(&g, s, bi, h));
    let rows = &ctx.mem.a[(bi * g.block) as usize..(bi * g.block + h) as usize];
    let cols = &ctx.mem.b[(bj * g.block) as usize..(bj * g.block + w) as usize];
    let (south, east) = fill_block(rows, cols, s, &north, &west);
    ctx.ops((h * w) as u64);

    let (sr, er) = (g.south(bi, bj), g.east(bi, bj));
    let at = |x: u32| (x - ctx.local_range().start) as usize;
    let (s0, e0) = (at(sr.start), at(er.start));
    ctx.mem.words[s0..s0 + south.len()].copy_from_slice(&south);
    ctx.mem.words[e0..e0 + east.len()].copy_from_slice(&east);
    ctx.mem.blocks[slot] = BlockState { north: None, west: None, done: true };

    let slot_len = g.slot();
    if bj + 1 < g.cols {
        let b = g.base(bi, bj + 1);
        ctx.task_spawn(NW_BLOCK, b, b + slot_len, FROM_WEST, er.start, er.end)?;
    }
    if bi + 1 < g.rows {
        let b = g.base(bi + 1, bj);
        ctx.task_spawn(NW_BLOCK, b, b + slot_len, FROM_NORTH, sr.start, sr.end)?;
    }
    Ok(())
}

impl Application for NwApp {
    type Mem = NwMem;
    type Word = i32;

    fn name(&self) -> &'static str {
        "nw"
    }

    fn address_space(&self) -> u32 {
        self.grid().blocks() * self.grid().slot()
    }

    /// Whole blocks per node, in row-major block order.
    fn partitions(&self, nodes: usize) -> Vec<AddressRange> {
        let g = self.grid();
        balanced_partitions(g.blocks(), nodes)
            .into_iter()
            .map(|r| AddressRange::new(r.start * g.slot(), r.end * g.slot()))
            .collect()
    }

    fn init_memory(&self, _node: NodeId, local: AddressRange) -> NwMem {
        let g = self.grid();
        NwMem {
            grid: g,
            a: self.a.clone(),
            b: self.b.clone(),
            scoring: self.scoring,
            first_block: local.start / g.slot(),
            blocks: vec![BlockState::default(); (local.len() / g.slot()) as usize],
            words: vec![0; local.len() as usize],
        }
    }

    fn register(&self, reg: &mut TaskRegistry<NwMem, i32>) -> Result<(), RegistryError> {
        reg.task_register(NW_BLOCK, "nw_block", nw_block, true, self.speedup)
    }

    fn root_token(&self) -> TaskToken {
        TaskToken::new(NW_BLOCK, AddressRange::new(0, self.grid().slot()), FROM_START)
    }

    fn read_word(&self, mem: &NwMem, local: AddressRange, addr: u32) -> i32 {
        mem.words[(addr - local.start) as usize]
    }
}

/// One superstep per anti-diagonal of blocks. Edges a block on another
/// node will consume are exchanged with a collective after each step.
pub fn nw_bsp(app: &NwApp, p: &BspParams) -> (i32, Vec<i32>, BspLedger) {
    let g = app.grid();
    let parts = balanced_partitions(g.blocks(), p.nodes);
    let owner = |bi: u32, bj: u32| parts.iter().position(|r| r.contains(bi * g.cols + bj)).expect("covered");
    let s = app.scoring;
    let mut ledger = BspLedger::new(p.nodes);
    let mut south: Vec<Vec<i32>> = vec![Vec::new(); g.blocks() as usize];
    let mut east: Vec<Vec<i32>> = vec![Vec::new(); g.blocks() as usize];
    for d in 0..g.rows + g.cols - 1 {
        let mut ops = vec![0u64; p.nodes];
        let mut out = vec![0u64; p.nodes];
        for bi in d.saturating_sub(g.cols - 1)..=d.min(g.rows - 1) {
            let bj = d - bi;
            let (h, w) = g.dims(bi, bj);
            let north =
                if bi == 0 { boundary_north(&g, s, bj, w) } else { south[((bi - 1) * g.cols + bj) as usize].clone() };
            let west =
                if bj == 0 { boundary_west(&g, s, bi, h) } else { east[(bi * g.cols + bj - 1) as usize].clone() };
            let rows = &app.a[(bi * g.block) as usize..(bi * g.block + h) as usize];
            let cols = &app.b[(bj * g.block) as usize..(bj * g.block + w) as usize];
            let (so, eo) = fill_block(rows, cols, s, &north, &west);
            let me = owner(bi, bj);
            ops[me] += (h * w) as u64;
            if bi + 1 < g.rows && owner(bi + 1, bj) != me {
                out[me] += 4 * so.len() as u64;
            }
            if bj + 1 < g.cols && owner(bi, bj + 1) != me {
                out[me] += 4 * eo.len() as u64;
            }
            south[(bi * g.cols + bj) as usize] = so;
            east[(bi * g.cols + bj) as usize] = eo;
        }
        ledger.compute(p, &ops);
        ledger.allgather(p, &out);
    }
    let mut row = Vec::new();
    for bj in 0..g.cols {
        let e = &south[((g.rows - 1) * g.cols + bj) as usize];
        row.extend_from_slice(if bj == 0 { e } else { &e[1..] });
    }
    (*row.last().expect("non-empty"), row, ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::runtime::run_app;

    #[test]
    fn textbook_pair() {
        let (score, _, ops) = nw_oracle(b"GATTACA", b"GCATGCU", Scoring::default());
        assert_eq!(score, 0);
        assert_eq!(ops, 49);
        let app = NwApp::new(b"GATTACA".to_vec(), b"GCATGCU".to_vec(), 16);
        let out = run_app(&app, SimConfig { nodes: 1, ..Default::default() }).unwrap();
        let row = app.last_row(&out.memories, &out.partitions);
        assert_eq!(*row.last().unwrap(), score);
    }

    #[test]
    fn tiled_matches_oracle_across_nodes() {
        let app = NwApp::random(45, 8, 2);
        let (score, row, _) = nw_oracle(&app.a, &app.b, app.scoring);
        for nodes in [1, 2, 3, 4] {
            let out = run_app(&app, SimConfig { nodes, strict_checks: true, ..Default::default() }).unwrap();
            assert_eq!(app.last_row(&out.memories, &out.partitions), row, "nodes {nodes}");
            let p = BspParams { nodes, hop: 800, bits_per_cycle: 100, speedup: SpeedupTable::UNIT, groups: 4 };
            let (bs, brow, _) = nw_bsp(&app, &p);
            assert_eq!((bs, brow), (score, row.clone()));
        }
    }

    #[test]
    fn uneven_lengths() {
        let mut app = NwApp::random(30, 7, 4);
        app.b.truncate(19);
        let (_, row, _) = nw_oracle(&app.a, &app.b, app.scoring);
        let out = run_app(&app, SimConfig { nodes: 2, ..Default::default() }).unwrap();
        assert_eq!(app.last_row(&out.memories, &out.partitions), row);
    }
}
