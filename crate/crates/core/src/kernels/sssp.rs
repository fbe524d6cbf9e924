//! Unit-weight single-source shortest paths over a dense, row-partitioned
//! level matrix. Entry `0` means no edge, `INF` an edge not yet reached,
//! anything else the best level seen along that edge.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bsp::{BspLedger, BspParams};
use crate::cgra::SpeedupTable;
use crate::range::AddressRange;
use crate::registry::{RegistryError, TaskRegistry};
use crate::runtime::{balanced_partitions, Application, KernelCtx, KernelFault};
use crate::token::TaskToken;
use crate::NodeId;

pub const INF: u32 = u32::MAX;
pub const SSSP_TASK: u8 = 1;

/// Undirected graph as sorted neighbor lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    pub size: u32,
    pub adj: Vec<Vec<u32>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphSpec {
    pub size: u32,
    /// Probability of an edge between two candidate endpoints.
    pub density: f64,
    /// Only pairs at most this far apart (circularly) are candidates.
    pub band: Option<u32>,
    pub seed: u64,
}

impl Graph {
    pub fn from_edges(size: u32, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut sets = vec![BTreeSet::new(); size as usize];
        for (a, b) in edges {
            if a != b {
                sets[a as usize].insert(b);
                sets[b as usize].insert(a);
            }
        }
        Graph { size, adj: sets.into_iter().map(|s| s.into_iter().collect()).collect() }
    }

    pub fn generate(spec: &GraphSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let n = spec.size;
        let mut edges = Vec::new();
        for i in 0..n {
            match spec.band {
                None => {
                    for j in i + 1..n {
                        if rng.random_bool(spec.density) {
                            edges.push((i, j));
                        }
                    }
                }
                Some(band) => {
                    // each pair once: forward offsets only, wrapping
                    for d in 1..=band.min(n / 2) {
                        if 2 * d == n && i >= n / 2 {
                            continue;
                        }
                        if rng.random_bool(spec.density) {
                            edges.push((i, (i + d) % n));
                        }
                    }
                }
            }
        }
        Graph::from_edges(n, edges)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Distances by Dijkstra with unit weights; unreachable vertices get `INF`.
pub fn dijkstra_oracle(g: &Graph, src: u32) -> Vec<u32> {
    let mut dist = vec![INF; g.size as usize];
    let mut heap = BinaryHeap::new();
    dist[src as usize] = 0;
    heap.push(Reverse((0u32, src)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        for &j in &g.adj[v as usize] {
            if d + 1 < dist[j as usize] {
                dist[j as usize] = d + 1;
                heap.push(Reverse((d + 1, j)));
            }
        }
    }
    dist
}

/// Operations a serial row-scanning search performs: one full row per
/// reached vertex.
pub fn serial_ops(g: &Graph, src: u32) -> u64 {
    let reached = dijkstra_oracle(g, src).iter().filter(|&&d| d != INF).count() as u64;
    reached * g.size as u64
}

pub struct SsspMem {
    pub size: u32,
    /// Local rows, row-major.
    pub rows: Vec<u32>,
    /// Smallest level each local vertex has been visited with.
    pub best: Vec<u32>,
}

pub struct SsspApp {
    pub graph: Graph,
    pub src: u32,
    pub speedup: SpeedupTable,
}

impl SsspApp {
    pub fn new(graph: Graph, src: u32) -> Self {
        SsspApp { graph, src, speedup: SpeedupTable::BFS }
    }

    /// Column minimum over every node's rows.
    pub fn distances(&self, memories: &[SsspMem]) -> Vec<u32> {
        let n = self.graph.size as usize;
        let mut dist = vec![INF; n];
        for m in memories {
            for row in m.rows.chunks(n) {
                for (j, &e) in row.iter().enumerate() {
                    if e != 0 && e < dist[j] {
                        dist[j] = e;
                    }
                }
            }
        }
        dist[self.src as usize] = 0;
        dist
    }
}

pub fn sssp_kernel(ctx: &mut KernelCtx<'_, SsspMem, u32>) -> Result<(), KernelFault> {
    let level = ctx.param();
    let size = ctx.mem.size as usize;
    for v in ctx.range().iter() {
        let off = ctx.local_offset(v)?;
        if level >= ctx.mem.best[off] {
            ctx.note_duplicate();
        } else {
            ctx.mem.best[off] = level;
        }
        for j in 0..size {
            let e = &mut ctx.mem.rows[off * size + j];
            if *e > level {
                *e = level;
                ctx.task_spawn(SSSP_TASK, j as u32, j as u32 + 1, level + 1, 0, 0)?;
            }
        }
        ctx.ops(size as u64);
    }
    Ok(())
}

impl Application for SsspApp {
    type Mem = SsspMem;
    type Word = u32;

    fn name(&self) -> &'static str {
        "sssp"
    }

    fn address_space(&self) -> u32 {
        self.graph.size
    }

    fn init_memory(&self, _node: NodeId, local: AddressRange) -> SsspMem {
        let n = self.graph.size as usize;
        let mut rows = vec![0; local.len() as usize * n];
        for (r, v) in local.iter().enumerate() {
            for &j in &self.graph.adj[v as usize] {
                rows[r * n + j as usize] = INF;
            }
        }
        SsspMem { size: self.graph.size, rows, best: vec![INF; local.len() as usize] }
    }

    fn register(&self, reg: &mut TaskRegistry<SsspMem, u32>) -> Result<(), RegistryError> {
        reg.task_register(SSSP_TASK, "sssp", sssp_kernel, true, self.speedup)
    }

    fn root_token(&self) -> TaskToken {
        TaskToken::new(SSSP_TASK, AddressRange::new(self.src, self.src + 1), 1)
    }

    fn read_word(&self, mem: &SsspMem, local: AddressRange, addr: u32) -> u32 {
        mem.best[(addr - local.start) as usize]
    }
}

/// Level-synchronous search: each level every node expands its own
/// frontier vertices, then counts are allgathered and each node broadcasts
/// the vertices it discovered.
pub fn sssp_bsp(g: &Graph, src: u32, p: &BspParams) -> (Vec<u32>, BspLedger) {
    let n = g.size as usize;
    let parts = balanced_partitions(g.size, p.nodes);
    let mut ledger = BspLedger::new(p.nodes);
    let mut dist = vec![INF; n];
    dist[src as usize] = 0;
    let mut frontier = vec![src];
    let mut level = 0;
    loop {
        let mut ops = vec![0u64; p.nodes];
        let mut visits: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); p.nodes];
        for &v in &frontier {
            let owner = parts.iter().position(|r| r.contains(v)).expect("partitions cover");
            ops[owner] += n as u64;
            for &j in &g.adj[v as usize] {
                if dist[j as usize] == INF {
                    visits[owner].insert(j);
                }
            }
        }
        ledger.compute(p, &ops);
        ledger.allgather(p, &vec![4; p.nodes]);
        if visits.iter().all(BTreeSet::is_empty) {
            break;
        }
        for set in &visits {
            ledger.bcast(p, 4 * set.len() as u64);
        }
        level += 1;
        frontier.clear();
        for set in &visits {
            for &j in set {
                if dist[j as usize] == INF {
                    dist[j as usize] = level;
                    frontier.push(j);
                }
            }
        }
    }
    (dist, ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::metrics::ByteCategory;
    use crate::runtime::run_app;

    fn bsp_params(nodes: usize) -> BspParams {
        BspParams { nodes, hop: 800, bits_per_cycle: 100, speedup: SpeedupTable::UNIT, groups: 1 }
    }

    #[test]
    fn path_graph_two_nodes() {
        let app = SsspApp::new(Graph::from_edges(2, [(0, 1)]), 0);
        let out = run_app(&app, SimConfig { nodes: 2, ..Default::default() }).unwrap();
        assert_eq!(out.memories[0].rows[1], 1);
        assert_eq!(app.distances(&out.memories), [0, 1]);
    }

    #[test]
    fn isolated_vertex_spawns_nothing() {
        let g = Graph::from_edges(4, [(1, 2)]);
        let app = SsspApp::new(g, 0);
        let out = run_app(&app, SimConfig { nodes: 1, ..Default::default() }).unwrap();
        assert_eq!(out.ledger.tokens.spawned, 0);
        assert_eq!(app.distances(&out.memories), [0, INF, INF, INF]);
    }

    #[test]
    fn random_graph_matches_dijkstra() {
        let g = Graph::generate(&GraphSpec { size: 16, density: 0.2, band: None, seed: 3 });
        let want = dijkstra_oracle(&g, 0);
        let app = SsspApp::new(g.clone(), 0);
        let out = run_app(&app, SimConfig { nodes: 4, strict_checks: true, ..Default::default() }).unwrap();
        assert_eq!(app.distances(&out.memories), want);
        assert_eq!(sssp_bsp(&g, 0, &bsp_params(4)).0, want);
    }

    #[test]
    fn bsp_bytes_hand_count() {
        // 0 - 1, 0 - 2, 2 - 3 on two nodes owning {0,1} and {2,3}
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (2, 3)]);
        let (dist, l) = sssp_bsp(&g, 0, &bsp_params(2));
        assert_eq!(dist, [0, 1, 1, 2]);
        // level 0: node 0 finds {1, 2}; level 1: node 1 finds {3} (1 and 2
        // are visited); level 2: nothing
        let allgather = 3 * 8;
        let bcast = 8 + 4;
        assert_eq!(l.bytes[ByteCategory::NonessentialData.index()], allgather + bcast);
        assert_eq!(sssp_bsp(&g, 0, &bsp_params(1)).1.total_bytes(), 0);
    }

    #[test]
    fn banded_generator_respects_band() {
        let g = Graph::generate(&GraphSpec { size: 64, density: 1.0, band: Some(3), seed: 1 });
        for (v, ns) in g.adj.iter().enumerate() {
            assert_eq!(ns.len(), 6);
            for &j in ns {
                let d = (v as i64 - j as i64).rem_euclid(64).min((j as i64 - v as i64).rem_euclid(64));
                assert!(d <= 3);
            }
        }
    }
}
