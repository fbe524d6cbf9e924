//! Synthetic spawn trees. Every node of the tree is one task with a fixed
//! range, op count and remote range; the fragment holding the range start
//! spawns the children. Used to probe termination, calibration and queueing.

use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cgra::SpeedupTable;
use crate::range::AddressRange;
use crate::registry::{RegistryError, TaskRegistry};
use crate::runtime::{Application, KernelCtx, KernelFault};
use crate::token::TaskToken;
use crate::NodeId;

pub const TREE_ROOT: u8 = 1;
pub const TREE_IDS: [u8; 3] = [1, 2, 3];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub task_id: u8,
    pub range: AddressRange,
    pub ops: u64,
    pub remote: AddressRange,
    pub children: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeSpec {
    pub size: u32,
    pub tasks: u32,
    pub max_len: u32,
    pub max_ops: u64,
    pub remote_prob: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct TreeApp {
    pub size: u32,
    pub nodes: Rc<Vec<TreeNode>>,
    pub speedup: SpeedupTable,
}

pub struct TreeMem {
    nodes: Rc<Vec<TreeNode>>,
    /// `(tree node, fragment)` in launch order.
    pub log: Vec<(u32, AddressRange)>,
    pub words: Vec<u32>,
}

impl TreeApp {
    /// Node 0 is the root and must use `TREE_ROOT`.
    pub fn new(size: u32, nodes: Vec<TreeNode>) -> Self {
        assert!(!nodes.is_empty() && nodes[0].task_id == TREE_ROOT);
        TreeApp { size, nodes: Rc::new(nodes), speedup: SpeedupTable::UNIT }
    }

    pub fn random(spec: &TreeSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let draw_range = |rng: &mut ChaCha8Rng| {
            let s = rng.random_range(0..spec.size);
            let len = rng.random_range(1..=spec.max_len.min(spec.size - s));
            AddressRange::new(s, s + len)
        };
        let mut nodes: Vec<TreeNode> = Vec::new();
        for i in 0..spec.tasks.max(1) {
            let range = draw_range(&mut rng);
            let remote = if rng.random_bool(spec.remote_prob) { draw_range(&mut rng) } else { AddressRange::EMPTY };
            let task_id = if i == 0 { TREE_ROOT } else { TREE_IDS[rng.random_range(0..TREE_IDS.len())] };
            let ops = rng.random_range(1..=spec.max_ops);
            if i > 0 {
                let parent = rng.random_range(0..i) as usize;
                nodes[parent].children.push(i);
            }
            nodes.push(TreeNode { task_id, range, ops, remote, children: Vec::new() });
        }
        TreeApp::new(spec.size, nodes)
    }

    pub fn total_ops(&self) -> u64 {
        self.nodes.iter().map(|n| n.ops).sum()
    }

    /// Checks that every tree node ran exactly once over exactly its range.
    pub fn check_coverage(&self, memories: &[TreeMem]) -> Result<(), u32> {
        let mut frags: Vec<Vec<AddressRange>> = vec![Vec::new(); self.nodes.len()];
        for m in memories {
            for &(i, r) in &m.log {
                frags[i as usize].push(r);
            }
        }
        for (i, (node, f)) in self.nodes.iter().zip(frags.iter_mut()).enumerate() {
            f.sort();
            let tiled = !f.is_empty()
                && f[0].start == node.range.start
                && f.last().map(|r| r.end) == Some(node.range.end)
                && f.windows(2).all(|w| w[0].end == w[1].start);
            if !tiled {
                return Err(i as u32);
            }
        }
        Ok(())
    }

    /// Tree node indices in the order they launched on `node`.
    pub fn launch_order(memories: &[TreeMem], node: NodeId) -> Vec<u32> {
        memories[node].log.iter().map(|&(i, _)| i).collect()
    }
}

fn tree_kernel(ctx: &mut KernelCtx<'_, TreeMem, u32>) -> Result<(), KernelFault> {
    let idx = ctx.param();
    let nodes = Rc::clone(&ctx.mem.nodes);
    let node = nodes.get(idx as usize).ok_or(KernelFault::App("unknown tree node"))?;
    let r = ctx.range();
    for a in r.iter() {
        let off = ctx.local_offset(a)?;
        ctx.mem.words[off] += 1;
    }
    ctx.mem.log.push((idx, r));
    if r.start != node.range.start {
        return Ok(());
    }
    ctx.ops(node.ops);
    for &c in &node.children {
        let ch = &nodes[c as usize];
        ctx.spawn(TaskToken::new(ch.task_id, ch.range, c).with_remote(ch.remote))?;
    }
    Ok(())
}

impl Application for TreeApp {
    type Mem = TreeMem;
    type Word = u32;

    fn name(&self) -> &'static str {
        "tree"
    }

    fn address_space(&self) -> u32 {
        self.size
    }

    fn init_memory(&self, _node: NodeId, local: AddressRange) -> TreeMem {
        TreeMem { nodes: Rc::clone(&self.nodes), log: Vec::new(), words: vec![0; local.len() as usize] }
    }

    fn register(&self, reg: &mut TaskRegistry<TreeMem, u32>) -> Result<(), RegistryError> {
        for id in TREE_IDS {
            reg.task_register(id, "tree", tree_kernel, id == TREE_ROOT, self.speedup)?;
        }
        Ok(())
    }

    fn root_token(&self) -> TaskToken {
        let root = &self.nodes[0];
        TaskToken::new(TREE_ROOT, root.range, 0).with_remote(root.remote)
    }

    fn read_word(&self, mem: &TreeMem, local: AddressRange, addr: u32) -> u32 {
        mem.words[(addr - local.start) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::runtime::run_app;

    #[test]
    fn random_trees_run_every_node_once() {
        for seed in 0..40 {
            let spec = TreeSpec { size: 32, tasks: 20, max_len: 6, max_ops: 300, remote_prob: 0.3, seed };
            let app = TreeApp::random(&spec);
            for nodes in [1, 2, 4] {
                let cfg = SimConfig { nodes, seed, link_jitter: 50, strict_checks: true, ..Default::default() };
                let out = run_app(&app, cfg).unwrap();
                assert_eq!(app.check_coverage(&out.memories), Ok(()), "seed {seed} nodes {nodes}");
                assert_eq!(out.ledger.ops, app.total_ops());
                assert!(out.ledger.tokens_balanced());
            }
        }
    }
}
