use alloc::vec::Vec;

use crate::range::AddressRange;
use crate::registry::{RegistryError, TaskRegistry};
use crate::token::{TaskToken, NIBBLE_MAX};
use crate::NodeId;

pub type KernelFn<M, W> = fn(&mut KernelCtx<'_, M, W>) -> Result<(), KernelFault>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum KernelFault {
    #[error("node {node} touched address {addr} outside its local range {local:?}")]
    Locality { node: NodeId, addr: u32, local: AddressRange },
    #[error("address {addr} was not staged; remote range is {staged:?}")]
    NotStaged { addr: u32, staged: AddressRange },
    #[error("spawn of unregistered task id {0}")]
    UnregisteredTask(u8),
    #[error("spawn with inverted range [{0}, {1})")]
    BadRange(u32, u32),
    #[error("{0}")]
    App(&'static str),
}

/// What a kernel sees while it runs: the token, the node's memory, the
/// staged copy of the token's remote range, and a spawn port.
pub struct KernelCtx<'a, M, W> {
    node: NodeId,
    local: AddressRange,
    token: TaskToken,
    pub mem: &'a mut M,
    staged: &'a [W],
    registered: [bool; 16],
    ops: u64,
    spawns: Vec<TaskToken>,
    duplicates: u64,
}

/// Counters and spawns left behind by a finished kernel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelReport {
    pub ops: u64,
    pub spawns: Vec<TaskToken>,
    pub duplicates: u64,
}

impl<'a, M, W: Copy> KernelCtx<'a, M, W> {
    /// `staged[i]` holds the word at `token.remote_range.start + i`.
    pub fn new(
        node: NodeId,
        local: AddressRange,
        token: TaskToken,
        mem: &'a mut M,
        staged: &'a [W],
        registered: [bool; 16],
    ) -> Self {
        KernelCtx { node, local, token, mem, staged, registered, ops: 0, spawns: Vec::new(), duplicates: 0 }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn local_range(&self) -> AddressRange {
        self.local
    }

    pub fn token(&self) -> &TaskToken {
        &self.token
    }

    pub fn range(&self) -> AddressRange {
        self.token.task_range
    }

    pub fn param(&self) -> u32 {
        self.token.param
    }

    /// Count `n` dynamic operations; one operation is one serial cycle.
    pub fn ops(&mut self, n: u64) {
        self.ops += n;
    }

    pub fn op(&mut self) {
        self.ops += 1;
    }

    pub fn note_duplicate(&mut self) {
        self.duplicates += 1;
    }

    /// Offset of `addr` into this node's partition.
    pub fn local_offset(&self, addr: u32) -> Result<usize, KernelFault> {
        if self.local.contains(addr) {
            Ok((addr - self.local.start) as usize)
        } else {
            Err(KernelFault::Locality { node: self.node, addr, local: self.local })
        }
    }

    pub fn remote(&self, addr: u32) -> Result<W, KernelFault> {
        let r = self.token.remote_range;
        if !r.contains(addr) {
            return Err(KernelFault::NotStaged { addr, staged: r });
        }
        Ok(self.staged[(addr - r.start) as usize])
    }

    pub fn staged(&self) -> &'a [W] {
        self.staged
    }

    pub fn task_spawn(
        &mut self,
        task_id: u8,
        start: u32,
        end: u32,
        param: u32,
        remote_start: u32,
        remote_end: u32,
    ) -> Result<(), KernelFault> {
        let task = AddressRange::try_new(start, end).map_err(|_| KernelFault::BadRange(start, end))?;
        let remote = AddressRange::try_new(remote_start, remote_end)
            .map_err(|_| KernelFault::BadRange(remote_start, remote_end))?;
        self.spawn(TaskToken::new(task_id, task, param).with_remote(remote))
    }

    pub fn spawn(&mut self, t: TaskToken) -> Result<(), KernelFault> {
        if t.task_id > NIBBLE_MAX || !self.registered[t.task_id as usize] {
            return Err(KernelFault::UnregisteredTask(t.task_id));
        }
        if t.task_range.is_empty() {
            return Err(KernelFault::BadRange(t.task_range.start, t.task_range.end));
        }
        self.spawns.push(t.with_from(self.node));
        Ok(())
    }

    pub fn finish(self) -> KernelReport {
        KernelReport { ops: self.ops, spawns: self.spawns, duplicates: self.duplicates }
    }
}

/// An application: its global address space, per-node memory, kernels and
/// root task.
pub trait Application {
    type Mem;
    type Word: Copy;

    fn name(&self) -> &'static str;

    /// Size of the global address space; partitions cover `[0, size)`.
    fn address_space(&self) -> u32;

    /// Bytes moved per remote word.
    fn word_bytes(&self) -> u64 {
        4
    }

    fn partitions(&self, nodes: usize) -> Vec<AddressRange> {
        balanced_partitions(self.address_space(), nodes)
    }

    fn init_memory(&self, node: NodeId, local: AddressRange) -> Self::Mem;

    fn register(&self, reg: &mut TaskRegistry<Self::Mem, Self::Word>) -> Result<(), RegistryError>;

    fn root_token(&self) -> TaskToken;

    /// Value of `addr` as held by the node owning `local`.
    fn read_word(&self, mem: &Self::Mem, local: AddressRange, addr: u32) -> Self::Word;
}

/// Contiguous blocks whose sizes differ by at most one.
pub fn balanced_partitions(size: u32, nodes: usize) -> Vec<AddressRange> {
    let n = nodes as u64;
    (0..n).map(|k| AddressRange::new((k * size as u64 / n) as u32, ((k + 1) * size as u64 / n) as u32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_cover_without_gaps() {
        let p = balanced_partitions(10, 4);
        assert_eq!(p.first().unwrap().start, 0);
        assert_eq!(p.last().unwrap().end, 10);
        assert!(p.windows(2).all(|w| w[0].end == w[1].start));
        assert!(p.iter().all(|r| (2..=3).contains(&r.len())));
    }

    #[test]
    fn ctx_enforces_locality_staging_and_registration() {
        let mut mem = [0u32; 4];
        let staged = [7u32, 8];
        let mut reg = [false; 16];
        reg[1] = true;
        let t = TaskToken::new(1, AddressRange::new(10, 11), 0).with_remote(AddressRange::new(40, 42));
        let mut ctx = KernelCtx::new(2, AddressRange::new(10, 14), t, &mut mem, &staged, reg);
        assert_eq!(ctx.local_offset(13), Ok(3));
        assert!(matches!(ctx.local_offset(14), Err(KernelFault::Locality { addr: 14, .. })));
        assert_eq!(ctx.remote(41), Ok(8));
        assert!(matches!(ctx.remote(42), Err(KernelFault::NotStaged { .. })));
        assert_eq!(ctx.task_spawn(3, 0, 1, 0, 0, 0), Err(KernelFault::UnregisteredTask(3)));
        ctx.task_spawn(1, 5, 6, 9, 0, 0).unwrap();
        ctx.ops(5);
        let rep = ctx.finish();
        assert_eq!(rep.ops, 5);
        assert_eq!(rep.spawns[0].from_node, 2);
        assert_eq!(rep.spawns[0].param, 9);
    }
}
