//! Per-node CGRA model: tile groups, data-range driven allocation, the
//! configuration cache, the spawned-token queues of the controller, and the
//! cycle cost of running a task.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use arrayvec::ArrayVec;

use crate::range::AddressRange;
use crate::token::TaskToken;
use crate::{Cycle, NodeId};

/// Tile groups in a full array (four 2x8 slices of an 8x8 CGRA).
pub const MAX_GROUPS: usize = 4;

/// Acceleration over in-order single-issue execution for 1, 2 and 4
/// groups, stored in thousandths so cycle arithmetic stays exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpeedupTable {
    milli: [u32; 3],
}

impl SpeedupTable {
    pub const UNIT: SpeedupTable = SpeedupTable { milli: [1000, 1000, 1000] };
    /// Breadth-first search on 2x8, 4x8 and 8x8 tiles.
    pub const BFS: SpeedupTable = SpeedupTable { milli: [8200, 16400, 21800] };
    /// Mean over the evaluated applications.
    pub const AVERAGE: SpeedupTable = SpeedupTable { milli: [1300, 2400, 3500] };

    /// Factors below 1.0 are rejected; the table must not decrease with more groups.
    pub fn new(one: f64, two: f64, four: f64) -> Option<Self> {
        let m = |x: f64| -> Option<u32> {
            if !(1.0..4_000_000.0).contains(&x) {
                return None;
            }
            Some((x * 1000.0 + 0.5) as u32)
        };
        let milli = [m(one)?, m(two)?, m(four)?];
        if milli[0] > milli[1] || milli[1] > milli[2] {
            return None;
        }
        Some(SpeedupTable { milli })
    }

    pub fn factor(&self, groups: usize) -> f64 {
        self.milli_for(groups) as f64 / 1000.0
    }

    pub fn milli_for(&self, groups: usize) -> u32 {
        match groups {
            0 | 1 => self.milli[0],
            2 | 3 => self.milli[1],
            _ => self.milli[2],
        }
    }

    pub fn as_triple(&self) -> [f64; 3] {
        [self.factor(1), self.factor(2), self.factor(4)]
    }

    /// `ceil(serial / speedup)`.
    pub fn accelerated(&self, serial: u64, groups: usize) -> u64 {
        let m = self.milli_for(groups) as u128;
        ((serial as u128 * 1000).div_ceil(m)) as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CostError {
    #[error("no cost parameters for task id {0}")]
    UnknownTask(u8),
    #[error("group count {0} is not one of 1, 2, 4")]
    BadGroupCount(usize),
}

/// Fixed cycle costs shared by every kernel plus the per-task speedups.
#[derive(Clone, Debug, PartialEq)]
pub struct CostModel {
    pub speedups: BTreeMap<u8, SpeedupTable>,
    pub reconfig_cycles: Cycle,
    pub spawn_short_cycles: Cycle,
    pub spawn_long_cycles: Cycle,
    pub clock_mhz: u32,
    /// Charge reconfiguration on every launch instead of only on a task switch.
    pub reconfig_every_launch: bool,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            speedups: BTreeMap::new(),
            reconfig_cycles: 8,
            spawn_short_cycles: 1,
            spawn_long_cycles: 2,
            clock_mhz: 800,
            reconfig_every_launch: false,
        }
    }
}

impl CostModel {
    /// Spawning a token with only id and range takes one cycle; carrying a
    /// parameter or remote range takes two.
    pub fn spawn_cycles(&self, t: &TaskToken) -> Cycle {
        if t.param == 0 && t.remote_range.is_empty() {
            self.spawn_short_cycles
        } else {
            self.spawn_long_cycles
        }
    }

    pub fn execution_cycles(
        &self,
        task_id: u8,
        serial_cycles: u64,
        group_count: usize,
        needs_reconfig: bool,
        spawn_cycles: Cycle,
    ) -> Result<Cycle, CostError> {
        if !matches!(group_count, 1 | 2 | 4) {
            return Err(CostError::BadGroupCount(group_count));
        }
        let speedup = self.speedups.get(&task_id).ok_or(CostError::UnknownTask(task_id))?;
        let reconfig = if needs_reconfig || self.reconfig_every_launch { self.reconfig_cycles } else { 0 };
        Ok(speedup.accelerated(serial_cycles, group_count) + reconfig + spawn_cycles)
    }

    pub fn cycles_to_micros(&self, cycles: Cycle) -> f64 {
        cycles as f64 / self.clock_mhz as f64
    }
}

/// Number of groups the controller asks for, from the share of the local
/// range a task covers: under a quarter gets one, over a half gets four,
/// everything between (boundaries included) gets two.
pub fn groups_requested(task_range: AddressRange, local: AddressRange) -> usize {
    let task = task_range.len() as u64;
    let local = local.len() as u64;
    if 4 * task < local {
        1
    } else if 2 * task > local {
        4
    } else {
        2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct GroupSlot {
    /// Execution occupying this group and the cycle it finishes.
    pub occupant: Option<(u64, Cycle)>,
    /// Task id whose configuration is currently loaded.
    pub config: Option<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    pub groups: ArrayVec<u8, MAX_GROUPS>,
}

impl Allocation {
    pub fn count(&self) -> usize {
        self.groups.len()
    }

    /// Group whose controller queue receives this task's spawns.
    pub fn lead(&self) -> usize {
        self.groups[0] as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Spawned {
    pub seq: u64,
    pub token: TaskToken,
}

/// Controller queues (one per group) plus the overflow memory that takes
/// whatever does not fit.
#[derive(Clone, Debug)]
pub struct SpawnStore {
    pub queues: Vec<VecDeque<Spawned>>,
    pub queue_capacity: usize,
    pub overflow: VecDeque<Spawned>,
}

impl SpawnStore {
    pub fn new(queues: usize, queue_capacity: usize) -> Self {
        SpawnStore { queues: (0..queues).map(|_| VecDeque::new()).collect(), queue_capacity, overflow: VecDeque::new() }
    }

    pub fn len(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum::<usize>() + self.overflow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_queues_full(&self) -> bool {
        self.queues.iter().all(|q| q.len() >= self.queue_capacity)
    }

    /// After entries leave the queues, refill free slots from the overflow
    /// memory, oldest first.
    pub fn promote_overflow(&mut self) {
        while !self.overflow.is_empty() {
            let Some(q) = self.queues.iter_mut().find(|q| q.len() < self.queue_capacity) else {
                break;
            };
            let s = self.overflow.pop_front().expect("checked non-empty");
            q.push_back(s);
        }
    }

    /// All pending entries, oldest first.
    pub fn iter_by_age(&self) -> impl Iterator<Item = &Spawned> {
        let mut all: Vec<&Spawned> = self.queues.iter().flatten().chain(self.overflow.iter()).collect();
        all.sort_by_key(|s| s.seq);
        all.into_iter()
    }
}

#[derive(Clone, Debug)]
pub struct CgraState {
    pub node: NodeId,
    pub groups: Vec<GroupSlot>,
    pub spawns: SpawnStore,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AllocError {
    /// No group free.
    Busy,
}

impl CgraState {
    pub fn new(node: NodeId, group_count: usize, queue_capacity: usize) -> Self {
        assert!((1..=MAX_GROUPS).contains(&group_count));
        CgraState {
            node,
            groups: alloc::vec![GroupSlot::default(); group_count],
            spawns: SpawnStore::new(group_count, queue_capacity),
        }
    }

    pub fn free_groups(&self) -> usize {
        self.groups.iter().filter(|g| g.occupant.is_none()).count()
    }

    pub fn occupied_groups(&self) -> usize {
        self.groups.len() - self.free_groups()
    }

    /// Largest grantable count on the ladder `requested, requested/2, ..., 1`.
    pub fn grantable(&self, requested: usize) -> Option<usize> {
        let free = self.free_groups();
        let mut want = requested.min(self.groups.len()).max(1);
        if want == 3 {
            want = 2;
        }
        while want > 0 {
            if free >= want {
                return Some(want);
            }
            want /= 2;
        }
        None
    }

    pub fn try_allocate(&mut self, requested: usize) -> Result<Allocation, AllocError> {
        let count = self.grantable(requested).ok_or(AllocError::Busy)?;
        let mut groups = ArrayVec::new();
        for (i, g) in self.groups.iter_mut().enumerate() {
            if groups.len() == count {
                break;
            }
            if g.occupant.is_none() {
                // provisional marker; the runtime stamps the real execution id
                g.occupant = Some((u64::MAX, Cycle::MAX));
                groups.push(i as u8);
            }
        }
        Ok(Allocation { groups })
    }

    pub fn occupy(&mut self, alloc: &Allocation, exec_id: u64, busy_until: Cycle) {
        for &g in &alloc.groups {
            self.groups[g as usize].occupant = Some((exec_id, busy_until));
        }
    }

    pub fn release(&mut self, alloc: &Allocation) {
        for &g in &alloc.groups {
            debug_assert!(self.groups[g as usize].occupant.is_some());
            self.groups[g as usize].occupant = None;
        }
    }

    /// Load `task_id` into the allocated groups; true if any of them held a
    /// different configuration.
    pub fn configure(&mut self, alloc: &Allocation, task_id: u8) -> bool {
        let mut switched = false;
        for &g in &alloc.groups {
            let slot = &mut self.groups[g as usize];
            if slot.config != Some(task_id) {
                switched = true;
                slot.config = Some(task_id);
            }
        }
        switched
    }

    /// Take a token spawned by a kernel running on `group`. The controller
    /// stamps the origin node.
    pub fn absorb_spawn(&mut self, group: usize, mut t: TaskToken, seq: u64) {
        t.from_node = self.node as u8;
        let s = Spawned { seq, token: t };
        let cap = self.spawns.queue_capacity;
        let q = &mut self.spawns.queues[group];
        if q.len() < cap {
            q.push_back(s);
        } else {
            self.spawns.overflow.push_back(s);
        }
    }

    /// Controller asks the runtime to stop fetching from the wait queue.
    pub fn launch_inhibited(&self) -> bool {
        !self.spawns.overflow.is_empty() || self.spawns.all_queues_full()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(s: u32, e: u32) -> AddressRange {
        AddressRange::new(s, e)
    }

    #[test]
    fn allocation_policy_branches() {
        let local = r(0, 100);
        assert_eq!(groups_requested(r(0, 20), local), 1);
        assert_eq!(groups_requested(r(0, 60), local), 4);
        assert_eq!(groups_requested(r(0, 30), local), 2);
        // boundaries fold into the middle band
        assert_eq!(groups_requested(r(0, 25), local), 2);
        assert_eq!(groups_requested(r(0, 50), local), 2);
        assert_eq!(groups_requested(r(0, 24), local), 1);
        assert_eq!(groups_requested(r(0, 51), local), 4);
    }

    #[test]
    fn allocation_degrades_down_the_ladder() {
        let mut c = CgraState::new(0, 4, 4);
        let all = c.try_allocate(4).unwrap();
        assert_eq!(all.count(), 4);
        c.release(&all);

        let two = c.try_allocate(2).unwrap();
        assert_eq!(c.free_groups(), 2);
        assert_eq!(c.try_allocate(4).unwrap().count(), 2);
        assert_eq!(c.try_allocate(1), Err(AllocError::Busy));
        c.release(&two);
        assert_eq!(c.try_allocate(4).unwrap().count(), 2);
    }

    #[test]
    fn execution_cycle_examples() {
        let mut m = CostModel::default();
        m.speedups.insert(1, SpeedupTable::BFS);
        assert_eq!(m.execution_cycles(1, 8200, 1, true, 0), Ok(1008));
        assert_eq!(m.execution_cycles(1, 8200, 1, false, 0), Ok(1000));
        m.speedups.insert(2, SpeedupTable::UNIT);
        assert_eq!(m.execution_cycles(2, 777, 4, true, 3), Ok(777 + 8 + 3));
        assert_eq!(m.execution_cycles(9, 1, 1, false, 0), Err(CostError::UnknownTask(9)));
        assert_eq!(m.execution_cycles(1, 1, 3, false, 0), Err(CostError::BadGroupCount(3)));
        m.reconfig_every_launch = true;
        assert_eq!(m.execution_cycles(1, 8200, 1, false, 0), Ok(1008));
    }

    #[test]
    fn reconfiguration_only_on_task_switch() {
        let mut c = CgraState::new(0, 4, 4);
        let a = c.try_allocate(1).unwrap();
        assert!(c.configure(&a, 1));
        c.release(&a);
        let a = c.try_allocate(1).unwrap();
        assert!(!c.configure(&a, 1));
        assert!(c.configure(&a, 2));
    }

    #[test]
    fn spawn_cost_depends_on_carried_fields() {
        let m = CostModel::default();
        let t = TaskToken::new(1, r(3, 4), 0);
        assert_eq!(m.spawn_cycles(&t), 1);
        assert_eq!(m.spawn_cycles(&TaskToken::new(1, r(3, 4), 5)), 2);
        assert_eq!(m.spawn_cycles(&t.with_remote(r(0, 2))), 2);
    }

    #[test]
    fn spawn_queues_spill_to_overflow() {
        let mut c = CgraState::new(5, 4, 4);
        for i in 0..3 {
            c.absorb_spawn(0, TaskToken::new(1, r(i, i + 1), 0), i as u64);
        }
        assert_eq!(c.spawns.queues[0].len(), 3);
        assert!(!c.launch_inhibited());
        c.absorb_spawn(0, TaskToken::new(1, r(3, 4), 0), 3);
        assert_eq!(c.spawns.queues[0].len(), 4);
        c.absorb_spawn(0, TaskToken::new(1, r(4, 5), 0), 4);
        assert_eq!(c.spawns.overflow.len(), 1);
        assert!(c.launch_inhibited());
        assert!(c.spawns.iter_by_age().all(|s| s.token.from_node == 5));
    }

    #[test]
    fn milli_speedup_ratio() {
        let s = SpeedupTable::BFS;
        assert_eq!(s.factor(1), 8.2);
        assert_eq!(s.factor(4), 21.8);
        assert!(SpeedupTable::new(2.0, 1.0, 3.0).is_none());
        assert!(SpeedupTable::new(0.5, 1.0, 3.0).is_none());
    }

    proptest! {
        #[test]
        fn group_conservation(ops in proptest::collection::vec((0usize..3, any::<bool>()), 1..200)) {
            let mut c = CgraState::new(0, 4, 4);
            let mut live: alloc::vec::Vec<Allocation> = alloc::vec::Vec::new();
            for (req, release) in ops {
                if release && !live.is_empty() {
                    let a = live.remove(0);
                    c.release(&a);
                } else {
                    let requested = [1, 2, 4][req];
                    match c.try_allocate(requested) {
                        Ok(a) => {
                            prop_assert!(a.count() <= requested);
                            prop_assert!(matches!(a.count(), 1 | 2 | 4));
                            live.push(a);
                        }
                        Err(AllocError::Busy) => prop_assert_eq!(c.free_groups(), 0),
                    }
                }
                let held: usize = live.iter().map(Allocation::count).sum();
                prop_assert_eq!(c.occupied_groups(), held);
                prop_assert_eq!(c.occupied_groups() + c.free_groups(), 4);
            }
        }

        #[test]
        fn cost_monotone_in_groups(serial in 1u64..1_000_000, a in 1.0f64..10.0, b in 0.0f64..10.0, c in 0.0f64..10.0) {
            let table = SpeedupTable::new(a, a + b, a + b + c).unwrap();
            let mut m = CostModel::default();
            m.speedups.insert(1, table);
            let c1 = m.execution_cycles(1, serial, 1, true, 0).unwrap();
            let c2 = m.execution_cycles(1, serial, 2, true, 0).unwrap();
            let c4 = m.execution_cycles(1, serial, 4, true, 0).unwrap();
            prop_assert!(c1 >= c2 && c2 >= c4);
        }
    }
}
