//! The per-node runtime loop and the event-driven simulator that runs one
//! loop per node around the ring.
//!
//! Each loop iteration, in order: move the send-queue head onto the ring,
//! take one token from the receive queue (termination check, then filter),
//! try to launch the wait-queue head (remote acquisition first if it has
//! one), and return one coalesced spawned token to the receive queue.

mod ctx;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cgra::{groups_requested, Allocation, CgraState, CostError, CostModel, MAX_GROUPS};
use crate::coalescer::CoalesceUnit;
use crate::config::{ConfigError, SimConfig};
use crate::dispatcher::{DispatcherState, FilterError, TerminationStep};
use crate::metrics::{ByteCategory, MetricsLedger};
use crate::network::{DataNet, EventQueue, RingLink};
use crate::range::{AddressRange, RangeError, RangeRelation};
use crate::registry::{RegistryError, TaskRegistry};
use crate::token::{decode_token, encode_token, CodecError, TaskToken, TOKEN_BYTES};
use crate::{Cycle, NodeId};

pub use ctx::{balanced_partitions, Application, KernelCtx, KernelFault, KernelFn, KernelReport};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Range(#[from] RangeError),
    #[error("partitions must be non-empty and tile [0, {size}) in order")]
    Partitions { size: u32 },
    #[error("root token {0:?} does not match the registered root task")]
    Root(TaskToken),
    #[error("kernel for task {task_id} faulted on node {node}: {fault}")]
    Kernel { node: NodeId, task_id: u8, fault: KernelFault },
    #[error("node {node} asked for address {addr}, which no node owns")]
    Unowned { node: NodeId, addr: u32 },
    #[error("node {node} halted at cycle {at} with {live} units of work outstanding")]
    UnsafeTermination { node: NodeId, at: Cycle, live: u64 },
    #[error("node {node} received {token:?} after halting")]
    Stray { node: NodeId, token: TaskToken },
    #[error(
        "no events left at cycle {at}, but only {halted} of {nodes} nodes halted ({live} units of work outstanding)"
    )]
    Deadlock { at: Cycle, halted: usize, nodes: usize, live: u64 },
    #[error("event budget of {0} exhausted")]
    EventLimit(u64),
    #[error("live-work counter {counted} disagrees with a full scan ({scanned}) at cycle {at}")]
    Bookkeeping { counted: u64, scanned: u64, at: Cycle },
}

/// Final state of a completed run.
pub struct RunOutcome<M> {
    pub ledger: MetricsLedger,
    pub memories: Vec<M>,
    pub partitions: Vec<AddressRange>,
    /// Cycle at which the last executable work disappeared.
    pub quiescent_at: Cycle,
    pub halt_times: Vec<Cycle>,
    /// Cycle node 0 put the TERMINATE sentinel on the ring.
    pub terminate_injected_at: Option<Cycle>,
    /// Executions per address; filled only with strict checks on.
    pub exec_counts: Vec<u32>,
}

#[derive(Clone, Copy, Debug)]
enum Event {
    Step { node: NodeId, stamp: u64 },
    Deliver { link: usize },
    Complete { node: NodeId, exec: u64 },
}

struct Running {
    alloc: Allocation,
    spawns: Vec<TaskToken>,
}

struct Node<M> {
    local: AddressRange,
    disp: DispatcherState,
    cgra: CgraState,
    coal: CoalesceUnit,
    mem: M,
    running: BTreeMap<u64, Running>,
    halted_at: Option<Cycle>,
    step_at: Option<Cycle>,
    stamp: u64,
    quiet_since: Option<Cycle>,
    occ_since: Cycle,
    occupancy: [Cycle; MAX_GROUPS + 1],
}

impl<M> Node<M> {
    fn idle(&self) -> bool {
        self.running.is_empty() && self.cgra.spawns.is_empty()
    }

    fn note_occupancy(&mut self, now: Cycle) {
        self.occupancy[self.cgra.occupied_groups()] += now - self.occ_since;
        self.occ_since = now;
    }
}

pub struct Simulation<'a, A: Application> {
    app: &'a A,
    cfg: SimConfig,
    cost: CostModel,
    registry: TaskRegistry<A::Mem, A::Word>,
    registered: [bool; 16],
    nodes: Vec<Node<A::Mem>>,
    links: Vec<RingLink>,
    net: DataNet,
    events: EventQueue<Event>,
    rng: ChaCha8Rng,
    ledger: MetricsLedger,
    now: Cycle,
    /// Executable tokens anywhere plus tasks executing.
    live: u64,
    quiescent_at: Cycle,
    spawn_seq: u64,
    exec_seq: u64,
    terminate_injected: Option<Cycle>,
    halted: usize,
    exec_counts: Vec<u32>,
}

impl<'a, A: Application> Simulation<'a, A> {
    pub fn new(app: &'a A, cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let n = cfg.nodes;
        let size = app.address_space();
        let partitions = app.partitions(n);
        let tiles = partitions.len() == n
            && partitions.first().map(|p| p.start) == Some(0)
            && partitions.last().map(|p| p.end) == Some(size)
            && partitions.windows(2).all(|w| w[0].end == w[1].start)
            && partitions.iter().all(|p| !p.is_empty());
        if !tiles {
            return Err(SimError::Partitions { size });
        }

        let mut registry = TaskRegistry::new();
        app.register(&mut registry)?;
        let root_id = registry.root().ok_or(RegistryError::NoRoot)?;
        let mut registered = [false; 16];
        let mut cost = cfg.cost.clone();
        for (id, d) in registry.iter() {
            registered[id as usize] = true;
            cost.speedups.entry(id).or_insert(d.speedup);
        }

        let nodes = partitions
            .iter()
            .enumerate()
            .map(|(id, &local)| Node {
                local,
                disp: DispatcherState::new(local, cfg.recv_capacity, cfg.wait_capacity, cfg.send_capacity),
                cgra: CgraState::new(id, cfg.groups, cfg.spawn_queue_capacity),
                coal: CoalesceUnit::new(cfg.coalesce_window, cfg.coalesce),
                mem: app.init_memory(id, local),
                running: BTreeMap::new(),
                halted_at: None,
                step_at: None,
                stamp: 0,
                quiet_since: None,
                occ_since: 0,
                occupancy: [0; MAX_GROUPS + 1],
            })
            .collect();
        let links = (0..n).map(|_| RingLink::new(cfg.hop_cycles, cfg.slot_cycles)).collect();
        let net = DataNet {
            partitions,
            hop: cfg.hop_cycles,
            bits_per_cycle: cfg.data_bits_per_cycle,
            word_bytes: app.word_bytes(),
        };

        let mut sim = Simulation {
            app,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            exec_counts: if cfg.strict_checks { vec![0; size as usize] } else { Vec::new() },
            cfg,
            cost,
            registry,
            registered,
            nodes,
            links,
            net,
            events: EventQueue::new(),
            ledger: MetricsLedger::new(n),
            now: 0,
            live: 0,
            quiescent_at: 0,
            spawn_seq: 0,
            exec_seq: 0,
            terminate_injected: None,
            halted: 0,
        };

        let root = app.root_token();
        let owner = match sim.net.owner(root.task_range.start) {
            Some(o) if root.task_id == root_id && !root.task_range.is_empty() => o,
            _ => return Err(SimError::Root(root)),
        };
        let root = root.with_from(owner);
        sim.nodes[owner].disp.recv_queue.try_push(root).map_err(SimError::Root)?;
        sim.ledger.tokens.root = 1;
        sim.live = 1;
        for id in 0..n {
            sim.wake(id, 0);
        }
        Ok(sim)
    }

    pub fn run(mut self) -> Result<RunOutcome<A::Mem>, SimError> {
        while let Some((t, ev)) = self.events.pop() {
            debug_assert!(t >= self.now);
            self.now = t;
            self.ledger.events += 1;
            if self.ledger.events > self.cfg.max_events {
                return Err(SimError::EventLimit(self.cfg.max_events));
            }
            match ev {
                Event::Step { node, stamp } => {
                    if self.nodes[node].stamp == stamp {
                        self.nodes[node].step_at = None;
                        self.step(node)?;
                    }
                }
                Event::Deliver { link } => self.deliver(link)?,
                Event::Complete { node, exec } => self.complete(node, exec),
            }
        }
        if self.halted != self.nodes.len() {
            return Err(SimError::Deadlock {
                at: self.now,
                halted: self.halted,
                nodes: self.nodes.len(),
                live: self.live,
            });
        }
        Ok(self.finish())
    }

    fn finish(mut self) -> RunOutcome<A::Mem> {
        let halt_times: Vec<Cycle> = self.nodes.iter().map(|n| n.halted_at.unwrap_or(self.now)).collect();
        let total = halt_times.iter().copied().max().unwrap_or(0);
        self.ledger.total_cycles = total;
        for (i, node) in self.nodes.iter_mut().enumerate() {
            // groups are all free by the time a node halts
            node.occupancy[node.cgra.occupied_groups()] += total.saturating_sub(node.occ_since);
            let busy: Cycle = node.occupancy[1..].iter().sum();
            self.ledger.busy_cycles[i] = busy;
            self.ledger.idle_cycles[i] = total - busy;
            for (k, c) in node.occupancy.iter().enumerate() {
                self.ledger.group_occupancy[k] += c;
            }
        }
        RunOutcome {
            ledger: self.ledger,
            partitions: self.net.partitions,
            memories: self.nodes.into_iter().map(|n| n.mem).collect(),
            quiescent_at: self.quiescent_at,
            halt_times,
            terminate_injected_at: self.terminate_injected,
            exec_counts: self.exec_counts,
        }
    }

    fn wake(&mut self, id: NodeId, at: Cycle) {
        let node = &mut self.nodes[id];
        if node.step_at.is_some_and(|s| s <= at) {
            return;
        }
        node.stamp += 1;
        node.step_at = Some(at);
        self.events.schedule(at, Event::Step { node: id, stamp: node.stamp });
    }

    fn incoming_link(&self, id: NodeId) -> usize {
        (id + self.nodes.len() - 1) % self.nodes.len()
    }

    /// A receive-queue slot just freed on `id`; restart a blocked link.
    fn recv_freed(&mut self, id: NodeId) {
        let link = self.incoming_link(id);
        if let Some(since) = self.links[link].blocked_since.take() {
            self.ledger.link_stall_cycles += self.now - since;
            self.events.schedule(self.now, Event::Deliver { link });
        }
    }

    fn deliver(&mut self, link: usize) -> Result<(), SimError> {
        let now = self.now;
        if self.links[link].blocked_since.is_some() {
            return Ok(());
        }
        let dest = (link + 1) % self.nodes.len();
        while let Some(bytes) = self.links[link].arrived(now) {
            let t = decode_token(bytes)?;
            let node = &mut self.nodes[dest];
            if node.halted_at.is_some() {
                if !t.is_terminate() {
                    return Err(SimError::Stray { node: dest, token: t });
                }
                self.ledger.tokens.terminate_retired += 1;
            } else if !t.is_terminate() && t.from_node as usize == dest && !t.task_range.overlaps(&node.local) {
                // went all the way round without finding an owner
                node.disp.terminate_armed = false;
                self.ledger.tokens.orphaned += 1;
                self.live -= 1;
                self.mark_quiescence();
            } else if node.disp.arrive(t).is_err() {
                self.links[link].blocked_since = Some(now);
                return Ok(());
            }
            self.links[link].pop_arrived(now);
            self.wake(dest, now);
        }
        Ok(())
    }

    fn mark_quiescence(&mut self) {
        if self.live == 0 {
            self.quiescent_at = self.now;
        }
    }

    fn step(&mut self, id: NodeId) -> Result<(), SimError> {
        let now = self.now;
        let mut progress = self.send_stage(id)?;
        if self.nodes[id].halted_at.is_some() {
            if !self.nodes[id].disp.send_queue.is_empty() {
                let at = self.links[id].free_at().max(now + self.cfg.iteration_cycles);
                self.wake(id, at);
            }
            return Ok(());
        }
        progress |= self.recv_stage(id)?;
        if self.nodes[id].halted_at.is_some() {
            self.wake(id, now + self.cfg.iteration_cycles);
            return Ok(());
        }
        let (launched, data_at) = self.launch_stage(id)?;
        progress |= launched;
        progress |= self.coalesce_stage(id);
        let quiet_at = if id == 0 { self.termination_injection() } else { None };
        progress |= quiet_at == Some(now);

        if progress {
            self.wake(id, now + self.cfg.iteration_cycles);
        } else {
            let node = &self.nodes[id];
            let link_at = (!node.disp.send_queue.is_empty()).then(|| self.links[id].free_at());
            let next = [link_at, data_at, quiet_at].into_iter().flatten().filter(|&t| t > now).min();
            if let Some(t) = next {
                self.wake(id, t);
            }
        }
        Ok(())
    }

    fn send_stage(&mut self, id: NodeId) -> Result<bool, SimError> {
        let now = self.now;
        if !self.links[id].can_send(now) {
            return Ok(false);
        }
        let Some(t) = self.nodes[id].disp.send_queue.pop() else {
            return Ok(false);
        };
        let bytes = encode_token(&t)?;
        let jitter = if self.cfg.link_jitter > 0 { self.rng.random_range(0..=self.cfg.link_jitter) } else { 0 };
        let arrival = self.links[id].send(now, bytes, jitter);
        self.events.schedule(arrival, Event::Deliver { link: id });
        self.ledger.tokens.hops += 1;
        self.ledger.charge(ByteCategory::TaskMovement, TOKEN_BYTES as u64);
        Ok(true)
    }

    fn recv_stage(&mut self, id: NodeId) -> Result<bool, SimError> {
        let node = &mut self.nodes[id];
        let Some(&t) = node.disp.recv_queue.peek() else {
            return Ok(false);
        };
        if t.is_terminate() {
            let others_waiting = node.disp.recv_queue.len() > 1;
            node.disp.recv_queue.pop();
            // anything still queued here arrived or was spawned after the
            // sentinel, so it must not be left behind it
            let idle = node.idle() && !others_waiting;
            return match node.disp.step_termination(t, idle) {
                TerminationStep::Forwarded => {
                    self.recv_freed(id);
                    Ok(true)
                }
                TerminationStep::Halted => {
                    self.recv_freed(id);
                    self.halt(id)?;
                    Ok(true)
                }
                // the sentinel only rotated behind other tokens
                TerminationStep::Held => Ok(others_waiting),
                TerminationStep::Stalled | TerminationStep::NotTerminate => Ok(false),
            };
        }
        match node.disp.filter(&t) {
            Ok(out) => {
                node.disp.recv_queue.pop();
                node.disp.terminate_armed = false;
                let tokens = &mut self.ledger.tokens;
                let children = (out.to_wait + out.to_send) as u64;
                tokens.split_extra += children - 1;
                self.live += children - 1;
                if matches!(out.relation, RangeRelation::Superset | RangeRelation::PartialOverlap) {
                    tokens.splits += 1;
                }
                tokens.forwarded += out.to_send as u64;
                self.recv_freed(id);
                Ok(true)
            }
            Err(FilterError::Stalled) => {
                self.ledger.filter_stalls += 1;
                Ok(false)
            }
            Err(FilterError::Range(e)) => Err(e.into()),
        }
    }

    /// Returns whether anything happened, and when the head's remote data
    /// lands if that is still in the future.
    fn launch_stage(&mut self, id: NodeId) -> Result<(bool, Option<Cycle>), SimError> {
        let now = self.now;
        let mut progress = false;
        loop {
            let node = &mut self.nodes[id];
            let Some(head) = node.disp.wait_queue.peek_mut() else {
                return Ok((progress, None));
            };
            if head.token.needs_remote() && head.data_ready_at.is_none() {
                let plan = self.net.plan(id, head.token.remote_range);
                let bytes: u64 = plan.iter().map(|t| t.bytes).sum();
                head.data_ready_at = Some(now + DataNet::completion(&plan));
                self.ledger.remote_acquisitions += 1;
                self.ledger.charge(ByteCategory::EssentialData, bytes);
                progress = true;
            }
            let ready_at = head.data_ready_at.unwrap_or(now);
            if ready_at > now {
                return Ok((progress, Some(ready_at)));
            }
            // while the receive queue is full the coalescer cannot drain, so
            // holding launches back would only deadlock the node
            if node.cgra.launch_inhibited() && !node.disp.recv_queue.is_full() {
                return Ok((progress, None));
            }
            let want = groups_requested(head.token.task_range, node.local);
            let Ok(alloc) = node.cgra.try_allocate(want) else {
                return Ok((progress, None));
            };
            let entry = node.disp.wait_queue.pop().expect("peeked");
            self.launch(id, entry.token, alloc)?;
            progress = true;
            if !self.cfg.greedy_launch {
                return Ok((progress, None));
            }
        }
    }

    fn launch(&mut self, id: NodeId, token: TaskToken, alloc: Allocation) -> Result<(), SimError> {
        let now = self.now;
        let staged = self.stage(id, token.remote_range)?;
        let kernel = self.registry.get(token.task_id)?.kernel;
        let node = &mut self.nodes[id];
        let switched = node.cgra.configure(&alloc, token.task_id);
        let mut ctx = KernelCtx::new(id, node.local, token, &mut node.mem, &staged, self.registered);
        kernel(&mut ctx).map_err(|fault| SimError::Kernel { node: id, task_id: token.task_id, fault })?;
        let report = ctx.finish();
        let spawn_cycles: Cycle = report.spawns.iter().map(|t| self.cost.spawn_cycles(t)).sum();
        let cycles = self.cost.execution_cycles(token.task_id, report.ops, alloc.count(), switched, spawn_cycles)?;

        let exec = self.exec_seq;
        self.exec_seq += 1;
        node.note_occupancy(now);
        node.cgra.occupy(&alloc, exec, now + cycles);
        node.running.insert(exec, Running { alloc, spawns: report.spawns });
        node.disp.terminate_armed = false;
        self.events.schedule(now + cycles, Event::Complete { node: id, exec });

        let l = &mut self.ledger;
        l.first_launch.get_or_insert(now);
        l.tokens.executed += 1;
        l.ops += report.ops;
        l.exec_cycles += cycles;
        l.spawn_cycles += spawn_cycles;
        l.duplicate_work += report.duplicates;
        if switched || self.cost.reconfig_every_launch {
            l.reconfigurations += 1;
            l.reconfig_cycles += self.cost.reconfig_cycles;
        }
        if self.cfg.strict_checks {
            debug_assert!(token.task_range.is_within(&self.nodes[id].local));
            for a in token.task_range.iter() {
                self.exec_counts[a as usize] += 1;
            }
        }
        Ok(())
    }

    /// Copy of the remote words a task declared, read from their owners.
    fn stage(&self, id: NodeId, remote: AddressRange) -> Result<Vec<A::Word>, SimError> {
        let mut staged = Vec::with_capacity(remote.len() as usize);
        for addr in remote.iter() {
            let owner = self.net.owner(addr).ok_or(SimError::Unowned { node: id, addr })?;
            let n = &self.nodes[owner];
            staged.push(self.app.read_word(&n.mem, n.local, addr));
        }
        Ok(staged)
    }

    fn complete(&mut self, id: NodeId, exec: u64) {
        let now = self.now;
        let node = &mut self.nodes[id];
        let r = node.running.remove(&exec).expect("completion for a running task");
        node.note_occupancy(now);
        node.cgra.release(&r.alloc);
        let spawned = r.spawns.len() as u64;
        for t in r.spawns {
            node.cgra.absorb_spawn(r.alloc.lead(), t, self.spawn_seq);
            self.spawn_seq += 1;
        }
        node.disp.terminate_armed = false;
        self.ledger.tokens.spawned += spawned;
        self.ledger.work_cycles = now;
        self.live = self.live + spawned - 1;
        self.mark_quiescence();
        self.wake(id, now);
    }

    fn coalesce_stage(&mut self, id: NodeId) -> bool {
        let node = &mut self.nodes[id];
        let mut progress = false;
        while !node.cgra.spawns.is_empty() && !node.disp.recv_queue.is_full() {
            let before = node.coal.merges;
            let Some(t) = node.coal.coalesce(&mut node.cgra.spawns) else {
                break;
            };
            let merged = node.coal.merges - before;
            self.ledger.tokens.merged_away += merged;
            self.live -= merged;
            let pushed = node.disp.recv_queue.try_push(t);
            debug_assert!(pushed.is_ok());
            progress = true;
            if !self.cfg.coalesce_drain_all {
                break;
            }
        }
        progress
    }

    /// Node 0 seeds the TERMINATE sentinel once it has been quiet for the
    /// configured interval. Returns when it will next want to look.
    fn termination_injection(&mut self) -> Option<Cycle> {
        if self.terminate_injected.is_some() {
            return None;
        }
        let now = self.now;
        let interval = self.cfg.quiet_interval();
        let node = &mut self.nodes[0];
        let quiet = node.disp.recv_queue.is_empty() && node.disp.wait_queue.is_empty() && node.idle();
        if !quiet {
            node.quiet_since = None;
            return None;
        }
        let since = *node.quiet_since.get_or_insert(now);
        if now < since + interval {
            return Some(since + interval);
        }
        node.disp.recv_queue.try_push(TaskToken::terminate(0)).expect("receive queue is empty");
        self.terminate_injected = Some(now);
        self.ledger.tokens.terminate_injected += 1;
        Some(now)
    }

    fn halt(&mut self, id: NodeId) -> Result<(), SimError> {
        if self.live != 0 {
            return Err(SimError::UnsafeTermination { node: id, at: self.now, live: self.live });
        }
        if self.cfg.strict_checks {
            let scanned = self.scan_live()?;
            if scanned != self.live {
                return Err(SimError::Bookkeeping { counted: self.live, scanned, at: self.now });
            }
        }
        let now = self.now;
        let node = &mut self.nodes[id];
        node.note_occupancy(now);
        node.halted_at = Some(now);
        self.halted += 1;
        Ok(())
    }

    /// Count outstanding work by inspecting every queue, link and group.
    fn scan_live(&self) -> Result<u64, SimError> {
        let mut n = 0u64;
        for node in &self.nodes {
            let d = &node.disp;
            n += d.recv_queue.iter().filter(|t| !t.is_terminate()).count() as u64;
            n += d.send_queue.iter().filter(|t| !t.is_terminate()).count() as u64;
            n += d.wait_queue.len() as u64;
            n += node.cgra.spawns.len() as u64;
            n += node.running.len() as u64;
        }
        for link in &self.links {
            for bytes in link.in_flight() {
                if !decode_token(bytes)?.is_terminate() {
                    n += 1;
                }
            }
        }
        Ok(n)
    }
}

/// Build and run in one go.
pub fn run_app<A: Application>(app: &A, cfg: SimConfig) -> Result<RunOutcome<A::Mem>, SimError> {
    Simulation::new(app, cfg)?.run()
}
