//! Event queue, ring links and the data-transfer network.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::range::AddressRange;
use crate::token::TOKEN_BYTES;
use crate::{Cycle, NodeId};

struct Entry<E> {
    time: Cycle,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

/// Min-queue of timed events. Ties on time go to the earlier insertion.
pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    next_seq: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        EventQueue { heap: BinaryHeap::new(), next_seq: 0 }
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, time: Cycle, event: E) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { time, seq, event });
        seq
    }

    pub fn pop(&mut self) -> Option<(Cycle, E)> {
        self.heap.pop().map(|e| (e.time, e.event))
    }

    pub fn peek_time(&self) -> Option<Cycle> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// One unidirectional hop of the token ring. The link is pipelined: a new
/// token may enter every `slot` cycles and each takes `hop` cycles (plus
/// jitter) to cross. Arrival order always equals send order.
#[derive(Clone, Debug)]
pub struct RingLink {
    pub hop: Cycle,
    pub slot: Cycle,
    next_free: Cycle,
    last_arrival: Cycle,
    in_flight: VecDeque<(Cycle, [u8; TOKEN_BYTES])>,
    /// Set while the head has arrived but the receiver had no room.
    pub blocked_since: Option<Cycle>,
}

impl RingLink {
    pub fn new(hop: Cycle, slot: Cycle) -> Self {
        RingLink { hop, slot, next_free: 0, last_arrival: 0, in_flight: VecDeque::new(), blocked_since: None }
    }

    pub fn can_send(&self, now: Cycle) -> bool {
        self.next_free <= now
    }

    /// First cycle at which another token may enter.
    pub fn free_at(&self) -> Cycle {
        self.next_free
    }

    /// Put a token on the wire; returns its arrival cycle.
    pub fn send(&mut self, now: Cycle, bytes: [u8; TOKEN_BYTES], jitter: Cycle) -> Cycle {
        debug_assert!(self.can_send(now));
        self.next_free = now + self.slot;
        let arrival = (now + self.hop + jitter).max(self.last_arrival);
        self.last_arrival = arrival;
        self.in_flight.push_back((arrival, bytes));
        arrival
    }

    /// Head token if it has arrived by `now`.
    pub fn arrived(&self, now: Cycle) -> Option<&[u8; TOKEN_BYTES]> {
        self.in_flight.front().filter(|(t, _)| *t <= now).map(|(_, b)| b)
    }

    pub fn pop_arrived(&mut self, now: Cycle) -> Option<[u8; TOKEN_BYTES]> {
        self.arrived(now)?;
        self.in_flight.pop_front().map(|(_, b)| b)
    }

    pub fn head_arrival(&self) -> Option<Cycle> {
        self.in_flight.front().map(|(t, _)| *t)
    }

    pub fn in_flight(&self) -> impl Iterator<Item = &[u8; TOKEN_BYTES]> {
        self.in_flight.iter().map(|(_, b)| b)
    }

    pub fn len(&self) -> usize {
        self.in_flight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_flight.is_empty()
    }
}

/// Shortest distance between two nodes when data can travel either way.
pub fn ring_distance(a: NodeId, b: NodeId, nodes: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(nodes - d)
}

/// Request to `distance` hops away and response back, plus serialization.
pub fn transfer_cycles(hop: Cycle, bits_per_cycle: u64, distance: usize, bytes: u64) -> Cycle {
    if distance == 0 {
        return 0;
    }
    2 * hop * distance as Cycle + bytes.saturating_mul(8).div_ceil(bits_per_cycle)
}

/// Piece of a remote range served by one owner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transfer {
    pub owner: NodeId,
    pub range: AddressRange,
    pub bytes: u64,
    pub cycles: Cycle,
}

/// The data-transfer network: a directory of partitions plus the latency
/// function. Links do not contend.
#[derive(Clone, Debug)]
pub struct DataNet {
    pub partitions: Vec<AddressRange>,
    pub hop: Cycle,
    pub bits_per_cycle: u64,
    pub word_bytes: u64,
}

impl DataNet {
    pub fn owner(&self, addr: u32) -> Option<NodeId> {
        self.partitions.iter().position(|p| p.contains(addr))
    }

    /// Split `remote` by owner. Parts outside every partition are dropped.
    pub fn plan(&self, requester: NodeId, remote: AddressRange) -> Vec<Transfer> {
        let n = self.partitions.len();
        self.partitions
            .iter()
            .enumerate()
            .filter_map(|(owner, p)| {
                let range = remote.intersect(p);
                if range.is_empty() {
                    return None;
                }
                let dist = ring_distance(requester, owner, n);
                let bytes = if dist == 0 { 0 } else { range.len() as u64 * self.word_bytes };
                let cycles = transfer_cycles(self.hop, self.bits_per_cycle, dist, bytes);
                Some(Transfer { owner, range, bytes, cycles })
            })
            .collect()
    }

    /// Cycles until every part has arrived.
    pub fn completion(plan: &[Transfer]) -> Cycle {
        plan.iter().map(|t| t.cycles).max().unwrap_or(0)
    }
}
