//! Per-node task dispatcher: the receive, wait and send queues, the range
//! filter, and the node's share of the ring termination protocol.

use arrayvec::ArrayVec;

use crate::queue::BoundedQueue;
use crate::range::{range_relation, AddressRange, RangeError, RangeRelation};
use crate::token::TaskToken;
use crate::Cycle;

/// A token parked for local execution. `data_ready_at` is stamped when the
/// remote acquisition for it has been issued.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WaitEntry {
    pub token: TaskToken,
    pub data_ready_at: Option<Cycle>,
}

#[derive(Clone, Debug)]
pub struct DispatcherState {
    pub recv_queue: BoundedQueue<TaskToken>,
    pub wait_queue: BoundedQueue<WaitEntry>,
    pub send_queue: BoundedQueue<TaskToken>,
    pub local: AddressRange,
    pub terminate_armed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FilterOutcome {
    pub relation: RangeRelation,
    pub to_wait: usize,
    pub to_send: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FilterError {
    /// Destination queues lack room for every child; nothing was placed.
    #[error("filter stalled: destination queue full")]
    Stalled,
    #[error(transparent)]
    Range(#[from] RangeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationStep {
    /// Not a TERMINATE token; it continues to the filter.
    NotTerminate,
    /// First consecutive sighting: forwarded and armed.
    Forwarded,
    /// Second consecutive sighting: forwarded, and the node leaves its loop.
    Halted,
    /// Local work outstanding: the sentinel went back to the tail of the
    /// receive queue and the node disarmed.
    Held,
    /// Send queue full; the sentinel went back to the head of the receive
    /// queue.
    Stalled,
}

impl DispatcherState {
    pub fn new(local: AddressRange, recv: usize, wait: usize, send: usize) -> Self {
        DispatcherState {
            recv_queue: BoundedQueue::new(recv),
            wait_queue: BoundedQueue::new(wait),
            send_queue: BoundedQueue::new(send),
            local,
            terminate_armed: false,
        }
    }

    /// Accept a token off the ring. A full receive queue hands it back and
    /// the upstream link stalls.
    pub fn arrive(&mut self, t: TaskToken) -> Result<(), TaskToken> {
        self.recv_queue.try_push(t)
    }

    /// Split `t` against the local range and place every child, or place
    /// nothing and report a stall.
    pub fn filter(&mut self, t: &TaskToken) -> Result<FilterOutcome, FilterError> {
        let relation = range_relation(t.task_range, self.local)?;
        let children = split(t, self.local, relation);
        let to_wait = children.iter().filter(|c| c.local).count();
        let to_send = children.len() - to_wait;
        if self.wait_queue.free() < to_wait || self.send_queue.free() < to_send {
            return Err(FilterError::Stalled);
        }
        for c in children.iter() {
            let placed = if c.local {
                self.wait_queue.try_push(WaitEntry { token: c.token, data_ready_at: None }).is_ok()
            } else {
                self.send_queue.try_push(c.token).is_ok()
            };
            debug_assert!(placed);
        }
        Ok(FilterOutcome { relation, to_wait, to_send })
    }

    /// Handle a token just dequeued from the receive queue with respect to
    /// termination. `node_idle` reports whether nothing is executing, no
    /// spawned tokens are waiting in the CGRA controller and nothing else
    /// sits in the receive queue; the wait queue is checked here.
    pub fn step_termination(&mut self, t: TaskToken, node_idle: bool) -> TerminationStep {
        if !t.is_terminate() {
            self.terminate_armed = false;
            return TerminationStep::NotTerminate;
        }
        if !(self.wait_queue.is_empty() && node_idle) {
            self.terminate_armed = false;
            let requeued = self.recv_queue.try_push(t);
            debug_assert!(requeued.is_ok(), "caller dequeued the sentinel first");
            return TerminationStep::Held;
        }
        if let Err(t) = self.send_queue.try_push(t) {
            let restored = self.recv_queue.try_push_front(t);
            debug_assert!(restored.is_ok());
            return TerminationStep::Stalled;
        }
        if self.terminate_armed {
            TerminationStep::Halted
        } else {
            self.terminate_armed = true;
            TerminationStep::Forwarded
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Child {
    pub token: TaskToken,
    pub local: bool,
}

/// At most three children come out of a split.
pub type Children = ArrayVec<Child, 3>;

/// Children of `t` for a given relation, in address order. Empty pieces are
/// dropped; fields other than the range are inherited.
pub fn split(t: &TaskToken, local: AddressRange, relation: RangeRelation) -> Children {
    let mut out = Children::new();
    let r = t.task_range;
    match relation {
        RangeRelation::Disjoint => out.push(Child { token: *t, local: false }),
        RangeRelation::Subset => out.push(Child { token: *t, local: true }),
        RangeRelation::Superset | RangeRelation::PartialOverlap => {
            let before = AddressRange::new(r.start, r.start.max(local.start).min(r.end));
            let inside = r.intersect(&local);
            let after = AddressRange::new(r.end.min(local.end).max(r.start), r.end);
            for (range, is_local) in [(before, false), (inside, true), (after, false)] {
                if !range.is_empty() {
                    out.push(Child { token: t.with_range(range), local: is_local });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn r(s: u32, e: u32) -> AddressRange {
        AddressRange::new(s, e)
    }

    fn state() -> DispatcherState {
        DispatcherState::new(r(100, 200), 8, 8, 8)
    }

    fn ranges<'a>(it: impl Iterator<Item = &'a TaskToken>) -> Vec<AddressRange> {
        it.map(|t| t.task_range).collect()
    }

    #[test]
    fn superset_splits_three_ways() {
        let mut d = state();
        let t = TaskToken::new(1, r(0, 400), 7).with_remote(r(5, 9)).with_from(2);
        let out = d.filter(&t).unwrap();
        assert_eq!(out, FilterOutcome { relation: RangeRelation::Superset, to_wait: 1, to_send: 2 });
        assert_eq!(ranges(d.send_queue.iter()), [r(0, 100), r(200, 400)]);
        assert_eq!(ranges(d.wait_queue.iter().map(|e| &e.token)), [r(100, 200)]);
        for c in d.send_queue.iter().chain(d.wait_queue.iter().map(|e| &e.token)) {
            assert_eq!((c.task_id, c.param, c.remote_range, c.from_node), (1, 7, r(5, 9), 2));
        }
    }

    #[test]
    fn partial_overlap_splits_two_ways() {
        let mut d = state();
        d.filter(&TaskToken::new(1, r(150, 300), 0)).unwrap();
        assert_eq!(ranges(d.wait_queue.iter().map(|e| &e.token)), [r(150, 200)]);
        assert_eq!(ranges(d.send_queue.iter()), [r(200, 300)]);
    }

    #[test]
    fn disjoint_passes_unchanged() {
        let mut d = state();
        let t = TaskToken::new(3, r(500, 600), 9);
        d.filter(&t).unwrap();
        assert_eq!(d.send_queue.peek(), Some(&t));
        assert!(d.wait_queue.is_empty());
    }

    #[test]
    fn superset_with_shared_edge_drops_empty_child() {
        let mut d = state();
        let out = d.filter(&TaskToken::new(1, r(100, 300), 0)).unwrap();
        assert_eq!((out.to_wait, out.to_send), (1, 1));
    }

    #[test]
    fn split_is_atomic_under_backpressure() {
        let mut d = DispatcherState::new(r(100, 200), 8, 8, 1);
        d.send_queue.try_push(TaskToken::new(1, r(0, 1), 0)).unwrap();
        assert_eq!(d.filter(&TaskToken::new(1, r(0, 400), 0)), Err(FilterError::Stalled));
        assert!(d.wait_queue.is_empty());
        assert_eq!(d.send_queue.len(), 1);
    }

    #[test]
    fn arrive_backpressure_and_order() {
        let mut d = state();
        for i in 0..8 {
            d.arrive(TaskToken::new(1, r(i, i + 1), 0)).unwrap();
        }
        let extra = TaskToken::new(1, r(50, 51), 0);
        assert_eq!(d.arrive(extra), Err(extra));
        assert_eq!(d.recv_queue.pop().unwrap().task_range, r(0, 1));
        assert_eq!(d.recv_queue.pop().unwrap().task_range, r(1, 2));
        d.arrive(extra).unwrap();
    }

    #[test]
    fn termination_protocol() {
        let mut d = state();
        let t = TaskToken::terminate(0);
        assert_eq!(d.step_termination(t, true), TerminationStep::Forwarded);
        assert!(d.terminate_armed);
        assert_eq!(d.step_termination(t, true), TerminationStep::Halted);

        let mut d = state();
        d.terminate_armed = true;
        let ordinary = TaskToken::new(1, r(0, 1), 0);
        assert_eq!(d.step_termination(ordinary, true), TerminationStep::NotTerminate);
        assert!(!d.terminate_armed);
    }

    #[test]
    fn terminate_held_while_work_pending() {
        let mut d = state();
        d.terminate_armed = true;
        d.wait_queue.try_push(WaitEntry { token: TaskToken::new(1, r(100, 101), 0), data_ready_at: None }).unwrap();
        let t = TaskToken::terminate(0);
        assert_eq!(d.step_termination(t, true), TerminationStep::Held);
        assert!(!d.terminate_armed);
        assert_eq!(d.recv_queue.peek(), Some(&t));

        let mut d = state();
        assert_eq!(d.step_termination(t, false), TerminationStep::Held);
    }

    #[test]
    fn stalled_terminate_returns_to_head() {
        let mut d = DispatcherState::new(r(100, 200), 8, 8, 1);
        d.send_queue.try_push(TaskToken::new(1, r(0, 1), 0)).unwrap();
        d.recv_queue.try_push(TaskToken::new(1, r(150, 151), 0)).unwrap();
        let t = TaskToken::terminate(0);
        assert_eq!(d.step_termination(t, true), TerminationStep::Stalled);
        assert_eq!(d.recv_queue.peek(), Some(&t));
        assert!(!d.terminate_armed);
    }
}
