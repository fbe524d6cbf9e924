//! Coalescing of locally spawned tokens before they re-enter the dispatcher.
//!
//! Two pending tokens merge when they run the same task with the same
//! parameter and remote range, and one's data range ends where the other's
//! begins. Overlapping ranges are never merged.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::cgra::{SpawnStore, Spawned};
use crate::range::AddressRange;
use crate::token::TaskToken;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct MergeKey {
    task_id: u8,
    param: u32,
    remote: AddressRange,
}

impl MergeKey {
    fn of(t: &TaskToken) -> Self {
        MergeKey { task_id: t.task_id, param: t.param, remote: t.remote_range }
    }
}

#[derive(Clone, Debug)]
pub struct CoalesceUnit {
    /// Oldest pending tokens examined per pass.
    pub window: usize,
    pub enabled: bool,
    pub merges: u64,
}

impl CoalesceUnit {
    pub fn new(window: usize, enabled: bool) -> Self {
        CoalesceUnit { window: window.max(1), enabled, merges: 0 }
    }

    /// Merge what can be merged inside the window, then hand out the oldest
    /// pending token.
    pub fn coalesce(&mut self, store: &mut SpawnStore) -> Option<TaskToken> {
        if self.enabled {
            self.merges += merge_pass(store, self.window) as u64;
        }
        release_oldest(store)
    }
}

/// One adjacency chain: the surviving entry and everything folded into it.
struct Chain {
    keep: u64,
    range: AddressRange,
    absorbed: Vec<u64>,
}

/// Fully merge the `window` oldest entries. Returns the number of merges.
pub fn merge_pass(store: &mut SpawnStore, window: usize) -> usize {
    let mut cands: Vec<Spawned> = store.iter_by_age().take(window).copied().collect();
    if cands.len() < 2 {
        return 0;
    }
    cands.sort_by_key(|s| (MergeKey::of(&s.token), s.token.task_range.start, s.seq));

    let mut chains: Vec<Chain> = Vec::new();
    // (key, end) -> chains currently ending there, earliest first
    let mut open: BTreeMap<(MergeKey, u32), Vec<usize>> = BTreeMap::new();
    for s in &cands {
        let key = MergeKey::of(&s.token);
        let r = s.token.task_range;
        let slot = open.get_mut(&(key, r.start)).filter(|v| !v.is_empty());
        let idx = match slot {
            Some(v) => {
                let idx = v.remove(0);
                let c = &mut chains[idx];
                c.range.end = r.end;
                // survivor is whichever constituent is oldest
                if s.seq < c.keep {
                    c.absorbed.push(c.keep);
                    c.keep = s.seq;
                } else {
                    c.absorbed.push(s.seq);
                }
                idx
            }
            None => {
                chains.push(Chain { keep: s.seq, range: r, absorbed: Vec::new() });
                chains.len() - 1
            }
        };
        open.entry((key, chains[idx].range.end)).or_default().push(idx);
    }

    let mut removed = BTreeSet::new();
    let mut resized = BTreeMap::new();
    let mut merges = 0;
    for c in chains.iter().filter(|c| !c.absorbed.is_empty()) {
        merges += c.absorbed.len();
        removed.extend(c.absorbed.iter().copied());
        resized.insert(c.keep, c.range);
    }
    if merges == 0 {
        return 0;
    }
    for q in store.queues.iter_mut().chain(core::iter::once(&mut store.overflow)) {
        q.retain(|s| !removed.contains(&s.seq));
        for s in q.iter_mut() {
            if let Some(&range) = resized.get(&s.seq) {
                s.token.task_range = range;
            }
        }
    }
    store.promote_overflow();
    merges
}

/// Remove and return the oldest pending token.
pub fn release_oldest(store: &mut SpawnStore) -> Option<TaskToken> {
    let oldest = store.iter_by_age().next()?.seq;
    let mut out = None;
    for q in store.queues.iter_mut().chain(core::iter::once(&mut store.overflow)) {
        if let Some(pos) = q.iter().position(|s| s.seq == oldest) {
            out = q.remove(pos).map(|s| s.token);
            break;
        }
    }
    store.promote_overflow();
    out
}
