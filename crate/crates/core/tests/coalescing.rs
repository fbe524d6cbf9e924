use arena_core::cgra::SpawnStore;
use arena_core::coalescer::{merge_pass, release_oldest};
use arena_core::kernels::sssp::{dijkstra_oracle, Graph, GraphSpec, SsspApp};
use arena_core::{run_app, AddressRange, SimConfig, TaskToken};
use proptest::prelude::*;

#[test]
fn sssp_state_identical_with_and_without_coalescing() {
    for seed in 0..12 {
        for (nodes, band) in [(1, None), (2, None), (4, Some(6)), (4, None)] {
            let g = Graph::generate(&GraphSpec { size: 96, density: 0.06, band, seed });
            let app = SsspApp::new(g.clone(), 0);
            let run = |coalesce| {
                let cfg = SimConfig { nodes, seed, coalesce, link_jitter: 20, ..Default::default() };
                run_app(&app, cfg).unwrap()
            };
            let (on, off) = (run(true), run(false));
            let want = dijkstra_oracle(&g, 0);
            assert_eq!(app.distances(&on.memories), want);
            assert_eq!(app.distances(&off.memories), want);
            for (a, b) in on.memories.iter().zip(&off.memories) {
                assert_eq!(a.best, b.best);
            }
            assert_eq!(off.ledger.tokens.merged_away, 0);
        }
    }
}

fn store_of(tokens: &[TaskToken]) -> SpawnStore {
    let mut s = SpawnStore::new(4, 4);
    for (i, &t) in tokens.iter().enumerate() {
        let sp = arena_core::cgra::Spawned { seq: i as u64, token: t };
        let q = i % 4;
        if s.queues[q].len() < 4 {
            s.queues[q].push_back(sp);
        } else {
            s.overflow.push_back(sp);
        }
    }
    s
}

fn drain(mut s: SpawnStore) -> Vec<TaskToken> {
    std::iter::from_fn(|| release_oldest(&mut s)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn merges_respect_keys_and_preserve_addresses(
        specs in proptest::collection::vec((1u8..3, 0u32..40, 1u32..4, 0u32..2, 0u32..2), 0..30),
        window in 1usize..20,
    ) {
        let tokens: Vec<TaskToken> = specs
            .iter()
            .map(|&(id, s, len, p, rem)| {
                TaskToken::new(id, AddressRange::new(s, s + len), p).with_remote(AddressRange::new(rem, rem * 3))
            })
            .collect();
        let mut store = store_of(&tokens);
        let merges = merge_pass(&mut store, window);
        let after = drain(store);
        prop_assert_eq!(after.len() + merges, tokens.len());
        // every output covers addresses of inputs that share its whole key
        let key = |t: &TaskToken| (t.task_id, t.param, t.remote_range);
        let mut want: Vec<(u8, u32, AddressRange, u32)> = Vec::new();
        let mut got = want.clone();
        for t in &tokens {
            let k = key(t);
            want.extend(t.task_range.iter().map(|a| (k.0, k.1, k.2, a)));
        }
        for t in &after {
            let k = key(t);
            prop_assert!(tokens.iter().any(|o| key(o) == k));
            got.extend(t.task_range.iter().map(|a| (k.0, k.1, k.2, a)));
        }
        want.sort();
        got.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn merge_result_independent_of_spawn_order(
        cuts in proptest::collection::btree_set(1u32..50, 0..15),
        params in proptest::collection::vec(0u32..2, 51),
        shuffle in any::<u64>(),
    ) {
        let mut bounds: Vec<u32> = std::iter::once(0).chain(cuts).chain(std::iter::once(50)).collect();
        bounds.dedup();
        let pieces: Vec<TaskToken> = bounds
            .windows(2)
            .map(|w| TaskToken::new(1, AddressRange::new(w[0], w[1]), params[w[0] as usize]))
            .collect();
        let mut shuffled = pieces.clone();
        let mut x = shuffle | 1;
        for i in (1..shuffled.len()).rev() {
            x ^= x << 13; x ^= x >> 7; x ^= x << 17;
            shuffled.swap(i, (x % (i as u64 + 1)) as usize);
        }
        let merged = |ts: &[TaskToken]| {
            let mut s = store_of(ts);
            merge_pass(&mut s, ts.len().max(1));
            let mut out: Vec<(u32, u32, u32)> =
                drain(s).iter().map(|t| (t.task_range.start, t.task_range.end, t.param)).collect();
            out.sort();
            out
        };
        prop_assert_eq!(merged(&pieces), merged(&shuffled));
    }
}
