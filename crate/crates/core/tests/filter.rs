use arena_core::dispatcher::{split, DispatcherState, FilterError};
use arena_core::{range_relation, AddressRange, RangeRelation, TaskToken};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_children(t: &TaskToken, local: AddressRange) -> RangeRelation {
    let rel = range_relation(t.task_range, local).unwrap();
    let kids = split(t, local, rel);
    assert!(!kids.is_empty());
    let mut at = t.task_range.start;
    for c in &kids {
        let r = c.token.task_range;
        assert!(!r.is_empty());
        assert_eq!(r.start, at, "children must tile the parent in order");
        at = r.end;
        assert_eq!(c.local, r.is_within(&local));
        assert!(c.local || !r.overlaps(&local));
        assert_eq!(c.token.with_range(t.task_range), *t, "only the range may differ");
    }
    assert_eq!(at, t.task_range.end);
    let expected = match rel {
        RangeRelation::Disjoint | RangeRelation::Subset => 1,
        RangeRelation::PartialOverlap => 2,
        RangeRelation::Superset => {
            1 + (t.task_range.start < local.start) as usize + (t.task_range.end > local.end) as usize
        }
    };
    assert_eq!(kids.len(), expected);
    rel
}

fn token(rng: &mut ChaCha8Rng, space: u32) -> TaskToken {
    let s = rng.random_range(0..space);
    let e = rng.random_range(s + 1..=space);
    let rs = rng.random_range(0..space);
    let re = rng.random_range(rs..=space);
    TaskToken::new(rng.random_range(1..15), AddressRange::new(s, e), rng.random())
        .with_remote(AddressRange::new(rs, re))
        .with_from(rng.random_range(0..16))
}

#[test]
fn random_splits_partition_and_inherit() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut hits = [0u32; 4];
    for _ in 0..20_000 {
        let space = rng.random_range(2..200);
        let t = token(&mut rng, space);
        let ls = rng.random_range(0..space);
        let le = rng.random_range(ls + 1..=space);
        let rel = check_children(&t, AddressRange::new(ls, le));
        hits[rel as usize] += 1;
    }
    assert!(hits.iter().all(|&h| h > 100), "relation coverage {hits:?}");
}

#[test]
fn filter_places_children_atomically() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10_000 {
        let t = token(&mut rng, 64);
        let local = AddressRange::new(16, 40);
        let (wait, send) = (rng.random_range(1..3), rng.random_range(1..3));
        let mut d = DispatcherState::new(local, 4, wait, send);
        let w0 = rng.random_range(0..=wait);
        let s0 = rng.random_range(0..=send);
        for _ in 0..w0 {
            d.wait_queue.try_push(arena_core::dispatcher::WaitEntry { token: t, data_ready_at: None }).unwrap();
        }
        for _ in 0..s0 {
            d.send_queue.try_push(t).unwrap();
        }
        match d.filter(&t) {
            Ok(out) => {
                assert_eq!(d.wait_queue.len(), w0 + out.to_wait);
                assert_eq!(d.send_queue.len(), s0 + out.to_send);
            }
            Err(FilterError::Stalled) => {
                assert_eq!((d.wait_queue.len(), d.send_queue.len()), (w0, s0));
            }
            Err(e) => panic!("{e}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn split_partitions_parent(
        s in 0u32..500, len in 1u32..500, ls in 0u32..500, llen in 1u32..500,
        id in 1u8..15, param in any::<u32>(), from in 0usize..16,
    ) {
        let t = TaskToken::new(id, AddressRange::new(s, s + len), param)
            .with_remote(AddressRange::new(7, 9))
            .with_from(from);
        check_children(&t, AddressRange::new(ls, ls + llen));
    }
}
