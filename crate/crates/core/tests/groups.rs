use arena_core::cgra::{groups_requested, Allocation, CgraState, MAX_GROUPS};
use arena_core::AddressRange;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn request_policy_branches() {
    let local = AddressRange::new(0, 100);
    let req = |len| groups_requested(AddressRange::new(0, len), local);
    assert_eq!(req(1), 1);
    assert_eq!(req(24), 1);
    assert_eq!(req(25), 2);
    assert_eq!(req(50), 2);
    assert_eq!(req(51), 4);
    assert_eq!(req(100), 4);
}

#[test]
fn random_allocate_release_conserves_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let total = [1, 2, 4][rng.random_range(0..3)];
        let mut c = CgraState::new(0, total, 4);
        let mut held: Vec<Allocation> = Vec::new();
        for _ in 0..rng.random_range(1..40) {
            if rng.random_bool(0.55) {
                let want = [1, 2, 4][rng.random_range(0..3)];
                let free = c.free_groups();
                match c.try_allocate(want) {
                    Ok(a) => {
                        let got = a.count();
                        assert!(got <= want.min(total) && got.is_power_of_two());
                        assert!(free < got * 2 || got == want.min(total), "ladder skipped a grantable size");
                        held.push(a);
                    }
                    Err(_) => assert_eq!(free, 0),
                }
            } else if !held.is_empty() {
                let a = held.swap_remove(rng.random_range(0..held.len()));
                c.release(&a);
            }
            let used: usize = held.iter().map(Allocation::count).sum();
            assert_eq!(c.free_groups() + used, total);
            let mut all: Vec<u8> = held.iter().flat_map(|a| a.groups.iter().copied()).collect();
            all.sort();
            all.dedup();
            assert_eq!(all.len(), used, "a group is held twice");
            assert!(total <= MAX_GROUPS);
        }
    }
}
