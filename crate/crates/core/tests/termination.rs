use arena_core::kernels::tree::{TreeApp, TreeSpec};
use arena_core::{run_app, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn randomized_trees_halt_safely_and_promptly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0f64;
    for trial in 0..1000u64 {
        let nodes = rng.random_range(1..=4);
        let spec = TreeSpec {
            size: rng.random_range(nodes as u32 * 2..64),
            tasks: rng.random_range(1..=20),
            max_len: rng.random_range(1..12),
            max_ops: rng.random_range(1..2000),
            remote_prob: rng.random_range(0.0..0.6),
            seed: trial,
        };
        let app = TreeApp::random(&spec);
        let cfg = SimConfig {
            nodes,
            seed: trial,
            hop_cycles: rng.random_range(0..400),
            link_jitter: rng.random_range(0..200),
            quiet_cycles: Some(rng.random_range(0..300)),
            coalesce: rng.random_bool(0.5),
            strict_checks: true,
            ..Default::default()
        };
        // an early halt surfaces as an UnsafeTermination error
        let out = run_app(&app, cfg.clone()).unwrap_or_else(|e| panic!("trial {trial}: {e}"));
        assert_eq!(app.check_coverage(&out.memories), Ok(()), "trial {trial}");
        assert_eq!(out.ledger.ops, app.total_ops());
        assert!(out.ledger.tokens_balanced());

        let q = out.quiescent_at;
        assert!(out.halt_times.iter().all(|&h| h >= q), "trial {trial}: halt before quiescence");
        let injected = out.terminate_injected_at.expect("sentinel injected");
        let start = q.max(injected);
        let last = *out.halt_times.iter().max().unwrap();
        let laps = 2 * cfg.lap_cycles();
        assert!(last - start <= laps, "trial {trial}: {} cycles after quiescence, limit {laps}", last - start);
        if injected > q {
            assert!(injected - q <= cfg.quiet_interval() + cfg.iteration_cycles);
        }
        if laps > 0 {
            worst = worst.max((last - start) as f64 / laps as f64);
        }
    }
    println!("worst halt delay: {worst:.3} of two laps");
}
