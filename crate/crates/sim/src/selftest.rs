//! Quick invariant battery behind `arena selftest`.

use arena_core::{decode_token, encode_token, AddressRange, TaskToken};

use crate::record::run_scenario;
use crate::scenario::{Kernel, Model, ScenarioConfig};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), ok, detail: detail.into() }
}

fn small(kernel: Kernel, nodes: usize, seed: u64) -> ScenarioConfig {
    let size = match kernel {
        Kernel::Gemm => 16,
        Kernel::Nw => 40,
        _ => 48,
    };
    let mut cfg = ScenarioConfig::new(kernel, size, nodes, seed);
    cfg.workload.density = 0.1;
    cfg.workload.block = 8;
    cfg.policy.strict_checks = true;
    cfg.network.jitter_cycles = 30;
    cfg
}

pub fn run_selftest() -> Vec<Check> {
    let mut out = Vec::new();
    for kernel in [Kernel::Sssp, Kernel::Gemm, Kernel::Spmv, Kernel::Nw] {
        for nodes in [1, 3, 4] {
            let cfg = small(kernel, nodes, 7);
            let name = format!("{kernel} n={nodes}");
            let rep = match run_scenario(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    out.push(check(name, false, e.to_string()));
                    continue;
                }
            };
            let l = rep.ledger.as_ref().expect("arena run has a ledger");
            let bound = cfg.sim_config().termination_bound();
            let last = rep.halt_times.iter().copied().max().unwrap_or(0);
            out.push(check(format!("{name} matches oracle"), rep.record.oracle_ok, rep.record.digest.clone()));
            out.push(check(
                format!("{name} tokens balanced"),
                l.tokens_balanced(),
                format!("created {} consumed {}", l.tokens.created(), l.tokens.consumed()),
            ));
            out.push(check(format!("{name} cycles balanced"), l.cycles_balanced(), ""));
            out.push(check(
                format!("{name} halts in time"),
                last - rep.quiescent_at <= bound,
                format!("quiescent {} last halt {} bound {bound}", rep.quiescent_at, last),
            ));
            let again = run_scenario(&cfg).map(|r| r.ledger);
            out.push(check(format!("{name} deterministic"), again.ok().flatten().as_ref() == Some(l), ""));

            let mut bsp = cfg.clone();
            bsp.model = Model::Bsp;
            let ok = run_scenario(&bsp).map(|r| r.record.oracle_ok).unwrap_or(false);
            out.push(check(format!("{name} bsp matches oracle"), ok, ""));
        }
    }
    let mut bad = 0;
    for id in 0..15u8 {
        for from in 0..16u8 {
            let t = TaskToken::new(id, AddressRange::new(from as u32, 1000 + id as u32), id as u32 * 7)
                .with_remote(AddressRange::new(3, 9))
                .with_from(from as usize);
            if decode_token(&encode_token(&t).unwrap()) != Ok(t) {
                bad += 1;
            }
        }
    }
    out.push(check("token codec round trip", bad == 0, format!("{bad} mismatches")));
    out
}
