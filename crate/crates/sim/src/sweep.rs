//! Node-count sweeps and the summary printed by `report`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::record::{run_with, Record};
use crate::scenario::{Backend, Model, ScenarioConfig};
use crate::workload::Workload;
use crate::HarnessError;

/// Runs `template` for every combination of backend, model and node count,
/// in parallel. Rows come back in a fixed order: the serial baseline first,
/// then backend, model, nodes as given. Arena rows get `bytes_vs_bsp` from
/// the BSP row with the same backend and nodes, or 0 if there is none.
pub fn sweep(
    template: &ScenarioConfig,
    nodes: &[usize],
    models: &[Model],
    backends: &[Backend],
) -> Result<Vec<Record>, HarnessError> {
    template.validate()?;
    let mut jobs = Vec::new();
    for &backend in backends {
        for &model in models {
            for &n in nodes {
                let mut cfg = template.clone();
                cfg.backend = backend;
                cfg.model = model;
                cfg.nodes = n;
                cfg.validate()?;
                jobs.push(cfg);
            }
        }
    }
    let base = {
        let mut c = template.clone();
        c.nodes = 1;
        c
    };
    let oracle = Workload::build(&base)?.oracle();
    let serial = Record::serial(template, &oracle);
    let rows: Vec<Record> = jobs
        .par_iter()
        .map(|cfg| {
            let wl = Workload::build(cfg)?;
            let rep = run_with(cfg, &wl, oracle.clone())?;
            Ok(rep.record)
        })
        .collect::<Result<_, HarnessError>>()?;
    let mut out = Vec::with_capacity(rows.len() + 1);
    out.push(serial);
    for r in &rows {
        let mut r = r.clone();
        if r.model == "arena" {
            r.bytes_vs_bsp = rows
                .iter()
                .find(|b| b.model == "bsp" && b.backend == r.backend && b.nodes == r.nodes)
                .map_or(0.0, |b| ratio(r.total_bytes, b.total_bytes));
        }
        out.push(r);
    }
    Ok(out)
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Published headline figures the summary lines up against.
pub const REFERENCE_MOVEMENT_REDUCTION: f64 = 0.539;
pub const REFERENCE_SPEEDUP_CPU: f64 = 1.61;
pub const REFERENCE_SPEEDUP_CGRA: f64 = 2.17;

/// One line per kernel and backend at the largest node count that has
/// both an arena and a BSP row.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryLine {
    pub kernel: String,
    pub backend: String,
    pub nodes: usize,
    pub arena_speedup: f64,
    pub bsp_speedup: f64,
    /// `1 - arena bytes / bsp bytes`.
    pub movement_reduction: f64,
    pub oracle_ok: bool,
}

impl SummaryLine {
    pub fn speedup_ratio(&self) -> f64 {
        if self.bsp_speedup == 0.0 {
            0.0
        } else {
            self.arena_speedup / self.bsp_speedup
        }
    }
}

pub fn summarize(records: &[Record]) -> Vec<SummaryLine> {
    let mut keys: Vec<(String, String)> =
        records.iter().filter(|r| r.model != "serial").map(|r| (r.kernel.clone(), r.backend.clone())).collect();
    keys.sort();
    keys.dedup();
    let mut lines = Vec::new();
    for (kernel, backend) in keys {
        let of = |model: &str, n: usize| {
            records.iter().find(|r| r.kernel == kernel && r.backend == backend && r.model == model && r.nodes == n)
        };
        let best = records
            .iter()
            .filter(|r| r.kernel == kernel && r.backend == backend && r.model == "arena")
            .filter(|r| of("bsp", r.nodes).is_some())
            .map(|r| r.nodes)
            .max();
        let Some(n) = best else { continue };
        let (a, b) = (of("arena", n).unwrap(), of("bsp", n).unwrap());
        lines.push(SummaryLine {
            kernel: kernel.clone(),
            backend: backend.clone(),
            nodes: n,
            arena_speedup: a.speedup,
            bsp_speedup: b.speedup,
            movement_reduction: 1.0 - ratio(a.total_bytes, b.total_bytes),
            oracle_ok: a.oracle_ok && b.oracle_ok,
        });
    }
    lines
}

pub fn render_summary(lines: &[SummaryLine]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<6} {:<5} {:>5} {:>10} {:>10} {:>8} {:>10} {:>6}",
        "kernel", "back", "nodes", "arena_x", "bsp_x", "ratio", "bytes_cut", "oracle"
    );
    for l in lines {
        let _ = writeln!(
            s,
            "{:<6} {:<5} {:>5} {:>10.3} {:>10.3} {:>8.3} {:>9.1}% {:>6}",
            l.kernel,
            l.backend,
            l.nodes,
            l.arena_speedup,
            l.bsp_speedup,
            l.speedup_ratio(),
            100.0 * l.movement_reduction,
            if l.oracle_ok { "ok" } else { "FAIL" }
        );
    }
    let mean = |f: &dyn Fn(&SummaryLine) -> bool, g: &dyn Fn(&SummaryLine) -> f64| {
        let v: Vec<f64> = lines.iter().filter(|l| f(l)).map(g).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    if let Some(m) = mean(&|_| true, &|l| l.movement_reduction) {
        let _ = writeln!(
            s,
            "mean movement reduction {:.1}% (reference {:.1}%)",
            100.0 * m,
            100.0 * REFERENCE_MOVEMENT_REDUCTION
        );
    }
    for (backend, reference) in [("cpu", REFERENCE_SPEEDUP_CPU), ("cgra", REFERENCE_SPEEDUP_CGRA)] {
        if let Some(m) = mean(&|l| l.backend == backend, &|l| l.speedup_ratio()) {
            let _ = writeln!(s, "mean arena/bsp speedup on {backend} {m:.2}x (reference {reference:.2}x)");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Kernel;

    #[test]
    fn sweep_rows_are_ordered_and_linked() {
        let mut cfg = ScenarioConfig::new(Kernel::Sssp, 48, 1, 2);
        cfg.workload.density = 0.1;
        let rows = sweep(&cfg, &[1, 2, 4], &[Model::Arena, Model::Bsp], &[Backend::Cgra]).unwrap();
        assert_eq!(rows.len(), 7);
        assert_eq!(rows[0].model, "serial");
        assert_eq!(rows[0].speedup, 1.0);
        assert!(rows.iter().all(|r| r.oracle_ok));
        let nodes: Vec<usize> = rows[1..].iter().map(|r| r.nodes).collect();
        assert_eq!(nodes, [1, 2, 4, 1, 2, 4]);
        for a in rows.iter().filter(|r| r.model == "arena") {
            let b = rows.iter().find(|b| b.model == "bsp" && b.nodes == a.nodes).unwrap();
            assert_eq!(a.bytes_vs_bsp, ratio(a.total_bytes, b.total_bytes));
        }
        let again = sweep(&cfg, &[1, 2, 4], &[Model::Arena, Model::Bsp], &[Backend::Cgra]).unwrap();
        assert_eq!(rows, again);
        let lines = summarize(&rows);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].nodes, 4);
        assert!(render_summary(&lines).contains("reference"));
    }
}
