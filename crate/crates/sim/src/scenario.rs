//! Scenario files. A scenario is a TOML document; every section but the
//! top-level keys is optional and falls back to the prototype defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use arena_core::cgra::{CostModel, SpeedupTable};
use arena_core::kernels::bsp::BspParams;
use arena_core::SimConfig;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Sssp,
    Gemm,
    Spmv,
    Nw,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Arena,
    Bsp,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Cpu,
    #[default]
    Cgra,
}

macro_rules! named {
    ($t:ty { $($v:ident => $s:literal),* }) => {
        impl $t {
            pub fn name(self) -> &'static str {
                match self { $(Self::$v => $s),* }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim() {
                    $($s => Ok(Self::$v),)*
                    other => Err(format!("unknown {} `{other}`", stringify!($t).to_lowercase())),
                }
            }
        }
    };
}

named!(Kernel { Sssp => "sssp", Gemm => "gemm", Spmv => "spmv", Nw => "nw" });
named!(Model { Arena => "arena", Bsp => "bsp" });
named!(Backend { Cpu => "cpu", Cgra => "cgra" });

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadParams {
    /// Edge or nonzero probability.
    pub density: f64,
    /// Keep edges and nonzeros within this distance of the diagonal.
    pub band: Option<u32>,
    /// NW tile edge.
    pub block: u32,
    /// Explicit instance in the text format; relative to the scenario file.
    pub input: Option<PathBuf>,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        WorkloadParams { density: 0.05, band: None, block: 16, input: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkParams {
    pub hop_cycles: u64,
    pub slot_cycles: u64,
    pub jitter_cycles: u64,
    pub data_bits_per_cycle: u64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        let d = SimConfig::default();
        NetworkParams {
            hop_cycles: d.hop_cycles,
            slot_cycles: d.slot_cycles,
            jitter_cycles: d.link_jitter,
            data_bits_per_cycle: d.data_bits_per_cycle,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueueParams {
    pub recv: usize,
    pub wait: usize,
    pub send: usize,
    pub spawn: usize,
}

impl Default for QueueParams {
    fn default() -> Self {
        let d = SimConfig::default();
        QueueParams {
            recv: d.recv_capacity,
            wait: d.wait_capacity,
            send: d.send_capacity,
            spawn: d.spawn_queue_capacity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    /// Speedups on one, two and four groups; the kernel's own table when absent.
    pub speedup: Option<[f64; 3]>,
    pub reconfig_cycles: u64,
    pub spawn_short_cycles: u64,
    pub spawn_long_cycles: u64,
    pub clock_mhz: u32,
}

impl Default for CostParams {
    fn default() -> Self {
        let c = CostModel::default();
        CostParams {
            speedup: None,
            reconfig_cycles: c.reconfig_cycles,
            spawn_short_cycles: c.spawn_short_cycles,
            spawn_long_cycles: c.spawn_long_cycles,
            clock_mhz: c.clock_mhz,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyParams {
    pub greedy_launch: bool,
    pub reconfig_every_launch: bool,
    pub coalesce: bool,
    pub coalesce_window: usize,
    pub coalesce_drain_all: bool,
    pub iteration_cycles: u64,
    pub quiet_cycles: Option<u64>,
    pub strict_checks: bool,
}

impl Default for PolicyParams {
    fn default() -> Self {
        let d = SimConfig::default();
        PolicyParams {
            greedy_launch: d.greedy_launch,
            reconfig_every_launch: false,
            coalesce: d.coalesce,
            coalesce_window: d.coalesce_window,
            coalesce_drain_all: d.coalesce_drain_all,
            iteration_cycles: d.iteration_cycles,
            quiet_cycles: d.quiet_cycles,
            strict_checks: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub kernel: Kernel,
    pub size: u32,
    #[serde(default)]
    pub seed: u64,
    pub nodes: usize,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub workload: WorkloadParams,
    #[serde(default)]
    pub network: NetworkParams,
    #[serde(default)]
    pub queues: QueueParams,
    #[serde(default)]
    pub cost: CostParams,
    #[serde(default)]
    pub policy: PolicyParams,
}

/// Dotted key of the assignment on the line holding `offset`.
fn field_at(text: &str, offset: usize) -> String {
    let line_start = text[..offset].rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    let key = line.split('=').next().unwrap_or("").trim();
    let section = text[..line_start]
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix('[').and_then(|l| l.strip_suffix(']')))
        .map(str::trim);
    match section {
        Some(sec) if !key.is_empty() && !key.starts_with('[') => format!("{sec}.{key}"),
        _ => key.to_string(),
    }
}

fn bad(field: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::Config { field: field.to_string(), reason: reason.into() }
}

impl ScenarioConfig {
    pub fn new(kernel: Kernel, size: u32, nodes: usize, seed: u64) -> Self {
        ScenarioConfig {
            version: CONFIG_VERSION,
            kernel,
            size,
            seed,
            nodes,
            model: Model::default(),
            backend: Backend::default(),
            workload: WorkloadParams::default(),
            network: NetworkParams::default(),
            queues: QueueParams::default(),
            cost: CostParams::default(),
            policy: PolicyParams::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let missing = e.message().strip_prefix("missing field `").and_then(|m| m.strip_suffix('`'));
            let field = match (missing, e.span()) {
                (Some(m), Some(s)) => match field_at(text, s.start) {
                    sec if text[s.start..].starts_with('[') => format!("{}.{m}", sec.trim_matches(['[', ']'])),
                    _ => m.to_string(),
                },
                (Some(m), None) => m.to_string(),
                (None, s) => s.map(|s| field_at(text, s.start)).unwrap_or_default(),
            };
            HarnessError::Config { field, reason: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a scenario and resolves `workload.input` against its directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = ScenarioConfig::parse(&text)?;
        if let (Some(input), Some(dir)) = (&cfg.workload.input, path.parent()) {
            if input.is_relative() {
                cfg.workload.input = Some(dir.join(input));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.version != CONFIG_VERSION {
            return Err(bad("version", format!("expected {CONFIG_VERSION}, got {}", self.version)));
        }
        if !(1..=16).contains(&self.nodes) {
            return Err(bad("nodes", format!("must be 1..=16, got {}", self.nodes)));
        }
        if self.size == 0 && self.workload.input.is_none() {
            return Err(bad("size", "must be at least 1"));
        }
        let d = self.workload.density;
        if !(d > 0.0 && d <= 1.0) {
            return Err(bad("workload.density", format!("must be in (0, 1], got {d}")));
        }
        if self.workload.block == 0 {
            return Err(bad("workload.block", "must be at least 1"));
        }
        if self.workload.band == Some(0) {
            return Err(bad("workload.band", "must be at least 1"));
        }
        if let Some([a, b, c]) = self.cost.speedup {
            if SpeedupTable::new(a, b, c).is_none() {
                return Err(bad("cost.speedup", "factors must be >= 1 and non-decreasing"));
            }
        }
        if self.network.slot_cycles == 0 {
            return Err(bad("network.slot_cycles", "must be at least 1"));
        }
        if self.network.data_bits_per_cycle == 0 {
            return Err(bad("network.data_bits_per_cycle", "must be at least 1"));
        }
        for (field, v) in [
            ("queues.recv", self.queues.recv),
            ("queues.wait", self.queues.wait),
            ("queues.send", self.queues.send),
            ("queues.spawn", self.queues.spawn),
            ("policy.coalesce_window", self.policy.coalesce_window),
        ] {
            if v == 0 {
                return Err(bad(field, "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> usize {
        match self.backend {
            Backend::Cpu => 1,
            Backend::Cgra => 4,
        }
    }

    /// Speedup table the kernels register with. A CPU runs at unit speed.
    pub fn speedup(&self, kernel_default: SpeedupTable) -> SpeedupTable {
        match (self.backend, self.cost.speedup) {
            (Backend::Cpu, _) => SpeedupTable::UNIT,
            (Backend::Cgra, Some([a, b, c])) => SpeedupTable::new(a, b, c).unwrap_or(kernel_default),
            (Backend::Cgra, None) => kernel_default,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            nodes: self.nodes,
            seed: self.seed,
            cost: CostModel {
                reconfig_cycles: self.cost.reconfig_cycles,
                spawn_short_cycles: self.cost.spawn_short_cycles,
                spawn_long_cycles: self.cost.spawn_long_cycles,
                clock_mhz: self.cost.clock_mhz,
                reconfig_every_launch: self.policy.reconfig_every_launch,
                ..CostModel::default()
            },
            groups: self.groups(),
            hop_cycles: self.network.hop_cycles,
            slot_cycles: self.network.slot_cycles,
            link_jitter: self.network.jitter_cycles,
            data_bits_per_cycle: self.network.data_bits_per_cycle,
            recv_capacity: self.queues.recv,
            wait_capacity: self.queues.wait,
            send_capacity: self.queues.send,
            spawn_queue_capacity: self.queues.spawn,
            coalesce: self.policy.coalesce,
            coalesce_window: self.policy.coalesce_window,
            coalesce_drain_all: self.policy.coalesce_drain_all,
            greedy_launch: self.policy.greedy_launch,
            iteration_cycles: self.policy.iteration_cycles,
            quiet_cycles: self.policy.quiet_cycles,
            strict_checks: self.policy.strict_checks,
            ..SimConfig::default()
        }
    }

    pub fn bsp_params(&self, speedup: SpeedupTable) -> BspParams {
        BspParams {
            nodes: self.nodes,
            hop: self.network.hop_cycles,
            bits_per_cycle: self.network.data_bits_per_cycle,
            speedup,
            groups: self.groups(),
        }
    }
}
