//! Simulator core for asynchronous data-centric execution: task tokens
//! circulate on a unidirectional ring of reconfigurable nodes, get filtered
//! and split against each node's local data range, and execute on a
//! runtime-allocated slice of a CGRA.
//!
//! The crate is `no_std` (it needs `alloc`). IO, configuration files and the
//! command line live in the `arena-sim` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cgra;
pub mod coalescer;
pub mod config;
pub mod dispatcher;
pub mod kernels;
pub mod metrics;
pub mod network;
pub mod queue;
pub mod range;
pub mod registry;
pub mod runtime;
pub mod token;

pub use cgra::{CgraState, CostModel, SpeedupTable};
pub use config::SimConfig;
pub use metrics::{ByteCategory, MetricsLedger};
pub use queue::BoundedQueue;
pub use range::{range_relation, AddressRange, RangeError, RangeRelation};
pub use registry::{KernelDescriptor, RegistryError, TaskRegistry};
pub use runtime::{run_app, Application, KernelCtx, KernelFault, RunOutcome, SimError, Simulation};
pub use token::{decode_token, encode_token, CodecError, TaskToken, TERMINATE, TOKEN_BYTES};

/// Cycle count on the single global clock.
pub type Cycle = u64;

/// Index of a node on the ring.
pub type NodeId = usize;
