//! Application kernels, their serial oracles and BSP baselines.

pub mod bsp;
pub mod gemm;
pub mod nw;
pub mod spmv;
pub mod sssp;
pub mod tree;
