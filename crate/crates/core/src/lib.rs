//! Trace-driven multicore memory-system simulator with coordinated management
//! of shared last-level cache capacity, memory bandwidth and hardware
//! prefetching.
//!
//! The crate is organised bottom-up:
//!
//! * [`traces`]: memory-reference streams (file traces and a synthetic
//!   generator with cache/bandwidth/prefetch sensitivity knobs).
//! * [`memsys`]: private L1/L2 caches, a way-partitionable inclusive LLC and
//!   memory channels with delay-injection bandwidth enforcement.
//! * [`prefetch`]: per-core stride prefetcher attached at the L2.
//! * [`monitor`]: auxiliary tag directories, queuing-delay totals, IPC samples.
//! * [`controllers`]: the allocation policies and the coordinator that
//!   sequences them.
//! * [`sim`]: the event loop tying cores, memory system and coordinator
//!   together.
//! * [`harness`]: resource-manager configurations, metrics, experiment runs
//!   and CSV output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod controllers;
mod error;
pub mod harness;
pub mod memsys;
pub mod monitor;
pub mod prefetch;
pub mod sim;
pub mod traces;

pub use config::SimConfig;
pub use error::{Error, Result};

/// Simulated time, in picoseconds.
pub type Ps = u64;

/// Index of an application; applications are pinned one per core, so this is
/// also the core index.
pub type AppId = usize;

pub const PS_PER_NS: u64 = 1_000;
pub const PS_PER_MS: u64 = 1_000_000_000;

/// Converts a duration in milliseconds to picoseconds, rounding to nearest.
pub fn ms_to_ps(ms: f64) -> Ps {
    (ms * PS_PER_MS as f64).round() as Ps
}
