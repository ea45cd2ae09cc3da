//! Allocation policies and the coordinator that sequences them.

pub mod bandwidth;
pub mod coordinator;
pub mod lookahead;
pub mod throttle;

pub use bandwidth::{allocate_bandwidth, equal_bandwidth, rational, BwPlan};
pub use coordinator::{Coordinator, MonitorSnapshot, Phase, StepOutcome};
pub use lookahead::{
    allocate_cache, allocate_cache_cppf, allocate_cache_traced, equal_ways, CacheAllocation, CachePlan, Grant,
};
pub use throttle::{decide_prefetch, prefetch_helps, IpcPair, PrefPlan};
