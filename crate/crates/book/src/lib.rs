//! The guide's chapters as doc modules, so `cargo test` runs every snippet.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/workloads.md")]
pub mod workloads {}
#[doc = include_str!("../../../book/src/memory.md")]
pub mod memory {}
#[doc = include_str!("../../../book/src/monitoring.md")]
pub mod monitoring {}
#[doc = include_str!("../../../book/src/controllers.md")]
pub mod controllers {}
#[doc = include_str!("../../../book/src/coordination.md")]
pub mod coordination {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
