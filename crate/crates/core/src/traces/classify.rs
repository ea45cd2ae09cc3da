//! Cache, bandwidth and prefetch sensitivity of a single application.
//!
//! The application runs alone under a base setting (a quarter of the LLC
//! ways, a quarter of the memory bandwidth, prefetcher off) and then with one
//! resource changed at a time: a quarter and four times the base cache, a
//! quarter and four times the base bandwidth, and the prefetcher on. It is
//! sensitive to a resource when some change moves its IPC by 10% or more.

use rayon::prelude::*;

use super::{TraceSource, WorkloadMix};
use crate::memsys::PartitionState;
use crate::sim::Simulation;
use crate::{Result, SimConfig};

/// IPC change that makes an application sensitive to a resource.
pub const SENSITIVITY_THRESHOLD: f64 = 0.10;

/// The settings an application is characterised under.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyEnv {
    pub cfg: SimConfig,
    pub low_ways: u32,
    pub base_ways: u32,
    pub high_ways: u32,
    pub low_gbps: f64,
    pub base_gbps: f64,
    pub high_gbps: f64,
}

impl ClassifyEnv {
    pub fn new(cfg: &SimConfig) -> Self {
        let ways = cfg.llc.ways;
        let total = cfg.memory.total_gbps();
        let mut cfg = cfg.clone();
        cfg.cbp.min_ways = 1;
        cfg.cbp.min_bandwidth_gbps = 0.0;
        Self {
            cfg,
            low_ways: (ways / 16).max(1),
            base_ways: (ways / 4).max(1),
            high_ways: ways,
            low_gbps: total / 16.0,
            base_gbps: total / 4.0,
            high_gbps: total,
        }
    }

    /// IPC of `source` running alone with the given allocation.
    pub fn ipc(&self, source: &TraceSource, ways: u32, gbps: f64, prefetch: bool) -> Result<f64> {
        let mix = WorkloadMix::new("classify", vec![("app".into(), source.clone())])?;
        let mut sim = Simulation::new(&self.cfg, &mix, None)?;
        sim.memory_mut().apply_partition(PartitionState {
            ways: Some(vec![ways]),
            bandwidth: None,
            prefetch: vec![prefetch],
        })?;
        sim.memory_mut().force_bandwidth_shares(&[gbps]);
        Ok(sim.run()?.apps[0].ipc())
    }
}

/// IPC of each changed setting relative to the base setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sensitivity {
    pub cache_low: f64,
    pub cache_high: f64,
    pub bandwidth_low: f64,
    pub bandwidth_high: f64,
    pub prefetch: f64,
}

fn moved(ratio: f64) -> bool {
    (ratio - 1.0).abs() >= SENSITIVITY_THRESHOLD
}

impl Sensitivity {
    /// Cache sensitive.
    pub fn cs(&self) -> bool {
        moved(self.cache_low) || moved(self.cache_high)
    }

    /// Bandwidth sensitive.
    pub fn bs(&self) -> bool {
        moved(self.bandwidth_low) || moved(self.bandwidth_high)
    }

    /// Prefetch sensitive.
    pub fn ps(&self) -> bool {
        moved(self.prefetch)
    }

    /// Class label such as `CS-BS` or `I` for an insensitive application.
    pub fn label(&self) -> String {
        let parts: Vec<&str> = [(self.cs(), "CS"), (self.bs(), "BS"), (self.ps(), "PS")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| *n)
            .collect();
        if parts.is_empty() {
            "I".into()
        } else {
            parts.join("-")
        }
    }
}

pub fn classify_sensitivity(source: &TraceSource, env: &ClassifyEnv) -> Result<Sensitivity> {
    let e = env;
    let settings = [
        (e.base_ways, e.base_gbps, false),
        (e.low_ways, e.base_gbps, false),
        (e.high_ways, e.base_gbps, false),
        (e.base_ways, e.low_gbps, false),
        (e.base_ways, e.high_gbps, false),
        (e.base_ways, e.base_gbps, true),
    ];
    let ipc = settings
        .par_iter()
        .map(|&(w, b, p)| env.ipc(source, w, b, p))
        .collect::<Result<Vec<f64>>>()?;
    let r = |i: usize| ipc[i] / ipc[0];
    Ok(Sensitivity {
        cache_low: r(1),
        cache_high: r(2),
        bandwidth_low: r(3),
        bandwidth_high: r(4),
        prefetch: r(5),
    })
}
