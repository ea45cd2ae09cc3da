//! Simulator configuration.
//!
//! Configuration files are TOML. Every key is optional; missing keys fall back
//! to the desk-scale defaults of [`SimConfig::default`]. Unknown keys are
//! rejected so typos do not silently fall back to defaults.
//!
//! ```toml
//! core_ghz = 4.0
//! noc_latency_cycles = 8
//! overlap = 0.0
//! atd_sampling = 32
//! warmup_instructions = 1000000
//! detailed_instructions = 5000000
//!
//! [l1]
//! size_bytes = 8192
//! ways = 8
//!
//! [llc]
//! size_bytes = 524288
//! ways = 16
//! data_latency = 9
//! tag_latency = 2
//!
//! [memory]
//! channels = 2
//! channel_gbps = 8.0
//! latency_ns = 80.0
//! enforcement_k_ns = 5.0
//!
//! [prefetch]
//! degree = 4
//! flows_per_core = 8
//!
//! [cbp]
//! reconfiguration_interval_ms = 10.0
//! prefetch_sampling_period_ms = 0.5
//! speedup_threshold = 1.05
//! min_ways = 4
//! min_bandwidth_gbps = 1.0
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Ps, Result, PS_PER_NS};

/// Geometry and latency of one cache level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheConfig {
    pub size_bytes: u64,
    pub ways: u32,
    pub line_bytes: u32,
    /// Cycles.
    pub data_latency: u32,
    /// Cycles.
    pub tag_latency: u32,
    pub inclusive: bool,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            size_bytes: 32 * 1024,
            ways: 8,
            line_bytes: 64,
            data_latency: 1,
            tag_latency: 0,
            inclusive: true,
        }
    }
}

impl CacheConfig {
    pub fn sets(&self) -> usize {
        (self.size_bytes / (u64::from(self.ways) * u64::from(self.line_bytes))) as usize
    }

    fn validate(&self, level: &str) -> Result<()> {
        if self.ways == 0 || self.ways > 64 {
            return Err(Error::InvalidConfig(format!(
                "{level}: ways must be in 1..=64, got {}",
                self.ways
            )));
        }
        if self.line_bytes == 0 || !self.line_bytes.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "{level}: line_bytes must be a power of two"
            )));
        }
        let way_bytes = u64::from(self.ways) * u64::from(self.line_bytes);
        if self.size_bytes == 0 || !self.size_bytes.is_multiple_of(way_bytes) {
            return Err(Error::InvalidConfig(format!(
                "{level}: size {} is not a multiple of ways x line_bytes = {way_bytes}",
                self.size_bytes
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoryConfig {
    pub channels: u32,
    pub channel_gbps: f64,
    /// Fixed DRAM access latency.
    pub latency_ns: f64,
    /// Scale of the injected enforcement delay, `K` in
    /// `K * (total_bw / share - 1)`.
    pub enforcement_k_ns: f64,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        Self {
            channels: 2,
            channel_gbps: 8.0,
            latency_ns: 80.0,
            enforcement_k_ns: 5.0,
        }
    }
}

impl MemoryConfig {
    pub fn total_gbps(&self) -> f64 {
        f64::from(self.channels) * self.channel_gbps
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrefetchConfig {
    pub degree: u32,
    pub flows_per_core: u32,
    pub confidence_threshold: u8,
    pub max_confidence: u8,
    pub page_bytes: u64,
    /// Prefetcher state before any resource manager decision.
    pub enabled_by_default: bool,
}

impl Default for PrefetchConfig {
    fn default() -> Self {
        Self {
            degree: 4,
            flows_per_core: 8,
            confidence_threshold: 2,
            max_confidence: 3,
            page_bytes: 4096,
            enabled_by_default: false,
        }
    }
}

/// Resource-manager parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CbpParams {
    pub reconfiguration_interval_ms: f64,
    pub prefetch_sampling_period_ms: f64,
    pub prefetch_interval_ms: f64,
    pub speedup_threshold: f64,
    pub min_ways: u32,
    pub min_bandwidth_gbps: f64,
    /// Halve accumulated queuing-delay totals at every reconfiguration.
    /// Off by default: totals accumulate for the whole run.
    pub queue_delay_decay: bool,
}

impl Default for CbpParams {
    fn default() -> Self {
        Self {
            reconfiguration_interval_ms: 10.0,
            prefetch_sampling_period_ms: 0.5,
            prefetch_interval_ms: 10.0,
            speedup_threshold: 1.05,
            min_ways: 4,
            min_bandwidth_gbps: 1.0,
            queue_delay_decay: false,
        }
    }
}

/// Full simulator configuration. The defaults are a desk-scale version of the
/// 16-core reference machine: same latencies, associativities and controller
/// parameters, smaller caches and fewer channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub core_ghz: f64,
    pub l1: CacheConfig,
    pub l2: CacheConfig,
    pub llc: CacheConfig,
    /// Fixed on-chip network cost added to every LLC access.
    pub noc_latency_cycles: u32,
    pub memory: MemoryConfig,
    pub prefetch: PrefetchConfig,
    pub cbp: CbpParams,
    /// One in `atd_sampling` LLC sets is shadowed by the utility monitors.
    pub atd_sampling: u32,
    /// Fraction of a memory access latency hidden from the core, in `[0, 1)`.
    pub overlap: f64,
    pub warmup_instructions: u64,
    pub detailed_instructions: u64,
    /// Simulated-time limit; exceeding it is reported as lack of progress.
    pub max_simulated_ms: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            core_ghz: 4.0,
            l1: CacheConfig {
                size_bytes: 8 * 1024,
                ways: 8,
                data_latency: 1,
                tag_latency: 0,
                ..CacheConfig::default()
            },
            l2: CacheConfig {
                size_bytes: 32 * 1024,
                ways: 8,
                data_latency: 6,
                tag_latency: 2,
                ..CacheConfig::default()
            },
            llc: CacheConfig {
                size_bytes: 512 * 1024,
                ways: 16,
                data_latency: 9,
                tag_latency: 2,
                ..CacheConfig::default()
            },
            noc_latency_cycles: 8,
            memory: MemoryConfig::default(),
            prefetch: PrefetchConfig::default(),
            cbp: CbpParams::default(),
            atd_sampling: 32,
            overlap: 0.0,
            warmup_instructions: 1_000_000,
            detailed_instructions: 5_000_000,
            max_simulated_ms: 60_000.0,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn line_bytes(&self) -> u32 {
        self.llc.line_bytes
    }

    /// Length of one core cycle.
    pub fn cycle_ps(&self) -> Ps {
        (1_000.0 / self.core_ghz).round() as Ps
    }

    pub fn validate(&self) -> Result<()> {
        self.l1.validate("l1")?;
        self.l2.validate("l2")?;
        self.llc.validate("llc")?;
        if self.l1.line_bytes != self.l2.line_bytes || self.l2.line_bytes != self.llc.line_bytes {
            return Err(Error::InvalidConfig(
                "all cache levels must share one line size".into(),
            ));
        }
        if !self.l2.inclusive || !self.llc.inclusive {
            return Err(Error::InvalidConfig(
                "only inclusive L2 and LLC are modelled".into(),
            ));
        }
        if !(self.core_ghz > 0.0) || self.cycle_ps() == 0 {
            return Err(Error::InvalidConfig("core_ghz must be positive".into()));
        }
        let mem = &self.memory;
        if mem.channels == 0 || !(mem.channel_gbps > 0.0) {
            return Err(Error::InvalidConfig(
                "memory needs at least one channel with positive bandwidth".into(),
            ));
        }
        if !(mem.latency_ns >= 0.0) || !(mem.enforcement_k_ns >= 0.0) {
            return Err(Error::InvalidConfig(
                "memory latency and enforcement constant must be non-negative".into(),
            ));
        }
        let pf = &self.prefetch;
        if pf.flows_per_core == 0 || pf.page_bytes == 0 {
            return Err(Error::InvalidConfig(
                "prefetcher needs at least one flow and a non-zero page size".into(),
            ));
        }
        if pf.confidence_threshold > pf.max_confidence {
            return Err(Error::InvalidConfig(
                "prefetch confidence_threshold exceeds max_confidence".into(),
            ));
        }
        let cbp = &self.cbp;
        for (name, v) in [
            ("reconfiguration_interval_ms", cbp.reconfiguration_interval_ms),
            ("prefetch_sampling_period_ms", cbp.prefetch_sampling_period_ms),
            ("prefetch_interval_ms", cbp.prefetch_interval_ms),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(cbp.speedup_threshold > 0.0) || !(cbp.min_bandwidth_gbps >= 0.0) {
            return Err(Error::InvalidConfig(
                "speedup_threshold must be positive and min_bandwidth_gbps non-negative".into(),
            ));
        }
        if cbp.min_ways > self.llc.ways {
            return Err(Error::InvalidConfig("min_ways exceeds LLC ways".into()));
        }
        if self.atd_sampling == 0 {
            return Err(Error::InvalidConfig("atd_sampling must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidConfig("overlap must be in [0, 1)".into()));
        }
        if self.detailed_instructions == 0 {
            return Err(Error::InvalidConfig(
                "detailed_instructions must be positive".into(),
            ));
        }
        if !(self.max_simulated_ms > 0.0) {
            return Err(Error::InvalidConfig("max_simulated_ms must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn memory_latency_ps(&self) -> Ps {
        (self.memory.latency_ns * PS_PER_NS as f64).round() as Ps
    }
}
