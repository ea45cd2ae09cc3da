//! Memory channels and bandwidth enforcement.
//!
//! Each channel is a single-server FIFO whose service time is one line
//! transfer at the channel rate; lines are interleaved across channels.
//! Bandwidth partitioning is enforced MBA-style by adding a per-application
//! delay after the LLC: `K * (total_bw / share - 1)`, which is zero for an
//! application holding the whole bandwidth and grows as its share shrinks.
//! The mapping from share to delay is a stand-in; the enforcement hardware it
//! imitates does not publish one.

use crate::config::SimConfig;
use crate::monitor::QueueDelayMonitor;
use crate::{AppId, Ps, PS_PER_NS};

/// Latency decomposition of one memory request, in picoseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MemTiming {
    pub base: Ps,
    pub queue: Ps,
    pub injected: Ps,
    pub total: Ps,
}

impl MemTiming {
    pub fn new(base: Ps, queue: Ps, injected: Ps) -> Self {
        Self {
            base,
            queue,
            injected,
            total: base + queue + injected,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.total == self.base + self.queue + self.injected
    }
}

/// Per-application queuing statistics.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueueStats {
    pub delays: QueueDelayMonitor,
    pub requests: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct MemoryController {
    line_bytes: u64,
    free_at: Vec<Ps>,
    service_ps: Ps,
    base_ps: Ps,
    k_ps: f64,
    total_gbps: f64,
    injected: Vec<Ps>,
    pub stats: QueueStats,
}

impl MemoryController {
    pub fn new(cfg: &SimConfig, apps: usize) -> Self {
        let line = u64::from(cfg.line_bytes());
        // bytes / (GB/s) = ns
        let service_ns = line as f64 / cfg.memory.channel_gbps;
        Self {
            line_bytes: line,
            free_at: vec![0; cfg.memory.channels as usize],
            service_ps: (service_ns * PS_PER_NS as f64).round() as Ps,
            base_ps: cfg.memory_latency_ps(),
            k_ps: cfg.memory.enforcement_k_ns * PS_PER_NS as f64,
            total_gbps: cfg.memory.total_gbps(),
            injected: vec![0; apps],
            stats: QueueStats {
                delays: QueueDelayMonitor::new(apps),
                requests: vec![0; apps],
            },
        }
    }

    pub fn service_ps(&self) -> Ps {
        self.service_ps
    }

    pub fn total_gbps(&self) -> f64 {
        self.total_gbps
    }

    /// Injected delay for an application holding `share` GB/s.
    pub fn injected_delay_ps(&self, share: f64) -> Ps {
        if share >= self.total_gbps {
            return 0;
        }
        (self.k_ps * (self.total_gbps / share - 1.0)).round() as Ps
    }

    /// Installs bandwidth shares; `None` removes enforcement.
    pub fn set_shares(&mut self, shares: Option<&[f64]>) {
        for app in 0..self.injected.len() {
            self.injected[app] = match shares {
                Some(s) => self.injected_delay_ps(s[app]),
                None => 0,
            };
        }
    }

    pub fn injected_for(&self, app: AppId) -> Ps {
        self.injected[app]
    }

    /// Services one line request from `app` arriving at `when`.
    pub fn service(&mut self, app: AppId, line: u64, when: Ps) -> MemTiming {
        let ch = (line % self.free_at.len() as u64) as usize;
        let start = when.max(self.free_at[ch]);
        self.free_at[ch] = start + self.service_ps;
        let queue = start - when;
        self.stats.delays.accumulate(app, queue);
        self.stats.requests[app] += 1;
        MemTiming::new(self.base_ps, queue, self.injected[app])
    }

    pub fn line_bytes(&self) -> u64 {
        self.line_bytes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mc() -> MemoryController {
        let mut cfg = SimConfig::default();
        cfg.memory.channels = 1;
        cfg.memory.channel_gbps = 16.0;
        cfg.memory.latency_ns = 80.0;
        MemoryController::new(&cfg, 2)
    }

    #[test]
    fn idle_channel_full_share_is_base_latency() {
        let mut m = mc();
        m.set_shares(Some(&[16.0, 0.0]));
        let t = m.service(0, 0, 1_000);
        assert_eq!(t, MemTiming::new(80_000, 0, 0));
        assert_eq!(t.total, 80_000);
    }

    #[test]
    fn back_to_back_requests_queue_one_slot() {
        let mut m = mc();
        // 64 B at 16 GB/s = 4 ns
        assert_eq!(m.service_ps(), 4_000);
        m.service(0, 0, 0);
        let second = m.service(1, 0, 0);
        assert_eq!(second.queue, 4_000);
        assert_eq!(m.stats.delays.totals(), &[0, 4_000]);
        assert_eq!(m.stats.requests, vec![1, 1]);
        // lines on another channel would not queue, but there is only one
        let third = m.service(0, 1, 20_000);
        assert_eq!(third.queue, 0);
    }

    #[test]
    fn injected_delay_is_inverse_in_share() {
        let m = mc();
        // K = 5 ns, total 16 GB/s
        assert_eq!(m.injected_delay_ps(16.0), 0);
        assert_eq!(m.injected_delay_ps(8.0), 5_000);
        assert_eq!(m.injected_delay_ps(4.0), 15_000);
        // halving the share doubles the delay, plus one K
        for share in [8.0, 4.0, 2.0, 1.0] {
            let d = m.injected_delay_ps(share);
            assert_eq!(m.injected_delay_ps(share / 2.0), 2 * d + 5_000);
        }
    }

    #[test]
    fn timings_decompose() {
        let mut m = mc();
        m.set_shares(Some(&[4.0, 12.0]));
        for i in 0..100 {
            let t = m.service(i % 2, i as u64, (i as u64) * 1_000);
            assert!(t.is_consistent());
        }
    }
}
