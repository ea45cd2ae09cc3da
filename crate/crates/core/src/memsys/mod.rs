//! Cache hierarchy and memory.
//!
//! Each core has a private L1 and L2; all cores share an inclusive LLC that
//! can be way-partitioned per application. LLC misses and prefetches go to
//! the [`MemoryController`]. Inclusion is enforced by back-invalidation: a
//! line leaving the L2 leaves the L1, a line leaving the LLC leaves its
//! owner's L1 and L2.
//!
//! Addresses are per-application; the physical line number prepends the
//! application index above [`ADDRESS_BITS`], so applications never share
//! lines.

mod cache;
mod dram;
mod partition;

pub use cache::{Line, PrivateCache, SharedCache};
pub use dram::{MemTiming, MemoryController, QueueStats};
pub use partition::{PartitionLimits, PartitionState, RepartitionReport, BANDWIDTH_QUANTUM};

use crate::config::SimConfig;
use crate::monitor::UtilityMonitor;
use crate::prefetch::{PrefetchEvent, PrefetchStats, StridePrefetcher};
use crate::traces::AccessKind;
use crate::{AppId, Error, Ps, Result};

/// Width of each application's address space.
pub const ADDRESS_BITS: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum HitLevel {
    L1,
    L2,
    Llc,
    Mem,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccessResult {
    pub level: HitLevel,
    /// Time until the data is available to the core.
    pub latency: Ps,
    /// Memory timing, for accesses that went to memory.
    pub mem: Option<MemTiming>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AppMemStats {
    pub accesses: u64,
    pub l1_hits: u64,
    pub l2_hits: u64,
    pub llc_hits: u64,
    /// Demand LLC misses.
    pub llc_misses: u64,
    /// Memory requests, demand and prefetch.
    pub mem_requests: u64,
}

#[derive(Clone, Copy, Debug)]
struct Latencies {
    l1_hit: Ps,
    l2_hit: Ps,
    llc_hit: Ps,
    /// On-chip part of a memory access.
    to_memory: Ps,
}

#[derive(Clone, Debug)]
pub struct MemorySystem {
    apps: usize,
    line_shift: u32,
    lat: Latencies,
    l1: Vec<PrivateCache>,
    l2: Vec<PrivateCache>,
    llc: SharedCache,
    /// Per-application way masks; `None` while the LLC is shared.
    masks: Option<Vec<u64>>,
    memory: MemoryController,
    prefetchers: Vec<StridePrefetcher>,
    monitors: Vec<UtilityMonitor>,
    partition: PartitionState,
    limits: PartitionLimits,
    stats: Vec<AppMemStats>,
    timing_violations: u64,
}

impl MemorySystem {
    pub fn new(cfg: &SimConfig, apps: usize) -> Result<Self> {
        cfg.validate()?;
        if apps == 0 || apps > usize::from(u16::MAX) {
            return Err(Error::InvalidConfig(format!("unsupported core count {apps}")));
        }
        let cycle = cfg.cycle_ps();
        let cyc = |c: u32| Ps::from(c) * cycle;
        let l1_hit = cyc(cfg.l1.tag_latency + cfg.l1.data_latency).max(cycle);
        let past_l2 = l1_hit + cyc(cfg.l2.tag_latency);
        let at_llc = past_l2 + cyc(cfg.noc_latency_cycles + cfg.llc.tag_latency);
        let lat = Latencies {
            l1_hit,
            l2_hit: past_l2 + cyc(cfg.l2.data_latency),
            llc_hit: at_llc + cyc(cfg.llc.data_latency),
            to_memory: at_llc,
        };
        let llc_sets = cfg.llc.sets();
        let llc_ways = cfg.llc.ways as usize;
        Ok(Self {
            apps,
            line_shift: cfg.line_bytes().trailing_zeros(),
            lat,
            l1: (0..apps)
                .map(|_| PrivateCache::new(cfg.l1.sets(), cfg.l1.ways as usize))
                .collect(),
            l2: (0..apps)
                .map(|_| PrivateCache::new(cfg.l2.sets(), cfg.l2.ways as usize))
                .collect(),
            llc: SharedCache::new(llc_sets, llc_ways),
            masks: None,
            memory: MemoryController::new(cfg, apps),
            prefetchers: (0..apps).map(|_| StridePrefetcher::new(&cfg.prefetch)).collect(),
            monitors: (0..apps)
                .map(|_| UtilityMonitor::new(llc_sets, llc_ways, cfg.atd_sampling as usize))
                .collect(),
            partition: PartitionState::unpartitioned(apps, cfg.prefetch.enabled_by_default),
            limits: PartitionLimits {
                apps,
                total_ways: cfg.llc.ways,
                min_ways: cfg.cbp.min_ways,
                total_gbps: cfg.memory.total_gbps(),
                min_gbps: cfg.cbp.min_bandwidth_gbps,
            },
            stats: vec![AppMemStats::default(); apps],
            timing_violations: 0,
        })
    }

    pub fn apps(&self) -> usize {
        self.apps
    }

    pub fn partition(&self) -> &PartitionState {
        &self.partition
    }

    pub fn limits(&self) -> &PartitionLimits {
        &self.limits
    }

    pub fn stats(&self, app: AppId) -> &AppMemStats {
        &self.stats[app]
    }

    pub fn prefetch_stats(&self, app: AppId) -> &PrefetchStats {
        &self.prefetchers[app].stats
    }

    pub fn monitor(&self, app: AppId) -> &UtilityMonitor {
        &self.monitors[app]
    }

    pub fn monitor_mut(&mut self, app: AppId) -> &mut UtilityMonitor {
        &mut self.monitors[app]
    }

    pub fn memory(&self) -> &MemoryController {
        &self.memory
    }

    pub fn memory_mut(&mut self) -> &mut MemoryController {
        &mut self.memory
    }

    pub fn llc(&self) -> &SharedCache {
        &self.llc
    }

    pub fn way_masks(&self) -> Option<&[u64]> {
        self.masks.as_deref()
    }

    /// Memory requests whose timing did not decompose; always zero unless the
    /// controller is broken.
    pub fn timing_violations(&self) -> u64 {
        self.timing_violations
    }

    fn line_of(&self, app: AppId, address: u64) -> Result<u64> {
        if address >> ADDRESS_BITS != 0 {
            return Err(Error::AddressOutOfRange { app, address });
        }
        Ok(((app as u64) << ADDRESS_BITS | address) >> self.line_shift)
    }

    fn mask_of(&self, app: AppId) -> u64 {
        match &self.masks {
            Some(m) => m[app],
            None => u64::MAX >> (64 - self.llc.ways()),
        }
    }

    fn fetch(&mut self, app: AppId, line: u64, when: Ps) -> MemTiming {
        let t = self.memory.service(app, line, when);
        if !t.is_consistent() {
            self.timing_violations += 1;
        }
        self.stats[app].mem_requests += 1;
        t
    }

    /// Drops a line from an L2, keeping the L1 inclusive and the prefetch
    /// accounting up to date.
    fn on_l2_victim(&mut self, core: AppId, victim: Line) {
        self.l1[core].invalidate(victim.tag);
        if victim.prefetched {
            self.prefetchers[core]
                .stats
                .account(PrefetchEvent::EvictedUnused);
        }
    }

    fn on_llc_victim(&mut self, victim: Line) {
        let core = victim.owner as usize;
        if let Some(l2_line) = self.l2[core].invalidate(victim.tag) {
            self.on_l2_victim(core, l2_line);
        }
        self.l1[core].invalidate(victim.tag);
    }

    fn fill_llc(&mut self, app: AppId, line: u64, ready_at: Ps) {
        let mask = self.mask_of(app);
        if let Some(v) = self.llc.fill(line, app as u16, mask, ready_at) {
            self.on_llc_victim(v);
        }
    }

    fn fill_l2(&mut self, app: AppId, line: u64, prefetched: bool, ready_at: Ps) {
        if let Some(v) = self.l2[app].fill(line, prefetched, ready_at) {
            self.on_l2_victim(app, v);
        }
    }

    /// One demand access issued by `app` at time `now`. Prefetches triggered
    /// by the access are issued before returning.
    pub fn access(&mut self, app: AppId, address: u64, _kind: AccessKind, now: Ps) -> Result<AccessResult> {
        let line = self.line_of(app, address)?;
        self.stats[app].accesses += 1;

        if self.l1[app].touch(line).is_some() {
            self.stats[app].l1_hits += 1;
            return Ok(AccessResult {
                level: HitLevel::L1,
                latency: self.lat.l1_hit,
                mem: None,
            });
        }

        let prefetch_on = self.partition.prefetch[app];
        let candidates = if prefetch_on {
            self.prefetchers[app].observe(address & !((1u64 << self.line_shift) - 1))
        } else {
            Default::default()
        };

        let result = if let Some(l2_line) = self.l2[app].touch(line) {
            let ready = l2_line.ready_at;
            let was_prefetched = std::mem::take(&mut l2_line.prefetched);
            if was_prefetched {
                self.prefetchers[app].stats.account(PrefetchEvent::DemandHit);
            }
            self.stats[app].l2_hits += 1;
            self.l1[app].fill(line, false, 0);
            AccessResult {
                level: HitLevel::L2,
                latency: self.lat.l2_hit.max(ready.saturating_sub(now)),
                mem: None,
            }
        } else {
            let set = self.llc.set_of(line);
            self.monitors[app].observe(set, line);
            let result = if let Some(llc_line) = self.llc.touch(line) {
                let ready = llc_line.ready_at;
                self.stats[app].llc_hits += 1;
                AccessResult {
                    level: HitLevel::Llc,
                    latency: self.lat.llc_hit.max(ready.saturating_sub(now)),
                    mem: None,
                }
            } else {
                self.stats[app].llc_misses += 1;
                let t = self.fetch(app, line, now + self.lat.to_memory);
                let latency = self.lat.to_memory + t.total;
                self.fill_llc(app, line, now + latency);
                AccessResult {
                    level: HitLevel::Mem,
                    latency,
                    mem: Some(t),
                }
            };
            self.fill_l2(app, line, false, now + result.latency);
            self.l1[app].fill(line, false, 0);
            result
        };

        for target in candidates {
            self.prefetch(app, target, now)?;
        }
        Ok(result)
    }

    /// Issues a prefetch of `address` into the L2 and LLC of `app`. Returns
    /// `None` when the line is already in the L2 (nothing is issued).
    pub fn prefetch(&mut self, app: AppId, address: u64, now: Ps) -> Result<Option<HitLevel>> {
        let line = self.line_of(app, address)?;
        if self.l2[app].contains(line) {
            return Ok(None);
        }
        self.prefetchers[app].stats.account(PrefetchEvent::Issued);
        let (level, ready) = if let Some(l) = self.llc.touch(line) {
            (HitLevel::Llc, l.ready_at.max(now + self.lat.llc_hit))
        } else {
            let t = self.fetch(app, line, now + self.lat.to_memory);
            let ready = now + self.lat.to_memory + t.total;
            self.fill_llc(app, line, ready);
            (HitLevel::Mem, ready)
        };
        self.fill_l2(app, line, true, ready);
        Ok(Some(level))
    }

    /// Installs a new partition. Lines in ways an application no longer owns
    /// are invalidated immediately, together with their L1/L2 copies.
    pub fn apply_partition(&mut self, new: PartitionState) -> Result<RepartitionReport> {
        new.validate(&self.limits)?;
        let mut report = RepartitionReport {
            invalidated: vec![0; self.apps],
        };
        match &new.ways {
            Some(counts) => {
                let masks = partition::assign_way_masks(self.masks.as_deref(), counts, self.limits.total_ways);
                for victim in self.llc.evict_outside(&masks) {
                    report.invalidated[victim.owner as usize] += 1;
                    self.on_llc_victim(victim);
                }
                self.masks = Some(masks);
            }
            None => self.masks = None,
        }
        self.memory.set_shares(new.bandwidth.as_deref());
        self.partition = new;
        Ok(report)
    }

    /// Sets per-application bandwidth shares without the conservation check.
    /// Used to model a single application running with a fraction of the
    /// machine's bandwidth.
    pub(crate) fn force_bandwidth_shares(&mut self, shares: &[f64]) {
        self.memory.set_shares(Some(shares));
        self.partition.bandwidth = Some(shares.to_vec());
    }

    /// Scans every cache and checks inclusion, way containment, partition
    /// limits and timing decomposition.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for core in 0..self.apps {
            for l in self.l1[core].resident() {
                if !self.l2[core].contains(l.tag) {
                    return Err(format!("core {core}: L1 line {:#x} missing from L2", l.tag));
                }
            }
            for l in self.l2[core].resident() {
                if !self.llc.contains(l.tag) {
                    return Err(format!("core {core}: L2 line {:#x} missing from LLC", l.tag));
                }
            }
        }
        if let Some(masks) = &self.masks {
            for (i, a) in masks.iter().enumerate() {
                if masks[i + 1..].iter().any(|b| a & b != 0) {
                    return Err(format!("app {i} shares ways with another app"));
                }
            }
            for (way, l) in self.llc.resident() {
                if masks[l.owner as usize] >> way & 1 == 0 {
                    return Err(format!(
                        "LLC line {:#x} of app {} sits in foreign way {way}",
                        l.tag, l.owner
                    ));
                }
            }
        }
        self.partition
            .validate(&self.limits)
            .map_err(|e| e.to_string())?;
        if self.timing_violations != 0 {
            return Err(format!("{} memory timings did not decompose", self.timing_violations));
        }
        Ok(())
    }

    /// Resident LLC lines per application and way; used by tests to predict
    /// repartition costs.
    pub fn resident_lines_in(&self, app: AppId, way_mask: u64) -> u64 {
        self.llc
            .resident()
            .filter(|(w, l)| l.owner as usize == app && way_mask >> w & 1 == 1)
            .count() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SimConfig {
        let mut c = SimConfig::default();
        c.l1.size_bytes = 1024;
        c.l1.ways = 2;
        c.l2.size_bytes = 4096;
        c.l2.ways = 4;
        c.llc.size_bytes = 64 * 1024;
        c.llc.ways = 16;
        c.cbp.min_ways = 1;
        c
    }

    fn load(ms: &mut MemorySystem, app: AppId, addr: u64, now: Ps) -> AccessResult {
        ms.access(app, addr, AccessKind::Load, now).unwrap()
    }

    #[test]
    fn repeated_address_hits_l1() {
        let mut ms = MemorySystem::new(&cfg(), 1).unwrap();
        let first = load(&mut ms, 0, 0x1000, 0);
        assert_eq!(first.level, HitLevel::Mem);
        let mem = first.mem.unwrap();
        assert_eq!(mem.base, 80_000);
        let second = load(&mut ms, 0, 0x1008, 1_000_000);
        assert_eq!(second.level, HitLevel::L1);
        assert_eq!(second.latency, 250);
    }

    #[test]
    fn latency_ladder() {
        let mut ms = MemorySystem::new(&cfg(), 1).unwrap();
        let mem = load(&mut ms, 0, 0, 0);
        // 1 + 2 + 8 + 2 cycles on chip, then 80 ns
        assert_eq!(mem.latency, 13 * 250 + 80_000);
        // push the line out of L1 (16 sets x 2 ways) but not L2
        for i in 1..=2 {
            load(&mut ms, 0, i * 1024, 0);
        }
        let l2 = load(&mut ms, 0, 0, 10_000_000);
        assert_eq!(l2.level, HitLevel::L2);
        assert_eq!(l2.latency, 9 * 250);
    }

    #[test]
    fn streaming_in_four_ways_misses_everything() {
        let mut c = cfg();
        c.cbp.min_ways = 4;
        let mut ms = MemorySystem::new(&c, 2).unwrap();
        ms.apply_partition(PartitionState {
            ways: Some(vec![4, 12]),
            bandwidth: None,
            prefetch: vec![false, false],
        })
        .unwrap();
        let sets = c.llc.sets() as u64;
        // 8 x sets distinct lines, twice: capacity is 4 x sets
        let n = 8 * sets;
        for round in 0..2 {
            for i in 0..n {
                let r = load(&mut ms, 0, i * 64, 0);
                if round == 1 {
                    assert_eq!(r.level, HitLevel::Mem);
                }
            }
        }
        ms.check_invariants().unwrap();
    }

    #[test]
    fn llc_eviction_back_invalidates() {
        let mut c = cfg();
        c.llc.size_bytes = 16 * 64; // one set of 16 ways
        let mut ms = MemorySystem::new(&c, 1).unwrap();
        ms.apply_partition(PartitionState {
            ways: Some(vec![1]),
            bandwidth: None,
            prefetch: vec![false],
        })
        .unwrap();
        load(&mut ms, 0, 0, 0);
        // a different line evicts it from the single LLC way
        load(&mut ms, 0, 64, 0);
        ms.check_invariants().unwrap();
        assert_eq!(load(&mut ms, 0, 0, 0).level, HitLevel::Mem);
    }

    #[test]
    fn out_of_range_address_is_an_error() {
        let mut ms = MemorySystem::new(&cfg(), 1).unwrap();
        assert!(matches!(
            ms.access(0, 1 << ADDRESS_BITS, AccessKind::Load, 0),
            Err(Error::AddressOutOfRange { .. })
        ));
    }

    fn fill_both(ms: &mut MemorySystem, lines: u64) {
        for i in 0..lines {
            load(ms, 0, i * 64, 0);
            load(ms, 1, i * 64, 0);
        }
    }

    #[test]
    fn identical_partition_invalidates_nothing() {
        let mut ms = MemorySystem::new(&cfg(), 2).unwrap();
        let p = PartitionState {
            ways: Some(vec![8, 8]),
            bandwidth: Some(vec![8.0, 8.0]),
            prefetch: vec![false, true],
        };
        ms.apply_partition(p.clone()).unwrap();
        fill_both(&mut ms, 2000);
        assert_eq!(ms.apply_partition(p).unwrap().total(), 0);
    }

    #[test]
    fn shrinking_invalidates_resident_lines_of_lost_ways() {
        let mut ms = MemorySystem::new(&cfg(), 2).unwrap();
        ms.apply_partition(PartitionState {
            ways: Some(vec![8, 8]),
            bandwidth: None,
            prefetch: vec![false, false],
        })
        .unwrap();
        fill_both(&mut ms, 2000);
        let old = ms.way_masks().unwrap().to_vec();
        let new_masks = partition::assign_way_masks(Some(&old), &[4, 12], 16);
        let expected = ms.resident_lines_in(0, old[0] & !new_masks[0]);
        assert!(expected > 0);
        let report = ms
            .apply_partition(PartitionState {
                ways: Some(vec![4, 12]),
                bandwidth: None,
                prefetch: vec![false, false],
            })
            .unwrap();
        assert_eq!(report.invalidated, vec![expected, 0]);
        ms.check_invariants().unwrap();
    }

    #[test]
    fn growing_invalidates_nothing() {
        let mut ms = MemorySystem::new(&cfg(), 2).unwrap();
        ms.apply_partition(PartitionState {
            ways: Some(vec![4, 4]),
            bandwidth: None,
            prefetch: vec![false, false],
        })
        .unwrap();
        fill_both(&mut ms, 2000);
        let report = ms
            .apply_partition(PartitionState {
                ways: Some(vec![6, 10]),
                bandwidth: None,
                prefetch: vec![false, false],
            })
            .unwrap();
        assert_eq!(report.total(), 0);
    }

    #[test]
    fn invalid_partition_is_rejected_and_old_state_kept() {
        let mut ms = MemorySystem::new(&cfg(), 2).unwrap();
        let good = PartitionState {
            ways: Some(vec![8, 8]),
            bandwidth: None,
            prefetch: vec![false, false],
        };
        ms.apply_partition(good.clone()).unwrap();
        let bad = PartitionState {
            ways: Some(vec![12, 12]),
            ..good.clone()
        };
        assert!(ms.apply_partition(bad).is_err());
        assert_eq!(ms.partition(), &good);
    }

    #[test]
    fn invalidated_lines_refetch_from_memory() {
        let mut ms = MemorySystem::new(&cfg(), 2).unwrap();
        fill_both(&mut ms, 16);
        let before = ms.stats(1).mem_requests;
        // app 1's lines sit in way 1, which now belongs to app 0
        let r = ms
            .apply_partition(PartitionState {
                ways: Some(vec![15, 1]),
                bandwidth: None,
                prefetch: vec![false, false],
            })
            .unwrap();
        assert_eq!(r.invalidated, vec![0, 16]);
        for i in 0..16 {
            load(&mut ms, 1, i * 64, 0);
        }
        assert_eq!(ms.stats(1).mem_requests, before + 16);
        ms.check_invariants().unwrap();
    }

    #[test]
    fn prefetched_lines_are_accounted_once() {
        let mut ms = MemorySystem::new(&cfg(), 1).unwrap();
        ms.apply_partition(PartitionState::unpartitioned(1, true)).unwrap();
        let mut now = 0;
        for i in 0..64u64 {
            let r = load(&mut ms, 0, i * 64, now);
            now += r.latency + 250;
        }
        let s = *ms.prefetch_stats(0);
        assert!(s.issued > 0);
        assert!(s.useful > 0);
        assert!(s.useful + s.evicted_unused <= s.issued);
        ms.check_invariants().unwrap();
    }

    #[test]
    fn disabled_prefetcher_stays_silent() {
        let mut ms = MemorySystem::new(&cfg(), 1).unwrap();
        for i in 0..256u64 {
            load(&mut ms, 0, i * 64, 0);
        }
        assert_eq!(*ms.prefetch_stats(0), PrefetchStats::default());
    }
}
