//! Per-core stride prefetcher attached at the L2.
//!
//! The prefetcher trains on L2 demand accesses (line addresses). A flow tracks
//! one page: an access in the same page as a flow's last address updates that
//! flow, anything else allocates a new flow, replacing the least recently used
//! one. Once a flow has seen the same non-zero stride `confidence_threshold`
//! times in a row it issues up to `degree` prefetches ahead of the access,
//! stopping at the page boundary.

use smallvec::SmallVec;

use crate::config::PrefetchConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StrideFlow {
    pub last_addr: u64,
    pub stride: i64,
    pub confidence: u8,
    pub lru_stamp: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PrefetchStats {
    pub issued: u64,
    /// Prefetched lines demand-hit before leaving the L2.
    pub useful: u64,
    /// Prefetched lines that left the L2 without a demand hit.
    pub evicted_unused: u64,
}

/// Lifetime events of a prefetched line, reported by the cache that holds it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrefetchEvent {
    Issued,
    DemandHit,
    EvictedUnused,
}

impl PrefetchStats {
    pub fn account(&mut self, event: PrefetchEvent) -> &Self {
        match event {
            PrefetchEvent::Issued => self.issued += 1,
            PrefetchEvent::DemandHit => self.useful += 1,
            PrefetchEvent::EvictedUnused => self.evicted_unused += 1,
        }
        self
    }

    /// Prefetched lines still resident and not yet used.
    pub fn outstanding(&self) -> u64 {
        self.issued - self.useful - self.evicted_unused
    }
}

pub type PrefetchCandidates = SmallVec<[u64; 8]>;

#[derive(Clone, Debug)]
pub struct StridePrefetcher {
    cfg: PrefetchConfig,
    flows: Vec<Option<StrideFlow>>,
    clock: u64,
    pub stats: PrefetchStats,
}

impl StridePrefetcher {
    pub fn new(cfg: &PrefetchConfig) -> Self {
        Self {
            flows: vec![None; cfg.flows_per_core as usize],
            cfg: cfg.clone(),
            clock: 0,
            stats: PrefetchStats::default(),
        }
    }

    pub fn flows(&self) -> impl Iterator<Item = &StrideFlow> {
        self.flows.iter().flatten()
    }

    /// Trains on a demand access and returns the addresses to prefetch.
    pub fn observe(&mut self, address: u64) -> PrefetchCandidates {
        self.clock += 1;
        let page_bytes = self.cfg.page_bytes;
        let page = address / page_bytes;
        let mut out = PrefetchCandidates::new();

        let hit = self
            .flows
            .iter_mut()
            .flatten()
            .find(|f| f.last_addr / page_bytes == page);
        let Some(flow) = hit else {
            let slot = self
                .flows
                .iter()
                .position(Option::is_none)
                .unwrap_or_else(|| {
                    self.flows
                        .iter()
                        .enumerate()
                        .min_by_key(|(_, f)| f.map_or(0, |f| f.lru_stamp))
                        .map(|(i, _)| i)
                        .unwrap()
                });
            self.flows[slot] = Some(StrideFlow {
                last_addr: address,
                stride: 0,
                confidence: 0,
                lru_stamp: self.clock,
            });
            return out;
        };

        flow.lru_stamp = self.clock;
        let delta = address.wrapping_sub(flow.last_addr) as i64;
        if delta == 0 {
            return out;
        }
        if delta == flow.stride {
            flow.confidence = (flow.confidence + 1).min(self.cfg.max_confidence);
        } else {
            flow.stride = delta;
            flow.confidence = 1;
        }
        flow.last_addr = address;

        if flow.confidence >= self.cfg.confidence_threshold {
            for k in 1..=i64::from(self.cfg.degree) {
                let Some(target) = (address as i64).checked_add(flow.stride * k) else {
                    break;
                };
                if target < 0 || target as u64 / page_bytes != page {
                    break;
                }
                out.push(target as u64);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn pf() -> StridePrefetcher {
        StridePrefetcher::new(&PrefetchConfig::default())
    }

    #[test]
    fn confirms_after_two_equal_strides() {
        let mut p = pf();
        assert!(p.observe(0).is_empty());
        assert!(p.observe(64).is_empty());
        assert_eq!(p.observe(128).as_slice(), &[192, 256, 320, 384]);
    }

    #[test]
    fn stops_at_page_boundary() {
        let mut p = pf();
        p.observe(3840);
        p.observe(3904);
        // trigger at 3968: only 4032 stays in the page
        assert_eq!(p.observe(3968).as_slice(), &[4032]);
        // trigger at the last line of the page: nothing
        assert!(p.observe(4032).is_empty());
    }

    #[test]
    fn negative_strides_stay_in_page() {
        let mut p = pf();
        p.observe(8192 + 512);
        p.observe(8192 + 384);
        assert_eq!(p.observe(8192 + 256).as_slice(), &[8192 + 128, 8192]);
    }

    #[test]
    fn stride_change_resets_confidence() {
        let mut p = pf();
        p.observe(0);
        p.observe(64);
        p.observe(128);
        assert!(p.observe(320).is_empty());
        assert_eq!(p.observe(512).len(), 4);
    }

    #[test]
    fn random_addresses_rarely_trigger() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut p = pf();
        let issued: usize = (0..100_000)
            .map(|_| p.observe(rng.gen_range(0..1u64 << 32) & !63).len())
            .sum();
        assert_eq!(issued, 0);
    }

    #[test]
    fn flow_table_is_bounded_and_lru() {
        let mut p = pf();
        for page in 0..20u64 {
            p.observe(page * 4096);
        }
        assert_eq!(p.flows().count(), 8);
        let pages: Vec<u64> = p.flows().map(|f| f.last_addr / 4096).collect();
        assert!(pages.iter().all(|&pg| pg >= 12));
    }

    #[test]
    fn interleaved_streams_keep_their_flows() {
        let mut p = pf();
        let mut total = 0;
        for i in 0..32u64 {
            total += p.observe(i * 64).len();
            total += p.observe(1 << 20 | (i * 128)).len();
        }
        assert!(total > 0);
        assert_eq!(p.flows().count(), 2);
    }

    #[test]
    fn usefulness_accounting() {
        let mut s = PrefetchStats::default();
        s.account(PrefetchEvent::Issued);
        s.account(PrefetchEvent::DemandHit);
        assert_eq!((s.useful, s.evicted_unused), (1, 0));
        s.account(PrefetchEvent::Issued);
        s.account(PrefetchEvent::EvictedUnused);
        assert_eq!((s.useful, s.evicted_unused, s.outstanding()), (1, 1, 0));
    }
}
