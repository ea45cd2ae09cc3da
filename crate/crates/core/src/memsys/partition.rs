use crate::{AppId, Error, Result};

/// Resource allocation in force: LLC ways, bandwidth shares and prefetcher
/// enables, indexed by application. `None` means the resource is
/// unpartitioned (shared LLC / no delay injection).
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionState {
    pub ways: Option<Vec<u32>>,
    /// GB/s per application.
    pub bandwidth: Option<Vec<f64>>,
    pub prefetch: Vec<bool>,
}

/// Limits a [`PartitionState`] must respect.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionLimits {
    pub apps: usize,
    pub total_ways: u32,
    pub min_ways: u32,
    pub total_gbps: f64,
    pub min_gbps: f64,
}

/// Bandwidth shares must sum to the total within this many GB/s.
pub const BANDWIDTH_QUANTUM: f64 = 1e-6;

impl PartitionState {
    pub fn unpartitioned(apps: usize, prefetch: bool) -> Self {
        Self {
            ways: None,
            bandwidth: None,
            prefetch: vec![prefetch; apps],
        }
    }

    pub fn validate(&self, limits: &PartitionLimits) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPartition(m));
        if self.prefetch.len() != limits.apps {
            return bad(format!(
                "prefetch plan covers {} apps, expected {}",
                self.prefetch.len(),
                limits.apps
            ));
        }
        if let Some(ways) = &self.ways {
            if ways.len() != limits.apps {
                return bad(format!("way plan covers {} apps", ways.len()));
            }
            if let Some(app) = ways.iter().position(|&w| w < limits.min_ways) {
                return bad(format!("app {app} gets {} ways < min_ways", ways[app]));
            }
            let sum: u64 = ways.iter().map(|&w| u64::from(w)).sum();
            if sum > u64::from(limits.total_ways) {
                return bad(format!("{sum} ways assigned, only {} exist", limits.total_ways));
            }
        }
        if let Some(bw) = &self.bandwidth {
            if bw.len() != limits.apps {
                return bad(format!("bandwidth plan covers {} apps", bw.len()));
            }
            if let Some(app) = bw
                .iter()
                .position(|&b| !(b >= limits.min_gbps - BANDWIDTH_QUANTUM) || !(b > 0.0))
            {
                return bad(format!("app {app} gets {} GB/s", bw[app]));
            }
            let sum: f64 = bw.iter().sum();
            if (sum - limits.total_gbps).abs() > BANDWIDTH_QUANTUM {
                return bad(format!(
                    "bandwidth shares sum to {sum}, expected {}",
                    limits.total_gbps
                ));
            }
        }
        Ok(())
    }

    /// Ways usable by `app` (all of them when unpartitioned).
    pub fn ways_of(&self, app: AppId, total_ways: u32) -> u32 {
        self.ways.as_ref().map_or(total_ways, |w| w[app])
    }

    /// Bandwidth share of `app` (the whole bandwidth when unpartitioned).
    pub fn bandwidth_of(&self, app: AppId, total_gbps: f64) -> f64 {
        self.bandwidth.as_ref().map_or(total_gbps, |b| b[app])
    }
}

/// Lines invalidated by one repartitioning, per application.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RepartitionReport {
    pub invalidated: Vec<u64>,
}

impl RepartitionReport {
    pub fn total(&self) -> u64 {
        self.invalidated.iter().sum()
    }
}

/// Turns way counts into way masks, keeping as many of each application's
/// current ways as its new count allows so that growing never loses lines.
/// `current == None` means the LLC is currently shared; ways are then handed
/// out as contiguous ranges in application order.
pub(crate) fn assign_way_masks(current: Option<&[u64]>, counts: &[u32], total_ways: u32) -> Vec<u64> {
    let all = if total_ways == 64 {
        u64::MAX
    } else {
        (1u64 << total_ways) - 1
    };
    let mut masks = vec![0u64; counts.len()];
    if let Some(current) = current {
        for (app, (&old, &want)) in current.iter().zip(counts).enumerate() {
            masks[app] = lowest_bits(old, want);
        }
    }
    let mut free = all & !masks.iter().fold(0, |acc, m| acc | m);
    for (app, &want) in counts.iter().enumerate() {
        let need = want - masks[app].count_ones();
        let grant = lowest_bits(free, need);
        masks[app] |= grant;
        free &= !grant;
    }
    masks
}

fn lowest_bits(mut mask: u64, n: u32) -> u64 {
    let mut out = 0;
    for _ in 0..n {
        if mask == 0 {
            break;
        }
        let bit = mask & mask.wrapping_neg();
        out |= bit;
        mask &= !bit;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits() -> PartitionLimits {
        PartitionLimits {
            apps: 2,
            total_ways: 16,
            min_ways: 4,
            total_gbps: 8.0,
            min_gbps: 1.0,
        }
    }

    #[test]
    fn validation() {
        let ok = PartitionState {
            ways: Some(vec![8, 8]),
            bandwidth: Some(vec![6.5, 1.5]),
            prefetch: vec![true, false],
        };
        ok.validate(&limits()).unwrap();
        let mut too_few = ok.clone();
        too_few.ways = Some(vec![2, 14]);
        assert!(too_few.validate(&limits()).is_err());
        let mut too_many = ok.clone();
        too_many.ways = Some(vec![10, 8]);
        assert!(too_many.validate(&limits()).is_err());
        let mut bw = ok.clone();
        bw.bandwidth = Some(vec![4.0, 3.0]);
        assert!(bw.validate(&limits()).is_err());
        let mut low = ok;
        low.bandwidth = Some(vec![7.5, 0.5]);
        assert!(low.validate(&limits()).is_err());
        PartitionState::unpartitioned(2, false).validate(&limits()).unwrap();
    }

    #[test]
    fn masks_from_shared_are_contiguous() {
        let m = assign_way_masks(None, &[4, 12], 16);
        assert_eq!(m, vec![0x000F, 0xFFF0]);
    }

    #[test]
    fn growing_keeps_old_ways() {
        let old = assign_way_masks(None, &[4, 4], 16);
        let new = assign_way_masks(Some(&old), &[6, 10], 16);
        assert_eq!(new[0] & old[0], old[0]);
        assert_eq!(new[1] & old[1], old[1]);
        assert_eq!(new[0] & new[1], 0);
        assert_eq!(new[0].count_ones() + new[1].count_ones(), 16);
    }

    #[test]
    fn shrinking_loses_exactly_the_difference() {
        let old = assign_way_masks(None, &[8, 8], 16);
        let new = assign_way_masks(Some(&old), &[4, 12], 16);
        assert_eq!((old[0] & !new[0]).count_ones(), 4);
        assert_eq!(old[1] & !new[1], 0);
    }
}
