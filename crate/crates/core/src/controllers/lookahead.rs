//! Cache-way allocation with the Lookahead algorithm.
//!
//! Every application first receives `min_ways`. While ways remain, each
//! application's best next step is the way count `b` above its current
//! allocation that maximises the marginal utility per way,
//! `(misses(current) - misses(b)) / (b - current)`; the application with the
//! highest such utility is granted its `b`. Ties go to the lowest application
//! id, and within one application to the smallest `b`. Allocation stops when
//! all ways are handed out or no application can reduce its misses any
//! further; leftover ways are then dealt round-robin.

use crate::monitor::MissCurve;
use crate::{AppId, Error, Result};

/// Ways per application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CachePlan(pub Vec<u32>);

impl CachePlan {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Predicted misses of the plan on the given curves.
    pub fn predicted_misses(&self, curves: &[MissCurve]) -> u64 {
        self.0
            .iter()
            .zip(curves)
            .map(|(&w, c)| c.misses(w as usize))
            .sum()
    }
}

/// One greedy step: `app` grew by `ways` at `gain / ways` misses per way.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grant {
    pub app: AppId,
    pub ways: u32,
    pub gain: u64,
}

/// A plan plus the greedy steps that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheAllocation {
    pub plan: CachePlan,
    pub grants: Vec<Grant>,
    /// Ways dealt round-robin after utility ran out.
    pub leftover: u32,
}

/// Compares utilities `a_gain / a_ways` and `b_gain / b_ways` exactly.
fn utility_gt(a_gain: u64, a_ways: u32, b_gain: u64, b_ways: u32) -> bool {
    u128::from(a_gain) * u128::from(b_ways) > u128::from(b_gain) * u128::from(a_ways)
}

/// Best step for one application: `(gain, ways)` with maximal utility per way
/// and the smallest way count among ties.
pub(crate) fn best_step(curve: &MissCurve, current: u32, budget: u32) -> Option<(u64, u32)> {
    let base = curve.misses(current as usize);
    let mut best: Option<(u64, u32)> = None;
    for b in 1..=budget {
        let gain = base.saturating_sub(curve.misses((current + b) as usize));
        match best {
            Some((g, w)) if !utility_gt(gain, b, g, w) => {}
            _ => best = Some((gain, b)),
        }
    }
    best
}

fn check_budget(apps: usize, total_ways: u32, min_ways: u32) -> Result<u32> {
    let needed = apps as u64 * u64::from(min_ways);
    if needed > u64::from(total_ways) || apps == 0 {
        return Err(Error::InsufficientWays {
            apps,
            ways: total_ways,
            min_ways,
            needed,
        });
    }
    Ok(total_ways - needed as u32)
}

/// Lookahead over the applications selected by `eligible`; the others stay at
/// `min_ways`. Leftover ways go round-robin over the eligible applications
/// (or over everyone if none is eligible).
fn lookahead(curves: &[MissCurve], total_ways: u32, min_ways: u32, eligible: &[bool]) -> Result<CacheAllocation> {
    let mut balance = check_budget(curves.len(), total_ways, min_ways)?;
    let mut alloc = vec![min_ways; curves.len()];
    let mut grants = Vec::new();

    while balance > 0 {
        let mut winner: Option<(AppId, u64, u32)> = None;
        for (app, curve) in curves.iter().enumerate() {
            if !eligible[app] {
                continue;
            }
            let Some((gain, ways)) = best_step(curve, alloc[app], balance) else {
                continue;
            };
            match winner {
                Some((_, g, w)) if !utility_gt(gain, ways, g, w) => {}
                _ => winner = Some((app, gain, ways)),
            }
        }
        match winner {
            Some((app, gain, ways)) if gain > 0 => {
                alloc[app] += ways;
                balance -= ways;
                grants.push(Grant { app, ways, gain });
            }
            _ => break,
        }
    }

    let leftover = balance;
    let pool: Vec<AppId> = if eligible.iter().any(|&e| e) {
        (0..curves.len()).filter(|&a| eligible[a]).collect()
    } else {
        (0..curves.len()).collect()
    };
    for i in 0..balance as usize {
        alloc[pool[i % pool.len()]] += 1;
    }

    Ok(CacheAllocation {
        plan: CachePlan(alloc),
        grants,
        leftover,
    })
}

/// Lookahead allocation of `total_ways` LLC ways.
pub fn allocate_cache(curves: &[MissCurve], total_ways: u32, min_ways: u32) -> Result<CachePlan> {
    allocate_cache_traced(curves, total_ways, min_ways).map(|a| a.plan)
}

/// [`allocate_cache`] that also reports the greedy steps taken.
pub fn allocate_cache_traced(curves: &[MissCurve], total_ways: u32, min_ways: u32) -> Result<CacheAllocation> {
    lookahead(curves, total_ways, min_ways, &vec![true; curves.len()])
}

/// Prefetch-aware partitioning: prefetch-friendly applications are pinned at
/// `min_ways` and Lookahead splits the rest among the others.
pub fn allocate_cache_cppf(
    curves: &[MissCurve],
    prefetch_friendly: &[bool],
    total_ways: u32,
    min_ways: u32,
) -> Result<CachePlan> {
    let eligible: Vec<bool> = prefetch_friendly.iter().map(|&f| !f).collect();
    lookahead(curves, total_ways, min_ways, &eligible).map(|a| a.plan)
}

/// `total_ways` split as evenly as possible, remainder to the lowest ids.
pub fn equal_ways(apps: usize, total_ways: u32) -> CachePlan {
    let n = apps as u32;
    CachePlan(
        (0..n)
            .map(|i| total_ways / n + u32::from(i < total_ways % n))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(v: &[u64]) -> MissCurve {
        MissCurve::from_ways(v)
    }

    #[test]
    fn flat_curves_split_evenly() {
        let c = vec![curve(&[5; 16]), curve(&[5; 16])];
        let a = allocate_cache_traced(&c, 16, 1).unwrap();
        assert_eq!(a.plan.0, vec![8, 8]);
        assert_eq!(a.leftover, 14);
    }

    #[test]
    fn single_app_gets_everything() {
        let c = vec![curve(&[9, 8, 7, 6, 5, 4, 3, 2])];
        assert_eq!(allocate_cache(&c, 8, 4).unwrap().0, vec![8]);
        let flat = vec![curve(&[3; 8])];
        assert_eq!(allocate_cache(&flat, 8, 4).unwrap().0, vec![8]);
    }

    #[test]
    fn worked_example_matches_enumeration() {
        let a = curve(&[10, 2, 2, 2, 2, 2, 2, 2]);
        let b = curve(&[10, 9, 8, 7, 6, 5, 4, 3]);
        let curves = vec![a, b];
        let plan = allocate_cache(&curves, 8, 1).unwrap();
        let best = (1..=7u32)
            .map(|wa| curves[0].misses(wa as usize) + curves[1].misses(8 - wa as usize))
            .min()
            .unwrap();
        assert_eq!(plan.predicted_misses(&curves), best);
        // frozen from the enumeration above
        assert_eq!(best, 7);
        assert_eq!(plan.0, vec![2, 6]);
    }

    #[test]
    fn lookahead_sees_past_plateaus() {
        // no gain from one more way, a big gain from three
        let a = curve(&[100, 100, 100, 10, 10, 10, 10, 10]);
        let b = curve(&[100, 90, 80, 70, 60, 50, 40, 30]);
        let plan = allocate_cache(&[a, b], 8, 1).unwrap();
        assert_eq!(plan.0[0], 4);
    }

    #[test]
    fn too_few_ways_is_an_error() {
        let c = vec![curve(&[1; 4]); 3];
        assert!(matches!(allocate_cache(&c, 8, 4), Err(Error::InsufficientWays { .. })));
    }

    #[test]
    fn cppf_cases() {
        let steep = curve(&[100, 80, 60, 40, 20, 10, 5, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        let curves = vec![steep.clone(), steep.clone()];
        // all friendly: everyone at min, leftover round-robin
        assert_eq!(allocate_cache_cppf(&curves, &[true, true], 16, 4).unwrap().0, vec![8, 8]);
        // none friendly: plain lookahead
        assert_eq!(
            allocate_cache_cppf(&curves, &[false, false], 16, 4).unwrap(),
            allocate_cache(&curves, 16, 4).unwrap()
        );
        // one friendly
        assert_eq!(allocate_cache_cppf(&curves, &[true, false], 16, 4).unwrap().0, vec![4, 12]);
        let flat = vec![curve(&[7; 16]), curve(&[7; 16])];
        assert_eq!(allocate_cache_cppf(&flat, &[false, true], 16, 4).unwrap().0, vec![12, 4]);
    }

    #[test]
    fn equal_split() {
        assert_eq!(equal_ways(4, 16).0, vec![4, 4, 4, 4]);
        assert_eq!(equal_ways(3, 16).0, vec![6, 5, 5]);
    }
}
