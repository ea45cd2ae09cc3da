//! Runtime measurement feeding the allocation controllers.
//!
//! * [`UtilityMonitor`]: a set-sampled auxiliary tag directory per
//!   application. Each sampled LLC set gets a fully associative LRU stack as
//!   deep as the LLC is wide; hits are counted per stack position, which
//!   yields the number of misses the application would see with any number
//!   of ways.
//! * [`QueueDelayMonitor`]: per-application queuing-delay totals.
//! * [`IpcSample`]: instructions and cycles over one sampling window.

use crate::{AppId, Error, Ps, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtdOutcome {
    /// The access was not to a sampled set.
    NotSampled,
    /// Hit at LRU-stack position `p` (1 = MRU).
    Hit(usize),
    Miss,
}

/// Misses as a function of allocated ways; `misses(0)` is the access count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MissCurve(Vec<u64>);

impl MissCurve {
    /// `misses[w]` for `w = 0..=W`. Panics if the curve is empty.
    pub fn new(misses: Vec<u64>) -> Self {
        assert!(!misses.is_empty(), "a miss curve needs misses(0)");
        Self(misses)
    }

    /// Builds a curve from `misses(1..=W)`, with `misses(0)` set to `misses(1)`.
    pub fn from_ways(misses_from_one: &[u64]) -> Self {
        let mut v = Vec::with_capacity(misses_from_one.len() + 1);
        v.push(misses_from_one.first().copied().unwrap_or(0));
        v.extend_from_slice(misses_from_one);
        Self(v)
    }

    pub fn misses(&self, ways: usize) -> u64 {
        self.0[ways.min(self.0.len() - 1)]
    }

    /// Largest way count covered by the curve.
    pub fn max_ways(&self) -> usize {
        self.0.len() - 1
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn is_non_increasing(&self) -> bool {
        self.0.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Clone, Debug)]
pub struct UtilityMonitor {
    ways: usize,
    sampling: usize,
    llc_sets: usize,
    /// One MRU-first tag stack per sampled set.
    stacks: Vec<Vec<u64>>,
    /// `hits[p - 1]` counts hits at stack position `p`.
    hits: Vec<u64>,
    accesses: u64,
    misses: u64,
}

impl UtilityMonitor {
    /// Shadows every `sampling`-th set of an LLC with `llc_sets` sets and
    /// `ways` ways. `sampling == 1` monitors every set.
    pub fn new(llc_sets: usize, ways: usize, sampling: usize) -> Self {
        let sampling = sampling.max(1);
        Self {
            ways,
            sampling,
            llc_sets,
            stacks: vec![Vec::with_capacity(ways); llc_sets.div_ceil(sampling)],
            hits: vec![0; ways],
            accesses: 0,
            misses: 0,
        }
    }

    pub fn is_sampled(&self, set: usize) -> bool {
        set.is_multiple_of(self.sampling)
    }

    /// Ratio between full-cache and sampled access counts.
    pub fn scale(&self) -> f64 {
        self.llc_sets as f64 / self.stacks.len() as f64
    }

    /// Records an access to line `tag` mapping to LLC set `set`.
    pub fn observe(&mut self, set: usize, tag: u64) -> AtdOutcome {
        if !self.is_sampled(set) {
            return AtdOutcome::NotSampled;
        }
        let stack = &mut self.stacks[set / self.sampling];
        self.accesses += 1;
        match stack.iter().position(|&t| t == tag) {
            Some(pos) => {
                self.hits[pos] += 1;
                stack.remove(pos);
                stack.insert(0, tag);
                AtdOutcome::Hit(pos + 1)
            }
            None => {
                self.misses += 1;
                if stack.len() == self.ways {
                    stack.pop();
                }
                stack.insert(0, tag);
                AtdOutcome::Miss
            }
        }
    }

    /// `misses(w) = accesses - sum(hits[p] for p <= w)`.
    pub fn miss_curve(&self) -> MissCurve {
        let mut curve = Vec::with_capacity(self.ways + 1);
        let mut remaining = self.accesses;
        curve.push(remaining);
        for &h in &self.hits {
            remaining -= h;
            curve.push(remaining);
        }
        MissCurve(curve)
    }

    /// Miss curve extrapolated to the whole cache.
    pub fn scaled_miss_curve(&self) -> Vec<f64> {
        let s = self.scale();
        self.miss_curve().0.iter().map(|&m| m as f64 * s).collect()
    }

    /// Halves every counter (floor). Tag stacks are kept.
    pub fn decay(&mut self) {
        for h in &mut self.hits {
            *h /= 2;
        }
        self.accesses /= 2;
        self.misses /= 2;
    }

    pub fn hit_counters(&self) -> &[u64] {
        &self.hits
    }

    pub fn accesses(&self) -> u64 {
        self.accesses
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn stack_depth(&self) -> usize {
        self.ways
    }

    pub fn set_counters(&mut self, hits: &[u64], accesses: u64, misses: u64) {
        self.hits.copy_from_slice(hits);
        self.accesses = accesses;
        self.misses = misses;
    }
}

/// Per-application queuing-delay totals, accumulated across reconfiguration
/// intervals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QueueDelayMonitor {
    totals: Vec<Ps>,
}

impl QueueDelayMonitor {
    pub fn new(apps: usize) -> Self {
        Self {
            totals: vec![0; apps],
        }
    }

    pub fn accumulate(&mut self, app: AppId, delay: Ps) -> Ps {
        self.totals[app] += delay;
        self.totals[app]
    }

    pub fn totals(&self) -> &[Ps] {
        &self.totals
    }

    /// Optional damping, used only when configured.
    pub fn halve(&mut self) {
        for t in &mut self.totals {
            *t /= 2;
        }
    }
}

/// Instructions retired and cycles elapsed for one application over one
/// sampling window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IpcSample {
    pub app: AppId,
    pub instructions: u64,
    pub cycles: u64,
    pub prefetch_on: bool,
}

impl IpcSample {
    pub fn new(app: AppId, instructions: u64, cycles: u64, prefetch_on: bool) -> Result<Self> {
        if cycles == 0 {
            return Err(Error::ZeroCycleWindow { app });
        }
        Ok(Self {
            app,
            instructions,
            cycles,
            prefetch_on,
        })
    }

    pub fn ipc(&self) -> f64 {
        self.instructions as f64 / self.cycles as f64
    }
}

/// Per-core progress counters at one instant; two snapshots delimit a window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CoreProgress {
    pub instructions: u64,
    pub cycles: u64,
}

/// Measures IPC between `start` and `end` under the given prefetch setting.
pub fn sample_ipc(
    app: AppId,
    start: CoreProgress,
    end: CoreProgress,
    prefetch_on: bool,
) -> Result<IpcSample> {
    IpcSample::new(
        app,
        end.instructions - start.instructions,
        end.cycles.saturating_sub(start.cycles),
        prefetch_on,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force LRU cache of `ways` lines for a single set.
    fn lru_misses(trace: &[u64], ways: usize) -> u64 {
        let mut stack: Vec<u64> = Vec::new();
        let mut misses = 0;
        for &t in trace {
            if let Some(p) = stack.iter().position(|&x| x == t) {
                stack.remove(p);
            } else {
                misses += 1;
                if stack.len() == ways {
                    stack.pop();
                }
            }
            stack.insert(0, t);
        }
        misses
    }

    #[test]
    fn cold_start_and_stack_positions() {
        let mut m = UtilityMonitor::new(1, 4, 1);
        assert_eq!(m.observe(0, 0xA), AtdOutcome::Miss);
        assert_eq!(m.stacks[0].len(), 1);
        assert_eq!(m.observe(0, 0xA), AtdOutcome::Hit(1));
        m.observe(0, 0xB);
        assert_eq!(m.observe(0, 0xA), AtdOutcome::Hit(2));
    }

    #[test]
    fn unsampled_sets_are_ignored() {
        let mut m = UtilityMonitor::new(64, 4, 32);
        assert_eq!(m.observe(5, 1), AtdOutcome::NotSampled);
        assert_eq!(m.observe(32, 1), AtdOutcome::Miss);
        assert_eq!(m.accesses(), 1);
        assert_eq!(m.scale(), 32.0);
    }

    #[test]
    fn empty_and_single_line_curves() {
        let m = UtilityMonitor::new(1, 8, 1);
        assert!(m.miss_curve().as_slice().iter().all(|&x| x == 0));
        let mut m = UtilityMonitor::new(1, 8, 1);
        for _ in 0..100 {
            m.observe(0, 7);
        }
        let c = m.miss_curve();
        assert!((1..=8).all(|w| c.misses(w) == 1));
    }

    #[test]
    fn three_line_loop_matches_brute_force() {
        let trace: Vec<u64> = (0..30).map(|i| i % 3).collect();
        let mut m = UtilityMonitor::new(1, 4, 1);
        for &t in &trace {
            m.observe(0, t);
        }
        let c = m.miss_curve();
        // frozen from lru_misses: 30 accesses of a 3-line loop
        assert_eq!(c.misses(1), 30);
        assert_eq!(c.misses(2), 30);
        assert_eq!(c.misses(3), 3);
        assert_eq!(c.misses(4), 3);
        for w in 1..=4 {
            assert_eq!(c.misses(w), lru_misses(&trace, w));
        }
    }

    #[test]
    fn decay_halves_with_floor() {
        let mut m = UtilityMonitor::new(1, 3, 1);
        m.set_counters(&[10, 4, 1], 20, 5);
        m.decay();
        assert_eq!(m.hit_counters(), &[5, 2, 0]);
        assert_eq!((m.accesses(), m.misses()), (10, 2));
        let mut z = UtilityMonitor::new(1, 3, 1);
        z.decay();
        assert_eq!(z.hit_counters(), &[0, 0, 0]);
        let mut e = UtilityMonitor::new(1, 1, 1);
        e.set_counters(&[8], 8, 0);
        e.decay();
        e.decay();
        assert_eq!(e.hit_counters(), &[2]);
    }

    #[test]
    fn queue_delays_accumulate_across_intervals() {
        let mut q = QueueDelayMonitor::new(2);
        assert_eq!(q.accumulate(0, 50), 50);
        // a reconfiguration happens here; totals are not reset
        assert_eq!(q.accumulate(0, 30), 80);
        assert_eq!(q.totals()[1], 0);
    }

    #[test]
    fn ipc_samples() {
        let s = IpcSample::new(0, 1000, 1000, true).unwrap();
        assert_eq!(s.ipc(), 1.0);
        assert!(matches!(IpcSample::new(3, 10, 0, false), Err(Error::ZeroCycleWindow { app: 3 })));
        let a = CoreProgress { instructions: 100, cycles: 200 };
        let b = CoreProgress { instructions: 300, cycles: 600 };
        assert_eq!(sample_ipc(0, a, b, false).unwrap().ipc(), 0.5);
    }

    proptest! {
        #[test]
        fn curve_is_monotone_and_matches_lru(trace in prop::collection::vec(0u64..12, 0..300), ways in 1usize..10) {
            let mut m = UtilityMonitor::new(1, ways, 1);
            for &t in &trace {
                m.observe(0, t);
            }
            let c = m.miss_curve();
            prop_assert!(c.is_non_increasing());
            for w in 1..=ways {
                prop_assert_eq!(c.misses(w), lru_misses(&trace, w));
            }
            m.decay();
            prop_assert!(m.miss_curve().is_non_increasing());
            prop_assert!(m.hit_counters().iter().sum::<u64>() <= m.accesses());
        }
    }
}
