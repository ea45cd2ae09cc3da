//! Set-associative LRU tag arrays.

use crate::Ps;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Line {
    /// Physical line number.
    pub tag: u64,
    pub valid: bool,
    pub stamp: u64,
    /// Brought in by a prefetch and not yet demand-hit.
    pub prefetched: bool,
    /// Time the data arrives; later than the fill for in-flight prefetches.
    pub ready_at: Ps,
    pub owner: u16,
}

/// A private (per-core) cache level.
#[derive(Clone, Debug)]
pub struct PrivateCache {
    sets: usize,
    ways: usize,
    lines: Vec<Line>,
    clock: u64,
}

impl PrivateCache {
    pub fn new(sets: usize, ways: usize) -> Self {
        Self {
            sets,
            ways,
            lines: vec![Line::default(); sets * ways],
            clock: 0,
        }
    }

    fn set_range(&self, tag: u64) -> std::ops::Range<usize> {
        let set = (tag % self.sets as u64) as usize;
        set * self.ways..(set + 1) * self.ways
    }

    fn find(&self, tag: u64) -> Option<usize> {
        let r = self.set_range(tag);
        let start = r.start;
        self.lines[r]
            .iter()
            .position(|l| l.valid && l.tag == tag)
            .map(|i| start + i)
    }

    pub fn contains(&self, tag: u64) -> bool {
        self.find(tag).is_some()
    }

    /// Looks up `tag`, promoting it to MRU on a hit.
    pub fn touch(&mut self, tag: u64) -> Option<&mut Line> {
        let idx = self.find(tag)?;
        self.clock += 1;
        let line = &mut self.lines[idx];
        line.stamp = self.clock;
        Some(line)
    }

    /// Inserts `tag` at MRU and returns the evicted valid line, if any.
    pub fn fill(&mut self, tag: u64, prefetched: bool, ready_at: Ps) -> Option<Line> {
        self.clock += 1;
        let r = self.set_range(tag);
        let set = &mut self.lines[r];
        let victim = set
            .iter()
            .position(|l| !l.valid)
            .unwrap_or_else(|| {
                set.iter()
                    .enumerate()
                    .min_by_key(|(_, l)| l.stamp)
                    .map(|(i, _)| i)
                    .unwrap()
            });
        let old = set[victim];
        set[victim] = Line {
            tag,
            valid: true,
            stamp: self.clock,
            prefetched,
            ready_at,
            owner: 0,
        };
        old.valid.then_some(old)
    }

    /// Drops `tag` if present and returns the dropped line.
    pub fn invalidate(&mut self, tag: u64) -> Option<Line> {
        let idx = self.find(tag)?;
        let old = self.lines[idx];
        self.lines[idx].valid = false;
        Some(old)
    }

    pub fn resident(&self) -> impl Iterator<Item = &Line> {
        self.lines.iter().filter(|l| l.valid)
    }
}

/// The shared, way-partitionable last-level cache.
#[derive(Clone, Debug)]
pub struct SharedCache {
    sets: usize,
    ways: usize,
    lines: Vec<Line>,
    clock: u64,
}

impl SharedCache {
    pub fn new(sets: usize, ways: usize) -> Self {
        Self {
            sets,
            ways,
            lines: vec![Line::default(); sets * ways],
            clock: 0,
        }
    }

    pub fn sets(&self) -> usize {
        self.sets
    }

    pub fn ways(&self) -> usize {
        self.ways
    }

    pub fn set_of(&self, tag: u64) -> usize {
        (tag % self.sets as u64) as usize
    }

    fn find(&self, tag: u64) -> Option<usize> {
        let base = self.set_of(tag) * self.ways;
        self.lines[base..base + self.ways]
            .iter()
            .position(|l| l.valid && l.tag == tag)
            .map(|i| base + i)
    }

    pub fn contains(&self, tag: u64) -> bool {
        self.find(tag).is_some()
    }

    pub fn touch(&mut self, tag: u64) -> Option<&mut Line> {
        let idx = self.find(tag)?;
        self.clock += 1;
        let line = &mut self.lines[idx];
        line.stamp = self.clock;
        Some(line)
    }

    /// Inserts `tag` for `owner` into one of the ways in `way_mask`, replacing
    /// an invalid way first and the LRU way otherwise. Returns the victim.
    pub fn fill(&mut self, tag: u64, owner: u16, way_mask: u64, ready_at: Ps) -> Option<Line> {
        debug_assert!(way_mask != 0);
        self.clock += 1;
        let base = self.set_of(tag) * self.ways;
        let set = &mut self.lines[base..base + self.ways];
        let mut victim = None;
        let mut oldest = u64::MAX;
        for (w, l) in set.iter().enumerate() {
            if way_mask >> w & 1 == 0 {
                continue;
            }
            if !l.valid {
                victim = Some(w);
                break;
            }
            if l.stamp < oldest {
                oldest = l.stamp;
                victim = Some(w);
            }
        }
        let w = victim.expect("way mask selects at least one way");
        let old = set[w];
        set[w] = Line {
            tag,
            valid: true,
            stamp: self.clock,
            prefetched: false,
            ready_at,
            owner,
        };
        old.valid.then_some(old)
    }

    /// Invalidates every line whose way is outside its owner's mask and
    /// returns them.
    pub fn evict_outside(&mut self, masks: &[u64]) -> Vec<Line> {
        let mut out = Vec::new();
        for (i, l) in self.lines.iter_mut().enumerate() {
            let way = i % self.ways;
            if l.valid && masks[l.owner as usize] >> way & 1 == 0 {
                l.valid = false;
                out.push(*l);
            }
        }
        out
    }

    /// `(way, line)` for every valid line.
    pub fn resident(&self) -> impl Iterator<Item = (usize, &Line)> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.valid)
            .map(move |(i, l)| (i % self.ways, l))
    }
}
