//! Synthetic applications with tunable cache, bandwidth and prefetch
//! sensitivity.
//!
//! Each memory access is either *strided* (probability `stride_fraction`) or
//! *pooled*. Strided accesses walk the working set with a fixed stride and
//! restart at the next page whenever the stride would cross a page boundary,
//! so runs stay within a page. Pooled accesses follow a two-pool model: a hot
//! set covering `1 - reuse_skew` of the working set is hit uniformly at random
//! with probability `1 - reuse_skew / 2`; the remaining accesses scan the cold
//! remainder sequentially. `reuse_skew = 0` degenerates to uniform random
//! accesses over the whole working set, which gives a linear miss-vs-ways
//! curve; larger skews concentrate reuse and flatten the tail of the curve.
//!
//! The gap before each access is geometric with success probability
//! `mem_intensity / 1000`, so the stream averages `mem_intensity` memory
//! accesses per thousand instructions.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use super::AccessRecord;
use crate::{Error, Result};

const LINE_BYTES: u64 = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticAppSpec {
    pub working_set_bytes: u64,
    /// Hot-set concentration in `[0, 1]`.
    pub reuse_skew: f64,
    /// Memory accesses per 1000 instructions, in `(0, 1000]`.
    pub mem_intensity: f64,
    /// Fraction of accesses that follow the strided stream, in `[0, 1]`.
    pub stride_fraction: f64,
    pub stride_bytes: u64,
    pub page_bytes: u64,
    pub seed: u64,
}

impl Default for SyntheticAppSpec {
    fn default() -> Self {
        Self {
            working_set_bytes: 1 << 20,
            reuse_skew: 0.0,
            mem_intensity: 100.0,
            stride_fraction: 0.0,
            stride_bytes: 64,
            page_bytes: 4096,
            seed: 1,
        }
    }
}

impl SyntheticAppSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        for (name, v) in [
            ("reuse_skew", self.reuse_skew),
            ("stride_fraction", self.stride_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if self.working_set_bytes == 0 {
            return bad("working_set_bytes must be positive".into());
        }
        if !(self.mem_intensity > 0.0 && self.mem_intensity <= 1000.0) {
            return bad(format!(
                "mem_intensity must be in (0, 1000], got {}",
                self.mem_intensity
            ));
        }
        if self.stride_bytes == 0 || self.stride_bytes >= self.page_bytes {
            return bad(format!(
                "stride_bytes ({}) must be positive and below page_bytes ({})",
                self.stride_bytes, self.page_bytes
            ));
        }
        Ok(())
    }

    /// The same application with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Parses a byte size such as `4096`, `64KiB`, `2MiB` or `1G`.
pub(crate) fn parse_size(text: &str) -> Option<u64> {
    let t = text.trim();
    let split = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let n: u64 = num.parse().ok()?;
    let mult = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 1,
        "k" | "kb" | "kib" => 1 << 10,
        "m" | "mb" | "mib" => 1 << 20,
        "g" | "gb" | "gib" => 1 << 30,
        _ => return None,
    };
    n.checked_mul(mult)
}

/// Inline form used in mix files, e.g.
/// `ws=288KiB,skew=0,intensity=50,stride_fraction=0,seed=7`.
/// Keys not given keep their [`Default`] values.
impl FromStr for SyntheticAppSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = SyntheticAppSpec::default();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("expected key=value, got {item:?}")))?;
            let value = value.trim();
            let size = || {
                parse_size(value)
                    .ok_or_else(|| Error::InvalidSpec(format!("bad size {value:?} for {key}")))
            };
            let float = || {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidSpec(format!("bad number {value:?} for {key}")))
            };
            match key.trim() {
                "ws" | "working_set" | "working_set_bytes" => spec.working_set_bytes = size()?,
                "skew" | "reuse_skew" => spec.reuse_skew = float()?,
                "intensity" | "mem_intensity" => spec.mem_intensity = float()?,
                "stride_fraction" | "sf" => spec.stride_fraction = float()?,
                "stride" | "stride_bytes" => spec.stride_bytes = size()?,
                "page" | "page_bytes" => spec.page_bytes = size()?,
                "seed" => {
                    spec.seed = value
                        .parse()
                        .map_err(|_| Error::InvalidSpec(format!("bad seed {value:?}")))?
                }
                other => return Err(Error::InvalidSpec(format!("unknown key {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SyntheticAppSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ws={},skew={},intensity={},stride_fraction={},stride={},page={},seed={}",
            self.working_set_bytes,
            self.reuse_skew,
            self.mem_intensity,
            self.stride_fraction,
            self.stride_bytes,
            self.page_bytes,
            self.seed
        )
    }
}

/// Infinite, deterministic record generator for one synthetic application.
#[derive(Clone, Debug)]
pub struct SyntheticGenerator {
    spec: SyntheticAppSpec,
    rng: ChaCha8Rng,
    gap: Option<Geometric>,
    lines: u64,
    hot_lines: u64,
    p_hot: f64,
    cold_cursor: u64,
    stream_cursor: u64,
}

impl SyntheticGenerator {
    pub fn new(spec: SyntheticAppSpec) -> Result<Self> {
        spec.validate()?;
        let p = spec.mem_intensity / 1000.0;
        let gap = if p >= 1.0 {
            None
        } else {
            Some(Geometric::new(p).map_err(|e| Error::InvalidSpec(e.to_string()))?)
        };
        let lines = spec.working_set_bytes.div_ceil(LINE_BYTES);
        let hot_lines = ((lines as f64 * (1.0 - spec.reuse_skew)).round() as u64).clamp(1, lines);
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            gap,
            lines,
            hot_lines,
            p_hot: 1.0 - spec.reuse_skew / 2.0,
            cold_cursor: hot_lines,
            stream_cursor: 0,
            spec,
        })
    }

    pub fn spec(&self) -> &SyntheticAppSpec {
        &self.spec
    }

    /// Restarts the stream from its first record.
    pub fn rewind(&mut self) {
        *self = Self::new(self.spec.clone()).expect("spec was validated");
    }

    fn next_strided(&mut self) -> u64 {
        let addr = self.stream_cursor;
        let page = self.spec.page_bytes;
        let next = addr + self.spec.stride_bytes;
        self.stream_cursor = if next / page == addr / page && next < self.spec.working_set_bytes {
            next
        } else {
            let next_page = (addr / page + 1) * page;
            if next_page >= self.spec.working_set_bytes {
                0
            } else {
                next_page
            }
        };
        addr
    }

    fn next_pooled(&mut self) -> u64 {
        let line = if self.hot_lines == self.lines || self.rng.gen_bool(self.p_hot) {
            self.rng.gen_range(0..self.hot_lines)
        } else {
            let line = self.cold_cursor;
            self.cold_cursor += 1;
            if self.cold_cursor == self.lines {
                self.cold_cursor = self.hot_lines;
            }
            line
        };
        line * LINE_BYTES
    }
}

impl Iterator for SyntheticGenerator {
    type Item = AccessRecord;

    fn next(&mut self) -> Option<AccessRecord> {
        let gap = match &self.gap {
            Some(g) => g.sample(&mut self.rng).min(u64::from(u32::MAX)) as u32,
            None => 0,
        };
        let strided = self.spec.stride_fraction > 0.0 && self.rng.gen_bool(self.spec.stride_fraction);
        let address = if strided {
            self.next_strided()
        } else {
            self.next_pooled()
        };
        Some(AccessRecord::load(gap, address))
    }
}

/// Finite synthetic stream covering at most `n_instructions` instructions.
/// The record that would overrun the budget is not emitted.
pub fn generate_synthetic(
    spec: &SyntheticAppSpec,
    n_instructions: u64,
) -> Result<impl Iterator<Item = AccessRecord>> {
    let mut generator = SyntheticGenerator::new(spec.clone())?;
    let mut used = 0u64;
    Ok(std::iter::from_fn(move || {
        if used >= n_instructions {
            return None;
        }
        let r = generator.next()?;
        used += r.instructions();
        (used <= n_instructions).then_some(r)
    }))
}
