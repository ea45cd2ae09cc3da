//! Application memory-reference streams.
//!
//! A stream is a sequence of [`AccessRecord`]s. Each record carries the number
//! of non-memory instructions executed since the previous record, so streams
//! stay machine-independent: timing comes from the core model in [`crate::sim`].

mod classify;
mod io;
mod mix;
mod synthetic;

pub use classify::{classify_sensitivity, ClassifyEnv, Sensitivity};
pub use io::{load_trace, write_trace, Trace, TraceFormat, BINARY_MAGIC, BINARY_RECORD_BYTES};
pub use mix::{AppStream, TraceSource, WorkloadMix};
pub use synthetic::{generate_synthetic, SyntheticAppSpec, SyntheticGenerator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Load,
    Store,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AccessRecord {
    /// Non-memory instructions since the previous record.
    pub instr_gap: u32,
    pub address: u64,
    pub kind: AccessKind,
}

impl AccessRecord {
    pub fn load(instr_gap: u32, address: u64) -> Self {
        Self {
            instr_gap,
            address,
            kind: AccessKind::Load,
        }
    }

    /// Instructions represented by this record: the gap plus the memory
    /// instruction itself.
    pub fn instructions(&self) -> u64 {
        u64::from(self.instr_gap) + 1
    }
}
