use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{path}: line {line}: {message}")]
    TextTrace {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: byte offset {offset}: {message}")]
    BinaryTrace {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("{0}: trace contains no records")]
    EmptyTrace(PathBuf),

    #[error("invalid synthetic application spec: {0}")]
    InvalidSpec(String),

    #[error("invalid workload mix: {0}")]
    InvalidMix(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("failed to parse configuration: {0}")]
    ConfigSyntax(#[from] toml::de::Error),

    #[error("app {app}: address {address:#x} is outside the modelled physical space")]
    AddressOutOfRange { app: usize, address: u64 },

    #[error("partition rejected: {0}")]
    InvalidPartition(String),

    #[error("{apps} apps need {needed} ways at min_ways={min_ways}, only {ways} available")]
    InsufficientWays {
        apps: usize,
        ways: u32,
        min_ways: u32,
        needed: u64,
    },

    #[error("{apps} apps need {needed} GB/s of minimum allocation, only {total} GB/s available")]
    InsufficientBandwidth {
        apps: usize,
        total: String,
        needed: String,
    },

    #[error("IPC sample window for app {app} has zero cycles")]
    ZeroCycleWindow { app: usize },

    #[error("metric inputs cover {left} and {right} apps")]
    MismatchedApps { left: usize, right: usize },

    #[error("baseline value for app {app} is not positive")]
    NonPositiveBaseline { app: usize },

    #[error("no forward progress: {0}")]
    NoProgress(String),

    #[error("simulator invariant violated at {at_ps} ps: {message}")]
    InvariantViolation { at_ps: u64, message: String },

    #[error("unknown resource manager {0:?}")]
    UnknownRm(String),

    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
}
