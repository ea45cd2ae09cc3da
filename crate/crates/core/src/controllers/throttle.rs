//! Prefetch throttling from sampled IPC.
//!
//! The prefetcher stays enabled for an application only if prefetching
//! speeds it up by strictly more than the threshold:
//! `ipc_on / ipc_off > speedup_threshold`. `true` means enabled.

/// Prefetcher enable per application.
pub type PrefPlan = Vec<bool>;

/// IPC measured with the prefetcher forced on and forced off.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IpcPair {
    pub on: f64,
    pub off: f64,
}

pub fn prefetch_helps(pair: IpcPair, threshold: f64) -> bool {
    pair.on / pair.off > threshold
}

/// Applications without a usable sample (missing, or `off <= 0`) keep their
/// `previous` setting.
pub fn decide_prefetch(samples: &[Option<IpcPair>], previous: &[bool], threshold: f64) -> PrefPlan {
    samples
        .iter()
        .zip(previous)
        .map(|(s, &prev)| match s {
            Some(pair) if pair.off > 0.0 && pair.on.is_finite() => prefetch_helps(*pair, threshold),
            _ => prev,
        })
        .collect()
}
