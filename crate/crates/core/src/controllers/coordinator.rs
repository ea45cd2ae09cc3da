//! Sequencing of the three controllers over simulated time.
//!
//! At time 0 every managed resource is split equally. Prefetch sampling then
//! runs each core with its prefetcher forced off for one sampling period and
//! forced on for another, and the throttling controller decides from the two
//! IPC samples. At every reconfiguration interval the cache controller runs
//! first, then the bandwidth controller, and then prefetching is re-sampled.
//! Cache and bandwidth plans stay frozen while a sampling window is open; a
//! reconfiguration that falls due inside one is run as soon as it closes.

use crate::controllers::bandwidth::{allocate_bandwidth, equal_bandwidth, rational};
use crate::controllers::lookahead::{allocate_cache, allocate_cache_cppf, equal_ways};
use crate::controllers::throttle::{decide_prefetch, IpcPair};
use crate::harness::{CacheMode, PrefetchMode, ResourceMode, RmConfig};
use crate::memsys::PartitionState;
use crate::monitor::{sample_ipc, CoreProgress, MissCurve};
use crate::{ms_to_ps, Ps, SimConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    InitialEqual,
    SamplingOff,
    SamplingOn,
    Steady,
}

/// What the coordinator sees of the machine at one wakeup.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorSnapshot {
    pub miss_curves: Vec<MissCurve>,
    /// Accumulated memory queuing delay per application.
    pub queue_delays: Vec<Ps>,
    pub progress: Vec<CoreProgress>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    /// New partition to install, if anything changed.
    pub partition: Option<PartitionState>,
    /// Halve the utility monitors' counters.
    pub decay_atds: bool,
    /// Halve the accumulated queuing delays.
    pub halve_queue_delays: bool,
    /// True when this step ran the cache and bandwidth controllers.
    pub reconfigured: bool,
    pub next_wakeup: Ps,
}

#[derive(Clone, Debug)]
pub struct Coordinator {
    rm: RmConfig,
    apps: usize,
    total_ways: u32,
    min_ways: u32,
    total_gbps: f64,
    min_gbps: f64,
    threshold: f64,
    queue_delay_decay: bool,
    reconfig_every: Ps,
    sampling_period: Ps,
    prefetch_every: Ps,
    cycle_ps: Ps,

    phase: Phase,
    current: PartitionState,
    next_reconfig: Ps,
    last_decision: Ps,
    window_end: Ps,
    window_start: Vec<CoreProgress>,
    ipc_off: Vec<Option<f64>>,
    /// Last decided per-application prefetch benefit.
    friendly: Vec<bool>,
    /// Setting the prefetchers return to once sampling is over.
    decided: Vec<bool>,
}

impl Coordinator {
    pub fn new(rm: RmConfig, cfg: &SimConfig, apps: usize, initial: PartitionState) -> Self {
        let cbp = &cfg.cbp;
        Self {
            rm,
            apps,
            total_ways: cfg.llc.ways,
            min_ways: cbp.min_ways,
            total_gbps: cfg.memory.total_gbps(),
            min_gbps: cbp.min_bandwidth_gbps,
            threshold: cbp.speedup_threshold,
            queue_delay_decay: cbp.queue_delay_decay,
            reconfig_every: ms_to_ps(cbp.reconfiguration_interval_ms).max(1),
            sampling_period: ms_to_ps(cbp.prefetch_sampling_period_ms).max(1),
            prefetch_every: ms_to_ps(cbp.prefetch_interval_ms).max(1),
            cycle_ps: cfg.cycle_ps(),
            phase: Phase::InitialEqual,
            decided: initial.prefetch.clone(),
            current: initial,
            next_reconfig: 0,
            last_decision: 0,
            window_end: 0,
            window_start: Vec::new(),
            ipc_off: vec![None; apps],
            friendly: vec![false; apps],
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn rm(&self) -> &RmConfig {
        &self.rm
    }

    /// The partition most recently emitted (or the initial one).
    pub fn current(&self) -> &PartitionState {
        &self.current
    }

    /// The plan in force outside sampling windows: the current partition with
    /// the last decided prefetch setting.
    pub fn steady_plan(&self) -> PartitionState {
        PartitionState {
            prefetch: self.decided.clone(),
            ..self.current.clone()
        }
    }

    /// Prefetch friendliness from the last completed sample.
    pub fn prefetch_friendly(&self) -> &[bool] {
        &self.friendly
    }

    fn samples_prefetch(&self) -> bool {
        self.rm.prefetch == PrefetchMode::Dynamic || self.rm.cache == CacheMode::DynamicCppf
    }

    /// Per-application IPC over the window that started at `window_start`.
    fn window_ipc(&self, now: Ps, progress: &[CoreProgress]) -> Vec<Option<f64>> {
        progress
            .iter()
            .zip(&self.window_start)
            .enumerate()
            .map(|(app, (end, start))| {
                let end = CoreProgress {
                    instructions: end.instructions,
                    cycles: now / self.cycle_ps,
                };
                sample_ipc(app, *start, end, false).ok().map(|s| s.ipc())
            })
            .collect()
    }

    fn open_window(&mut self, now: Ps, progress: &[CoreProgress]) {
        self.window_start = progress
            .iter()
            .map(|p| CoreProgress {
                instructions: p.instructions,
                cycles: now / self.cycle_ps,
            })
            .collect();
        self.window_end = now + self.sampling_period;
    }

    fn start_sampling(&mut self, now: Ps, snap: &MonitorSnapshot, plan: &mut PartitionState) {
        self.open_window(now, &snap.progress);
        self.phase = Phase::SamplingOff;
        plan.prefetch = vec![false; self.apps];
    }

    fn reconfigure(&mut self, snap: &MonitorSnapshot, plan: &mut PartitionState) -> bool {
        let mut decay = false;
        match self.rm.cache {
            CacheMode::Dynamic => {
                if let Ok(p) = allocate_cache(&snap.miss_curves, self.total_ways, self.min_ways) {
                    plan.ways = Some(p.0);
                }
                decay = true;
            }
            CacheMode::DynamicCppf => {
                if let Ok(p) = allocate_cache_cppf(&snap.miss_curves, &self.friendly, self.total_ways, self.min_ways) {
                    plan.ways = Some(p.0);
                }
                decay = true;
            }
            CacheMode::Unmanaged | CacheMode::Equal => {}
        }
        if self.rm.bandwidth == ResourceMode::Dynamic {
            if let Ok(p) = allocate_bandwidth(&snap.queue_delays, &rational(self.total_gbps), &rational(self.min_gbps)) {
                plan.bandwidth = Some(p.to_gbps());
            }
        }
        decay
    }

    fn next_wakeup(&self) -> Ps {
        match self.phase {
            Phase::SamplingOff | Phase::SamplingOn => self.window_end,
            _ if self.samples_prefetch() => self.next_reconfig.min(self.last_decision + self.prefetch_every),
            _ => self.next_reconfig,
        }
    }

    /// Advances the state machine to `now`. Call at time 0 and then at every
    /// `next_wakeup` returned.
    pub fn step(&mut self, now: Ps, snap: &MonitorSnapshot) -> StepOutcome {
        let mut plan = self.current.clone();
        let mut decay_atds = false;
        let mut reconfigured = false;

        match self.phase {
            Phase::InitialEqual => {
                if self.rm.cache != CacheMode::Unmanaged {
                    plan.ways = Some(equal_ways(self.apps, self.total_ways).0);
                }
                if self.rm.bandwidth != ResourceMode::Unmanaged {
                    plan.bandwidth = Some(equal_bandwidth(self.apps, self.total_gbps));
                }
                self.decided = vec![self.rm.prefetch != PrefetchMode::Disabled; self.apps];
                plan.prefetch = self.decided.clone();
                self.next_reconfig = self.reconfig_every;
                self.phase = Phase::Steady;
                if self.samples_prefetch() {
                    self.start_sampling(now, snap, &mut plan);
                }
            }
            Phase::SamplingOff => {
                self.ipc_off = self.window_ipc(now, &snap.progress);
                self.open_window(now, &snap.progress);
                self.phase = Phase::SamplingOn;
                plan.prefetch = vec![true; self.apps];
            }
            Phase::SamplingOn => {
                let on = self.window_ipc(now, &snap.progress);
                let pairs: Vec<Option<IpcPair>> = on
                    .iter()
                    .zip(&self.ipc_off)
                    .map(|(on, off)| Some(IpcPair { on: (*on)?, off: (*off)? }))
                    .collect();
                self.friendly = decide_prefetch(&pairs, &self.friendly, self.threshold);
                self.decided = match self.rm.prefetch {
                    PrefetchMode::Dynamic => self.friendly.clone(),
                    mode => vec![mode == PrefetchMode::Enabled; self.apps],
                };
                plan.prefetch = self.decided.clone();
                self.last_decision = now;
                self.phase = Phase::Steady;
            }
            Phase::Steady => {}
        }

        if self.phase == Phase::Steady {
            if now >= self.next_reconfig {
                decay_atds = self.reconfigure(snap, &mut plan);
                reconfigured = true;
                // the next reconfiguration stays on the fixed grid
                let missed = (now - self.next_reconfig) / self.reconfig_every;
                self.next_reconfig += (missed + 1) * self.reconfig_every;
                if self.samples_prefetch() {
                    self.start_sampling(now, snap, &mut plan);
                }
            } else if self.samples_prefetch() && now >= self.last_decision + self.prefetch_every {
                self.start_sampling(now, snap, &mut plan);
            }
        }

        let partition = (plan != self.current).then(|| {
            self.current = plan.clone();
            plan
        });
        StepOutcome {
            partition,
            decay_atds,
            halve_queue_delays: reconfigured && self.queue_delay_decay && self.rm.bandwidth == ResourceMode::Dynamic,
            reconfigured,
            next_wakeup: self.next_wakeup(),
        }
    }
}
