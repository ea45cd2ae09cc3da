//! The simulation loop.
//!
//! Cores are in-order: a record with instruction gap `g` costs `g` cycles of
//! non-memory work followed by its memory access, of which a fraction
//! `1 - overlap` stalls the core (at least one cycle). The core with the
//! smallest clock always runs next, ties going to the lowest core id, so runs
//! are fully deterministic.
//!
//! Each application warms up for `warmup_instructions` and is then measured
//! over its next `detailed_instructions`. Applications keep running (looping
//! their trace if it runs out) until every application has been measured.

use crate::controllers::{Coordinator, MonitorSnapshot};
use crate::harness::RmConfig;
use crate::memsys::{AppMemStats, MemorySystem, PartitionState};
use crate::monitor::{CoreProgress, MissCurve};
use crate::prefetch::PrefetchStats;
use crate::traces::{AppStream, WorkloadMix};
use crate::{ms_to_ps, AppId, Error, Ps, Result, SimConfig};

/// Measured behaviour of one application over its detailed window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppResult {
    pub instructions: u64,
    pub cycles: u64,
    /// Simulated time at which the window closed.
    pub finished_at: Ps,
}

impl AppResult {
    pub fn ipc(&self) -> f64 {
        self.instructions as f64 / self.cycles as f64
    }

    pub fn cpi(&self) -> f64 {
        self.cycles as f64 / self.instructions as f64
    }
}

/// One row of the allocation time series: the state in force during
/// reconfiguration interval `interval` and the IPC achieved in it.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesRow {
    pub interval: u64,
    pub app: AppId,
    pub ways: u32,
    pub bw_share: f64,
    pub prefetch_on: bool,
    pub ipc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutput {
    pub apps: Vec<AppResult>,
    /// Every partition installed, with the time it took effect.
    pub history: Vec<(Ps, PartitionState)>,
    pub time_series: Vec<TimeSeriesRow>,
    pub mem_stats: Vec<AppMemStats>,
    pub prefetch_stats: Vec<PrefetchStats>,
    /// LLC lines invalidated by repartitioning, per application.
    pub invalidated: Vec<u64>,
    pub final_partition: PartitionState,
    /// The last plan outside prefetch sampling; equals `final_partition`
    /// without a coordinator.
    pub steady_plan: PartitionState,
    pub prefetch_friendly: Vec<bool>,
    pub reconfigurations: u64,
    pub invariant_checks: u64,
    pub events: u64,
    pub simulated_ps: Ps,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SimOptions {
    /// Also check the memory-system invariants every this many events.
    pub check_every_events: Option<u64>,
}

struct Core {
    stream: AppStream,
    clock: Ps,
    instructions: u64,
    window_start: Option<(u64, Ps)>,
    result: Option<AppResult>,
    interval_instructions: u64,
}

pub struct Simulation {
    cfg: SimConfig,
    mem: MemorySystem,
    cores: Vec<Core>,
    coordinator: Option<Coordinator>,
    options: SimOptions,
    cycle_ps: Ps,
    history: Vec<(Ps, PartitionState)>,
    time_series: Vec<TimeSeriesRow>,
    invalidated: Vec<u64>,
    reconfigurations: u64,
    invariant_checks: u64,
    events: u64,
}

impl Simulation {
    /// A simulation of `mix` managed by `rm`; `None` leaves the partition
    /// wherever the caller puts it through [`Simulation::memory_mut`].
    pub fn new(cfg: &SimConfig, mix: &WorkloadMix, rm: Option<RmConfig>) -> Result<Self> {
        cfg.validate()?;
        mix.validate()?;
        let apps = mix.cores();
        let mem = MemorySystem::new(cfg, apps)?;
        let cores = mix
            .apps
            .iter()
            .map(|(_, src)| {
                Ok(Core {
                    stream: src.open()?,
                    clock: 0,
                    instructions: 0,
                    window_start: None,
                    result: None,
                    interval_instructions: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let coordinator = rm.map(|rm| Coordinator::new(rm, cfg, apps, mem.partition().clone()));
        Ok(Self {
            cfg: cfg.clone(),
            cycle_ps: cfg.cycle_ps(),
            mem,
            cores,
            coordinator,
            options: SimOptions::default(),
            history: Vec::new(),
            time_series: Vec::new(),
            invalidated: vec![0; apps],
            reconfigurations: 0,
            invariant_checks: 0,
            events: 0,
        })
    }

    pub fn with_options(mut self, options: SimOptions) -> Self {
        self.options = options;
        self
    }

    pub fn memory(&self) -> &MemorySystem {
        &self.mem
    }

    pub fn memory_mut(&mut self) -> &mut MemorySystem {
        &mut self.mem
    }

    fn snapshot(&self, now: Ps) -> MonitorSnapshot {
        let apps = self.cores.len();
        MonitorSnapshot {
            miss_curves: (0..apps).map(|a| self.mem.monitor(a).miss_curve()).collect::<Vec<MissCurve>>(),
            queue_delays: self.mem.memory().stats.delays.totals().to_vec(),
            progress: self
                .cores
                .iter()
                .map(|c| CoreProgress {
                    instructions: c.instructions,
                    cycles: now / self.cycle_ps,
                })
                .collect(),
        }
    }

    fn check(&mut self, now: Ps) -> Result<()> {
        self.invariant_checks += 1;
        self.mem
            .check_invariants()
            .map_err(|message| Error::InvariantViolation { at_ps: now, message })
    }

    fn coordinate(&mut self, now: Ps) -> Result<Ps> {
        let snap = self.snapshot(now);
        let Some(co) = self.coordinator.as_mut() else {
            return Ok(Ps::MAX);
        };
        let out = co.step(now, &snap);
        if out.decay_atds {
            for a in 0..self.cores.len() {
                self.mem.monitor_mut(a).decay();
            }
        }
        if out.halve_queue_delays {
            self.mem.memory_mut().stats.delays.halve();
        }
        if out.reconfigured {
            self.reconfigurations += 1;
        }
        if let Some(p) = out.partition {
            let report = self
                .mem
                .apply_partition(p.clone())
                .map_err(|e| Error::InvariantViolation {
                    at_ps: now,
                    message: e.to_string(),
                })?;
            for (total, n) in self.invalidated.iter_mut().zip(&report.invalidated) {
                *total += n;
            }
            self.history.push((now, p));
            self.check(now)?;
        } else if out.reconfigured {
            self.check(now)?;
        }
        Ok(out.next_wakeup)
    }

    fn record_interval(&mut self, index: u64, length: Ps) {
        let cycles = (length / self.cycle_ps).max(1);
        let part = self.mem.partition();
        let limits = self.mem.limits();
        for (app, core) in self.cores.iter_mut().enumerate() {
            self.time_series.push(TimeSeriesRow {
                interval: index,
                app,
                ways: part.ways_of(app, limits.total_ways),
                bw_share: part.bandwidth_of(app, limits.total_gbps),
                prefetch_on: part.prefetch[app],
                ipc: core.interval_instructions as f64 / cycles as f64,
            });
            core.interval_instructions = 0;
        }
    }

    /// Executes one record on `core`.
    fn execute(&mut self, id: AppId) -> Result<()> {
        let core = &mut self.cores[id];
        let record = match core.stream.next() {
            Some(r) => r,
            None => {
                core.stream.rewind();
                core.stream
                    .next()
                    .ok_or_else(|| Error::NoProgress(format!("app {id} has an empty reference stream")))?
            }
        };
        let issue = core.clock + Ps::from(record.instr_gap) * self.cycle_ps;
        let access = self.mem.access(id, record.address, record.kind, issue)?;
        let stall = ((access.latency as f64) * (1.0 - self.cfg.overlap)).round() as Ps;
        let core = &mut self.cores[id];
        core.clock = issue + stall.max(self.cycle_ps);
        core.instructions += record.instructions();
        core.interval_instructions += record.instructions();
        self.events += 1;

        if core.window_start.is_none() && core.instructions >= self.cfg.warmup_instructions {
            core.window_start = Some((core.instructions, core.clock));
        }
        if let (Some((i0, t0)), None) = (core.window_start, core.result) {
            if core.instructions - i0 >= self.cfg.detailed_instructions {
                core.result = Some(AppResult {
                    instructions: core.instructions - i0,
                    cycles: ((core.clock - t0) / self.cycle_ps).max(1),
                    finished_at: core.clock,
                });
            }
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<SimOutput> {
        let interval = ms_to_ps(self.cfg.cbp.reconfiguration_interval_ms).max(1);
        let limit = ms_to_ps(self.cfg.max_simulated_ms);
        if self.cfg.warmup_instructions == 0 {
            for c in &mut self.cores {
                c.window_start = Some((0, 0));
            }
        }
        let mut wakeup = self.coordinate(0)?;
        let mut next_row = interval;
        let mut row_index = 0;

        loop {
            let (id, now) = self
                .cores
                .iter()
                .enumerate()
                .map(|(i, c)| (i, c.clock))
                .min_by_key(|&(i, t)| (t, i))
                .expect("at least one core");
            if self.cores.iter().all(|c| c.result.is_some()) {
                let last = self.cores.iter().map(|c| c.clock).max().unwrap_or(0);
                if last > next_row - interval {
                    self.record_interval(row_index, last - (next_row - interval));
                }
                break;
            }
            if now > limit {
                let pending: Vec<AppId> = (0..self.cores.len())
                    .filter(|&i| self.cores[i].result.is_none())
                    .collect();
                return Err(Error::NoProgress(format!(
                    "apps {pending:?} unfinished after {} ms of simulated time",
                    self.cfg.max_simulated_ms
                )));
            }
            if now >= next_row.min(wakeup) {
                // an interval closes before the coordinator acts at the same instant
                if next_row <= wakeup {
                    self.record_interval(row_index, interval);
                    row_index += 1;
                    next_row += interval;
                } else {
                    wakeup = self.coordinate(wakeup)?;
                }
                continue;
            }
            self.execute(id)?;
            if let Some(n) = self.options.check_every_events {
                if self.events.is_multiple_of(n) {
                    self.check(now)?;
                }
            }
        }

        let apps = self.cores.len();
        Ok(SimOutput {
            apps: self.cores.iter().map(|c| c.result.expect("all apps finished")).collect(),
            history: self.history,
            time_series: self.time_series,
            mem_stats: (0..apps).map(|a| *self.mem.stats(a)).collect(),
            prefetch_stats: (0..apps).map(|a| *self.mem.prefetch_stats(a)).collect(),
            invalidated: self.invalidated,
            final_partition: self.mem.partition().clone(),
            steady_plan: self
                .coordinator
                .as_ref()
                .map_or_else(|| self.mem.partition().clone(), |c| c.steady_plan()),
            prefetch_friendly: self
                .coordinator
                .as_ref()
                .map_or_else(|| vec![false; apps], |c| c.prefetch_friendly().to_vec()),
            reconfigurations: self.reconfigurations,
            invariant_checks: self.invariant_checks,
            events: self.events,
            simulated_ps: self.cores.iter().map(|c| c.clock).max().unwrap_or(0),
        })
    }
}
