//! Experiment runs: one mix under one resource manager, compared with the
//! same mix under the baseline.

use rayon::prelude::*;

use super::metrics::{antt, weighted_speedup};
use super::RmConfig;
use crate::sim::{SimOptions, SimOutput, Simulation};
use crate::traces::WorkloadMix;
use crate::{Error, Result, SimConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub mix: String,
    pub rm: RmConfig,
    pub ipc: Vec<f64>,
    pub baseline_ipc: Vec<f64>,
    pub weighted_speedup: f64,
    pub antt: f64,
    pub output: SimOutput,
}

impl RunReport {
    pub fn cpi(&self) -> Vec<f64> {
        self.output.apps.iter().map(|a| a.cpi()).collect()
    }

    /// Ways, bandwidth and prefetch setting in force at the end of the run,
    /// ignoring any open prefetch sampling window.
    pub fn final_plan(&self) -> &crate::memsys::PartitionState {
        &self.output.steady_plan
    }
}

/// Runs `mix` under `rm` and returns the raw simulator output.
pub fn simulate(mix: &WorkloadMix, rm: &RmConfig, cfg: &SimConfig) -> Result<SimOutput> {
    simulate_with(mix, rm, cfg, SimOptions::default())
}

pub fn simulate_with(mix: &WorkloadMix, rm: &RmConfig, cfg: &SimConfig, options: SimOptions) -> Result<SimOutput> {
    Simulation::new(cfg, mix, Some(rm.clone()))?
        .with_options(options)
        .run()
}

/// Builds a report for `output` against a baseline run of the same mix.
pub fn report(mix: &WorkloadMix, rm: &RmConfig, output: SimOutput, baseline: &SimOutput) -> Result<RunReport> {
    let ipc: Vec<f64> = output.apps.iter().map(|a| a.ipc()).collect();
    let cpi: Vec<f64> = output.apps.iter().map(|a| a.cpi()).collect();
    let baseline_ipc: Vec<f64> = baseline.apps.iter().map(|a| a.ipc()).collect();
    let baseline_cpi: Vec<f64> = baseline.apps.iter().map(|a| a.cpi()).collect();
    Ok(RunReport {
        mix: mix.name.clone(),
        rm: rm.clone(),
        weighted_speedup: weighted_speedup(&ipc, &baseline_ipc)?,
        antt: antt(&cpi, &baseline_cpi)?,
        ipc,
        baseline_ipc,
        output,
    })
}

/// Runs `mix` under `rm` and under the baseline.
pub fn run_experiment(mix: &WorkloadMix, rm: &RmConfig, cfg: &SimConfig) -> Result<RunReport> {
    let baseline = simulate(mix, &RmConfig::baseline(), cfg)?;
    let output = if *rm == RmConfig::baseline() {
        baseline.clone()
    } else {
        simulate(mix, rm, cfg)?
    };
    report(mix, rm, output, &baseline)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {jobs} workers: {e}")))
}

/// Every mix under every resource manager. The baseline is simulated once per
/// mix. Reports come back ordered by mix, then by resource manager, whatever
/// the number of workers (`jobs = 0` uses one per CPU).
pub fn sweep(mixes: &[WorkloadMix], rms: &[RmConfig], cfg: &SimConfig, jobs: usize) -> Result<Vec<RunReport>> {
    pool(jobs)?.install(|| {
        let baselines = mixes
            .par_iter()
            .map(|m| simulate(m, &RmConfig::baseline(), cfg))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, &RmConfig)> = (0..mixes.len())
            .flat_map(|m| rms.iter().map(move |rm| (m, rm)))
            .collect();
        pairs
            .par_iter()
            .map(|&(m, rm)| {
                let output = if *rm == RmConfig::baseline() {
                    baselines[m].clone()
                } else {
                    simulate(&mixes[m], rm, cfg)?
                };
                report(&mixes[m], rm, output, &baselines[m])
            })
            .collect()
    })
}

/// One point of a controller-parameter sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityPoint {
    pub reconfiguration_interval_ms: f64,
    pub prefetch_sampling_period_ms: f64,
    pub report: RunReport,
}

/// Runs `mix` under `rm` for every combination of reconfiguration interval
/// and prefetch sampling period, in input order.
pub fn parameter_sweep(
    mix: &WorkloadMix,
    rm: &RmConfig,
    cfg: &SimConfig,
    intervals_ms: &[f64],
    sampling_ms: &[f64],
    jobs: usize,
) -> Result<Vec<SensitivityPoint>> {
    pool(jobs)?.install(|| {
        let baseline = simulate(mix, &RmConfig::baseline(), cfg)?;
        let grid: Vec<(f64, f64)> = intervals_ms
            .iter()
            .flat_map(|&i| sampling_ms.iter().map(move |&s| (i, s)))
            .collect();
        grid.par_iter()
            .map(|&(interval, sampling)| {
                let mut c = cfg.clone();
                c.cbp.reconfiguration_interval_ms = interval;
                c.cbp.prefetch_sampling_period_ms = sampling;
                c.validate()?;
                let out = simulate_with(
                    mix,
                    rm,
                    &c,
                    SimOptions {
                        check_every_events: Some(100_000),
                    },
                )?;
                Ok(SensitivityPoint {
                    reconfiguration_interval_ms: interval,
                    prefetch_sampling_period_ms: sampling,
                    report: report(mix, rm, out, &baseline)?,
                })
            })
            .collect()
    })
}
