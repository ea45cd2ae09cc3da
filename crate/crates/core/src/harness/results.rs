//! CSV output.
//!
//! * summary: `mix,rm,weighted_speedup,antt`, one row per report;
//! * time series: `interval,app,ways,bw_share,prefetch_on,ipc`, one row per
//!   application per reconfiguration interval of a single run;
//! * sensitivity sweep: the summary columns prefixed by the two swept
//!   controller parameters;
//! * monitor snapshot: `app,ways,misses`, the miss curve of every utility
//!   monitor.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::{RunReport, SensitivityPoint};
use crate::memsys::MemorySystem;
use crate::Result;

#[derive(Serialize)]
struct SummaryRow<'a> {
    mix: &'a str,
    rm: &'a str,
    weighted_speedup: f64,
    antt: f64,
}

#[derive(Serialize)]
struct SeriesRow {
    interval: u64,
    app: usize,
    ways: u32,
    bw_share: f64,
    prefetch_on: bool,
    ipc: f64,
}

#[derive(Serialize)]
struct SweepRow<'a> {
    reconfiguration_interval_ms: f64,
    prefetch_sampling_period_ms: f64,
    mix: &'a str,
    rm: &'a str,
    weighted_speedup: f64,
    antt: f64,
    reconfigurations: u64,
    invariant_checks: u64,
}

#[derive(Serialize)]
struct MonitorRow {
    app: usize,
    ways: usize,
    misses: u64,
}

fn header<W: Write>(out: W, cols: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(cols)?;
    Ok(w)
}

pub fn write_summary<W: Write>(out: W, reports: &[RunReport]) -> Result<()> {
    let mut w = header(out, &["mix", "rm", "weighted_speedup", "antt"])?;
    for r in reports {
        w.serialize(SummaryRow {
            mix: &r.mix,
            rm: r.rm.name,
            weighted_speedup: r.weighted_speedup,
            antt: r.antt,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_time_series<W: Write>(out: W, report: &RunReport) -> Result<()> {
    let mut w = header(out, &["interval", "app", "ways", "bw_share", "prefetch_on", "ipc"])?;
    for r in &report.output.time_series {
        w.serialize(SeriesRow {
            interval: r.interval,
            app: r.app,
            ways: r.ways,
            bw_share: r.bw_share,
            prefetch_on: r.prefetch_on,
            ipc: r.ipc,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sensitivity<W: Write>(out: W, points: &[SensitivityPoint]) -> Result<()> {
    let mut w = header(
        out,
        &[
            "reconfiguration_interval_ms",
            "prefetch_sampling_period_ms",
            "mix",
            "rm",
            "weighted_speedup",
            "antt",
            "reconfigurations",
            "invariant_checks",
        ],
    )?;
    for p in points {
        w.serialize(SweepRow {
            reconfiguration_interval_ms: p.reconfiguration_interval_ms,
            prefetch_sampling_period_ms: p.prefetch_sampling_period_ms,
            mix: &p.report.mix,
            rm: p.report.rm.name,
            weighted_speedup: p.report.weighted_speedup,
            antt: p.report.antt,
            reconfigurations: p.report.output.reconfigurations,
            invariant_checks: p.report.output.invariant_checks,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Dumps every application's current miss curve.
pub fn write_monitor_snapshot<W: Write>(out: W, mem: &MemorySystem) -> Result<()> {
    let mut w = header(out, &["app", "ways", "misses"])?;
    for app in 0..mem.apps() {
        for (ways, &misses) in mem.monitor(app).miss_curve().as_slice().iter().enumerate() {
            w.serialize(MonitorRow { app, ways, misses })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// File name of a run's time series.
pub fn time_series_file(report: &RunReport) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect()
    };
    format!("timeseries_{}_{}.csv", clean(&report.mix), report.rm.name)
}

/// Writes `summary.csv` and one time-series file per report into `dir`,
/// creating it if needed. Returns the paths written.
pub fn emit_results(dir: &Path, reports: &[RunReport]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let summary = dir.join("summary.csv");
    write_summary(fs::File::create(&summary)?, reports)?;
    let mut written = vec![summary];
    for r in reports {
        let path = dir.join(time_series_file(r));
        write_time_series(fs::File::create(&path)?, r)?;
        written.push(path);
    }
    Ok(written)
}
