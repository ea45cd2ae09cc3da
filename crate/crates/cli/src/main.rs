use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cbp_core::harness::{self, RmConfig};
use cbp_core::traces::{self, SyntheticAppSpec, TraceFormat, WorkloadMix};
use cbp_core::SimConfig;

#[derive(Parser)]
#[command(name = "cbp", version, about = "Multicore memory-system simulator with coordinated cache, bandwidth and prefetch management")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used for anything it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for synthetic apps that do not set their own.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Measured instructions per application.
    #[arg(long)]
    instructions: Option<u64>,
}

impl Common {
    fn config(&self) -> Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => SimConfig::default(),
        };
        if let Some(n) = self.instructions {
            cfg.detailed_instructions = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn mix(&self, path: &Path) -> Result<WorkloadMix> {
        WorkloadMix::load(path, self.seed).with_context(|| format!("reading mix {}", path.display()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one mix under one resource manager and compare with the baseline.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mix: PathBuf,
        #[arg(long, default_value = "cbp")]
        rm: String,
        /// Directory for summary.csv and the time series.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every mix under every listed resource manager.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Mix files; repeat the flag for several.
        #[arg(long, required = true)]
        mix: Vec<PathBuf>,
        /// Comma-separated managers, or `all`.
        #[arg(long, default_value = "all")]
        rm: String,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses one per CPU.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Reconfiguration intervals (ms) for a controller-parameter sweep.
        /// Needs exactly one mix and one manager.
        #[arg(long, value_delimiter = ',')]
        intervals: Vec<f64>,
        /// Prefetch sampling periods (ms) for a controller-parameter sweep.
        #[arg(long, value_delimiter = ',')]
        sampling: Vec<f64>,
    },
    /// Report cache, bandwidth and prefetch sensitivity of each app in a mix.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mix: PathBuf,
        /// Write classify.csv here instead of printing to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Write a synthetic trace to a file.
    GenTrace {
        /// Synthetic spec, e.g. `ws=2MiB,sf=0.5,intensity=150`.
        spec: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        instructions: u64,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// `text` or `binary`; by default binary for `.bin` files.
        #[arg(long)]
        format: Option<String>,
    },
}

fn parse_rms(list: &str) -> Result<Vec<RmConfig>> {
    if list.eq_ignore_ascii_case("all") {
        return Ok(RmConfig::all().to_vec());
    }
    list.split(',').map(|s| Ok(s.trim().parse::<RmConfig>()?)).collect()
}

fn print_reports(reports: &[harness::RunReport]) -> Result<()> {
    let mut buf = Vec::new();
    harness::write_summary(&mut buf, reports)?;
    print!("{}", String::from_utf8(buf)?);
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { common, mix, rm, out } => {
            let cfg = common.config()?;
            let mix = common.mix(&mix)?;
            let rm: RmConfig = rm.parse()?;
            let report = harness::run_experiment(&mix, &rm, &cfg)?;
            print_reports(std::slice::from_ref(&report))?;
            if let Some(dir) = out {
                harness::emit_results(&dir, &[report])?;
            }
        }
        Command::Sweep {
            common,
            mix,
            rm,
            out,
            jobs,
            intervals,
            sampling,
        } => {
            let cfg = common.config()?;
            let mixes = mix.iter().map(|m| common.mix(m)).collect::<Result<Vec<_>>>()?;
            let rms = parse_rms(&rm)?;
            if intervals.is_empty() && sampling.is_empty() {
                let reports = harness::sweep(&mixes, &rms, &cfg, jobs)?;
                harness::emit_results(&out, &reports)?;
                print_reports(&reports)?;
            } else {
                if mixes.len() != 1 || rms.len() != 1 {
                    bail!("a parameter sweep takes exactly one mix and one resource manager");
                }
                let intervals = if intervals.is_empty() { vec![cfg.cbp.reconfiguration_interval_ms] } else { intervals };
                let sampling = if sampling.is_empty() { vec![cfg.cbp.prefetch_sampling_period_ms] } else { sampling };
                let points = harness::parameter_sweep(&mixes[0], &rms[0], &cfg, &intervals, &sampling, jobs)?;
                fs::create_dir_all(&out)?;
                let path = out.join("sensitivity.csv");
                harness::write_sensitivity(fs::File::create(&path)?, &points)?;
                print!("{}", fs::read_to_string(&path)?);
            }
        }
        Command::Classify { common, mix, out, jobs } => {
            let cfg = common.config()?;
            let mix = common.mix(&mix)?;
            let env = traces::ClassifyEnv::new(&cfg);
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
            let mut text = String::from("app,class,cache_low,cache_high,bandwidth_low,bandwidth_high,prefetch\n");
            for (id, source) in &mix.apps {
                let s = pool.install(|| traces::classify_sensitivity(source, &env))?;
                text.push_str(&format!(
                    "{id},{},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
                    s.label(),
                    s.cache_low,
                    s.cache_high,
                    s.bandwidth_low,
                    s.bandwidth_high,
                    s.prefetch
                ));
            }
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    fs::write(dir.join("classify.csv"), text)?;
                }
                None => print!("{text}"),
            }
        }
        Command::GenTrace {
            spec,
            out,
            instructions,
            seed,
            format,
        } => {
            let mut spec: SyntheticAppSpec = spec.parse()?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let format = match format {
                Some(f) => f.parse()?,
                None if out.extension().is_some_and(|e| e == "bin") => TraceFormat::Binary,
                None => TraceFormat::Text,
            };
            let records = traces::generate_synthetic(&spec, instructions)?;
            let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            let n = traces::write_trace(file, format, records)?;
            eprintln!("wrote {n} records to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
