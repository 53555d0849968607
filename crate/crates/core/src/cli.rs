//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime failure (unreadable or empty
//! trace, device out of space), 2 on usage errors. Usage errors are detected
//! before anything is simulated, so no report is written in that case.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgGroup, Parser};
use serde::Serialize;

use crate::ahdm::{AdaptPolicy, AhdmConfig};
use crate::engine::{self, DeviceMode, Simulator};
use crate::flash::TierConfig;
use crate::metrics::{self, emit_report, PriceModel, ReportFormat, SimReport};
use crate::trace::{self, SyntheticSpec, TraceFormat, TraceRecord};

pub use crate::metrics::compare;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Hybrid,
    PureSlc,
    PureMlc,
}

impl FromStr for ModeName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hybrid" => Ok(ModeName::Hybrid),
            "pure-slc" => Ok(ModeName::PureSlc),
            "pure-mlc" => Ok(ModeName::PureMlc),
            other => Err(format!(
                "unknown mode `{other}` (hybrid, pure-slc, pure-mlc)"
            )),
        }
    }
}

/// `slc_chips=A..B`, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RatioSweep {
    pub first: u32,
    pub last: u32,
}

impl FromStr for RatioSweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let range = s
            .strip_prefix("slc_chips=")
            .ok_or_else(|| "expected slc_chips=A..B".to_string())?;
        let (a, b) = range
            .split_once("..")
            .ok_or_else(|| "expected a range A..B".to_string())?;
        let b = b.strip_prefix('=').unwrap_or(b);
        let first: u32 = a.parse().map_err(|_| format!("bad range start `{a}`"))?;
        let last: u32 = b.parse().map_err(|_| format!("bad range end `{b}`"))?;
        if first == 0 || first > last {
            return Err("range must satisfy 1 <= A <= B".into());
        }
        Ok(RatioSweep { first, last })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hybrid-ssd",
    about = "Simulate an SLC/MLC multi-tiered SSD with adaptive hot data migration",
    group(ArgGroup::new("source").required(true).args(["trace", "synthetic"]))
)]
pub struct Args {
    /// Trace file to replay.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Trace file format.
    #[arg(long, default_value = "csv", value_name = "msr|csv")]
    pub format: TraceFormat,
    /// Synthetic workload, e.g. `n=1000,write_ratio=0.9,zipf=1.0,pages=256,seed=1`.
    #[arg(long, value_name = "SPEC")]
    pub synthetic: Option<SyntheticSpec>,
    /// Device modes to simulate.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "hybrid,pure-slc,pure-mlc"
    )]
    pub mode: Vec<ModeName>,
    /// Migration threshold (referrals before promotion).
    #[arg(long, default_value_t = 2)]
    pub threshold: u32,
    /// Warm list capacity [default: 4 x hot capacity].
    #[arg(long)]
    pub warm_cap: Option<usize>,
    /// Hot list capacity [default: usable SLC pages].
    #[arg(long)]
    pub hot_cap: Option<usize>,
    /// Blocks per SLC chip.
    #[arg(long, default_value_t = 16)]
    pub slc_blocks: u32,
    /// Blocks per MLC chip.
    #[arg(long, default_value_t = 16)]
    pub mlc_blocks: u32,
    /// SLC chips in the hybrid device.
    #[arg(long, default_value_t = 1)]
    pub slc_chips: u32,
    /// MLC chips in the hybrid and pure-MLC devices.
    #[arg(long, default_value_t = 10)]
    pub mlc_chips: u32,
    /// SLC program/erase endurance.
    #[arg(long)]
    pub slc_endurance: Option<u64>,
    /// MLC program/erase endurance.
    #[arg(long)]
    pub mlc_endurance: Option<u64>,
    /// Threshold adaptation: `off` or `watermark:low,high,step,min,max`.
    #[arg(long, default_value = "off")]
    pub adapt: AdaptPolicy,
    /// Requests between adaptation steps.
    #[arg(long, default_value_t = engine::DEFAULT_ADAPT_INTERVAL)]
    pub adapt_interval: u64,
    /// Run the hybrid device once per SLC chip count, e.g. `slc_chips=1..4`.
    #[arg(long, value_name = "RANGE")]
    pub ratio_sweep: Option<RatioSweep>,
    /// Report formats.
    #[arg(long, value_delimiter = ',', default_value = "json")]
    pub report: Vec<ReportFormat>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Seed for the synthetic workload (overrides `seed=` in --synthetic).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the fully resolved configuration as JSON before running.
    #[arg(long)]
    pub dump_config: bool,
}

/// One simulation to perform.
#[derive(Debug, Clone, Serialize)]
pub struct RunPlan {
    pub label: String,
    pub device: DeviceMode,
    pub slc_chips: u32,
    pub mlc_chips: u32,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceSource {
    File { path: PathBuf, format: TraceFormat },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, Serialize)]
pub struct CliConfig {
    pub source: TraceSource,
    pub runs: Vec<RunPlan>,
    pub adapt_interval: u64,
    pub price_model: PriceModel,
    pub reports: Vec<ReportFormat>,
    pub out: PathBuf,
}

#[derive(Debug)]
struct UsageError {
    flag: &'static str,
    message: String,
}

fn usage(flag: &'static str, message: impl Into<String>) -> UsageError {
    UsageError {
        flag,
        message: message.into(),
    }
}

fn resolve(args: &Args) -> Result<CliConfig, UsageError> {
    let source = match (&args.trace, &args.synthetic) {
        (Some(path), None) => TraceSource::File {
            path: path.clone(),
            format: args.format,
        },
        (None, Some(spec)) => {
            let mut spec = spec.clone();
            if let Some(seed) = args.seed {
                spec.seed = seed;
            }
            TraceSource::Synthetic(spec)
        }
        _ => {
            return Err(usage(
                "--trace",
                "give exactly one of --trace or --synthetic",
            ))
        }
    };
    if args.mode.is_empty() {
        return Err(usage("--mode", "at least one mode is required"));
    }
    if args.report.is_empty() {
        return Err(usage("--report", "at least one report format is required"));
    }
    for (flag, v) in [
        ("--slc-blocks", args.slc_blocks),
        ("--mlc-blocks", args.mlc_blocks),
        ("--slc-chips", args.slc_chips),
        ("--mlc-chips", args.mlc_chips),
    ] {
        if v == 0 {
            return Err(usage(flag, "must be positive"));
        }
    }
    if args.adapt_interval == 0 {
        return Err(usage("--adapt-interval", "must be positive"));
    }

    let slc_tier = |chips: u32| {
        let mut t = TierConfig::slc(args.slc_blocks * chips);
        if let Some(e) = args.slc_endurance {
            t.endurance = e;
        }
        t
    };
    let mut mlc = TierConfig::mlc(args.mlc_blocks * args.mlc_chips);
    if let Some(e) = args.mlc_endurance {
        mlc.endurance = e;
    }
    mlc.validate()
        .map_err(|e| usage("--mlc-blocks", e.to_string()))?;

    let hybrid = |slc_chips: u32, label: String| -> Result<RunPlan, UsageError> {
        let slc = slc_tier(slc_chips);
        slc.validate()
            .map_err(|e| usage("--slc-blocks", e.to_string()))?;
        let usable = slc.usable_pages() as usize;
        let hot = args.hot_cap.unwrap_or(usable);
        if hot == 0 || hot > usable {
            return Err(usage(
                "--hot-cap",
                format!("hot capacity must lie in 1..={usable} (usable SLC pages)"),
            ));
        }
        let ahdm = AhdmConfig {
            warm_capacity: args.warm_cap.unwrap_or(4 * hot),
            hot_capacity: hot,
            threshold: args.threshold,
            adapt_policy: args.adapt,
        };
        ahdm.validate().map_err(|e| {
            let flag = if args.warm_cap == Some(0) {
                "--warm-cap"
            } else if matches!(args.adapt, AdaptPolicy::Off) {
                "--threshold"
            } else {
                "--adapt"
            };
            usage(flag, e.to_string())
        })?;
        Ok(RunPlan {
            label,
            device: DeviceMode::Hybrid {
                slc,
                mlc: mlc.clone(),
                ahdm,
            },
            slc_chips,
            mlc_chips: args.mlc_chips,
        })
    };

    let mut runs = Vec::new();
    for mode in &args.mode {
        match mode {
            ModeName::Hybrid => match args.ratio_sweep {
                Some(sweep) => {
                    for n in sweep.first..=sweep.last {
                        runs.push(hybrid(n, format!("hybrid-slc{n}"))?);
                    }
                }
                None => runs.push(hybrid(args.slc_chips, "hybrid".into())?),
            },
            ModeName::PureMlc => runs.push(RunPlan {
                label: "pure-mlc".into(),
                device: DeviceMode::PureMlc { mlc: mlc.clone() },
                slc_chips: 0,
                mlc_chips: args.mlc_chips,
            }),
            ModeName::PureSlc => {
                // same raw page count as the MLC tier, priced per chip
                let pages = mlc.total_pages();
                let mut slc = slc_tier(1);
                slc.num_blocks = pages.div_ceil(u64::from(slc.pages_per_block)) as u32;
                slc.validate()
                    .map_err(|e| usage("--mlc-blocks", e.to_string()))?;
                runs.push(RunPlan {
                    label: "pure-slc".into(),
                    device: DeviceMode::PureSlc { slc },
                    slc_chips: args.mlc_chips,
                    mlc_chips: 0,
                });
            }
        }
    }
    if args.ratio_sweep.is_some() && !args.mode.contains(&ModeName::Hybrid) {
        return Err(usage("--ratio-sweep", "needs the hybrid mode"));
    }

    Ok(CliConfig {
        source,
        runs,
        adapt_interval: args.adapt_interval,
        price_model: PriceModel::default(),
        reports: args.report.clone(),
        out: args.out.clone(),
    })
}

fn load_trace(source: &TraceSource) -> Result<Vec<TraceRecord>, String> {
    match source {
        TraceSource::Synthetic(spec) => trace::generate_synthetic(spec).map_err(|e| e.to_string()),
        TraceSource::File { path, format } => {
            let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let parsed = trace::parse(BufReader::new(file), *format)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            for m in &parsed.malformed {
                eprintln!("warning: {}: skipped {m}", path.display());
            }
            Ok(parsed.records)
        }
    }
}

/// Runs every plan, each on its own thread.
pub fn run_plans(config: &CliConfig, trace: &[TraceRecord]) -> Result<Vec<SimReport>, String> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .runs
            .iter()
            .map(|plan| {
                scope.spawn(move || {
                    let sim = Simulator::new(plan.device.clone())
                        .map_err(|e| format!("{}: {e}", plan.label))?
                        .with_label(plan.label.clone())
                        .with_chips(plan.slc_chips, plan.mlc_chips)
                        .with_price_model(config.price_model)
                        .with_adapt_interval(config.adapt_interval);
                    engine::run_with(trace, sim).map_err(|e| format!("{}: {e}", plan.label))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    })
}

fn write_outputs(config: &CliConfig, reports: &[SimReport]) -> Result<(), String> {
    let write = |name: &str, bytes: &[u8]| {
        let path = config.out.join(name);
        fs::write(&path, bytes).map_err(|e| format!("{}: {e}", path.display()))
    };
    for format in &config.reports {
        match format {
            ReportFormat::PlotDat => {
                for (name, body) in metrics::plot_dat_files(reports) {
                    write(&name, body.as_bytes())?;
                }
            }
            _ => {
                for r in reports {
                    write(
                        &format!("{}.{}", r.mode, format.extension()),
                        &emit_report(r, *format),
                    )?;
                }
            }
        }
    }
    if reports.len() >= 2 {
        let cmp = compare(reports).map_err(|e| e.to_string())?;
        println!("{cmp}");
        write("comparison.txt", format!("{cmp}\n").as_bytes())?;
        write("comparison.csv", cmp.to_csv().as_bytes())?;
    }
    Ok(())
}

fn ensure_writable(dir: &Path) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let meta = fs::metadata(dir).map_err(|e| e.to_string())?;
    if meta.permissions().readonly() {
        return Err("directory is read-only".into());
    }
    Ok(())
}

/// Entry point behind the binary; returns the process exit code.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match resolve(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {}", e.flag, e.message);
            return 2;
        }
    };
    if let Err(e) = ensure_writable(&config.out) {
        eprintln!("error: --out: {}: {e}", config.out.display());
        return 2;
    }
    if args.dump_config {
        println!(
            "{}",
            serde_json::to_string_pretty(&config).expect("config serializes")
        );
    }

    let trace = match load_trace(&config.source) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let reports = match run_plans(&config, &trace) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match write_outputs(&config, &reports) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(extra: &[&str]) -> Args {
        let mut argv = vec!["hybrid-ssd", "--synthetic", "n=10"];
        argv.extend_from_slice(extra);
        Args::try_parse_from(argv).unwrap()
    }

    #[test]
    fn ratio_sweep_syntax() {
        assert_eq!(
            "slc_chips=1..4".parse::<RatioSweep>(),
            Ok(RatioSweep { first: 1, last: 4 })
        );
        assert_eq!(
            "slc_chips=2..=3".parse::<RatioSweep>(),
            Ok(RatioSweep { first: 2, last: 3 })
        );
        assert!("slc_chips=4..1".parse::<RatioSweep>().is_err());
        assert!("chips=1..2".parse::<RatioSweep>().is_err());
    }

    #[test]
    fn defaults_follow_device_defaults() {
        let cfg = resolve(&parse(&[])).unwrap();
        let labels: Vec<_> = cfg.runs.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["hybrid", "pure-slc", "pure-mlc"]);
        let DeviceMode::Hybrid { slc, mlc, ahdm } = &cfg.runs[0].device else {
            panic!("hybrid first");
        };
        assert_eq!((slc.read_us, slc.program_us, slc.erase_us), (45, 240, 500));
        assert_eq!((mlc.read_us, mlc.program_us, mlc.erase_us), (50, 1000, 500));
        assert_eq!((slc.endurance, mlc.endurance), (100_000, 10_000));
        assert_eq!((slc.pages_per_block, mlc.pages_per_block), (64, 128));
        assert_eq!(ahdm.hot_capacity as u64, slc.usable_pages());
        assert_eq!(ahdm.warm_capacity, 4 * ahdm.hot_capacity);
        assert_eq!(ahdm.adapt_policy, AdaptPolicy::Off);
        assert_eq!((cfg.runs[0].slc_chips, cfg.runs[0].mlc_chips), (1, 10));
        assert_eq!(cfg.price_model, PriceModel::default());
    }

    #[test]
    fn oversized_hot_cap_names_flag() {
        let err = resolve(&parse(&["--hot-cap", "100000"])).unwrap_err();
        assert_eq!(err.flag, "--hot-cap");
    }

    #[test]
    fn sweep_expands_hybrid_runs() {
        let cfg = resolve(&parse(&[
            "--mode",
            "hybrid",
            "--ratio-sweep",
            "slc_chips=1..3",
        ]))
        .unwrap();
        let chips: Vec<_> = cfg.runs.iter().map(|r| r.slc_chips).collect();
        assert_eq!(chips, [1, 2, 3]);
    }
}
