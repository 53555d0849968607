//! Report types, the price model and the derived gain figures.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("baseline must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("comparison needs at least two reports, got {0}")]
    TooFewReports(usize),
    #[error("chip prices must be positive")]
    InvalidPrice,
}

/// Per-chip prices in US dollars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceModel {
    pub slc_chip_usd: f64,
    pub mlc_chip_usd: f64,
}

impl Default for PriceModel {
    fn default() -> Self {
        Self {
            slc_chip_usd: 3.00,
            mlc_chip_usd: 0.90,
        }
    }
}

impl PriceModel {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.slc_chip_usd > 0.0 && self.mlc_chip_usd > 0.0 {
            Ok(())
        } else {
            Err(MetricsError::InvalidPrice)
        }
    }
}

pub fn price(num_slc_chips: u32, num_mlc_chips: u32, model: &PriceModel) -> f64 {
    f64::from(num_slc_chips) * model.slc_chip_usd + f64::from(num_mlc_chips) * model.mlc_chip_usd
}

/// Percentage reduction of `candidate` relative to `baseline`.
fn reduction_percent(baseline: f64, candidate: f64) -> Result<f64, MetricsError> {
    if baseline.is_nan() || baseline <= 0.0 {
        return Err(MetricsError::NonPositiveBaseline(baseline));
    }
    Ok(100.0 * (baseline - candidate) / baseline)
}

/// Lifespan gain reported as the percent reduction in mean programs per
/// block.
pub fn lifespan_gain(
    baseline_mean_programs: f64,
    hybrid_mean_programs: f64,
) -> Result<f64, MetricsError> {
    reduction_percent(baseline_mean_programs, hybrid_mean_programs)
}

pub fn access_time_gain(baseline_mean_us: f64, hybrid_mean_us: f64) -> Result<f64, MetricsError> {
    reduction_percent(baseline_mean_us, hybrid_mean_us)
}

/// Wear and activity of one tier. All zeros for a tier the device lacks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TierReport {
    pub num_blocks: u64,
    pub pages_per_block: u64,
    pub mean_programs_per_block: f64,
    pub max_erase_cycles: u64,
    pub total_programs: u64,
    pub host_programs: u64,
    pub relocation_programs: u64,
    pub migration_programs: u64,
    pub reads: u64,
    pub erases: u64,
    pub live_fraction: f64,
    pub saturated: bool,
}

/// Everything measured in one simulation run. Field order is the
/// serialization order for every output format.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub mode: String,
    pub total_requests: u64,
    pub read_requests: u64,
    pub write_requests: u64,
    pub total_page_ops: u64,
    pub read_page_ops: u64,
    pub write_page_ops: u64,
    pub cold_inserts: u64,
    pub warm_refreshes: u64,
    pub promotions: u64,
    pub hot_hits: u64,
    pub warm_evictions: u64,
    pub demotions: u64,
    /// Share of write page-ops answered by SLC.
    pub hot_fraction: f64,
    pub unmapped_reads: u64,
    pub total_latency_us: u64,
    /// Mean latency per request.
    pub mean_access_time_us: f64,
    pub mean_page_op_time_us: f64,
    pub migration_count: u64,
    pub migration_latency_us: u64,
    pub slc: TierReport,
    pub mlc: TierReport,
    pub slc_chips: u32,
    pub mlc_chips: u32,
    pub price_usd: f64,
    pub threshold_trajectory: Vec<u32>,
}

impl SimReport {
    /// The tier whose wear the lifespan figures track: MLC when present.
    pub fn wear_tier(&self) -> &TierReport {
        if self.mlc.num_blocks > 0 {
            &self.mlc
        } else {
            &self.slc
        }
    }

    /// Flattened `(column, value)` pairs in csv column order.
    pub fn columns(&self) -> Vec<(String, String)> {
        let mut cols: Vec<(String, String)> = Vec::with_capacity(48);
        let mut push = |k: &str, v: String| cols.push((k.to_string(), v));
        push("mode", self.mode.clone());
        push("total_requests", self.total_requests.to_string());
        push("read_requests", self.read_requests.to_string());
        push("write_requests", self.write_requests.to_string());
        push("total_page_ops", self.total_page_ops.to_string());
        push("read_page_ops", self.read_page_ops.to_string());
        push("write_page_ops", self.write_page_ops.to_string());
        push("cold_inserts", self.cold_inserts.to_string());
        push("warm_refreshes", self.warm_refreshes.to_string());
        push("promotions", self.promotions.to_string());
        push("hot_hits", self.hot_hits.to_string());
        push("warm_evictions", self.warm_evictions.to_string());
        push("demotions", self.demotions.to_string());
        push("hot_fraction", self.hot_fraction.to_string());
        push("unmapped_reads", self.unmapped_reads.to_string());
        push("total_latency_us", self.total_latency_us.to_string());
        push("mean_access_time_us", self.mean_access_time_us.to_string());
        push(
            "mean_page_op_time_us",
            self.mean_page_op_time_us.to_string(),
        );
        push("migration_count", self.migration_count.to_string());
        push(
            "migration_latency_us",
            self.migration_latency_us.to_string(),
        );
        for (prefix, t) in [("slc", &self.slc), ("mlc", &self.mlc)] {
            let mut p = |k: &str, v: String| push(&format!("{prefix}_{k}"), v);
            p("num_blocks", t.num_blocks.to_string());
            p("pages_per_block", t.pages_per_block.to_string());
            p(
                "mean_programs_per_block",
                t.mean_programs_per_block.to_string(),
            );
            p("max_erase_cycles", t.max_erase_cycles.to_string());
            p("total_programs", t.total_programs.to_string());
            p("host_programs", t.host_programs.to_string());
            p("relocation_programs", t.relocation_programs.to_string());
            p("migration_programs", t.migration_programs.to_string());
            p("reads", t.reads.to_string());
            p("erases", t.erases.to_string());
            p("live_fraction", t.live_fraction.to_string());
            p("saturated", t.saturated.to_string());
        }
        push("slc_chips", self.slc_chips.to_string());
        push("mlc_chips", self.mlc_chips.to_string());
        push("price_usd", self.price_usd.to_string());
        let trajectory: Vec<String> = self
            .threshold_trajectory
            .iter()
            .map(u32::to_string)
            .collect();
        push("threshold_trajectory", trajectory.join(";"));
        cols
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReportFormat {
    Json,
    Csv,
    PlotDat,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::PlotDat => "dat",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "plot-dat" | "dat" => Ok(ReportFormat::PlotDat),
            other => Err(format!("unknown report format `{other}`")),
        }
    }
}

/// Serializes one report.
///
/// * `Json`: pretty-printed object, fields in [`SimReport`] order.
/// * `Csv`: a header line and one data line, columns from
///   [`SimReport::columns`]; the threshold trajectory is `;`-separated.
/// * `PlotDat`: the four figure blocks produced by [`plot_dat_files`], each
///   introduced by a `# <name>` comment and separated by two blank lines.
pub fn emit_report(report: &SimReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s.into_bytes()
        }
        ReportFormat::Csv => {
            let cols = report.columns();
            let header: Vec<&str> = cols.iter().map(|(k, _)| k.as_str()).collect();
            let values: Vec<&str> = cols.iter().map(|(_, v)| v.as_str()).collect();
            format!("{}\n{}\n", header.join(","), values.join(",")).into_bytes()
        }
        ReportFormat::PlotDat => {
            let blocks: Vec<String> = plot_dat_files(std::slice::from_ref(report))
                .into_iter()
                .map(|(name, body)| format!("# {name}\n{body}"))
                .collect();
            blocks.join("\n\n").into_bytes()
        }
    }
}

/// Whitespace-separated `label value` tables, one per figure: hot fraction,
/// writes per block, access time and the threshold trajectory of every
/// report that has one.
pub fn plot_dat_files(reports: &[SimReport]) -> Vec<(String, String)> {
    let mut hot = String::from("# label hot_fraction\n");
    let mut wear = String::from("# label mean_programs_per_block\n");
    let mut access = String::from("# label mean_access_time_us\n");
    for r in reports {
        let _ = writeln!(hot, "{} {}", r.mode, r.hot_fraction);
        for (tier, t) in [("slc", &r.slc), ("mlc", &r.mlc)] {
            if t.num_blocks > 0 {
                let _ = writeln!(wear, "{}-{tier} {}", r.mode, t.mean_programs_per_block);
            }
        }
        let _ = writeln!(access, "{} {}", r.mode, r.mean_access_time_us);
    }
    let mut files = vec![
        ("hot_fraction.dat".to_string(), hot),
        ("writes_per_block.dat".to_string(), wear),
        ("access_time.dat".to_string(), access),
    ];
    let mut threshold = String::from("# label threshold\n");
    for r in reports
        .iter()
        .filter(|r| !r.threshold_trajectory.is_empty())
    {
        for (i, t) in r.threshold_trajectory.iter().enumerate() {
            let _ = writeln!(threshold, "{}:{i} {t}", r.mode);
        }
    }
    files.push(("threshold.dat".to_string(), threshold));
    files
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub price_usd: f64,
    pub mean_access_time_us: f64,
    pub mean_programs_per_block: f64,
    pub lifespan_gain_pct: Option<f64>,
    pub access_time_gain_pct: Option<f64>,
}

/// Side-by-side view of several runs over the same trace. Gains are
/// relative to the pure-MLC run when there is one, otherwise the last run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn row(&self, label: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,price_usd,mean_access_time_us,mean_programs_per_block,lifespan_gain_pct,access_time_gain_pct\n",
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.label,
                r.price_usd,
                r.mean_access_time_us,
                r.mean_programs_per_block,
                opt(r.lifespan_gain_pct),
                opt(r.access_time_gain_pct)
            );
        }
        out
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<16} {:>10} {:>14} {:>14} {:>12} {:>12}",
            "mode", "price $", "access us", "programs/blk", "life gain %", "time gain %"
        )?;
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        for r in &self.rows {
            writeln!(
                f,
                "{:<16} {:>10.2} {:>14.2} {:>14.2} {:>12} {:>12}",
                r.label,
                r.price_usd,
                r.mean_access_time_us,
                r.mean_programs_per_block,
                opt(r.lifespan_gain_pct),
                opt(r.access_time_gain_pct)
            )?;
        }
        write!(f, "(gains relative to {})", self.baseline)
    }
}

pub fn compare(reports: &[SimReport]) -> Result<Comparison, MetricsError> {
    if reports.len() < 2 {
        return Err(MetricsError::TooFewReports(reports.len()));
    }
    let baseline = reports
        .iter()
        .find(|r| r.mode == "pure-mlc")
        .unwrap_or_else(|| reports.last().expect("non-empty"));
    let base_wear = baseline.wear_tier().mean_programs_per_block;
    let rows = reports
        .iter()
        .map(|r| {
            let wear = r.wear_tier().mean_programs_per_block;
            ComparisonRow {
                label: r.mode.clone(),
                price_usd: r.price_usd,
                mean_access_time_us: r.mean_access_time_us,
                mean_programs_per_block: wear,
                lifespan_gain_pct: lifespan_gain(base_wear, wear).ok(),
                access_time_gain_pct: access_time_gain(
                    baseline.mean_access_time_us,
                    r.mean_access_time_us,
                )
                .ok(),
            }
        })
        .collect();
    Ok(Comparison {
        baseline: baseline.mode.clone(),
        rows,
    })
}
