//! Trace replay over a hybrid, pure-SLC or pure-MLC device.
//!
//! Requests are processed back to back. Each request is split into
//! single-page operations on consecutive logical pages and its latency is
//! the sum of theirs. In hybrid mode every written page is classified by
//! the AHDM lists: pages in the hot list live on SLC, everything else on
//! MLC, and migrations run inline on the request that triggers them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahdm::{AhdmClassifier, AhdmConfig, ConfigError, DecisionClass, Lpn};
use crate::flash::{FlashDevice, FlashError, Tier, TierConfig, TierKind};
use crate::metrics::{self, PriceModel, SimReport, TierReport};
use crate::trace::{Op, TraceRecord};

pub const DEFAULT_ADAPT_INTERVAL: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DeviceMode {
    Hybrid {
        slc: TierConfig,
        mlc: TierConfig,
        ahdm: AhdmConfig,
    },
    PureSlc {
        slc: TierConfig,
    },
    PureMlc {
        mlc: TierConfig,
    },
}

impl DeviceMode {
    /// Hybrid device whose hot list exactly fills the usable SLC pages.
    pub fn hybrid(slc: TierConfig, mlc: TierConfig, threshold: u32) -> Self {
        let ahdm = AhdmConfig::for_slc_pages(slc.usable_pages() as usize, threshold);
        DeviceMode::Hybrid { slc, mlc, ahdm }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DeviceMode::Hybrid { .. } => "hybrid",
            DeviceMode::PureSlc { .. } => "pure-slc",
            DeviceMode::PureMlc { .. } => "pure-mlc",
        }
    }

    /// Chip counts matching the 1:10 hybrid layout and the ten-chip
    /// single-technology drives it is priced against.
    pub fn default_chips(&self) -> (u32, u32) {
        match self {
            DeviceMode::Hybrid { .. } => (1, 10),
            DeviceMode::PureSlc { .. } => (10, 0),
            DeviceMode::PureMlc { .. } => (0, 10),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Flash(#[from] FlashError),
    #[error(transparent)]
    Ahdm(#[from] ConfigError),
    #[error("invalid device configuration: {0}")]
    Config(String),
    #[error("trace is empty")]
    EmptyTrace,
}

/// Result of one trace request.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RequestOutcome {
    pub latency_us: u64,
    pub pages_touched: u64,
    pub decisions: Vec<DecisionClass>,
    pub migrations: u64,
}

#[derive(Debug, Clone, Default)]
struct Counters {
    requests: u64,
    read_requests: u64,
    write_requests: u64,
    read_page_ops: u64,
    write_page_ops: u64,
    cold_inserts: u64,
    warm_refreshes: u64,
    promotions: u64,
    hot_hits: u64,
    warm_evictions: u64,
    demotions: u64,
    slc_writes: u64,
    unmapped_reads: u64,
    total_latency_us: u64,
    migrations: u64,
    migration_latency_us: u64,
}

pub struct Simulator {
    label: String,
    flash: FlashDevice,
    classifier: Option<AhdmClassifier>,
    page_size: u64,
    unmapped_read_us: u64,
    adapt_interval: u64,
    chips: (u32, u32),
    price_model: PriceModel,
    counters: Counters,
    trajectory: Vec<u32>,
}

impl Simulator {
    pub fn new(mode: DeviceMode) -> Result<Self, EngineError> {
        let label = mode.label().to_string();
        let chips = mode.default_chips();
        let (flash, classifier, page_size) = match mode {
            DeviceMode::Hybrid { slc, mlc, ahdm } => {
                if slc.page_size_bytes != mlc.page_size_bytes {
                    return Err(EngineError::Config("SLC and MLC page sizes differ".into()));
                }
                if ahdm.hot_capacity as u64 > slc.usable_pages() {
                    return Err(EngineError::Config(format!(
                        "hot list capacity {} exceeds the {} usable SLC pages",
                        ahdm.hot_capacity,
                        slc.usable_pages()
                    )));
                }
                let page_size = slc.page_size_bytes;
                let flash = FlashDevice::new(Some(slc), Some(mlc))?;
                (flash, Some(AhdmClassifier::new(ahdm)?), page_size)
            }
            DeviceMode::PureSlc { slc } => {
                let page_size = slc.page_size_bytes;
                (FlashDevice::new(Some(slc), None)?, None, page_size)
            }
            DeviceMode::PureMlc { mlc } => {
                let page_size = mlc.page_size_bytes;
                (FlashDevice::new(None, Some(mlc))?, None, page_size)
            }
        };
        let default_tier = if flash.has_tier(TierKind::Mlc) {
            TierKind::Mlc
        } else {
            TierKind::Slc
        };
        let unmapped_read_us = flash.tier(default_tier)?.config().read_us;
        Ok(Self {
            label,
            flash,
            classifier,
            page_size,
            unmapped_read_us,
            adapt_interval: DEFAULT_ADAPT_INTERVAL,
            chips,
            price_model: PriceModel::default(),
            counters: Counters::default(),
            trajectory: Vec::new(),
        })
    }

    pub fn with_adapt_interval(mut self, requests: u64) -> Self {
        self.adapt_interval = requests.max(1);
        self
    }

    pub fn with_chips(mut self, slc_chips: u32, mlc_chips: u32) -> Self {
        self.chips = (slc_chips, mlc_chips);
        self
    }

    pub fn with_price_model(mut self, model: PriceModel) -> Self {
        self.price_model = model;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn flash(&self) -> &FlashDevice {
        &self.flash
    }

    pub fn classifier(&self) -> Option<&AhdmClassifier> {
        self.classifier.as_ref()
    }

    pub fn page_size(&self) -> u64 {
        self.page_size
    }

    /// Page-ops that wrote data, as counted by the engine.
    pub fn write_page_ops(&self) -> u64 {
        self.counters.write_page_ops
    }

    /// Page moves between tiers performed so far.
    pub fn migrations(&self) -> u64 {
        self.counters.migrations
    }

    pub fn unmapped_reads(&self) -> u64 {
        self.counters.unmapped_reads
    }

    pub fn total_latency_us(&self) -> u64 {
        self.counters.total_latency_us
    }

    /// Reads of never-written pages are charged this latency.
    pub fn unmapped_read_us(&self) -> u64 {
        self.unmapped_read_us
    }

    pub fn process(&mut self, record: &TraceRecord) -> Result<RequestOutcome, EngineError> {
        let start = record.start_page(self.page_size);
        let pages = record.page_count(self.page_size);
        let mut outcome = RequestOutcome {
            pages_touched: pages,
            ..Default::default()
        };

        self.counters.requests += 1;
        match record.op {
            Op::Read => self.counters.read_requests += 1,
            Op::Write => self.counters.write_requests += 1,
        }

        for lpn in start..start + pages {
            match record.op {
                Op::Read => outcome.latency_us += self.read_page(lpn)?,
                Op::Write => self.write_page(lpn, &mut outcome)?,
            }
        }
        self.counters.total_latency_us += outcome.latency_us;

        if self.counters.requests.is_multiple_of(self.adapt_interval) {
            if let Some(c) = self.classifier.as_mut() {
                let live = self
                    .flash
                    .tier(TierKind::Slc)
                    .map(|t| t.stats().live_fraction)
                    .unwrap_or(0.0);
                // a no-op returning the fixed threshold when adaptation is off
                self.trajectory.push(c.adapt(live));
            }
        }
        Ok(outcome)
    }

    fn read_page(&mut self, lpn: Lpn) -> Result<u64, EngineError> {
        self.counters.read_page_ops += 1;
        if let Some(c) = &self.classifier {
            c.on_read(lpn);
            debug_assert!(self
                .flash
                .location(lpn)
                .is_none_or(|a| (a.tier == TierKind::Slc) == c.is_hot(lpn)));
        }
        match self.flash.read_page(lpn) {
            Ok(us) => Ok(us),
            Err(FlashError::Unmapped(_)) => {
                self.counters.unmapped_reads += 1;
                Ok(self.unmapped_read_us)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn write_page(&mut self, lpn: Lpn, outcome: &mut RequestOutcome) -> Result<(), EngineError> {
        self.counters.write_page_ops += 1;
        let Some(classifier) = self.classifier.as_mut() else {
            let kind = if self.flash.has_tier(TierKind::Mlc) {
                TierKind::Mlc
            } else {
                self.counters.slc_writes += 1;
                TierKind::Slc
            };
            outcome.latency_us += self.flash.write_page(lpn, kind)?;
            return Ok(());
        };

        let decision = classifier.on_write(lpn);
        outcome.decisions.push(decision.class);
        let c = &mut self.counters;
        match decision.class {
            DecisionClass::ColdInsert => {
                c.cold_inserts += 1;
                if decision.warm_evicted.is_some() {
                    c.warm_evictions += 1;
                }
                outcome.latency_us += self.flash.write_page(lpn, TierKind::Mlc)?;
            }
            DecisionClass::WarmRefresh => {
                c.warm_refreshes += 1;
                outcome.latency_us += self.flash.write_page(lpn, TierKind::Mlc)?;
            }
            DecisionClass::HotHit => {
                c.hot_hits += 1;
                c.slc_writes += 1;
                outcome.latency_us += self.flash.write_page(lpn, TierKind::Slc)?;
            }
            DecisionClass::Promote => {
                c.promotions += 1;
                c.slc_writes += 1;
                let on_mlc = self
                    .flash
                    .location(lpn)
                    .is_some_and(|a| a.tier == TierKind::Mlc);
                if on_mlc {
                    // The write lands where the page lives, then the page
                    // moves up. Demotion goes first so SLC never holds more
                    // than the hot list.
                    outcome.latency_us += self.flash.write_page(lpn, TierKind::Mlc)?;
                    if let Some(victim) = decision.demoted {
                        self.demote(victim, outcome)?;
                    }
                    self.migrate(lpn, TierKind::Slc, outcome)?;
                } else {
                    if let Some(victim) = decision.demoted {
                        self.demote(victim, outcome)?;
                    }
                    outcome.latency_us += self.flash.write_page(lpn, TierKind::Slc)?;
                }
            }
        }
        debug_assert!(self.residency_ok(lpn));
        Ok(())
    }

    fn demote(&mut self, lpn: Lpn, outcome: &mut RequestOutcome) -> Result<(), EngineError> {
        self.counters.demotions += 1;
        self.migrate(lpn, TierKind::Mlc, outcome)?;
        debug_assert!(self.residency_ok(lpn));
        Ok(())
    }

    fn migrate(
        &mut self,
        lpn: Lpn,
        dst: TierKind,
        outcome: &mut RequestOutcome,
    ) -> Result<(), EngineError> {
        let us = self.flash.migrate_page(lpn, dst)?;
        self.counters.migrations += 1;
        self.counters.migration_latency_us += us;
        outcome.migrations += 1;
        outcome.latency_us += us;
        Ok(())
    }

    fn residency_ok(&self, lpn: Lpn) -> bool {
        let Some(c) = &self.classifier else {
            return true;
        };
        match self.flash.location(lpn) {
            Some(addr) => (addr.tier == TierKind::Slc) == c.is_hot(lpn),
            None => !c.is_hot(lpn),
        }
    }

    /// Whole-device invariants: flash consistency, hot residency and write
    /// conservation. Linear in device size.
    pub fn check_invariants(&self) -> Result<(), String> {
        self.flash.check_invariants()?;
        if let Some(c) = &self.classifier {
            c.check_invariants()?;
            for lpn in c.hot_entries() {
                match self.flash.location(lpn) {
                    Some(a) if a.tier == TierKind::Slc => {}
                    other => return Err(format!("hot page {lpn} not on SLC: {other:?}")),
                }
            }
            if let Ok(slc) = self.flash.tier(TierKind::Slc) {
                if slc.valid_pages() != c.hot_len() as u64 {
                    return Err(format!(
                        "SLC holds {} pages but the hot list has {}",
                        slc.valid_pages(),
                        c.hot_len()
                    ));
                }
            }
        }
        let programs: u64 = self
            .flash
            .tiers()
            .flat_map(|t| t.blocks().iter().map(|b| b.program_count))
            .sum();
        let relocations: u64 = self
            .flash
            .tiers()
            .map(|t| t.counters().relocation_programs)
            .sum();
        let expected = self.counters.write_page_ops + self.counters.migrations + relocations;
        if programs != expected {
            return Err(format!(
                "{programs} programs issued, expected {expected} (writes + migrations + relocations)"
            ));
        }
        Ok(())
    }

    pub fn report(&self) -> SimReport {
        let c = &self.counters;
        let page_ops = c.read_page_ops + c.write_page_ops;
        let hot_fraction = if c.write_page_ops == 0 {
            0.0
        } else {
            c.slc_writes as f64 / c.write_page_ops as f64
        };
        let mean = |total: u64, n: u64| if n == 0 { 0.0 } else { total as f64 / n as f64 };
        let tier_report = |kind| self.flash.tier(kind).map(tier_report).unwrap_or_default();
        SimReport {
            mode: self.label.clone(),
            total_requests: c.requests,
            read_requests: c.read_requests,
            write_requests: c.write_requests,
            total_page_ops: page_ops,
            read_page_ops: c.read_page_ops,
            write_page_ops: c.write_page_ops,
            cold_inserts: c.cold_inserts,
            warm_refreshes: c.warm_refreshes,
            promotions: c.promotions,
            hot_hits: c.hot_hits,
            warm_evictions: c.warm_evictions,
            demotions: c.demotions,
            hot_fraction,
            unmapped_reads: c.unmapped_reads,
            total_latency_us: c.total_latency_us,
            mean_access_time_us: mean(c.total_latency_us, c.requests),
            mean_page_op_time_us: mean(c.total_latency_us, page_ops),
            migration_count: c.migrations,
            migration_latency_us: c.migration_latency_us,
            slc: tier_report(TierKind::Slc),
            mlc: tier_report(TierKind::Mlc),
            slc_chips: self.chips.0,
            mlc_chips: self.chips.1,
            price_usd: metrics::price(self.chips.0, self.chips.1, &self.price_model),
            threshold_trajectory: self.trajectory.clone(),
        }
    }
}

fn tier_report(tier: &Tier) -> TierReport {
    let stats = tier.stats();
    let c = tier.counters();
    TierReport {
        num_blocks: u64::from(tier.config().num_blocks),
        pages_per_block: u64::from(tier.config().pages_per_block),
        mean_programs_per_block: stats.mean_programs_per_block,
        max_erase_cycles: stats.max_erase_cycles,
        total_programs: c.programs,
        host_programs: c.host_programs,
        relocation_programs: c.relocation_programs,
        migration_programs: c.migration_programs,
        reads: c.reads,
        erases: c.erases,
        live_fraction: stats.live_fraction,
        saturated: stats.saturated,
    }
}

/// Replays `trace` on a fresh device.
pub fn run<'a>(
    trace: impl IntoIterator<Item = &'a TraceRecord>,
    mode: DeviceMode,
    adapt_interval: u64,
) -> Result<SimReport, EngineError> {
    run_with(
        trace,
        Simulator::new(mode)?.with_adapt_interval(adapt_interval),
    )
}

/// Replays `trace` on an already configured simulator.
pub fn run_with<'a>(
    trace: impl IntoIterator<Item = &'a TraceRecord>,
    mut sim: Simulator,
) -> Result<SimReport, EngineError> {
    let mut any = false;
    for record in trace {
        any = true;
        sim.process(record)?;
    }
    if !any {
        return Err(EngineError::EmptyTrace);
    }
    Ok(sim.report())
}

/// Runs the same input `runs` times and checks that every serialized report
/// is byte-identical to the first.
pub fn replay_deterministic(
    trace: &[TraceRecord],
    mode: &DeviceMode,
    runs: usize,
) -> Result<bool, EngineError> {
    let mut first: Option<Vec<u8>> = None;
    for _ in 0..runs.max(2) {
        let report = run(trace, mode.clone(), DEFAULT_ADAPT_INTERVAL)?;
        let bytes = serde_json::to_vec(&report).expect("report serializes");
        match &first {
            None => first = Some(bytes),
            Some(f) if *f != bytes => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}
