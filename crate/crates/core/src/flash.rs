//! Page-mapped flash model with one SLC and/or one MLC tier.
//!
//! Each tier uses out-of-place updates with a single append point (the
//! active block) and greedy garbage collection. Latencies are returned per
//! call and every primitive read, program and erase is counted so callers
//! can recompute them.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahdm::Lpn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TierKind {
    Slc,
    Mlc,
}

impl TierKind {
    pub fn other(self) -> Self {
        match self {
            TierKind::Slc => TierKind::Mlc,
            TierKind::Mlc => TierKind::Slc,
        }
    }
}

impl fmt::Display for TierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TierKind::Slc => "slc",
            TierKind::Mlc => "mlc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierConfig {
    pub kind: TierKind,
    pub page_size_bytes: u64,
    pub pages_per_block: u32,
    pub num_blocks: u32,
    pub read_us: u64,
    pub program_us: u64,
    pub erase_us: u64,
    /// Program/erase cycles a block tolerates before the tier counts as
    /// saturated.
    pub endurance: u64,
    /// Garbage collection keeps at least this many erased blocks in reserve.
    pub gc_free_block_threshold: u32,
}

impl TierConfig {
    /// SLC part: 4 KiB pages, 256 KiB blocks, 45/240/500 us, 100k cycles.
    pub fn slc(num_blocks: u32) -> Self {
        Self {
            kind: TierKind::Slc,
            page_size_bytes: 4096,
            pages_per_block: 64,
            num_blocks,
            read_us: 45,
            program_us: 240,
            erase_us: 500,
            endurance: 100_000,
            gc_free_block_threshold: 2,
        }
    }

    /// MLC part: 4 KiB pages, 512 KiB blocks, 50/1000/500 us, 10k cycles.
    pub fn mlc(num_blocks: u32) -> Self {
        Self {
            kind: TierKind::Mlc,
            page_size_bytes: 4096,
            pages_per_block: 128,
            num_blocks,
            read_us: 50,
            program_us: 1000,
            erase_us: 500,
            endurance: 10_000,
            gc_free_block_threshold: 2,
        }
    }

    pub fn with_geometry(mut self, num_blocks: u32, pages_per_block: u32) -> Self {
        self.num_blocks = num_blocks;
        self.pages_per_block = pages_per_block;
        self
    }

    pub fn with_endurance(mut self, endurance: u64) -> Self {
        self.endurance = endurance;
        self
    }

    pub fn with_gc_threshold(mut self, blocks: u32) -> Self {
        self.gc_free_block_threshold = blocks;
        self
    }

    pub fn total_pages(&self) -> u64 {
        u64::from(self.num_blocks) * u64::from(self.pages_per_block)
    }

    /// Live pages the tier can hold while garbage collection is still
    /// guaranteed to find a victim: everything except the GC reserve and
    /// one block of slack.
    pub fn usable_pages(&self) -> u64 {
        u64::from(
            self.num_blocks
                .saturating_sub(self.gc_free_block_threshold + 1),
        ) * u64::from(self.pages_per_block)
    }

    pub fn validate(&self) -> Result<(), FlashError> {
        let bad = |msg: &str| {
            Err(FlashError::InvalidConfig(format!(
                "{} tier: {msg}",
                self.kind
            )))
        };
        if self.page_size_bytes == 0 || self.pages_per_block == 0 {
            return bad("page and block sizes must be positive");
        }
        if self.gc_free_block_threshold == 0 {
            return bad("gc free-block threshold must be at least 1");
        }
        if self.num_blocks <= self.gc_free_block_threshold {
            return bad("needs more blocks than the gc free-block threshold");
        }
        if self.read_us == 0 || self.program_us == 0 || self.erase_us == 0 {
            return bad("timings must be positive");
        }
        if self.endurance == 0 {
            return bad("endurance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlashError {
    #[error("logical page {0} is not mapped")]
    Unmapped(Lpn),
    #[error("{0} tier is full")]
    TierFull(TierKind),
    #[error("{0} tier has no reclaimable block")]
    NoReclaimableBlock(TierKind),
    #[error("device has no {0} tier")]
    NoSuchTier(TierKind),
    #[error("logical page {lpn} already resides on the {tier} tier")]
    AlreadyOnTier { lpn: Lpn, tier: TierKind },
    #[error("{0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockState {
    pub valid_count: u32,
    pub invalid_count: u32,
    pub free_count: u32,
    pub erase_cycles: u64,
    /// Every page program ever issued to this block.
    pub program_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhysAddr {
    pub tier: TierKind,
    pub block: u32,
    pub page: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Free,
    Valid { lpn: Lpn, tag: u64 },
    Invalid,
}

/// Primitive operation counters for one tier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierCounters {
    pub reads: u64,
    pub programs: u64,
    pub erases: u64,
    pub host_programs: u64,
    pub relocation_programs: u64,
    pub migration_programs: u64,
    pub gc_runs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierStats {
    pub mean_programs_per_block: f64,
    pub max_erase_cycles: u64,
    pub saturated: bool,
    pub live_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ProgramKind {
    Host,
    Relocation,
    Migration,
}

#[derive(Debug, Clone)]
pub struct Tier {
    config: TierConfig,
    blocks: Vec<BlockState>,
    slots: Vec<Slot>,
    active: u32,
    free_blocks: VecDeque<u32>,
    saturated: bool,
    counters: TierCounters,
}

impl Tier {
    fn new(config: TierConfig) -> Result<Self, FlashError> {
        config.validate()?;
        let ppb = config.pages_per_block;
        let blocks = vec![
            BlockState {
                free_count: ppb,
                ..BlockState::default()
            };
            config.num_blocks as usize
        ];
        Ok(Self {
            slots: vec![Slot::Free; config.total_pages() as usize],
            blocks,
            active: 0,
            free_blocks: (1..config.num_blocks).collect(),
            saturated: false,
            counters: TierCounters::default(),
            config,
        })
    }

    pub fn config(&self) -> &TierConfig {
        &self.config
    }

    pub fn blocks(&self) -> &[BlockState] {
        &self.blocks
    }

    pub fn counters(&self) -> &TierCounters {
        &self.counters
    }

    pub fn free_block_count(&self) -> usize {
        self.free_blocks.len()
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    pub fn valid_pages(&self) -> u64 {
        self.blocks.iter().map(|b| u64::from(b.valid_count)).sum()
    }

    pub fn stats(&self) -> TierStats {
        let n = self.blocks.len() as f64;
        let programs: u64 = self.blocks.iter().map(|b| b.program_count).sum();
        TierStats {
            mean_programs_per_block: programs as f64 / n,
            max_erase_cycles: self
                .blocks
                .iter()
                .map(|b| b.erase_cycles)
                .max()
                .unwrap_or(0),
            saturated: self.saturated,
            live_fraction: self.valid_pages() as f64 / self.config.total_pages() as f64,
        }
    }

    /// Latency implied by the primitive counters.
    pub fn counted_latency_us(&self) -> u64 {
        let c = &self.counters;
        c.reads * self.config.read_us
            + c.programs * self.config.program_us
            + c.erases * self.config.erase_us
    }

    fn slot_index(&self, block: u32, page: u32) -> usize {
        (block * self.config.pages_per_block + page) as usize
    }

    fn active_is_full(&self) -> bool {
        self.blocks[self.active as usize].free_count == 0
    }

    fn open_next_block(&mut self) -> Result<(), FlashError> {
        self.active = self
            .free_blocks
            .pop_front()
            .ok_or(FlashError::TierFull(self.config.kind))?;
        Ok(())
    }

    fn invalidate(&mut self, block: u32, page: u32) {
        let idx = self.slot_index(block, page);
        debug_assert!(matches!(self.slots[idx], Slot::Valid { .. }));
        self.slots[idx] = Slot::Invalid;
        let b = &mut self.blocks[block as usize];
        b.valid_count -= 1;
        b.invalid_count += 1;
    }

    /// Programs the next page of the active block.
    fn program_active(&mut self, lpn: Lpn, tag: u64, kind: ProgramKind) -> (u32, u32) {
        let block = self.active;
        let ppb = self.config.pages_per_block;
        let b = &mut self.blocks[block as usize];
        let page = ppb - b.free_count;
        b.free_count -= 1;
        b.valid_count += 1;
        b.program_count += 1;
        let idx = self.slot_index(block, page);
        self.slots[idx] = Slot::Valid { lpn, tag };
        self.counters.programs += 1;
        match kind {
            ProgramKind::Host => self.counters.host_programs += 1,
            ProgramKind::Relocation => self.counters.relocation_programs += 1,
            ProgramKind::Migration => self.counters.migration_programs += 1,
        }
        (block, page)
    }

    /// Greedy victim: the non-active, non-free block with the most invalid
    /// pages, lowest index on ties.
    fn pick_victim(&self) -> Option<u32> {
        let mut best: Option<(u32, u32)> = None;
        for (i, b) in self.blocks.iter().enumerate() {
            let i = i as u32;
            if i == self.active || b.free_count == self.config.pages_per_block {
                continue;
            }
            if b.invalid_count > 0 && best.is_none_or(|(_, inv)| b.invalid_count > inv) {
                best = Some((i, b.invalid_count));
            }
        }
        best.map(|(i, _)| i)
    }

    fn erase(&mut self, block: u32) {
        let ppb = self.config.pages_per_block;
        let start = self.slot_index(block, 0);
        self.slots[start..start + ppb as usize].fill(Slot::Free);
        let b = &mut self.blocks[block as usize];
        debug_assert_eq!(b.valid_count, 0);
        b.invalid_count = 0;
        b.free_count = ppb;
        b.erase_cycles += 1;
        if b.erase_cycles > self.config.endurance {
            self.saturated = true;
        }
        self.counters.erases += 1;
        self.free_blocks.push_back(block);
    }
}

/// Flash device: the tiers plus the logical-to-physical mapping.
#[derive(Debug, Clone)]
pub struct FlashDevice {
    slc: Option<Tier>,
    mlc: Option<Tier>,
    map: HashMap<Lpn, PhysAddr>,
    next_tag: u64,
}

impl FlashDevice {
    pub fn new(slc: Option<TierConfig>, mlc: Option<TierConfig>) -> Result<Self, FlashError> {
        if slc.is_none() && mlc.is_none() {
            return Err(FlashError::InvalidConfig(
                "device needs at least one tier".into(),
            ));
        }
        let build = |cfg: Option<TierConfig>, kind: TierKind| -> Result<Option<Tier>, FlashError> {
            match cfg {
                Some(mut c) => {
                    c.kind = kind;
                    Tier::new(c).map(Some)
                }
                None => Ok(None),
            }
        };
        Ok(Self {
            slc: build(slc, TierKind::Slc)?,
            mlc: build(mlc, TierKind::Mlc)?,
            map: HashMap::new(),
            next_tag: 0,
        })
    }

    pub fn tier(&self, kind: TierKind) -> Result<&Tier, FlashError> {
        match kind {
            TierKind::Slc => self.slc.as_ref(),
            TierKind::Mlc => self.mlc.as_ref(),
        }
        .ok_or(FlashError::NoSuchTier(kind))
    }

    fn tier_mut(&mut self, kind: TierKind) -> Result<&mut Tier, FlashError> {
        match kind {
            TierKind::Slc => self.slc.as_mut(),
            TierKind::Mlc => self.mlc.as_mut(),
        }
        .ok_or(FlashError::NoSuchTier(kind))
    }

    pub fn has_tier(&self, kind: TierKind) -> bool {
        self.tier(kind).is_ok()
    }

    pub fn tiers(&self) -> impl Iterator<Item = &Tier> {
        self.slc.iter().chain(self.mlc.iter())
    }

    pub fn location(&self, lpn: Lpn) -> Option<PhysAddr> {
        self.map.get(&lpn).copied()
    }

    pub fn mapped_pages(&self) -> usize {
        self.map.len()
    }

    /// Identity of the data last written to `lpn`; preserved across
    /// relocation and migration.
    pub fn content_tag(&self, lpn: Lpn) -> Option<u64> {
        let addr = self.location(lpn)?;
        let tier = self.tier(addr.tier).ok()?;
        match tier.slots[tier.slot_index(addr.block, addr.page)] {
            Slot::Valid { tag, .. } => Some(tag),
            _ => None,
        }
    }

    pub fn read_page(&mut self, lpn: Lpn) -> Result<u64, FlashError> {
        let addr = self.location(lpn).ok_or(FlashError::Unmapped(lpn))?;
        let tier = self.tier_mut(addr.tier)?;
        tier.counters.reads += 1;
        Ok(tier.config.read_us)
    }

    /// Writes new data for `lpn` to `kind`, invalidating any older copy.
    pub fn write_page(&mut self, lpn: Lpn, kind: TierKind) -> Result<u64, FlashError> {
        self.tier(kind)?;
        self.invalidate_lpn(lpn);
        let tag = self.next_tag;
        self.next_tag += 1;
        self.program(kind, lpn, tag, ProgramKind::Host)
    }

    /// Moves `lpn` to `dst`: one read on the source tier plus one program on
    /// the destination.
    pub fn migrate_page(&mut self, lpn: Lpn, dst: TierKind) -> Result<u64, FlashError> {
        self.tier(dst)?;
        let src = self.location(lpn).ok_or(FlashError::Unmapped(lpn))?;
        if src.tier == dst {
            return Err(FlashError::AlreadyOnTier { lpn, tier: dst });
        }
        let tag = self.content_tag(lpn).expect("mapped page holds data");
        let src_tier = self.tier_mut(src.tier)?;
        src_tier.counters.reads += 1;
        let read_us = src_tier.config.read_us;
        src_tier.invalidate(src.block, src.page);
        self.map.remove(&lpn);
        Ok(read_us + self.program(dst, lpn, tag, ProgramKind::Migration)?)
    }

    /// Reclaims blocks on `kind` until the free-block reserve is restored.
    pub fn run_gc(&mut self, kind: TierKind) -> Result<u64, FlashError> {
        let mut latency = 0;
        loop {
            let tier = self.tier(kind)?;
            if tier.free_blocks.len() >= tier.config.gc_free_block_threshold as usize {
                return Ok(latency);
            }
            latency += self.reclaim_one(kind)?;
        }
    }

    fn reclaim_one(&mut self, kind: TierKind) -> Result<u64, FlashError> {
        let tier = self.tier_mut(kind)?;
        let victim = tier
            .pick_victim()
            .ok_or(FlashError::NoReclaimableBlock(kind))?;
        tier.counters.gc_runs += 1;
        let ppb = tier.config.pages_per_block;
        let (read_us, program_us, erase_us) = (
            tier.config.read_us,
            tier.config.program_us,
            tier.config.erase_us,
        );

        let mut latency = 0;
        for page in 0..ppb {
            let tier = self.tier_mut(kind)?;
            let Slot::Valid { lpn, tag } = tier.slots[tier.slot_index(victim, page)] else {
                continue;
            };
            tier.counters.reads += 1;
            tier.invalidate(victim, page);
            if tier.active_is_full() {
                tier.open_next_block()?;
            }
            let (block, new_page) = tier.program_active(lpn, tag, ProgramKind::Relocation);
            self.map.insert(
                lpn,
                PhysAddr {
                    tier: kind,
                    block,
                    page: new_page,
                },
            );
            latency += read_us + program_us;
        }
        self.tier_mut(kind)?.erase(victim);
        Ok(latency + erase_us)
    }

    fn invalidate_lpn(&mut self, lpn: Lpn) {
        if let Some(addr) = self.map.remove(&lpn) {
            self.tier_mut(addr.tier)
                .expect("mapped tier exists")
                .invalidate(addr.block, addr.page);
        }
    }

    fn program(
        &mut self,
        kind: TierKind,
        lpn: Lpn,
        tag: u64,
        program_kind: ProgramKind,
    ) -> Result<u64, FlashError> {
        let mut latency = 0;
        let tier = self.tier_mut(kind)?;
        if tier.active_is_full() {
            tier.open_next_block()?;
            if tier.free_blocks.len() < tier.config.gc_free_block_threshold as usize {
                latency += self.run_gc(kind)?;
            }
        }
        let tier = self.tier_mut(kind)?;
        if tier.active_is_full() {
            // GC relocations consumed the block just opened.
            tier.open_next_block()?;
        }
        let (block, page) = tier.program_active(lpn, tag, program_kind);
        let program_us = tier.config.program_us;
        self.map.insert(
            lpn,
            PhysAddr {
                tier: kind,
                block,
                page,
            },
        );
        Ok(latency + program_us)
    }

    pub fn tier_stats(&self, kind: TierKind) -> Result<TierStats, FlashError> {
        Ok(self.tier(kind)?.stats())
    }

    /// Full consistency check: per-block page conservation, counts against
    /// slot contents, and a bijection between the forward map and valid
    /// physical pages.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut valid_seen = 0usize;
        for tier in self.tiers() {
            let kind = tier.config.kind;
            let ppb = tier.config.pages_per_block;
            for (bi, b) in tier.blocks.iter().enumerate() {
                if b.valid_count + b.invalid_count + b.free_count != ppb {
                    return Err(format!("{kind} block {bi}: page counts do not add up"));
                }
                let (mut v, mut inv, mut f) = (0, 0, 0);
                for page in 0..ppb {
                    match tier.slots[tier.slot_index(bi as u32, page)] {
                        Slot::Free => f += 1,
                        Slot::Invalid => inv += 1,
                        Slot::Valid { lpn, .. } => {
                            v += 1;
                            let expect = PhysAddr {
                                tier: kind,
                                block: bi as u32,
                                page,
                            };
                            if self.map.get(&lpn) != Some(&expect) {
                                return Err(format!("{kind} block {bi} page {page}: reverse map disagrees for lpn {lpn}"));
                            }
                        }
                    }
                }
                if (v, inv, f) != (b.valid_count, b.invalid_count, b.free_count) {
                    return Err(format!("{kind} block {bi}: counters disagree with slots"));
                }
                valid_seen += v as usize;
            }
            let resident = self.map.values().filter(|a| a.tier == kind).count() as u64;
            if resident != tier.valid_pages() {
                return Err(format!(
                    "{kind}: {resident} mapped pages but {} valid",
                    tier.valid_pages()
                ));
            }
        }
        if valid_seen != self.map.len() {
            return Err("forward map has entries without a valid page".into());
        }
        Ok(())
    }
}
