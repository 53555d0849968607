//! Adaptive hot data migration (AHDM) classifier.
//!
//! Written pages move through two bounded LRU lists. A page enters the warm
//! list `W` on its first write with a referral count of one. Every further
//! write while the count is below the migration threshold bumps the count and
//! refreshes recency. A write that finds the count at the threshold moves the
//! page into the hot list `H`, whose members live on SLC. Reads never touch
//! either list.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Lpn = u64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum AdaptPolicy {
    Off,
    /// Raise the threshold when SLC is above `high` live fraction, lower it
    /// below `low`.
    Watermark {
        low: f64,
        high: f64,
        step: u32,
        min_t: u32,
        max_t: u32,
    },
}

impl std::str::FromStr for AdaptPolicy {
    type Err = String;

    /// `off` or `watermark:low,high,step,min,max`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "off" {
            return Ok(AdaptPolicy::Off);
        }
        let rest = s
            .strip_prefix("watermark:")
            .ok_or_else(|| format!("unknown adapt policy `{s}`"))?;
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err("watermark expects low,high,step,min,max".into());
        }
        let f = |i: usize| {
            parts[i]
                .parse::<f64>()
                .map_err(|_| format!("bad number `{}`", parts[i]))
        };
        let u = |i: usize| {
            parts[i]
                .parse::<u32>()
                .map_err(|_| format!("bad integer `{}`", parts[i]))
        };
        Ok(AdaptPolicy::Watermark {
            low: f(0)?,
            high: f(1)?,
            step: u(2)?,
            min_t: u(3)?,
            max_t: u(4)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AhdmConfig {
    pub warm_capacity: usize,
    pub hot_capacity: usize,
    pub threshold: u32,
    pub adapt_policy: AdaptPolicy,
}

impl AhdmConfig {
    /// Sizes `H` to the given number of SLC pages and `W` to four times that.
    pub fn for_slc_pages(slc_pages: usize, threshold: u32) -> Self {
        Self {
            warm_capacity: 4 * slc_pages,
            hot_capacity: slc_pages,
            threshold,
            adapt_policy: AdaptPolicy::Off,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.warm_capacity == 0 || self.hot_capacity == 0 {
            return Err(ConfigError("list capacities must be positive".into()));
        }
        if self.threshold == 0 {
            return Err(ConfigError("threshold must be at least 1".into()));
        }
        if let AdaptPolicy::Watermark {
            low,
            high,
            step,
            min_t,
            max_t,
        } = self.adapt_policy
        {
            if !(0.0..=1.0).contains(&low) || !(low < high && high <= 1.0) {
                return Err(ConfigError("watermarks need 0 <= low < high <= 1".into()));
            }
            if step == 0 {
                return Err(ConfigError("watermark step must be positive".into()));
            }
            if !(1 <= min_t && min_t <= self.threshold && self.threshold <= max_t) {
                return Err(ConfigError(
                    "watermark needs 1 <= min <= threshold <= max".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("invalid AHDM configuration: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionClass {
    ColdInsert,
    WarmRefresh,
    Promote,
    HotHit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WriteDecision {
    pub class: DecisionClass,
    /// Tail of `H` pushed out by a promotion.
    pub demoted: Option<Lpn>,
    /// Tail of `W` pushed out by a cold insert.
    pub warm_evicted: Option<Lpn>,
}

impl WriteDecision {
    fn plain(class: DecisionClass) -> Self {
        Self {
            class,
            demoted: None,
            warm_evicted: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadDecision {
    Routine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarmEntry {
    pub lpn: Lpn,
    pub referrals: u32,
}

const NIL: usize = usize::MAX;

#[derive(Debug, Clone)]
struct Node<V> {
    key: Lpn,
    value: V,
    prev: usize,
    next: usize,
}

/// Bounded recency list: a slab-allocated doubly linked list plus an index
/// from key to slot. Every operation touches a constant number of links,
/// which `steps` counts.
#[derive(Debug, Clone)]
struct LruList<V> {
    nodes: Vec<Node<V>>,
    free: Vec<usize>,
    index: HashMap<Lpn, usize>,
    head: usize,
    tail: usize,
    capacity: usize,
    steps: u64,
}

impl<V> LruList<V> {
    fn new(capacity: usize) -> Self {
        Self {
            nodes: Vec::with_capacity(capacity.min(1 << 16)),
            free: Vec::new(),
            index: HashMap::with_capacity(capacity.min(1 << 16)),
            head: NIL,
            tail: NIL,
            capacity,
            steps: 0,
        }
    }

    fn len(&self) -> usize {
        self.index.len()
    }

    fn is_full(&self) -> bool {
        self.len() >= self.capacity
    }

    fn find(&mut self, key: Lpn) -> Option<usize> {
        self.steps += 1;
        self.index.get(&key).copied()
    }

    fn contains(&self, key: Lpn) -> bool {
        self.index.contains_key(&key)
    }

    fn unlink(&mut self, slot: usize) {
        self.steps += 1;
        let (prev, next) = (self.nodes[slot].prev, self.nodes[slot].next);
        if prev == NIL {
            self.head = next;
        } else {
            self.nodes[prev].next = next;
        }
        if next == NIL {
            self.tail = prev;
        } else {
            self.nodes[next].prev = prev;
        }
    }

    fn link_front(&mut self, slot: usize) {
        self.steps += 1;
        self.nodes[slot].prev = NIL;
        self.nodes[slot].next = self.head;
        if self.head == NIL {
            self.tail = slot;
        } else {
            self.nodes[self.head].prev = slot;
        }
        self.head = slot;
    }

    fn move_to_front(&mut self, slot: usize) {
        if self.head != slot {
            self.unlink(slot);
            self.link_front(slot);
        }
    }

    /// Caller must have made room.
    fn push_front(&mut self, key: Lpn, value: V) {
        debug_assert!(!self.is_full());
        debug_assert!(!self.contains(key));
        self.steps += 1;
        let node = Node {
            key,
            value,
            prev: NIL,
            next: NIL,
        };
        let slot = match self.free.pop() {
            Some(slot) => {
                self.nodes[slot] = node;
                slot
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        };
        self.index.insert(key, slot);
        self.link_front(slot);
    }

    fn remove(&mut self, slot: usize) -> Lpn {
        self.unlink(slot);
        let key = self.nodes[slot].key;
        self.index.remove(&key);
        self.free.push(slot);
        key
    }

    fn pop_back(&mut self) -> Option<Lpn> {
        (self.tail != NIL).then(|| self.remove(self.tail))
    }

    fn iter(&self) -> impl Iterator<Item = (Lpn, &V)> + '_ {
        let mut cur = self.head;
        std::iter::from_fn(move || {
            if cur == NIL {
                return None;
            }
            let node = &self.nodes[cur];
            cur = node.next;
            Some((node.key, &node.value))
        })
    }
}

/// The two-list hot data classifier.
#[derive(Debug, Clone)]
pub struct AhdmClassifier {
    warm: LruList<u32>,
    hot: LruList<()>,
    config: AhdmConfig,
    threshold: u32,
}

impl AhdmClassifier {
    pub fn new(config: AhdmConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Self {
            warm: LruList::new(config.warm_capacity),
            hot: LruList::new(config.hot_capacity),
            threshold: config.threshold,
            config,
        })
    }

    pub fn config(&self) -> &AhdmConfig {
        &self.config
    }

    /// Current migration threshold (differs from the configured one only
    /// under watermark adaptation).
    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn on_write(&mut self, lpn: Lpn) -> WriteDecision {
        if let Some(slot) = self.hot.find(lpn) {
            self.hot.move_to_front(slot);
            return WriteDecision::plain(DecisionClass::HotHit);
        }

        let Some(slot) = self.warm.find(lpn) else {
            let warm_evicted = if self.warm.is_full() {
                self.warm.pop_back()
            } else {
                None
            };
            self.warm.push_front(lpn, 1);
            return WriteDecision {
                class: DecisionClass::ColdInsert,
                demoted: None,
                warm_evicted,
            };
        };

        let referrals = self.warm.nodes[slot].value;
        if referrals < self.threshold {
            self.warm.nodes[slot].value = referrals + 1;
            self.warm.move_to_front(slot);
            return WriteDecision::plain(DecisionClass::WarmRefresh);
        }

        // Counts above the threshold only occur after the threshold was
        // lowered; such pages promote immediately.
        self.warm.remove(slot);
        let demoted = if self.hot.is_full() {
            self.hot.pop_back()
        } else {
            None
        };
        self.hot.push_front(lpn, ());
        WriteDecision {
            class: DecisionClass::Promote,
            demoted,
            warm_evicted: None,
        }
    }

    pub fn on_read(&self, _lpn: Lpn) -> ReadDecision {
        ReadDecision::Routine
    }

    pub fn is_hot(&self, lpn: Lpn) -> bool {
        self.hot.contains(lpn)
    }

    pub fn is_warm(&self, lpn: Lpn) -> bool {
        self.warm.contains(lpn)
    }

    /// Applies the watermark rule for the given SLC live fraction and returns
    /// the resulting threshold. A no-op when adaptation is off.
    pub fn adapt(&mut self, slc_live_fraction: f64) -> u32 {
        if let AdaptPolicy::Watermark {
            low,
            high,
            step,
            min_t,
            max_t,
        } = self.config.adapt_policy
        {
            if slc_live_fraction > high {
                self.threshold = self.threshold.saturating_add(step).min(max_t);
            } else if slc_live_fraction < low {
                self.threshold = self.threshold.saturating_sub(step).max(min_t);
            }
        }
        self.threshold
    }

    /// Warm list, most recent first.
    pub fn warm_iter(&self) -> impl Iterator<Item = WarmEntry> + '_ {
        self.warm
            .iter()
            .map(|(lpn, &referrals)| WarmEntry { lpn, referrals })
    }

    /// Hot list, most recent first.
    pub fn hot_iter(&self) -> impl Iterator<Item = Lpn> + '_ {
        self.hot.iter().map(|(lpn, _)| lpn)
    }

    pub fn warm_entries(&self) -> Vec<WarmEntry> {
        self.warm_iter().collect()
    }

    pub fn hot_entries(&self) -> Vec<Lpn> {
        self.hot_iter().collect()
    }

    pub fn warm_len(&self) -> usize {
        self.warm.len()
    }

    pub fn hot_len(&self) -> usize {
        self.hot.len()
    }

    /// Total list-maintenance steps (lookups, link and unlink operations)
    /// performed so far.
    pub fn step_count(&self) -> u64 {
        self.warm.steps + self.hot.steps
    }

    /// Checks the structural invariants: capacities, disjointness, and that
    /// the linked order agrees with the index.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.warm.len() > self.config.warm_capacity {
            return Err("warm list over capacity".into());
        }
        if self.hot.len() > self.config.hot_capacity {
            return Err("hot list over capacity".into());
        }
        let warm: Vec<_> = self.warm.iter().map(|(k, _)| k).collect();
        let hot = self.hot_entries();
        if warm.len() != self.warm.len() || hot.len() != self.hot.len() {
            return Err("linked order disagrees with index".into());
        }
        if let Some(lpn) = warm.iter().find(|l| self.hot.contains(**l)) {
            return Err(format!("page {lpn} is both warm and hot"));
        }
        if self.warm.iter().any(|(_, &r)| r == 0) {
            return Err("zero referral count".into());
        }
        Ok(())
    }
}
