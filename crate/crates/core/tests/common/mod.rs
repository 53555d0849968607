//! Test-only helpers shared by the integration suites.

#![allow(dead_code)]

use hybrid_ssd::{DecisionClass, WarmEntry, WriteDecision};

/// Array-backed reading of the two-list flowchart. Index 0 is the most
/// recent entry; every lookup and move is a linear scan.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReferenceClassifier {
    pub warm: Vec<(u64, u32)>,
    pub hot: Vec<u64>,
    pub warm_capacity: usize,
    pub hot_capacity: usize,
    pub threshold: u32,
}

impl ReferenceClassifier {
    pub fn new(warm_capacity: usize, hot_capacity: usize, threshold: u32) -> Self {
        Self {
            warm: Vec::new(),
            hot: Vec::new(),
            warm_capacity,
            hot_capacity,
            threshold,
        }
    }

    pub fn on_write(&mut self, lpn: u64) -> WriteDecision {
        if let Some(i) = self.hot.iter().position(|&x| x == lpn) {
            let x = self.hot.remove(i);
            self.hot.insert(0, x);
            return WriteDecision {
                class: DecisionClass::HotHit,
                demoted: None,
                warm_evicted: None,
            };
        }
        match self.warm.iter().position(|&(x, _)| x == lpn) {
            None => {
                let warm_evicted = if self.warm.len() == self.warm_capacity {
                    self.warm.pop().map(|(x, _)| x)
                } else {
                    None
                };
                self.warm.insert(0, (lpn, 1));
                WriteDecision {
                    class: DecisionClass::ColdInsert,
                    demoted: None,
                    warm_evicted,
                }
            }
            Some(i) if self.warm[i].1 < self.threshold => {
                let (x, r) = self.warm.remove(i);
                self.warm.insert(0, (x, r + 1));
                WriteDecision {
                    class: DecisionClass::WarmRefresh,
                    demoted: None,
                    warm_evicted: None,
                }
            }
            Some(i) => {
                self.warm.remove(i);
                let demoted = if self.hot.len() == self.hot_capacity {
                    self.hot.pop()
                } else {
                    None
                };
                self.hot.insert(0, lpn);
                WriteDecision {
                    class: DecisionClass::Promote,
                    demoted,
                    warm_evicted: None,
                }
            }
        }
    }

    pub fn warm_entries(&self) -> Vec<WarmEntry> {
        self.warm
            .iter()
            .map(|&(lpn, referrals)| WarmEntry { lpn, referrals })
            .collect()
    }
}

/// Small deterministic generator so fuzz loops do not depend on the crate's
/// own RNG plumbing.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}
