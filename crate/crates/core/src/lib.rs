//! Trace-driven simulator of a multi-tiered SSD that pairs a small SLC tier
//! with a large MLC tier and moves frequently rewritten pages between them
//! using adaptive hot data migration (AHDM).
//!
//! The crate is organised bottom-up:
//!
//! * [`trace`] parses block-I/O traces and generates synthetic workloads.
//! * [`ahdm`] classifies written pages through a warm and a hot LRU list.
//! * [`flash`] models page-mapped SLC/MLC tiers with GC, wear and latency.
//! * [`engine`] replays a trace on a hybrid, pure-SLC or pure-MLC device.
//! * [`metrics`] holds the report, price model and gain figures.
//! * [`cli`] is the command-line front end behind the `hybrid-ssd` binary.

pub mod ahdm;
pub mod cli;
pub mod engine;
pub mod flash;
pub mod metrics;
pub mod trace;

pub use ahdm::{
    AdaptPolicy, AhdmClassifier, AhdmConfig, DecisionClass, Lpn, WarmEntry, WriteDecision,
};
pub use engine::{replay_deterministic, run, DeviceMode, EngineError, RequestOutcome, Simulator};
pub use flash::{FlashDevice, FlashError, TierConfig, TierKind};
pub use metrics::{compare, emit_report, price, PriceModel, ReportFormat, SimReport};
pub use trace::{generate_synthetic, Op, SyntheticSpec, TraceFormat, TraceRecord};
