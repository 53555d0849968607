mod common;

use std::collections::HashMap;

use common::{fixture, SplitMix};
use hybrid_ssd::engine::{run, run_with, DEFAULT_ADAPT_INTERVAL};
use hybrid_ssd::trace::parse_msr;
use hybrid_ssd::{
    generate_synthetic, replay_deterministic, AhdmConfig, DecisionClass, DeviceMode, FlashDevice,
    Op, SimReport, Simulator, SyntheticSpec, TierConfig, TierKind, TraceRecord,
};

fn toy_device() -> FlashDevice {
    FlashDevice::new(
        Some(TierConfig::slc(8).with_geometry(8, 8)),
        Some(TierConfig::mlc(8).with_geometry(8, 8)),
    )
    .unwrap()
}

fn wear(dev: &FlashDevice) -> Vec<(u64, u64)> {
    dev.tiers()
        .flat_map(|t| t.blocks().iter().map(|b| (b.program_count, b.erase_cycles)))
        .collect()
}

/// Random writes and migrations on a toy geometry. After every operation:
/// the full consistency check, unchanged content for every page not just
/// written, latency equal to the primitive counters, and monotone wear.
#[test]
fn flash_fuzz_keeps_mapping_content_and_latency_consistent() {
    let mut dev = toy_device();
    let mut rng = SplitMix(2024);
    let mut shadow: HashMap<u64, u64> = HashMap::new();
    let mut total_latency = 0u64;
    let mut last_wear = wear(&dev);

    for step in 0..100_000 {
        let lpn = rng.below(32);
        let migrate = rng.below(4) == 0;
        if let (true, Some(at)) = (migrate, dev.location(lpn)) {
            total_latency += dev.migrate_page(lpn, at.tier.other()).unwrap();
        } else {
            let kind = if rng.below(2) == 0 {
                TierKind::Slc
            } else {
                TierKind::Mlc
            };
            total_latency += dev.write_page(lpn, kind).unwrap();
            shadow.insert(lpn, dev.content_tag(lpn).unwrap());
        }

        if let Err(e) = dev.check_invariants() {
            panic!("step {step}: {e}");
        }
        for (&l, &tag) in &shadow {
            assert_eq!(
                dev.content_tag(l),
                Some(tag),
                "step {step}: page {l} lost its data"
            );
        }
        let counted: u64 = dev.tiers().map(|t| t.counted_latency_us()).sum();
        assert_eq!(counted, total_latency, "step {step}");
        let now = wear(&dev);
        assert!(now
            .iter()
            .zip(&last_wear)
            .all(|(a, b)| a.0 >= b.0 && a.1 >= b.1));
        last_wear = now;
    }
    let gc_runs: u64 = dev.tiers().map(|t| t.counters().gc_runs).sum();
    assert!(
        gc_runs > 1000,
        "fuzz should exercise GC, got {gc_runs} runs"
    );
}

fn write(t: u64, page: u64) -> TraceRecord {
    TraceRecord::new(t, Op::Write, page * 8, 4096)
}

fn small_hybrid(threshold: u32) -> DeviceMode {
    DeviceMode::hybrid(TierConfig::slc(8), TierConfig::mlc(40), threshold)
}

fn synthetic(n: u64, w: f64, z: f64, pages: u64, seed: u64) -> Vec<TraceRecord> {
    generate_synthetic(&SyntheticSpec {
        num_requests: n,
        write_ratio: w,
        zipf_s: z,
        address_space_pages: pages,
        seed,
    })
    .unwrap()
}

#[test]
fn three_writes_to_one_page() {
    let mut sim = Simulator::new(small_hybrid(2)).unwrap();
    let lat: Vec<u64> = (0..3)
        .map(|t| sim.process(&write(t, 7)).unwrap().latency_us)
        .collect();
    // oracle: MLC program, MLC program, MLC program + MLC read + SLC program
    let (mlc, slc) = (TierConfig::mlc(1), TierConfig::slc(1));
    assert_eq!(
        lat,
        vec![
            mlc.program_us,
            mlc.program_us,
            mlc.program_us + mlc.read_us + slc.program_us
        ]
    );
}

#[test]
fn unattainable_threshold_degenerates_to_pure_mlc() {
    let trace = synthetic(20_000, 0.8, 1.0, 2048, 3);
    let hybrid = run(&trace, small_hybrid(u32::MAX), DEFAULT_ADAPT_INTERVAL).unwrap();
    let pure = run(
        &trace,
        DeviceMode::PureMlc {
            mlc: TierConfig::mlc(40),
        },
        DEFAULT_ADAPT_INTERVAL,
    )
    .unwrap();
    assert_eq!(hybrid.mlc, pure.mlc);
    assert_eq!(
        hybrid.slc.total_programs + hybrid.slc.reads + hybrid.slc.erases,
        0
    );
    assert_eq!(hybrid.total_latency_us, pure.total_latency_us);
}

#[test]
fn deleting_reads_leaves_wear_unchanged() {
    let trace = synthetic(30_000, 0.6, 1.1, 2048, 9);
    let writes_only: Vec<_> = trace
        .iter()
        .copied()
        .filter(|r| r.op == Op::Write)
        .collect();
    for mode in [
        small_hybrid(2),
        DeviceMode::PureMlc {
            mlc: TierConfig::mlc(40),
        },
        DeviceMode::PureSlc {
            slc: TierConfig::slc(80),
        },
    ] {
        let a = run(&trace, mode.clone(), 500).unwrap();
        let b = run(&writes_only, mode, 500).unwrap();
        for (x, y) in [(&a.slc, &b.slc), (&a.mlc, &b.mlc)] {
            assert_eq!(x.mean_programs_per_block, y.mean_programs_per_block);
            assert_eq!(x.max_erase_cycles, y.max_erase_cycles);
            assert_eq!(x.total_programs, y.total_programs);
            assert_eq!(x.erases, y.erases);
        }
    }
}

#[test]
fn hot_fraction_matches_decision_log() {
    let trace = synthetic(20_000, 0.7, 1.0, 1024, 21);
    let mut sim = Simulator::new(small_hybrid(3)).unwrap();
    let (mut hot, mut writes) = (0u64, 0u64);
    for r in &trace {
        let out = sim.process(r).unwrap();
        writes += out.decisions.len() as u64;
        hot += out
            .decisions
            .iter()
            .filter(|d| matches!(d, DecisionClass::Promote | DecisionClass::HotHit))
            .count() as u64;
    }
    let report = sim.report();
    assert_eq!(writes, report.write_page_ops);
    assert!((report.hot_fraction - hot as f64 / writes as f64).abs() < 1e-12);
    assert!((0.0..=1.0).contains(&report.hot_fraction));
}

#[test]
fn engine_invariants_hold_on_multi_page_trace() {
    let text = std::fs::read_to_string(fixture("msr_sample.csv")).unwrap();
    let trace = parse_msr(text.as_bytes()).unwrap().records;
    let mut ahdm = AhdmConfig::for_slc_pages(64, 1);
    ahdm.warm_capacity = 128;
    let mode = DeviceMode::Hybrid {
        slc: TierConfig::slc(8),
        mlc: TierConfig::mlc(40),
        ahdm,
    };
    let mut sim = Simulator::new(mode).unwrap();
    for (i, r) in trace.iter().enumerate() {
        let out = sim.process(r).unwrap();
        assert_eq!(out.pages_touched, r.size_bytes.div_ceil(4096));
        assert!(out.latency_us > 0);
        if let Err(e) = sim.check_invariants() {
            panic!("request {i}: {e}");
        }
    }
    let report = sim.report();
    assert!(report.promotions > 0, "fixture should promote something");
    let counted: u64 = sim
        .flash()
        .tiers()
        .map(|t| t.counted_latency_us())
        .sum::<u64>()
        + sim.unmapped_reads() * sim.unmapped_read_us();
    assert_eq!(counted, report.total_latency_us);
}

fn json(r: &SimReport) -> String {
    serde_json::to_string(r).unwrap()
}

#[test]
fn replay_is_deterministic_and_seed_sensitive() {
    let a = synthetic(5_000, 0.7, 1.0, 512, 1);
    let b = synthetic(5_000, 0.7, 1.0, 512, 2);
    let mode = small_hybrid(2);
    assert!(replay_deterministic(&a, &mode, 2).unwrap());
    let ra = run(&a, mode.clone(), 1000).unwrap();
    let rb = run(&b, mode, 1000).unwrap();
    assert_ne!(json(&ra), json(&rb));
}

#[test]
fn run_with_keeps_custom_label_and_chips() {
    let trace = synthetic(100, 1.0, 0.0, 16, 0);
    let sim = Simulator::new(small_hybrid(2))
        .unwrap()
        .with_label("hybrid-slc3")
        .with_chips(3, 10);
    let report = run_with(&trace, sim).unwrap();
    assert_eq!(report.mode, "hybrid-slc3");
    assert!((report.price_usd - 18.0).abs() < 1e-9);
}
