mod common;

use std::fs;

use hybrid_ssd::trace::{self, ParsedTrace, TraceError};
use hybrid_ssd::{generate_synthetic, Op, SyntheticSpec, TraceRecord};
use proptest::prelude::*;

#[test]
fn thousand_line_file_with_one_corrupt_line() {
    let mut text = String::new();
    for i in 0..1000u64 {
        if i == 617 {
            text.push_str("1234,host,0,Write,notanumber,4096,0\n");
        } else {
            text.push_str(&format!(
                "{},host,0,Write,{},4096,7\n",
                1000 + i * 10,
                i * 4096
            ));
        }
    }
    // independent count of well-formed lines
    let expected = text
        .lines()
        .filter(|l| {
            let f: Vec<_> = l.split(',').collect();
            f.len() == 7 && f[4].parse::<u64>().is_ok() && f[5].parse::<u64>().is_ok()
        })
        .count();
    assert_eq!(expected, 999);

    let parsed = trace::parse_msr(text.as_bytes()).unwrap();
    assert_eq!(parsed.records.len(), expected);
    assert_eq!(parsed.malformed.len(), 1);
    assert_eq!(parsed.malformed[0].line_no, 618);
    assert!(matches!(
        parsed.strict(),
        Err(TraceError::MalformedLine { line_no: 618, .. })
    ));
}

#[test]
fn msr_fixture_parses() {
    let text = fs::read_to_string(common::fixture("msr_sample.csv")).unwrap();
    let parsed = trace::parse_msr(text.as_bytes()).unwrap();
    assert_eq!(parsed.records.len(), 400);
    assert!(parsed.malformed.is_empty());
    assert_eq!(parsed.records[0].timestamp_us, 0);
    assert!(parsed
        .records
        .windows(2)
        .all(|w| w[0].timestamp_us <= w[1].timestamp_us));
}

#[test]
fn csv_fixture_parses_with_header() {
    let text = fs::read_to_string(common::fixture("csv_sample.csv")).unwrap();
    let parsed = trace::parse_csv(text.as_bytes()).unwrap();
    assert_eq!(parsed.records.len(), 300);
    assert!(parsed.malformed.is_empty());
}

/// Exact Zipf pmf by direct summation, compared with the empirical
/// frequency of the most popular page.
#[test]
fn zipf_top_page_frequency() {
    let spec = SyntheticSpec {
        num_requests: 100_000,
        write_ratio: 0.5,
        zipf_s: 1.0,
        address_space_pages: 10_000,
        seed: 42,
    };
    let harmonic: f64 = (1..=10_000u32).map(|k| 1.0 / f64::from(k)).sum();
    let p_top = 1.0 / harmonic;

    let records = generate_synthetic(&spec).unwrap();
    let top = records.iter().filter(|r| r.lba == 0).count() as f64 / records.len() as f64;
    assert!(
        (top - p_top).abs() <= 0.10 * p_top,
        "empirical {top} vs exact {p_top}"
    );
}

#[test]
fn zipf_zero_is_uniform() {
    let spec = SyntheticSpec {
        num_requests: 40_000,
        write_ratio: 1.0,
        zipf_s: 0.0,
        address_space_pages: 4,
        seed: 1,
    };
    let mut counts = [0u32; 4];
    for r in generate_synthetic(&spec).unwrap() {
        counts[(r.lba / 8) as usize] += 1;
    }
    for c in counts {
        assert!((9_500..=10_500).contains(&c), "{counts:?}");
    }
}

#[test]
fn different_seeds_differ() {
    let mut spec: SyntheticSpec = "n=200,pages=64,seed=1".parse().unwrap();
    let a = generate_synthetic(&spec).unwrap();
    spec.seed = 2;
    assert_ne!(a, generate_synthetic(&spec).unwrap());
}

fn record_strategy() -> impl Strategy<Value = Vec<TraceRecord>> {
    prop::collection::vec(
        (0u64..1000, any::<bool>(), 0u64..1 << 40, 1u64..1 << 20),
        1..64,
    )
    .prop_map(|raw| {
        let mut t = 0;
        raw.into_iter()
            .map(|(dt, w, lba, size)| {
                t += dt;
                let op = if w { Op::Write } else { Op::Read };
                TraceRecord::new(t, op, lba, size)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn csv_round_trip(records in record_strategy()) {
        let mut buf = Vec::new();
        trace::write_csv(&mut buf, &records).unwrap();
        let parsed: ParsedTrace = trace::parse_csv(buf.as_slice()).unwrap();
        prop_assert!(parsed.malformed.is_empty());
        prop_assert_eq!(parsed.records, records);
    }

    #[test]
    fn synthetic_is_deterministic(
        n in 1u64..500,
        w in 0.0f64..=1.0,
        s in 0.0f64..2.0,
        pages in 1u64..300,
        seed in any::<u64>(),
    ) {
        let spec = SyntheticSpec { num_requests: n, write_ratio: w, zipf_s: s, address_space_pages: pages, seed };
        let a = generate_synthetic(&spec).unwrap();
        prop_assert_eq!(a.len() as u64, n);
        prop_assert!(a.iter().all(|r| r.lba / 8 < pages));
        prop_assert_eq!(a, generate_synthetic(&spec).unwrap());
    }
}
