//! Parses a block trace in the MSR Cambridge layout (or the plain csv
//! layout with `--csv`) and summarizes it. Malformed lines are reported and
//! skipped.
//!
//! `cargo run --example parse_trace -- path/to/trace.csv`

use std::fs::File;
use std::io::BufReader;

use hybrid_ssd::{trace, Op, TraceFormat};

const SAMPLE: &str = "\
128166372003061629,hm,1,Read,3154059264,4096,214
128166372016382155,hm,1,Write,3154059264,8192,310
128166372026382245,hm,1,Write,not-a-number,4096,12
128166372036382245,hm,0,Write,5026549760,512,405
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let format = if args.iter().any(|a| a == "--csv") {
        TraceFormat::Csv
    } else {
        TraceFormat::Msr
    };
    let parsed = match args.iter().find(|a| !a.starts_with("--")) {
        Some(path) => trace::parse(BufReader::new(File::open(path)?), format)?,
        None => trace::parse(SAMPLE.as_bytes(), TraceFormat::Msr)?,
    };

    for m in &parsed.malformed {
        eprintln!("skipped {m}");
    }
    let records = &parsed.records;
    let writes = records.iter().filter(|r| r.op == Op::Write).count();
    let pages: u64 = records.iter().map(|r| r.page_count(4096)).sum();
    let span = records.last().map_or(0, |r| r.timestamp_us);
    println!(
        "{} requests ({writes} writes), {pages} page ops, {span} us",
        records.len()
    );
    for r in records.iter().take(10) {
        println!(
            "  t={:>10} {:?} lba {:>10} {} bytes -> pages {}..{}",
            r.timestamp_us,
            r.op,
            r.lba,
            r.size_bytes,
            r.start_page(4096),
            r.start_page(4096) + r.page_count(4096)
        );
    }
    Ok(())
}
