//! Generates a Zipf-distributed workload and prints it in the plain csv
//! trace format, followed by a popularity summary on stderr.
//!
//! `cargo run --example synthetic_workload -- n=2000,write_ratio=0.7,zipf=1.1,pages=512,seed=3`

use std::collections::HashMap;
use std::io;

use hybrid_ssd::{generate_synthetic, trace, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec: SyntheticSpec = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "n=20,zipf=1.0,pages=64,seed=1".into())
        .parse()?;
    let records = generate_synthetic(&spec)?;
    trace::write_csv(io::stdout().lock(), &records)?;

    let mut hits: HashMap<u64, u64> = HashMap::new();
    for r in &records {
        *hits.entry(r.lba / 8).or_default() += 1;
    }
    let mut top: Vec<_> = hits.into_iter().collect();
    top.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    eprintln!("most requested pages:");
    for (page, n) in top.iter().take(5) {
        eprintln!("  page {page:>5}: {n}");
    }
    Ok(())
}
