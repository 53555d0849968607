//! Runs one write-heavy Zipf workload on the hybrid device, an all-SLC
//! device and an all-MLC device, then prints the comparison table.

use hybrid_ssd::engine::run_with;
use hybrid_ssd::{compare, generate_synthetic, DeviceMode, Simulator, TierConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = generate_synthetic(&"n=50000,write_ratio=0.9,zipf=1.1,pages=4096,seed=7".parse()?)?;
    let mlc = TierConfig::mlc(80);
    let pure_slc = TierConfig::slc((mlc.total_pages() / 64) as u32);

    let modes = [
        DeviceMode::hybrid(TierConfig::slc(8), mlc.clone(), 2),
        DeviceMode::PureSlc { slc: pure_slc },
        DeviceMode::PureMlc { mlc },
    ];
    let mut reports = Vec::new();
    for mode in modes {
        reports.push(run_with(&trace, Simulator::new(mode)?)?);
    }
    for r in &reports {
        println!(
            "{:<9} hot fraction {:.3}, migrations {:>6}, mlc programs/block {:>8.2}",
            r.mode, r.hot_fraction, r.migration_count, r.mlc.mean_programs_per_block
        );
    }
    println!("\n{}", compare(&reports)?);
    Ok(())
}
