//! Varies the size of the SLC tier next to ten MLC chips and shows how price,
//! access time and SLC wear respond. SLC endurance is lowered so that an
//! undersized SLC tier visibly saturates. Partial chips are priced as whole
//! chips.

use hybrid_ssd::engine::run_with;
use hybrid_ssd::metrics::access_time_gain;
use hybrid_ssd::{generate_synthetic, run, DeviceMode, Simulator, TierConfig};

const BLOCKS_PER_CHIP: u32 = 16;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = generate_synthetic(&"n=30000,write_ratio=0.9,zipf=1.2,pages=256,seed=5".parse()?)?;
    let mlc = TierConfig::mlc(10 * BLOCKS_PER_CHIP);
    let baseline = run(&trace, DeviceMode::PureMlc { mlc: mlc.clone() }, 1000)?;

    println!("slc:mlc  price   access us  gain %  slc max erase  saturated");
    for slc_blocks in [4u32, 8, 16, 32] {
        let chips = slc_blocks.div_ceil(BLOCKS_PER_CHIP);
        let slc = TierConfig::slc(slc_blocks).with_endurance(50);
        let sim = Simulator::new(DeviceMode::hybrid(slc, mlc.clone(), 2))?.with_chips(chips, 10);
        let r = run_with(&trace, sim)?;
        println!(
            "1:{:<5} {:>6.2} {:>10.2} {:>7.2} {:>14} {:>10}",
            mlc.num_blocks / slc_blocks,
            r.price_usd,
            r.mean_access_time_us,
            access_time_gain(baseline.mean_access_time_us, r.mean_access_time_us)?,
            r.slc.max_erase_cycles,
            r.slc.saturated
        );
    }
    Ok(())
}
