//! Compares a fixed promotion threshold with the watermark policy, which
//! raises the threshold while the SLC tier is nearly full of live data and
//! lowers it when the tier drains.

use hybrid_ssd::{generate_synthetic, run, AdaptPolicy, DeviceMode, TierConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = generate_synthetic(&"n=60000,write_ratio=0.8,zipf=0.9,pages=8192,seed=2".parse()?)?;

    for policy in ["off", "watermark:0.3,0.55,1,1,8"] {
        let mut mode = DeviceMode::hybrid(TierConfig::slc(8), TierConfig::mlc(80), 2);
        if let DeviceMode::Hybrid { ahdm, .. } = &mut mode {
            ahdm.adapt_policy = policy.parse::<AdaptPolicy>()?;
        }
        let r = run(&trace, mode, 5000)?;
        println!("policy {policy}");
        println!(
            "  hot fraction {:.3}, promotions {}, demotions {}, access {:.1} us",
            r.hot_fraction, r.promotions, r.demotions, r.mean_access_time_us
        );
        println!(
            "  threshold every 5000 requests: {:?}",
            r.threshold_trajectory
        );
    }
    Ok(())
}
