//! Simulates a small trace and prints the same report in each output
//! format: pretty JSON, one-row csv and the plot-friendly `.dat` blocks.

use hybrid_ssd::{emit_report, generate_synthetic, run, DeviceMode, ReportFormat, TierConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trace = generate_synthetic(&"n=5000,write_ratio=0.7,zipf=1.0,pages=512,seed=4".parse()?)?;
    let report = run(
        &trace,
        DeviceMode::hybrid(TierConfig::slc(4), TierConfig::mlc(40), 2),
        1000,
    )?;

    for format in ["json", "csv", "plot-dat"] {
        let format: ReportFormat = format.parse()?;
        println!("==> hybrid.{}", format.extension());
        println!("{}", String::from_utf8(emit_report(&report, format))?);
    }
    Ok(())
}
