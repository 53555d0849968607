//! Drives the page-mapped flash model directly: out-of-place writes fill a
//! small MLC tier until greedy garbage collection has to reclaim blocks.

use hybrid_ssd::{FlashDevice, TierConfig, TierKind};

fn main() -> Result<(), hybrid_ssd::FlashError> {
    let mlc = TierConfig::mlc(6).with_geometry(6, 4);
    let slc = TierConfig::slc(4).with_geometry(4, 4);
    let mut dev = FlashDevice::new(Some(slc), Some(mlc))?;

    let mut latency = 0;
    for round in 0..5u64 {
        for lpn in 0..8 {
            latency += dev.write_page(lpn, TierKind::Mlc)?;
        }
        let t = dev.tier(TierKind::Mlc)?;
        println!(
            "round {round}: {} free blocks, {} gc runs, {} relocations",
            t.free_block_count(),
            t.counters().gc_runs,
            t.counters().relocation_programs
        );
    }

    // move two pages to the fast tier and read one back
    latency += dev.migrate_page(0, TierKind::Slc)?;
    latency += dev.migrate_page(1, TierKind::Slc)?;
    latency += dev.read_page(0)?;
    dev.check_invariants().expect("consistent mapping");

    for kind in [TierKind::Slc, TierKind::Mlc] {
        let t = dev.tier(kind)?;
        let s = t.stats();
        println!(
            "{kind}: {} valid pages, programs/block {:.2}, max erase {}, erase counts {:?}",
            t.valid_pages(),
            s.mean_programs_per_block,
            s.max_erase_cycles,
            t.blocks()
                .iter()
                .map(|b| b.erase_cycles)
                .collect::<Vec<_>>()
        );
    }
    println!("total latency {latency} us");
    Ok(())
}
