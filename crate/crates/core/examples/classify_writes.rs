//! Feeds a short write stream through the two-list classifier and prints
//! the decision taken for each write.

use hybrid_ssd::{AhdmClassifier, AhdmConfig};

fn main() {
    let mut config = AhdmConfig::for_slc_pages(2, 2);
    config.warm_capacity = 3;
    let mut classifier = AhdmClassifier::new(config).expect("valid config");

    let writes = [10, 10, 20, 10, 30, 20, 20, 40, 30, 30, 50, 10];
    println!(
        "{:>4}  {:<12} {:>8} {:>8}  hot list",
        "lpn", "decision", "demoted", "evicted"
    );
    for lpn in writes {
        let d = classifier.on_write(lpn);
        let show = |v: Option<u64>| v.map_or("-".to_string(), |x| x.to_string());
        println!(
            "{lpn:>4}  {:<12} {:>8} {:>8}  {:?}",
            format!("{:?}", d.class),
            show(d.demoted),
            show(d.warm_evicted),
            classifier.hot_entries()
        );
    }

    println!("\nwarm list (most recent first):");
    for e in classifier.warm_entries() {
        println!("  lpn {:>3}  referrals {}", e.lpn, e.referrals);
    }
}
