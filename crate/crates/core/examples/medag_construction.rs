//! Build a MEDAG round by round and validate it against sampled
//! adversarial sets.

use resest::{build_medag, validate_medag, AdversaryModel, ColoredNetwork, NodeSet};

fn main() -> resest::Result<()> {
    // sources 0..=5; node 3 is trusted
    let mut net = ColoredNetwork::new(12);
    for (v, c) in [(1, 1), (2, 2)] {
        net.set_color(v, c)?;
    }
    net.add_trusted(3)?;
    for s in 0..3 {
        net.add_edge(s, 6)?;
    }
    for v in 7..=10 {
        net.add_edge(3, v)?;
        net.add_edge(4, v)?;
    }
    for s in [5, 7, 8, 9] {
        net.add_edge(s, 11)?;
    }

    let bound = AdversaryModel::FLocal(1);
    let medag = build_medag(&net, 0, &(0..6).collect::<NodeSet>(), bound)?;
    for q in 0..=medag.last_round().unwrap_or(0) {
        println!("level {q}: {:?}", medag.level(q));
    }
    print!("{}", medag.to_export());

    let report = validate_medag(&net, &medag, bound, 200, 7)?;
    println!(
        "validation: valid={} checked {} adversarial sets (vacuous={})",
        report.valid, report.sets_checked, report.vacuous
    );
    Ok(())
}
