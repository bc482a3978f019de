//! Decide strong robustness of a small colored network two ways: by the
//! polynomial activation process and by checking every subset.
//!
//! ```bash
//! cargo run --example robustness_check
//! ```

use resest::{
    is_reachable_set, is_strongly_robust, is_strongly_robust_bruteforce, AdversaryModel,
    ColoredNetwork, NodeSet,
};

fn main() -> resest::Result<()> {
    // a 6-cycle with chords; colors alternate over three component types
    let mut net = ColoredNetwork::new(6);
    for v in 0..6 {
        net.add_undirected_edge(v, (v + 1) % 6)?;
        net.add_undirected_edge(v, (v + 2) % 6)?;
        net.set_color(v, (v % 3) as u32)?;
    }
    let sources = NodeSet::from([0, 1]);

    for bound in [
        AdversaryModel::FLocal(0),
        AdversaryModel::FLocal(1),
        AdversaryModel::MonoChromatic,
    ] {
        let fast = is_strongly_robust(&net, &sources, bound);
        let slow = is_strongly_robust_bruteforce(&net, &sources, bound.redundancy())?;
        println!(
            "{bound}: activation says {fast}, exhaustive says {}",
            slow.robust
        );
        if let Some(c) = slow.counterexample {
            println!("  smallest non-reachable set: {c:?}");
        }
    }

    let set = NodeSet::from([3, 4]);
    match is_reachable_set(&net, &set, AdversaryModel::FLocal(1).redundancy())? {
        Some(w) => println!(
            "{set:?} is reachable through node {} ({:?})",
            w.node, w.condition
        ),
        None => println!("{set:?} is not reachable"),
    }
    Ok(())
}
