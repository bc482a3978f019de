//! Greedy trusted-node selection compared with the exhaustive optimum on a
//! few graph families.

use resest::{greedy_trusted_selection, min_trusted_set, ColoredNetwork, NodeSet};

fn ring(n: usize) -> ColoredNetwork {
    let mut net = ColoredNetwork::new(n);
    for v in 0..n {
        net.add_undirected_edge(v, (v + 1) % n).expect("valid edge");
    }
    net
}

fn star(leaves: usize) -> ColoredNetwork {
    let mut net = ColoredNetwork::new(leaves + 1);
    for l in 1..=leaves {
        net.add_undirected_edge(0, l).expect("valid edge");
    }
    net
}

fn main() -> resest::Result<()> {
    let cases = [
        ("star, center source", star(6), NodeSet::from([0])),
        ("star, leaf source", star(6), NodeSet::from([3])),
        ("ring of 8", ring(8), NodeSet::from([0])),
        (
            "complete 6, two sources",
            ColoredNetwork::complete(6),
            NodeSet::from([0, 1]),
        ),
    ];
    for (name, net, sources) in cases {
        for r in [2, 3] {
            let greedy = greedy_trusted_selection(&net, std::slice::from_ref(&sources), r)?;
            let best =
                min_trusted_set(&net, std::slice::from_ref(&sources), r)?.unwrap_or_default();
            println!(
                "{name:<24} r={r}: greedy {greedy:?}, optimum size {}",
                best.len()
            );
        }
    }
    Ok(())
}
