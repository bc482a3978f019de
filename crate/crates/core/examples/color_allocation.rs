//! Exhaustive search for a color allocation that makes a network robust
//! without any trusted node.

use resest::{csra_bruteforce, Budget, ColoredNetwork, DesignProblemInstance, SystemModel};

fn main() -> resest::Result<()> {
    // four measuring nodes feed three followers, each hearing three of them
    let mut network = ColoredNetwork::new(7);
    for (follower, feeds) in [(4, [0, 1, 2]), (5, [1, 2, 3]), (6, [0, 2, 3])] {
        for f in feeds {
            network.add_edge(f, follower)?;
        }
    }
    let system = SystemModel::new(
        vec![1.4],
        (0..7)
            .map(|v| vec![vec![if v < 4 { 1.0 } else { 0.0 }]])
            .collect(),
        vec![1.0],
    )?;
    for q in 1..=4 {
        let inst = DesignProblemInstance {
            network: network.clone(),
            system: system.clone(),
            r: 4,
            budget: Budget::Colors(q),
            trivial_no: false,
        };
        match csra_bruteforce(&inst, q)? {
            (true, Some(colors)) => println!("q={q}: robust with colors {colors:?}"),
            _ => println!("q={q}: no allocation works"),
        }
    }
    Ok(())
}
