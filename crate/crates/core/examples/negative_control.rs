//! Without enough redundancy the filter cannot reject a single liar: the
//! follower averages the liar in and its error grows with the plant.

use resest::{
    build_medag, AdversaryModel, AdversarySpec, ColoredNetwork, LfreConfig, NodeSet, Simulator,
    StopRule, Strategy, SystemModel,
};

fn main() -> resest::Result<()> {
    let mut net = ColoredNetwork::new(3);
    net.add_undirected_edge(0, 1)?;
    net.add_edge(0, 2)?;
    net.add_edge(1, 2)?;
    let model = SystemModel::new(
        vec![1.2],
        vec![vec![vec![1.0]], vec![vec![1.0]], vec![vec![0.0]]],
        vec![1.0],
    )?;
    let bound = AdversaryModel::FLocal(1);
    let medag = build_medag(&net, 0, &NodeSet::from([0, 1]), bound)?;
    println!(
        "robust: {} (never activated: {:?})",
        medag.terminated(),
        medag.inactive()
    );

    let adversary = AdversarySpec {
        members: NodeSet::from([0]),
        model: bound,
        strategy: Strategy::OppositeDrift { gain: 2.0 },
        color: 0,
    };
    let sim = Simulator::new(&net, &model, &[medag], &adversary, LfreConfig::new(bound))?;
    let out = sim.run(0.0, StopRule::new(300, 1e-6))?;
    for row in out.trace.rows.iter().step_by(25) {
        println!("k={:>3} max error {:.3e}", row.k, row.max_error);
    }
    println!("verdict {} at step {}", out.verdict, out.steps);
    Ok(())
}
