//! Resilient estimation on a complete graph with one Byzantine node that
//! broadcasts a constant, for every transmission strategy.

use resest::{
    build_medag, AdversaryModel, AdversarySpec, ColoredNetwork, LfreConfig, NodeSet, Simulator,
    StopRule, Strategy, SystemModel,
};

fn main() -> resest::Result<()> {
    let net = ColoredNetwork::complete(7);
    // only nodes 0, 1, 2 measure the unstable mode
    let model = SystemModel::new(
        vec![1.5],
        (0..7)
            .map(|i| vec![vec![if i < 3 { 1.0 } else { 0.0 }]])
            .collect(),
        vec![1.0],
    )?;
    let bound = AdversaryModel::FLocal(1);
    let medag = build_medag(&net, 0, &NodeSet::from([0, 1, 2]), bound)?;

    for strategy in [
        Strategy::Constant { value: 1000.0 },
        Strategy::OppositeDrift { gain: 2.0 },
        Strategy::SplitBrain {
            offsets: vec![40.0, -40.0],
        },
        Strategy::Random {
            seed: 1,
            range: 10.0,
        },
        Strategy::Silent,
    ] {
        let adversary = AdversarySpec {
            members: NodeSet::from([4]),
            model: bound,
            strategy,
            color: 0,
        };
        let sim = Simulator::new(
            &net,
            &model,
            std::slice::from_ref(&medag),
            &adversary,
            LfreConfig::new(bound),
        )?;
        let out = sim.run(0.0, StopRule::new(150, 1e-6))?;
        println!(
            "{:<15} {} after {} steps, max error {:.2e}, trimmed {} times",
            adversary.strategy.label(),
            out.verdict,
            out.steps,
            out.final_max_error,
            out.safety.trimmed_checks
        );
    }
    Ok(())
}
