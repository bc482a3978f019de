//! An entire color class turns Byzantine, then a hub is spoofed into
//! several replicas. Diversity filtering handles both without any bound on
//! the adversary count.

use resest::generators::{robust_scenario, ScenarioShape};
use resest::{
    build_medag, spoof_expand, AdversaryModel, AdversarySpec, ColoredNetwork, LfreConfig, NodeSet,
    Rule, Simulator, StopRule, Strategy, SystemModel,
};

fn run(net: &ColoredNetwork, model: &SystemModel, adversary: &AdversarySpec) -> resest::Result<()> {
    let sets = model.mode_index_sets();
    let medags = sets
        .needs_medag
        .iter()
        .map(|&j| build_medag(net, j, &sets.sources[j], AdversaryModel::MonoChromatic))
        .collect::<resest::Result<Vec<_>>>()?;
    let sim = Simulator::new(
        net,
        model,
        &medags,
        adversary,
        LfreConfig::new(AdversaryModel::MonoChromatic),
    )?;
    let out = sim.run(0.0, StopRule::new(300, 1e-6))?;
    let diversity = out
        .trace
        .rows
        .iter()
        .flat_map(|r| &r.entries)
        .filter(|e| e.rule == Rule::Diversity)
        .count();
    println!(
        "  {} nodes, {} adversarial: {} at step {}, {diversity} diversity-filtered updates, {} containment violations",
        net.node_count(),
        adversary.members.len(),
        out.verdict,
        out.steps,
        out.safety.diversity_violations
    );
    Ok(())
}

fn main() -> resest::Result<()> {
    let shape = ScenarioShape {
        nodes: 12,
        density: 0.6,
        colors: 4,
        trusted_fraction: 0.0,
        unstable_modes: 2,
        stable_modes: 1,
        unstable_range: (1.05, 1.5),
        max_sources: 6,
        color_zero_count: Some(5),
    };
    let (net, model) = robust_scenario(42, 0, &shape, AdversaryModel::MonoChromatic)?;

    println!("whole color class 0 adversarial:");
    let members: NodeSet = net.color_class(0);
    let adversary = AdversarySpec {
        members,
        model: AdversaryModel::MonoChromatic,
        strategy: Strategy::OppositeDrift { gain: 5.0 },
        color: 0,
    };
    run(&net, &model, &adversary)?;

    println!("hub with three Sybil replicas:");
    let hub = net
        .nodes()
        .max_by_key(|&v| net.out_neighbors(v).map_or(0, |o| o.len()))
        .unwrap_or(0);
    let (grown, spec) = spoof_expand(
        &net,
        hub,
        3,
        Strategy::SplitBrain {
            offsets: vec![9.0, -9.0],
        },
    )?;
    let grown_model = model.with_cloned_nodes(hub, 3)?;
    run(&grown, &grown_model, &spec)
}
