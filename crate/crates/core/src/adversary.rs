//! Adversarial sets and Byzantine transmission strategies.

use std::fmt;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Color, ColoredNetwork, NodeId, NodeSet, Redundancy};
use crate::plant::ModeIndex;

/// Largest color class [`enumerate_flocal_sets`] will enumerate.
pub const ENUMERATION_CAP: usize = 24;

/// How many adversaries the regular nodes are prepared for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryModel {
    /// At most `f` adversaries in any regular node's neighborhood.
    FLocal(usize),
    /// Any number of adversaries, all of one color.
    MonoChromatic,
}

impl AdversaryModel {
    /// Redundancy threshold of the matching robustness notion: `2f + 1`, or
    /// disabled for the mono-chromatic model.
    pub fn redundancy(self) -> Redundancy {
        match self {
            AdversaryModel::FLocal(f) => Redundancy::Finite(2 * f + 1),
            AdversaryModel::MonoChromatic => Redundancy::Infinite,
        }
    }
}

impl fmt::Display for AdversaryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryModel::FLocal(b) => write!(f, "{b}-local mono-chromatic"),
            AdversaryModel::MonoChromatic => f.write_str("mono-chromatic"),
        }
    }
}

/// What an adversarial node sends. Adversaries know the true state, so
/// every strategy is a function of the true mode value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Strategy {
    /// Send nothing.
    Silent,
    Constant {
        value: f64,
    },
    /// True value plus uniform noise in `[-range, range]`, drawn from a
    /// counter-based stream keyed by (sender, recipient, mode) and the round.
    Random {
        seed: u64,
        range: f64,
    },
    /// `-gain` times the true value.
    OppositeDrift {
        gain: f64,
    },
    /// True value plus `offsets[recipient % offsets.len()]`; different
    /// recipients hear different values in the same round.
    SplitBrain {
        offsets: Vec<f64>,
    },
}

impl Strategy {
    /// Value `sender` transmits to `recipient` for `mode` in `round`, or
    /// `None` when it stays silent.
    pub fn transmit(
        &self,
        round: usize,
        sender: NodeId,
        recipient: NodeId,
        mode: ModeIndex,
        truth: f64,
    ) -> Option<f64> {
        match self {
            Strategy::Silent => None,
            Strategy::Constant { value } => Some(*value),
            Strategy::Random { seed, range } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let stream = ((sender as u64 & 0xf_ffff) << 40)
                    | ((recipient as u64 & 0xf_ffff) << 20)
                    | (mode as u64 & 0xf_ffff);
                rng.set_stream(stream);
                rng.set_word_pos(round as u128 * 2);
                let u: f64 = rng.gen();
                Some(truth + range * (2.0 * u - 1.0))
            }
            Strategy::OppositeDrift { gain } => Some(-gain * truth),
            Strategy::SplitBrain { offsets } => Some(
                truth
                    + offsets
                        .get(recipient % offsets.len().max(1))
                        .copied()
                        .unwrap_or(0.0),
            ),
        }
    }

    /// Canonical upper-case name, as used in reports.
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Silent => "SILENT",
            Strategy::Constant { .. } => "CONSTANT",
            Strategy::Random { .. } => "RANDOM",
            Strategy::OppositeDrift { .. } => "OPPOSITE_DRIFT",
            Strategy::SplitBrain { .. } => "SPLIT_BRAIN",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarySpec {
    pub members: NodeSet,
    pub model: AdversaryModel,
    pub strategy: Strategy,
    pub color: Color,
}

impl AdversarySpec {
    /// No adversaries at all.
    pub fn none(model: AdversaryModel) -> Self {
        AdversarySpec {
            members: NodeSet::new(),
            model,
            strategy: Strategy::Silent,
            color: 0,
        }
    }

    pub fn is_adversarial(&self, v: NodeId) -> bool {
        self.members.contains(&v)
    }
}

/// First constraint an adversary specification breaks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    UnknownNode {
        node: NodeId,
    },
    Trusted {
        node: NodeId,
    },
    Color {
        node: NodeId,
        color: Color,
        expected: Color,
    },
    /// Regular `node` hears from `count` adversaries, more than the bound.
    Locality {
        node: NodeId,
        count: usize,
        bound: usize,
    },
    /// Every node is adversarial.
    NoRegularNode,
    BadStrategy {
        reason: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownNode { node } => write!(f, "node {node} is not in the network"),
            Violation::Trusted { node } => write!(f, "trusted node {node} cannot be adversarial"),
            Violation::Color {
                node,
                color,
                expected,
            } => {
                write!(
                    f,
                    "node {node} has color {color}, adversary color is {expected}"
                )
            }
            Violation::Locality { node, count, bound } => {
                write!(f, "node {node} hears {count} adversaries (bound {bound})")
            }
            Violation::NoRegularNode => f.write_str("adversarial set covers the whole network"),
            Violation::BadStrategy { reason } => write!(f, "bad strategy: {reason}"),
        }
    }
}

/// `|N_i ∩ set| <= f` for every `i` outside `set`.
pub fn is_f_local(net: &ColoredNetwork, set: &NodeSet, f: usize) -> bool {
    locality_violation(net, set, f).is_none()
}

fn locality_violation(net: &ColoredNetwork, set: &NodeSet, f: usize) -> Option<(NodeId, usize)> {
    net.nodes()
        .filter(|i| !set.contains(i))
        .map(|i| (i, net.nbrs(i).intersection(set).count()))
        .find(|&(_, count)| count > f)
}

/// Check an adversary specification: members exist, none is trusted, all
/// share the declared color, and (f-local model) no regular node hears from
/// more than `f` of them.
pub fn validate_adversary(net: &ColoredNetwork, spec: &AdversarySpec) -> Option<Violation> {
    if let Some(&node) = spec.members.iter().find(|&&v| v >= net.node_count()) {
        return Some(Violation::UnknownNode { node });
    }
    if let Some(&node) = spec.members.iter().find(|&&v| net.is_trusted(v)) {
        return Some(Violation::Trusted { node });
    }
    if let Some(&node) = spec.members.iter().find(|&&v| net.color(v) != spec.color) {
        return Some(Violation::Color {
            node,
            color: net.color(node),
            expected: spec.color,
        });
    }
    if spec.members.len() == net.node_count() {
        return Some(Violation::NoRegularNode);
    }
    if let AdversaryModel::FLocal(f) = spec.model {
        if let Some((node, count)) = locality_violation(net, &spec.members, f) {
            return Some(Violation::Locality {
                node,
                count,
                bound: f,
            });
        }
    }
    match &spec.strategy {
        Strategy::SplitBrain { offsets } if offsets.is_empty() => Some(Violation::BadStrategy {
            reason: "split-brain needs at least one offset".into(),
        }),
        Strategy::Random { range, .. } if !(range.is_finite() && *range >= 0.0) => {
            Some(Violation::BadStrategy {
                reason: "random range must be finite and non-negative".into(),
            })
        }
        _ => None,
    }
}

/// f-local subsets of the untrusted members of `color`, by increasing size and
/// then lexicographically, stopping after `max_count` sets. The empty set
/// comes first; the whole network never qualifies.
pub fn enumerate_flocal_sets(
    net: &ColoredNetwork,
    f: usize,
    color: Color,
    max_count: usize,
) -> Result<Vec<NodeSet>> {
    let candidates: Vec<NodeId> = net
        .color_class(color)
        .into_iter()
        .filter(|&v| !net.is_trusted(v))
        .collect();
    if candidates.len() > ENUMERATION_CAP {
        return Err(Error::TooLarge {
            size: candidates.len(),
            cap: ENUMERATION_CAP,
        });
    }
    let mut out = Vec::new();
    for k in 0..=candidates.len() {
        for combo in candidates.iter().copied().combinations(k) {
            if out.len() >= max_count {
                return Ok(out);
            }
            let set: NodeSet = combo.into_iter().collect();
            if set.len() < net.node_count() && is_f_local(net, &set, f) {
                out.push(set);
            }
        }
    }
    Ok(out)
}

/// Sybil attack on `target`: add `replicas` clones with its color and its
/// in- and out-neighborhoods. The target and its clones form a
/// mono-chromatic adversarial set.
pub fn spoof_expand(
    net: &ColoredNetwork,
    target: NodeId,
    replicas: usize,
    strategy: Strategy,
) -> Result<(ColoredNetwork, AdversarySpec)> {
    let ins = net.in_neighbors(target)?.clone();
    let outs = net.out_neighbors(target)?.clone();
    if net.is_trusted(target) {
        return Err(Error::Input(format!(
            "trusted node {target} cannot be spoofed"
        )));
    }
    let color = net.color(target);
    let mut grown = net.clone();
    let mut members = NodeSet::from([target]);
    for _ in 0..replicas {
        let clone = grown.add_node(color);
        for &j in &ins {
            grown.add_edge(j, clone)?;
        }
        for &k in &outs {
            grown.add_edge(clone, k)?;
        }
        members.insert(clone);
    }
    Ok((
        grown,
        AdversarySpec {
            members,
            model: AdversaryModel::MonoChromatic,
            strategy,
            color,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[NodeId]) -> NodeSet {
        v.iter().copied().collect()
    }

    fn spec(members: &[NodeId], model: AdversaryModel) -> AdversarySpec {
        AdversarySpec {
            members: set(members),
            model,
            strategy: Strategy::Constant { value: 1.0 },
            color: 0,
        }
    }

    #[test]
    fn empty_set_is_valid_under_both_models() {
        let net = ColoredNetwork::complete(4);
        assert_eq!(
            validate_adversary(&net, &spec(&[], AdversaryModel::FLocal(0))),
            None
        );
        assert_eq!(
            validate_adversary(&net, &spec(&[], AdversaryModel::MonoChromatic)),
            None
        );
    }

    #[test]
    fn two_adversaries_in_complete_graph_break_locality() {
        let net = ColoredNetwork::complete(5);
        assert_eq!(
            validate_adversary(&net, &spec(&[0, 1], AdversaryModel::FLocal(1))),
            Some(Violation::Locality {
                node: 2,
                count: 2,
                bound: 1
            })
        );
        assert_eq!(
            validate_adversary(&net, &spec(&[0, 1], AdversaryModel::MonoChromatic)),
            None
        );
    }

    #[test]
    fn trusted_and_color_violations() {
        let mut net = ColoredNetwork::complete(4);
        net.add_trusted(2).unwrap();
        net.set_color(3, 1).unwrap();
        assert_eq!(
            validate_adversary(&net, &spec(&[2], AdversaryModel::MonoChromatic)),
            Some(Violation::Trusted { node: 2 })
        );
        assert_eq!(
            validate_adversary(&net, &spec(&[0, 3], AdversaryModel::MonoChromatic)),
            Some(Violation::Color {
                node: 3,
                color: 1,
                expected: 0
            })
        );
        assert_eq!(
            validate_adversary(&net, &spec(&[9], AdversaryModel::MonoChromatic)),
            Some(Violation::UnknownNode { node: 9 })
        );
    }

    #[test]
    fn zero_bound_admits_only_empty_set() {
        let net = ColoredNetwork::complete(5);
        assert_eq!(
            enumerate_flocal_sets(&net, 0, 0, 100).unwrap(),
            vec![NodeSet::new()]
        );
    }

    #[test]
    fn star_leaves_enumeration() {
        // center 0 has its own color; leaves 1..=3 share color 0
        let mut net = ColoredNetwork::new(4);
        net.set_color(0, 1).unwrap();
        for leaf in 1..4 {
            net.add_undirected_edge(0, leaf).unwrap();
        }
        // Oracle: walk all 8 subsets of the leaves, with the center as the
        // only outsider that can see more than one of them.
        let mut expected = Vec::new();
        for k in 0..=3usize {
            for combo in (1..4).combinations(k) {
                if combo.len() <= 1 {
                    expected.push(combo.into_iter().collect::<NodeSet>());
                }
            }
        }
        let got = enumerate_flocal_sets(&net, 1, 0, 100).unwrap();
        assert_eq!(got, expected);
        assert_eq!(got, vec![set(&[]), set(&[1]), set(&[2]), set(&[3])]);
        assert_eq!(enumerate_flocal_sets(&net, 1, 0, 2).unwrap().len(), 2);
    }

    #[test]
    fn empty_color_class() {
        let net = ColoredNetwork::complete(3);
        assert_eq!(
            enumerate_flocal_sets(&net, 2, 7, 10).unwrap(),
            vec![NodeSet::new()]
        );
    }

    #[test]
    fn spoofing_copies_neighborhoods() {
        let mut net = ColoredNetwork::new(5);
        for leaf in 1..5 {
            net.add_undirected_edge(0, leaf).unwrap();
        }
        net.set_color(0, 2).unwrap();
        let (same, spec0) = spoof_expand(&net, 0, 0, Strategy::Silent).unwrap();
        assert_eq!(same, net);
        assert_eq!(spec0.members, set(&[0]));

        let (grown, spec3) = spoof_expand(&net, 0, 3, Strategy::Silent).unwrap();
        assert_eq!(grown.node_count(), 8);
        for clone in 5..8 {
            assert_eq!(
                grown.in_neighbors(clone).unwrap(),
                net.in_neighbors(0).unwrap()
            );
            assert_eq!(
                grown.out_neighbors(clone).unwrap(),
                net.out_neighbors(0).unwrap()
            );
            assert_eq!(grown.color(clone), 2);
        }
        assert_eq!(spec3.members, set(&[0, 5, 6, 7]));
        assert_eq!(validate_adversary(&grown, &spec3), None);

        net.add_trusted(1).unwrap();
        assert!(spoof_expand(&net, 1, 2, Strategy::Silent).is_err());
    }

    #[test]
    fn strategies_are_deterministic_and_per_recipient() {
        let r = Strategy::Random {
            seed: 3,
            range: 2.0,
        };
        let a = r.transmit(5, 1, 2, 0, 10.0).unwrap();
        assert_eq!(a, r.transmit(5, 1, 2, 0, 10.0).unwrap());
        assert_ne!(a, r.transmit(6, 1, 2, 0, 10.0).unwrap());
        assert!((a - 10.0).abs() <= 2.0);

        let split = Strategy::SplitBrain {
            offsets: vec![5.0, -5.0],
        };
        assert_eq!(split.transmit(0, 0, 2, 0, 1.0), Some(6.0));
        assert_eq!(split.transmit(0, 0, 3, 0, 1.0), Some(-4.0));
        assert_eq!(
            Strategy::OppositeDrift { gain: 2.0 }.transmit(0, 0, 1, 0, 3.0),
            Some(-6.0)
        );
        assert_eq!(Strategy::Silent.transmit(0, 0, 1, 0, 3.0), None);
    }
}
