//! MEDAG construction by round-based activation, the polynomial
//! strong-robustness test it yields, and structural validation of a built
//! MEDAG against sampled adversarial sets.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversary::{is_f_local, AdversaryModel};
use crate::error::{Error, Result};
use crate::graph::{has_three_colors, ColoredNetwork, NodeId, NodeSet, Redundancy};
use crate::plant::ModeIndex;

/// A mode estimation DAG for one mode: the frozen informant lists and the
/// round in which each node activated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Medag {
    pub mode: ModeIndex,
    pub sources: NodeSet,
    pub redundancy: Redundancy,
    /// `neighbors[i]` = informants node `i` froze at activation.
    pub neighbors: Vec<NodeSet>,
    /// `activation[i]` = round node `i` activated in, `None` if it never did.
    pub activation: Vec<Option<usize>>,
}

impl Medag {
    pub fn node_count(&self) -> usize {
        self.activation.len()
    }

    pub fn terminated(&self) -> bool {
        self.activation.iter().all(Option::is_some)
    }

    /// Last activation round, when the construction terminated.
    pub fn last_round(&self) -> Option<usize> {
        if !self.terminated() {
            return None;
        }
        self.activation.iter().flatten().copied().max()
    }

    /// Nodes activated in round `q`.
    pub fn level(&self, q: usize) -> NodeSet {
        (0..self.node_count())
            .filter(|&i| self.activation[i] == Some(q))
            .collect()
    }

    /// Nodes that never activated. When non-empty this set is not reachable
    /// under the construction's trigger, so it witnesses non-robustness.
    pub fn inactive(&self) -> NodeSet {
        (0..self.node_count())
            .filter(|&i| self.activation[i].is_none())
            .collect()
    }

    /// `M <j> <i> : <neighbors> @ <round>` lines, one per node; the round of a
    /// node that never activated is written as `-`.
    pub fn to_export(&self) -> String {
        let mut out = String::new();
        for i in 0..self.node_count() {
            let nbrs: Vec<String> = self.neighbors[i].iter().map(|v| v.to_string()).collect();
            let round = self.activation[i].map_or("-".to_string(), |q| q.to_string());
            writeln!(
                out,
                "M {} {} : {} @ {}",
                self.mode,
                i,
                nbrs.join(" "),
                round
            )
            .unwrap();
        }
        out
    }

    /// Parse export lines back into one MEDAG per mode, ascending by mode.
    pub fn parse_export(text: &str, bound: AdversaryModel) -> Result<Vec<Medag>> {
        let name = "medag export";
        let mut by_mode: BTreeMap<ModeIndex, BTreeMap<NodeId, (NodeSet, Option<usize>)>> =
            BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| Error::parse(name, line_no, msg);
            let rest = line
                .strip_prefix("M ")
                .ok_or_else(|| bad("expected `M` line"))?;
            let (head, tail) = rest.split_once(':').ok_or_else(|| bad("missing `:`"))?;
            let (nbrs, round) = tail.split_once('@').ok_or_else(|| bad("missing `@`"))?;
            let ids: Vec<usize> = head
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("bad mode/node id"))?;
            let [j, i] = ids[..] else {
                return Err(bad("expected `<mode> <node>`"));
            };
            let nbrs: NodeSet = nbrs
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("bad neighbor id"))?;
            let round = match round.trim() {
                "-" => None,
                r => Some(r.parse().map_err(|_| bad("bad round"))?),
            };
            if by_mode
                .entry(j)
                .or_default()
                .insert(i, (nbrs, round))
                .is_some()
            {
                return Err(bad("duplicate node line"));
            }
        }
        by_mode
            .into_iter()
            .map(|(mode, nodes)| {
                let n = nodes.len();
                if nodes.keys().next_back() != Some(&(n - 1)) {
                    return Err(Error::parse(
                        name,
                        0,
                        format!("mode {mode}: node ids not contiguous"),
                    ));
                }
                let (neighbors, activation): (Vec<_>, Vec<_>) = nodes.into_values().unzip();
                Ok(Medag {
                    mode,
                    sources: (0..n).filter(|&i| activation[i] == Some(0)).collect(),
                    redundancy: bound.redundancy(),
                    neighbors,
                    activation,
                })
            })
            .collect()
    }
}

/// Run the activation process for mode `mode` with the trigger implied by
/// `bound`: an inactive node activates once its activated in-neighbors
/// number at least `2f + 1` (disabled for the mono-chromatic model), span
/// three colors, or include a trusted node.
pub fn build_medag(
    net: &ColoredNetwork,
    mode: ModeIndex,
    sources: &NodeSet,
    bound: AdversaryModel,
) -> Result<Medag> {
    activate(net, mode, sources, bound.redundancy())
}

/// Activation process for an explicit redundancy threshold.
pub fn activate(
    net: &ColoredNetwork,
    mode: ModeIndex,
    sources: &NodeSet,
    redundancy: Redundancy,
) -> Result<Medag> {
    let n = net.node_count();
    for &s in sources {
        if s >= n {
            return Err(Error::NodeOutOfRange { node: s, count: n });
        }
    }
    let mut activation: Vec<Option<usize>> = vec![None; n];
    let mut neighbors = vec![NodeSet::new(); n];
    for &s in sources {
        activation[s] = Some(0);
    }
    let mut round = 0;
    while round < n {
        round += 1;
        let mut fired = Vec::new();
        for i in net.nodes() {
            if activation[i].is_some() {
                continue;
            }
            let informants: NodeSet = net
                .nbrs(i)
                .iter()
                .copied()
                .filter(|&l| activation[l].is_some())
                .collect();
            if triggers(net, &informants, redundancy) {
                fired.push((i, informants));
            }
        }
        if fired.is_empty() {
            break;
        }
        for (i, informants) in fired {
            activation[i] = Some(round);
            neighbors[i] = informants;
        }
    }
    Ok(Medag {
        mode,
        sources: sources.clone(),
        redundancy,
        neighbors,
        activation,
    })
}

fn triggers(net: &ColoredNetwork, informants: &NodeSet, redundancy: Redundancy) -> bool {
    informants.iter().any(|&l| net.is_trusted(l))
        || has_three_colors(net.colors(), informants.iter().copied())
        || redundancy.met_by(informants.len())
}

/// Polynomial strong-robustness test: the activation process terminates iff
/// the network is strongly (2f+1, colors, trusted)-robust w.r.t. `sources`
/// (or (colors, trusted)-robust for the mono-chromatic model).
pub fn is_strongly_robust(net: &ColoredNetwork, sources: &NodeSet, bound: AdversaryModel) -> bool {
    is_strongly_robust_with(net, sources, bound.redundancy())
}

pub fn is_strongly_robust_with(
    net: &ColoredNetwork,
    sources: &NodeSet,
    redundancy: Redundancy,
) -> bool {
    activate(net, 0, sources, redundancy)
        .map(|m| m.terminated())
        .unwrap_or(false)
}

/// Outcome of [`validate_medag`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MedagReport {
    pub valid: bool,
    /// Adversarial sets checked, including the empty set.
    pub sets_checked: usize,
    /// True when sampling found no admissible non-empty adversarial set.
    pub vacuous: bool,
    pub violation: Option<String>,
}

/// Check MEDAG properties against the empty adversary and `trials` randomly
/// sampled admissible adversarial sets (mono-chromatic, disjoint from the
/// trusted set, and f-local under the f-local model).
///
/// For each set `A` with regular nodes `R = V \ A`: every regular non-source
/// must keep enough informants, `S ∩ R` must be non-empty, sources must have
/// no informants, and regular informants must sit on strictly lower levels.
/// Levels are rebuilt from the informant lists, so an injected cycle fails
/// even if the stored activation rounds look consistent.
pub fn validate_medag(
    net: &ColoredNetwork,
    medag: &Medag,
    bound: AdversaryModel,
    trials: usize,
    seed: u64,
) -> Result<MedagReport> {
    if medag.node_count() != net.node_count() {
        return Err(Error::Dimension {
            expected: net.node_count(),
            actual: medag.node_count(),
        });
    }
    if !medag.terminated() {
        return Err(Error::Input(
            "validation requires a terminated MEDAG".into(),
        ));
    }
    let mut sets = vec![NodeSet::new()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let colors: Vec<_> = net
        .colors()
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    for _ in 0..trials {
        for _attempt in 0..32 {
            let color = colors[rng.gen_range(0..colors.len())];
            let keep: f64 = rng.gen();
            let a: NodeSet = net
                .color_class(color)
                .into_iter()
                .filter(|&v| !net.is_trusted(v) && rng.gen::<f64>() < keep)
                .collect();
            let admissible = !a.is_empty()
                && a.len() < net.node_count()
                && match bound {
                    AdversaryModel::FLocal(f) => is_f_local(net, &a, f),
                    AdversaryModel::MonoChromatic => true,
                };
            if admissible {
                sets.push(a);
                break;
            }
        }
    }
    let vacuous = sets.len() == 1 && trials > 0;
    if vacuous {
        log::warn!(
            "no admissible non-empty adversarial set sampled; only the empty set was checked"
        );
    }
    for a in &sets {
        if let Some(v) = check_against(net, medag, bound, a) {
            return Ok(MedagReport {
                valid: false,
                sets_checked: sets.len(),
                vacuous,
                violation: Some(v),
            });
        }
    }
    Ok(MedagReport {
        valid: true,
        sets_checked: sets.len(),
        vacuous,
        violation: None,
    })
}

/// First violated MEDAG property for adversarial set `a`, if any.
pub(crate) fn check_against(
    net: &ColoredNetwork,
    medag: &Medag,
    bound: AdversaryModel,
    a: &NodeSet,
) -> Option<String> {
    let n = net.node_count();
    let regular = |v: NodeId| !a.contains(&v);
    let redundancy = bound.redundancy();

    if !medag.sources.iter().any(|&s| regular(s)) {
        return Some(format!("A = {a:?}: no regular source node"));
    }
    for i in (0..n).filter(|&i| regular(i)) {
        let nbrs = &medag.neighbors[i];
        if medag.sources.contains(&i) {
            if !nbrs.is_empty() {
                return Some(format!("source {i} has informants {nbrs:?}"));
            }
            continue;
        }
        if !triggers(net, nbrs, redundancy) {
            return Some(format!(
                "A = {a:?}: node {i} has too few informants {nbrs:?}"
            ));
        }
        let Some(round_i) = medag.activation[i] else {
            return Some(format!("node {i} never activated"));
        };
        for &l in nbrs {
            if medag.activation[l].is_none_or(|round_l| round_l >= round_i) {
                return Some(format!(
                    "node {i} (round {round_i}) lists informant {l} from a later round"
                ));
            }
        }
    }

    // Rebuild the level partition of R from the informant lists alone.
    let mut level: Vec<Option<usize>> = (0..n)
        .map(|i| (regular(i) && medag.sources.contains(&i)).then_some(0))
        .collect();
    let pending: Vec<NodeId> = (0..n)
        .filter(|&i| regular(i) && !medag.sources.contains(&i))
        .collect();
    let mut remaining = pending.len();
    while remaining > 0 {
        let mut progressed = false;
        for &i in &pending {
            if level[i].is_some() {
                continue;
            }
            let mut deepest = Some(0);
            for &l in medag.neighbors[i].iter().filter(|&&l| regular(l)) {
                deepest = match (deepest, level[l]) {
                    (Some(d), Some(lv)) => Some(d.max(lv)),
                    _ => None,
                };
            }
            if let Some(d) = deepest {
                level[i] = Some(d + 1);
                remaining -= 1;
                progressed = true;
            }
        }
        if !progressed {
            let stuck: NodeSet = pending
                .iter()
                .copied()
                .filter(|&i| level[i].is_none())
                .collect();
            return Some(format!(
                "A = {a:?}: informant lists of {stuck:?} contain a cycle"
            ));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::is_strongly_robust_bruteforce;

    fn set(v: &[NodeId]) -> NodeSet {
        v.iter().copied().collect()
    }

    #[test]
    fn complete_graph_one_round() {
        let net = ColoredNetwork::complete(7);
        let m = build_medag(&net, 0, &set(&[0, 1, 2]), AdversaryModel::FLocal(1)).unwrap();
        assert!(m.terminated());
        assert_eq!(m.last_round(), Some(1));
        for i in 3..7 {
            assert_eq!(m.activation[i], Some(1));
            assert_eq!(m.neighbors[i], set(&[0, 1, 2]));
        }
        for s in 0..3 {
            assert!(m.neighbors[s].is_empty());
        }
    }

    #[test]
    fn trusted_star_center() {
        let mut net = ColoredNetwork::new(6);
        for leaf in 1..6 {
            net.add_undirected_edge(0, leaf).unwrap();
        }
        net.add_trusted(0).unwrap();
        let m = build_medag(&net, 0, &set(&[0]), AdversaryModel::FLocal(2)).unwrap();
        assert!(m.terminated());
        assert_eq!(m.level(1), set(&[1, 2, 3, 4, 5]));
    }

    #[test]
    fn mono_only_never_fires_on_one_color_untrusted() {
        let net = ColoredNetwork::complete(6);
        let m = build_medag(&net, 0, &set(&[0, 1, 2]), AdversaryModel::MonoChromatic).unwrap();
        assert!(!m.terminated());
        assert_eq!(m.inactive(), set(&[3, 4, 5]));
    }

    /// Nodes 0..=11 stand for the figure's nodes 1..=12.
    fn figure_three() -> ColoredNetwork {
        let mut net = ColoredNetwork::new(12);
        // sources 1..6: colors red(0), blue(1), green(2), then red; node 4 trusted
        for (i, c) in [0, 1, 2, 0, 0, 0].into_iter().enumerate() {
            net.set_color(i, c).unwrap();
        }
        net.add_trusted(3).unwrap();
        // node 7 hears from the three distinctly colored sources 1, 2, 3
        for s in [0, 1, 2] {
            net.add_edge(s, 6).unwrap();
        }
        // nodes 8..11 hear the trusted source 4 (and red source 5)
        for i in 7..11 {
            net.add_edge(3, i).unwrap();
            net.add_edge(4, i).unwrap();
        }
        // node 12 hears source 6 directly and nodes 8, 9, 10 of level 1
        for l in [5, 7, 8, 9] {
            net.add_edge(l, 11).unwrap();
        }
        net
    }

    #[test]
    fn figure_three_rounds() {
        let net = figure_three();
        let m = build_medag(
            &net,
            0,
            &set(&[0, 1, 2, 3, 4, 5]),
            AdversaryModel::FLocal(1),
        )
        .unwrap();
        assert!(m.terminated());
        assert_eq!(m.activation[6], Some(1));
        for i in 7..11 {
            assert_eq!(m.activation[i], Some(1));
        }
        assert_eq!(m.activation[11], Some(2));
        assert_eq!(m.neighbors[11], set(&[5, 7, 8, 9]));
    }

    #[test]
    fn robust_check_basic_cases() {
        let net = ColoredNetwork::complete(4);
        assert!(is_strongly_robust(
            &net,
            &set(&[0, 1, 2, 3]),
            AdversaryModel::FLocal(3)
        ));
        let mut split = ColoredNetwork::complete(3);
        let far = split.add_node(0);
        let far2 = split.add_node(0);
        split.add_undirected_edge(far, far2).unwrap();
        assert!(!is_strongly_robust(
            &split,
            &set(&[0]),
            AdversaryModel::FLocal(0)
        ));
        assert!(!is_strongly_robust(
            &net,
            &NodeSet::new(),
            AdversaryModel::FLocal(0)
        ));
    }

    #[test]
    fn inactive_set_is_a_counterexample() {
        let mut net = ColoredNetwork::complete(5);
        let extra = net.add_node(0);
        net.add_edge(0, extra).unwrap();
        net.add_edge(1, extra).unwrap();
        let m = build_medag(&net, 0, &set(&[0, 1]), AdversaryModel::FLocal(1)).unwrap();
        assert!(!m.terminated());
        let inactive = m.inactive();
        assert_eq!(
            crate::graph::is_reachable_set(&net, &inactive, Redundancy::Finite(3)).unwrap(),
            None
        );
        assert!(
            !is_strongly_robust_bruteforce(&net, &set(&[0, 1]), Redundancy::Finite(3))
                .unwrap()
                .robust
        );
    }

    #[test]
    fn validate_accepts_built_medags() {
        let net = ColoredNetwork::complete(7);
        let m = build_medag(&net, 0, &set(&[0, 1, 2]), AdversaryModel::FLocal(1)).unwrap();
        let report = validate_medag(&net, &m, AdversaryModel::FLocal(1), 0, 1).unwrap();
        assert!(report.valid);
        assert_eq!(report.sets_checked, 1);
        // every single-node adversary choice, exhaustively
        for a in 0..7 {
            assert_eq!(
                check_against(&net, &m, AdversaryModel::FLocal(1), &set(&[a])),
                None
            );
        }
        let report = validate_medag(&net, &m, AdversaryModel::FLocal(1), 50, 9).unwrap();
        assert!(report.valid);
        assert!(!report.vacuous);
    }

    #[test]
    fn validate_rejects_injected_cycle() {
        let net = ColoredNetwork::complete(7);
        let mut m = build_medag(&net, 0, &set(&[0, 1, 2]), AdversaryModel::FLocal(1)).unwrap();
        m.neighbors[3] = set(&[0, 1, 4]);
        m.neighbors[4] = set(&[0, 1, 3]);
        let report = validate_medag(&net, &m, AdversaryModel::FLocal(1), 0, 0).unwrap();
        assert!(!report.valid);
        assert!(report.violation.is_some());

        // cycle hidden behind consistent-looking rounds
        m.activation[3] = Some(1);
        m.activation[4] = Some(2);
        let violation =
            check_against(&net, &m, AdversaryModel::FLocal(1), &NodeSet::new()).unwrap();
        assert!(violation.contains("later round") || violation.contains("cycle"));
    }

    #[test]
    fn export_round_trip() {
        let net = figure_three();
        let m = build_medag(
            &net,
            2,
            &set(&[0, 1, 2, 3, 4, 5]),
            AdversaryModel::FLocal(1),
        )
        .unwrap();
        let text = m.to_export();
        assert!(text.contains("M 2 11 : 5 7 8 9 @ 2"));
        assert!(text.contains("M 2 0 :  @ 0"));
        let parsed = Medag::parse_export(&text, AdversaryModel::FLocal(1)).unwrap();
        assert_eq!(parsed, vec![m]);
    }
}
