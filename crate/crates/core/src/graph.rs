//! Colored, partially-trusted directed networks and the reachability /
//! strong-robustness predicates defined over them.
//!
//! An edge `(j, i)` means node `j` transmits to node `i`; the in-neighborhood
//! of `i` is therefore the set of nodes it can hear from. Every node carries
//! one opaque color id and a trusted flag.
//!
//! The exhaustive check [`is_strongly_robust_bruteforce`] enumerates every
//! non-empty subset of the non-source nodes. It is exponential and exists as
//! an oracle for the polynomial MEDAG-based check in [`crate::robustness`].

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type Color = u32;
pub type NodeSet = BTreeSet<NodeId>;

/// Default node-count cap for [`is_strongly_robust_bruteforce`].
pub const BRUTEFORCE_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredNetwork {
    in_nbrs: Vec<NodeSet>,
    out_nbrs: Vec<NodeSet>,
    colors: Vec<Color>,
    trusted: Vec<bool>,
}

impl ColoredNetwork {
    /// A network of `node_count` isolated, untrusted nodes, all of color 0.
    pub fn new(node_count: usize) -> Self {
        ColoredNetwork {
            in_nbrs: vec![NodeSet::new(); node_count],
            out_nbrs: vec![NodeSet::new(); node_count],
            colors: vec![0; node_count],
            trusted: vec![false; node_count],
        }
    }

    /// Build from a directed edge list `(from, to)`.
    pub fn from_edges(node_count: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        let mut net = Self::new(node_count);
        for &(j, i) in edges {
            net.add_edge(j, i)?;
        }
        Ok(net)
    }

    /// Complete digraph on `n` nodes.
    pub fn complete(n: usize) -> Self {
        let mut net = Self::new(n);
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    net.insert_edge(j, i);
                }
            }
        }
        net
    }

    pub fn node_count(&self) -> usize {
        self.colors.len()
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.node_count()
    }

    fn check(&self, i: NodeId) -> Result<()> {
        if i < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: i,
                count: self.node_count(),
            })
        }
    }

    fn insert_edge(&mut self, j: NodeId, i: NodeId) {
        self.in_nbrs[i].insert(j);
        self.out_nbrs[j].insert(i);
    }

    /// Add the directed edge `j -> i`. Duplicates are ignored.
    pub fn add_edge(&mut self, j: NodeId, i: NodeId) -> Result<()> {
        self.check(j)?;
        self.check(i)?;
        if i == j {
            return Err(Error::Input(format!("self-loop on node {i}")));
        }
        self.insert_edge(j, i);
        Ok(())
    }

    /// Add both `a -> b` and `b -> a`.
    pub fn add_undirected_edge(&mut self, a: NodeId, b: NodeId) -> Result<()> {
        self.add_edge(a, b)?;
        self.add_edge(b, a)
    }

    /// Append a node and return its id.
    pub fn add_node(&mut self, color: Color) -> NodeId {
        self.in_nbrs.push(NodeSet::new());
        self.out_nbrs.push(NodeSet::new());
        self.colors.push(color);
        self.trusted.push(false);
        self.node_count() - 1
    }

    pub fn set_color(&mut self, i: NodeId, color: Color) -> Result<()> {
        self.check(i)?;
        self.colors[i] = color;
        Ok(())
    }

    /// Mark `i` as trusted.
    pub fn add_trusted(&mut self, i: NodeId) -> Result<()> {
        self.check(i)?;
        self.trusted[i] = true;
        Ok(())
    }

    /// Copy of this network with exactly `trusted` as the trusted set.
    pub fn with_trusted(&self, trusted: &NodeSet) -> Result<Self> {
        let mut net = self.clone();
        net.trusted = vec![false; self.node_count()];
        for &t in trusted {
            net.add_trusted(t)?;
        }
        Ok(net)
    }

    /// Copy of this network with the given color allocation.
    pub fn with_colors(&self, colors: &[Color]) -> Result<Self> {
        if colors.len() != self.node_count() {
            return Err(Error::Dimension {
                expected: self.node_count(),
                actual: colors.len(),
            });
        }
        let mut net = self.clone();
        net.colors = colors.to_vec();
        Ok(net)
    }

    pub fn in_neighbors(&self, i: NodeId) -> Result<&NodeSet> {
        self.check(i)?;
        Ok(&self.in_nbrs[i])
    }

    pub fn out_neighbors(&self, i: NodeId) -> Result<&NodeSet> {
        self.check(i)?;
        Ok(&self.out_nbrs[i])
    }

    /// In-neighbors of `i`; panics when out of range.
    pub(crate) fn nbrs(&self, i: NodeId) -> &NodeSet {
        &self.in_nbrs[i]
    }

    pub fn color(&self, i: NodeId) -> Color {
        self.colors[i]
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn is_trusted(&self, i: NodeId) -> bool {
        self.trusted[i]
    }

    pub fn trusted_set(&self) -> NodeSet {
        self.nodes().filter(|&i| self.trusted[i]).collect()
    }

    /// Number of distinct colors in use.
    pub fn distinct_colors(&self) -> usize {
        self.colors.iter().collect::<BTreeSet<_>>().len()
    }

    /// All nodes of the given color.
    pub fn color_class(&self, color: Color) -> NodeSet {
        self.nodes().filter(|&i| self.colors[i] == color).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.out_nbrs
            .iter()
            .enumerate()
            .flat_map(|(j, outs)| outs.iter().map(move |&i| (j, i)))
    }

    pub fn edge_count(&self) -> usize {
        self.in_nbrs.iter().map(BTreeSet::len).sum()
    }

    /// Nodes reachable from `sources` along directed edges (sources included).
    pub fn reachable_from(&self, sources: &NodeSet) -> NodeSet {
        let mut seen: NodeSet = sources.clone();
        let mut stack: Vec<NodeId> = sources.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &w in &self.out_nbrs[v] {
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Parse the text graph format:
    ///
    /// ```text
    /// N <count>
    /// E <from> <to>      directed edge
    /// U <a> <b>          undirected edge, expanded to both directions
    /// C <node> <color>   at most once per node; unlisted nodes get color 0
    /// T <node>           trusted node
    /// ```
    ///
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut net: Option<ColoredNetwork> = None;
        let mut colored = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let tag = toks.next().unwrap_or_default();
            let nums: Vec<usize> = toks
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::parse(name, line_no, format!("bad integer `{t}`")))
                })
                .collect::<Result<_>>()?;
            let arity = |n: usize| -> Result<()> {
                if nums.len() == n {
                    Ok(())
                } else {
                    Err(Error::parse(
                        name,
                        line_no,
                        format!("`{tag}` expects {n} integer(s), got {}", nums.len()),
                    ))
                }
            };
            if tag == "N" {
                arity(1)?;
                if net.is_some() {
                    return Err(Error::parse(name, line_no, "duplicate `N` header"));
                }
                if nums[0] == 0 {
                    return Err(Error::parse(name, line_no, "node count must be positive"));
                }
                net = Some(ColoredNetwork::new(nums[0]));
                continue;
            }
            let g = net
                .as_mut()
                .ok_or_else(|| Error::parse(name, line_no, "`N <count>` header must come first"))?;
            let wrap = |e: Error| Error::parse(name, line_no, e.to_string());
            match tag {
                "E" => {
                    arity(2)?;
                    g.add_edge(nums[0], nums[1]).map_err(wrap)?;
                }
                "U" => {
                    arity(2)?;
                    g.add_undirected_edge(nums[0], nums[1]).map_err(wrap)?;
                }
                "C" => {
                    arity(2)?;
                    if !colored.insert(nums[0]) {
                        return Err(Error::parse(
                            name,
                            line_no,
                            format!("duplicate color line for node {}", nums[0]),
                        ));
                    }
                    let color = Color::try_from(nums[1])
                        .map_err(|_| Error::parse(name, line_no, "color id too large"))?;
                    g.set_color(nums[0], color).map_err(wrap)?;
                }
                "T" => {
                    arity(1)?;
                    g.add_trusted(nums[0]).map_err(wrap)?;
                }
                other => {
                    return Err(Error::parse(
                        name,
                        line_no,
                        format!("unknown tag `{other}`"),
                    ));
                }
            }
        }
        net.ok_or_else(|| Error::parse(name, 0, "missing `N <count>` header"))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Serialize in the text graph format (directed edges only).
    pub fn to_text(&self) -> String {
        let mut out = format!("N {}\n", self.node_count());
        for (j, i) in self.edges() {
            out.push_str(&format!("E {j} {i}\n"));
        }
        for i in self.nodes() {
            out.push_str(&format!("C {i} {}\n", self.colors[i]));
        }
        for t in self.trusted_set() {
            out.push_str(&format!("T {t}\n"));
        }
        out
    }
}

/// The redundancy parameter `r` of the reachability predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Redundancy {
    Finite(usize),
    /// Redundancy disabled: only diversity or trust can make a set reachable.
    Infinite,
}

impl Redundancy {
    pub fn finite(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::Input("redundancy r must be at least 1".into()));
        }
        Ok(Redundancy::Finite(r))
    }

    /// Whether `count` neighbors meet the redundancy threshold.
    pub fn met_by(self, count: usize) -> bool {
        match self {
            Redundancy::Finite(r) => count >= r,
            Redundancy::Infinite => false,
        }
    }
}

impl fmt::Display for Redundancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Redundancy::Finite(r) => write!(f, "{r}"),
            Redundancy::Infinite => f.write_str("inf"),
        }
    }
}

/// Which clause of the reachability predicate a witness node satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    Trust,
    Diversity,
    Redundancy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReachWitness {
    pub node: NodeId,
    pub condition: Condition,
}

/// Does `nbrs` (already restricted to the relevant outside set) contain
/// three distinct colors?
pub(crate) fn has_three_colors<I: IntoIterator<Item = NodeId>>(colors: &[Color], nbrs: I) -> bool {
    let mut seen: [Option<Color>; 2] = [None, None];
    for v in nbrs {
        let c = colors[v];
        match seen {
            [None, _] => seen[0] = Some(c),
            [Some(a), None] if a != c => seen[1] = Some(c),
            [Some(a), Some(b)] if a != c && b != c => return true,
            _ => {}
        }
    }
    false
}

/// Strongest condition satisfied by node `i` with respect to the outside
/// neighbor set `outside`, in tie-break order trust, diversity, redundancy.
pub(crate) fn strongest_condition(
    net: &ColoredNetwork,
    outside: &[NodeId],
    r: Redundancy,
) -> Option<Condition> {
    if outside.iter().any(|&v| net.trusted[v]) {
        Some(Condition::Trust)
    } else if has_three_colors(&net.colors, outside.iter().copied()) {
        Some(Condition::Diversity)
    } else if r.met_by(outside.len()) {
        Some(Condition::Redundancy)
    } else {
        None
    }
}

/// Test whether `set` is (r, colors, trusted)-reachable.
///
/// Returns `Some(witness)` when it is. When several nodes or conditions
/// qualify the witness is the lowest-id node satisfying the highest-priority
/// condition (trust, then diversity, then redundancy).
pub fn is_reachable_set(
    net: &ColoredNetwork,
    set: &NodeSet,
    r: Redundancy,
) -> Result<Option<ReachWitness>> {
    if set.is_empty() {
        return Err(Error::Input(
            "reachability is defined for non-empty sets".into(),
        ));
    }
    for &i in set {
        net.check(i)?;
    }
    let mut best: Option<ReachWitness> = None;
    for &i in set {
        let outside: Vec<NodeId> = net.in_nbrs[i].difference(set).copied().collect();
        if let Some(condition) = strongest_condition(net, &outside, r) {
            if best.is_none_or(|b| condition < b.condition) {
                best = Some(ReachWitness { node: i, condition });
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteforceVerdict {
    pub robust: bool,
    /// Minimum-cardinality non-reachable set (first in lexicographic order).
    pub counterexample: Option<NodeSet>,
}

/// Exhaustive strong-robustness check with the default cap.
pub fn is_strongly_robust_bruteforce(
    net: &ColoredNetwork,
    sources: &NodeSet,
    r: Redundancy,
) -> Result<BruteforceVerdict> {
    is_strongly_robust_bruteforce_capped(net, sources, r, BRUTEFORCE_CAP)
}

/// Exhaustive strong-robustness check: every non-empty subset of
/// `V \ sources`, by increasing cardinality then lexicographically, must be
/// reachable.
pub fn is_strongly_robust_bruteforce_capped(
    net: &ColoredNetwork,
    sources: &NodeSet,
    r: Redundancy,
    cap: usize,
) -> Result<BruteforceVerdict> {
    let n = net.node_count();
    let cap = cap.min(63);
    if n > cap {
        return Err(Error::TooLarge { size: n, cap });
    }
    for &s in sources {
        net.check(s)?;
    }
    let in_mask: Vec<u64> = net
        .in_nbrs
        .iter()
        .map(|ns| ns.iter().fold(0u64, |m, &v| m | (1 << v)))
        .collect();
    let trusted_mask = net
        .nodes()
        .filter(|&i| net.trusted[i])
        .fold(0u64, |m, v| m | (1 << v));
    let free: Vec<NodeId> = net.nodes().filter(|i| !sources.contains(i)).collect();

    let reachable = |set: u64, members: &[NodeId]| -> bool {
        members.iter().any(|&i| {
            let outside = in_mask[i] & !set;
            outside & trusted_mask != 0
                || has_three_colors(&net.colors, bits(outside))
                || r.met_by(outside.count_ones() as usize)
        })
    };

    for k in 1..=free.len() {
        for combo in free.iter().copied().combinations(k) {
            let set = combo.iter().fold(0u64, |m, &v| m | (1 << v));
            if !reachable(set, &combo) {
                return Ok(BruteforceVerdict {
                    robust: false,
                    counterexample: Some(combo.into_iter().collect()),
                });
            }
        }
    }
    Ok(BruteforceVerdict {
        robust: true,
        counterexample: None,
    })
}

fn bits(mut m: u64) -> impl Iterator<Item = NodeId> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as NodeId;
            m &= m - 1;
            Some(b)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[NodeId]) -> NodeSet {
        v.iter().copied().collect()
    }

    #[test]
    fn in_neighbors_chain_and_complete() {
        let chain = ColoredNetwork::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(chain.in_neighbors(1).unwrap(), &set(&[0]));
        assert!(chain.in_neighbors(0).unwrap().is_empty());
        assert!(matches!(
            chain.in_neighbors(3),
            Err(Error::NodeOutOfRange { node: 3, count: 3 })
        ));

        let k4 = ColoredNetwork::complete(4);
        for i in 0..4 {
            let expected: NodeSet = (0..4).filter(|&v| v != i).collect();
            assert_eq!(k4.in_neighbors(i).unwrap(), &expected);
        }
    }

    #[test]
    fn rejects_self_loops_and_bad_ids() {
        let mut net = ColoredNetwork::new(2);
        assert!(net.add_edge(0, 0).is_err());
        assert!(net.add_edge(0, 2).is_err());
        assert!(net.add_trusted(5).is_err());
    }

    #[test]
    fn trusted_outside_neighbor_is_reported() {
        // star: node 0 hears from 1 (trusted) and 2
        let mut net = ColoredNetwork::from_edges(3, &[(1, 0), (2, 0)]).unwrap();
        net.add_trusted(1).unwrap();
        let w = is_reachable_set(&net, &set(&[0]), Redundancy::Finite(5))
            .unwrap()
            .unwrap();
        assert_eq!(
            w,
            ReachWitness {
                node: 0,
                condition: Condition::Trust
            }
        );
    }

    #[test]
    fn diversity_wins_tie_over_redundancy() {
        let mut net = ColoredNetwork::from_edges(4, &[(1, 0), (2, 0), (3, 0)]).unwrap();
        net.set_color(2, 1).unwrap();
        net.set_color(3, 2).unwrap();
        let w = is_reachable_set(&net, &set(&[0]), Redundancy::Finite(3))
            .unwrap()
            .unwrap();
        assert_eq!(w.condition, Condition::Diversity);
    }

    #[test]
    fn two_same_colored_neighbors_are_not_enough() {
        let net = ColoredNetwork::from_edges(3, &[(1, 0), (2, 0)]).unwrap();
        assert_eq!(
            is_reachable_set(&net, &set(&[0]), Redundancy::Finite(3)).unwrap(),
            None
        );
    }

    #[test]
    fn infinite_redundancy_ignores_neighbor_count() {
        let edges: Vec<_> = (1..=5).map(|v| (v, 0)).collect();
        let net = ColoredNetwork::from_edges(6, &edges).unwrap();
        assert_eq!(
            is_reachable_set(&net, &set(&[0]), Redundancy::Infinite).unwrap(),
            None
        );
        assert!(is_reachable_set(&net, &set(&[0]), Redundancy::Finite(5))
            .unwrap()
            .is_some());
    }

    #[test]
    fn empty_set_is_an_input_error() {
        let net = ColoredNetwork::new(2);
        assert!(matches!(
            is_reachable_set(&net, &NodeSet::new(), Redundancy::Finite(1)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn bruteforce_all_sources_is_vacuous() {
        let net = ColoredNetwork::new(4);
        let v = is_strongly_robust_bruteforce(&net, &set(&[0, 1, 2, 3]), Redundancy::Finite(3))
            .unwrap();
        assert!(v.robust);
    }

    #[test]
    fn bruteforce_complete_graph_single_source() {
        // Oracle: in K5 a member of C hears from exactly 5 - |C| nodes outside
        // C, so C is reachable iff 5 - |C| >= r. Walk all 15 subsets of the
        // four non-sources.
        let net = ColoredNetwork::complete(5);
        for r in 1..=4 {
            let expected = (1u32..16).all(|mask| 5 - mask.count_ones() as usize >= r);
            let v = is_strongly_robust_bruteforce(&net, &set(&[0]), Redundancy::Finite(r)).unwrap();
            assert_eq!(v.robust, expected, "r = {r}");
        }
        let v = is_strongly_robust_bruteforce(&net, &set(&[0]), Redundancy::Finite(4)).unwrap();
        assert_eq!(v.counterexample, Some(set(&[1, 2])));
        let v = is_strongly_robust_bruteforce(&net, &set(&[0]), Redundancy::Finite(1)).unwrap();
        assert!(v.robust);
    }

    #[test]
    fn bruteforce_isolated_counterexample() {
        let net = ColoredNetwork::new(2);
        let v = is_strongly_robust_bruteforce(&net, &set(&[0]), Redundancy::Finite(1)).unwrap();
        assert!(!v.robust);
        assert_eq!(v.counterexample, Some(set(&[1])));
    }

    #[test]
    fn bruteforce_cap() {
        let net = ColoredNetwork::new(8);
        assert!(matches!(
            is_strongly_robust_bruteforce_capped(&net, &set(&[0]), Redundancy::Finite(1), 5),
            Err(Error::TooLarge { size: 8, cap: 5 })
        ));
    }

    #[test]
    fn text_format_round_trip() {
        let text = "N 4\n# comment\nE 0 1\nU 1 2\nC 0 3\nC 2 1\nT 3\n";
        let net = ColoredNetwork::parse(text, "t").unwrap();
        assert_eq!(net.edge_count(), 3);
        assert_eq!(net.color(0), 3);
        assert_eq!(net.color(1), 0);
        assert!(net.is_trusted(3));
        let again = ColoredNetwork::parse(&net.to_text(), "t2").unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn parser_rejects_duplicates_and_unknown_nodes() {
        assert!(ColoredNetwork::parse("N 2\nC 0 1\nC 0 2\n", "t").is_err());
        assert!(ColoredNetwork::parse("N 2\nE 0 7\n", "t").is_err());
        assert!(ColoredNetwork::parse("N 2\nT 2\n", "t").is_err());
        assert!(ColoredNetwork::parse("E 0 1\n", "t").is_err());
        assert!(ColoredNetwork::parse("N 2\nX 1\n", "t").is_err());
        let err = ColoredNetwork::parse("N 2\nE 0 x\n", "g.txt").unwrap_err();
        assert!(err.to_string().starts_with("g.txt:2:"));
    }
}
