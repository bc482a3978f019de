//! Network design: choosing trusted nodes and color allocations, exact
//! oracles for both decision problems, and the set-cover reductions that
//! generate hard instances of them.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::graph::{Color, ColoredNetwork, NodeId, NodeSet, Redundancy};
use crate::plant::SystemModel;
use crate::robustness::is_strongly_robust_with;

/// Largest network [`tsra_bruteforce`] and [`min_trusted_set`] will search.
pub const TSRA_CAP: usize = 16;
/// Largest network [`csra_bruteforce`] will search.
pub const CSRA_CAP: usize = 12;

/// Eigenvalue of the scalar plant in reduction-generated instances.
pub const REDUCTION_EIGENVALUE: f64 = 2.0;

/// A universe `{1..=p}`, a family of subsets, and an optional budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetCoverInstance {
    pub universe: usize,
    pub subsets: Vec<BTreeSet<usize>>,
    pub budget: Option<usize>,
}

impl SetCoverInstance {
    pub fn new(
        universe: usize,
        subsets: Vec<BTreeSet<usize>>,
        budget: Option<usize>,
    ) -> Result<Self> {
        let sc = SetCoverInstance {
            universe,
            subsets,
            budget,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.universe == 0 {
            return Err(Error::Input("universe must be non-empty".into()));
        }
        if self.subsets.is_empty() {
            return Err(Error::Input("at least one subset is required".into()));
        }
        for (j, s) in self.subsets.iter().enumerate() {
            if let Some(&e) = s.iter().find(|&&e| e == 0 || e > self.universe) {
                return Err(Error::Input(format!(
                    "subset {} has element {e} outside 1..={}",
                    j + 1,
                    self.universe
                )));
            }
        }
        if self.budget == Some(0) {
            return Err(Error::Input("budget must be a positive integer".into()));
        }
        Ok(())
    }

    /// Parse `p <int>`, `F <elem>...` lines and an optional `t <int>`.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut universe = None;
        let mut subsets = Vec::new();
        let mut budget = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = lineno + 1;
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap_or_default();
            let nums = parts
                .map(|w| {
                    w.parse::<usize>()
                        .map_err(|_| Error::parse(name, lineno, format!("bad integer {w:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            match (tag, nums.as_slice()) {
                ("p", [p]) if universe.is_none() => universe = Some(*p),
                ("p", [_]) => return Err(Error::parse(name, lineno, "duplicate p line")),
                ("t", [t]) if budget.is_none() => budget = Some(*t),
                ("t", [_]) => return Err(Error::parse(name, lineno, "duplicate t line")),
                ("F", elems) => subsets.push(elems.iter().copied().collect()),
                ("p" | "t", _) => {
                    return Err(Error::parse(
                        name,
                        lineno,
                        format!("{tag} takes one integer"),
                    ))
                }
                _ => {
                    return Err(Error::parse(
                        name,
                        lineno,
                        format!("unknown line tag {tag:?}"),
                    ))
                }
            }
        }
        let universe = universe.ok_or_else(|| Error::parse(name, 0, "missing p line"))?;
        let sc = SetCoverInstance {
            universe,
            subsets,
            budget,
        };
        sc.validate()
            .map_err(|e| Error::parse(name, 0, e.to_string()))?;
        Ok(sc)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("p {}\n", self.universe);
        for s in &self.subsets {
            out.push('F');
            for e in s {
                let _ = write!(out, " {e}");
            }
            out.push('\n');
        }
        if let Some(t) = self.budget {
            let _ = writeln!(out, "t {t}");
        }
        out
    }

    fn masks(&self) -> (u32, Vec<u32>) {
        let full = (1u32 << self.universe) - 1;
        let masks = self
            .subsets
            .iter()
            .map(|s| s.iter().fold(0u32, |m, &e| m | 1 << (e - 1)))
            .collect();
        (full, masks)
    }

    /// Do at most `t` of the subsets cover the universe?
    pub fn set_cover_bruteforce(&self) -> Result<bool> {
        let t = self
            .budget
            .ok_or_else(|| Error::Input("set cover needs a budget".into()))?;
        let (full, masks) = self.masks();
        let m = masks.len();
        Ok((0u32..1 << m).any(|pick| {
            pick.count_ones() as usize <= t
                && (0..m)
                    .filter(|j| pick >> j & 1 == 1)
                    .fold(0, |acc, j| acc | masks[j])
                    == full
        }))
    }

    /// Can the family be split into three pairwise disjoint sub-families
    /// that each cover the universe?
    pub fn three_disjoint_covers_bruteforce(&self) -> bool {
        let (full, masks) = self.masks();
        // each subset goes to cover 0, 1, 2, or none (3)
        let m = masks.len() as u32;
        (0..4u32.pow(m)).any(|code| {
            let mut cover = [0u32; 3];
            let mut c = code;
            for mask in &masks {
                let slot = (c % 4) as usize;
                c /= 4;
                if slot < 3 {
                    cover[slot] |= mask;
                }
            }
            cover.iter().all(|&u| u == full)
        })
    }
}

/// What a design instance asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Budget {
    /// Exactly this many trusted nodes.
    Trusted(usize),
    /// At most this many colors, no trusted nodes.
    Colors(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignProblemInstance {
    pub network: ColoredNetwork,
    pub system: SystemModel,
    pub r: usize,
    pub budget: Budget,
    /// Set when the instance is known to be a "no" without search.
    pub trivial_no: bool,
}

impl DesignProblemInstance {
    /// Source sets of the modes that need a MEDAG.
    pub fn source_sets(&self) -> Vec<NodeSet> {
        let sets = self.system.mode_index_sets();
        sets.needs_medag
            .iter()
            .map(|&j| sets.sources[j].clone())
            .collect()
    }

    pub fn budget_text(&self) -> String {
        let mut out = format!("r {}\n", self.r);
        match self.budget {
            Budget::Trusted(t) => {
                let _ = writeln!(out, "t {t}");
            }
            Budget::Colors(q) => {
                let _ = writeln!(out, "q {q}");
            }
        }
        if self.trivial_no {
            out.push_str("trivial_no\n");
        }
        out
    }

    /// Write `graph.txt`, `model.json` and `budget.txt` into `dir`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, body: String| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(path, e))
        };
        write("graph.txt", self.network.to_text())?;
        write("model.json", self.system.to_json())?;
        write("budget.txt", self.budget_text())
    }

    pub fn read_from_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let network = ColoredNetwork::from_path(dir.join("graph.txt"))?;
        let system = SystemModel::from_path(dir.join("model.json"))?;
        let path = dir.join("budget.txt");
        let name = path.display().to_string();
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let (mut r, mut budget, mut trivial_no) = (None, None, false);
        for (lineno, line) in text.lines().enumerate() {
            let words: Vec<&str> = line.split_whitespace().collect();
            let int = |w: &str| {
                w.parse::<usize>()
                    .map_err(|_| Error::parse(&name, lineno + 1, format!("bad integer {w:?}")))
            };
            match words.as_slice() {
                [] => {}
                ["r", v] => r = Some(int(v)?),
                ["t", v] => budget = Some(Budget::Trusted(int(v)?)),
                ["q", v] => budget = Some(Budget::Colors(int(v)?)),
                ["trivial_no"] => trivial_no = true,
                _ => {
                    return Err(Error::parse(
                        &name,
                        lineno + 1,
                        format!("unrecognized line {line:?}"),
                    ))
                }
            }
        }
        let r = r.ok_or_else(|| Error::parse(&name, 0, "missing r line"))?;
        if r == 0 {
            return Err(Error::parse(&name, 0, "r must be at least 1"));
        }
        let budget = budget.ok_or_else(|| Error::parse(&name, 0, "missing t or q line"))?;
        if network.node_count() != system.node_count() {
            return Err(Error::Dimension {
                expected: network.node_count(),
                actual: system.node_count(),
            });
        }
        Ok(DesignProblemInstance {
            network,
            system,
            r,
            budget,
            trivial_no,
        })
    }
}

fn robust_for_all(net: &ColoredNetwork, source_sets: &[NodeSet], r: usize) -> bool {
    source_sets
        .iter()
        .all(|s| is_strongly_robust_with(net, s, Redundancy::Finite(r)))
}

/// Color-blind bootstrap percolation: an inactive node joins once it has `r`
/// active in-neighbors or an active trusted in-neighbor. Returns how many
/// nodes joined.
fn percolate(net: &ColoredNetwork, active: &mut [bool], trusted: &[bool], r: usize) -> usize {
    let mut joined = 0;
    loop {
        let fired: Vec<NodeId> = net
            .nodes()
            .filter(|&i| !active[i])
            .filter(|&i| {
                let nbrs = net.nbrs(i);
                nbrs.iter().any(|&l| active[l] && trusted[l])
                    || nbrs.iter().filter(|&&l| active[l]).count() >= r
            })
            .collect();
        if fired.is_empty() {
            return joined;
        }
        joined += fired.len();
        for i in fired {
            active[i] = true;
        }
    }
}

/// Greedy trusted-node selection: per mode, repeatedly trust the active node
/// whose trust activates the most further nodes (lowest id on ties), until
/// percolation reaches every node. Returns the union of the chosen nodes
/// over all modes; trusted nodes already in `net` count as trusted
/// throughout and are not part of the result.
pub fn greedy_trusted_selection(
    net: &ColoredNetwork,
    source_sets: &[NodeSet],
    r: usize,
) -> Result<NodeSet> {
    if r == 0 {
        return Err(Error::Input("r must be at least 1".into()));
    }
    let n = net.node_count();
    let mut chosen = NodeSet::new();
    for sources in source_sets {
        if let Some(&s) = sources.iter().find(|&&s| s >= n) {
            return Err(Error::NodeOutOfRange { node: s, count: n });
        }
        let reach = net.reachable_from(sources);
        if let Some(witness) = net.nodes().find(|v| !reach.contains(v)) {
            return Err(Error::Unreachable { witness });
        }
        let mut trusted: Vec<bool> = net.nodes().map(|v| net.is_trusted(v)).collect();
        let mut active = vec![false; n];
        for &s in sources {
            active[s] = true;
        }
        percolate(net, &mut active, &trusted, r);
        let mut round = 0;
        while active.iter().any(|a| !a) {
            round += 1;
            let mut best: Option<(usize, NodeId, Vec<bool>)> = None;
            for v in net.nodes().filter(|&v| active[v] && !trusted[v]) {
                let mut trial_trust = trusted.clone();
                trial_trust[v] = true;
                let mut trial = active.clone();
                let gain = percolate(net, &mut trial, &trial_trust, r);
                if best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
                    best = Some((gain, v, trial));
                }
            }
            match best {
                Some((gain, v, trial)) if gain > 0 => {
                    log::debug!("round {round}: trust {v}, activates {gain}");
                    trusted[v] = true;
                    active = trial;
                    chosen.insert(v);
                }
                _ => {
                    let witness = net.nodes().find(|&v| !active[v]).unwrap_or(0);
                    return Err(Error::Unreachable { witness });
                }
            }
        }
    }
    let mut all = net.trusted_set();
    all.extend(chosen.iter().copied());
    if !robust_for_all(&net.with_trusted(&all)?, source_sets, r) {
        return Err(Error::Contract(
            "greedy selection left the network non-robust".into(),
        ));
    }
    Ok(chosen)
}

/// Smallest trusted set (by cardinality, then lexicographically) making the
/// network strongly robust for every source set; `None` if even trusting
/// every node fails.
pub fn min_trusted_set(
    net: &ColoredNetwork,
    source_sets: &[NodeSet],
    r: usize,
) -> Result<Option<NodeSet>> {
    min_trusted_set_upto(net, source_sets, r, net.node_count())
}

fn min_trusted_set_upto(
    net: &ColoredNetwork,
    source_sets: &[NodeSet],
    r: usize,
    max_size: usize,
) -> Result<Option<NodeSet>> {
    let n = net.node_count();
    if n > TSRA_CAP {
        return Err(Error::TooLarge {
            size: n,
            cap: TSRA_CAP,
        });
    }
    for k in 0..=max_size.min(n) {
        for combo in net.nodes().combinations(k) {
            let t: NodeSet = combo.into_iter().collect();
            if robust_for_all(&net.with_trusted(&t)?, source_sets, r) {
                return Ok(Some(t));
            }
        }
    }
    Ok(None)
}

/// Exists a trusted set of exactly `t` nodes making the instance robust?
/// The witness is the minimal set found by increasing-cardinality search,
/// padded with the lowest-id remaining nodes (adding trust never hurts).
pub fn tsra_bruteforce(instance: &DesignProblemInstance) -> Result<(bool, Option<NodeSet>)> {
    let Budget::Trusted(t) = instance.budget else {
        return Err(Error::Input(
            "instance has a color budget, not a trust budget".into(),
        ));
    };
    let net = &instance.network;
    if instance.trivial_no || t > net.node_count() {
        return Ok((false, None));
    }
    let found = min_trusted_set_upto(net, &instance.source_sets(), instance.r, t)?;
    Ok(match found {
        Some(mut w) => {
            for v in net.nodes() {
                if w.len() == t {
                    break;
                }
                w.insert(v);
            }
            (true, Some(w))
        }
        None => (false, None),
    })
}

/// Restricted growth strings of length `n` over at most `q` symbols: every
/// coloring up to renaming of colors, each exactly once.
fn for_each_rgs(n: usize, q: usize, mut visit: impl FnMut(&[Color]) -> bool) -> bool {
    fn rec(
        a: &mut Vec<Color>,
        n: usize,
        q: usize,
        used: usize,
        visit: &mut dyn FnMut(&[Color]) -> bool,
    ) -> bool {
        if a.len() == n {
            return visit(a);
        }
        let top = (used + 1).min(q);
        for c in 0..top {
            a.push(c as Color);
            let found = rec(a, n, q, used.max(c + 1), visit);
            a.pop();
            if found {
                return true;
            }
        }
        false
    }
    if n == 0 {
        return visit(&[]);
    }
    rec(&mut Vec::with_capacity(n), n, q.max(1), 0, &mut visit)
}

/// Exists an allocation of at most `q` colors (no trusted nodes) making the
/// instance robust? Colorings are enumerated up to renaming.
pub fn csra_bruteforce(
    instance: &DesignProblemInstance,
    q: usize,
) -> Result<(bool, Option<Vec<Color>>)> {
    let n = instance.network.node_count();
    if n > CSRA_CAP {
        return Err(Error::TooLarge {
            size: n,
            cap: CSRA_CAP,
        });
    }
    if instance.trivial_no {
        return Ok((false, None));
    }
    let base = instance.network.with_trusted(&NodeSet::new())?;
    let sources = instance.source_sets();
    let mut witness = None;
    let mut err = None;
    let found = for_each_rgs(n, q, |coloring| match base.with_colors(coloring) {
        Ok(net) if robust_for_all(&net, &sources, instance.r) => {
            witness = Some(coloring.to_vec());
            true
        }
        Ok(_) => false,
        Err(e) => {
            err = Some(e);
            true
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok((found, witness))
}

/// Bipartite construction shared by both reductions: element nodes
/// `0..p`, subset nodes `p..p+m`, an edge from subset `j` to every element it
/// contains; subset nodes measure the scalar unstable state and element
/// nodes measure nothing.
fn bipartite(sc: &SetCoverInstance) -> Result<(ColoredNetwork, SystemModel)> {
    sc.validate()?;
    let p = sc.universe;
    let m = sc.subsets.len();
    let mut net = ColoredNetwork::new(p + m);
    for (j, s) in sc.subsets.iter().enumerate() {
        for &e in s {
            net.add_edge(p + j, e - 1)?;
        }
    }
    let measurements = (0..p + m)
        .map(|v| vec![vec![if v >= p { 1.0 } else { 0.0 }]])
        .collect();
    let system = SystemModel::new(vec![REDUCTION_EIGENVALUE], measurements, vec![1.0])?;
    Ok((net, system))
}

/// Set cover with budget `t` to trusted-node allocation with budget `t`.
pub fn reduce_sc_to_tsra(sc: &SetCoverInstance) -> Result<DesignProblemInstance> {
    let t = sc
        .budget
        .ok_or_else(|| Error::Input("set cover instance needs a budget".into()))?;
    let (network, system) = bipartite(sc)?;
    Ok(DesignProblemInstance {
        network,
        system,
        r: sc.subsets.len(),
        budget: Budget::Trusted(t),
        trivial_no: false,
    })
}

/// Three disjoint set covers to 3-color allocation. Families with fewer
/// than three subsets are flagged as trivial "no" instances.
pub fn reduce_3dsc_to_csra(dsc: &SetCoverInstance) -> Result<DesignProblemInstance> {
    let (network, system) = bipartite(dsc)?;
    Ok(DesignProblemInstance {
        network,
        system,
        r: dsc.subsets.len(),
        budget: Budget::Colors(3),
        trivial_no: dsc.subsets.len() < 3,
    })
}
