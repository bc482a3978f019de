//! Local-filtering resilient estimation: the per-mode filtering rules and a
//! synchronous-round simulator driven by MEDAG informant lists.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::adversary::{validate_adversary, AdversaryModel, AdversarySpec};
use crate::error::{Error, Result};
use crate::graph::{has_three_colors, Color, ColoredNetwork, NodeId, NodeSet};
use crate::plant::{LocalObserver, ModeIndex, SystemModel};
use crate::robustness::Medag;

/// Errors above this abort a run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Tolerance of the trusted-rule error recursion check, relative to the
/// magnitude of the true mode value.
const RECURSION_TOL: f64 = 1e-9;

/// Result of one filtering rule: `λ` times the average of the retained
/// estimates, plus the retained senders in sorted order.
#[derive(Clone, Debug, PartialEq)]
pub struct Filtered {
    pub value: f64,
    pub retained: Vec<NodeId>,
}

fn average(estimates: &BTreeMap<NodeId, f64>, retained: &[NodeId]) -> f64 {
    retained.iter().map(|l| estimates[l]).sum::<f64>() / retained.len() as f64
}

/// Senders sorted by estimate descending, ties by node id ascending.
fn sorted_desc(estimates: &BTreeMap<NodeId, f64>) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = estimates.keys().copied().collect();
    order.sort_by(|a, b| estimates[b].total_cmp(&estimates[a]).then(a.cmp(b)));
    order
}

/// Average over the trusted senders only.
pub fn lfre_step_trusted(
    estimates: &BTreeMap<NodeId, f64>,
    trusted: &NodeSet,
    lambda: f64,
) -> Result<Filtered> {
    if trusted.is_empty() {
        return Err(Error::Contract(
            "trusted rule needs a trusted sender".into(),
        ));
    }
    if let Some(missing) = trusted.iter().find(|l| !estimates.contains_key(l)) {
        return Err(Error::Protocol(format!(
            "no estimate from trusted neighbor {missing}"
        )));
    }
    let retained: Vec<NodeId> = trusted.iter().copied().collect();
    Ok(Filtered {
        value: lambda * average(estimates, &retained),
        retained,
    })
}

/// Color-trimmed average. In the descending order, everything above the
/// first sender whose color differs from the top sender's color is dropped,
/// and likewise from the bottom.
pub fn lfre_step_diversity(
    estimates: &BTreeMap<NodeId, f64>,
    colors: &[Color],
    lambda: f64,
) -> Result<Filtered> {
    if !has_three_colors(colors, estimates.keys().copied()) {
        return Err(Error::Contract(
            "diversity rule needs three sender colors".into(),
        ));
    }
    let order = sorted_desc(estimates);
    let top = colors[order[0]];
    let bottom = colors[order[order.len() - 1]];
    let m = order.iter().position(|&l| colors[l] != top);
    let big_m = order.iter().rposition(|&l| colors[l] != bottom);
    let (m, big_m) = match (m, big_m) {
        (Some(m), Some(big_m)) if m <= big_m => (m, big_m),
        _ => return Err(Error::Contract("diversity rule retained nothing".into())),
    };
    let retained = order[m..=big_m].to_vec();
    Ok(Filtered {
        value: lambda * average(estimates, &retained),
        retained,
    })
}

/// Drop the `f` largest and `f` smallest estimates and average the rest.
pub fn lfre_step_trimmed(
    estimates: &BTreeMap<NodeId, f64>,
    f: usize,
    lambda: f64,
) -> Result<Filtered> {
    if estimates.len() < 2 * f + 1 {
        return Err(Error::Protocol(format!(
            "trimmed rule with f = {f} needs {} senders, got {}",
            2 * f + 1,
            estimates.len()
        )));
    }
    let order = sorted_desc(estimates);
    let retained = order[f..order.len() - f].to_vec();
    Ok(Filtered {
        value: lambda * average(estimates, &retained),
        retained,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WeightScheme {
    #[default]
    Uniform,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TieBreak {
    #[default]
    ByNodeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LfreConfig {
    pub model: AdversaryModel,
    #[serde(default)]
    pub weights: WeightScheme,
    #[serde(default)]
    pub tiebreak: TieBreak,
}

impl LfreConfig {
    pub fn new(model: AdversaryModel) -> Self {
        LfreConfig {
            model,
            weights: WeightScheme::Uniform,
            tiebreak: TieBreak::ByNodeId,
        }
    }
}

/// How a node produced its estimate of a mode in a given step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Rule {
    /// Initial estimate, step 0.
    Init,
    Observer,
    Trusted,
    Diversity,
    Trimmed,
    /// Plain average, used only by nodes a MEDAG never reached.
    Unfiltered,
    /// No informants at all: the estimate is rolled forward.
    OpenLoop,
}

impl Rule {
    pub fn label(self) -> &'static str {
        match self {
            Rule::Init => "INIT",
            Rule::Observer => "OBSERVER",
            Rule::Trusted => "TRUSTED",
            Rule::Diversity => "DIVERSITY",
            Rule::Trimmed => "TRIMMED",
            Rule::Unfiltered => "UNFILTERED",
            Rule::OpenLoop => "OPEN_LOOP",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Counters kept by the instrumented filtering rules.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SafetyCounters {
    pub diversity_checks: u64,
    pub diversity_violations: u64,
    pub trimmed_checks: u64,
    pub trimmed_violations: u64,
    pub trusted_checks: u64,
    pub trusted_violations: u64,
    pub trusted_max_residual: f64,
}

impl SafetyCounters {
    pub fn violations(&self) -> u64 {
        self.diversity_violations + self.trimmed_violations + self.trusted_violations
    }

    fn merge(&mut self, other: &SafetyCounters) {
        self.diversity_checks += other.diversity_checks;
        self.diversity_violations += other.diversity_violations;
        self.trimmed_checks += other.trimmed_checks;
        self.trimmed_violations += other.trimmed_violations;
        self.trusted_checks += other.trusted_checks;
        self.trusted_violations += other.trusted_violations;
        self.trusted_max_residual = self.trusted_max_residual.max(other.trusted_max_residual);
    }
}

/// True state and all node estimates at step `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub k: usize,
    pub x: Vec<f64>,
    /// `estimates[i][j]`; entries of adversarial nodes are unused.
    pub estimates: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub node: NodeId,
    pub mode: ModeIndex,
    pub estimate: f64,
    pub error: f64,
    pub rule: Rule,
}

/// One step of a trace, regular nodes only.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub x: Vec<f64>,
    pub entries: Vec<TraceEntry>,
    pub max_error: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimTrace {
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub const CSV_HEADER: &'static str = "k,node,mode,estimate,error,rule";

    /// CSV with 17 significant digits per float.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            for e in &row.entries {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.16e},{:.16e},{}",
                    row.k, e.node, e.mode, e.estimate, e.error, e.rule
                );
            }
        }
        out
    }

    pub fn max_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.max_error).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Converged,
    Diverged,
    Maxsteps,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "CONVERGED",
            Verdict::Diverged => "DIVERGED",
            Verdict::Maxsteps => "MAXSTEPS",
        })
    }
}

/// When [`Simulator::run`] stops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub horizon: usize,
    pub threshold: f64,
    /// Consecutive steps below `threshold` required before declaring
    /// convergence.
    pub dwell: usize,
}

impl StopRule {
    pub fn new(horizon: usize, threshold: f64) -> Self {
        StopRule {
            horizon,
            threshold,
            dwell: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutcome {
    pub verdict: Verdict,
    /// First step of the final run of steps below threshold.
    pub steps_to_threshold: Option<usize>,
    pub final_max_error: f64,
    pub steps: usize,
    pub trace: SimTrace,
    pub safety: SafetyCounters,
}

/// Per-node, per-mode update plan fixed before the run.
#[derive(Clone, Debug)]
enum Plan {
    Observer,
    /// Filter over these informants; `fallback` when the MEDAG never reached
    /// the node.
    Filter {
        senders: NodeSet,
        fallback: bool,
    },
}

/// Runs the estimation protocol on one network, plant and adversary.
#[derive(Debug)]
pub struct Simulator<'a> {
    net: &'a ColoredNetwork,
    model: &'a SystemModel,
    adversary: &'a AdversarySpec,
    config: LfreConfig,
    observers: Vec<Option<LocalObserver>>,
    plans: Vec<Vec<Plan>>,
}

impl<'a> Simulator<'a> {
    /// `medags` must hold one MEDAG per mode that some node cannot detect.
    pub fn new(
        net: &'a ColoredNetwork,
        model: &'a SystemModel,
        medags: &[Medag],
        adversary: &'a AdversarySpec,
        config: LfreConfig,
    ) -> Result<Self> {
        if net.node_count() != model.node_count() {
            return Err(Error::Dimension {
                expected: net.node_count(),
                actual: model.node_count(),
            });
        }
        if let Some(v) = validate_adversary(net, adversary) {
            log::warn!("adversary outside the assumed model: {v}");
        }
        let by_mode: BTreeMap<ModeIndex, &Medag> = medags.iter().map(|m| (m.mode, m)).collect();
        let n = net.node_count();
        let mut observers = Vec::with_capacity(n);
        let mut plans = Vec::with_capacity(n);
        for i in net.nodes() {
            if adversary.is_adversarial(i) {
                observers.push(None);
                plans.push(Vec::new());
                continue;
            }
            let obs = LocalObserver::new(model, i)?;
            let mut row = Vec::with_capacity(model.dim());
            for j in 0..model.dim() {
                if obs.modes().contains(&j) {
                    row.push(Plan::Observer);
                    continue;
                }
                let medag = by_mode
                    .get(&j)
                    .ok_or_else(|| Error::Config(format!("no MEDAG supplied for mode {j}")))?;
                if medag.node_count() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        actual: medag.node_count(),
                    });
                }
                row.push(match medag.activation[i] {
                    Some(_) => Plan::Filter {
                        senders: medag.neighbors[i].clone(),
                        fallback: false,
                    },
                    None => Plan::Filter {
                        senders: net.nbrs(i).clone(),
                        fallback: true,
                    },
                });
            }
            observers.push(Some(obs));
            plans.push(row);
        }
        Ok(Simulator {
            net,
            model,
            adversary,
            config,
            observers,
            plans,
        })
    }

    pub fn config(&self) -> LfreConfig {
        self.config
    }

    /// Step-0 state: the plant's initial condition and the given uniform
    /// initial estimate.
    pub fn initial_state(&self, estimate: f64) -> SimState {
        SimState {
            k: 0,
            x: self.model.initial_state.clone(),
            estimates: vec![vec![estimate; self.model.dim()]; self.net.node_count()],
        }
    }

    fn row(&self, state: &SimState, rules: &[Vec<Rule>]) -> TraceRow {
        let mut entries = Vec::new();
        let mut max_error = 0.0f64;
        for i in self.net.nodes() {
            if self.adversary.is_adversarial(i) {
                continue;
            }
            for (j, (&estimate, &truth)) in state.estimates[i].iter().zip(&state.x).enumerate() {
                let error = (estimate - truth).abs();
                max_error = if error.is_nan() {
                    f64::INFINITY
                } else {
                    max_error.max(error)
                };
                entries.push(TraceEntry {
                    node: i,
                    mode: j,
                    estimate,
                    error,
                    rule: rules[i][j],
                });
            }
        }
        TraceRow {
            k: state.k,
            x: state.x.clone(),
            entries,
            max_error,
        }
    }

    pub fn initial_row(&self, state: &SimState) -> TraceRow {
        let rules = vec![vec![Rule::Init; self.model.dim()]; self.net.node_count()];
        self.row(state, &rules)
    }

    /// What `sender` delivers to `recipient` for mode `j` in this round.
    fn message(&self, state: &SimState, sender: NodeId, recipient: NodeId, j: ModeIndex) -> f64 {
        if self.adversary.is_adversarial(sender) {
            self.adversary
                .strategy
                .transmit(state.k, sender, recipient, j, state.x[j])
                .unwrap_or(0.0)
        } else {
            state.estimates[sender][j]
        }
    }

    /// One synchronous round from `state`; adds to `safety`.
    pub fn lfre_round(
        &self,
        state: &SimState,
        safety: &mut SafetyCounters,
    ) -> Result<(SimState, TraceRow)> {
        let dim = self.model.dim();
        let n = self.net.node_count();
        let mut next = state.estimates.clone();
        let mut rules = vec![vec![Rule::Observer; dim]; n];
        let mut local = SafetyCounters::default();
        for i in self.net.nodes() {
            let Some(obs) = &self.observers[i] else {
                continue;
            };
            let y = self.model.measure(i, &state.x);
            obs.step_in_place(self.model, &mut next[i], &y)?;
            for (j, plan) in self.plans[i].iter().enumerate() {
                let Plan::Filter { senders, fallback } = plan else {
                    continue;
                };
                let (value, rule) = self.filter(state, i, j, senders, *fallback, &mut local)?;
                next[i][j] = value;
                rules[i][j] = rule;
            }
        }
        safety.merge(&local);
        let next_state = SimState {
            k: state.k + 1,
            x: self.model.step_plant(&state.x)?,
            estimates: next,
        };
        let row = self.row(&next_state, &rules);
        Ok((next_state, row))
    }

    fn filter(
        &self,
        state: &SimState,
        i: NodeId,
        j: ModeIndex,
        senders: &NodeSet,
        fallback: bool,
        safety: &mut SafetyCounters,
    ) -> Result<(f64, Rule)> {
        let lambda = self.model.eigenvalues[j];
        if senders.is_empty() {
            return Ok((lambda * state.estimates[i][j], Rule::OpenLoop));
        }
        let received: BTreeMap<NodeId, f64> = senders
            .iter()
            .map(|&l| (l, self.message(state, l, i, j)))
            .collect();
        let trusted: NodeSet = senders
            .iter()
            .copied()
            .filter(|&l| self.net.is_trusted(l))
            .collect();
        let regular: Vec<f64> = senders
            .iter()
            .filter(|&&l| !self.adversary.is_adversarial(l))
            .map(|l| received[l])
            .collect();

        if !trusted.is_empty() {
            let out = lfre_step_trusted(&received, &trusted, lambda)?;
            let truth = state.x[j];
            let lhs = out.value - lambda * truth;
            let rhs = lambda
                * out
                    .retained
                    .iter()
                    .map(|l| received[l] - truth)
                    .sum::<f64>()
                / out.retained.len() as f64;
            let residual = (lhs - rhs).abs();
            safety.trusted_checks += 1;
            safety.trusted_max_residual = safety.trusted_max_residual.max(residual);
            if residual > RECURSION_TOL * (1.0 + (lambda * truth).abs()) {
                safety.trusted_violations += 1;
            }
            return Ok((out.value, Rule::Trusted));
        }
        if has_three_colors(self.net.colors(), senders.iter().copied()) {
            let out = lfre_step_diversity(&received, self.net.colors(), lambda)?;
            safety.diversity_checks += 1;
            if !contained(&out.retained, &received, &regular) {
                safety.diversity_violations += 1;
            }
            return Ok((out.value, Rule::Diversity));
        }
        match self.config.model {
            AdversaryModel::FLocal(f) if received.len() > 2 * f => {
                let out = lfre_step_trimmed(&received, f, lambda)?;
                safety.trimmed_checks += 1;
                if !contained(&out.retained, &received, &regular) {
                    safety.trimmed_violations += 1;
                }
                Ok((out.value, Rule::Trimmed))
            }
            _ if fallback => {
                let all: Vec<NodeId> = received.keys().copied().collect();
                Ok((lambda * average(&received, &all), Rule::Unfiltered))
            }
            AdversaryModel::FLocal(f) => Err(Error::Protocol(format!(
                "node {i} has {} informants for mode {j}, trimming with f = {f} needs {}",
                received.len(),
                2 * f + 1
            ))),
            AdversaryModel::MonoChromatic => Err(Error::Config(format!(
                "node {i} reached the trimmed rule for mode {j} under the mono-chromatic model"
            ))),
        }
    }

    /// Run from the initial estimate until `stop` says so.
    pub fn run(&self, initial_estimate: f64, stop: StopRule) -> Result<SimOutcome> {
        let mut state = self.initial_state(initial_estimate);
        let mut safety = SafetyCounters::default();
        let first = self.initial_row(&state);
        let mut below_since = (first.max_error < stop.threshold).then_some(0);
        let mut trace = SimTrace { rows: vec![first] };
        let mut verdict = Verdict::Maxsteps;
        while state.k < stop.horizon {
            let (next, row) = self.lfre_round(&state, &mut safety)?;
            state = next;
            let err = row.max_error;
            trace.rows.push(row);
            if err.is_nan() || err > DIVERGENCE_LIMIT {
                verdict = Verdict::Diverged;
                below_since = None;
                break;
            }
            if err < stop.threshold {
                let since = *below_since.get_or_insert(state.k);
                if state.k - since + 1 >= stop.dwell {
                    verdict = Verdict::Converged;
                    break;
                }
            } else {
                below_since = None;
            }
        }
        let final_max_error = trace.rows.last().map_or(0.0, |r| r.max_error);
        if verdict == Verdict::Maxsteps && final_max_error < stop.threshold {
            verdict = Verdict::Converged;
        }
        Ok(SimOutcome {
            verdict,
            steps_to_threshold: below_since,
            final_max_error,
            steps: state.k,
            trace,
            safety,
        })
    }
}

/// Every retained value lies within the range of the regular senders' values.
fn contained(retained: &[NodeId], received: &BTreeMap<NodeId, f64>, regular: &[f64]) -> bool {
    if regular.is_empty() {
        return false;
    }
    let lo = regular.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = regular.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    retained.iter().all(|l| (lo..=hi).contains(&received[l]))
}
