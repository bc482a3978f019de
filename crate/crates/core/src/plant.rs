//! Diagonal LTI plant, per-node linear measurements, source-node sets and
//! local deadbeat observers.
//!
//! The plant is `x[k+1] = diag(λ) x[k]` with real, pairwise distinct
//! eigenvalues; node `i` measures `y_i[k] = C_i x[k]`. Because the system
//! matrix is diagonal with distinct entries, `[A - λ_j I; C_i]` has full rank
//! exactly when column `j` of `C_i` is nonzero, which is the test
//! [`SystemModel::source_nodes`] implements.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeSet};

pub type ModeIndex = usize;

/// Rows of a per-node measurement matrix.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub eigenvalues: Vec<f64>,
    /// `measurements[i]` is `C_i`, one row per scalar output of node `i`.
    pub measurements: Vec<Matrix>,
    pub initial_state: Vec<f64>,
}

/// Mode bookkeeping derived from a [`SystemModel`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeIndexSets {
    /// `detectable[i]` = modes node `i` can estimate on its own.
    pub detectable: Vec<BTreeSet<ModeIndex>>,
    /// `sources[j]` = nodes whose measurements detect mode `j`.
    pub sources: Vec<NodeSet>,
    /// All unstable modes.
    pub unstable: Vec<ModeIndex>,
    /// Unstable modes that some node cannot detect locally.
    pub needs_medag: Vec<ModeIndex>,
}

impl ModeIndexSets {
    /// Modes node `i` must obtain from neighbors.
    pub fn undetectable(&self, i: NodeId) -> impl Iterator<Item = ModeIndex> + '_ {
        self.needs_medag
            .iter()
            .copied()
            .filter(move |j| !self.detectable[i].contains(j))
    }
}

impl SystemModel {
    pub fn new(
        eigenvalues: Vec<f64>,
        measurements: Vec<Matrix>,
        initial_state: Vec<f64>,
    ) -> Result<Self> {
        let model = SystemModel {
            eigenvalues,
            measurements,
            initial_state,
        };
        model.validate()?;
        Ok(model)
    }

    /// Check dimensions, distinct eigenvalues and collective detectability.
    pub fn validate(&self) -> Result<()> {
        let n = self.eigenvalues.len();
        if n == 0 {
            return Err(Error::Input("system needs at least one mode".into()));
        }
        if self.measurements.is_empty() {
            return Err(Error::Input("system needs at least one node".into()));
        }
        if self.initial_state.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: self.initial_state.len(),
            });
        }
        let finite = |v: &f64| v.is_finite();
        if !self.eigenvalues.iter().all(finite) || !self.initial_state.iter().all(finite) {
            return Err(Error::Input(
                "non-finite eigenvalue or initial state".into(),
            ));
        }
        for (a, la) in self.eigenvalues.iter().enumerate() {
            for lb in &self.eigenvalues[a + 1..] {
                if la == lb {
                    return Err(Error::Input(format!("repeated eigenvalue {la}")));
                }
            }
        }
        for (i, c) in self.measurements.iter().enumerate() {
            for row in c {
                if row.len() != n {
                    return Err(Error::Input(format!(
                        "node {i}: measurement row has {} columns, expected {n}",
                        row.len()
                    )));
                }
                if !row.iter().all(finite) {
                    return Err(Error::Input(format!(
                        "node {i}: non-finite measurement entry"
                    )));
                }
            }
        }
        for j in 0..n {
            if self.is_unstable(j) && self.nodes().all(|i| !self.column_nonzero(i, j)) {
                return Err(Error::Input(format!(
                    "pair (A, C) not detectable: unstable mode {j} (λ = {}) is measured by no node",
                    self.eigenvalues[j]
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SystemModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn node_count(&self) -> usize {
        self.measurements.len()
    }

    fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.node_count()
    }

    pub fn is_unstable(&self, j: ModeIndex) -> bool {
        self.eigenvalues[j].abs() >= 1.0
    }

    fn column_nonzero(&self, i: NodeId, j: ModeIndex) -> bool {
        self.measurements[i].iter().any(|row| row[j] != 0.0)
    }

    /// One plant step: componentwise `λ_j x_j`.
    pub fn step_plant(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.eigenvalues)
            .map(|(v, l)| l * v)
            .collect())
    }

    /// `y_i = C_i x`.
    pub fn measure(&self, i: NodeId, x: &[f64]) -> Vec<f64> {
        self.measurements[i]
            .iter()
            .map(|row| row.iter().zip(x).map(|(c, v)| c * v).sum())
            .collect()
    }

    /// Nodes `i` with `rank [A - λ_j I; C_i] = n`.
    pub fn source_nodes(&self, j: ModeIndex) -> Result<NodeSet> {
        if j >= self.dim() {
            return Err(Error::Input(format!(
                "mode {j} out of range (system has {} modes)",
                self.dim()
            )));
        }
        Ok(self
            .nodes()
            .filter(|&i| self.column_nonzero(i, j))
            .collect())
    }

    pub fn mode_index_sets(&self) -> ModeIndexSets {
        let n = self.dim();
        let sources: Vec<NodeSet> = (0..n)
            .map(|j| self.source_nodes(j).expect("mode in range"))
            .collect();
        let unstable: Vec<ModeIndex> = (0..n).filter(|&j| self.is_unstable(j)).collect();
        let needs_medag = unstable
            .iter()
            .copied()
            .filter(|&j| sources[j].len() < self.node_count())
            .collect();
        let detectable = self
            .nodes()
            .map(|i| {
                (0..n)
                    .filter(|&j| !self.is_unstable(j) || sources[j].contains(&i))
                    .collect()
            })
            .collect();
        ModeIndexSets {
            detectable,
            sources,
            unstable,
            needs_medag,
        }
    }

    /// Append `count` nodes measuring exactly what `template` measures.
    pub fn with_cloned_nodes(&self, template: NodeId, count: usize) -> Result<Self> {
        let c = self
            .measurements
            .get(template)
            .ok_or_else(|| Error::Input(format!("no node {template} in system model")))?
            .clone();
        let mut model = self.clone();
        model.measurements.extend(std::iter::repeat_n(c, count));
        Ok(model)
    }
}

/// Local observer for the modes a single node can detect.
///
/// Modes whose columns in `C_i` are nonzero form an observable subsystem and
/// get a deadbeat Luenberger gain (all error poles at zero, so the error on
/// those modes vanishes after at most `|observed|` steps). Stable modes the
/// node does not measure are rolled forward open loop.
#[derive(Clone, Debug)]
pub struct LocalObserver {
    node: NodeId,
    modes: Vec<ModeIndex>,
    observed: Vec<ModeIndex>,
    lambdas: Vec<f64>,
    /// `gain[a][k]`: contribution of innovation row `k` to observed mode `a`.
    gain: Matrix,
    /// `C_i` restricted to the observed columns.
    c_obs: Matrix,
}

impl LocalObserver {
    pub fn new(model: &SystemModel, node: NodeId) -> Result<Self> {
        if node >= model.node_count() {
            return Err(Error::NodeOutOfRange {
                node,
                count: model.node_count(),
            });
        }
        let c = &model.measurements[node];
        let observed: Vec<ModeIndex> = (0..model.dim())
            .filter(|&j| model.column_nonzero(node, j))
            .collect();
        let modes: Vec<ModeIndex> = (0..model.dim())
            .filter(|&j| !model.is_unstable(j) || model.column_nonzero(node, j))
            .collect();
        let c_obs: Matrix = c
            .iter()
            .map(|row| observed.iter().map(|&j| row[j]).collect())
            .collect();
        let lambdas: Vec<f64> = observed.iter().map(|&j| model.eigenvalues[j]).collect();
        let gain = deadbeat_gain(&lambdas, &c_obs);
        Ok(LocalObserver {
            node,
            modes,
            observed,
            lambdas,
            gain,
            c_obs,
        })
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    /// The node's detectable modes, ascending.
    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    /// Modes corrected from the node's own measurement.
    pub fn observed_modes(&self) -> &[ModeIndex] {
        &self.observed
    }

    pub fn gain(&self) -> &Matrix {
        &self.gain
    }

    /// Advance the detectable entries of a full-length estimate in place.
    pub fn step_in_place(
        &self,
        model: &SystemModel,
        estimate: &mut [f64],
        y: &[f64],
    ) -> Result<()> {
        if estimate.len() != model.dim() {
            return Err(Error::Dimension {
                expected: model.dim(),
                actual: estimate.len(),
            });
        }
        if y.len() != self.c_obs.len() {
            return Err(Error::Dimension {
                expected: self.c_obs.len(),
                actual: y.len(),
            });
        }
        let innovation: Vec<f64> = self
            .c_obs
            .iter()
            .zip(y)
            .map(|(row, yk)| {
                yk - row
                    .iter()
                    .zip(&self.observed)
                    .map(|(c, &j)| c * estimate[j])
                    .sum::<f64>()
            })
            .collect();
        let corrected: Vec<f64> = self
            .observed
            .iter()
            .enumerate()
            .map(|(a, &j)| {
                let correction: f64 = self.gain[a]
                    .iter()
                    .zip(&innovation)
                    .map(|(l, v)| l * v)
                    .sum();
                self.lambdas[a] * estimate[j] + correction
            })
            .collect();
        for &j in &self.modes {
            if !self.observed.contains(&j) {
                estimate[j] *= model.eigenvalues[j];
            }
        }
        for (a, &j) in self.observed.iter().enumerate() {
            estimate[j] = corrected[a];
        }
        Ok(())
    }
}

/// One observer step on exactly the detectable modes of `node`.
///
/// `estimate[a]` is the estimate of mode `modes[a]`; `modes` must list the
/// node's detectable set in ascending order.
pub fn local_observer_step(
    model: &SystemModel,
    node: NodeId,
    modes: &[ModeIndex],
    estimate: &[f64],
    y: &[f64],
) -> Result<Vec<f64>> {
    let obs = LocalObserver::new(model, node)?;
    if let Some(&bad) = modes.iter().find(|j| !obs.modes.contains(j)) {
        return Err(Error::Contract(format!(
            "mode {bad} is not detectable by node {node}"
        )));
    }
    if modes != obs.modes.as_slice() {
        return Err(Error::Contract(format!(
            "estimate must cover exactly the detectable modes {:?} of node {node}",
            obs.modes
        )));
    }
    if estimate.len() != modes.len() {
        return Err(Error::Dimension {
            expected: modes.len(),
            actual: estimate.len(),
        });
    }
    let mut full = vec![0.0; model.dim()];
    for (&j, &v) in modes.iter().zip(estimate) {
        full[j] = v;
    }
    obs.step_in_place(model, &mut full, y)?;
    Ok(modes.iter().map(|&j| full[j]).collect())
}

/// Deadbeat gain for `(diag(lambdas), c)` with every column of `c` nonzero.
///
/// Outputs are first blended into one scalar channel `w^T y` whose weights
/// keep every mode visible. For a single output row `h` with all `h_j != 0`,
/// the characteristic polynomial of `diag(λ) - l h` equals `z^d` iff
/// `l_j h_j = λ_j^d / Π_{k≠j} (λ_j - λ_k)` (residues of `z^d / Π (z - λ_k)`).
fn deadbeat_gain(lambdas: &[f64], c: &Matrix) -> Matrix {
    let d = lambdas.len();
    let rows = c.len();
    if d == 0 {
        return Vec::new();
    }
    let w = blend_weights(c);
    let h: Vec<f64> = (0..d)
        .map(|a| (0..rows).map(|k| w[k] * c[k][a]).sum())
        .collect();
    (0..d)
        .map(|a| {
            let denom: f64 = (0..d)
                .filter(|&b| b != a)
                .map(|b| lambdas[a] - lambdas[b])
                .product();
            let l = lambdas[a].powi(d as i32) / (h[a] * denom);
            w.iter().map(|wk| l * wk).collect()
        })
        .collect()
}

/// Row weights `w` such that every column of `w^T c` is clearly nonzero.
fn blend_weights(c: &Matrix) -> Vec<f64> {
    let rows = c.len();
    let cols = c.first().map_or(0, Vec::len);
    let score = |w: &[f64]| -> f64 {
        let h: Vec<f64> = (0..cols)
            .map(|a| (0..rows).map(|k| w[k] * c[k][a]).sum::<f64>().abs())
            .collect();
        let max = h.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            0.0
        } else {
            h.iter().cloned().fold(f64::INFINITY, f64::min) / max
        }
    };
    let mut candidates: Vec<Vec<f64>> = (0..rows)
        .map(|k| (0..rows).map(|m| if m == k { 1.0 } else { 0.0 }).collect())
        .collect();
    candidates.push(vec![1.0; rows]);
    candidates.push((0..rows).map(|k| 1.0 / (k as f64 + 1.0)).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(0x6f62_7365_7276);
    candidates.extend((0..16).map(|_| (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect()));

    let mut best = candidates[0].clone();
    let mut best_score = score(&best);
    for w in candidates.into_iter().skip(1) {
        let s = score(&w);
        if s > best_score {
            best_score = s;
            best = w;
        }
    }
    best
}
