//! Scenario files, end-to-end runs and parameter sweeps.
//!
//! A scenario is a JSON document naming a network file and a system-model
//! file (paths relative to the scenario file) or a generator shape, plus an
//! adversary, the filtering variant and stopping parameters. A run writes a
//! CSV trace, a JSON summary and the MEDAG export into an output directory.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    enumerate_flocal_sets, spoof_expand, validate_adversary, AdversaryModel, AdversarySpec,
    Strategy,
};
use crate::error::{Error, Result};
use crate::generators::{robust_scenario, substream, ScenarioShape, Stream};
use crate::graph::{Color, ColoredNetwork, NodeId, NodeSet};
use crate::lfre::{LfreConfig, SafetyCounters, SimTrace, Simulator, StopRule, Verdict};
use crate::plant::{ModeIndex, SystemModel};
use crate::robustness::{build_medag, Medag};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "RESEST_OUTPUT_DIR";

/// Cap on the f-local sets considered when picking an adversary automatically.
const AUTO_ENUMERATION_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Members {
    List(Vec<NodeId>),
    /// `"auto"`: a seeded choice among admissible sets.
    Keyword(String),
}

impl Default for Members {
    fn default() -> Self {
        Members::List(Vec::new())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spoof {
    pub target: NodeId,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    #[serde(default)]
    pub members: Members,
    pub strategy: Strategy,
    #[serde(default)]
    pub color: Option<Color>,
    /// Replace the members by `target` and its Sybil replicas.
    #[serde(default)]
    pub spoof: Option<Spoof>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_trace")]
    pub trace: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    #[serde(default = "default_medag")]
    pub medag: String,
}

fn default_trace() -> String {
    "trace.csv".into()
}
fn default_summary() -> String {
    "summary.json".into()
}
fn default_medag() -> String {
    "medag.txt".into()
}
fn default_dwell() -> usize {
    5
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            dir: None,
            trace: default_trace(),
            summary: default_summary(),
            medag: default_medag(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub network: Option<PathBuf>,
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// Generate network and model from the seed instead of reading files.
    #[serde(default)]
    pub generate: Option<ScenarioShape>,
    pub adversary: AdversaryConfig,
    pub lfre: LfreConfig,
    pub horizon: usize,
    pub threshold: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dwell")]
    pub dwell: usize,
    #[serde(default)]
    pub initial_estimate: f64,
    /// Draw the initial plant state from the seed.
    #[serde(default)]
    pub randomize_initial_state: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Read a scenario and return it with the directory its paths are
    /// relative to.
    pub fn from_path(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s = Self::from_json(&text).map_err(|e| match e {
            Error::Json(inner) => {
                Error::parse(&path.display().to_string(), inner.line(), inner.to_string())
            }
            other => other,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((s, base))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::Config("threshold must be positive".into()));
        }
        match (&self.network, &self.model, &self.generate) {
            (Some(_), Some(_), None) | (None, None, Some(_)) => {}
            _ => {
                return Err(Error::Config(
                    "give either both network and model files or a generate block".into(),
                ))
            }
        }
        if let Members::Keyword(k) = &self.adversary.members {
            if k != "auto" {
                return Err(Error::Config(format!("unknown members keyword {k:?}")));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Scenario {
            seed,
            ..self.clone()
        }
    }

    /// Load files, generate what is generated, expand Sybil replicas and
    /// resolve the adversary.
    pub fn prepare(&self, base_dir: &Path) -> Result<Prepared> {
        self.validate()?;
        let (mut net, mut model) = match (&self.network, &self.model, &self.generate) {
            (Some(n), Some(m), _) => (
                ColoredNetwork::from_path(base_dir.join(n))?,
                SystemModel::from_path(base_dir.join(m))?,
            ),
            (_, _, Some(shape)) => robust_scenario(self.seed, 0, shape, self.lfre.model)?,
            _ => unreachable!("validated"),
        };
        if net.node_count() != model.node_count() {
            return Err(Error::Dimension {
                expected: net.node_count(),
                actual: model.node_count(),
            });
        }
        if self.randomize_initial_state {
            let mut rng = substream(self.seed, Stream::InitialState, 0);
            model.initial_state = (0..model.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        }
        let cfg = &self.adversary;
        let adversary = if let Some(spoof) = &cfg.spoof {
            let (grown, mut spec) =
                spoof_expand(&net, spoof.target, spoof.replicas, cfg.strategy.clone())?;
            model = model.with_cloned_nodes(spoof.target, spoof.replicas)?;
            net = grown;
            spec.model = self.lfre.model;
            spec
        } else {
            resolve_members(&net, cfg, self.lfre.model, self.seed)?
        };
        Ok(Prepared {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            seed: self.seed,
            net,
            model,
            adversary,
            config: self.lfre,
            stop: StopRule {
                horizon: self.horizon,
                threshold: self.threshold,
                dwell: self.dwell.max(1),
            },
            initial_estimate: self.initial_estimate,
        })
    }
}

fn resolve_members(
    net: &ColoredNetwork,
    cfg: &AdversaryConfig,
    model: AdversaryModel,
    seed: u64,
) -> Result<AdversarySpec> {
    match &cfg.members {
        Members::List(list) => {
            let members: NodeSet = list.iter().copied().collect();
            let color = cfg
                .color
                .or_else(|| members.first().map(|&v| net.color(v)))
                .unwrap_or(0);
            Ok(AdversarySpec {
                members,
                model,
                strategy: cfg.strategy.clone(),
                color,
            })
        }
        Members::Keyword(_) => {
            let color = match cfg.color {
                Some(c) => c,
                None => largest_untrusted_class(net),
            };
            let members = match model {
                AdversaryModel::FLocal(f) => {
                    let sets: Vec<NodeSet> =
                        enumerate_flocal_sets(net, f, color, AUTO_ENUMERATION_LIMIT)?
                            .into_iter()
                            .filter(|s| !s.is_empty())
                            .collect();
                    let mut rng = substream(seed, Stream::Adversary, 0);
                    sets.choose(&mut rng).cloned().unwrap_or_default()
                }
                AdversaryModel::MonoChromatic => net
                    .color_class(color)
                    .into_iter()
                    .filter(|&v| !net.is_trusted(v))
                    .collect(),
            };
            Ok(AdversarySpec {
                members,
                model,
                strategy: cfg.strategy.clone(),
                color,
            })
        }
    }
}

/// Color with the most untrusted members, lowest color on ties.
fn largest_untrusted_class(net: &ColoredNetwork) -> Color {
    let mut counts = std::collections::BTreeMap::<Color, usize>::new();
    for v in net.nodes().filter(|&v| !net.is_trusted(v)) {
        *counts.entry(net.color(v)).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map_or(0, |(c, _)| c)
}

/// A scenario with everything loaded and resolved.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub name: String,
    pub seed: u64,
    pub net: ColoredNetwork,
    pub model: SystemModel,
    pub adversary: AdversarySpec,
    pub config: LfreConfig,
    pub stop: StopRule,
    pub initial_estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeRobustness {
    pub mode: ModeIndex,
    pub eigenvalue: f64,
    pub sources: NodeSet,
    /// `ROBUST` or `NOT_ROBUST`.
    pub verdict: String,
    pub rounds: Option<usize>,
    /// Nodes the MEDAG never reached; a non-reachable set when non-empty.
    pub inactive: NodeSet,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversaryReport {
    pub members: NodeSet,
    pub color: Color,
    pub strategy: String,
    pub valid: bool,
    pub violation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub seed: u64,
    pub verdict: Verdict,
    pub final_max_error: f64,
    pub steps: usize,
    pub steps_to_threshold: Option<usize>,
    pub threshold: f64,
    pub horizon: usize,
    pub model: AdversaryModel,
    /// All MEDAGs terminated.
    pub robust: bool,
    pub robustness: Vec<ModeRobustness>,
    pub adversary: AdversaryReport,
    pub safety: SafetyCounters,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub summary: Summary,
    pub trace: SimTrace,
    pub medags: Vec<Medag>,
}

impl RunReport {
    pub fn medag_export(&self) -> String {
        self.medags.iter().map(Medag::to_export).collect()
    }
}

/// Build MEDAGs, check the adversary, simulate. Robustness failures are
/// reported in the summary, not raised.
pub fn run_prepared(p: &Prepared) -> Result<RunReport> {
    let sets = p.model.mode_index_sets();
    let mut medags = Vec::new();
    let mut robustness = Vec::new();
    for &j in &sets.needs_medag {
        let medag = build_medag(&p.net, j, &sets.sources[j], p.config.model)?;
        let robust = medag.terminated();
        if !robust {
            log::warn!(
                "{}: not strongly robust for mode {j}; {} nodes never activate",
                p.name,
                medag.inactive().len()
            );
        }
        robustness.push(ModeRobustness {
            mode: j,
            eigenvalue: p.model.eigenvalues[j],
            sources: sets.sources[j].clone(),
            verdict: if robust { "ROBUST" } else { "NOT_ROBUST" }.into(),
            rounds: if robust { medag.last_round() } else { None },
            inactive: medag.inactive(),
        });
        medags.push(medag);
    }
    let violation = validate_adversary(&p.net, &p.adversary);
    if let Some(v) = &violation {
        log::warn!("{}: {v}", p.name);
    }
    let sim = Simulator::new(&p.net, &p.model, &medags, &p.adversary, p.config)?;
    let out = sim.run(p.initial_estimate, p.stop)?;
    let summary = Summary {
        name: p.name.clone(),
        seed: p.seed,
        verdict: out.verdict,
        final_max_error: out.final_max_error,
        steps: out.steps,
        steps_to_threshold: out.steps_to_threshold,
        threshold: p.stop.threshold,
        horizon: p.stop.horizon,
        model: p.config.model,
        robust: robustness.iter().all(|m| m.verdict == "ROBUST"),
        robustness,
        adversary: AdversaryReport {
            members: p.adversary.members.clone(),
            color: p.adversary.color,
            strategy: p.adversary.strategy.label().into(),
            valid: violation.is_none(),
            violation: violation.map(|v| v.to_string()),
        },
        safety: out.safety,
    };
    Ok(RunReport {
        summary,
        trace: out.trace,
        medags,
    })
}

/// Output directory: explicit argument, then the scenario's own setting
/// (relative to its file), then `$RESEST_OUTPUT_DIR`, then `out/` next to
/// the scenario.
pub fn output_dir(explicit: Option<&Path>, scenario: &Scenario, base_dir: &Path) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(d) = &scenario.output.dir {
        return base_dir.join(d);
    }
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => base_dir.join("out"),
    }
}

fn write_file(path: PathBuf, body: &str) -> Result<()> {
    fs::write(&path, body).map_err(|e| Error::io(path, e))
}

/// Run a scenario file and write its trace, summary and MEDAG export.
pub fn run_scenario(path: impl AsRef<Path>, out: Option<&Path>) -> Result<(RunReport, PathBuf)> {
    let (scenario, base) = Scenario::from_path(path)?;
    let report = run_prepared(&scenario.prepare(&base)?)?;
    let dir = output_dir(out, &scenario, &base);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_file(dir.join(&scenario.output.trace), &report.trace.to_csv())?;
    write_file(
        dir.join(&scenario.output.summary),
        &report.summary.to_json(),
    )?;
    write_file(dir.join(&scenario.output.medag), &report.medag_export())?;
    Ok((report, dir))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRun {
    pub seed: u64,
    pub verdict: Verdict,
    pub robust: bool,
    pub adversary_valid: bool,
    pub steps_to_threshold: Option<usize>,
    pub final_max_error: f64,
    pub safety_violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub runs: Vec<SweepRun>,
    pub converged: usize,
    pub diverged: usize,
    pub maxsteps: usize,
    pub mean_steps_to_threshold: Option<f64>,
    pub max_steps_to_threshold: Option<usize>,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sweep serializes");
        s.push('\n');
        s
    }
}

/// Run `scenario` once per seed in parallel; runs come back in seed order.
pub fn sweep(scenario: &Scenario, base_dir: &Path, seeds: Range<u64>) -> Result<SweepReport> {
    let seeds: Vec<u64> = seeds.collect();
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let report = run_prepared(&scenario.with_seed(seed).prepare(base_dir)?)?;
            let s = report.summary;
            Ok(SweepRun {
                seed,
                verdict: s.verdict,
                robust: s.robust,
                adversary_valid: s.adversary.valid,
                steps_to_threshold: s
                    .steps_to_threshold
                    .filter(|_| s.verdict == Verdict::Converged),
                final_max_error: s.final_max_error,
                safety_violations: s.safety.violations(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let count = |v: Verdict| runs.iter().filter(|r| r.verdict == v).count();
    let steps: Vec<usize> = runs.iter().filter_map(|r| r.steps_to_threshold).collect();
    Ok(SweepReport {
        converged: count(Verdict::Converged),
        diverged: count(Verdict::Diverged),
        maxsteps: count(Verdict::Maxsteps),
        mean_steps_to_threshold: (!steps.is_empty())
            .then(|| steps.iter().sum::<usize>() as f64 / steps.len() as f64),
        max_steps_to_threshold: steps.iter().copied().max(),
        runs,
    })
}
