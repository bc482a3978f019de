//! Seeded instance generators.
//!
//! Every generator draws from a [`substream`] of one root seed, so each
//! consumer gets an independent stream and adding a consumer never shifts
//! another's draws.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::AdversaryModel;
use crate::design::SetCoverInstance;
use crate::error::{Error, Result};
use crate::graph::{Color, ColoredNetwork, NodeSet};
use crate::plant::SystemModel;
use crate::robustness::is_strongly_robust;

/// Consumers of randomness, one substream family each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    Network = 1,
    Model = 2,
    Adversary = 3,
    InitialState = 4,
    Validation = 5,
    SetCover = 6,
}

/// Generator for substream `index` of `stream` under `root`.
pub fn substream(root: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(((stream as u64) << 48) | (index & 0xffff_ffff_ffff));
    rng
}

/// Random directed graph: each ordered pair is an edge with probability
/// `density`, colors uniform over `0..colors`, and `round(trusted_fraction *
/// n)` trusted nodes chosen uniformly.
pub fn random_network(
    rng: &mut impl Rng,
    n: usize,
    density: f64,
    colors: u32,
    trusted_fraction: f64,
) -> ColoredNetwork {
    let mut net = ColoredNetwork::new(n);
    for j in 0..n {
        for i in 0..n {
            if i != j && rng.gen_bool(density.clamp(0.0, 1.0)) {
                net.add_edge(j, i).expect("valid edge");
            }
        }
    }
    for v in 0..n {
        net.set_color(v, rng.gen_range(0..colors.max(1)))
            .expect("valid node");
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let k = (trusted_fraction * n as f64).round() as usize;
    for &v in ids.iter().take(k.min(n)) {
        net.add_trusted(v).expect("valid node");
    }
    net
}

/// Uniform non-empty subset of `0..n` of size at most `max_size`.
pub fn random_subset(rng: &mut impl Rng, n: usize, max_size: usize) -> NodeSet {
    let size = rng.gen_range(1..=max_size.clamp(1, n.max(1)));
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    ids.into_iter().take(size).collect()
}

/// A system model whose mode `j` is measured by exactly the nodes in
/// `sources[j]`. Measurement rows per node are drawn at random; entries for
/// measured modes are bounded away from zero.
pub fn model_with_sources(
    rng: &mut impl Rng,
    eigenvalues: Vec<f64>,
    sources: &[NodeSet],
    n: usize,
) -> Result<SystemModel> {
    let dim = eigenvalues.len();
    if sources.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            actual: sources.len(),
        });
    }
    let measurements = (0..n)
        .map(|i| {
            let rows = rng.gen_range(1..=2usize);
            (0..rows)
                .map(|_| {
                    (0..dim)
                        .map(|j| {
                            if sources[j].contains(&i) {
                                let mag = rng.gen_range(0.5..2.0);
                                if rng.gen_bool(0.5) {
                                    mag
                                } else {
                                    -mag
                                }
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let initial_state = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SystemModel::new(eigenvalues, measurements, initial_state)
}

/// `count` eigenvalues in `[lo, hi]`, pairwise at least `gap` apart, sorted.
pub fn spread_eigenvalues(
    rng: &mut impl Rng,
    count: usize,
    lo: f64,
    hi: f64,
    gap: f64,
) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..count).map(|_| rng.gen_range(lo..=hi)).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] >= gap) {
            return v;
        }
    }
}

/// Parameters of [`robust_scenario`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioShape {
    pub nodes: usize,
    pub density: f64,
    pub colors: u32,
    #[serde(default)]
    pub trusted_fraction: f64,
    pub unstable_modes: usize,
    #[serde(default)]
    pub stable_modes: usize,
    /// Range of the unstable eigenvalues.
    pub unstable_range: (f64, f64),
    /// Largest source set per unstable mode.
    pub max_sources: usize,
    /// When set, exactly this many nodes get color 0 and the rest are spread
    /// over the other colors.
    #[serde(default)]
    pub color_zero_count: Option<usize>,
}

impl ScenarioShape {
    pub fn small(unstable_range: (f64, f64)) -> Self {
        ScenarioShape {
            nodes: 9,
            density: 0.7,
            colors: 2,
            trusted_fraction: 0.0,
            unstable_modes: 2,
            stable_modes: 1,
            unstable_range,
            max_sources: 4,
            color_zero_count: None,
        }
    }
}

/// Upper bound on rejection-sampling draws in [`robust_scenario`].
pub const MAX_ATTEMPTS: usize = 10_000;

/// Draw networks and models until the network is strongly robust for
/// `bound` with respect to every unstable mode's source set.
pub fn robust_scenario(
    root: u64,
    index: u64,
    shape: &ScenarioShape,
    bound: AdversaryModel,
) -> Result<(ColoredNetwork, SystemModel)> {
    let mut rng = substream(root, Stream::Network, index);
    for _ in 0..MAX_ATTEMPTS {
        let mut net = random_network(
            &mut rng,
            shape.nodes,
            shape.density,
            shape.colors,
            shape.trusted_fraction,
        );
        if let Some(zeros) = shape.color_zero_count {
            let others = shape.colors.max(2) - 1;
            let mut ids: Vec<usize> = (0..shape.nodes).collect();
            ids.shuffle(&mut rng);
            for (rank, &v) in ids.iter().enumerate() {
                let c: Color = if rank < zeros {
                    0
                } else {
                    1 + (rank as u32 % others)
                };
                net.set_color(v, c)?;
            }
        }
        let (lo, hi) = shape.unstable_range;
        let mut eig = spread_eigenvalues(&mut rng, shape.unstable_modes, lo, hi, 0.1);
        eig.extend(spread_eigenvalues(
            &mut rng,
            shape.stable_modes,
            0.1,
            0.8,
            0.1,
        ));
        let mut sources: Vec<NodeSet> = (0..shape.unstable_modes)
            .map(|_| random_subset(&mut rng, shape.nodes, shape.max_sources))
            .collect();
        // stable modes need no particular source set
        sources.extend(
            (0..shape.stable_modes).map(|_| random_subset(&mut rng, shape.nodes, shape.nodes)),
        );
        if !sources[..shape.unstable_modes]
            .iter()
            .all(|s| s.len() < shape.nodes && is_strongly_robust(&net, s, bound))
        {
            continue;
        }
        let model = model_with_sources(&mut rng, eig, &sources, shape.nodes)?;
        return Ok((net, model));
    }
    Err(Error::Input(format!(
        "no robust scenario found in {MAX_ATTEMPTS} draws for {shape:?}"
    )))
}

/// Random set-cover instance with `1..=p_max` elements and `1..=m_max`
/// subsets; the budget, when requested, is drawn from `1..=m`.
pub fn random_set_cover(
    rng: &mut impl Rng,
    p_max: usize,
    m_max: usize,
    with_budget: bool,
) -> SetCoverInstance {
    let p = rng.gen_range(1..=p_max);
    let m = rng.gen_range(1..=m_max);
    let density = rng.gen_range(0.2..0.8);
    let subsets: Vec<BTreeSet<usize>> = (0..m)
        .map(|_| (1..=p).filter(|_| rng.gen_bool(density)).collect())
        .collect();
    let budget = with_budget.then(|| rng.gen_range(1..=m));
    SetCoverInstance::new(p, subsets, budget).expect("generated instance is valid")
}

/// Arbitrary system model for checking the source-node test: random
/// distinct eigenvalues on both sides of the unit circle and sparse random
/// measurement matrices, without the detectability requirement.
pub fn random_raw_model(rng: &mut impl Rng, n: usize, dim: usize) -> SystemModel {
    let eigenvalues = spread_eigenvalues(rng, dim, -2.0, 2.0, 0.05);
    let measurements = (0..n)
        .map(|_| {
            let rows = rng.gen_range(1..=3usize);
            let zero_col: Vec<bool> = (0..dim).map(|_| rng.gen_bool(0.5)).collect();
            (0..rows)
                .map(|_| {
                    (0..dim)
                        .map(|j| {
                            if zero_col[j] || rng.gen_bool(0.3) {
                                0.0
                            } else {
                                rng.gen_range(-3.0..3.0)
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    SystemModel {
        eigenvalues,
        measurements,
        initial_state: vec![0.0; dim],
    }
}
