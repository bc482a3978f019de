use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use resest::design::{csra_bruteforce, greedy_trusted_selection, min_trusted_set};
use resest::{
    build_medag, is_strongly_robust_bruteforce, reduce_3dsc_to_csra, reduce_sc_to_tsra,
    run_scenario, sweep, AdversaryModel, Budget, ColoredNetwork, DesignProblemInstance, Error,
    NodeSet, Redundancy, Result, Scenario, SetCoverInstance, SystemModel,
};

#[derive(Parser)]
#[command(
    name = "resest",
    version,
    about = "Resilient distributed state estimation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide strong robustness of a graph with respect to a source set.
    CheckRobust {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = parse_set)]
        sources: NodeSet,
        #[command(flatten)]
        bound: Bound,
        /// Also run the exhaustive subset check.
        #[arg(long)]
        bruteforce: bool,
    },
    /// Build and export the MEDAG of every mode that needs one.
    BuildMedag {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        bound: Bound,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario file.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Choose trusted nodes greedily (or optimally with --bruteforce).
    DesignTrust {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        bruteforce: bool,
    },
    /// Search color allocations with at most q colors.
    DesignColors {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 3)]
        q: usize,
    },
    /// Turn a set-cover file into a design instance directory.
    Reduce {
        kind: ReduceKind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run a scenario over a range of seeds.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Half-open range `a..b`.
        #[arg(long, value_parser = parse_range)]
        seeds: std::ops::Range<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReduceKind {
    /// Set cover to trusted-node allocation.
    Sc,
    /// Three disjoint set covers to 3-color allocation.
    Dsc,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Bound {
    /// f-local adversaries (redundancy 2f+1).
    #[arg(long)]
    f: Option<usize>,
    /// Explicit redundancy threshold.
    #[arg(long)]
    r: Option<usize>,
    /// Unbounded mono-chromatic adversaries (redundancy disabled).
    #[arg(long)]
    mono: bool,
}

impl Bound {
    fn redundancy(&self) -> Result<Redundancy> {
        match (self.f, self.r) {
            (Some(f), _) => Ok(AdversaryModel::FLocal(f).redundancy()),
            (_, Some(r)) => Redundancy::finite(r),
            _ => Ok(Redundancy::Infinite),
        }
    }

    fn model(&self) -> Result<AdversaryModel> {
        match (self.f, self.r, self.mono) {
            (Some(f), _, _) => Ok(AdversaryModel::FLocal(f)),
            (_, _, true) => Ok(AdversaryModel::MonoChromatic),
            _ => Err(Error::Input("build-medag takes --f or --mono".into())),
        }
    }
}

fn parse_set(s: &str) -> std::result::Result<NodeSet, String> {
    s.split(',')
        .filter(|w| !w.trim().is_empty())
        .map(|w| w.trim().parse().map_err(|_| format!("bad node id {w:?}")))
        .collect()
}

fn parse_range(s: &str) -> std::result::Result<std::ops::Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected a..b")?;
    let a = a.parse().map_err(|_| format!("bad seed {a:?}"))?;
    let b = b.parse().map_err(|_| format!("bad seed {b:?}"))?;
    if a >= b {
        return Err("empty seed range".into());
    }
    Ok(a..b)
}

fn fmt_set(s: &NodeSet) -> String {
    s.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn source_sets(model: &SystemModel) -> Vec<NodeSet> {
    let sets = model.mode_index_sets();
    sets.needs_medag
        .iter()
        .map(|&j| sets.sources[j].clone())
        .collect()
}

fn load_pair(graph: &Path, model: &Path) -> Result<(ColoredNetwork, SystemModel)> {
    let net = ColoredNetwork::from_path(graph)?;
    let model = SystemModel::from_path(model)?;
    if net.node_count() != model.node_count() {
        return Err(Error::Dimension {
            expected: net.node_count(),
            actual: model.node_count(),
        });
    }
    Ok((net, model))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::CheckRobust {
            graph,
            sources,
            bound,
            bruteforce,
        } => {
            let net = ColoredNetwork::from_path(&graph)?;
            let r = bound.redundancy()?;
            let medag = resest::robustness::activate(&net, 0, &sources, r)?;
            if medag.terminated() {
                println!("YES rounds={}", medag.last_round().unwrap_or(0));
            } else {
                println!("NO counterexample={}", fmt_set(&medag.inactive()));
            }
            if bruteforce {
                let v = is_strongly_robust_bruteforce(&net, &sources, r)?;
                match v.counterexample {
                    None => println!("bruteforce YES"),
                    Some(c) => println!("bruteforce NO counterexample={}", fmt_set(&c)),
                }
            }
        }
        Command::BuildMedag {
            graph,
            model,
            bound,
            out,
        } => {
            let (net, model) = load_pair(&graph, &model)?;
            let sets = model.mode_index_sets();
            let mut text = String::new();
            for &j in &sets.needs_medag {
                let m = build_medag(&net, j, &sets.sources[j], bound.model()?)?;
                if !m.terminated() {
                    eprintln!("mode {j}: not robust, inactive {}", fmt_set(&m.inactive()));
                }
                text.push_str(&m.to_export());
            }
            match out {
                Some(path) => fs::write(&path, text).map_err(|e| Error::io(path, e))?,
                None => print!("{text}"),
            }
        }
        Command::Simulate { scenario, out_dir } => {
            let (report, dir) = run_scenario(&scenario, out_dir.as_deref())?;
            let s = &report.summary;
            println!(
                "{} verdict={} max_error={:e} steps={} robust={} outputs={}",
                s.name,
                s.verdict,
                s.final_max_error,
                s.steps,
                s.robust,
                dir.display()
            );
        }
        Command::DesignTrust {
            graph,
            model,
            r,
            bruteforce,
        } => {
            let (net, model) = load_pair(&graph, &model)?;
            let sets = source_sets(&model);
            let greedy = greedy_trusted_selection(&net, &sets, r)?;
            println!("greedy size={} trusted={}", greedy.len(), fmt_set(&greedy));
            if bruteforce {
                match min_trusted_set(&net, &sets, r)? {
                    Some(t) => println!("optimal size={} trusted={}", t.len(), fmt_set(&t)),
                    None => println!("optimal none"),
                }
            }
        }
        Command::DesignColors { graph, model, r, q } => {
            let (network, system) = load_pair(&graph, &model)?;
            let inst = DesignProblemInstance {
                network,
                system,
                r,
                budget: Budget::Colors(q),
                trivial_no: false,
            };
            match csra_bruteforce(&inst, q)? {
                (true, Some(c)) => println!(
                    "YES colors={}",
                    c.iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                ),
                _ => println!("NO"),
            }
        }
        Command::Reduce {
            kind,
            input,
            out_dir,
        } => {
            let sc = SetCoverInstance::from_path(&input)?;
            let inst = match kind {
                ReduceKind::Sc => reduce_sc_to_tsra(&sc)?,
                ReduceKind::Dsc => reduce_3dsc_to_csra(&sc)?,
            };
            inst.write_to_dir(&out_dir)?;
            println!(
                "wrote {} nodes, r={}{} to {}",
                inst.network.node_count(),
                inst.r,
                if inst.trivial_no { " (trivial no)" } else { "" },
                out_dir.display()
            );
        }
        Command::Sweep {
            scenario,
            seeds,
            out_dir,
        } => {
            let (s, base) = Scenario::from_path(&scenario)?;
            let report = sweep(&s, &base, seeds)?;
            let dir = resest::harness::output_dir(out_dir.as_deref(), &s, &base);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let path = dir.join("sweep.json");
            fs::write(&path, report.to_json()).map_err(|e| Error::io(&path, e))?;
            println!(
                "runs={} converged={} diverged={} maxsteps={} -> {}",
                report.runs.len(),
                report.converged,
                report.diverged,
                report.maxsteps,
                path.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
