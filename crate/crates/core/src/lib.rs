//! Resilient distributed state estimation over colored networks.
//!
//! Nodes observe a linear plant through local measurements and exchange
//! per-mode estimates. Some nodes may be Byzantine; all of them share one
//! color. Robustness of the network is decided by building a mode
//! estimation DAG (MEDAG) per unstable mode, and the estimation protocol
//! filters neighbor estimates along those DAGs using trusted neighbors,
//! color diversity or plain redundancy.
//!
//! ```
//! use resest::{build_medag, AdversaryModel, ColoredNetwork, NodeSet};
//!
//! let net = ColoredNetwork::complete(7);
//! let medag = build_medag(&net, 0, &NodeSet::from([0, 1, 2]), AdversaryModel::FLocal(1)).unwrap();
//! assert!(medag.terminated());
//! assert_eq!(medag.last_round(), Some(1));
//! ```

pub mod adversary;
pub mod design;
pub mod error;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod lfre;
pub mod plant;
pub mod robustness;

pub use adversary::{
    enumerate_flocal_sets, is_f_local, spoof_expand, validate_adversary, AdversaryModel,
    AdversarySpec, Strategy, Violation,
};
pub use design::{
    csra_bruteforce, greedy_trusted_selection, min_trusted_set, reduce_3dsc_to_csra,
    reduce_sc_to_tsra, tsra_bruteforce, Budget, DesignProblemInstance, SetCoverInstance,
};
pub use error::{Error, Result};
pub use graph::{
    is_reachable_set, is_strongly_robust_bruteforce, BruteforceVerdict, Color, ColoredNetwork,
    Condition, NodeId, NodeSet, ReachWitness, Redundancy,
};
pub use harness::{run_prepared, run_scenario, sweep, Scenario, Summary};
pub use lfre::{
    lfre_step_diversity, lfre_step_trimmed, lfre_step_trusted, Filtered, LfreConfig, Rule,
    SafetyCounters, SimOutcome, SimTrace, Simulator, StopRule, Verdict,
};
pub use plant::{local_observer_step, LocalObserver, ModeIndex, ModeIndexSets, SystemModel};
pub use robustness::{build_medag, is_strongly_robust, validate_medag, Medag, MedagReport};
