//! Inference of reward machines from expert demonstrations.
//!
//! An agent's reward often depends on history, not just the current state:
//! delivering coffee pays only if the coffee was picked up first. This
//! crate models such rewards as *reward machines*, finite automata that
//! read a stream of environment labels and emit rewards on transitions,
//! and recovers them from demonstrations alone.
//!
//! The pipeline:
//!
//! 1. An expert plays a labeled MDP ([`mdp::LabeledMdp`]) whose true
//!    reward is a machine ([`rm::RewardMachine`]) the learner cannot see,
//!    producing a [`mdp::Demonstration`].
//! 2. [`anneal::anneal`] searches machine space by simulated annealing,
//!    scoring each candidate by a Boltzmann-rationality likelihood on the
//!    product MDP ([`mdp::build_product`] + [`solver::policy_iteration`])
//!    plus a simplicity prior.
//! 3. The maximum a posteriori machine is handed to a planner and scored
//!    against the expert ([`envs::evaluate`]).
//!
//! The [`envs`] module ships three gridworld benchmarks exercising the
//! pipeline end to end.

pub mod alphabet;
pub mod anneal;
pub mod envs;
pub mod error;
pub mod mdp;
pub mod rm;
pub mod solver;

pub use alphabet::{Alphabet, Symbol, BLANK};
pub use anneal::{
    acceptance_probability, anneal, anneal_chains, hypothesis_score, log_likelihood, AnnealConfig,
    AnnealOutcome, AnnealTrace, TraceRecord,
};
pub use envs::{
    evaluate, evaluate_agent, expert_baseline, generate_demonstration, make_env, Env, EvalReport,
    GridSpec, RolloutParams, ENV_NAMES,
};
pub use error::{Error, Result};
pub use mdp::{build_product, Demonstration, Episode, LabeledMdp, ProductMdp, Step, Triple};
pub use rm::{PriorParams, RewardMachine, INITIAL_STATE};
pub use solver::{boltzmann_distribution, log_sum_exp, policy_iteration, QTable};
