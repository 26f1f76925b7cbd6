//! Tabular-MDP planning laboratory.
//!
//! Exact solvers for finite MDPs plus three regularizers against planner
//! overfitting: reduced planning discounts, epsilon-greedy planning, and
//! reduced policy-representation capacity. Experiment harnesses measure
//! planning loss under certainty-equivalence models, census the distinct
//! optimal policies across random transition functions, and evaluate the
//! matching closed-form loss bounds, all with seeded, thread-count-independent
//! determinism.

pub mod bounds;
pub mod census;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod mdp;
pub mod numfmt;
pub mod policy_search;
pub mod random_mdp;
pub mod rng;
pub mod solve;
pub mod svg;

pub use error::{Error, Result};
pub use mdp::{DetPolicy, Mdp, QFunction, StochPolicy, Weighting};
pub use rng::RngStream;
