//! Agent-based simulation of user trust in a capacity-constrained recommender.
//!
//! `N` users share a bar that is comfortable for at most `L` visitors. Each
//! step the recommender tells a random set of `L` users to GO and the rest to
//! STAY. Every user follows the advice with probability equal to their trust,
//! then raises trust by `beta` after a good recommendation or lowers it by
//! `gamma` after a bad one. The crate provides
//!
//! * [`model`]: the single-step rules as pure functions,
//! * [`engine`]: the iteration loop with convergence detection,
//! * [`experiments`]: seeded Monte Carlo batches and parameter sweeps,
//! * [`stats`]: summaries and the power-law / quadratic fits,
//! * [`cli`] and [`output`]: the `trustdyn` command-line tool and its file formats.
//!
//! ```
//! use rand::SeedableRng;
//! use trustdyn::{engine, SimParams};
//!
//! let params = SimParams::new(20, 12, 0.05, 0.05).with_max_iterations(250);
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let result = engine::run(&params, &mut rng).unwrap();
//! assert_eq!(result.converged, result.t_star.is_some());
//! ```

pub mod cli;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod model;
pub mod output;
pub mod stats;

pub use engine::{RunResult, SimulationState, StepStats};
pub use error::{Error, Result};
pub use experiments::{BatchResult, SweepRow};
pub use model::{Action, Dynamics, InitialTrust, Quality, SimParams, StayRule, TrustCap, UserState};
pub use stats::{FitKind, FitResult, FiveNumberSummary};

// The guide's code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/convergence.md")]
    mod convergence {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
