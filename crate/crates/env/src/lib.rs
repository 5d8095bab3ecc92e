//! Multi-team dynamic game environments.
//!
//! A game is played by `N` teams of agents over a time-varying directed
//! communication graph. Each step every agent applies an action, the state
//! advances under the environment dynamics, each team receives one stage
//! cost, and the graph is recomputed for the next step. Everything is
//! seeded and bit-reproducible.
//!
//! Three environments are provided:
//! - [`lqr::LinearQuadraticGame`]: scalar integrator agents with random
//!   positive-definite quadratic stage costs, optionally masked by the
//!   communication graph.
//! - [`navigation::UnicycleNavigationGame`]: unicycle robots regulating to
//!   assigned goals with a quadratic proximity penalty.
//! - [`pursuit::PursuitEvasionGame`]: a two-team tag arena with obstacles,
//!   catch events and quasi-zero-sum distance rewards.

pub mod env;
pub mod graph;
pub mod lqr;
pub mod navigation;
pub mod pursuit;
pub mod spec;
pub mod state;
pub mod trajectory;

pub use env::{Environment, EnvError, GameEnv, StepOutcome};
pub use graph::{proximity_graph, random_sparse_graph, CommGraph};
pub use lqr::{GraphMode, LinearQuadraticGame, LqrConfig};
pub use navigation::{NavigationConfig, UnicycleNavigationGame};
pub use pursuit::{PursuitConfig, PursuitEvasionGame};
pub use spec::TeamSpec;
pub use state::{GameState, StageCostVector, Transition};
