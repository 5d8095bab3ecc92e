use thiserror::Error;

use crate::graph::CommGraph;
use crate::lqr::LinearQuadraticGame;
use crate::navigation::UnicycleNavigationGame;
use crate::pursuit::PursuitEvasionGame;
use crate::spec::TeamSpec;
use crate::state::{GameState, StageCostVector};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment specification: {0}")]
    InvalidSpec(String),

    #[error("agent {agent} received a non-finite action")]
    NonFiniteAction { agent: usize },

    #[error("action for agent {agent} has {found} entries, expected {expected}")]
    ActionDimension {
        agent: usize,
        expected: usize,
        found: usize,
    },

    #[error("expected {expected} actions, got {found}")]
    ActionCount { expected: usize, found: usize },

    #[error("step called on a finished episode; call reset first")]
    EpisodeFinished,

    #[error("cost matrix construction failed: {0}")]
    CostConstruction(String),
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next_state: GameState,
    /// One stage cost per team (minimized; reported rewards are negations).
    pub costs: StageCostVector,
    /// Graph for the *next* step.
    pub graph: CommGraph,
    pub done: bool,
    /// True when the episode ended by reaching the horizon rather than by
    /// game completion; a timeout is bootstrapped by the critic.
    pub timeout: bool,
}

/// A multi-team game environment.
///
/// Environments own their episode state and noise stream: `reset(seed)`
/// makes the episode fully deterministic, and replaying a recorded action
/// sequence after the same reset reproduces every transition bitwise.
pub trait Environment {
    fn team_spec(&self) -> &TeamSpec;

    /// Episode length K; episodes end at K steps.
    fn horizon(&self) -> usize;

    fn reset(&mut self, seed: u64) -> (GameState, CommGraph);

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome, EnvError>;

    /// Current joint state.
    fn state(&self) -> &GameState;

    /// Positions used for proximity queries and distance metrics, one
    /// vector per agent.
    fn positions(&self) -> Vec<Vec<f64>>;
}

/// Runtime-selected environment.
#[derive(Debug, Clone)]
pub enum GameEnv {
    Lqr(LinearQuadraticGame),
    Navigation(UnicycleNavigationGame),
    Pursuit(PursuitEvasionGame),
}

macro_rules! delegate {
    ($self:ident, $inner:ident => $body:expr) => {
        match $self {
            GameEnv::Lqr($inner) => $body,
            GameEnv::Navigation($inner) => $body,
            GameEnv::Pursuit($inner) => $body,
        }
    };
}

impl Environment for GameEnv {
    fn team_spec(&self) -> &TeamSpec {
        delegate!(self, e => e.team_spec())
    }

    fn horizon(&self) -> usize {
        delegate!(self, e => e.horizon())
    }

    fn reset(&mut self, seed: u64) -> (GameState, CommGraph) {
        delegate!(self, e => e.reset(seed))
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome, EnvError> {
        delegate!(self, e => e.step(actions))
    }

    fn state(&self) -> &GameState {
        delegate!(self, e => e.state())
    }

    fn positions(&self) -> Vec<Vec<f64>> {
        delegate!(self, e => e.positions())
    }
}

/// Validates an action batch against the spec: count, dimension, finiteness.
pub(crate) fn validate_actions(spec: &TeamSpec, actions: &[Vec<f64>]) -> Result<(), EnvError> {
    if actions.len() != spec.total_agents() {
        return Err(EnvError::ActionCount {
            expected: spec.total_agents(),
            found: actions.len(),
        });
    }
    for (agent, action) in actions.iter().enumerate() {
        if action.len() != spec.action_dim() {
            return Err(EnvError::ActionDimension {
                agent,
                expected: spec.action_dim(),
                found: action.len(),
            });
        }
        if action.iter().any(|v| !v.is_finite()) {
            return Err(EnvError::NonFiniteAction { agent });
        }
    }
    Ok(())
}
