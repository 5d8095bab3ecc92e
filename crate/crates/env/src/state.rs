use serde::{Deserialize, Serialize};

use crate::graph::CommGraph;

/// Per-team stage costs at one step, one entry per team.
pub type StageCostVector = Vec<f64>;

/// Joint state: one vector per agent, in global agent order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub agents: Vec<Vec<f64>>,
}

impl GameState {
    pub fn new(agents: Vec<Vec<f64>>) -> Self {
        GameState { agents }
    }

    pub fn agent(&self, idx: usize) -> &[f64] {
        &self.agents[idx]
    }

    /// States stacked into one vector in global agent order.
    pub fn stacked(&self) -> Vec<f64> {
        self.agents.iter().flatten().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.agents
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// One sampled transition, carrying the graph snapshot the policy actually
/// used at this step.
#[derive(Debug, Clone)]
pub struct Transition {
    pub step: usize,
    pub state: GameState,
    pub actions: Vec<Vec<f64>>,
    pub next_state: GameState,
    pub costs: StageCostVector,
    pub graph: CommGraph,
    pub done: bool,
    pub timeout: bool,
}
