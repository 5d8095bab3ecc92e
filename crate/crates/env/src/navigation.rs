//! Multi-robot unicycle navigation game.
//!
//! Each robot is its own team and regulates toward an assigned goal. The
//! agent-visible state is expressed in error coordinates
//! `(px - gx, py - gy, heading)`, so the feedback-gain policy drives the
//! state to zero; the environment keeps the true positions internally for
//! distances, collisions and the communication graph.
//!
//! Stage cost per robot: `e' e + u' u` plus a quadratic proximity penalty
//! `beta * (d - d_prox)^2` for every other robot closer than `d_prox`
//! (zero at and beyond the threshold). The terminal step adds
//! `terminal_weight * e' e`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{validate_actions, EnvError, Environment, StepOutcome};
use crate::graph::{proximity_graph, CommGraph};
use crate::spec::TeamSpec;
use crate::state::GameState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NavigationConfig {
    /// Number of robots; every robot is a one-agent team.
    pub agents: usize,
    /// Horizon K.
    pub horizon: usize,
    /// Euler integration step [s].
    pub dt: f64,
    /// Communication radius; also the proximity-penalty threshold [m].
    pub comm_radius: f64,
    pub d_prox: f64,
    /// Proximity penalty coefficient.
    pub beta: f64,
    /// Terminal tracking weight (stage weight is identity).
    pub terminal_weight: f64,
    /// Forward speed clamp: v in [-speed_limit, speed_limit] [m/s].
    pub speed_limit: f64,
    /// Yaw rate clamp [rad/s].
    pub yaw_rate_limit: f64,
    /// Goal positions; empty means evenly spaced on a circle of
    /// `goal_radius`.
    pub goals: Vec<[f64; 2]>,
    pub goal_radius: f64,
    /// Initial positions uniform in the square [-spawn_range, spawn_range]²,
    /// rejection-sampled to keep at least `min_separation` between robots.
    pub spawn_range: f64,
    pub min_separation: f64,
    pub cost_clamp: f64,
}

impl Default for NavigationConfig {
    fn default() -> Self {
        NavigationConfig {
            agents: 7,
            horizon: 100,
            dt: 0.1,
            comm_radius: 0.5,
            d_prox: 0.5,
            beta: 1.0,
            terminal_weight: 100.0,
            speed_limit: 1.0,
            yaw_rate_limit: std::f64::consts::PI,
            goals: Vec::new(),
            goal_radius: 1.0,
            spawn_range: 1.0,
            min_separation: 0.5,
            cost_clamp: 1e6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnicycleNavigationGame {
    config: NavigationConfig,
    spec: TeamSpec,
    goals: Vec<[f64; 2]>,
    /// Error-coordinate states (dx, dy, heading) per robot.
    state: GameState,
    graph: CommGraph,
    episode_rng: ChaCha8Rng,
    k: usize,
    finished: bool,
}

impl UnicycleNavigationGame {
    pub fn new(config: NavigationConfig) -> Result<Self, EnvError> {
        if config.agents == 0 || config.horizon == 0 {
            return Err(EnvError::InvalidSpec(
                "navigation needs at least one robot and a positive horizon".into(),
            ));
        }
        if config.dt <= 0.0 {
            return Err(EnvError::InvalidSpec("dt must be positive".into()));
        }
        if !config.goals.is_empty() && config.goals.len() != config.agents {
            return Err(EnvError::InvalidSpec(format!(
                "{} goals configured for {} robots",
                config.goals.len(),
                config.agents
            )));
        }
        let goals = if config.goals.is_empty() {
            (0..config.agents)
                .map(|i| {
                    let angle = 2.0 * std::f64::consts::PI * i as f64 / config.agents as f64;
                    [config.goal_radius * angle.cos(), config.goal_radius * angle.sin()]
                })
                .collect()
        } else {
            config.goals.clone()
        };
        let spec = TeamSpec::new(vec![1; config.agents], 3, 2)?;
        let state = GameState::new(vec![vec![0.0; 3]; config.agents]);
        let graph = CommGraph::self_loops_only(0, config.agents);
        Ok(UnicycleNavigationGame {
            config,
            spec,
            goals,
            state,
            graph,
            episode_rng: ChaCha8Rng::seed_from_u64(0),
            k: 0,
            finished: true,
        })
    }

    pub fn config(&self) -> &NavigationConfig {
        &self.config
    }

    pub fn goals(&self) -> &[[f64; 2]] {
        &self.goals
    }

    /// True planar position of a robot: error state plus goal.
    fn position_of(&self, agent: usize) -> [f64; 2] {
        let e = self.state.agent(agent);
        [e[0] + self.goals[agent][0], e[1] + self.goals[agent][1]]
    }

    fn all_positions(&self) -> Vec<Vec<f64>> {
        (0..self.config.agents)
            .map(|a| self.position_of(a).to_vec())
            .collect()
    }

    /// Proximity penalty paid by `agent` given all true positions.
    fn proximity_penalty(&self, agent: usize, positions: &[Vec<f64>]) -> f64 {
        let mut penalty = 0.0;
        for other in 0..positions.len() {
            if other == agent {
                continue;
            }
            let dx = positions[agent][0] - positions[other][0];
            let dy = positions[agent][1] - positions[other][1];
            let d = (dx * dx + dy * dy).sqrt();
            penalty += proximity_cost(d, self.config.d_prox, self.config.beta);
        }
        penalty
    }
}

/// The penalty C(d): `beta (d - d_prox)^2` strictly below the threshold,
/// zero at and beyond it.
pub fn proximity_cost(d: f64, d_prox: f64, beta: f64) -> f64 {
    if d < d_prox {
        beta * (d - d_prox) * (d - d_prox)
    } else {
        0.0
    }
}

pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle;
    while a > std::f64::consts::PI {
        a -= 2.0 * std::f64::consts::PI;
    }
    while a < -std::f64::consts::PI {
        a += 2.0 * std::f64::consts::PI;
    }
    a
}

impl Environment for UnicycleNavigationGame {
    fn team_spec(&self) -> &TeamSpec {
        &self.spec
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn reset(&mut self, seed: u64) -> (GameState, CommGraph) {
        self.episode_rng = ChaCha8Rng::seed_from_u64(seed);
        let r = self.config.spawn_range;
        let mut positions: Vec<[f64; 2]> = Vec::with_capacity(self.config.agents);
        for _ in 0..self.config.agents {
            // Rejection sampling for the minimum separation; bounded retries
            // keep reset total even for crowded configurations.
            let mut attempt = 0;
            let p = loop {
                let candidate = [
                    self.episode_rng.random_range(-r..=r),
                    self.episode_rng.random_range(-r..=r),
                ];
                let ok = positions.iter().all(|q| {
                    let (dx, dy) = (candidate[0] - q[0], candidate[1] - q[1]);
                    (dx * dx + dy * dy).sqrt() >= self.config.min_separation
                });
                if ok || attempt > 100 {
                    break candidate;
                }
                attempt += 1;
            };
            positions.push(p);
        }
        let agents = (0..self.config.agents)
            .map(|i| {
                let heading = self
                    .episode_rng
                    .random_range(-std::f64::consts::PI..std::f64::consts::PI);
                vec![
                    positions[i][0] - self.goals[i][0],
                    positions[i][1] - self.goals[i][1],
                    heading,
                ]
            })
            .collect();
        self.state = GameState::new(agents);
        self.k = 0;
        self.finished = false;
        self.graph = proximity_graph(0, &self.all_positions(), self.config.comm_radius);
        (self.state.clone(), self.graph.clone())
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }
        validate_actions(&self.spec, actions)?;

        let positions = self.all_positions();
        let mut costs = vec![0.0; self.config.agents];
        let mut next_agents = Vec::with_capacity(self.config.agents);
        for (i, action) in actions.iter().enumerate() {
            let v = action[0].clamp(-self.config.speed_limit, self.config.speed_limit);
            let w = action[1].clamp(-self.config.yaw_rate_limit, self.config.yaw_rate_limit);
            let e = self.state.agent(i);

            let tracking: f64 = e.iter().map(|x| x * x).sum();
            let control = v * v + w * w;
            costs[i] = tracking + control + self.proximity_penalty(i, &positions);

            // Explicit Euler on the error state; goals are constant so the
            // error dynamics equal the unicycle dynamics.
            let heading = e[2];
            let next = vec![
                e[0] + v * heading.cos() * self.config.dt,
                e[1] + v * heading.sin() * self.config.dt,
                normalize_angle(heading + w * self.config.dt),
            ];
            next_agents.push(next);
        }
        self.state = GameState::new(next_agents);
        self.k += 1;

        let done = self.k >= self.config.horizon;
        if done {
            for i in 0..self.config.agents {
                let e = self.state.agent(i);
                let terminal: f64 = e.iter().map(|x| x * x).sum();
                costs[i] += self.config.terminal_weight * terminal;
            }
            self.finished = true;
        }
        let clamp = self.config.cost_clamp;
        for c in costs.iter_mut() {
            *c = c.clamp(-clamp, clamp);
        }

        let graph = proximity_graph(self.k, &self.all_positions(), self.config.comm_radius);
        self.graph = graph.clone();
        Ok(StepOutcome {
            next_state: self.state.clone(),
            costs,
            graph,
            done,
            timeout: done,
        })
    }

    fn state(&self) -> &GameState {
        &self.state
    }

    fn positions(&self) -> Vec<Vec<f64>> {
        self.all_positions()
    }
}
