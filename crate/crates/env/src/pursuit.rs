//! Two-team pursuit-evasion arena.
//!
//! Team 0 are the pursuers, team 1 the evaders. Agents follow holonomic
//! double-integrator dynamics (acceleration actions, damped velocity,
//! per-team speed caps) inside a square arena with circular obstacles; wall
//! and obstacle contacts are resolved by projection, so there is no
//! penetration.
//!
//! The game is quasi zero-sum. Per step, with `d_e` the distance from evader
//! `e` to its nearest pursuer and `catches` the number of evaders within the
//! catch radius of some pursuer:
//!
//! - evader team cost  = -(dist_coef * sum_e d_e) + catch_bonus * catches
//! - pursuer team cost = +(dist_coef * sum_e d_e) - catch_bonus * catches
//!
//! so evaders are paid for distance and penalized per catch, mirrored for
//! pursuers. Observation and communication share one proximity radius.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{validate_actions, EnvError, Environment, StepOutcome};
use crate::graph::{proximity_graph, CommGraph};
use crate::spec::TeamSpec;
use crate::state::GameState;

pub const PURSUER_TEAM: usize = 0;
pub const EVADER_TEAM: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PursuitConfig {
    pub pursuers: usize,
    pub evaders: usize,
    /// Horizon K.
    pub horizon: usize,
    pub dt: f64,
    /// Arena is the square [-arena_half, arena_half]².
    pub arena_half: f64,
    pub obstacle_centers: Vec<[f64; 2]>,
    pub obstacle_radius: f64,
    /// Observation and communication radius [m].
    pub obs_radius: f64,
    /// An evader within this distance of a pursuer counts as caught.
    pub catch_radius: f64,
    /// Acceleration clamp per component.
    pub accel_limit: f64,
    pub pursuer_speed: f64,
    pub evader_speed: f64,
    /// Velocity damping factor applied per step.
    pub damping: f64,
    pub pursuer_radius: f64,
    pub evader_radius: f64,
    pub dist_coef: f64,
    pub catch_bonus: f64,
    pub cost_clamp: f64,
}

impl Default for PursuitConfig {
    fn default() -> Self {
        PursuitConfig {
            pursuers: 3,
            evaders: 3,
            horizon: 100,
            dt: 0.1,
            arena_half: 1.0,
            obstacle_centers: vec![[-0.5, -0.5], [0.5, 0.5]],
            obstacle_radius: 0.2,
            obs_radius: 1.0,
            catch_radius: 0.125,
            accel_limit: 1.0,
            pursuer_speed: 1.0,
            evader_speed: 1.3,
            damping: 0.25,
            pursuer_radius: 0.075,
            evader_radius: 0.05,
            dist_coef: 0.1,
            catch_bonus: 10.0,
            cost_clamp: 1e6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PursuitEvasionGame {
    config: PursuitConfig,
    spec: TeamSpec,
    state: GameState,
    graph: CommGraph,
    episode_rng: ChaCha8Rng,
    k: usize,
    finished: bool,
}

impl PursuitEvasionGame {
    pub fn new(config: PursuitConfig) -> Result<Self, EnvError> {
        if config.pursuers == 0 || config.evaders == 0 || config.horizon == 0 {
            return Err(EnvError::InvalidSpec(
                "pursuit needs both teams populated and a positive horizon".into(),
            ));
        }
        if config.dt <= 0.0 || config.obs_radius <= 0.0 || config.catch_radius <= 0.0 {
            return Err(EnvError::InvalidSpec(
                "dt, observation radius and catch radius must be positive".into(),
            ));
        }
        let spec = TeamSpec::new(vec![config.pursuers, config.evaders], 4, 2)?;
        let total = spec.total_agents();
        let state = GameState::new(vec![vec![0.0; 4]; total]);
        let graph = CommGraph::self_loops_only(0, total);
        Ok(PursuitEvasionGame {
            config,
            spec,
            state,
            graph,
            episode_rng: ChaCha8Rng::seed_from_u64(0),
            k: 0,
            finished: true,
        })
    }

    pub fn config(&self) -> &PursuitConfig {
        &self.config
    }

    pub fn is_pursuer(&self, agent: usize) -> bool {
        self.spec.team_of(agent) == PURSUER_TEAM
    }

    fn agent_radius(&self, agent: usize) -> f64 {
        if self.is_pursuer(agent) {
            self.config.pursuer_radius
        } else {
            self.config.evader_radius
        }
    }

    fn speed_cap(&self, agent: usize) -> f64 {
        if self.is_pursuer(agent) {
            self.config.pursuer_speed
        } else {
            self.config.evader_speed
        }
    }

    fn sample_free_position(&mut self, radius: f64) -> [f64; 2] {
        let bound = self.config.arena_half - radius;
        loop {
            let p = [
                self.episode_rng.random_range(-bound..=bound),
                self.episode_rng.random_range(-bound..=bound),
            ];
            let clear = self.config.obstacle_centers.iter().all(|c| {
                let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
                (dx * dx + dy * dy).sqrt() > self.config.obstacle_radius + radius
            });
            if clear {
                return p;
            }
        }
    }

    /// Resolves wall and obstacle contacts by projection; kills the velocity
    /// component that points into the contact.
    fn resolve_contacts(&self, agent: usize, p: &mut [f64; 2], v: &mut [f64; 2]) {
        let r = self.agent_radius(agent);
        let bound = self.config.arena_half - r;
        for axis in 0..2 {
            if p[axis] > bound {
                p[axis] = bound;
                v[axis] = v[axis].min(0.0);
            } else if p[axis] < -bound {
                p[axis] = -bound;
                v[axis] = v[axis].max(0.0);
            }
        }
        for c in &self.config.obstacle_centers {
            let keepout = self.config.obstacle_radius + r;
            let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
            let d = (dx * dx + dy * dy).sqrt();
            if d < keepout {
                let (nx, ny) = if d > 1e-12 {
                    (dx / d, dy / d)
                } else {
                    (1.0, 0.0)
                };
                p[0] = c[0] + nx * keepout;
                p[1] = c[1] + ny * keepout;
                let inward = v[0] * nx + v[1] * ny;
                if inward < 0.0 {
                    v[0] -= inward * nx;
                    v[1] -= inward * ny;
                }
            }
        }
    }

    fn planar_positions(&self) -> Vec<Vec<f64>> {
        self.state
            .agents
            .iter()
            .map(|s| vec![s[0], s[1]])
            .collect()
    }

    fn team_positions(&self, team: usize) -> Vec<[f64; 2]> {
        self.spec
            .team_members(team)
            .map(|a| {
                let s = self.state.agent(a);
                [s[0], s[1]]
            })
            .collect()
    }
}

/// Distance from each evader to its nearest pursuer.
pub fn evader_min_distances(pursuers: &[[f64; 2]], evaders: &[[f64; 2]]) -> Vec<f64> {
    evaders
        .iter()
        .map(|e| {
            pursuers
                .iter()
                .map(|p| ((e[0] - p[0]).powi(2) + (e[1] - p[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Iverson-bracket catch count: one per evader whose nearest pursuer is
/// within `catch_radius` (boundary included).
pub fn count_catches(pursuers: &[[f64; 2]], evaders: &[[f64; 2]], catch_radius: f64) -> usize {
    evader_min_distances(pursuers, evaders)
        .iter()
        .filter(|d| **d <= catch_radius)
        .count()
}

impl Environment for PursuitEvasionGame {
    fn team_spec(&self) -> &TeamSpec {
        &self.spec
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn reset(&mut self, seed: u64) -> (GameState, CommGraph) {
        self.episode_rng = ChaCha8Rng::seed_from_u64(seed);
        let total = self.spec.total_agents();
        let mut agents = Vec::with_capacity(total);
        for a in 0..total {
            let radius = self.agent_radius(a);
            let p = self.sample_free_position(radius);
            agents.push(vec![p[0], p[1], 0.0, 0.0]);
        }
        self.state = GameState::new(agents);
        self.k = 0;
        self.finished = false;
        self.graph = proximity_graph(0, &self.planar_positions(), self.config.obs_radius);
        (self.state.clone(), self.graph.clone())
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }
        validate_actions(&self.spec, actions)?;

        let limit = self.config.accel_limit;
        let dt = self.config.dt;
        let mut next_agents = Vec::with_capacity(actions.len());
        for (agent, action) in actions.iter().enumerate() {
            let s = self.state.agent(agent);
            let ax = action[0].clamp(-limit, limit);
            let ay = action[1].clamp(-limit, limit);
            let mut v = [
                s[2] * (1.0 - self.config.damping) + ax * dt,
                s[3] * (1.0 - self.config.damping) + ay * dt,
            ];
            let speed = (v[0] * v[0] + v[1] * v[1]).sqrt();
            let cap = self.speed_cap(agent);
            if speed > cap {
                v[0] *= cap / speed;
                v[1] *= cap / speed;
            }
            let mut p = [s[0] + v[0] * dt, s[1] + v[1] * dt];
            self.resolve_contacts(agent, &mut p, &mut v);
            next_agents.push(vec![p[0], p[1], v[0], v[1]]);
        }
        self.state = GameState::new(next_agents);
        self.k += 1;

        // Costs from the post-step configuration: catches and distances are
        // judged where the agents ended up.
        let pursuers = self.team_positions(PURSUER_TEAM);
        let evaders = self.team_positions(EVADER_TEAM);
        let distance_sum: f64 = evader_min_distances(&pursuers, &evaders).iter().sum();
        let catches = count_catches(&pursuers, &evaders, self.config.catch_radius) as f64;

        let evader_cost =
            -(self.config.dist_coef * distance_sum) + self.config.catch_bonus * catches;
        let pursuer_cost =
            self.config.dist_coef * distance_sum - self.config.catch_bonus * catches;
        let clamp = self.config.cost_clamp;
        let costs = vec![
            pursuer_cost.clamp(-clamp, clamp),
            evader_cost.clamp(-clamp, clamp),
        ];

        let done = self.k >= self.config.horizon;
        self.finished = done;
        let graph = proximity_graph(self.k, &self.planar_positions(), self.config.obs_radius);
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
        self.planar_positions()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn game() -> PursuitEvasionGame {
        PursuitEvasionGame::new(PursuitConfig::default()).unwrap()
    }

    fn set_positions(env: &mut PursuitEvasionGame, positions: &[[f64; 2]]) {
        let agents = positions
            .iter()
            .map(|p| vec![p[0], p[1], 0.0, 0.0])
            .collect();
        env.state = GameState::new(agents);
    }

    #[test]
    fn reset_spawns_inside_arena_outside_obstacles() {
        let mut env = game();
        let (state, _) = env.reset(13);
        for (a, s) in state.agents.iter().enumerate() {
            let r = env.agent_radius(a);
            assert!(s[0].abs() <= 1.0 - r && s[1].abs() <= 1.0 - r);
            for c in &env.config.obstacle_centers {
                let d = ((s[0] - c[0]).powi(2) + (s[1] - c[1]).powi(2)).sqrt();
                assert!(d > env.config.obstacle_radius + r);
            }
            assert_eq!(&s[2..], &[0.0, 0.0]);
        }
    }

    #[test]
    fn cost_signs_without_catches() {
        let mut env = game();
        env.reset(0);
        set_positions(
            &mut env,
            &[
                [-0.9, -0.9],
                [-0.9, 0.0],
                [-0.9, 0.9],
                [0.9, -0.9],
                [0.9, 0.0],
                [0.9, 0.9],
            ],
        );
        let out = env.step(&vec![vec![0.0, 0.0]; 6]).unwrap();
        assert!(out.costs[EVADER_TEAM] <= 0.0, "evader stage cost <= 0");
        assert!(out.costs[PURSUER_TEAM] >= 0.0, "pursuer stage cost >= 0");
    }

    #[test]
    fn one_catch_pays_the_pursuers_ten() {
        let mut env = PursuitEvasionGame::new(PursuitConfig {
            pursuers: 1,
            evaders: 1,
            ..PursuitConfig::default()
        })
        .unwrap();
        env.reset(0);
        set_positions(&mut env, &[[0.0, 0.1], [0.0, 0.0]]);
        let out = env.step(&vec![vec![0.0, 0.0]; 2]).unwrap();
        // Distance 0.1 <= 0.125: one catch. Pursuer reward = -cost should
        // increase by the catch bonus minus the small distance term.
        let pursuer_reward = -out.costs[PURSUER_TEAM];
        assert!((pursuer_reward - (10.0 - 0.1 * 0.1)).abs() < 1e-12);
        let evader_reward = -out.costs[EVADER_TEAM];
        assert!((evader_reward - (-10.0 + 0.1 * 0.1)).abs() < 1e-12);
    }

    #[test]
    fn mirrored_placement_balances_distance_terms() {
        // Evaders at the mirror image of pursuers: the distance matrix is
        // symmetric under the team swap, so per-team distance sums agree.
        let pursuers = vec![[0.3, 0.4], [-0.2, 0.6]];
        let evaders: Vec<[f64; 2]> = pursuers.iter().map(|p| [-p[0], -p[1]]).collect();
        let forward: f64 = evader_min_distances(&pursuers, &evaders).iter().sum();
        let swapped: f64 = evader_min_distances(&evaders, &pursuers).iter().sum();
        assert!((forward - swapped).abs() < 1e-12);
    }

    #[test]
    fn catch_counting_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let pursuers: Vec<[f64; 2]> = (0..3)
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let evaders: Vec<[f64; 2]> = (0..3)
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let fast = count_catches(&pursuers, &evaders, 0.125);
            let mut brute = 0;
            for e in &evaders {
                let mut caught = false;
                for p in &pursuers {
                    let d = ((e[0] - p[0]).powi(2) + (e[1] - p[1]).powi(2)).sqrt();
                    if d <= 0.125 {
                        caught = true;
                    }
                }
                if caught {
                    brute += 1;
                }
            }
            assert_eq!(fast, brute);
        }
    }

    #[test]
    fn agents_never_penetrate_walls_or_obstacles() {
        let mut env = game();
        env.reset(21);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let actions: Vec<Vec<f64>> = (0..6)
                .map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let out = env.step(&actions).unwrap();
            for (a, s) in out.next_state.agents.iter().enumerate() {
                let r = env.agent_radius(a);
                assert!(s[0].abs() <= 1.0 - r + 1e-9);
                assert!(s[1].abs() <= 1.0 - r + 1e-9);
                for c in &env.config.obstacle_centers {
                    let d = ((s[0] - c[0]).powi(2) + (s[1] - c[1]).powi(2)).sqrt();
                    assert!(d >= env.config.obstacle_radius + r - 1e-9);
                }
            }
            if out.done {
                break;
            }
        }
    }

    #[test]
    fn speed_caps_differ_by_team() {
        let mut env = game();
        env.reset(2);
        // Saturate accelerations for many steps and check the caps hold.
        for _ in 0..40 {
            let out = env.step(&vec![vec![1.0, 1.0]; 6]).unwrap();
            for (a, s) in out.next_state.agents.iter().enumerate() {
                let speed = (s[2] * s[2] + s[3] * s[3]).sqrt();
                let cap = if a < 3 { 1.0 } else { 1.3 };
                assert!(speed <= cap + 1e-9);
            }
            if out.done {
                break;
            }
        }
    }

    #[test]
    fn episode_reproducibility() {
        let mut env = game();
        let run = |env: &mut PursuitEvasionGame| {
            env.reset(5);
            let mut trace = Vec::new();
            for i in 0..10 {
                let actions: Vec<Vec<f64>> =
                    (0..6).map(|a| vec![0.1 * (a as f64), -0.05 * i as f64]).collect();
                let out = env.step(&actions).unwrap();
                trace.push((out.next_state, out.costs));
            }
            trace
        };
        assert_eq!(run(&mut env), run(&mut env));
    }
}
