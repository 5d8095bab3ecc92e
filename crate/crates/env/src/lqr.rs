//! Distributed linear-quadratic regulation game.
//!
//! Scalar integrator agents `x_i(k) = x_i(k-1) + b_i u_i(k-1) + w(k)` with
//! uniform noise, random positive-definite stage cost matrices `M(k)`, `R(k)`
//! (eigenvalues uniform in a configured range), and a per-step communication
//! graph. Training signals mask the cost matrices entrywise by the graph
//! adjacency `W(k)`; evaluation against centralized baselines uses the dense
//! cost (`masked_costs = false`).
//!
//! The input gains `b_i`, the cost schedule and the sparse graph schedule are
//! drawn once from `system_seed` at construction and stay fixed across
//! episodes, so a finite-horizon Riccati baseline on the same schedule is the
//! exact optimum of the game.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::{validate_actions, EnvError, Environment, StepOutcome};
use crate::graph::{proximity_graph, random_sparse_graph, CommGraph};
use crate::spec::TeamSpec;
use crate::state::{GameState, StageCostVector};

/// How the communication graph evolves over an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphMode {
    /// All agents connected at every step.
    Complete,
    /// A fixed random sparse graph per step, known for the whole horizon.
    SparseSchedule { density: f64 },
    /// State-dependent proximity graph with the given radius.
    Proximity { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LqrConfig {
    /// Number of teams N; each team fields `agents_per_team` scalar agents.
    pub teams: usize,
    pub agents_per_team: usize,
    /// Horizon K.
    pub horizon: usize,
    /// Process noise bound: w(k) ~ U[-noise_bound, noise_bound] per agent.
    pub noise_bound: f64,
    /// Initial conditions uniform in [-init_range, init_range].
    pub init_range: f64,
    /// Eigenvalue range for the random positive-definite cost matrices.
    pub eigen_range: (f64, f64),
    pub graph: GraphMode,
    /// Seed for the system draw: input gains, cost schedule, graph schedule.
    pub system_seed: u64,
    /// Mask stage costs by the graph adjacency (the training signal of the
    /// distributed methods). Disable to measure the dense ground-truth cost.
    pub masked_costs: bool,
    /// Stage costs are clamped to this magnitude.
    pub cost_clamp: f64,
}

impl Default for LqrConfig {
    fn default() -> Self {
        LqrConfig {
            teams: 5,
            agents_per_team: 1,
            horizon: 30,
            noise_bound: 1e-3,
            init_range: 0.1,
            eigen_range: (0.2, 1.0),
            graph: GraphMode::SparseSchedule { density: 0.5 },
            system_seed: 0,
            masked_costs: true,
            cost_clamp: 1e6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearQuadraticGame {
    config: LqrConfig,
    spec: TeamSpec,
    input_gains: Vec<f64>,
    /// M(0)..M(K); M(K) is the terminal weight.
    state_costs: Vec<DMatrix<f64>>,
    /// R(0)..R(K-1).
    control_costs: Vec<DMatrix<f64>>,
    /// Graph schedule for `SparseSchedule`/`Complete` modes, steps 0..=K.
    graph_schedule: Option<Vec<CommGraph>>,
    state: GameState,
    graph: CommGraph,
    episode_rng: ChaCha8Rng,
    k: usize,
    finished: bool,
}

impl LinearQuadraticGame {
    pub fn new(config: LqrConfig) -> Result<Self, EnvError> {
        if config.horizon == 0 {
            return Err(EnvError::InvalidSpec("horizon must be positive".into()));
        }
        if config.eigen_range.0 <= 0.0 || config.eigen_range.1 < config.eigen_range.0 {
            return Err(EnvError::InvalidSpec(format!(
                "eigenvalue range {:?} must be positive and ordered",
                config.eigen_range
            )));
        }
        if let GraphMode::SparseSchedule { density } = config.graph {
            if !(0.0..=1.0).contains(&density) {
                return Err(EnvError::InvalidSpec(format!(
                    "graph density {density} outside [0, 1]"
                )));
            }
        }
        let spec = TeamSpec::new(vec![config.agents_per_team; config.teams], 1, 1)?;
        let m = spec.total_agents();
        let mut rng = ChaCha8Rng::seed_from_u64(config.system_seed);

        let input_gains: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let (lo, hi) = config.eigen_range;
        let state_costs = (0..=config.horizon)
            .map(|_| random_pd_matrix(&mut rng, m, lo, hi))
            .collect();
        let control_costs = (0..config.horizon)
            .map(|_| random_pd_matrix(&mut rng, m, lo, hi))
            .collect();

        let graph_schedule = match config.graph {
            GraphMode::Complete => Some(
                (0..=config.horizon)
                    .map(|k| CommGraph::complete(k, m))
                    .collect(),
            ),
            GraphMode::SparseSchedule { density } => Some(
                (0..=config.horizon)
                    .map(|k| random_sparse_graph(config.system_seed, k, m, density))
                    .collect(),
            ),
            GraphMode::Proximity { .. } => None,
        };

        let state = GameState::new(vec![vec![0.0]; m]);
        let graph = CommGraph::self_loops_only(0, m);
        Ok(LinearQuadraticGame {
            config,
            spec,
            input_gains,
            state_costs,
            control_costs,
            graph_schedule,
            state,
            graph,
            episode_rng: ChaCha8Rng::seed_from_u64(0),
            k: 0,
            finished: true,
        })
    }

    pub fn config(&self) -> &LqrConfig {
        &self.config
    }

    /// Per-agent input gains b_i of the integrator dynamics.
    pub fn input_gains(&self) -> &[f64] {
        &self.input_gains
    }

    /// Dense state-cost matrix M(k), k in 0..=horizon.
    pub fn state_cost(&self, k: usize) -> &DMatrix<f64> {
        &self.state_costs[k]
    }

    /// Dense control-cost matrix R(k), k in 0..horizon.
    pub fn control_cost(&self, k: usize) -> &DMatrix<f64> {
        &self.control_costs[k]
    }

    /// Graph at step `k` when the schedule is known ahead of time
    /// (`Complete` and `SparseSchedule` modes).
    pub fn scheduled_graph(&self, k: usize) -> Option<&CommGraph> {
        self.graph_schedule.as_ref().map(|s| &s[k])
    }

    fn graph_at(&self, k: usize, state: &GameState) -> CommGraph {
        match self.config.graph {
            GraphMode::Proximity { radius } => {
                proximity_graph(k, &state.agents, radius)
            }
            _ => self.graph_schedule.as_ref().expect("schedule exists")[k].clone(),
        }
    }

    /// Effective (possibly masked) cost matrices at step `k` under graph `g`.
    fn effective_costs(&self, k: usize, g: &CommGraph) -> (DMatrix<f64>, Option<DMatrix<f64>>) {
        let m_dense = &self.state_costs[k];
        let r_dense = self.control_costs.get(k);
        if self.config.masked_costs {
            let w = g.adjacency();
            let masked_m = hadamard(m_dense, &w);
            let masked_r = r_dense.map(|r| hadamard(r, &w));
            (masked_m, masked_r)
        } else {
            (m_dense.clone(), r_dense.cloned())
        }
    }
}

impl Environment for LinearQuadraticGame {
    fn team_spec(&self) -> &TeamSpec {
        &self.spec
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn reset(&mut self, seed: u64) -> (GameState, CommGraph) {
        self.episode_rng = ChaCha8Rng::seed_from_u64(seed);
        let r = self.config.init_range;
        let agents = (0..self.spec.total_agents())
            .map(|_| vec![self.episode_rng.random_range(-r..=r)])
            .collect();
        self.state = GameState::new(agents);
        self.k = 0;
        self.finished = false;
        self.graph = self.graph_at(0, &self.state);
        (self.state.clone(), self.graph.clone())
    }

    fn step(&mut self, actions: &[Vec<f64>]) -> Result<StepOutcome, EnvError> {
        if self.finished {
            return Err(EnvError::EpisodeFinished);
        }
        validate_actions(&self.spec, actions)?;

        let x: Vec<f64> = self.state.stacked();
        let u: Vec<f64> = actions.iter().map(|a| a[0]).collect();

        // Stage cost at step k under the graph the policy just used.
        let (m_eff, r_eff) = self.effective_costs(self.k, &self.graph);
        let mut costs = masked_team_costs(&self.spec, &x, Some(&u), &m_eff, r_eff.as_ref());

        let noise_bound = self.config.noise_bound;
        let next: Vec<Vec<f64>> = (0..x.len())
            .map(|i| {
                let w = if noise_bound > 0.0 {
                    self.episode_rng.random_range(-noise_bound..=noise_bound)
                } else {
                    0.0
                };
                vec![x[i] + self.input_gains[i] * u[i] + w]
            })
            .collect();
        self.state = GameState::new(next);
        self.k += 1;

        let done = self.k >= self.config.horizon;
        let next_graph = self.graph_at(self.k.min(self.config.horizon), &self.state);
        if done {
            // Terminal state cost x(K)' M(K) x(K) under the final graph.
            let (m_term, _) = self.effective_costs(self.config.horizon, &next_graph);
            let terminal =
                masked_team_costs(&self.spec, &self.state.stacked(), None, &m_term, None);
            for (c, t) in costs.iter_mut().zip(terminal) {
                *c += t;
            }
            self.finished = true;
        }
        let clamp = self.config.cost_clamp;
        for c in costs.iter_mut() {
            *c = c.clamp(-clamp, clamp);
        }

        self.graph = next_graph.clone();
        Ok(StepOutcome {
            next_state: self.state.clone(),
            costs,
            graph: next_graph,
            done,
            timeout: done,
        })
    }

    fn state(&self) -> &GameState {
        &self.state
    }

    fn positions(&self) -> Vec<Vec<f64>> {
        self.state.agents.clone()
    }
}

/// Random symmetric positive-definite matrix: orthogonal basis from the QR of
/// a standard Gaussian matrix, eigenvalues uniform in `[lo, hi]`.
pub fn random_pd_matrix(rng: &mut ChaCha8Rng, size: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let gaussian = DMatrix::from_fn(size, size, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z
    });
    let q = gaussian.qr().q();
    let eigenvalues = DVector::from_iterator(size, (0..size).map(|_| rng.random_range(lo..=hi)));
    let lambda = DMatrix::from_diagonal(&eigenvalues);
    // Symmetrize against roundoff.
    let m: DMatrix<f64> = &q * lambda * q.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn hadamard(a: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    debug_assert_eq!(rows * cols, w.len());
    DMatrix::from_fn(rows, cols, |r, c| a[(r, c)] * w[r * cols + c])
}

/// Team-attributed quadratic cost: team `i` receives the rows of
/// `x' M x` (and `u' R u` when control matrices/actions are given) owned by
/// its agents. Summed over teams this equals the full quadratic form.
pub fn masked_team_costs(
    spec: &TeamSpec,
    x: &[f64],
    u: Option<&[f64]>,
    m: &DMatrix<f64>,
    r: Option<&DMatrix<f64>>,
) -> StageCostVector {
    let mut costs = vec![0.0; spec.team_count()];
    for team in 0..spec.team_count() {
        let mut c = 0.0;
        for l in spec.team_members(team) {
            let mut row_m = 0.0;
            for p in 0..x.len() {
                row_m += m[(l, p)] * x[p];
            }
            c += x[l] * row_m;
            if let (Some(u), Some(r)) = (u, r) {
                let mut row_r = 0.0;
                for p in 0..u.len() {
                    row_r += r[(l, p)] * u[p];
                }
                c += u[l] * row_r;
            }
        }
        costs[team] = c;
    }
    costs
}

/// True when `m` is symmetric positive definite (via Cholesky).
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let sym_err = (m - m.transpose()).abs().max();
    if sym_err > 1e-9 {
        return false;
    }
    m.clone().cholesky().is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_game(graph: GraphMode) -> LinearQuadraticGame {
        LinearQuadraticGame::new(LqrConfig {
            teams: 3,
            horizon: 5,
            graph,
            system_seed: 11,
            ..LqrConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn reset_draws_initial_conditions_in_range() {
        let mut env = small_game(GraphMode::Complete);
        let (state, _) = env.reset(3);
        for agent in &state.agents {
            assert!(agent[0] >= -0.1 && agent[0] <= 0.1);
        }
    }

    #[test]
    fn reset_is_deterministic() {
        let mut env = small_game(GraphMode::SparseSchedule { density: 0.5 });
        let (a, ga) = env.reset(7);
        let (b, gb) = env.reset(7);
        assert_eq!(a, b);
        assert_eq!(ga, gb);
    }

    #[test]
    fn zero_actions_zero_noise_leave_state_unchanged() {
        let mut env = LinearQuadraticGame::new(LqrConfig {
            teams: 2,
            horizon: 3,
            noise_bound: 0.0,
            graph: GraphMode::Complete,
            ..LqrConfig::default()
        })
        .unwrap();
        let (state, _) = env.reset(1);
        let out = env.step(&vec![vec![0.0]; 2]).unwrap();
        assert_eq!(out.next_state, state);
    }

    #[test]
    fn zero_state_zero_action_costs_nothing() {
        let env = small_game(GraphMode::Complete);
        let costs = masked_team_costs(
            env.team_spec(),
            &[0.0, 0.0, 0.0],
            Some(&[0.0, 0.0, 0.0]),
            env.state_cost(0),
            Some(env.control_cost(0)),
        );
        assert!(costs.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn identity_mask_keeps_only_diagonal() {
        let env = small_game(GraphMode::Complete);
        let m = env.state_cost(0);
        let r = env.control_cost(0);
        let w = CommGraph::self_loops_only(0, 3).adjacency();
        let masked_m = hadamard(m, &w);
        let masked_r = hadamard(r, &w);
        let x = [0.3, -0.7, 1.1];
        let u = [0.2, 0.0, -0.5];
        let costs = masked_team_costs(env.team_spec(), &x, Some(&u), &masked_m, Some(&masked_r));
        for i in 0..3 {
            let expected = m[(i, i)] * x[i] * x[i] + r[(i, i)] * u[i] * u[i];
            assert!((costs[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn masked_cost_matches_dense_quadratic_form_oracle() {
        // With W = all-ones the masked cost must equal the dense form
        // computed by an independent matrix-multiply oracle.
        let env = small_game(GraphMode::Complete);
        let m = env.state_cost(2);
        let r = env.control_cost(2);
        let w = CommGraph::complete(0, 3).adjacency();
        let x = DVector::from_vec(vec![0.4, -1.3, 0.9]);
        let u = DVector::from_vec(vec![-0.1, 0.8, 0.25]);

        let masked_m = hadamard(m, &w);
        let masked_r = hadamard(r, &w);
        let costs = masked_team_costs(
            env.team_spec(),
            x.as_slice(),
            Some(u.as_slice()),
            &masked_m,
            Some(&masked_r),
        );
        let total: f64 = costs.iter().sum();
        let oracle = (x.transpose() * m * &x)[(0, 0)] + (u.transpose() * r * &u)[(0, 0)];
        assert!((total - oracle).abs() < 1e-10);
    }

    #[test]
    fn random_pd_matrices_are_pd_with_bounded_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let m = random_pd_matrix(&mut rng, 4, 0.2, 1.0);
            assert!(is_positive_definite(&m));
            let eig = m.symmetric_eigenvalues();
            for v in eig.iter() {
                assert!(*v >= 0.2 - 1e-9 && *v <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn episode_is_bit_reproducible() {
        let mut env = small_game(GraphMode::Proximity { radius: 0.2 });
        let actions: Vec<Vec<Vec<f64>>> = (0..5)
            .map(|k| (0..3).map(|a| vec![0.01 * (k as f64 - a as f64)]).collect())
            .collect();
        let run = |env: &mut LinearQuadraticGame| {
            let mut log = Vec::new();
            env.reset(99);
            for acts in &actions {
                let out = env.step(acts).unwrap();
                log.push((out.next_state.clone(), out.costs.clone(), out.done));
                if out.done {
                    break;
                }
            }
            log
        };
        let a = run(&mut env);
        let b = run(&mut env);
        assert_eq!(a, b);
    }

    #[test]
    fn step_after_done_errors() {
        let mut env = LinearQuadraticGame::new(LqrConfig {
            teams: 2,
            horizon: 1,
            graph: GraphMode::Complete,
            ..LqrConfig::default()
        })
        .unwrap();
        env.reset(0);
        let out = env.step(&vec![vec![0.0]; 2]).unwrap();
        assert!(out.done && out.timeout);
        assert!(matches!(
            env.step(&vec![vec![0.0]; 2]),
            Err(EnvError::EpisodeFinished)
        ));
    }

    #[test]
    fn nan_actions_are_rejected() {
        let mut env = small_game(GraphMode::Complete);
        env.reset(0);
        let err = env
            .step(&vec![vec![f64::NAN], vec![0.0], vec![0.0]])
            .unwrap_err();
        assert!(matches!(err, EnvError::NonFiniteAction { agent: 0 }));
    }
}
