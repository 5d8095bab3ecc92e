//! Time-indexed directed communication graphs.
//!
//! Edge `(l, p)` means agent `p`'s information is available to agent `l` at
//! this step. Self-loops are always present: an agent can always read its own
//! state, and the feedback-gain policy sums over neighbors only.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spec::TeamSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    step: usize,
    agent_count: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl CommGraph {
    /// Builds a graph from an edge list; self-loops are inserted for every
    /// agent regardless of the input.
    pub fn new(
        step: usize,
        agent_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut set: BTreeSet<(usize, usize)> = edges
            .into_iter()
            .inspect(|&(l, p)| {
                debug_assert!(l < agent_count && p < agent_count);
            })
            .collect();
        for a in 0..agent_count {
            set.insert((a, a));
        }
        CommGraph {
            step,
            agent_count,
            edges: set,
        }
    }

    pub fn complete(step: usize, agent_count: usize) -> Self {
        let edges = (0..agent_count)
            .flat_map(|l| (0..agent_count).map(move |p| (l, p)));
        CommGraph::new(step, agent_count, edges)
    }

    pub fn self_loops_only(step: usize, agent_count: usize) -> Self {
        CommGraph::new(step, agent_count, std::iter::empty())
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, l: usize, p: usize) -> bool {
        self.edges.contains(&(l, p))
    }

    /// Neighbors of `l` (including `l` itself), ascending by global index.
    pub fn neighbors(&self, l: usize) -> Vec<usize> {
        self.edges
            .range((l, 0)..=(l, self.agent_count.saturating_sub(1)))
            .map(|&(_, p)| p)
            .collect()
    }

    /// Neighbors of `l` on its own team.
    pub fn intra_neighbors(&self, l: usize, spec: &TeamSpec) -> Vec<usize> {
        let team = spec.team_of(l);
        self.neighbors(l)
            .into_iter()
            .filter(|&p| spec.team_of(p) == team)
            .collect()
    }

    /// Neighbors of `l` on other teams.
    pub fn inter_neighbors(&self, l: usize, spec: &TeamSpec) -> Vec<usize> {
        let team = spec.team_of(l);
        self.neighbors(l)
            .into_iter()
            .filter(|&p| spec.team_of(p) != team)
            .collect()
    }

    /// Adjacency matrix with self-loops, row-major `agent_count²`.
    pub fn adjacency(&self) -> Vec<f64> {
        let m = self.agent_count;
        let mut w = vec![0.0; m * m];
        for &(l, p) in &self.edges {
            w[l * m + p] = 1.0;
        }
        w
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }
}

/// Symmetric proximity graph: `(l, p)` is an edge iff the Euclidean distance
/// between the two position vectors is strictly below `radius`.
pub fn proximity_graph(step: usize, positions: &[Vec<f64>], radius: f64) -> CommGraph {
    debug_assert!(radius > 0.0);
    let m = positions.len();
    let mut edges = Vec::new();
    for l in 0..m {
        for p in (l + 1)..m {
            let dist2: f64 = positions[l]
                .iter()
                .zip(&positions[p])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dist2.sqrt() < radius {
                edges.push((l, p));
                edges.push((p, l));
            }
        }
    }
    CommGraph::new(step, m, edges)
}

/// Random sparse undirected graph, deterministic in `(seed, step)`: each
/// unordered agent pair is an edge with probability `density`.
pub fn random_sparse_graph(seed: u64, step: usize, agent_count: usize, density: f64) -> CommGraph {
    debug_assert!((0.0..=1.0).contains(&density));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step as u64);
    let mut edges = Vec::new();
    for l in 0..agent_count {
        for p in (l + 1)..agent_count {
            if rng.random::<f64>() < density {
                edges.push((l, p));
                edges.push((p, l));
            }
        }
    }
    CommGraph::new(step, agent_count, edges)
}
