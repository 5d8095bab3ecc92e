use serde::{Deserialize, Serialize};

use crate::env::EnvError;

/// Team layout of a game: how many agents each team fields and the per-agent
/// state/action dimensions.
///
/// Agents carry a fixed global index for the whole run: teams are laid out
/// contiguously in team order, so global index `g` belongs to the team whose
/// offset range contains `g`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamSpec {
    agents_per_team: Vec<usize>,
    state_dim: usize,
    action_dim: usize,
}

impl TeamSpec {
    pub fn new(
        agents_per_team: Vec<usize>,
        state_dim: usize,
        action_dim: usize,
    ) -> Result<Self, EnvError> {
        if agents_per_team.is_empty() || agents_per_team.iter().any(|&m| m == 0) {
            return Err(EnvError::InvalidSpec(
                "every team needs at least one agent".into(),
            ));
        }
        if state_dim == 0 || action_dim == 0 {
            return Err(EnvError::InvalidSpec(
                "state and action dimensions must be positive".into(),
            ));
        }
        Ok(TeamSpec {
            agents_per_team,
            state_dim,
            action_dim,
        })
    }

    pub fn team_count(&self) -> usize {
        self.agents_per_team.len()
    }

    pub fn total_agents(&self) -> usize {
        self.agents_per_team.iter().sum()
    }

    pub fn agents_in_team(&self, team: usize) -> usize {
        self.agents_per_team[team]
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Team owning a global agent index.
    pub fn team_of(&self, agent: usize) -> usize {
        let mut offset = 0;
        for (team, &count) in self.agents_per_team.iter().enumerate() {
            if agent < offset + count {
                return team;
            }
            offset += count;
        }
        panic!("agent index {agent} out of range for {} agents", self.total_agents());
    }

    /// Global index of `(team, local)`.
    pub fn global_index(&self, team: usize, local: usize) -> usize {
        debug_assert!(local < self.agents_per_team[team]);
        self.agents_per_team[..team].iter().sum::<usize>() + local
    }

    /// Global index range of a team's agents.
    pub fn team_members(&self, team: usize) -> std::ops::Range<usize> {
        let start: usize = self.agents_per_team[..team].iter().sum();
        start..start + self.agents_per_team[team]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_bijection() {
        let spec = TeamSpec::new(vec![2, 3, 1], 4, 2).unwrap();
        assert_eq!(spec.total_agents(), 6);
        for team in 0..spec.team_count() {
            for local in 0..spec.agents_in_team(team) {
                let g = spec.global_index(team, local);
                assert_eq!(spec.team_of(g), team);
                assert!(spec.team_members(team).contains(&g));
            }
        }
        assert_eq!(spec.team_members(1), 2..5);
    }

    #[test]
    fn rejects_empty_teams_and_zero_dims() {
        assert!(TeamSpec::new(vec![], 1, 1).is_err());
        assert!(TeamSpec::new(vec![1, 0], 1, 1).is_err());
        assert!(TeamSpec::new(vec![1], 0, 1).is_err());
        assert!(TeamSpec::new(vec![1], 1, 0).is_err());
    }
}
