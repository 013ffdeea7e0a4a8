use serde::{Deserialize, Serialize};

use crate::geometry;

use super::paths::Trajectory;

/// A stopping rule on the grid filtration: the decision at index `k` only
/// looks at `X_{t_0}, ..., X_{t_k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StoppingRule {
    /// Last grid index with `t_k <= t`.
    Deterministic { t: f64 },
    /// First index with `|X_{t_k}|_q >= level`, else the last index.
    LevelHit { level: f64 },
}

pub fn apply_stopping(traj: &Trajectory, rule: StoppingRule, q: f64) -> usize {
    match rule {
        StoppingRule::Deterministic { t } => traj.grid().index_at_or_before(t),
        StoppingRule::LevelHit { level } => (0..traj.len())
            .find(|&k| geometry::norm_unchecked(traj.state(k), q) >= level)
            .unwrap_or(traj.len() - 1),
    }
}
