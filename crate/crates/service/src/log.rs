//! Append-only JSON-lines log of completed rounds.
//!
//! Every two-element array is ordered `[human, agent]`.

use std::io::BufRead;

use corridor_core::record::StepRecord;
use corridor_core::{Action, EnvState, EpisodeRecord, GridConfig, Objective, Outcome, Seat};
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub session_id: String,
    pub round: usize,
    pub objectives: [Objective; 2],
    pub start_cols: [usize; 2],
    pub actions: [Vec<Action>; 2],
    /// Whether the human's action on each turn was forced by a timeout.
    pub forced: Vec<bool>,
    pub final_cols: [usize; 2],
    pub outcome: Outcome,
    pub success: [bool; 2],
}

impl RoundLog {
    /// Rebuilds the episode by stepping the environment through the logged
    /// actions. The recorded end state is kept as logged so that `verify`
    /// can compare it against the replay.
    pub fn to_episode(&self, grid: GridConfig) -> EpisodeRecord {
        let mut state = EnvState {
            config: grid,
            turn: 0,
            p1_col: self.start_cols[0],
            p2_col: self.start_cols[1],
            p1_objective: self.objectives[0],
            p2_objective: self.objectives[1],
        };
        let mut steps = Vec::with_capacity(self.actions[0].len());
        for (turn, (&a1, &a2)) in self.actions[0].iter().zip(&self.actions[1]).enumerate() {
            let cols = [state.p1_col, state.p2_col];
            if let Ok(next) = state.step(a1, a2) {
                state = next;
            }
            let env_reward = Seat::BOTH.map(|s| state.objective_reward(s));
            steps.push(StepRecord {
                turn,
                cols,
                actions: [a1, a2],
                info: [None, None],
                env_reward,
                shaped_reward: env_reward,
            });
        }
        EpisodeRecord {
            objectives: self.objectives,
            start_cols: self.start_cols,
            steps,
            final_cols: self.final_cols,
            outcome: self.outcome,
            success: self.success,
        }
    }

    /// Replays the round and checks columns, outcome, success flags, and
    /// that every forced turn was Straight.
    pub fn verify(&self, grid: GridConfig) -> ServiceResult<()> {
        let bad = |m: String| ServiceError::BadRequest(format!("round {}: {m}", self.round));
        if self.actions[0].len() != self.actions[1].len() || self.forced.len() != self.actions[0].len() {
            return Err(bad("action and forced lists differ in length".into()));
        }
        for (i, (&f, &a)) in self.forced.iter().zip(&self.actions[0]).enumerate() {
            if f && a != Action::Straight {
                return Err(bad(format!("turn {i} is marked forced but moved {}", a.name())));
            }
        }
        self.to_episode(grid).verify(grid).map_err(|e| bad(e.to_string()))
    }
}

/// Reads a log, skipping blank lines. Errors name the offending line.
pub fn read_log(reader: impl BufRead) -> ServiceResult<Vec<RoundLog>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| ServiceError::Internal(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| ServiceError::BadRequest(format!("line {}: {e}", i + 1)))?;
        out.push(entry);
    }
    Ok(out)
}
