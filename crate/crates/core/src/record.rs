//! Per-episode logs and their replay check.

use serde::{Deserialize, Serialize};

use crate::agent::StepInfo;
use crate::env::{Action, EnvState, GridConfig, Objective, Outcome, Seat};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub turn: usize,
    /// Columns before the move, indexed by seat.
    pub cols: [usize; 2],
    pub actions: [Action; 2],
    /// Entropy terms for learning agents; `None` for rule-based players.
    pub info: [Option<StepInfo>; 2],
    pub env_reward: [f64; 2],
    pub shaped_reward: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub objectives: [Objective; 2],
    pub start_cols: [usize; 2],
    pub steps: Vec<StepRecord>,
    pub final_cols: [usize; 2],
    pub outcome: Outcome,
    pub success: [bool; 2],
}

impl EpisodeRecord {
    pub fn is_collaborative(&self) -> bool {
        self.objectives[0] == self.objectives[1]
    }

    pub fn objective(&self, seat: Seat) -> Objective {
        self.objectives[seat.index()]
    }

    pub fn succeeded(&self, seat: Seat) -> bool {
        self.success[seat.index()]
    }

    /// Column trajectory of a seat, including the final column.
    pub fn trajectory(&self, seat: Seat) -> Vec<usize> {
        let mut traj: Vec<usize> = self.steps.iter().map(|s| s.cols[seat.index()]).collect();
        traj.push(self.final_cols[seat.index()]);
        traj
    }

    /// Re-plays the logged actions through the environment and checks every
    /// recorded column, the outcome, and the success flags.
    pub fn verify(&self, grid: GridConfig) -> Result<()> {
        let mut state = EnvState {
            config: grid,
            turn: 0,
            p1_col: self.start_cols[0],
            p2_col: self.start_cols[1],
            p1_objective: self.objectives[0],
            p2_objective: self.objectives[1],
        };
        if self.steps.len() != grid.turns {
            return Err(invalid(format!("episode has {} steps, expected {}", self.steps.len(), grid.turns)));
        }
        for step in &self.steps {
            if step.turn != state.turn || step.cols != [state.p1_col, state.p2_col] {
                return Err(invalid(format!("step {} columns disagree with replay", step.turn)));
            }
            state = state.step(step.actions[0], step.actions[1])?;
        }
        if self.final_cols != [state.p1_col, state.p2_col] {
            return Err(invalid("final columns disagree with replay"));
        }
        let outcome = state.outcome()?;
        if outcome != self.outcome {
            return Err(invalid(format!("recorded outcome {:?}, replay gives {outcome:?}", self.outcome)));
        }
        for seat in Seat::BOTH {
            if outcome.satisfies(state.objective(seat)) != self.success[seat.index()] {
                return Err(invalid(format!("success flag for {seat} disagrees with replay")));
            }
        }
        Ok(())
    }
}
