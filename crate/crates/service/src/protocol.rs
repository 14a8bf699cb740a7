//! JSON messages exchanged with game clients.
//!
//! Every message is an object with a `type` field. Clients send `create`,
//! `act` and `report`; the server answers with `created`, `turn`, `report`
//! or `error`. Timestamps are epoch milliseconds. Nothing here names the
//! opponent's kind or reveals its objective.

use corridor_core::{Action, Objective, Outcome};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Create(CreateRequest),
    Act(ActRequest),
    Report(ReportRequest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateRequest {
    pub opponent_slot: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActRequest {
    pub session_id: String,
    pub action: Action,
    /// The turn this action answers. A mismatch is rejected as a duplicate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn: Option<TurnRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRef {
    pub round: usize,
    pub turn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRequest {
    pub session_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Created(Created),
    Turn(TurnResult),
    Report(SessionReport),
    Error(ErrorBody),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

/// The human starts on row 0 and the opponent on the last row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Positions {
    pub you: Cell,
    pub opponent: Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridInfo {
    pub rows: usize,
    pub cols: usize,
    pub turns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub grid: GridInfo,
    pub round: usize,
    pub rounds_total: usize,
    pub your_objective: Objective,
    pub positions: Positions,
    pub deadline_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Moves {
    pub you: Action,
    pub opponent: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundStatus {
    /// Round the resolved turn belonged to.
    pub round: usize,
    /// Turns resolved so far in that round.
    pub turn: usize,
    pub rounds_total: usize,
    pub round_over: bool,
    pub session_over: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scores {
    pub you: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub outcome: Outcome,
    pub you_succeeded: bool,
}

/// The layout of a freshly started round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextRound {
    pub round: usize,
    pub your_objective: Objective,
    pub positions: Positions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResult {
    pub session_id: String,
    pub moves: Moves,
    /// Positions after the move, before any new round starts.
    pub positions: Positions,
    pub round_status: RoundStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Scores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<RoundOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_round: Option<NextRound>,
    pub forced: bool,
    /// Deadline for the next turn; absent once the session is over.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_id: String,
    pub rounds_completed: usize,
    pub collaborative_rounds: usize,
    pub competitive_rounds: usize,
    pub score: u32,
    pub srcp: Option<f64>,
    pub srcl: Option<f64>,
    pub srp: Option<f64>,
    pub srm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    /// For `timeout`: the turn that was resolved with a forced Straight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced_turn: Option<Box<TurnResult>>,
}
