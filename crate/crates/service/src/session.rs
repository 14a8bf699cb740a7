//! Game sessions between a human (bottom seat) and a frozen opponent.
//!
//! All time-dependent operations take the current time explicitly, so the
//! server clock is the only authority on deadlines.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use corridor_core::metrics::success_rates;
use corridor_core::training::Player;
use corridor_core::{Action, EnvState, GridConfig, Seat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ServiceError, ServiceResult};
use crate::log::RoundLog;
use crate::protocol::{
    Cell, Created, GridInfo, Moves, NextRound, Positions, RoundOutcome, RoundStatus, Scores, SessionReport,
    TurnRef, TurnResult,
};

pub const DEFAULT_ROUNDS: usize = 100;
pub const DEFAULT_TURN_MS: u64 = 5_000;
pub const MAX_ROUNDS: usize = 10_000;

const HUMAN: usize = 0;
const AGENT: usize = 1;

/// A shared, read-only opponent policy.
pub type Opponent = Arc<Player>;

pub struct Session {
    id: String,
    opponent: Opponent,
    grid: GridConfig,
    turn_ms: u64,
    rounds_total: usize,
    round: usize,
    state: EnvState,
    start_cols: [usize; 2],
    traj: [Vec<usize>; 2],
    actions: [Vec<Action>; 2],
    forced: Vec<bool>,
    deadline_ms: u64,
    score: u32,
    finished: bool,
    rng: ChaCha8Rng,
    log: Vec<RoundLog>,
    sink: Option<Box<dyn Write + Send>>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.id)
            .field("round", &self.round)
            .field("turn", &self.state.turn)
            .field("finished", &self.finished)
            .finish_non_exhaustive()
    }
}

impl Session {
    pub fn new(
        id: String,
        opponent: Opponent,
        grid: GridConfig,
        rounds_total: usize,
        seed: u64,
        turn_ms: u64,
        now_ms: u64,
    ) -> ServiceResult<Session> {
        if rounds_total == 0 || rounds_total > MAX_ROUNDS {
            return Err(ServiceError::BadRequest(format!("rounds must lie in [1, {MAX_ROUNDS}]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = EnvState::reset(grid, &mut rng);
        let mut s = Session {
            id,
            opponent,
            grid,
            turn_ms,
            rounds_total,
            round: 0,
            state,
            start_cols: [0; 2],
            traj: [Vec::new(), Vec::new()],
            actions: [Vec::new(), Vec::new()],
            forced: Vec::new(),
            deadline_ms: now_ms + turn_ms,
            score: 0,
            finished: false,
            rng,
            log: Vec::new(),
            sink: None,
        };
        s.begin_round(state);
        Ok(s)
    }

    /// Appends one JSON line per completed round to `sink`.
    pub fn with_sink(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.sink = Some(sink);
        self
    }

    fn begin_round(&mut self, state: EnvState) {
        self.state = state;
        self.start_cols = [state.p1_col, state.p2_col];
        self.traj = [vec![state.p1_col], vec![state.p2_col]];
        self.actions = [Vec::new(), Vec::new()];
        self.forced.clear();
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn turn(&self) -> usize {
        self.state.turn
    }

    pub fn deadline_ms(&self) -> u64 {
        self.deadline_ms
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn log(&self) -> &[RoundLog] {
        &self.log
    }

    fn positions(&self) -> Positions {
        Positions {
            you: Cell { row: self.state.p1_row(), col: self.state.p1_col },
            opponent: Cell { row: self.state.p2_row(), col: self.state.p2_col },
        }
    }

    pub fn created(&self) -> Created {
        Created {
            session_id: self.id.clone(),
            grid: GridInfo { rows: self.grid.rows, cols: self.grid.cols, turns: self.grid.turns },
            round: self.round,
            rounds_total: self.rounds_total,
            your_objective: self.state.p1_objective,
            positions: self.positions(),
            deadline_ms: self.deadline_ms,
        }
    }

    fn agent_action(&mut self) -> Action {
        let s = &self.state;
        match self.opponent.as_ref() {
            Player::Baseline(b) => b.act(s.p2_col, s.p1_col, s.p2_objective, s.p1_objective, self.grid.cols, &mut self.rng),
            Player::Learner(table) => {
                let key = table.key(s.p2_objective, &self.traj[AGENT], &self.traj[HUMAN]);
                table.select_action(&key, 0.0, &mut self.rng)
            }
        }
    }

    fn resolve(&mut self, human: Action, forced: bool, now_ms: u64) -> ServiceResult<TurnResult> {
        let agent = self.agent_action();
        self.state = self.state.step(human, agent).map_err(|e| ServiceError::Internal(e.to_string()))?;
        self.actions[HUMAN].push(human);
        self.actions[AGENT].push(agent);
        self.forced.push(forced);
        self.traj[HUMAN].push(self.state.p1_col);
        self.traj[AGENT].push(self.state.p2_col);

        let positions = self.positions();
        let round = self.round;
        let turn = self.state.turn;
        let mut result = TurnResult {
            session_id: self.id.clone(),
            moves: Moves { you: human, opponent: agent },
            positions,
            round_status: RoundStatus {
                round,
                turn,
                rounds_total: self.rounds_total,
                round_over: false,
                session_over: false,
            },
            scores: None,
            outcome: None,
            next_round: None,
            forced,
            deadline_ms: None,
        };

        if self.state.is_terminal() {
            let outcome = self.state.outcome().map_err(|e| ServiceError::Internal(e.to_string()))?;
            let entry = RoundLog {
                session_id: self.id.clone(),
                round,
                objectives: [self.state.p1_objective, self.state.p2_objective],
                start_cols: self.start_cols,
                actions: self.actions.clone(),
                forced: self.forced.clone(),
                final_cols: [self.state.p1_col, self.state.p2_col],
                outcome,
                success: [outcome.satisfies(self.state.p1_objective), outcome.satisfies(self.state.p2_objective)],
            };
            if entry.success[HUMAN] {
                self.score += 1;
            }
            if let Some(sink) = self.sink.as_mut() {
                let line = serde_json::to_string(&entry).map_err(|e| ServiceError::Internal(e.to_string()))?;
                writeln!(sink, "{line}").and_then(|_| sink.flush()).map_err(|e| ServiceError::Internal(e.to_string()))?;
            }
            result.outcome = Some(RoundOutcome { outcome, you_succeeded: entry.success[HUMAN] });
            result.scores = Some(Scores { you: self.score });
            result.round_status.round_over = true;
            self.log.push(entry);

            if self.round + 1 < self.rounds_total {
                self.round += 1;
                let next = EnvState::reset(self.grid, &mut self.rng);
                self.begin_round(next);
                result.next_round =
                    Some(NextRound { round: self.round, your_objective: next.p1_objective, positions: self.positions() });
            } else {
                self.finished = true;
                result.round_status.session_over = true;
            }
        }
        if !self.finished {
            self.deadline_ms = now_ms + self.turn_ms;
            result.deadline_ms = Some(self.deadline_ms);
        }
        Ok(result)
    }

    /// Applies Straight for the human if the deadline has passed.
    pub fn tick(&mut self, now_ms: u64) -> ServiceResult<Option<TurnResult>> {
        if self.finished || now_ms <= self.deadline_ms {
            return Ok(None);
        }
        self.resolve(Action::Straight, true, now_ms).map(Some)
    }

    /// Resolves the current turn with the human's action. A late action is
    /// rejected after the forced Straight has been applied; the forced turn
    /// travels in the error.
    pub fn submit(&mut self, action: Action, turn: Option<TurnRef>, now_ms: u64) -> ServiceResult<TurnResult> {
        if self.finished {
            return Err(ServiceError::Finished);
        }
        if let Some(forced) = self.tick(now_ms)? {
            return Err(ServiceError::Timeout(Box::new(forced)));
        }
        if let Some(t) = turn {
            if t.round != self.round || t.turn != self.state.turn {
                return Err(ServiceError::Conflict(format!(
                    "action for round {} turn {} but round {} turn {} is pending",
                    t.round, t.turn, self.round, self.state.turn
                )));
            }
        }
        self.resolve(action, false, now_ms)
    }

    pub fn report(&self) -> SessionReport {
        let records: Vec<_> = self.log.iter().map(|r| r.to_episode(self.grid)).collect();
        let rates = success_rates(&records, Seat::P1).unwrap_or_default();
        let collaborative = records.iter().filter(|r| r.is_collaborative()).count();
        SessionReport {
            session_id: self.id.clone(),
            rounds_completed: records.len(),
            collaborative_rounds: collaborative,
            competitive_rounds: records.len() - collaborative,
            score: self.score,
            srcp: rates.srcp,
            srcl: rates.srcl,
            srp: rates.srp,
            srm: rates.srm,
        }
    }
}

/// Owns every live session. Each session sits behind its own lock, so
/// requests for one session are serialised while others proceed.
pub struct SessionManager {
    opponents: HashMap<String, Opponent>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    grid: GridConfig,
    turn_ms: u64,
    log_dir: Option<std::path::PathBuf>,
    ids: Mutex<ChaCha8Rng>,
}

impl SessionManager {
    pub fn new(opponents: HashMap<String, Opponent>, grid: GridConfig) -> SessionManager {
        SessionManager {
            opponents,
            sessions: Mutex::new(HashMap::new()),
            grid,
            turn_ms: DEFAULT_TURN_MS,
            log_dir: None,
            ids: Mutex::new(ChaCha8Rng::from_entropy()),
        }
    }

    pub fn with_turn_ms(mut self, turn_ms: u64) -> Self {
        self.turn_ms = turn_ms;
        self
    }

    /// Writes each session's round log to `<dir>/<session id>.jsonl`.
    pub fn with_log_dir(mut self, dir: impl Into<std::path::PathBuf>) -> Self {
        self.log_dir = Some(dir.into());
        self
    }

    pub fn slots(&self) -> Vec<String> {
        let mut v: Vec<String> = self.opponents.keys().cloned().collect();
        v.sort();
        v
    }

    pub fn create(&self, slot: &str, rounds: Option<usize>, seed: Option<u64>, now_ms: u64) -> ServiceResult<Created> {
        let opponent = self
            .opponents
            .get(slot)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("no opponent in slot {slot:?}")))?;
        let (id, default_seed) = {
            let mut rng = self.ids.lock().expect("id generator lock");
            (format!("{:016x}", rng.gen::<u64>()), rng.gen::<u64>())
        };
        let mut session = Session::new(
            id.clone(),
            opponent,
            self.grid,
            rounds.unwrap_or(DEFAULT_ROUNDS),
            seed.unwrap_or(default_seed),
            self.turn_ms,
            now_ms,
        )?;
        if let Some(dir) = &self.log_dir {
            let file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(dir.join(format!("{id}.jsonl")))
                .map_err(|e| ServiceError::Internal(format!("cannot open result log: {e}")))?;
            session = session.with_sink(Box::new(file));
        }
        let created = session.created();
        self.sessions.lock().expect("session map lock").insert(id, Arc::new(Mutex::new(session)));
        Ok(created)
    }

    fn get(&self, id: &str) -> ServiceResult<Arc<Mutex<Session>>> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("unknown session {id:?}")))
    }

    /// Runs `f` with exclusive access to the session. A session already in
    /// use by another request reports a conflict instead of waiting.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> ServiceResult<T>) -> ServiceResult<T> {
        let session = self.get(id)?;
        let mut guard = match session.try_lock() {
            Ok(g) => g,
            Err(std::sync::TryLockError::WouldBlock) => {
                return Err(ServiceError::Conflict("another action for this session is in flight".into()))
            }
            Err(std::sync::TryLockError::Poisoned(p)) => p.into_inner(),
        };
        f(&mut guard)
    }

    pub fn act(&self, id: &str, action: Action, turn: Option<TurnRef>, now_ms: u64) -> ServiceResult<TurnResult> {
        self.with_session(id, |s| s.submit(action, turn, now_ms))
    }

    pub fn tick(&self, id: &str, now_ms: u64) -> ServiceResult<Option<TurnResult>> {
        self.with_session(id, |s| s.tick(now_ms))
    }

    pub fn report(&self, id: &str) -> ServiceResult<SessionReport> {
        self.with_session(id, |s| Ok(s.report()))
    }

    pub fn deadline(&self, id: &str) -> ServiceResult<Option<u64>> {
        self.with_session(id, |s| Ok((!s.is_finished()).then(|| s.deadline_ms())))
    }

    /// Ticks every session that is not busy. Returns the forced turns.
    pub fn tick_all(&self, now_ms: u64) -> Vec<TurnResult> {
        let sessions: Vec<_> = self.sessions.lock().expect("session map lock").values().cloned().collect();
        sessions
            .iter()
            .filter_map(|s| s.try_lock().ok().and_then(|mut s| s.tick(now_ms).ok().flatten()))
            .collect()
    }

    pub fn round_log(&self, id: &str) -> ServiceResult<Vec<RoundLog>> {
        self.with_session(id, |s| Ok(s.log().to_vec()))
    }
}
