//! The corridor dilemma: two players start at opposite ends of a narrow grid,
//! each secretly wants to meet or pass the other, and both advance one row per
//! turn while choosing a lateral move.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, violation, Error, Result};

/// Reward for achieving the objective at the final row.
pub const SUCCESS_REWARD: f64 = 10.0;
/// Reward for failing the objective at the final row.
pub const FAILURE_REWARD: f64 = -10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridConfig {
    pub rows: usize,
    pub cols: usize,
    pub turns: usize,
}

impl GridConfig {
    pub fn new(cols: usize, turns: usize) -> Result<Self> {
        let config = Self { rows: 2 * turns + 1, cols, turns };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.turns == 0 {
            return Err(invalid("grid needs at least one turn"));
        }
        if self.rows != 2 * self.turns + 1 {
            return Err(invalid(format!(
                "rows must equal 2*turns+1 ({}), got {}",
                2 * self.turns + 1,
                self.rows
            )));
        }
        if self.cols < 2 || self.cols > u8::MAX as usize {
            return Err(invalid(format!("cols must lie in [2, 255], got {}", self.cols)));
        }
        Ok(())
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { rows: 11, cols: 5, turns: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Seat {
    P1,
    P2,
}

impl Seat {
    pub const BOTH: [Seat; 2] = [Seat::P1, Seat::P2];

    pub fn index(self) -> usize {
        match self {
            Seat::P1 => 0,
            Seat::P2 => 1,
        }
    }

    pub fn other(self) -> Seat {
        match self {
            Seat::P1 => Seat::P2,
            Seat::P2 => Seat::P1,
        }
    }
}

impl fmt::Display for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Seat::P1 => "P1",
            Seat::P2 => "P2",
        })
    }
}

impl FromStr for Seat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P1" | "p1" => Ok(Seat::P1),
            "P2" | "p2" => Ok(Seat::P2),
            other => Err(invalid(format!("unknown seat {other:?}"))),
        }
    }
}

/// Lateral move. Deltas are in absolute column coordinates for both seats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Left,
    Straight,
    Right,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Left, Action::Straight, Action::Right];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        match self {
            Action::Left => 0,
            Action::Straight => 1,
            Action::Right => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn delta(self) -> i64 {
        match self {
            Action::Left => -1,
            Action::Straight => 0,
            Action::Right => 1,
        }
    }

    /// Column reached from `col`; moves into a wall leave the column unchanged.
    pub fn apply(self, col: usize, cols: usize) -> usize {
        (col as i64 + self.delta()).clamp(0, cols as i64 - 1) as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Left => "left",
            Action::Straight => "straight",
            Action::Right => "right",
        }
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Action::Left),
            "straight" => Ok(Action::Straight),
            "right" => Ok(Action::Right),
            other => Err(invalid(format!("unknown action {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Meet,
    Pass,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Meet => "meet",
            Objective::Pass => "pass",
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Objective {
        if rng.gen_bool(0.5) {
            Objective::Meet
        } else {
            Objective::Pass
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "meet" => Ok(Objective::Meet),
            "pass" => Ok(Objective::Pass),
            other => Err(invalid(format!("unknown objective {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Meet,
    Pass,
}

impl Outcome {
    pub fn satisfies(self, objective: Objective) -> bool {
        matches!(
            (self, objective),
            (Outcome::Meet, Objective::Meet) | (Outcome::Pass, Objective::Pass)
        )
    }

    /// Meet iff both players end in the same column.
    pub fn from_columns(p1_col: usize, p2_col: usize) -> Outcome {
        if p1_col == p2_col {
            Outcome::Meet
        } else {
            Outcome::Pass
        }
    }
}

/// Immutable game state; `step` returns a new value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnvState {
    pub config: GridConfig,
    pub turn: usize,
    pub p1_col: usize,
    pub p2_col: usize,
    pub p1_objective: Objective,
    pub p2_objective: Objective,
}

impl EnvState {
    /// Uniform start columns and independent fair-coin objectives.
    pub fn reset<R: Rng + ?Sized>(config: GridConfig, rng: &mut R) -> EnvState {
        let p1_col = rng.gen_range(0..config.cols);
        let p2_col = rng.gen_range(0..config.cols);
        let p1_objective = Objective::random(rng);
        let p2_objective = Objective::random(rng);
        EnvState { config, turn: 0, p1_col, p2_col, p1_objective, p2_objective }
    }

    pub fn reset_seeded(config: GridConfig, seed: u64) -> EnvState {
        EnvState::reset(config, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn p1_row(&self) -> usize {
        self.turn
    }

    pub fn p2_row(&self) -> usize {
        self.config.rows - 1 - self.turn
    }

    pub fn col(&self, seat: Seat) -> usize {
        match seat {
            Seat::P1 => self.p1_col,
            Seat::P2 => self.p2_col,
        }
    }

    pub fn row(&self, seat: Seat) -> usize {
        match seat {
            Seat::P1 => self.p1_row(),
            Seat::P2 => self.p2_row(),
        }
    }

    pub fn objective(&self, seat: Seat) -> Objective {
        match seat {
            Seat::P1 => self.p1_objective,
            Seat::P2 => self.p2_objective,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.turn == self.config.turns
    }

    /// Simultaneous move of both players.
    pub fn step(&self, a1: Action, a2: Action) -> Result<EnvState> {
        if self.is_terminal() {
            return Err(violation("step called on a terminal state"));
        }
        let cols = self.config.cols;
        Ok(EnvState {
            turn: self.turn + 1,
            p1_col: a1.apply(self.p1_col, cols),
            p2_col: a2.apply(self.p2_col, cols),
            ..*self
        })
    }

    pub fn outcome(&self) -> Result<Outcome> {
        if !self.is_terminal() {
            return Err(violation("outcome requested before the final row"));
        }
        Ok(Outcome::from_columns(self.p1_col, self.p2_col))
    }

    /// Zero before the final row; ±10 at the final row depending on whether
    /// the outcome matches the seat's objective.
    pub fn objective_reward(&self, seat: Seat) -> f64 {
        match self.outcome() {
            Err(_) => 0.0,
            Ok(outcome) if outcome.satisfies(self.objective(seat)) => SUCCESS_REWARD,
            Ok(_) => FAILURE_REWARD,
        }
    }

    pub fn is_collaborative(&self) -> bool {
        self.p1_objective == self.p2_objective
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(turn: usize, p1: usize, p2: usize, o1: Objective, o2: Objective) -> EnvState {
        EnvState {
            config: GridConfig::default(),
            turn,
            p1_col: p1,
            p2_col: p2,
            p1_objective: o1,
            p2_objective: o2,
        }
    }

    #[test]
    fn grid_config_validation() {
        assert_eq!(GridConfig::new(5, 5).unwrap(), GridConfig::default());
        assert!(GridConfig { rows: 10, cols: 5, turns: 5 }.validate().is_err());
        assert!(GridConfig::new(1, 5).is_err());
        assert!(GridConfig::new(5, 0).is_err());
    }

    #[test]
    fn reset_is_deterministic_and_well_placed() {
        let a = EnvState::reset_seeded(GridConfig::default(), 42);
        let b = EnvState::reset_seeded(GridConfig::default(), 42);
        assert_eq!(a, b);
        assert_eq!(a.turn, 0);
        assert_eq!(a.p1_row(), 0);
        assert_eq!(a.p2_row(), 10);
    }

    #[test]
    fn start_columns_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut counts = [[0usize; 5]; 2];
        for _ in 0..n {
            let s = EnvState::reset(GridConfig::default(), &mut rng);
            counts[0][s.p1_col] += 1;
            counts[1][s.p2_col] += 1;
        }
        for seat in counts {
            for c in seat {
                assert!((c as f64 / n as f64 - 0.2).abs() < 0.01);
            }
        }
    }

    #[test]
    fn step_moves_and_clamps() {
        let s = state(0, 2, 0, Objective::Meet, Objective::Pass);
        let t = s.step(Action::Straight, Action::Left).unwrap();
        assert_eq!((t.p1_col, t.p2_col, t.turn), (2, 0, 1));
        let s = state(0, 4, 3, Objective::Meet, Objective::Pass);
        let t = s.step(Action::Right, Action::Right).unwrap();
        assert_eq!((t.p1_col, t.p2_col), (4, 4));
    }

    #[test]
    fn final_step_reaches_middle_row() {
        let s = state(4, 1, 1, Objective::Meet, Objective::Meet);
        let t = s.step(Action::Straight, Action::Straight).unwrap();
        assert!(t.is_terminal());
        assert_eq!((t.p1_row(), t.p2_row()), (5, 5));
        assert!(matches!(t.step(Action::Left, Action::Left), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn outcomes_and_rewards() {
        let meet = state(5, 3, 3, Objective::Meet, Objective::Pass);
        assert_eq!(meet.outcome().unwrap(), Outcome::Meet);
        assert_eq!(meet.objective_reward(Seat::P1), 10.0);
        assert_eq!(meet.objective_reward(Seat::P2), -10.0);
        let pass = state(5, 0, 4, Objective::Meet, Objective::Meet);
        assert_eq!(pass.outcome().unwrap(), Outcome::Pass);
        assert_eq!(pass.objective_reward(Seat::P1), -10.0);
        let mid = state(2, 0, 4, Objective::Meet, Objective::Meet);
        assert!(mid.outcome().is_err());
        assert_eq!(mid.objective_reward(Seat::P1), 0.0);
        assert_eq!(mid.objective_reward(Seat::P2), 0.0);
    }

    #[test]
    fn random_play_meets_about_a_fifth_of_the_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut meets = 0;
        for _ in 0..n {
            let mut s = EnvState::reset(GridConfig::default(), &mut rng);
            let mut steps = 0;
            while !s.is_terminal() {
                let a1 = Action::ALL[rng.gen_range(0..3)];
                let a2 = Action::ALL[rng.gen_range(0..3)];
                s = s.step(a1, a2).unwrap();
                assert!(s.p1_col < 5 && s.p2_col < 5);
                steps += 1;
            }
            assert_eq!(steps, 5);
            if s.outcome().unwrap() == Outcome::Meet {
                meets += 1;
            }
        }
        assert!((meets as f64 / n as f64 - 0.2).abs() < 0.015);
    }
}
