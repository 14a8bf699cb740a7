//! History-augmented tabular Q-learning.
//!
//! The table is indexed by the agent's own column history and the opponent's
//! observed column history. Alongside the entries it keeps, per ego history,
//! the running sum of Q-values over every stored opponent history, so the
//! opponent-blind (marginal) policy costs one lookup.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::env::{Action, GridConfig, Objective, Seat};
use crate::error::{invalid, Error, Result};
use crate::info::{self, ActionDistribution, TransferEntropyBits};

pub const DEFAULT_ALPHA: f64 = 0.8;
pub const DEFAULT_GAMMA: f64 = 0.8;
pub const DEFAULT_HISTORY_LEN: usize = 5;

type QRow = [f64; Action::COUNT];

/// A column trajectory, oldest first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct History(SmallVec<[u8; 8]>);

impl History {
    pub fn from_cols(cols: &[usize]) -> History {
        History(cols.iter().map(|c| *c as u8).collect())
    }

    /// Keeps the most recent `history_len + 1` columns of a trajectory.
    pub fn window(trajectory: &[usize], history_len: usize) -> History {
        let start = trajectory.len().saturating_sub(history_len + 1);
        History::from_cols(&trajectory[start..])
    }

    pub fn cols(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|c| *c as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().map(|c| *c as usize)
    }

    /// Non-empty, in range, and every consecutive pair differs by at most one.
    pub fn is_walk(&self, cols: usize) -> bool {
        !self.0.is_empty()
            && self.0.iter().all(|c| (*c as usize) < cols)
            && self.0.windows(2).all(|w| w[0].abs_diff(w[1]) <= 1)
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for History {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let cols = s
            .split(',')
            .map(|c| c.parse::<u8>().map_err(|_| invalid(format!("bad column {c:?}"))))
            .collect::<Result<SmallVec<[u8; 8]>>>()?;
        Ok(History(cols))
    }
}

/// The ego part of a table key: everything except the opponent's history.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EgoHistoryKey {
    pub seat: Seat,
    pub turn: usize,
    pub objective: Objective,
    pub ego_cols: History,
}

/// Full table key: seat, turn, own objective and both column histories.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointHistoryKey {
    pub seat: Seat,
    pub turn: usize,
    pub objective: Objective,
    pub ego_cols: History,
    pub opp_cols: History,
}

impl JointHistoryKey {
    /// Builds the key at the last entry of both trajectories (turn = len - 1),
    /// truncating each to `history_len + 1` columns.
    pub fn from_trajectories(
        seat: Seat,
        objective: Objective,
        ego_traj: &[usize],
        opp_traj: &[usize],
        history_len: usize,
    ) -> JointHistoryKey {
        debug_assert_eq!(ego_traj.len(), opp_traj.len());
        JointHistoryKey {
            seat,
            turn: ego_traj.len() - 1,
            objective,
            ego_cols: History::window(ego_traj, history_len),
            opp_cols: History::window(opp_traj, history_len),
        }
    }

    pub fn ego(&self) -> EgoHistoryKey {
        EgoHistoryKey {
            seat: self.seat,
            turn: self.turn,
            objective: self.objective,
            ego_cols: self.ego_cols.clone(),
        }
    }

    pub fn validate(&self, grid: &GridConfig, history_len: usize) -> Result<()> {
        let expected = self.turn.min(history_len) + 1;
        if self.turn >= grid.turns {
            return Err(invalid(format!("turn {} outside [0, {})", self.turn, grid.turns)));
        }
        for (name, h) in [("ego", &self.ego_cols), ("opponent", &self.opp_cols)] {
            if h.len() != expected {
                return Err(invalid(format!(
                    "{name} history has {} entries, expected {expected}",
                    h.len()
                )));
            }
            if !h.is_walk(grid.cols) {
                return Err(invalid(format!("{name} history {h} is not a reachable walk")));
            }
        }
        Ok(())
    }
}

/// What the shaping term rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    /// `φ · TE / log2|A|`
    Te,
    /// `-φ · H⁺ / log2|A|`
    Entropy,
    /// Objective reward only.
    None,
}

impl RewardMode {
    pub fn name(self) -> &'static str {
        match self {
            RewardMode::Te => "te",
            RewardMode::Entropy => "entropy",
            RewardMode::None => "none",
        }
    }
}

impl FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "te" => Ok(RewardMode::Te),
            "entropy" | "h" => Ok(RewardMode::Entropy),
            "none" => Ok(RewardMode::None),
            other => Err(Error::ContractViolation(format!("unknown reward mode {other:?}"))),
        }
    }
}

/// How φ is chosen for each training episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiSchedule {
    Fixed,
    /// φ drawn uniformly from {0, +10, -10} at the start of every episode.
    Mixed,
}

pub const MIXED_PHI_CHOICES: [f64; 3] = [0.0, 10.0, -10.0];

/// Divisor used when averaging Q over opponent histories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Marginalization {
    /// Every reachable opponent history counts; absent entries contribute 0.
    All,
    /// Only opponent histories with stored entries count.
    Visited,
}

impl FromStr for Marginalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Marginalization::All),
            "visited" => Ok(Marginalization::Visited),
            other => Err(invalid(format!("unknown marginalization {other:?}"))),
        }
    }
}

impl fmt::Display for Marginalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Marginalization::All => "all",
            Marginalization::Visited => "visited",
        })
    }
}

/// Entropies and transfer entropy at one decision point, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub h_plus: f64,
    pub h_minus: f64,
    pub te: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct MarginalSum {
    sums: QRow,
    present: u32,
}

/// Number of column walks of each length (index = length) over `cols` columns.
pub(crate) fn walk_counts(cols: usize, max_len: usize) -> Vec<u64> {
    let mut counts = vec![0u64; max_len + 1];
    let mut ways = vec![1u64; cols];
    for count in counts.iter_mut().skip(1) {
        *count = ways.iter().sum();
        ways = (0..cols)
            .map(|c| {
                let lo = c.saturating_sub(1);
                let hi = (c + 1).min(cols - 1);
                ways[lo..=hi].iter().sum()
            })
            .collect();
    }
    counts
}

/// Lexicographic enumeration of every column walk of a fixed length.
#[derive(Debug, Clone)]
pub struct WalkIter {
    current: Option<Vec<usize>>,
    cols: usize,
}

impl WalkIter {
    pub fn new(len: usize, cols: usize) -> WalkIter {
        let current = (len > 0 && cols > 0).then(|| vec![0; len]);
        WalkIter { current, cols }
    }
}

impl Iterator for WalkIter {
    type Item = History;

    fn next(&mut self) -> Option<History> {
        let cur = self.current.as_mut()?;
        let out = History::from_cols(cur);
        // Advance: bump the rightmost position that still has room, then
        // reset the tail to its smallest admissible values.
        let mut i = cur.len();
        let advanced = loop {
            if i == 0 {
                break false;
            }
            i -= 1;
            let upper = if i == 0 { self.cols - 1 } else { (cur[i - 1] + 1).min(self.cols - 1) };
            if cur[i] < upper {
                cur[i] += 1;
                for j in i + 1..cur.len() {
                    cur[j] = cur[j - 1].saturating_sub(1);
                }
                break true;
            }
        };
        if !advanced {
            self.current = None;
        }
        Some(out)
    }
}

/// All opponent histories the marginal averages over, with their count.
pub fn enumerate_opponent_histories(ego: &EgoHistoryKey, grid: &GridConfig) -> (usize, WalkIter) {
    let len = ego.ego_cols.len();
    let m = walk_counts(grid.cols, len)[len] as usize;
    (m, WalkIter::new(len, grid.cols))
}

/// Sparse Q-table for one seat. Absent entries read as zero.
#[derive(Debug, Clone)]
pub struct SparseQTable {
    seat: Seat,
    phi: f64,
    schedule: PhiSchedule,
    mode: RewardMode,
    history_len: usize,
    grid: GridConfig,
    marginalization: Marginalization,
    entries: HashMap<JointHistoryKey, QRow>,
    marginals: HashMap<EgoHistoryKey, MarginalSum>,
    walk_counts: Vec<u64>,
}

impl PartialEq for SparseQTable {
    fn eq(&self, other: &Self) -> bool {
        self.seat == other.seat
            && self.phi.to_bits() == other.phi.to_bits()
            && self.schedule == other.schedule
            && self.mode == other.mode
            && self.history_len == other.history_len
            && self.grid == other.grid
            && self.marginalization == other.marginalization
            && self.entries.len() == other.entries.len()
            && self.entries.iter().all(|(k, row)| {
                other.entries.get(k).is_some_and(|o| {
                    row.iter().zip(o).all(|(a, b)| a.to_bits() == b.to_bits())
                })
            })
    }
}

impl SparseQTable {
    pub fn new(
        seat: Seat,
        phi: f64,
        mode: RewardMode,
        history_len: usize,
        grid: GridConfig,
    ) -> Result<SparseQTable> {
        grid.validate()?;
        if history_len == 0 || history_len > grid.turns {
            return Err(invalid(format!(
                "history length must lie in [1, {}], got {history_len}",
                grid.turns
            )));
        }
        if !phi.is_finite() {
            return Err(invalid(format!("phi must be finite, got {phi}")));
        }
        Ok(SparseQTable {
            seat,
            phi,
            schedule: PhiSchedule::Fixed,
            mode,
            history_len,
            grid,
            marginalization: Marginalization::All,
            entries: HashMap::new(),
            marginals: HashMap::new(),
            walk_counts: walk_counts(grid.cols, history_len + 1),
        })
    }

    pub fn with_schedule(mut self, schedule: PhiSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_marginalization(mut self, marginalization: Marginalization) -> Self {
        self.marginalization = marginalization;
        self
    }

    pub fn seat(&self) -> Seat {
        self.seat
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn set_phi(&mut self, phi: f64) {
        self.phi = phi;
    }

    pub fn schedule(&self) -> PhiSchedule {
        self.schedule
    }

    pub fn mode(&self) -> RewardMode {
        self.mode
    }

    pub fn history_len(&self) -> usize {
        self.history_len
    }

    pub fn grid(&self) -> GridConfig {
        self.grid
    }

    pub fn marginalization(&self) -> Marginalization {
        self.marginalization
    }

    /// Number of stored joint keys.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Key for this table's seat at the end of the given trajectories.
    pub fn key(&self, objective: Objective, ego_traj: &[usize], opp_traj: &[usize]) -> JointHistoryKey {
        JointHistoryKey::from_trajectories(self.seat, objective, ego_traj, opp_traj, self.history_len)
    }

    pub fn q_values(&self, key: &JointHistoryKey) -> QRow {
        self.entries.get(key).copied().unwrap_or_default()
    }

    pub fn q(&self, key: &JointHistoryKey, action: Action) -> f64 {
        self.q_values(key)[action.index()]
    }

    /// Stored entries in lexicographic key order.
    pub fn sorted_entries(&self) -> Vec<(&JointHistoryKey, &QRow)> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Softmax over the opponent-conditioned Q-values.
    pub fn policy_full(&self, key: &JointHistoryKey) -> ActionDistribution {
        info::softmax_finite(&self.q_values(key))
    }

    /// Number of opponent histories averaged over for this ego key.
    pub fn opponent_history_count(&self, ego: &EgoHistoryKey) -> usize {
        self.walk_counts.get(ego.ego_cols.len()).copied().unwrap_or_else(|| {
            walk_counts(self.grid.cols, ego.ego_cols.len())[ego.ego_cols.len()]
        }) as usize
    }

    /// `(1/m) Σ_opp Q(a, ego, opp)` for each action.
    pub fn marginal_q_values(&self, ego: &EgoHistoryKey) -> QRow {
        let Some(m) = self.marginals.get(ego) else {
            return QRow::default();
        };
        let divisor = match self.marginalization {
            Marginalization::All => self.opponent_history_count(ego) as f64,
            Marginalization::Visited => m.present.max(1) as f64,
        };
        m.sums.map(|s| s / divisor)
    }

    /// Softmax over Q-values averaged across opponent histories.
    pub fn policy_marginal(&self, ego: &EgoHistoryKey) -> ActionDistribution {
        info::softmax_finite(&self.marginal_q_values(ego))
    }

    pub fn step_info(&self, key: &JointHistoryKey) -> StepInfo {
        let h_plus = self.policy_full(key).entropy().bits();
        let h_minus = self.policy_marginal(&key.ego()).entropy().bits();
        StepInfo { h_plus, h_minus, te: h_minus - h_plus }
    }

    pub fn step_te(&self, key: &JointHistoryKey) -> TransferEntropyBits {
        TransferEntropyBits(self.step_info(key).te)
    }

    /// Objective reward plus the table's shaping term.
    pub fn shaped_reward(&self, key: &JointHistoryKey, env_reward: f64) -> f64 {
        self.shaped_reward_from(&self.step_info(key), env_reward)
    }

    /// As [`shaped_reward`](Self::shaped_reward) for an already computed step.
    pub fn shaped_reward_from(&self, step: &StepInfo, env_reward: f64) -> f64 {
        let max_bits = (Action::COUNT as f64).log2();
        match self.mode {
            RewardMode::Te => self.phi * step.te / max_bits + env_reward,
            RewardMode::Entropy => -self.phi * step.h_plus / max_bits + env_reward,
            RewardMode::None => env_reward,
        }
    }

    /// One temporal-difference step:
    /// `Q ← (1-α) Q + α (r + γ max_a' Q(next, a'))`, with zero bootstrap at
    /// the end of the episode. Returns the new Q-value.
    pub fn td_update(
        &mut self,
        key: &JointHistoryKey,
        action: Action,
        reward: f64,
        next: Option<&JointHistoryKey>,
        alpha: f64,
        gamma: f64,
    ) -> f64 {
        debug_assert!(alpha > 0.0 && alpha <= 1.0);
        debug_assert!((0.0..=1.0).contains(&gamma));
        let bootstrap = next
            .map(|k| self.q_values(k).into_iter().fold(f64::NEG_INFINITY, f64::max))
            .unwrap_or(0.0);
        let target = reward + gamma * bootstrap;

        let is_new = !self.entries.contains_key(key);
        let row = self.entries.entry(key.clone()).or_default();
        let old = row[action.index()];
        let new = (1.0 - alpha) * old + alpha * target;
        row[action.index()] = new;

        let marginal = self.marginals.entry(key.ego()).or_default();
        marginal.sums[action.index()] += new - old;
        if is_new {
            marginal.present += 1;
        }
        new
    }

    /// ε-greedy over the softmax policy: with probability ε a uniform action,
    /// otherwise a sample from the full policy.
    pub fn select_action<R: Rng + ?Sized>(&self, key: &JointHistoryKey, epsilon: f64, rng: &mut R) -> Action {
        if rng.gen::<f64>() < epsilon {
            return Action::ALL[rng.gen_range(0..Action::COUNT)];
        }
        let idx = self.policy_full(key).sample_index(rng.gen::<f64>());
        Action::ALL[idx]
    }

    /// Inserts a row directly, keeping the marginal sums in step.
    pub(crate) fn insert_row(&mut self, key: JointHistoryKey, row: QRow) {
        let marginal = self.marginals.entry(key.ego()).or_default();
        let old = self.entries.insert(key, row);
        match old {
            Some(old) => {
                for i in 0..Action::COUNT {
                    marginal.sums[i] += row[i] - old[i];
                }
            }
            None => {
                for (s, q) in marginal.sums.iter_mut().zip(row.iter()) {
                    *s += q;
                }
                marginal.present += 1;
            }
        }
    }

    /// Largest gap between the incrementally maintained marginal sums and a
    /// from-scratch recomputation.
    pub fn marginal_drift(&self) -> f64 {
        let mut fresh: HashMap<EgoHistoryKey, MarginalSum> = HashMap::new();
        for (key, row) in &self.entries {
            let m = fresh.entry(key.ego()).or_default();
            for (s, q) in m.sums.iter_mut().zip(row.iter()) {
                *s += q;
            }
            m.present += 1;
        }
        let mut drift: f64 = 0.0;
        for (ego, m) in &fresh {
            let kept = self.marginals.get(ego).copied().unwrap_or_default();
            if kept.present != m.present {
                return f64::INFINITY;
            }
            for i in 0..Action::COUNT {
                drift = drift.max((kept.sums[i] - m.sums[i]).abs());
            }
        }
        if fresh.len() != self.marginals.len() {
            return f64::INFINITY;
        }
        drift
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const LOG2_3: f64 = 1.584_962_500_721_156;

    fn table() -> SparseQTable {
        SparseQTable::new(Seat::P1, 10.0, RewardMode::Te, 5, GridConfig::default()).unwrap()
    }

    fn key(ego: &[usize], opp: &[usize]) -> JointHistoryKey {
        JointHistoryKey::from_trajectories(Seat::P1, Objective::Meet, ego, opp, 5)
    }

    fn brute_force_walks(len: usize, cols: usize) -> Vec<Vec<usize>> {
        // Every (start, moves) combination, clamped, deduplicated.
        let mut out = std::collections::BTreeSet::new();
        let moves = 3usize.pow(len as u32 - 1);
        for start in 0..cols {
            for code in 0..moves {
                let mut seq = vec![start];
                let mut c = code;
                for _ in 1..len {
                    let a = Action::ALL[c % 3];
                    c /= 3;
                    seq.push(a.apply(*seq.last().unwrap(), cols));
                }
                out.insert(seq);
            }
        }
        out.into_iter().collect()
    }

    #[test]
    fn walk_enumeration_matches_brute_force() {
        for cols in [2, 3, 5] {
            for len in 1..=6 {
                let brute = brute_force_walks(len, cols);
                let walks: Vec<Vec<usize>> = WalkIter::new(len, cols).map(|h| h.cols().collect()).collect();
                assert_eq!(walks, brute, "cols={cols} len={len}");
                assert_eq!(walk_counts(cols, len)[len] as usize, brute.len());
            }
        }
    }

    #[test]
    fn opponent_history_counts() {
        let grid = GridConfig::default();
        let ego0 = key(&[2], &[1]).ego();
        let (m, iter) = enumerate_opponent_histories(&ego0, &grid);
        assert_eq!(m, 5);
        assert_eq!(iter.count(), 5);
        let ego1 = key(&[2, 3], &[1, 1]).ego();
        let (m, iter) = enumerate_opponent_histories(&ego1, &grid);
        assert_eq!(m, 13);
        for h in iter {
            assert!(h.is_walk(5));
        }
    }

    #[test]
    fn history_window_truncates() {
        let k = JointHistoryKey::from_trajectories(Seat::P2, Objective::Pass, &[0, 1, 2, 3], &[4, 4, 3, 3], 1);
        assert_eq!(k.turn, 3);
        assert_eq!(k.ego_cols.to_string(), "2,3");
        assert_eq!(k.opp_cols.to_string(), "3,3");
        assert!(k.validate(&GridConfig::default(), 1).is_ok());
        assert!(k.validate(&GridConfig::default(), 5).is_err());
    }

    #[test]
    fn unvisited_key_is_uniform() {
        let t = table();
        let p = t.policy_full(&key(&[0], &[0]));
        for x in p.probs() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = t.policy_marginal(&key(&[0], &[0]).ego());
        for x in p.probs() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn full_policy_is_softmax_of_stored_values() {
        let mut t = table();
        let k = key(&[1, 2], &[3, 3]);
        t.insert_row(k.clone(), [0.0, 0.0, 1.0]);
        let p = t.policy_full(&k);
        assert!((p.probs()[2] - 0.576_116_884_765_829_1).abs() < 1e-14);
        let mut shifted = table();
        shifted.insert_row(k.clone(), [7.0, 7.0, 8.0]);
        for (a, b) in p.probs().iter().zip(shifted.policy_full(&k).probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn marginal_of_two_histories() {
        let mut t = table();
        let a = key(&[2, 2], &[0, 0]);
        let b = key(&[2, 2], &[4, 4]);
        t.insert_row(a.clone(), [10.0, 0.0, 0.0]);
        t.insert_row(b.clone(), [0.0, 10.0, 0.0]);
        let q = t.marginal_q_values(&a.ego());
        assert!((q[0] - 10.0 / 13.0).abs() < 1e-12);
        assert!((q[1] - 10.0 / 13.0).abs() < 1e-12);
        assert_eq!(q[2], 0.0);
        // Entropies evaluated independently at 30 digits:
        // H(softmax(10/13, 10/13, 0)) = 1.509384164082864
        // H(softmax(10, 0, 0))        = 0.001440836696834
        let te = t.step_te(&a).bits();
        assert!((te - (1.509_384_164_082_864 - 0.001_440_836_696_834)).abs() < 1e-12, "{te}");
    }

    #[test]
    fn marginal_equals_explicit_enumeration() {
        let mut t = table();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ego = [1, 2, 2];
        let (m, walks) = enumerate_opponent_histories(&key(&ego, &[0, 0, 0]).ego(), &t.grid());
        let walks: Vec<History> = walks.collect();
        for h in walks.iter().step_by(3) {
            let opp: Vec<usize> = h.cols().collect();
            let k = key(&ego, &opp);
            for a in Action::ALL {
                t.td_update(&k, a, rng.gen_range(-10.0..10.0), None, 0.8, 0.8);
            }
        }
        let mut explicit = [0.0; 3];
        for h in &walks {
            let opp: Vec<usize> = h.cols().collect();
            let q = t.q_values(&key(&ego, &opp));
            for i in 0..3 {
                explicit[i] += q[i] / m as f64;
            }
        }
        let kept = t.marginal_q_values(&key(&ego, &[0, 0, 0]).ego());
        for i in 0..3 {
            assert!((kept[i] - explicit[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_across_opponents_gives_zero_te_under_visited_divisor() {
        let mut t = table().with_marginalization(Marginalization::Visited);
        for opp in [[0, 0], [1, 2], [3, 4]] {
            t.insert_row(key(&[2, 2], &opp), [1.0, 4.0, -2.0]);
        }
        let k = key(&[2, 2], &[1, 2]);
        assert_eq!(t.step_te(&k).bits(), 0.0);
        for (a, b) in t.policy_full(&k).probs().iter().zip(t.policy_marginal(&k.ego()).probs()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn te_boundary_uniform_marginal_deterministic_full() {
        // A row whose marginal is exactly zero but whose own entry is peaked.
        let mut t = table();
        let k = key(&[2], &[0]);
        t.insert_row(k.clone(), [800.0, 0.0, 0.0]);
        t.insert_row(key(&[2], &[1]), [-800.0, 0.0, 0.0]);
        assert!((t.step_te(&k).bits() - LOG2_3).abs() < 1e-12);
    }

    #[test]
    fn shaped_reward_modes() {
        let mut t = table();
        let k = key(&[2], &[0]);
        t.insert_row(k.clone(), [800.0, 0.0, 0.0]);
        t.insert_row(key(&[2], &[1]), [-800.0, 0.0, 0.0]);
        assert!((t.shaped_reward(&k, 3.0) - 13.0).abs() < 1e-9);
        t.set_phi(-10.0);
        assert!((t.shaped_reward(&k, 3.0) + 7.0).abs() < 1e-9);
        t.set_phi(0.0);
        assert_eq!(t.shaped_reward(&k, 3.0), 3.0);

        let mut h = SparseQTable::new(Seat::P1, 10.0, RewardMode::Entropy, 5, GridConfig::default()).unwrap();
        assert!((h.shaped_reward(&k, 0.0) + 10.0).abs() < 1e-12);
        h.insert_row(k.clone(), [800.0, 0.0, 0.0]);
        assert!(h.shaped_reward(&k, 0.0).abs() < 1e-9);

        let n = SparseQTable::new(Seat::P1, 10.0, RewardMode::None, 5, GridConfig::default()).unwrap();
        assert_eq!(n.shaped_reward(&k, -10.0), -10.0);
        assert!(matches!("bogus".parse::<RewardMode>(), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn td_update_arithmetic() {
        let mut t = table();
        let k = key(&[2], &[2]);
        assert_eq!(t.td_update(&k, Action::Left, 10.0, None, 0.8, 0.8), 8.0);
        let v = t.td_update(&k, Action::Left, -10.0, None, 0.8, 0.8);
        assert!((v + 6.4).abs() < 1e-12);
        for _ in 0..100 {
            t.td_update(&k, Action::Left, 3.5, None, 0.8, 0.8);
        }
        assert!((t.q(&k, Action::Left) - 3.5).abs() < 1e-6);
    }

    #[test]
    fn td_update_bootstraps_from_next_max() {
        let mut t = table();
        let next = key(&[2, 3], &[2, 1]);
        t.insert_row(next.clone(), [1.0, 5.0, -2.0]);
        let k = key(&[2], &[2]);
        let v = t.td_update(&k, Action::Right, 1.0, Some(&next), 0.5, 0.8);
        assert!((v - 0.5 * (1.0 + 0.8 * 5.0)).abs() < 1e-12);
    }

    #[test]
    fn td_update_touches_one_entry() {
        let mut t = table();
        let k = key(&[2], &[2]);
        let other = key(&[1], &[2]);
        t.insert_row(other.clone(), [1.0, 2.0, 3.0]);
        t.td_update(&k, Action::Straight, 4.0, None, 0.8, 0.8);
        assert_eq!(t.q_values(&k), [0.0, 3.2, 0.0]);
        assert_eq!(t.q_values(&other), [1.0, 2.0, 3.0]);
    }

    #[test]
    fn select_action_exploration_and_exploitation() {
        let mut t = table();
        let k = key(&[2], &[2]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[t.select_action(&k, 1.0, &mut rng).index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.01);
        }
        t.insert_row(k.clone(), [0.0, 0.0, 10.0]);
        let right = (0..n).filter(|_| t.select_action(&k, 0.0, &mut rng) == Action::Right).count();
        // softmax weight e^10 / (2 + e^10) = 0.99990921
        assert!((right as f64 / n as f64 - 0.9999).abs() < 0.001);

        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| t.select_action(&k, 0.3, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
    }
}
