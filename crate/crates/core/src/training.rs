//! Self-play and agent-vs-baseline training, frozen evaluation, and sweeps.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{
    Marginalization, PhiSchedule, RewardMode, SparseQTable, StepInfo, DEFAULT_ALPHA, DEFAULT_GAMMA,
    DEFAULT_HISTORY_LEN, MIXED_PHI_CHOICES,
};
use crate::baselines::BaselineKind;
use crate::env::{EnvState, GridConfig, Seat};
use crate::error::{invalid, Result};
use crate::metrics::{MetricsReport, SeedMetrics};
use crate::record::{EpisodeRecord, StepRecord};
use crate::snapshot;

pub const DEFAULT_EPISODES: usize = 30_000;
pub const DEFAULT_EVAL_EPISODES: usize = 10_000;
pub const DEFAULT_SEEDS: [u64; 6] = [1, 2, 3, 4, 5, 6];
pub const POSITIVE_PHI: f64 = 10.0;
pub const LOG_WINDOW: usize = 1000;

/// Linear decay from 1 to 0 over `max_iteration` episodes.
pub fn epsilon(iteration: usize, max_iteration: usize) -> f64 {
    if max_iteration == 0 {
        return 0.0;
    }
    (1.0 - iteration as f64 / max_iteration as f64).max(0.0)
}

/// One side of a pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AgentKind {
    Learner { phi: f64, schedule: PhiSchedule, mode: RewardMode },
    Baseline(BaselineKind),
}

impl AgentKind {
    pub fn learner(phi: f64) -> AgentKind {
        AgentKind::Learner { phi, schedule: PhiSchedule::Fixed, mode: RewardMode::Te }
    }

    pub fn non() -> AgentKind {
        AgentKind::learner(0.0)
    }

    pub fn pos() -> AgentKind {
        AgentKind::learner(POSITIVE_PHI)
    }

    pub fn neg() -> AgentKind {
        AgentKind::learner(-POSITIVE_PHI)
    }

    pub fn mixed() -> AgentKind {
        AgentKind::Learner { phi: 0.0, schedule: PhiSchedule::Mixed, mode: RewardMode::Te }
    }

    pub fn is_learner(&self) -> bool {
        matches!(self, AgentKind::Learner { .. })
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AgentKind::Baseline(b) => write!(f, "{b}"),
            AgentKind::Learner { phi, schedule, mode } => {
                let mut params = Vec::new();
                let name = match schedule {
                    PhiSchedule::Mixed => "mixed",
                    PhiSchedule::Fixed if phi == 0.0 => "non",
                    PhiSchedule::Fixed if phi > 0.0 => "pos",
                    PhiSchedule::Fixed => "neg",
                };
                if schedule == PhiSchedule::Fixed && phi != 0.0 && phi.abs() != POSITIVE_PHI {
                    params.push(format!("phi={phi}"));
                }
                if mode != RewardMode::Te {
                    params.push(format!("mode={}", mode.name()));
                }
                if params.is_empty() {
                    f.write_str(name)
                } else {
                    write!(f, "{name}({})", params.join(","))
                }
            }
        }
    }
}

impl FromStr for AgentKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, params) = match s.split_once('(') {
            Some((name, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| invalid(format!("unclosed parameter list in {s:?}")))?;
                (name.trim(), Some(inner))
            }
            None => (s, None),
        };
        let mut kind = match name {
            "non" => AgentKind::non(),
            "pos" => AgentKind::pos(),
            "neg" => AgentKind::neg(),
            "mixed" => AgentKind::mixed(),
            other => AgentKind::Baseline(other.parse()?),
        };
        for param in params.into_iter().flat_map(|p| p.split(',')).map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) =
                param.split_once('=').ok_or_else(|| invalid(format!("expected key=value, got {param:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let number = || value.parse::<f64>().map_err(|_| invalid(format!("{key} is not a number: {value:?}")));
            match (&mut kind, key) {
                (AgentKind::Learner { phi, schedule: PhiSchedule::Fixed, .. }, "phi") => {
                    let v = number()?;
                    if !v.is_finite() {
                        return Err(invalid("phi must be finite"));
                    }
                    *phi = v;
                }
                (AgentKind::Learner { mode, .. }, "mode") => *mode = value.parse()?,
                (AgentKind::Baseline(BaselineKind::IpkSf { p_know }), "p_know") => {
                    let v = number()?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(invalid(format!("p_know must lie in [0, 1], got {v}")));
                    }
                    *p_know = v;
                }
                _ => return Err(invalid(format!("parameter {key:?} does not apply to {name:?}"))),
            }
        }
        Ok(kind)
    }
}

/// Two sides, P1 first. Written `<side>:<side>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSpec {
    pub sides: [AgentKind; 2],
}

impl PairSpec {
    pub fn new(p1: AgentKind, p2: AgentKind) -> PairSpec {
        PairSpec { sides: [p1, p2] }
    }

    pub fn side(&self, seat: Seat) -> AgentKind {
        self.sides[seat.index()]
    }

    pub fn has_learner(&self) -> bool {
        self.sides.iter().any(AgentKind::is_learner)
    }
}

impl fmt::Display for PairSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sides[0], self.sides[1])
    }
}

impl FromStr for PairSpec {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once(':').ok_or_else(|| invalid(format!("pair spec {s:?} is not <side>:<side>")))?;
        Ok(PairSpec::new(a.parse()?, b.parse()?))
    }
}

/// Everything needed to train and evaluate one pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub pair: PairSpec,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub alpha: f64,
    pub gamma: f64,
    pub history_len: usize,
    pub eval_episodes: usize,
    pub grid: GridConfig,
    pub marginalization: Marginalization,
}

impl ExperimentConfig {
    pub fn new(pair: PairSpec) -> ExperimentConfig {
        ExperimentConfig {
            name: pair.to_string(),
            pair,
            episodes: DEFAULT_EPISODES,
            seeds: DEFAULT_SEEDS.to_vec(),
            alpha: DEFAULT_ALPHA,
            gamma: DEFAULT_GAMMA,
            history_len: DEFAULT_HISTORY_LEN,
            eval_episodes: DEFAULT_EVAL_EPISODES,
            grid: GridConfig::default(),
            marginalization: Marginalization::All,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.episodes == 0 {
            return Err(invalid("episodes must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("at least one seed is required"));
        }
        if self.history_len == 0 || self.history_len > self.grid.turns {
            return Err(invalid(format!("history_len must lie in [1, {}]", self.grid.turns)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(invalid(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if self.name.trim().is_empty() || self.name.contains([',', '\n']) {
            return Err(invalid("experiment name must be non-empty and free of commas and newlines"));
        }
        Ok(())
    }

    /// Sets one field from its textual `key = value` form.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| invalid(format!("{key}: cannot parse {value:?}")))
        }
        match key.trim() {
            "name" => self.name = value.to_string(),
            "pair" => self.pair = value.parse()?,
            "episodes" => self.episodes = num(key, value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "alpha" => self.alpha = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "history_len" => self.history_len = num(key, value)?,
            "eval_episodes" => self.eval_episodes = num(key, value)?,
            "cols" => self.grid = GridConfig::new(num(key, value)?, self.grid.turns)?,
            "turns" => self.grid = GridConfig::new(self.grid.cols, num(key, value)?)?,
            "marginalization" => self.marginalization = value.parse()?,
            other => return Err(invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Flat `key = value` document that [`ExperimentConfig::from_config_text`]
    /// reads back.
    pub fn to_config_text(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        format!(
            "name = {}\npair = {}\nepisodes = {}\nseeds = {}\nalpha = {}\ngamma = {}\nhistory_len = {}\n\
             eval_episodes = {}\ncols = {}\nturns = {}\nmarginalization = {}\n",
            self.name,
            self.pair,
            self.episodes,
            seeds.join(","),
            self.alpha,
            self.gamma,
            self.history_len,
            self.eval_episodes,
            self.grid.cols,
            self.grid.turns,
            self.marginalization,
        )
    }

    pub fn from_config_text(text: &str) -> Result<ExperimentConfig> {
        let entries = parse_config_text(text)?;
        let pair = entries
            .iter()
            .find(|(k, _)| k == "pair")
            .ok_or_else(|| invalid("config has no pair"))?
            .1
            .parse()?;
        let mut config = ExperimentConfig::new(pair);
        for (k, v) in &entries {
            config.apply(k, v)?;
        }
        if !entries.iter().any(|(k, _)| k == "name") {
            config.name = config.pair.to_string();
        }
        config.validate()?;
        Ok(config)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| crate::error::Error::Parse {
            line: i + 1,
            message: format!("expected key = value, got {raw:?}"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Comma-separated seeds, with `a..b` and `a..=b` ranges.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || invalid(format!("bad seed {part:?}"));
        if let Some((a, b)) = part.split_once("..=") {
            let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            seeds.extend(a..=b);
        } else if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            seeds.extend(a..b);
        } else {
            seeds.push(part.parse().map_err(|_| bad())?);
        }
    }
    if seeds.is_empty() {
        return Err(invalid("no seeds given"));
    }
    Ok(seeds)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Player {
    Learner(SparseQTable),
    Baseline(BaselineKind),
}

impl Player {
    pub fn fresh(kind: AgentKind, seat: Seat, config: &ExperimentConfig) -> Result<Player> {
        Ok(match kind {
            AgentKind::Baseline(b) => Player::Baseline(b),
            AgentKind::Learner { phi, schedule, mode } => Player::Learner(
                SparseQTable::new(seat, phi, mode, config.history_len, config.grid)?
                    .with_schedule(schedule)
                    .with_marginalization(config.marginalization),
            ),
        })
    }

    pub fn table(&self) -> Option<&SparseQTable> {
        match self {
            Player::Learner(t) => Some(t),
            Player::Baseline(_) => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Player::Baseline(b) => b.to_string(),
            Player::Learner(t) => {
                AgentKind::Learner { phi: t.phi(), schedule: t.schedule(), mode: t.mode() }.to_string()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Train,
    Eval,
}

/// Plays one episode without touching the tables. Learners act on keys
/// built from their own seat's view; TE terms come from the tables as they
/// stand.
pub fn play_episode<R: Rng + ?Sized>(
    players: [&Player; 2],
    grid: GridConfig,
    epsilon: f64,
    rng: &mut R,
) -> Result<EpisodeRecord> {
    let mut state = EnvState::reset(grid, rng);
    let start_cols = [state.p1_col, state.p2_col];
    let objectives = [state.p1_objective, state.p2_objective];
    let mut traj: [Vec<usize>; 2] = [vec![start_cols[0]], vec![start_cols[1]]];
    let mut steps = Vec::with_capacity(grid.turns);

    while !state.is_terminal() {
        let cols = [state.p1_col, state.p2_col];
        let mut actions = [crate::env::Action::Straight; 2];
        let mut info: [Option<StepInfo>; 2] = [None, None];
        for seat in Seat::BOTH {
            let (me, other) = (seat.index(), seat.other().index());
            actions[me] = match players[me] {
                Player::Baseline(b) => b.act(cols[me], cols[other], objectives[me], objectives[other], grid.cols, rng),
                Player::Learner(table) => {
                    let key = table.key(objectives[me], &traj[me], &traj[other]);
                    info[me] = Some(table.step_info(&key));
                    table.select_action(&key, epsilon, rng)
                }
            };
        }
        state = state.step(actions[0], actions[1])?;
        let env_reward = Seat::BOTH.map(|s| state.objective_reward(s));
        let shaped_reward = Seat::BOTH.map(|s| match (players[s.index()], &info[s.index()]) {
            (Player::Learner(t), Some(i)) => t.shaped_reward_from(i, env_reward[s.index()]),
            _ => env_reward[s.index()],
        });
        let turn = steps.len();
        steps.push(StepRecord { turn, cols, actions, info, env_reward, shaped_reward });
        traj[0].push(state.p1_col);
        traj[1].push(state.p2_col);
    }

    let outcome = state.outcome()?;
    Ok(EpisodeRecord {
        objectives,
        start_cols,
        steps,
        final_cols: [state.p1_col, state.p2_col],
        outcome,
        success: objectives.map(|o| outcome.satisfies(o)),
    })
}

/// Applies the episode's temporal-difference updates in step order.
///
/// Keys carry the turn, so an update at turn `t` never changes anything read
/// at turns after `t`; deferring the updates to the end of the episode gives
/// the same tables as updating after every step.
pub fn apply_updates(players: &mut [Player; 2], record: &EpisodeRecord, alpha: f64, gamma: f64) {
    for seat in Seat::BOTH {
        let Player::Learner(table) = &mut players[seat.index()] else { continue };
        let ego = record.trajectory(seat);
        let opp = record.trajectory(seat.other());
        let objective = record.objective(seat);
        let turns = record.steps.len();
        let mut key = table.key(objective, &ego[..1], &opp[..1]);
        for (t, step) in record.steps.iter().enumerate() {
            let next = (t + 1 < turns).then(|| table.key(objective, &ego[..t + 2], &opp[..t + 2]));
            table.td_update(&key, step.actions[seat.index()], step.shaped_reward[seat.index()], next.as_ref(), alpha, gamma);
            if let Some(n) = next {
                key = n;
            }
        }
    }
}

/// One episode. Training resamples Mixed φ first and updates afterwards;
/// evaluation forces ε = 0 and leaves the tables untouched.
pub fn run_episode<R: Rng + ?Sized>(
    players: &mut [Player; 2],
    config: &ExperimentConfig,
    epsilon: f64,
    rng: &mut R,
    mode: RunMode,
) -> Result<EpisodeRecord> {
    if mode == RunMode::Train {
        for player in players.iter_mut() {
            if let Player::Learner(t) = player {
                if t.schedule() == PhiSchedule::Mixed {
                    t.set_phi(MIXED_PHI_CHOICES[rng.gen_range(0..MIXED_PHI_CHOICES.len())]);
                }
            }
        }
    }
    let eps = if mode == RunMode::Eval { 0.0 } else { epsilon };
    let record = play_episode([&players[0], &players[1]], config.grid, eps, rng)?;
    if mode == RunMode::Train {
        apply_updates(players, &record, config.alpha, config.gamma);
    }
    Ok(record)
}

/// Success counts and mean TE over a window of training episodes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WindowStats {
    pub start: usize,
    pub episodes: usize,
    pub epsilon: f64,
    pub collaborative: usize,
    pub collaborative_success: usize,
    pub competitive: usize,
    pub p1_competitive_wins: usize,
    pub mean_te: [Option<f64>; 2],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub windows: Vec<WindowStats>,
}

impl TrainingLog {
    pub const CSV_HEADER: &'static str =
        "seed,start,episodes,epsilon,collaborative,collaborative_success,competitive,p1_competitive_wins,p1_mean_te,p2_mean_te";

    pub fn write_csv_rows<W: std::io::Write>(&self, seed: u64, out: &mut W) -> std::io::Result<()> {
        for w in &self.windows {
            let te = w.mean_te.map(|v| v.map(|x| format!("{x:.6}")).unwrap_or_default());
            writeln!(
                out,
                "{seed},{},{},{:.6},{},{},{},{},{},{}",
                w.start,
                w.episodes,
                w.epsilon,
                w.collaborative,
                w.collaborative_success,
                w.competitive,
                w.p1_competitive_wins,
                te[0],
                te[1]
            )?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct WindowAcc {
    stats: WindowStats,
    te_sum: [f64; 2],
    te_n: [usize; 2],
}

impl WindowAcc {
    fn push(&mut self, r: &EpisodeRecord) {
        let s = &mut self.stats;
        s.episodes += 1;
        if r.is_collaborative() {
            s.collaborative += 1;
            s.collaborative_success += r.success[0] as usize;
        } else {
            s.competitive += 1;
            s.p1_competitive_wins += r.success[0] as usize;
        }
        for step in &r.steps {
            for i in 0..2 {
                if let Some(info) = step.info[i] {
                    self.te_sum[i] += info.te;
                    self.te_n[i] += 1;
                }
            }
        }
    }

    fn finish(mut self) -> WindowStats {
        for i in 0..2 {
            self.stats.mean_te[i] = (self.te_n[i] > 0).then(|| self.te_sum[i] / self.te_n[i] as f64);
        }
        self.stats
    }
}

/// One seed's trained players and training log.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub players: [Player; 2],
    pub log: TrainingLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPair {
    pub config: ExperimentConfig,
    pub runs: Vec<SeedRun>,
}

fn training_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Evaluation draws from a separate stream of the seed's generator.
pub fn eval_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

pub fn train_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    config.validate()?;
    let mut players =
        [Player::fresh(config.pair.sides[0], Seat::P1, config)?, Player::fresh(config.pair.sides[1], Seat::P2, config)?];
    let mut rng = training_rng(seed);
    let mut log = TrainingLog::default();
    let mut acc = WindowAcc::default();
    for i in 0..config.episodes {
        let eps = epsilon(i, config.episodes);
        if acc.stats.episodes == 0 {
            acc.stats.start = i;
            acc.stats.epsilon = eps;
        }
        let record = run_episode(&mut players, config, eps, &mut rng, RunMode::Train)?;
        acc.push(&record);
        if acc.stats.episodes == LOG_WINDOW {
            log.windows.push(std::mem::take(&mut acc).finish());
        }
    }
    if acc.stats.episodes > 0 {
        log.windows.push(acc.finish());
    }
    for p in players.iter_mut() {
        if let Player::Learner(t) = p {
            if t.schedule() == PhiSchedule::Mixed {
                t.set_phi(0.0);
            }
        }
    }
    Ok(SeedRun { seed, players, log })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))
}

/// Trains every seed independently, in parallel across `jobs` threads
/// (0 = one per core). Results are ordered by the config's seed list.
pub fn train_pair(config: &ExperimentConfig, jobs: usize) -> Result<TrainedPair> {
    config.validate()?;
    let runs = pool(jobs)?.install(|| {
        config.seeds.par_iter().map(|&seed| train_seed(config, seed)).collect::<Result<Vec<_>>>()
    })?;
    Ok(TrainedPair { config: config.clone(), runs })
}

/// Frozen-policy episodes for one seed: ε = 0, no updates.
pub fn evaluate_players(
    players: &[Player; 2],
    config: &ExperimentConfig,
    seed: u64,
    episodes: usize,
) -> Result<Vec<EpisodeRecord>> {
    let mut rng = eval_rng(seed);
    (0..episodes).map(|_| play_episode([&players[0], &players[1]], config.grid, 0.0, &mut rng)).collect()
}

/// Evaluation episodes grouped by seed, in seed order.
pub type SeedLogs = Vec<(u64, Vec<EpisodeRecord>)>;

/// Evaluation logs per seed, in seed order.
pub fn evaluation_logs(pair: &TrainedPair, eval_episodes: usize, jobs: usize) -> Result<SeedLogs> {
    if eval_episodes == 0 {
        return Err(invalid("eval_episodes must be positive"));
    }
    pool(jobs)?.install(|| {
        pair.runs
            .par_iter()
            .map(|run| Ok((run.seed, evaluate_players(&run.players, &pair.config, run.seed, eval_episodes)?)))
            .collect()
    })
}

pub fn report_from_logs(
    experiment: &str,
    labels: [String; 2],
    logs: &[(u64, Vec<EpisodeRecord>)],
) -> Result<MetricsReport> {
    let seeds = logs.iter().map(|(seed, records)| SeedMetrics::from_records(*seed, records)).collect::<Result<_>>()?;
    Ok(MetricsReport { experiment: experiment.to_string(), labels, seeds })
}

fn labels(pair: &TrainedPair) -> [String; 2] {
    pair.runs
        .first()
        .map(|r| [r.players[0].label(), r.players[1].label()])
        .unwrap_or_else(|| pair.config.pair.sides.map(|s| s.to_string()))
}

pub fn evaluate(pair: &TrainedPair, eval_episodes: usize, jobs: usize) -> Result<MetricsReport> {
    let logs = evaluation_logs(pair, eval_episodes, jobs)?;
    report_from_logs(&pair.config.name, labels(pair), &logs)
}

/// Frozen agent at P1 against a rule-based P2, one evaluation per seed.
pub fn baseline_eval(
    agents: &[(u64, Player)],
    baseline: BaselineKind,
    config: &ExperimentConfig,
    eval_episodes: usize,
    jobs: usize,
) -> Result<(MetricsReport, SeedLogs)> {
    let first = agents.first().ok_or_else(|| invalid("no agents to evaluate"))?;
    let logs = pool(jobs)?.install(|| {
        agents
            .par_iter()
            .map(|(seed, agent)| {
                let players = [agent.clone(), Player::Baseline(baseline)];
                Ok((*seed, evaluate_players(&players, config, *seed, eval_episodes)?))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let labels = [first.1.label(), baseline.to_string()];
    let report = report_from_logs(&format!("{}:{baseline}", labels[0]), labels, &logs)?;
    Ok((report, logs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Phi,
    HistoryLen,
}

impl FromStr for SweepParam {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi" => Ok(SweepParam::Phi),
            "hist" | "history_len" => Ok(SweepParam::HistoryLen),
            other => Err(invalid(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

/// The config for one sweep value. A φ value replaces the magnitude of every
/// fixed, non-zero φ and keeps its sign.
pub fn sweep_config(base: &ExperimentConfig, param: SweepParam, value: f64) -> Result<ExperimentConfig> {
    let mut config = base.clone();
    match param {
        SweepParam::Phi => {
            if !value.is_finite() {
                return Err(invalid("phi must be finite"));
            }
            for side in config.pair.sides.iter_mut() {
                if let AgentKind::Learner { phi, schedule: PhiSchedule::Fixed, .. } = side {
                    if *phi != 0.0 {
                        *phi = phi.signum() * value.abs();
                    }
                }
            }
            config.name = format!("{}@phi={value}", base.name);
        }
        SweepParam::HistoryLen => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(invalid(format!("history length must be a positive integer, got {value}")));
            }
            config.history_len = value as usize;
            config.name = format!("{}@hist={value}", base.name);
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn sweep(base: &ExperimentConfig, param: SweepParam, values: &[f64], jobs: usize) -> Result<Vec<(f64, MetricsReport)>> {
    if values.is_empty() {
        return Err(invalid("sweep needs at least one value"));
    }
    values
        .iter()
        .map(|&v| {
            let config = sweep_config(base, param, v)?;
            let pair = train_pair(&config, jobs)?;
            Ok((v, evaluate(&pair, config.eval_episodes, jobs)?))
        })
        .collect()
}

pub const CONFIG_FILE: &str = "experiment.cfg";

pub fn snapshot_name(seed: u64, seat: Seat) -> String {
    format!("seed-{seed}-{}.qtable", seat.to_string().to_lowercase())
}

impl TrainedPair {
    /// Writes the config and one snapshot per learner per seed.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(CONFIG_FILE), self.config.to_config_text())?;
        for run in &self.runs {
            for seat in Seat::BOTH {
                if let Player::Learner(t) = &run.players[seat.index()] {
                    snapshot::save_table_to_path(t, dir.join(snapshot_name(run.seed, seat)))?;
                }
            }
        }
        Ok(())
    }

    /// Reads a directory written by [`TrainedPair::save`]. Training logs are
    /// not restored.
    pub fn load(dir: &Path) -> Result<TrainedPair> {
        let config = ExperimentConfig::from_config_text(&fs::read_to_string(dir.join(CONFIG_FILE))?)?;
        let mut runs = Vec::with_capacity(config.seeds.len());
        for &seed in &config.seeds {
            let mut players = Vec::with_capacity(2);
            for seat in Seat::BOTH {
                players.push(match config.pair.side(seat) {
                    AgentKind::Baseline(b) => Player::Baseline(b),
                    AgentKind::Learner { .. } => {
                        Player::Learner(snapshot::load_table_from_path(dir.join(snapshot_name(seed, seat)))?)
                    }
                });
            }
            let p2 = players.pop().expect("two players");
            let p1 = players.pop().expect("two players");
            runs.push(SeedRun { seed, players: [p1, p2], log: TrainingLog::default() });
        }
        Ok(TrainedPair { config, runs })
    }
}
