use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Train, evaluate and serve corridor agents.
///
/// Experiment options can also come from `--config` (flat `key = value`
/// lines) or from `CORRIDOR_*` environment variables. Explicit flags win over
/// the environment, which wins over the config file.
#[derive(Debug, Parser)]
#[command(name = "corridor", version)]
pub struct Cli {
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, env = "CORRIDOR_JOBS", default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a pairing, save snapshots and evaluate it.
    Train(TrainArgs),
    /// Re-evaluate a saved pairing.
    Eval(EvalArgs),
    /// Evaluate trained agents against rule-based opponents.
    BaselineEval(BaselineEvalArgs),
    /// Train and evaluate one pairing per parameter value.
    Sweep(SweepArgs),
    /// Per-turn, per-column entropy means of a saved pairing.
    ExportHeatmap(HeatmapArgs),
    /// Run the game server.
    Serve(ServeArgs),
    /// Check a JSON-lines log against the game rules and recompute metrics.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// Flat `key = value` file with experiment settings.
    #[arg(long, env = "CORRIDOR_CONFIG")]
    pub config: Option<PathBuf>,
    /// Pairing as `p1:p2`, e.g. `pos:pos` or `non:pos(phi=5)`.
    #[arg(long, env = "CORRIDOR_PAIR")]
    pub pair: Option<String>,
    #[arg(long, env = "CORRIDOR_NAME")]
    pub name: Option<String>,
    #[arg(long, env = "CORRIDOR_EPISODES")]
    pub episodes: Option<usize>,
    /// Seed list: `1,2,3`, `1..4` or `1..=6`.
    #[arg(long, env = "CORRIDOR_SEEDS")]
    pub seeds: Option<String>,
    #[arg(long, env = "CORRIDOR_ALPHA")]
    pub alpha: Option<f64>,
    #[arg(long, env = "CORRIDOR_GAMMA")]
    pub gamma: Option<f64>,
    #[arg(long, env = "CORRIDOR_HISTORY_LEN")]
    pub history_len: Option<usize>,
    #[arg(long, env = "CORRIDOR_EVAL_EPISODES")]
    pub eval_episodes: Option<usize>,
    #[arg(long, env = "CORRIDOR_COLS")]
    pub cols: Option<usize>,
    #[arg(long, env = "CORRIDOR_TURNS")]
    pub turns: Option<usize>,
    /// `all` or `visited`.
    #[arg(long, env = "CORRIDOR_MARGINALIZATION")]
    pub marginalization: Option<String>,
}

impl ExperimentArgs {
    /// Explicitly set options as config entries.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("pair", self.pair.clone());
        push("name", self.name.clone());
        push("episodes", self.episodes.map(|v| v.to_string()));
        push("seeds", self.seeds.clone());
        push("alpha", self.alpha.map(|v| v.to_string()));
        push("gamma", self.gamma.map(|v| v.to_string()));
        push("history_len", self.history_len.map(|v| v.to_string()));
        push("eval_episodes", self.eval_episodes.map(|v| v.to_string()));
        push("turns", self.turns.map(|v| v.to_string()));
        push("cols", self.cols.map(|v| v.to_string()));
        push("marginalization", self.marginalization.clone());
        out
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Output directory for snapshots, logs and results.
    #[arg(long, env = "CORRIDOR_OUT")]
    pub out: PathBuf,
    /// Skip the evaluation after training.
    #[arg(long)]
    pub no_eval: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory written by `train`.
    #[arg(long)]
    pub pair_dir: PathBuf,
    /// Evaluation episodes per seed; defaults to the trained config's value.
    #[arg(long = "episodes", alias = "eval-episodes", env = "CORRIDOR_EVAL_EPISODES")]
    pub eval_episodes: Option<usize>,
    /// Where to write results; defaults to the pair directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineEvalArgs {
    /// Snapshot file of the agent; repeat for several seeds. The seed is read
    /// from a `seed-<n>-` file name prefix, else taken from the position.
    #[arg(long, required_unless_present = "pair_dir", conflicts_with = "pair_dir")]
    pub agent: Vec<PathBuf>,
    /// Alternatively, a directory written by `train` plus `--seat`.
    #[arg(long)]
    pub pair_dir: Option<PathBuf>,
    /// Seat of the trained agent in `--pair-dir` (`p1` or `p2`).
    #[arg(long, default_value = "p1")]
    pub seat: String,
    /// `pure-sf`, `ipk-sf`, `pk-sf`, `random` or `all` (the three social-force
    /// variants).
    #[arg(long, default_value = "all")]
    pub baseline: String,
    #[arg(long = "episodes", alias = "eval-episodes", env = "CORRIDOR_EVAL_EPISODES")]
    pub eval_episodes: Option<usize>,
    /// Output directory; defaults to the pair directory or the current one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// `phi` or `hist`.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<f64>,
    #[arg(long, env = "CORRIDOR_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Evaluation log written by `eval` or `train`.
    #[arg(long, required_unless_present = "pair_dir", conflicts_with = "pair_dir")]
    pub log: Option<PathBuf>,
    /// Alternatively, a directory written by `train`; it is re-evaluated.
    #[arg(long)]
    pub pair_dir: Option<PathBuf>,
    #[arg(long, default_value = "p2")]
    pub seat: String,
    /// Grid size for `--log` is taken from this config file or directory.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "episodes", alias = "eval-episodes", env = "CORRIDOR_EVAL_EPISODES")]
    pub eval_episodes: Option<usize>,
    /// CSV file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "CORRIDOR_HOST", default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "CORRIDOR_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Directory of `*.qtable` snapshots offered as opponents by file stem.
    #[arg(long, env = "CORRIDOR_SNAPSHOTS")]
    pub snapshots: Option<PathBuf>,
    /// Directory for per-session JSON-lines round logs.
    #[arg(long, env = "CORRIDOR_LOG_DIR")]
    pub log_dir: Option<PathBuf>,
    /// Static files served at `/`.
    #[arg(long = "static", env = "CORRIDOR_STATIC")]
    pub static_dir: Option<PathBuf>,
    #[arg(long, env = "CORRIDOR_TURN_MS", default_value_t = corridor_service::session::DEFAULT_TURN_MS)]
    pub turn_ms: u64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Evaluation log from `eval`/`train` or a round log from `serve`; the
    /// format is detected from the first entry.
    #[arg(long)]
    pub log: PathBuf,
    /// Experiment config (file or directory) whose grid the log was played on.
    #[arg(long)]
    pub config: Option<PathBuf>,
}
