//! Tabular Q-learning agents whose rewards are shaped by the transfer
//! entropy from an opponent's observed history to their own policy, played
//! in a two-player corridor game where each player secretly wants to meet or
//! pass the other.

pub mod agent;
pub mod baselines;
pub mod env;
pub mod error;
pub mod info;
pub mod metrics;
pub mod record;
pub mod snapshot;
pub mod training;

pub use agent::{JointHistoryKey, RewardMode, SparseQTable};
pub use baselines::BaselineKind;
pub use env::{Action, EnvState, GridConfig, Objective, Outcome, Seat};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use record::EpisodeRecord;
pub use training::{ExperimentConfig, PairSpec};
