//! Session server for playing the corridor game against frozen agents.
//!
//! The human always occupies the bottom seat. Opponents are loaded once at
//! start-up and never learn during play.

pub mod error;
pub mod log;
pub mod protocol;
pub mod server;
pub mod session;

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use corridor_core::snapshot::load_table_from_path;
use corridor_core::training::Player;
use corridor_core::BaselineKind;

pub use error::{ServiceError, ServiceResult};
pub use log::RoundLog;
pub use session::{Session, SessionManager};

/// Built-in rule-based opponents plus every `*.qtable` file in
/// `snapshot_dir`, keyed by file stem.
pub fn load_opponents(snapshot_dir: Option<&Path>) -> corridor_core::Result<HashMap<String, session::Opponent>> {
    let mut out: HashMap<String, session::Opponent> = HashMap::new();
    for kind in [BaselineKind::Random, BaselineKind::PureSf, BaselineKind::ipk(), BaselineKind::PkSf] {
        out.insert(kind.name().to_string(), Arc::new(Player::Baseline(kind)));
    }
    if let Some(dir) = snapshot_dir {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "qtable") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    let table = load_table_from_path(&path)?;
                    out.insert(stem.to_string(), Arc::new(Player::Learner(table)));
                }
            }
        }
    }
    Ok(out)
}
