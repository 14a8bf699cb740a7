//! Plain-text Q-table snapshots.
//!
//! ```text
//! corridor-qtable v1 seat=P2 phi=10 schedule=fixed mode=te history=5 rows=11 cols=5 marginal=all entries=6
//! P2 0 meet 3 1 0 -0.25
//! P2 0 meet 3 1 1 8
//! ...
//! ```
//!
//! One record per `(key, action)`: seat, turn, objective, ego columns,
//! opponent columns, action index, Q-value. Records are sorted by key then
//! action and Q-values use the shortest decimal that round-trips, so equal
//! tables serialise to identical bytes.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::agent::{History, JointHistoryKey, Marginalization, PhiSchedule, RewardMode, SparseQTable};
use crate::env::{Action, GridConfig, Objective, Seat};
use crate::error::{Error, Result};

pub const MAGIC: &str = "corridor-qtable";
pub const VERSION: &str = "v1";

pub fn save_table<W: Write>(table: &SparseQTable, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let grid = table.grid();
    let schedule = match table.schedule() {
        PhiSchedule::Fixed => "fixed",
        PhiSchedule::Mixed => "mixed",
    };
    writeln!(
        out,
        "{MAGIC} {VERSION} seat={} phi={} schedule={schedule} mode={} history={} rows={} cols={} marginal={} entries={}",
        table.seat(),
        table.phi(),
        table.mode().name(),
        table.history_len(),
        grid.rows,
        grid.cols,
        table.marginalization(),
        table.len() * Action::COUNT,
    )?;
    for (key, row) in table.sorted_entries() {
        for (a, q) in row.iter().enumerate() {
            writeln!(
                out,
                "{} {} {} {} {} {a} {q}",
                key.seat,
                key.turn,
                key.objective.name(),
                key.ego_cols,
                key.opp_cols,
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn save_table_to_path(table: &SparseQTable, path: impl AsRef<Path>) -> Result<()> {
    save_table(table, File::create(path)?)
}

pub fn load_table_from_path(path: impl AsRef<Path>) -> Result<SparseQTable> {
    load_table(File::open(path)?)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

struct Header {
    seat: Seat,
    phi: f64,
    schedule: PhiSchedule,
    mode: RewardMode,
    history_len: usize,
    grid: GridConfig,
    marginalization: Marginalization,
    entries: usize,
}

fn parse_header(line: &str) -> Result<Header> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(MAGIC) {
        return Err(parse_err(1, format!("missing {MAGIC:?} header")));
    }
    let version = tokens.next().unwrap_or_default();
    if version != VERSION {
        return Err(Error::VersionMismatch { found: version.to_string(), expected: VERSION.to_string() });
    }
    let fields: HashMap<&str, &str> = tokens
        .map(|t| t.split_once('=').ok_or_else(|| parse_err(1, format!("malformed field {t:?}"))))
        .collect::<Result<_>>()?;
    let get = |name: &str| fields.get(name).copied().ok_or_else(|| parse_err(1, format!("missing field {name:?}")));
    let num = |name: &str| -> Result<usize> {
        get(name)?.parse().map_err(|_| parse_err(1, format!("field {name:?} is not an integer")))
    };
    let header_err = |e: Error| parse_err(1, e.to_string());

    let phi: f64 = get("phi")?.parse().map_err(|_| parse_err(1, "phi is not a number"))?;
    let schedule = match get("schedule")? {
        "fixed" => PhiSchedule::Fixed,
        "mixed" => PhiSchedule::Mixed,
        other => return Err(parse_err(1, format!("unknown schedule {other:?}"))),
    };
    let grid = GridConfig { rows: num("rows")?, cols: num("cols")?, turns: (num("rows")?.saturating_sub(1)) / 2 };
    grid.validate().map_err(header_err)?;
    Ok(Header {
        seat: get("seat")?.parse().map_err(header_err)?,
        phi,
        schedule,
        mode: get("mode")?.parse().map_err(header_err)?,
        history_len: num("history")?,
        grid,
        marginalization: get("marginal")?.parse().map_err(header_err)?,
        entries: num("entries")?,
    })
}

pub fn load_table<R: Read>(input: R) -> Result<SparseQTable> {
    let mut lines = BufReader::new(input).lines();
    let first = lines.next().ok_or_else(|| parse_err(1, "empty snapshot"))??;
    let header = parse_header(&first)?;
    let mut table = SparseQTable::new(header.seat, header.phi, header.mode, header.history_len, header.grid)
        .map_err(|e| parse_err(1, e.to_string()))?
        .with_schedule(header.schedule)
        .with_marginalization(header.marginalization);

    let mut rows: HashMap<JointHistoryKey, ([f64; 3], [bool; 3])> = HashMap::new();
    let mut records = 0usize;
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 7 {
            return Err(parse_err(lineno, format!("expected 7 fields, found {}", f.len())));
        }
        let bad = |e: Error| parse_err(lineno, e.to_string());
        let seat: Seat = f[0].parse().map_err(bad)?;
        if seat != header.seat {
            return Err(parse_err(lineno, format!("record seat {seat} differs from header seat {}", header.seat)));
        }
        let turn: usize = f[1].parse().map_err(|_| parse_err(lineno, "turn is not an integer"))?;
        let objective: Objective = f[2].parse().map_err(bad)?;
        let ego_cols: History = f[3].parse().map_err(bad)?;
        let opp_cols: History = f[4].parse().map_err(bad)?;
        let action = f[5]
            .parse::<usize>()
            .ok()
            .and_then(Action::from_index)
            .ok_or_else(|| parse_err(lineno, format!("bad action index {:?}", f[5])))?;
        let q: f64 = f[6].parse().map_err(|_| parse_err(lineno, format!("bad Q-value {:?}", f[6])))?;
        if !q.is_finite() {
            return Err(parse_err(lineno, "Q-value is not finite"));
        }
        let key = JointHistoryKey { seat, turn, objective, ego_cols, opp_cols };
        key.validate(&header.grid, header.history_len).map_err(bad)?;
        let (row, seen) = rows.entry(key).or_default();
        if seen[action.index()] {
            return Err(parse_err(lineno, "duplicate record"));
        }
        seen[action.index()] = true;
        row[action.index()] = q;
        records += 1;
    }
    if records != header.entries {
        return Err(parse_err(1, format!("header declares {} entries, found {records}", header.entries)));
    }
    let mut keyed: Vec<_> = rows.into_iter().collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    for (key, (row, _)) in keyed {
        table.insert_row(key, row);
    }
    Ok(table)
}
