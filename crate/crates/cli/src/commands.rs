use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use corridor_core::metrics::{self, entropy_heatmap, Field, MetricsReport};
use corridor_core::training::{
    self, baseline_eval, evaluation_logs, report_from_logs, train_pair, AgentKind, Player, SweepParam, TrainedPair,
    TrainingLog, CONFIG_FILE,
};
use corridor_core::snapshot::load_table_from_path;
use corridor_core::{BaselineKind, EpisodeRecord, ExperimentConfig, GridConfig, PairSpec, Seat};
use corridor_service::log::read_log;
use corridor_service::server::{serve, AppState};
use corridor_service::{load_opponents, SessionManager};
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::UsageError;

pub const RESULTS_CSV: &str = "results.csv";
pub const REPORT_JSON: &str = "report.json";
pub const TRAINING_LOG_CSV: &str = "training_log.csv";
pub const EVAL_LOG: &str = "eval_log.jsonl";

/// One line of an evaluation log.
#[derive(Debug, Serialize, Deserialize)]
pub struct EvalLine {
    pub seed: u64,
    pub episode: usize,
    #[serde(flatten)]
    pub record: EpisodeRecord,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

pub fn build_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut entries: Vec<(String, String)> = Vec::new();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        entries = training::parse_config_text(&text)?;
    }
    entries.extend(args.entries().into_iter().map(|(k, v)| (k.to_string(), v)));
    let pair = entries
        .iter()
        .rev()
        .find(|(k, _)| k == "pair")
        .map(|(_, v)| v.parse())
        .transpose()?
        .ok_or_else(|| usage("a pairing is required (--pair or `pair` in the config file)"))?;
    let mut config = ExperimentConfig::new(pair);
    let mut named = false;
    for (k, v) in &entries {
        config.apply(k, v)?;
        named |= k == "name";
    }
    if !named {
        config.name = config.pair.to_string();
    }
    config.validate()?;
    Ok(config)
}

fn write_report(dir: &Path, file: &str, report: &MetricsReport) -> Result<()> {
    let mut out = create(&dir.join(file))?;
    writeln!(out, "{}", metrics::CSV_HEADER)?;
    metrics::write_csv_rows(report, &mut out)?;
    out.flush()?;
    Ok(())
}

fn print_summary(report: &MetricsReport) {
    let pct = |v: Option<f64>| v.map(|x| format!("{:.2}", 100.0 * x)).unwrap_or_else(|| "-".into());
    println!("{}", report.experiment);
    for seat in Seat::BOTH {
        let s = report.summary(seat, Field::Srcp);
        println!(
            "  {seat} {:<24} SRCP {} ± {}  avg TE {}",
            report.labels[seat.index()],
            pct(s.mean),
            pct(s.std),
            report.mean(seat, Field::AvgTe).map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
        );
    }
    let cps = report.cps_summary();
    println!("  SRCL {}  CPS {}", pct(report.srcl()), cps.mean.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()));
}

fn evaluate_and_write(pair: &TrainedPair, eval_episodes: usize, dir: &Path, jobs: usize) -> Result<MetricsReport> {
    let logs = evaluation_logs(pair, eval_episodes, jobs)?;
    let labels = pair.runs[0].players.each_ref().map(|p| p.label());
    let report = report_from_logs(&pair.config.name, labels, &logs)?;
    write_report(dir, RESULTS_CSV, &report)?;
    fs::write(dir.join(REPORT_JSON), serde_json::to_string_pretty(&report)?)?;
    let mut out = create(&dir.join(EVAL_LOG))?;
    for (seed, records) in logs {
        for (episode, record) in records.into_iter().enumerate() {
            serde_json::to_writer(&mut out, &EvalLine { seed, episode, record })?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(report)
}

pub fn train(args: &TrainArgs, jobs: usize) -> Result<()> {
    let config = build_config(&args.experiment)?;
    let pair = train_pair(&config, jobs)?;
    pair.save(&args.out).with_context(|| format!("cannot write snapshots to {}", args.out.display()))?;
    let mut log = create(&args.out.join(TRAINING_LOG_CSV))?;
    writeln!(log, "{}", TrainingLog::CSV_HEADER)?;
    for run in &pair.runs {
        run.log.write_csv_rows(run.seed, &mut log)?;
    }
    log.flush()?;
    if !args.no_eval {
        print_summary(&evaluate_and_write(&pair, config.eval_episodes, &args.out, jobs)?);
    }
    Ok(())
}

fn load_pair(dir: &Path) -> Result<TrainedPair> {
    TrainedPair::load(dir).with_context(|| format!("cannot load a trained pairing from {}", dir.display()))
}

pub fn eval(args: &EvalArgs, jobs: usize) -> Result<()> {
    let pair = load_pair(&args.pair_dir)?;
    let out = args.out.clone().unwrap_or_else(|| args.pair_dir.clone());
    fs::create_dir_all(&out)?;
    let episodes = args.eval_episodes.unwrap_or(pair.config.eval_episodes);
    print_summary(&evaluate_and_write(&pair, episodes, &out, jobs)?);
    Ok(())
}

fn parse_seat(s: &str) -> Result<Seat> {
    s.parse().map_err(|_| usage(format!("seat must be p1 or p2, got {s:?}")))
}

fn seed_from_name(path: &Path) -> Option<u64> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix("seed-")?.split('-').next()?.parse().ok()
}

pub fn baseline(args: &BaselineEvalArgs, jobs: usize) -> Result<()> {
    let baselines: Vec<BaselineKind> = match args.baseline.as_str() {
        "all" => vec![BaselineKind::PureSf, BaselineKind::ipk(), BaselineKind::PkSf],
        other => vec![other.parse().map_err(|e| usage(format!("{e}")))?],
    };
    let (agents, config, out_dir, tag) = match &args.pair_dir {
        Some(dir) => {
            let pair = load_pair(dir)?;
            let seat = parse_seat(&args.seat)?;
            let agents: Vec<_> = pair.runs.iter().map(|r| (r.seed, r.players[seat.index()].clone())).collect();
            if agents.iter().any(|(_, p)| p.table().is_none()) {
                bail!(usage(format!("seat {seat} of this pairing is not a learning agent")));
            }
            (agents, pair.config, args.out.clone().unwrap_or_else(|| dir.clone()), seat.to_string().to_lowercase())
        }
        None => {
            let mut agents = Vec::new();
            for (i, path) in args.agent.iter().enumerate() {
                let table = load_table_from_path(path).with_context(|| format!("cannot load {}", path.display()))?;
                agents.push((seed_from_name(path).unwrap_or(i as u64 + 1), Player::Learner(table)));
            }
            let first = agents[0].1.table().expect("loaded from a snapshot");
            let mut config = ExperimentConfig::new(PairSpec::new(AgentKind::non(), AgentKind::non()));
            config.grid = first.grid();
            (agents, config, args.out.clone().unwrap_or_else(|| PathBuf::from(".")), "agent".to_string())
        }
    };
    fs::create_dir_all(&out_dir)?;
    let episodes = args.eval_episodes.unwrap_or(config.eval_episodes);
    for b in baselines {
        let (report, _) = baseline_eval(&agents, b, &config, episodes, jobs)?;
        write_report(&out_dir, &format!("baseline-{tag}-{}.csv", b.name()), &report)?;
        print_summary(&report);
    }
    Ok(())
}

pub fn sweep(args: &SweepArgs, jobs: usize) -> Result<()> {
    let base = build_config(&args.experiment)?;
    let param: SweepParam = args.param.parse().map_err(|e| usage(format!("{e}")))?;
    fs::create_dir_all(&args.out)?;
    let results = training::sweep(&base, param, &args.values, jobs)?;
    let mut out = create(&args.out.join("sweep.csv"))?;
    writeln!(out, "param,value,{}", metrics::CSV_HEADER)?;
    for (value, report) in &results {
        let mut rows = Vec::new();
        metrics::write_csv_rows(report, &mut rows)?;
        for line in String::from_utf8(rows)?.lines() {
            writeln!(out, "{},{value},{line}", args.param)?;
        }
        print_summary(report);
    }
    out.flush()?;
    Ok(())
}

fn read_eval_log(path: &Path, grid: GridConfig) -> Result<Vec<(u64, Vec<EpisodeRecord>)>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut logs: Vec<(u64, Vec<EpisodeRecord>)> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: EvalLine = serde_json::from_str(&line)
            .map_err(|e| usage(format!("{} line {}: {e}", path.display(), i + 1)))?;
        entry.record.verify(grid).with_context(|| format!("line {} fails replay", i + 1))?;
        match logs.last_mut() {
            Some((seed, records)) if *seed == entry.seed => records.push(entry.record),
            _ => logs.push((entry.seed, vec![entry.record])),
        }
    }
    if logs.is_empty() {
        bail!(usage(format!("{} holds no episodes", path.display())));
    }
    Ok(logs)
}

pub fn heatmap(args: &HeatmapArgs, jobs: usize) -> Result<()> {
    let seat = parse_seat(&args.seat)?;
    let (records, grid): (Vec<EpisodeRecord>, GridConfig) = match (&args.log, &args.pair_dir) {
        (Some(log), _) => {
            let grid = grid_from(args.config.as_ref())?;
            (read_eval_log(log, grid)?.into_iter().flat_map(|(_, r)| r).collect(), grid)
        }
        (None, Some(dir)) => {
            let pair = load_pair(dir)?;
            let episodes = args.eval_episodes.unwrap_or(pair.config.eval_episodes);
            (evaluation_logs(&pair, episodes, jobs)?.into_iter().flat_map(|(_, r)| r).collect(), pair.config.grid)
        }
        (None, None) => bail!(usage("either --log or --pair-dir is required")),
    };
    let map = entropy_heatmap(&records, seat, grid.turns, grid.cols);
    let mut out = create(&args.out)?;
    writeln!(out, "turn,col,visits,h_plus,h_minus")?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for t in 0..map.turns {
        for c in 0..map.cols {
            writeln!(out, "{t},{c},{},{},{}", map.visits[t][c], cell(map.h_plus[t][c]), cell(map.h_minus[t][c]))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn serve_cmd(args: &ServeArgs) -> Result<()> {
    let opponents = load_opponents(args.snapshots.as_deref())
        .with_context(|| "cannot load opponent snapshots".to_string())?;
    let mut manager = SessionManager::new(opponents, GridConfig::default()).with_turn_ms(args.turn_ms);
    if let Some(dir) = &args.log_dir {
        fs::create_dir_all(dir)?;
        manager = manager.with_log_dir(dir);
    }
    let slots = manager.slots();
    let addr = format!("{}:{}", args.host, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr).await.with_context(|| format!("cannot bind {addr}"))?;
        println!("listening on {} with opponents {}", listener.local_addr()?, slots.join(", "));
        serve(listener, AppState::new(manager), args.static_dir.clone()).await?;
        Ok(())
    })
}

fn grid_from(config: Option<&PathBuf>) -> Result<GridConfig> {
    match config {
        None => Ok(GridConfig::default()),
        Some(path) => {
            let path = if path.is_dir() { path.join(CONFIG_FILE) } else { path.clone() };
            let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
            Ok(ExperimentConfig::from_config_text(&text)?.grid)
        }
    }
}

fn is_round_log(path: &Path) -> Result<bool> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        return Ok(v.get("session_id").is_some());
    }
    Ok(false)
}

pub fn replay(args: &ReplayArgs) -> Result<()> {
    let grid = grid_from(args.config.as_ref())?;
    let path = &args.log;
    if is_round_log(path)? {
        let file = File::open(path)?;
        let rounds = read_log(BufReader::new(file)).map_err(|e| usage(e.to_string()))?;
        for r in &rounds {
            r.verify(grid).map_err(|e| usage(e.to_string()))?;
        }
        println!("{} rounds replayed without mismatch", rounds.len());
        if !rounds.is_empty() {
            let records: Vec<_> = rounds.iter().map(|r| r.to_episode(grid)).collect();
            let rates = metrics::success_rates(&records, Seat::P1)?;
            let score = rounds.iter().filter(|r| r.success[0]).count();
            println!("human score {score}; rates {}", serde_json::to_string(&rates)?);
        }
    } else {
        let logs = read_eval_log(path, grid)?;
        let n: usize = logs.iter().map(|(_, r)| r.len()).sum();
        println!("{n} episodes replayed without mismatch");
        print_summary(&report_from_logs("replay", ["P1".into(), "P2".into()], &logs)?);
    }
    Ok(())
}
