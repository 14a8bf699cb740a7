use std::fs;
use std::process::{Command, Output};

fn corridor(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_corridor"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn config_of(dir: &std::path::Path) -> String {
    fs::read_to_string(dir.join("experiment.cfg")).unwrap()
}

#[test]
fn flags_override_environment_which_overrides_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.cfg");
    fs::write(&cfg, "# small run\npair = non:pos\nepisodes = 50\nseeds = 1,2\neval_episodes = 20\nhistory_len = 3\n").unwrap();
    let out = tmp.path().join("run");
    let o = corridor(
        &["train", "--config", cfg.to_str().unwrap(), "--episodes", "40", "--out", out.to_str().unwrap()],
        &[("CORRIDOR_EPISODES", "70"), ("CORRIDOR_SEEDS", "3"), ("CORRIDOR_JOBS", "1")],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = config_of(&out);
    assert!(text.contains("pair = non:pos"));
    assert!(text.contains("episodes = 40\n"), "{text}");
    assert!(text.contains("seeds = 3\n"));
    assert!(text.contains("history_len = 3\n"));
    assert!(out.join("seed-3-p2.qtable").exists());
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.starts_with("experiment,seed,agent,SRCP"));
    assert_eq!(results.lines().count(), 1 + 2 + 4);
}

#[test]
fn usage_errors_exit_with_two_and_io_errors_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let out = out.to_str().unwrap();
    assert_eq!(corridor(&["train", "--out", out], &[]).status.code(), Some(2));
    assert_eq!(corridor(&["train", "--pair", "pos:wizard", "--out", out], &[]).status.code(), Some(2));
    assert_eq!(corridor(&["train", "--pair", "pos:pos", "--history-len", "9", "--out", out], &[]).status.code(), Some(2));
    assert_eq!(corridor(&["frobnicate"], &[]).status.code(), Some(2));
    assert_eq!(corridor(&["eval", "--pair-dir", "/definitely/not/here"], &[]).status.code(), Some(1));
    assert_eq!(corridor(&["replay"], &[]).status.code(), Some(2));
}

#[test]
fn eval_log_replays_and_tampering_is_caught() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = corridor(
        &["train", "--pair", "pos:ipk-sf", "--episodes", "100", "--seeds", "5", "--eval-episodes", "30", "--out", out.to_str().unwrap()],
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let log = out.join("eval_log.jsonl");
    let o = corridor(&["replay", "--log", log.to_str().unwrap(), "--config", out.to_str().unwrap()], &[]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("30 episodes replayed"));

    let heat = tmp.path().join("heat.csv");
    let o = corridor(&["export-heatmap", "--log", log.to_str().unwrap(), "--seat", "p1", "--out", heat.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(&heat).unwrap();
    assert_eq!(rows.lines().count(), 1 + 25);
    let visits: usize = rows.lines().skip(1).filter(|l| l.starts_with("0,")).map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(visits, 30);

    let o = corridor(
        &["baseline-eval", "--agent", out.join("seed-5-p1.qtable").to_str().unwrap(), "--baseline", "pk-sf", "--episodes", "40", "--out", tmp.path().to_str().unwrap()],
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(tmp.path().join("baseline-agent-pk-sf.csv")).unwrap();
    assert!(rows.lines().nth(1).unwrap().starts_with("pos:pk-sf,5,P1:pos,"), "{rows}");

    let text = fs::read_to_string(&log).unwrap();
    let tampered = text.replacen("\"success\":[true", "\"success\":[false", 1).replacen("\"success\":[false,false]", "\"success\":[true,false]", 1);
    assert_ne!(tampered, text);
    fs::write(&log, tampered).unwrap();
    let o = corridor(&["replay", "--log", log.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    let heat = tmp.path().join("heat2.csv");
    let o = corridor(
        &["export-heatmap", "--pair-dir", out.to_str().unwrap(), "--seat", "p1", "--eval-episodes", "20", "--out", heat.to_str().unwrap()],
        &[],
    );
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(heat).unwrap().lines().count(), 1 + 25);
}

#[test]
fn session_logs_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("s.jsonl");
    let line = r#"{"session_id":"a","round":0,"objectives":["meet","pass"],"start_cols":[0,4],"actions":[["right","right","right","right","right"],["straight","straight","straight","straight","straight"]],"forced":[false,false,false,false,false],"final_cols":[4,4],"outcome":"meet","success":[true,false]}"#;
    fs::write(&log, format!("{line}\n")).unwrap();
    let o = corridor(&["replay", "--log", log.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("1 rounds replayed"));
    fs::write(&log, format!("{}\n", line.replace("[4,4]", "[3,4]"))).unwrap();
    assert_eq!(corridor(&["replay", "--log", log.to_str().unwrap()], &[]).status.code(), Some(2));
}
