//! Drives a live server over WebSocket and HTTP the way a browser client would.

use std::collections::HashMap;
use std::time::Duration;

use corridor_core::metrics::success_rates;
use corridor_core::{GridConfig, Seat};
use corridor_service::log::read_log;
use corridor_service::protocol::{ServerMessage, TurnResult};
use corridor_service::server::{router, spawn_sweeper, AppState};
use corridor_service::{load_opponents, SessionManager};
use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start(turn_ms: u64, log_dir: Option<&std::path::Path>) -> String {
    let opponents = load_opponents(None).unwrap();
    let mut manager = SessionManager::new(opponents, GridConfig::default()).with_turn_ms(turn_ms);
    if let Some(dir) = log_dir {
        manager = manager.with_log_dir(dir);
    }
    let state = AppState::new(manager);
    spawn_sweeper(state.clone(), Duration::from_millis(20));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(state, None)).await.unwrap() });
    addr.to_string()
}

async fn connect(addr: &str) -> Ws {
    tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap().0
}

async fn send(ws: &mut Ws, v: Value) {
    ws.send(Message::Text(v.to_string().into())).await.unwrap();
}

async fn recv(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.expect("reply").unwrap().unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

async fn create(ws: &mut Ws, slot: &str, rounds: usize, seed: u64) -> Value {
    send(ws, json!({"type": "create", "opponent_slot": slot, "rounds": rounds, "seed": seed})).await;
    let v = recv(ws).await;
    assert_eq!(v["type"], "created", "{v}");
    v
}

#[tokio::test]
async fn same_seed_gives_same_layout_and_hides_the_opponent() {
    let addr = start(60_000, None).await;
    let mut ws = connect(&addr).await;
    let a = create(&mut ws, "pure-sf", 3, 11).await;
    let b = create(&mut ws, "pure-sf", 3, 11).await;
    for field in ["your_objective", "positions", "grid", "rounds_total"] {
        assert_eq!(a[field], b[field]);
    }
    assert_ne!(a["session_id"], b["session_id"]);
    let text = a.to_string();
    assert!(!text.contains("pure-sf") && !text.contains("opponent_objective"));
    assert_eq!(a["positions"]["you"]["row"], 0);
    assert_eq!(a["grid"], json!({"rows": 11, "cols": 5, "turns": 5}));
}

#[tokio::test]
async fn five_actions_complete_a_round() {
    let addr = start(60_000, None).await;
    let mut ws = connect(&addr).await;
    let c = create(&mut ws, "random", 2, 5).await;
    let id = c["session_id"].as_str().unwrap().to_string();
    for turn in 0..5 {
        send(&mut ws, json!({"type": "act", "session_id": id, "action": "right", "turn": {"round": 0, "turn": turn}})).await;
        let v = recv(&mut ws).await;
        assert_eq!(v["type"], "turn", "{v}");
        assert_eq!(v["moves"]["you"], "right");
        assert_eq!(v["round_status"]["round_over"], turn == 4);
        if turn == 4 {
            assert!(v["outcome"]["outcome"].is_string());
            assert!(v["scores"]["you"].is_u64());
            assert_eq!(v["next_round"]["round"], 1);
            assert!(v.get("opponent_objective").is_none());
        } else {
            assert!(v.get("outcome").is_none());
        }
    }
}

#[tokio::test]
async fn duplicate_action_is_a_conflict() {
    let addr = start(60_000, None).await;
    let mut ws = connect(&addr).await;
    let id = create(&mut ws, "random", 1, 5).await["session_id"].as_str().unwrap().to_string();
    let act = json!({"type": "act", "session_id": id, "action": "left", "turn": {"round": 0, "turn": 0}});
    send(&mut ws, act.clone()).await;
    assert_eq!(recv(&mut ws).await["type"], "turn");
    send(&mut ws, act).await;
    let v = recv(&mut ws).await;
    assert_eq!(v["type"], "error");
    assert_eq!(v["code"], "conflict");

    send(&mut ws, json!({"type": "act", "session_id": "nope", "action": "left"})).await;
    assert_eq!(recv(&mut ws).await["code"], "not_found");
    send(&mut ws, json!({"type": "fly"})).await;
    assert_eq!(recv(&mut ws).await["code"], "bad_request");
}

#[tokio::test]
async fn idle_player_is_moved_straight() {
    let addr = start(150, None).await;
    let mut ws = connect(&addr).await;
    let c = create(&mut ws, "random", 1, 9).await;
    let start_col = c["positions"]["you"]["col"].clone();
    let v = recv(&mut ws).await;
    let turn: TurnResult = match serde_json::from_value::<ServerMessage>(v).unwrap() {
        ServerMessage::Turn(t) => t,
        other => panic!("{other:?}"),
    };
    assert!(turn.forced);
    assert_eq!(turn.moves.you, corridor_core::Action::Straight);
    assert_eq!(json!(turn.positions.you.col), start_col);
    assert_eq!(turn.round_status.turn, 1);
}

#[tokio::test]
async fn report_matches_offline_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let addr = start(60_000, Some(dir.path())).await;
    let mut ws = connect(&addr).await;
    let rounds = 40;
    let id = create(&mut ws, "pk-sf", rounds, 21).await["session_id"].as_str().unwrap().to_string();
    let actions = ["left", "straight", "right"];
    let mut winners_checked = 0;
    for i in 0..rounds * 5 {
        send(&mut ws, json!({"type": "act", "session_id": id, "action": actions[(i * 7 + i / 5) % 3]})).await;
        let v = recv(&mut ws).await;
        assert_eq!(v["type"], "turn", "{v}");
        if v["round_status"]["round_over"] == true {
            winners_checked += 1;
        }
    }
    assert_eq!(winners_checked, rounds);
    send(&mut ws, json!({"type": "report", "session_id": id})).await;
    let report = recv(&mut ws).await;
    assert_eq!(report["rounds_completed"], rounds);

    let file = std::fs::File::open(dir.path().join(format!("{id}.jsonl"))).unwrap();
    let log = read_log(std::io::BufReader::new(file)).unwrap();
    assert_eq!(log.len(), rounds);
    let grid = GridConfig::default();
    let records: Vec<_> = log.iter().map(|r| r.to_episode(grid)).collect();
    let mut competitive = 0;
    for (r, e) in log.iter().zip(&records) {
        r.verify(grid).unwrap();
        if !e.is_collaborative() {
            competitive += 1;
            assert!(e.success[0] ^ e.success[1], "a competitive round has exactly one winner");
        }
    }
    let rates = success_rates(&records, Seat::P1).unwrap();
    let score = log.iter().filter(|r| r.success[0]).count();
    assert_eq!(report["score"], score);
    assert_eq!(report["competitive_rounds"], competitive);
    for (name, v) in [("srcp", rates.srcp), ("srcl", rates.srcl), ("srp", rates.srp), ("srm", rates.srm)] {
        assert_eq!(report[name], json!(v), "{name}");
    }

    // The HTTP log endpoint serves the same lines.
    let body = http_get(&addr, &format!("/api/sessions/{id}/log")).await;
    assert_eq!(read_log(body.as_bytes()).unwrap(), log);
    send(&mut ws, json!({"type": "act", "session_id": id, "action": "left"})).await;
    assert_eq!(recv(&mut ws).await["code"], "finished");
}

async fn http(addr: &str, request: String) -> (u16, String) {
    use tokio::io::{AsyncReadExt, AsyncWriteExt};
    let mut stream = TcpStream::connect(addr).await.unwrap();
    stream.write_all(request.as_bytes()).await.unwrap();
    let mut buf = String::new();
    stream.read_to_string(&mut buf).await.unwrap();
    let status = buf[9..12].parse().unwrap();
    let body = buf.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

async fn http_get(addr: &str, path: &str) -> String {
    let (status, body) = http(addr, format!("GET {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")).await;
    assert_eq!(status, 200);
    body
}

async fn http_post(addr: &str, path: &str, body: Value) -> (u16, Value) {
    let body = body.to_string();
    let (status, text) = http(
        addr,
        format!(
            "POST {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
            body.len()
        ),
    )
    .await;
    (status, serde_json::from_str(&text).unwrap_or(Value::Null))
}

#[tokio::test]
async fn http_endpoints_mirror_the_socket() {
    let addr = start(60_000, None).await;
    let slots: Vec<String> = serde_json::from_str(&http_get(&addr, "/api/slots").await).unwrap();
    assert_eq!(slots, ["ipk-sf", "pk-sf", "pure-sf", "random"]);

    let (status, created) = http_post(&addr, "/api/sessions", json!({"opponent_slot": "ipk-sf", "rounds": 1, "seed": 3})).await;
    assert_eq!(status, 201);
    let id = created["session_id"].as_str().unwrap();
    let (status, turn) = http_post(&addr, &format!("/api/sessions/{id}/act"), json!({"action": "straight"})).await;
    assert_eq!(status, 200);
    assert_eq!(turn["type"], "turn");
    let (status, err) =
        http_post(&addr, &format!("/api/sessions/{id}/act"), json!({"action": "left", "turn": {"round": 0, "turn": 0}})).await;
    assert_eq!((status, err["code"].as_str()), (409, Some("conflict")));
    let (status, err) = http_post(&addr, "/api/sessions", json!({"opponent_slot": "ghost"})).await;
    assert_eq!((status, err["code"].as_str()), (404, Some("not_found")));

    let report: HashMap<String, Value> = serde_json::from_str(&http_get(&addr, &format!("/api/sessions/{id}/report")).await).unwrap();
    assert_eq!(report["type"], "report");
    assert_eq!(report["rounds_completed"], 0);
    assert_eq!(report["srcp"], Value::Null);
}
