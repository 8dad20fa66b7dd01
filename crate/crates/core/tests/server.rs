mod common;

use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;

use signlink::service::server::{serve, AppState};
use signlink::service::{replay, ControlAction, Inbound, Outbound, PipelineConfig, Speed, PROTOCOL_VERSION};

const LABELS: [&str; 4] = ["not_signing", "cough", "medicine", "pain"];

async fn start(record_dir: Option<std::path::PathBuf>) -> (std::net::SocketAddr, Arc<signlink::service::Engine>) {
    let engine = common::reader_engine(&LABELS, PipelineConfig::default());
    let state = Arc::new(AppState::new(engine.clone(), record_dir));
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, state));
    (addr, engine)
}

fn script(engine: &signlink::service::Engine, class: usize) -> Vec<Inbound> {
    let mut msgs = vec![
        Inbound::Hello {
            version: PROTOCOL_VERSION,
            landmarks: Some(2),
            vocabulary: Some(LABELS.iter().map(|s| s.to_string()).collect()),
        },
        Inbound::Control {
            action: ControlAction::Start,
        },
    ];
    let mut t = 0;
    for (c, n) in [(class, 40), (0, 55)] {
        for _ in 0..n {
            msgs.push(Inbound::Frame {
                t,
                coords: common::reader_frame(engine.model(), c),
            });
            t += 100;
        }
    }
    msgs.push(Inbound::Control {
        action: ControlAction::Generate,
    });
    msgs
}

/// Sends `msgs` one record per message and collects replies until `expected`
/// records have arrived.
async fn run_client(addr: std::net::SocketAddr, msgs: &[Inbound], batch: bool, expected: usize) -> Vec<Outbound> {
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    if batch {
        let text: String = msgs.iter().map(|m| m.to_line() + "\n").collect();
        ws.send(Message::Text(text.into())).await.unwrap();
    } else {
        for m in msgs {
            ws.send(Message::Text(m.to_line().into())).await.unwrap();
        }
    }
    let mut out = Vec::new();
    while out.len() < expected {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("reply within 10 s")
            .unwrap()
            .unwrap();
        if let Message::Text(t) = msg {
            out.push(serde_json::from_str::<Outbound>(t.as_str()).unwrap());
        }
    }
    ws.close(None).await.ok();
    out
}

fn offline(engine: &Arc<signlink::service::Engine>, msgs: &[Inbound]) -> Vec<Outbound> {
    let mut s = signlink::service::Session::new(engine.clone(), 0);
    for m in msgs {
        s.handle_message(m.clone());
    }
    s.log().to_vec()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn websocket_session_matches_offline_pipeline() {
    let (addr, engine) = start(None).await;
    let msgs = script(&engine, 1);
    let expected = offline(&engine, &msgs);
    assert!(matches!(expected.last(), Some(Outbound::Sentence { text, .. }) if text == "I have a cough"));
    let got = run_client(addr, &msgs, false, expected.len()).await;
    assert_eq!(got, expected);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn newline_batched_records_are_split() {
    let (addr, engine) = start(None).await;
    let msgs = script(&engine, 2);
    let expected = offline(&engine, &msgs);
    let got = run_client(addr, &msgs, true, expected.len()).await;
    assert_eq!(got, expected);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_sessions_do_not_interleave() {
    let (addr, engine) = start(None).await;
    let a = script(&engine, 2);
    let b = script(&engine, 3);
    let (ea, eb) = (offline(&engine, &a), offline(&engine, &b));
    let (ga, gb) = tokio::join!(run_client(addr, &a, false, ea.len()), run_client(addr, &b, false, eb.len()));
    assert_eq!(ga, ea);
    assert_eq!(gb, eb);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn recorded_session_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (addr, engine) = start(Some(dir.path().to_path_buf())).await;
    let msgs = script(&engine, 3);
    let expected = offline(&engine, &msgs);
    let live = run_client(addr, &msgs, false, expected.len()).await;

    // The recorder flushes when the connection closes.
    let mut path = None;
    for _ in 0..100 {
        let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().filter_map(|e| e.ok()).collect();
        if let Some(f) = files.first() {
            let text = std::fs::read_to_string(f.path()).unwrap();
            if text.lines().count() == msgs.len() {
                path = Some(f.path());
                break;
            }
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    let path = path.expect("session recording written");
    let replayed = tokio::task::spawn_blocking(move || replay(engine, &path, Speed::Max).unwrap())
        .await
        .unwrap();
    assert_eq!(replayed, live);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn unknown_type_gets_an_error_reply() {
    let (addr, _) = start(None).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    ws.send(Message::Text(r#"{"type":"audio","bytes":"AAAA"}"#.into())).await.unwrap();
    let reply = tokio::time::timeout(Duration::from_secs(10), ws.next()).await.unwrap().unwrap().unwrap();
    let reply: Outbound = serde_json::from_str(reply.to_text().unwrap()).unwrap();
    assert!(matches!(reply, Outbound::Error { code: signlink::service::ErrorCode::UnknownType, .. }));
}

async fn http_get(addr: std::net::SocketAddr, path: &str) -> String {
    let mut s = TcpStream::connect(addr).await.unwrap();
    s.write_all(format!("GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").as_bytes())
        .await
        .unwrap();
    let mut buf = String::new();
    s.read_to_string(&mut buf).await.unwrap();
    buf
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn info_and_health() {
    let (addr, _) = start(None).await;
    assert!(http_get(addr, "/health").await.ends_with("ok"));
    let info = http_get(addr, "/info").await;
    let body = info.split("\r\n\r\n").nth(1).unwrap();
    let v: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(v["protocol_version"], 1);
    assert_eq!(v["landmarks"], 2);
    assert_eq!(v["vocabulary"][1], "cough");
    assert_eq!(v["idle_label"], "not_signing");
}
