#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};
use tokio_tungstenite::tungstenite::Message;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn cellist() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cellist"))
}

/// `cellist` with the fixture models attached.
pub fn with_models(sub: &str) -> Command {
    let mut c = cellist();
    c.arg(sub)
        .arg("--wrist-model")
        .arg(fixture("wrist_model.json"))
        .arg("--elbow-model")
        .arg(fixture("elbow_model.json"));
    c
}

pub fn replay_to(out: &Path) -> std::process::Output {
    with_models("replay")
        .arg("--stream")
        .arg(fixture("stream.jsonl"))
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

pub struct ServeProcess {
    pub child: Child,
    pub url: String,
}

impl ServeProcess {
    /// Starts `cellist serve` on a free port and waits for its address.
    pub fn spawn(store: &Path) -> Self {
        let mut child = with_models("serve")
            .arg("--listen")
            .arg("127.0.0.1:0")
            .arg("--store")
            .arg(store)
            .env("RUST_LOG", "warn")
            .stderr(Stdio::piped())
            .spawn()
            .unwrap();
        let stderr = child.stderr.take().unwrap();
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stderr).lines().map_while(Result::ok) {
                if let Some(url) = line.strip_prefix("listening on ") {
                    let _ = tx.send(url.to_string());
                }
            }
        });
        let url = rx.recv_timeout(Duration::from_secs(30)).expect("server announces its address");
        Self { child, url }
    }

    pub fn interrupt(&self) {
        unsafe {
            libc::kill(self.child.id() as libc::pid_t, libc::SIGINT);
        }
    }

    pub fn wait_exit(&mut self, limit: Duration) -> Option<std::process::ExitStatus> {
        let deadline = Instant::now() + limit;
        while Instant::now() < deadline {
            if let Some(status) = self.child.try_wait().unwrap() {
                return Some(status);
            }
            std::thread::sleep(Duration::from_millis(20));
        }
        None
    }
}

impl Drop for ServeProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

type Client = WebSocketStream<MaybeTlsStream<tokio::net::TcpStream>>;

async fn next_json(ws: &mut Client) -> Value {
    loop {
        match ws.next().await.expect("connection open").unwrap() {
            Message::Text(t) => return serde_json::from_str(t.as_str()).unwrap(),
            Message::Close(_) => panic!("server closed the connection"),
            _ => continue,
        }
    }
}

pub struct LiveRun {
    pub frames: Vec<Value>,
    pub summary: Value,
}

/// Streams `lines` (canonical packet records) through one session.
pub fn drive_session(url: &str, user: &str, lines: &[String]) -> LiveRun {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    rt.block_on(async {
        let (mut ws, _) = connect_async(url).await.unwrap();
        let start = json!({"type": "start", "user": user});
        ws.send(Message::Text(start.to_string().into())).await.unwrap();
        let started = next_json(&mut ws).await;
        let token = started["token"].as_str().expect("started").to_string();
        for line in lines {
            let packet: Value = serde_json::from_str(line).unwrap();
            let msg = json!({"type": "frame", "token": token, "packet": packet});
            ws.send(Message::Text(msg.to_string().into())).await.unwrap();
        }
        let mut frames = Vec::with_capacity(lines.len());
        for _ in lines {
            frames.push(next_json(&mut ws).await);
        }
        let end = json!({"type": "end", "token": token});
        ws.send(Message::Text(end.to_string().into())).await.unwrap();
        let summary = next_json(&mut ws).await;
        let _ = ws.close(None).await;
        LiveRun { frames, summary }
    })
}
