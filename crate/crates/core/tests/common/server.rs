//! Minimal HTTP/1.1 server speaking the inference wire protocol, answering
//! from a wrapped gateway. Used to exercise the HTTP backend without models.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use agentzero_core::gateway::{FillQuery, ModelGateway};
use serde_json::{json, Value};

#[derive(Default)]
pub struct Behavior {
    /// Answer this many requests with 503 before serving normally.
    pub fail_first: AtomicUsize,
    /// Answer every request with 503.
    pub always_fail: AtomicBool,
    /// Answer 200 with a body that is not valid JSON.
    pub garbage: AtomicBool,
    /// Sleep before answering.
    pub delay_ms: AtomicUsize,
}

#[derive(Default)]
pub struct Stats {
    pub requests: AtomicUsize,
    pub in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
}

pub struct ReplayServer {
    pub url: String,
    pub behavior: Arc<Behavior>,
    pub stats: Arc<Stats>,
}

impl ReplayServer {
    pub fn start(gateway: Arc<dyn ModelGateway>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        let url = format!("http://{}", listener.local_addr().unwrap());
        let behavior = Arc::new(Behavior::default());
        let stats = Arc::new(Stats::default());
        let (b, s) = (behavior.clone(), stats.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (g, b, s) = (gateway.clone(), b.clone(), s.clone());
                thread::spawn(move || {
                    let _ = serve(stream, &*g, &b, &s);
                });
            }
        });
        Self { url, behavior, stats }
    }
}

fn serve(stream: TcpStream, g: &dyn ModelGateway, b: &Behavior, s: &Stats) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut len = 0usize;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body)?;

    s.requests.fetch_add(1, Ordering::SeqCst);
    let now = s.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    s.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let delay = b.delay_ms.load(Ordering::SeqCst);
    if delay > 0 {
        thread::sleep(Duration::from_millis(delay as u64));
    }
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let fail_now = b.always_fail.load(Ordering::SeqCst)
        || b.fail_first
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok();
    let (status, payload) = if fail_now {
        (503, json!({"error": "loading"}).to_string())
    } else if b.garbage.load(Ordering::SeqCst) {
        (200, "{not json".to_string())
    } else {
        route(&path, &body, g)
    };
    s.in_flight.fetch_sub(1, Ordering::SeqCst);

    let reason = if status == 200 { "OK" } else { "Error" };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    out.flush()
}

fn route(path: &str, body: &[u8], g: &dyn ModelGateway) -> (u16, String) {
    if path == "/health" {
        return (200, json!({"status": "ok"}).to_string());
    }
    let Ok(req) = serde_json::from_slice::<Value>(body) else {
        return (400, json!({"error": "bad json"}).to_string());
    };
    let text = req.get("text").and_then(Value::as_str).unwrap_or_default();
    let result = match path {
        "/paraphrase" => {
            let n = req.get("n").and_then(Value::as_u64).unwrap_or(1) as usize;
            g.paraphrase(text, n).map(|c| json!({"candidates": c}))
        }
        "/ner" => g.recognize_entities(text).map(|ms| {
            let mentions: Vec<Value> = ms
                .iter()
                .map(|m| json!({"start": m.start, "end": m.end, "label": m.label.wire_name()}))
                .collect();
            json!({"mentions": mentions})
        }),
        "/fill" => {
            let template = req.get("template").and_then(Value::as_str).unwrap_or_default();
            let options: Vec<String> = req
                .get("options")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
                .unwrap_or_default();
            match FillQuery::new(template, options) {
                Ok(q) => g.score_fill(&q).map(|r| {
                    let ranked: Vec<Value> = r.iter().map(|(o, s)| json!({"option": o, "score": s})).collect();
                    json!({"ranked": ranked})
                }),
                Err(e) => Err(e),
            }
        }
        _ => return (404, json!({"error": "no such endpoint"}).to_string()),
    };
    match result {
        Ok(v) => (200, v.to_string()),
        Err(e) => (400, json!({"error": e.to_string()}).to_string()),
    }
}
