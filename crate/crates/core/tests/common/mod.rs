#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use kcm::data::{generate_longtail, Dataset, LongTailSpec};

/// What the stub returns for the n-th request (0-based).
pub struct Reply {
    pub status: u16,
    pub body: String,
    pub delay: Duration,
}

pub struct Received {
    pub authorization: Option<String>,
    pub body: String,
}

pub struct StubServer {
    pub url: String,
    hits: Arc<AtomicUsize>,
    received: Arc<Mutex<Vec<Received>>>,
}

impl StubServer {
    pub fn spawn<F>(reply: F) -> Self
    where
        F: Fn(usize, &str) -> Reply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/predict", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let received = Arc::new(Mutex::new(Vec::new()));
        let reply = Arc::new(reply);
        let (h, r) = (hits.clone(), received.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let (h, r, reply) = (h.clone(), r.clone(), reply.clone());
                thread::spawn(move || serve(stream, &h, &r, reply.as_ref()));
            }
        });
        Self { url, hits, received }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn last_request(&self) -> Option<(Option<String>, String)> {
        self.received.lock().unwrap().last().map(|r| (r.authorization.clone(), r.body.clone()))
    }
}

fn serve(
    stream: TcpStream,
    hits: &AtomicUsize,
    received: &Mutex<Vec<Received>>,
    reply: &(dyn Fn(usize, &str) -> Reply + Send + Sync),
) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut len = 0usize;
    let mut authorization = None;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        let lower = line.to_ascii_lowercase();
        if let Some(v) = lower.strip_prefix("content-length:") {
            len = v.trim().parse().unwrap_or(0);
        }
        if lower.starts_with("authorization:") {
            authorization = Some(line["authorization:".len()..].trim().to_string());
        }
    }
    let mut body = vec![0u8; len];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let body = String::from_utf8_lossy(&body).to_string();
    let n = hits.fetch_add(1, Ordering::SeqCst);
    received.lock().unwrap().push(Received { authorization, body: body.clone() });
    let r = reply(n, &body);
    thread::sleep(r.delay);
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        r.status,
        r.body.len(),
        r.body
    );
    let _ = stream.flush();
}

pub fn ok_json(distribution: &[f64]) -> Reply {
    let body = serde_json::json!({ "version": 1, "distribution": distribution, "model_name": "stub" }).to_string();
    Reply { status: 200, body, delay: Duration::ZERO }
}

/// Small long-tail dataset that trains in well under a second.
pub fn small_dataset(seed: u64) -> Dataset {
    generate_longtail(&LongTailSpec {
        num_classes: 6,
        feature_dim: 6,
        max_per_class: 120,
        imbalance: 12.0,
        val_per_class: 30,
        test_per_class: 30,
        seed,
        ..Default::default()
    })
    .unwrap()
}
