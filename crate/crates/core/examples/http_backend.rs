//! Talk to a model service over HTTP. With no argument a throwaway local
//! service answering a fixed distribution is started; otherwise the given
//! endpoint is used, with `KCM_BEARER_TOKEN` as the bearer token.
//!
//!     cargo run --example http_backend [-- http://host:port/predict]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;

use kcm::backends::{HttpBackend, HttpConfig, LargeModel};
use kcm::collab::build_prompt;
use kcm::data::{Region, Sample, Split};

fn local_service() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/predict", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut line = String::new();
            while reader.read_line(&mut line).unwrap_or(0) > 0 && line.trim() != "" {
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
                line.clear();
            }
            let mut body = vec![0; len];
            let _ = reader.read_exact(&mut body);
            eprintln!("service got: {}", String::from_utf8_lossy(&body));
            let reply = r#"{"version":1,"distribution":[0.1,0.8,0.1],"model_name":"local"}"#;
            let mut s = stream;
            let _ = write!(s, "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}", reply.len());
        }
    });
    url
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let endpoint = std::env::args().nth(1).unwrap_or_else(local_service);
    let backend = HttpBackend::new(HttpConfig {
        endpoint,
        bearer_token: std::env::var(kcm::cli::TOKEN_ENV).ok(),
        ..Default::default()
    })?;

    let labels: Vec<String> = ["ant", "bee", "cow"].iter().map(|s| s.to_string()).collect();
    let sample = Sample { id: 1, features: vec![0.3, -0.2], label: 1, region: Region::Tail, split: Split::Test };
    let prompt = build_prompt(sample.id, &[0.4, 0.35, 0.25], 0.4, &labels, 2);
    let r = backend.predict(&sample, &prompt, &labels)?;
    println!("{} says {} with confidence {:.2} ({:?})", r.model_name, labels[r.predicted_class()], r.confidence, r.latency);
    Ok(())
}
