mod common;

use std::time::Duration;

use common::{ok_json, Reply, StubServer};
use kcm::backends::{BackendError, HttpBackend, HttpConfig, LargeModel};
use kcm::collab::build_prompt;
use kcm::data::{Region, Sample, Split};

fn labels() -> Vec<String> {
    ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect()
}

fn sample() -> Sample {
    Sample { id: 42, features: vec![0.5, -1.0], label: 1, region: Region::Tail, split: Split::Test }
}

fn backend(url: &str, timeout_ms: u64) -> HttpBackend {
    HttpBackend::new(HttpConfig {
        endpoint: url.to_string(),
        timeout_ms,
        max_retries: 2,
        backoff_ms: 5,
        max_backoff_ms: 20,
        bearer_token: Some("secret".into()),
        ..Default::default()
    })
    .unwrap()
}

fn call(b: &HttpBackend) -> Result<kcm::backends::LargeModelResponse, BackendError> {
    let prompt = build_prompt(42, &[0.1, 0.6, 0.2, 0.1], 0.42, &labels(), 2);
    b.predict(&sample(), &prompt, &labels())
}

#[test]
fn uniform_distribution_gives_quarter_confidence() {
    let stub = StubServer::spawn(|_, _| ok_json(&[0.25; 4]));
    let r = call(&backend(&stub.url, 2_000)).unwrap();
    assert!((r.confidence - 0.25).abs() < 1e-12);
    assert_eq!(r.model_name, "stub");
    assert_eq!(stub.hits(), 1);

    let (auth, body) = stub.last_request().unwrap();
    assert_eq!(auth.as_deref(), Some("Bearer secret"));
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["sample_id"], 42);
    assert_eq!(v["labels"].as_array().unwrap().len(), 4);
    assert!(v["prompt"].as_str().unwrap().contains("the confidence of the small model is 0.4200"));
}

#[test]
fn distribution_summing_to_point_nine_is_malformed_and_not_retried() {
    let stub = StubServer::spawn(|_, _| ok_json(&[0.3, 0.3, 0.2, 0.1]));
    assert!(matches!(call(&backend(&stub.url, 2_000)), Err(BackendError::Malformed(_))));
    assert_eq!(stub.hits(), 1);
}

#[test]
fn garbage_body_is_malformed() {
    let stub = StubServer::spawn(|_, _| Reply { status: 200, body: "not json".into(), delay: Duration::ZERO });
    assert!(matches!(call(&backend(&stub.url, 2_000)), Err(BackendError::Malformed(_))));
}

#[test]
fn slow_service_times_out_after_every_retry() {
    let stub = StubServer::spawn(|_, _| Reply { delay: Duration::from_millis(400), ..ok_json(&[0.25; 4]) });
    match call(&backend(&stub.url, 100)) {
        Err(BackendError::Timeout { attempts }) => assert_eq!(attempts, 3),
        other => panic!("expected timeout, got {other:?}"),
    }
    std::thread::sleep(Duration::from_millis(50));
    assert_eq!(stub.hits(), 3);
}

#[test]
fn server_error_is_retried_then_succeeds() {
    let stub = StubServer::spawn(|n, _| {
        if n == 0 {
            Reply { status: 503, body: String::new(), delay: Duration::ZERO }
        } else {
            ok_json(&[0.7, 0.1, 0.1, 0.1])
        }
    });
    let r = call(&backend(&stub.url, 2_000)).unwrap();
    assert_eq!(r.predicted_class(), 0);
    assert_eq!(stub.hits(), 2);
}

#[test]
fn client_error_is_final() {
    let stub = StubServer::spawn(|_, _| Reply { status: 404, body: String::new(), delay: Duration::ZERO });
    assert_eq!(call(&backend(&stub.url, 2_000)).unwrap_err(), BackendError::Status { status: 404, attempts: 1 });
    assert_eq!(stub.hits(), 1);
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    // bind then drop to get a port nobody listens on
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let b = backend(&format!("http://127.0.0.1:{port}/"), 500);
    assert!(matches!(call(&b), Err(BackendError::Transport { attempts: 3, .. })));
}

#[test]
fn wrong_wire_version_is_malformed() {
    let stub = StubServer::spawn(|_, _| Reply {
        status: 200,
        body: r#"{"version":2,"distribution":[0.25,0.25,0.25,0.25],"model_name":"x"}"#.into(),
        delay: Duration::ZERO,
    });
    assert!(matches!(call(&backend(&stub.url, 2_000)), Err(BackendError::Malformed(_))));
}
