use std::io::Write;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::RouteTarget;

/// One routed sample, written as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub sample_id: u64,
    pub target: RouteTarget,
    pub c_x: f64,
    pub c_s: Option<f64>,
    pub c_l: Option<f64>,
    pub degraded: bool,
    pub timestamp_ms: u64,
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

/// Append-only decision sink; safe to append from many threads.
#[derive(Debug, Default)]
pub struct DecisionLog {
    records: Mutex<Vec<DecisionRecord>>,
}

impl DecisionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&self, record: DecisionRecord) {
        self.records.lock().expect("decision log poisoned").push(record);
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("decision log poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<DecisionRecord> {
        self.records.lock().expect("decision log poisoned").clone()
    }

    /// Percentage of records routed to the large model, recounted from the log.
    pub fn lm_rate(&self) -> f64 {
        lm_rate(&self.snapshot())
    }

    pub fn write_ndjson<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in self.snapshot() {
            serde_json::to_writer(&mut w, &r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn lm_rate(records: &[DecisionRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let large = records.iter().filter(|r| r.target == RouteTarget::LargeModel).count();
    100.0 * large as f64 / records.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn rec(id: u64, target: RouteTarget) -> DecisionRecord {
        DecisionRecord { sample_id: id, target, c_x: 0.5, c_s: None, c_l: None, degraded: false, timestamp_ms: 0 }
    }

    #[test]
    fn concurrent_appends() {
        let log = Arc::new(DecisionLog::new());
        let handles: Vec<_> = (0..8)
            .map(|t| {
                let log = Arc::clone(&log);
                std::thread::spawn(move || {
                    for i in 0..100 {
                        log.append(rec(t * 100 + i, RouteTarget::LargeModel));
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(log.len(), 800);
        assert_eq!(log.lm_rate(), 100.0);
    }

    #[test]
    fn ndjson_lines() {
        let log = DecisionLog::new();
        log.append(rec(1, RouteTarget::JudgmentModel));
        log.append(rec(2, RouteTarget::LargeModel));
        let mut buf = Vec::new();
        log.write_ndjson(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"target\":\"large_model\""));
        assert_eq!(log.lm_rate(), 50.0);
    }
}
