//! Softmax confidence and the three-way routing gate.
//!
//!     cargo run --example confidence_routing

use kcm::collab::{confidence, decide, ConfidenceScore, ConfidenceSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epsilon = 0.98;
    let cases = [
        ("easy", vec![9.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]),
        ("distilled", vec![2.0, 1.0, 0.0], vec![8.0, 0.0, 0.0]),
        ("hard", vec![1.0, 1.0, 0.5], vec![1.5, 1.0, 0.0]),
        // exactly at the threshold is not enough
        ("tie", vec![0.0; 3], vec![0.0; 3]),
    ];
    for (name, judge_logits, small_logits) in cases {
        let (_, c_x) = confidence(&judge_logits, ConfidenceSource::Judgment)?;
        let (_, c_s) = confidence(&small_logits, ConfidenceSource::Small)?;
        let d = decide(epsilon, c_x, Some(c_s));
        println!("{name:<10} C_x {:.4}  C_s {:.4}  -> {:?}", c_x.value, c_s.value, d.target);
    }

    let tie = ConfidenceScore { value: epsilon, source: ConfidenceSource::Judgment };
    println!("C = epsilon exceeds epsilon? {}", tie.exceeds(epsilon));

    let (dist, c) = confidence(&[1e308, -1e308], ConfidenceSource::Large)?;
    println!("overflowing logits stay finite: {dist:?} (confidence {})", c.value);
    Ok(())
}
