//! Sequential training on five disjoint input regions; how much of each
//! earlier region survives.
//!
//!     cargo run --release --example forgetting

use kcm::eval::{run_forgetting_benchmark, ForgettingSpec};
use kcm::kan::ModelKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (kind, coefficients_only) in [(ModelKind::Kan, true), (ModelKind::Kan, false), (ModelKind::Mlp, false)] {
        let spec = ForgettingSpec { kind, coefficients_only, ..Default::default() };
        let r = run_forgetting_benchmark(&spec)?;
        let tag = if kind == ModelKind::Kan && !coefficients_only { " (scales trained)" } else { "" };
        println!("{kind}{tag}: {} params, forgetting {:.3}, final retention {:.3}", r.params, r.score, r.final_retention);
        for (i, row) in r.retention.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.2}")).collect();
            println!("  after phase {i}: {}", cells.join("  "));
        }
    }
    Ok(())
}
