//! KAN small model against a capacity-matched MLP under the same pipeline.
//!
//!     cargo run --release --example ablation

use kcm::backends::{OracleBackend, OracleSpec};
use kcm::collab::KcmConfig;
use kcm::data::{generate_longtail, LongTailSpec};
use kcm::eval::{render_table, run_ablation};
use kcm::models::ArchSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_longtail(&LongTailSpec::default())?;
    let backend = OracleBackend::new(OracleSpec::default())?;
    let r = run_ablation(&data, &ArchSpec::default(), &KcmConfig::default(), &backend, 0)?;
    print!("{}", render_table(&[("mcm", &r.mcm.report), ("kcm", &r.kcm.report)]));
    println!("params: mlp {} {:?}, kan {} {:?}", r.mcm.params, r.mcm.hidden, r.kcm.params, r.kcm.hidden);
    println!("same data and sample streams: {}", r.same_streams());
    Ok(())
}
