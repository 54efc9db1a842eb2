//! The full pipeline on the default long-tail dataset, printed as small-only,
//! large-only and cascade columns. Pass an epsilon to change the gate.
//!
//!     cargo run --release --example longtail_cascade -- 0.98

use kcm::backends::{OracleBackend, OracleSpec};
use kcm::collab::KcmConfig;
use kcm::data::{generate_longtail, LongTailSpec, Split};
use kcm::eval::{compare_columns, render_table, train_pipeline};
use kcm::models::ArchSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epsilon: f64 = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(0.98);
    let data = generate_longtail(&LongTailSpec::default())?;
    let backend = OracleBackend::new(OracleSpec::default())?;
    let config = KcmConfig { epsilon, ..Default::default() };

    let p = train_pipeline(&data, &ArchSpec::default(), &config, &backend, 0)?;
    let test = data.split(Split::Test);
    let cols = compare_columns(&test, &p.judgment, &p.small, &backend, &data.label_names, &config, 0)?;
    print!("{}", render_table(&[("small", &cols.small), ("large", &cols.large), ("kcm", &cols.kcm)]));
    println!("routes: {:?}", cols.kcm.route_counts);
    Ok(())
}
