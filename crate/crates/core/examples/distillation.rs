//! Partition a pool through both gates, then distill the small model from
//! the large-model targets and the frozen judgment model.
//!
//!     cargo run --release --example distillation

use kcm::backends::{CountingBackend, OracleBackend, OracleSpec};
use kcm::collab::{partition_training, train_kcm, KcmConfig};
use kcm::data::{generate_longtail, LongTailSpec, Split};
use kcm::models::{train_supervised, ArchSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate_longtail(&LongTailSpec::default())?;
    let judgment = train_supervised(&data.split(Split::Train), data.num_classes(), &ArchSpec::default(), 0)?;

    let backend = CountingBackend::new(OracleBackend::new(OracleSpec::default())?);
    let config = KcmConfig::default();
    let pool = data.split(Split::Val);
    let part = partition_training(&pool, &judgment, &backend, &data.label_names, &config)?;
    println!(
        "pool {}: x1 {} (judgment confident), x2 {} (large model confident), x3 {}; {} backend calls",
        pool.len(),
        part.x1.len(),
        part.x2.len(),
        part.x3.len(),
        backend.calls()
    );

    let distilled = train_kcm(&part, &pool, &judgment, &config, 1)?;
    for e in &distilled.loss_curve {
        println!("epoch {:>2} {:?}: {:.4}", e.epoch, e.term, e.mean_loss);
    }

    let test = data.split(Split::Test);
    println!(
        "test accuracy: judgment {:.2}%, distilled {:.2}%",
        100.0 * judgment.accuracy(test.iter().copied())?,
        100.0 * distilled.model.accuracy(test.iter().copied())?
    );
    Ok(())
}
