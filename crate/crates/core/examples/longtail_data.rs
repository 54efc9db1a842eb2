//! Generate a long-tail dataset, inspect its regions, and round-trip it
//! through CSV.
//!
//!     cargo run --example longtail_data

use kcm::data::{class_counts, generate_longtail, read_csv, write_csv, CsvSchema, LongTailSpec, Manifest, Split};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = LongTailSpec::default();
    println!("train counts per class: {:?}", class_counts(&spec)?);

    let data = generate_longtail(&spec)?;
    for (c, (name, region)) in data.label_names.iter().zip(data.class_regions()).enumerate() {
        println!("class {c}: {name:<8} {region}");
    }
    println!(
        "splits: train {}, val {}, test {}",
        data.split(Split::Train).len(),
        data.split(Split::Val).len(),
        data.split(Split::Test).len()
    );

    let mut csv = Vec::new();
    write_csv(&data, &mut csv)?;
    let schema = CsvSchema { feature_dim: spec.feature_dim, labels: Some(data.label_names.clone()) };
    let back = read_csv(csv.as_slice(), &schema)?;
    println!("csv: {} bytes, round trip equal: {}", csv.len(), back == data);

    let manifest = Manifest::for_dataset(&spec, &data);
    println!("sha256 {}", manifest.sha256);
    Ok(())
}
