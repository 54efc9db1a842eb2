use std::io::{Read, Write};
use std::path::Path;

use log::info;

use super::{DataError, Dataset, Region, Sample, Split};

/// Expected columns: `id, f0..f{d-1}, label[, split]`. Labels are class
/// names; with `labels: None` the vocabulary is taken from the file in
/// order of first appearance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvSchema {
    pub feature_dim: usize,
    pub labels: Option<Vec<String>>,
}

pub fn write_csv<W: Write>(data: &Dataset, w: W) -> Result<(), DataError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["id".to_string()];
    header.extend((0..data.feature_dim).map(|i| format!("f{i}")));
    header.push("label".into());
    header.push("split".into());
    out.write_record(&header)?;
    for s in &data.samples {
        let mut row = Vec::with_capacity(header.len());
        row.push(s.id.to_string());
        row.extend(s.features.iter().map(|v| v.to_string()));
        row.push(data.label_names[s.label].clone());
        row.push(s.split.as_str().to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R, schema: &CsvSchema) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers()?.clone();
    let d = schema.feature_dim;
    let mut expected: Vec<String> = vec!["id".into()];
    expected.extend((0..d).map(|i| format!("f{i}")));
    expected.push("label".into());
    let cols: Vec<&str> = header.iter().collect();
    let has_split = match cols.len() {
        n if n == expected.len() => false,
        n if n == expected.len() + 1 && cols[n - 1] == "split" => true,
        _ => {
            let missing: Vec<&String> = expected.iter().filter(|c| !cols.contains(&c.as_str())).collect();
            return Err(DataError::Header(if missing.is_empty() {
                format!("unexpected columns {cols:?}")
            } else {
                format!("missing columns {missing:?}")
            }));
        }
    };
    for (i, want) in expected.iter().enumerate() {
        if cols[i] != want {
            return Err(DataError::Header(format!("column {i} is `{}`, expected `{want}`", cols[i])));
        }
    }

    let mut vocab: Vec<String> = schema.labels.clone().unwrap_or_default();
    let fixed_vocab = schema.labels.is_some();
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |message: String| DataError::Row { line, message };
        let id: u64 = rec[0].trim().parse().map_err(|_| row_err(format!("bad id `{}`", &rec[0])))?;
        let features = (0..d)
            .map(|i| {
                let raw = rec[i + 1].trim();
                raw.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| row_err(format!("non-numeric feature f{i} = `{raw}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let name = rec[d + 1].trim();
        let label = match vocab.iter().position(|l| l == name) {
            Some(l) => l,
            None if fixed_vocab => return Err(row_err(format!("unknown label `{name}`"))),
            None => {
                vocab.push(name.to_string());
                vocab.len() - 1
            }
        };
        let split = if has_split {
            let raw = rec[d + 2].trim();
            Split::parse(raw).ok_or_else(|| row_err(format!("unknown split `{raw}`")))?
        } else {
            Split::Train
        };
        samples.push(Sample { id, features, label, region: Region::Med, split });
    }
    if samples.is_empty() {
        return Err(DataError::Empty);
    }
    let data = Dataset::new(samples, vocab, d)?;
    info!("loaded {} rows; per-class counts {:?}", data.len(), data.class_histogram(None));
    Ok(data)
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset, DataError> {
    read_csv(std::fs::File::open(path)?, schema)
}

#[cfg(test)]
mod tests {
    use super::super::{generate_longtail, LongTailSpec};
    use super::*;

    fn schema(d: usize) -> CsvSchema {
        CsvSchema { feature_dim: d, labels: None }
    }

    #[test]
    fn three_rows() {
        let text = "id,f0,f1,label\n0,0.5,1.0,a\n1,2,3,b\n2,-1,1e-3,a\n";
        let data = read_csv(text.as_bytes(), &schema(2)).unwrap();
        assert_eq!(data.len(), 3);
        assert_eq!(data.label_names, vec!["a", "b"]);
        assert_eq!(data.class_histogram(None), vec![2, 1]);
    }

    #[test]
    fn non_numeric_feature_names_line() {
        let text = "id,f0,f1,label\n0,abc,1.0,a\n";
        match read_csv(text.as_bytes(), &schema(2)) {
            Err(DataError::Row { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("f0"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_label_with_fixed_vocab() {
        let text = "id,f0,label\n0,1,a\n1,1,z\n";
        let s = CsvSchema { feature_dim: 1, labels: Some(vec!["a".into()]) };
        assert!(matches!(read_csv(text.as_bytes(), &s), Err(DataError::Row { line: 3, .. })));
    }

    #[test]
    fn missing_column() {
        let text = "id,f0,label\n0,1,a\n";
        assert!(matches!(read_csv(text.as_bytes(), &schema(2)), Err(DataError::Header(_))));
    }

    #[test]
    fn roundtrip() {
        let spec = LongTailSpec { max_per_class: 30, imbalance: 10.0, val_per_class: 3, test_per_class: 4, ..Default::default() };
        let data = generate_longtail(&spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&data, &mut buf).unwrap();
        let s = CsvSchema { feature_dim: spec.feature_dim, labels: Some(data.label_names.clone()) };
        let back = read_csv(buf.as_slice(), &s).unwrap();
        assert_eq!(back, data);
    }
}
