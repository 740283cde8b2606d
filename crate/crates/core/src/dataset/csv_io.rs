//! CSV ingestion and emission. Dialect: header row, comma-separated, UTF-8,
//! empty string or `NA` = missing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{format_cell, Dataset, FeatureKind, FeatureSchema};

/// On-disk schema declaration: feature names/kinds plus the label column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaFile {
    pub label_column: String,
    pub features: Vec<FeatureDecl>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureDecl {
    pub name: String,
    pub kind: FeatureKind,
}

impl SchemaFile {
    pub fn to_schema(&self) -> Vec<FeatureSchema> {
        self.features
            .iter()
            .map(|f| FeatureSchema {
                name: f.name.clone(),
                kind: f.kind,
                categories: None,
            })
            .collect()
    }

    pub fn from_schema(schema: &[FeatureSchema], label_column: &str) -> Self {
        SchemaFile {
            label_column: label_column.to_string(),
            features: schema
                .iter()
                .map(|f| FeatureDecl {
                    name: f.name.clone(),
                    kind: f.kind,
                })
                .collect(),
        }
    }
}

pub fn load_schema(path: &Path) -> Result<SchemaFile> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_schema(schema: &SchemaFile, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(schema)?)?;
    Ok(())
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

fn parse_label(cell: &str) -> Result<u8> {
    match cell.trim() {
        "0" | "admitted" => Ok(0),
        "1" | "discharged" => Ok(1),
        other => Err(Error::Label(other.to_string())),
    }
}

/// Load a CSV against a declared schema. Numeric cells parse as reals,
/// empty/`NA` cells become missing, categorical strings are interned into the
/// schema's category list in first-appearance order.
pub fn load_csv(path: &Path, schema: &[FeatureSchema], label_column: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let header_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("header missing column '{name}'")))
    };

    let label_col = header_index(label_column)?;
    let feature_cols: Vec<usize> = schema
        .iter()
        .map(|f| header_index(&f.name))
        .collect::<Result<_>>()?;

    let mut out_schema: Vec<FeatureSchema> = schema.to_vec();
    let mut categories: Vec<Vec<String>> = schema.iter().map(|_| Vec::new()).collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();

    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(schema.len());
        for (j, (&col, spec)) in feature_cols.iter().zip(schema).enumerate() {
            let cell = record.get(col).unwrap_or("").trim();
            if is_missing(cell) {
                row.push(None);
                continue;
            }
            match spec.kind {
                FeatureKind::Numeric => {
                    let v: f64 = cell.parse().map_err(|_| Error::Parse {
                        row: r,
                        column: spec.name.clone(),
                        message: format!("'{cell}' is not numeric"),
                    })?;
                    row.push(Some(v));
                }
                FeatureKind::Categorical => {
                    let code = match categories[j].iter().position(|c| c == cell) {
                        Some(i) => i,
                        None => {
                            categories[j].push(cell.to_string());
                            categories[j].len() - 1
                        }
                    };
                    row.push(Some(code as f64));
                }
            }
        }
        let label_cell = record.get(label_col).unwrap_or("");
        labels.push(parse_label(label_cell)?);
        rows.push(row);
    }

    for (spec, cats) in out_schema.iter_mut().zip(categories) {
        if spec.kind == FeatureKind::Categorical && !cats.is_empty() {
            spec.categories = Some(cats);
        }
    }
    Dataset::new(out_schema, rows, labels)
}

/// Emit the same dialect `load_csv` reads. Categorical codes are written as
/// their category name when one is recorded; missing cells as empty strings.
pub fn write_csv(d: &Dataset, label_column: &str, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = d.schema().iter().map(|f| f.name.as_str()).collect();
    header.push(label_column);
    writer.write_record(&header)?;
    for r in 0..d.n_rows() {
        let mut record: Vec<String> = Vec::with_capacity(d.n_features() + 1);
        for (c, spec) in d.schema().iter().enumerate() {
            let cell = match d.value(r, c) {
                None => String::new(),
                Some(v) => match (&spec.kind, &spec.categories) {
                    (FeatureKind::Categorical, Some(cats)) if (v as usize) < cats.len() => {
                        cats[v as usize].clone()
                    }
                    _ => format_cell(v),
                },
            };
            record.push(cell);
        }
        record.push(d.labels()[r].to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn schema() -> Vec<FeatureSchema> {
        vec![
            FeatureSchema::categorical("sex"),
            FeatureSchema::numeric("pulse_rate"),
        ]
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_basic_three_rows() {
        let f = write_tmp("sex,pulse_rate,disposition\nM,80,admitted\nF,95,discharged\nM,72,admitted\n");
        let d = load_csv(f.path(), &schema(), "disposition").unwrap();
        assert_eq!(d.n_rows(), 3);
        assert!(!d.has_missing());
        assert_eq!(d.labels(), &[0, 1, 0]);
        // M,F interned in first-appearance order.
        let sex: Vec<f64> = (0..3).map(|r| d.value(r, 0).unwrap()).collect();
        assert_eq!(sex, vec![0.0, 1.0, 0.0]);
        assert_eq!(d.schema()[0].categories.as_deref().unwrap(), ["M", "F"]);
    }

    #[test]
    fn load_missing_cell_flagged() {
        let f = write_tmp("sex,pulse_rate,disposition\nM,,1\nF,NA,0\nM,70,1\n");
        let d = load_csv(f.path(), &schema(), "disposition").unwrap();
        assert_eq!(d.value(0, 1), None);
        assert_eq!(d.value(1, 1), None);
        assert_eq!(d.value(2, 1), Some(70.0));
    }

    #[test]
    fn load_numeric_parse_error_names_cell() {
        let f = write_tmp("sex,pulse_rate,disposition\nM,fast,1\n");
        match load_csv(f.path(), &schema(), "disposition") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 0);
                assert_eq!(column, "pulse_rate");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_unknown_label_errors() {
        let f = write_tmp("sex,pulse_rate,disposition\nM,70,transferred\n");
        assert!(matches!(
            load_csv(f.path(), &schema(), "disposition"),
            Err(Error::Label(_))
        ));
    }

    #[test]
    fn roundtrip_preserves_values() {
        let f = write_tmp("sex,pulse_rate,disposition\nM,80,0\nF,,1\n");
        let d = load_csv(f.path(), &schema(), "disposition").unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&d, "disposition", out.path()).unwrap();
        let d2 = load_csv(out.path(), &schema(), "disposition").unwrap();
        assert_eq!(d2.n_rows(), 2);
        assert_eq!(d2.value(0, 0), Some(0.0));
        assert_eq!(d2.value(1, 1), None);
        assert_eq!(d2.labels(), d.labels());
    }
}
