//! Ground-truth label files.
//!
//! A CSV with a header row and two columns, key and label. Numeric keys are
//! line numbers; any other key is a group identifier (HDFS `BlockId`
//! style). Labels accept `Anomaly`/`Anomalous`/`Abnormal`/`1`/`true` and
//! `Normal`/`0`/`false`, case-insensitively.

use std::path::Path;

use logmesh_core::grouping::GroundTruth;

use crate::error::{Error, Result};

fn parse_label(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "anomaly" | "anomalous" | "abnormal" | "1" | "true" => Some(true),
        "normal" | "0" | "false" | "-" => Some(false),
        _ => None,
    }
}

pub fn read_labels_from<R: std::io::Read>(reader: R, path: &Path) -> Result<GroundTruth> {
    let mut truth = GroundTruth::default();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let format_err = |message: String| Error::Format {
            path: path.into(),
            line,
            message,
        };
        let row = row.map_err(|e| format_err(e.to_string()))?;
        if row.len() < 2 {
            return Err(format_err("expected key,label".into()));
        }
        let label = parse_label(&row[1]).ok_or_else(|| format_err(format!("unknown label {:?}", &row[1])))?;
        match row[0].parse::<u64>() {
            Ok(line_no) => {
                truth.lines.insert(line_no, label);
            }
            Err(_) => {
                truth.identifiers.insert(row[0].to_string(), label);
            }
        }
    }
    Ok(truth)
}

pub fn read_labels(path: &Path) -> Result<GroundTruth> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_labels_from(file, path)
}
