//! Pre-trained word vectors in the plain text format `word v1 ... vd`.
//! A leading `count dim` header line, as written by word2vec tools, is skipped.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use logmesh_core::semantics::WordVectorTable;

use crate::error::{Error, Result};

pub fn read_vectors_from<R: BufRead>(reader: R, path: &Path) -> Result<WordVectorTable> {
    let mut table: Option<WordVectorTable> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let format_err = |message: String| Error::Format {
            path: path.into(),
            line: i + 1,
            message,
        };
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();
        if i == 0 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        let values = rest
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| format_err(format!("bad number: {e}")))?;
        if values.is_empty() {
            return Err(format_err(format!("no vector for {word:?}")));
        }
        let t = table.get_or_insert_with(|| WordVectorTable::new(values.len()));
        if values.len() != t.dim() {
            return Err(format_err(format!(
                "expected {} values, found {}",
                t.dim(),
                values.len()
            )));
        }
        t.insert(word.to_string(), values)?;
    }
    let table = table.ok_or_else(|| Error::Format {
        path: path.into(),
        line: 0,
        message: "no word vectors".into(),
    })?;
    if table.duplicates() > 0 {
        warn!(
            "{}: {} duplicate words, last occurrence kept",
            path.display(),
            table.duplicates()
        );
    }
    Ok(table)
}

pub fn read_vectors(path: &Path) -> Result<WordVectorTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_vectors_from(BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<WordVectorTable> {
        read_vectors_from(text.as_bytes(), Path::new("v.txt"))
    }

    #[test]
    fn header_and_last_wins() {
        let t = load("3 2\nblock 1 2\nfile 0.5 -1\nblock 3 4\n").unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.get("block"), Some(&[3.0, 4.0][..]));
        assert_eq!(t.duplicates(), 1);
    }

    #[test]
    fn ragged_rows_fail() {
        let err = load("a 1 2\nb 1\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
        assert!(load("a x y\n").is_err());
        assert!(load("").is_err());
    }
}
