//! File-level parsing: every line through the line parser and the template tree.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::debug;
use logmesh_core::drain::{DrainConfig, DrainTree, TemplateCatalog};
use logmesh_core::grouping::LogRecord;

use crate::error::{Error, Result};
use crate::logformat::{LineParser, Malformed};

#[derive(Debug, Clone, Default)]
pub struct ParseOutput {
    pub records: Vec<LogRecord>,
    pub catalog: TemplateCatalog,
    /// Lines skipped because they did not fit the descriptor.
    pub malformed: usize,
}

/// Parses lines in order. Blank lines are ignored; malformed ones are
/// skipped and counted. Line numbers are 1-based positions in the input.
pub fn parse_lines<I, S>(lines: I, parser: &LineParser, drain: DrainConfig) -> ParseOutput
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut tree = DrainTree::new(drain);
    let mut out = ParseOutput::default();
    for (i, line) in lines.into_iter().enumerate() {
        let line = line.as_ref();
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i as u64 + 1;
        let parsed = match parser.parse(line) {
            Ok(p) => p,
            Err(kind) => {
                debug!("line {line_no}: skipped ({kind:?})");
                out.malformed += 1;
                continue;
            }
        };
        if parsed.tokens.is_empty() {
            out.malformed += 1;
            debug!("line {line_no}: skipped ({:?})", Malformed::EmptyContent);
            continue;
        }
        let template_id = tree.insert(&parsed.tokens, &mut out.catalog);
        out.records.push(LogRecord {
            line_no,
            timestamp: parsed.timestamp,
            identifier: parsed.identifier.unwrap_or_default(),
            template_id,
            content: parsed.tokens,
        });
    }
    out
}

pub fn parse_file(path: &Path, parser: &LineParser, drain: DrainConfig) -> Result<ParseOutput> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<String>>>()
        .map_err(|e| Error::io(path, e))?;
    Ok(parse_lines(lines, parser, drain))
}
