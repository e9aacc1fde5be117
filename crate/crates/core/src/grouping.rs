//! Partitioning parsed records into log groups.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::num::NonZeroUsize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One parsed log message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub line_no: u64,
    #[serde(rename = "ts")]
    pub timestamp: String,
    #[serde(rename = "id")]
    pub identifier: String,
    pub template_id: usize,
    #[serde(skip)]
    pub content: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomalous,
    #[default]
    Unknown,
}

impl Label {
    /// `Some(true)` for anomalous, `Some(false)` for normal.
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Label::Normal => Some(false),
            Label::Anomalous => Some(true),
            Label::Unknown => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogGroup {
    pub group_key: String,
    pub label: Label,
    pub records: Vec<LogRecord>,
}

impl LogGroup {
    pub fn template_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.records.iter().map(|r| r.template_id)
    }
}

/// Ground-truth labels keyed by line number and/or by identifier.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub lines: BTreeMap<u64, bool>,
    pub identifiers: BTreeMap<String, bool>,
}

/// One group per distinct identifier, ordered by first appearance.
pub fn group_by_identifier(records: &[LogRecord]) -> Result<Vec<LogGroup>> {
    let mut slot: BTreeMap<&str, usize> = BTreeMap::new();
    let mut groups: Vec<LogGroup> = Vec::new();
    for record in records {
        if record.identifier.is_empty() {
            return Err(Error::MissingIdentifier {
                line_no: record.line_no,
            });
        }
        let idx = *slot.entry(record.identifier.as_str()).or_insert_with(|| {
            groups.push(LogGroup {
                group_key: record.identifier.clone(),
                label: Label::Unknown,
                records: Vec::new(),
            });
            groups.len() - 1
        });
        groups[idx].records.push(record.clone());
    }
    Ok(groups)
}

/// Consecutive chunks of `window` records; a shorter tail chunk is kept.
/// Keys become `<key>#<ordinal>`.
pub fn window_split(group: &LogGroup, window: NonZeroUsize) -> Vec<LogGroup> {
    group
        .records
        .chunks(window.get())
        .enumerate()
        .map(|(i, chunk)| LogGroup {
            group_key: format!("{}#{}", group.group_key, i),
            label: group.label,
            records: chunk.to_vec(),
        })
        .collect()
}

/// A group is anomalous iff it contains at least one anomalous line (or its
/// identifier is labelled anomalous). Without ground truth every group is
/// `Unknown`.
pub fn label_groups(groups: &mut [LogGroup], truth: Option<&GroundTruth>) {
    for group in groups {
        group.label = match truth {
            None => Label::Unknown,
            Some(t) => {
                let anomalous = group.records.iter().any(|r| {
                    t.lines.get(&r.line_no).copied().unwrap_or(false)
                        || t.identifiers.get(&r.identifier).copied().unwrap_or(false)
                });
                if anomalous {
                    Label::Anomalous
                } else {
                    Label::Normal
                }
            }
        };
    }
}
