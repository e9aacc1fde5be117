//! Line-level parsing: header fields from a format string, identifier
//! extraction, parameter masking and tokenization.

use std::collections::BTreeMap;
use std::path::Path;

use logmesh_core::drain::WILDCARD;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the group identifier of a line is found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentifierRule {
    /// A header field, e.g. `User`.
    Field(String),
    /// First match in the content; capture group 1 if present.
    Regex(String),
}

/// A log format such as `<Date> <Time> <Pid> <Level> <Component>: <Content>`
/// plus the identifier rule and inline masks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatDescriptor {
    pub log_format: String,
    pub identifier: Option<IdentifierRule>,
    /// Header fields joined with a space to form the timestamp.
    #[serde(default = "default_timestamp_fields")]
    pub timestamp_fields: Vec<String>,
    #[serde(default)]
    pub masks: Vec<String>,
}

fn default_timestamp_fields() -> Vec<String> {
    vec!["Date".into(), "Time".into()]
}

impl FormatDescriptor {
    pub fn new(log_format: impl Into<String>) -> Self {
        FormatDescriptor {
            log_format: log_format.into(),
            identifier: None,
            timestamp_fields: default_timestamp_fields(),
            masks: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.into(),
            line: source.line(),
            source,
        })
    }
}

/// One regex per line; blank lines and `#` comments are ignored.
pub fn load_masks(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

fn compile(pattern: &str) -> Result<Regex> {
    Regex::new(pattern).map_err(|source| Error::Regex {
        pattern: pattern.into(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedLine {
    pub fields: BTreeMap<String, String>,
    pub timestamp: String,
    pub identifier: Option<String>,
    /// Masked, whitespace-split content.
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Malformed {
    NoMatch,
    EmptyContent,
    NoIdentifier,
}

#[derive(Debug, Clone)]
pub struct LineParser {
    header: Regex,
    fields: Vec<String>,
    identifier: Option<(IdentifierRule, Option<Regex>)>,
    timestamp_fields: Vec<String>,
    masks: Vec<Regex>,
}

impl LineParser {
    /// Compiles the descriptor; `extra_masks` are applied after the inline ones.
    pub fn new(fmt: &FormatDescriptor, extra_masks: &[String]) -> Result<Self> {
        let placeholder = Regex::new(r"<([A-Za-z_][A-Za-z0-9_]*)>").expect("static regex");
        let mut pattern = String::from("^");
        let mut fields = Vec::new();
        let mut last = 0;
        for cap in placeholder.captures_iter(&fmt.log_format) {
            let m = cap.get(0).expect("whole match");
            pattern.push_str(&literal(&fmt.log_format[last..m.start()]));
            let name = &cap[1];
            if fields.iter().any(|f| f == name) {
                return Err(Error::config(format!("field <{name}> appears twice in the log format")));
            }
            if name == "Content" {
                pattern.push_str("(?P<Content>.*)");
            } else {
                pattern.push_str(&format!("(?P<{name}>.*?)"));
            }
            fields.push(name.to_string());
            last = m.end();
        }
        pattern.push_str(&literal(&fmt.log_format[last..]));
        pattern.push('$');
        if !fields.iter().any(|f| f == "Content") {
            return Err(Error::config("log format needs a <Content> field"));
        }
        let identifier = match &fmt.identifier {
            None => None,
            Some(IdentifierRule::Field(f)) => {
                if !fields.contains(f) {
                    return Err(Error::config(format!(
                        "identifier field <{f}> is not in the log format"
                    )));
                }
                Some((IdentifierRule::Field(f.clone()), None))
            }
            Some(IdentifierRule::Regex(r)) => Some((IdentifierRule::Regex(r.clone()), Some(compile(r)?))),
        };
        let masks = fmt
            .masks
            .iter()
            .chain(extra_masks)
            .map(|m| compile(m))
            .collect::<Result<Vec<_>>>()?;
        Ok(LineParser {
            header: compile(&pattern)?,
            fields,
            identifier,
            timestamp_fields: fmt.timestamp_fields.clone(),
            masks,
        })
    }

    pub fn parse(&self, line: &str) -> std::result::Result<ParsedLine, Malformed> {
        let caps = self
            .header
            .captures(line.trim_end_matches(['\r', '\n']))
            .ok_or(Malformed::NoMatch)?;
        let fields: BTreeMap<String, String> = self
            .fields
            .iter()
            .map(|f| (f.clone(), caps.name(f).map_or("", |m| m.as_str()).trim().to_string()))
            .collect();
        let content = &fields["Content"];
        if content.is_empty() {
            return Err(Malformed::EmptyContent);
        }
        let identifier = match &self.identifier {
            None => None,
            Some((IdentifierRule::Field(f), _)) => Some(fields[f].clone()).filter(|s| !s.is_empty()),
            Some((IdentifierRule::Regex(_), Some(re))) => {
                let caps = re.captures(content).ok_or(Malformed::NoIdentifier)?;
                Some(caps.get(1).or_else(|| caps.get(0)).expect("match").as_str().to_string())
            }
            Some((IdentifierRule::Regex(_), None)) => unreachable!("regex compiled in new"),
        };
        if self.identifier.is_some() && identifier.is_none() {
            return Err(Malformed::NoIdentifier);
        }
        let mut masked = content.clone();
        for re in &self.masks {
            masked = re.replace_all(&masked, WILDCARD).into_owned();
        }
        let timestamp = self
            .timestamp_fields
            .iter()
            .filter_map(|f| fields.get(f))
            .map(String::as_str)
            .collect::<Vec<_>>()
            .join(" ");
        Ok(ParsedLine {
            timestamp,
            identifier,
            tokens: masked.split_whitespace().map(String::from).collect(),
            fields,
        })
    }
}

/// Literal format text as a regex; runs of spaces match any whitespace.
fn literal(text: &str) -> String {
    let mut out = String::new();
    for (i, part) in text.split(' ').enumerate() {
        if i > 0 {
            out.push_str(r"\s+");
        }
        out.push_str(&regex::escape(part));
    }
    out
}
