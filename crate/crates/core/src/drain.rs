//! Online template mining with a fixed-depth parse tree.
//!
//! The first tree level partitions messages by token count, the next
//! `depth - 2` levels by leading tokens. Tokens that contain a digit (or are
//! already masked) are routed through a shared wildcard branch so that
//! parameters do not fan the tree out. Each leaf holds a small list of
//! templates; an incoming message joins the most similar template when the
//! fraction of equal positions reaches the similarity threshold, otherwise it
//! starts a new template.
//!
//! ```text
//!            4                 token count
//!            |
//!          "Node"              leading token
//!            |
//!          "<*>"               "2" contains a digit
//!          /   \
//! [Node <*> is online] [Node <*> going offline]
//! ```

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const WILDCARD: &str = "<*>";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrainConfig {
    pub depth: usize,
    pub similarity_threshold: f64,
    pub max_children: usize,
}

impl Default for DrainConfig {
    fn default() -> Self {
        DrainConfig {
            depth: 4,
            similarity_threshold: 0.4,
            max_children: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub tokens: Vec<String>,
    pub count: u64,
}

impl Template {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Unique templates in order of discovery. Ids are dense and never reused.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateCatalog {
    templates: Vec<Template>,
    index: BTreeMap<Vec<String>, usize>,
}

impl TemplateCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a catalog from stored token lists (counts are reset to zero).
    pub fn from_token_lists(lists: Vec<Vec<String>>) -> Self {
        let mut catalog = TemplateCatalog::new();
        for tokens in lists {
            if !catalog.index.contains_key(&tokens) {
                catalog.push(tokens, 0);
            }
        }
        catalog
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Template> {
        self.templates.get(id)
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn find(&self, tokens: &[String]) -> Option<usize> {
        self.index.get(tokens).copied()
    }

    pub fn token_lists(&self) -> Vec<Vec<String>> {
        self.templates.iter().map(|t| t.tokens.clone()).collect()
    }

    fn push(&mut self, tokens: Vec<String>, count: u64) -> usize {
        let id = self.templates.len();
        self.index.insert(tokens.clone(), id);
        self.templates.push(Template { tokens, count });
        id
    }

    fn replace_tokens(&mut self, id: usize, tokens: Vec<String>) {
        let old = core::mem::replace(&mut self.templates[id].tokens, tokens.clone());
        self.index.remove(&old);
        self.index.insert(tokens, id);
    }
}

#[derive(Debug, Clone, Default)]
struct Node {
    children: BTreeMap<String, Node>,
    templates: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DrainTree {
    config: DrainConfig,
    by_length: BTreeMap<usize, Node>,
}

impl DrainTree {
    pub fn new(config: DrainConfig) -> Self {
        DrainTree {
            config,
            by_length: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &DrainConfig {
        &self.config
    }

    /// Routes `tokens` to a leaf and returns the id of the template it joins.
    pub fn insert(&mut self, tokens: &[String], catalog: &mut TemplateCatalog) -> usize {
        let layers = self.config.depth.saturating_sub(2);
        let max_children = self.config.max_children.max(1);
        let mut node = self.by_length.entry(tokens.len()).or_default();
        for token in tokens.iter().take(layers) {
            let key = if is_variable(token) {
                WILDCARD
            } else if node.children.contains_key(token.as_str()) {
                token.as_str()
            } else {
                let concrete = node.children.keys().filter(|k| *k != WILDCARD).count();
                if concrete < max_children {
                    token.as_str()
                } else {
                    WILDCARD
                }
            };
            node = node.children.entry(key.to_string()).or_default();
        }

        let mut best: Option<(usize, f64)> = None;
        for &id in &node.templates {
            let sim = similarity(&catalog.templates[id].tokens, tokens);
            if best.is_none_or(|(_, s)| sim > s) {
                best = Some((id, sim));
            }
        }

        match best {
            Some((id, sim)) if sim >= self.config.similarity_threshold => {
                let merged = merge(&catalog.templates[id].tokens, tokens);
                match catalog.find(&merged) {
                    Some(existing) if existing != id => {
                        catalog.templates[existing].count += 1;
                        existing
                    }
                    _ => {
                        if merged != catalog.templates[id].tokens {
                            catalog.replace_tokens(id, merged);
                        }
                        catalog.templates[id].count += 1;
                        id
                    }
                }
            }
            _ => {
                if let Some(existing) = catalog.find(tokens) {
                    catalog.templates[existing].count += 1;
                    if !node.templates.contains(&existing) {
                        node.templates.push(existing);
                    }
                    return existing;
                }
                let id = catalog.push(tokens.to_vec(), 1);
                node.templates.push(id);
                id
            }
        }
    }
}

fn is_variable(token: &str) -> bool {
    token == WILDCARD || token.bytes().any(|b| b.is_ascii_digit())
}

/// Fraction of positions whose tokens are equal. Sequences must have equal length.
pub fn similarity(template: &[String], tokens: &[String]) -> f64 {
    debug_assert_eq!(template.len(), tokens.len());
    if template.is_empty() {
        return 1.0;
    }
    let equal = template.iter().zip(tokens).filter(|(a, b)| a == b).count();
    equal as f64 / template.len() as f64
}

fn merge(template: &[String], tokens: &[String]) -> Vec<String> {
    template
        .iter()
        .zip(tokens)
        .map(|(a, b)| if a == b { a.clone() } else { WILDCARD.to_string() })
        .collect()
}
