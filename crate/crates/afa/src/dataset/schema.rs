//! Schema files: a small key-value text format declaring which CSV columns
//! form each acquirable group, the group costs, and the label column.
//!
//! ```text
//! # comments and blank lines are ignored
//! label = target
//! group age = age
//! group lab cost=7.27 = chol
//! group ecg cost=15.50 = restecg_a, restecg_b
//! ```
//!
//! One `label` line is required. Each `group` line maps a group name (and an
//! optional `cost=<float>`, default 1.0) to one or more CSV column names.
//! Column names must be assigned exactly once across all directives.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

/// Parsed schema: label column plus ordered group declarations.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub label: String,
    pub groups: Vec<GroupDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupDecl {
    pub name: String,
    pub cost: f64,
    pub columns: Vec<String>,
}

impl Schema {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut label: Option<String> = None;
        let mut groups: Vec<GroupDecl> = Vec::new();
        let mut assigned: BTreeSet<String> = BTreeSet::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            // Split on the LAST '=' so `cost=...` stays in the head.
            let (head, tail) = line.rsplit_once('=').ok_or_else(|| {
                Error::Schema(format!("line {}: expected '=' in {line:?}", lineno + 1))
            })?;
            let head_tokens: Vec<&str> = head.split_whitespace().collect();
            match head_tokens.as_slice() {
                ["label"] => {
                    let col = tail.trim();
                    if col.is_empty() {
                        return Err(Error::Schema(format!("line {}: empty label column", lineno + 1)));
                    }
                    if label.is_some() {
                        return Err(Error::Schema(format!(
                            "line {}: label declared twice",
                            lineno + 1
                        )));
                    }
                    if !assigned.insert(col.to_string()) {
                        return Err(Error::Schema(format!(
                            "line {}: column {col:?} assigned twice",
                            lineno + 1
                        )));
                    }
                    label = Some(col.to_string());
                }
                ["group", name] | ["group", name, _] => {
                    let cost = match head_tokens.get(2) {
                        None => 1.0,
                        Some(tok) => {
                            let v = tok.strip_prefix("cost=").ok_or_else(|| {
                                Error::Schema(format!(
                                    "line {}: expected cost=<value>, found {tok:?}",
                                    lineno + 1
                                ))
                            })?;
                            let cost: f64 = v.parse().map_err(|_| {
                                Error::Schema(format!("line {}: bad cost {v:?}", lineno + 1))
                            })?;
                            if !(cost >= 0.0) {
                                return Err(Error::Schema(format!(
                                    "line {}: cost must be nonnegative",
                                    lineno + 1
                                )));
                            }
                            cost
                        }
                    };
                    if groups.iter().any(|g| g.name == *name) {
                        return Err(Error::Schema(format!(
                            "line {}: group {name:?} declared twice",
                            lineno + 1
                        )));
                    }
                    let columns: Vec<String> = tail
                        .split(',')
                        .map(|c| c.trim().to_string())
                        .filter(|c| !c.is_empty())
                        .collect();
                    if columns.is_empty() {
                        return Err(Error::Schema(format!(
                            "line {}: group {name:?} lists no columns",
                            lineno + 1
                        )));
                    }
                    for col in &columns {
                        if !assigned.insert(col.clone()) {
                            return Err(Error::Schema(format!(
                                "line {}: column {col:?} assigned twice",
                                lineno + 1
                            )));
                        }
                    }
                    groups.push(GroupDecl {
                        name: name.to_string(),
                        cost,
                        columns,
                    });
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "line {}: unknown directive {head:?}",
                        lineno + 1
                    )))
                }
            }
        }

        let label = label.ok_or_else(|| Error::Schema("no label column declared".into()))?;
        if groups.is_empty() {
            return Err(Error::Schema("no groups declared".into()));
        }
        Ok(Schema { label, groups })
    }
}
