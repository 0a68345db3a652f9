// SPDX-License-Identifier: Apache-2.0

//! JSONL query records: one query per line.
//!
//! ```json
//! {"query_id":"q1","responses":["Paris","paris"],"cluster_labels":[0,0],
//!  "n":2,"entailment":[[1.0,0.97],[0.95,1.0]],
//!  "labels":{"sequence":0,"response":0},"dataset":"trivia_qa"}
//! ```
//!
//! `entailment[i][j]` is the probability that response `i` entails
//! response `j`. A line consisting of a single `_meta` object carries run
//! provenance and is skipped by the loader.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{cluster_bidirectional, DenseMatrix, EntailmentMatrix};

/// Incorrectness labels (1 = incorrect).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectnessLabels {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<u8>,
}

/// Wire form of one query.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responses: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_labels: Option<Vec<i64>>,
    /// Explicit response count, checked against every other field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entailment: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<CorrectnessLabels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    /// Ground-truth alphabet size, when known (synthetic pools).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_k: Option<usize>,
    /// Distinct classes actually drawn (synthetic pools).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized_k: Option<usize>,
}

/// A validated query.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub id: String,
    pub n: usize,
    pub cluster_labels: Option<Vec<i64>>,
    pub entailment: Option<EntailmentMatrix>,
    pub correctness: Option<CorrectnessLabels>,
    pub dataset: Option<String>,
    pub true_k: Option<usize>,
}

impl Query {
    /// Validate a wire record. Returns the query and any non-fatal
    /// warnings (a diagonal entry other than 1 is reset to 1).
    pub fn from_record(rec: QueryRecord) -> std::result::Result<(Self, Vec<String>), String> {
        let mut warnings = Vec::new();
        if rec.query_id.is_empty() {
            return Err("query_id is empty".into());
        }
        if rec.cluster_labels.is_none() && rec.entailment.is_none() {
            return Err("record needs cluster_labels or entailment".into());
        }

        let mut n = rec.n;
        let mut agree = |what: &str, len: usize| -> std::result::Result<(), String> {
            match n {
                Some(m) if m != len => Err(format!("{what} has length {len}, expected {m}")),
                _ => {
                    n = Some(len);
                    Ok(())
                }
            }
        };
        if let Some(r) = &rec.responses {
            agree("responses", r.len())?;
        }
        if let Some(l) = &rec.cluster_labels {
            agree("cluster_labels", l.len())?;
        }
        if let Some(rows) = &rec.entailment {
            agree("entailment", rows.len())?;
            for (i, row) in rows.iter().enumerate() {
                if row.len() != rows.len() {
                    return Err(format!(
                        "entailment row {i} has {} entries, expected {}",
                        row.len(),
                        rows.len()
                    ));
                }
            }
        }
        let n = n.unwrap_or(0);
        if n == 0 {
            return Err("empty sample".into());
        }

        let entailment = match rec.entailment {
            Some(rows) => {
                for (i, row) in rows.iter().enumerate() {
                    if row[i] != 1.0 {
                        warnings.push(format!("entailment diagonal ({i}, {i}) = {} reset to 1", row[i]));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        if !(0.0..=1.0).contains(&v) {
                            return Err(format!("entailment entry ({i}, {j}) = {v} is outside [0, 1]"));
                        }
                    }
                }
                let m = DenseMatrix::from_rows(&rows).map_err(|e| e.to_string())?;
                Some(EntailmentMatrix::new(m).map_err(|e| e.to_string())?)
            }
            None => None,
        };

        if let Some(labels) = &rec.labels {
            for (name, v) in [("sequence", labels.sequence), ("response", labels.response)] {
                if matches!(v, Some(x) if x > 1) {
                    return Err(format!("labels.{name} must be 0 or 1"));
                }
            }
        }

        Ok((
            Self {
                id: rec.query_id,
                n,
                cluster_labels: rec.cluster_labels,
                entailment,
                correctness: rec.labels,
                dataset: rec.dataset,
                true_k: rec.true_k,
            },
            warnings,
        ))
    }

    /// Cluster labels, clustering the entailment matrix when none were
    /// supplied.
    pub fn resolved_labels(&self, entail_threshold: f64) -> Vec<i64> {
        match (&self.cluster_labels, &self.entailment) {
            (Some(l), _) => l.clone(),
            (None, Some(m)) => cluster_bidirectional(m, entail_threshold)
                .into_iter()
                .map(|c| c as i64)
                .collect(),
            (None, None) => unreachable!("validated query has labels or entailment"),
        }
    }

    /// Keep only the given responses.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            id: self.id.clone(),
            n: idx.len(),
            cluster_labels: self
                .cluster_labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
            entailment: self.entailment.as_ref().map(|m| m.select(idx)),
            correctness: self.correctness,
            dataset: self.dataset.clone(),
            true_k: self.true_k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    /// Abort on the first malformed line.
    Strict,
    /// Skip malformed lines, reporting each as a warning.
    Lenient,
}

#[derive(Debug, Default)]
pub struct Loaded {
    pub queries: Vec<Query>,
    pub warnings: Vec<String>,
}

pub fn load_jsonl(path: impl AsRef<Path>, mode: LoadMode) -> Result<Loaded> {
    read_jsonl(BufReader::new(File::open(path)?), mode)
}

pub fn read_jsonl<R: BufRead>(reader: R, mode: LoadMode) -> Result<Loaded> {
    let mut out = Loaded::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line, &mut seen) {
            Ok(None) => {}
            Ok(Some((q, warnings))) => {
                for w in warnings {
                    let w = format!("line {line_no}: {w}");
                    warn!("{w}");
                    out.warnings.push(w);
                }
                out.queries.push(q);
            }
            Err(message) => match mode {
                LoadMode::Strict => return Err(Error::Record { line: line_no, message }),
                LoadMode::Lenient => {
                    let w = format!("line {line_no}: skipped: {message}");
                    warn!("{w}");
                    out.warnings.push(w);
                }
            },
        }
    }
    if out.queries.is_empty() {
        let w = "no query records found".to_string();
        warn!("{w}");
        out.warnings.push(w);
    }
    Ok(out)
}

fn parse_line(
    line: &str,
    seen: &mut HashSet<String>,
) -> std::result::Result<Option<(Query, Vec<String>)>, String> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if let Some(obj) = value.as_object() {
        if obj.len() == 1 && obj.contains_key(META_KEY) {
            return Ok(None);
        }
    }
    let rec: QueryRecord = serde_json::from_value(value).map_err(|e| e.to_string())?;
    if !seen.insert(rec.query_id.clone()) {
        return Err(format!("duplicate query_id {:?}", rec.query_id));
    }
    Query::from_record(rec).map(Some)
}

pub const META_KEY: &str = "_meta";

/// Write records as JSONL, preceded by a `_meta` provenance line.
pub fn write_jsonl<W: Write>(
    mut w: W,
    meta: &serde_json::Value,
    records: &[QueryRecord],
) -> Result<()> {
    serde_json::to_writer(&mut w, &serde_json::json!({ META_KEY: meta }))?;
    writeln!(w)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, mode: LoadMode) -> Result<Loaded> {
        read_jsonl(text.as_bytes(), mode)
    }

    #[test]
    fn labels_only_record() {
        let out = load(r#"{"query_id":"q1","cluster_labels":[0,0,1]}"#, LoadMode::Strict).unwrap();
        assert_eq!(out.queries.len(), 1);
        assert_eq!(out.queries[0].n, 3);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn non_square_entailment_is_rejected() {
        let line = r#"{"query_id":"q1","responses":["a","b","c"],"entailment":[[1,0],[0,1],[0,0]]}"#;
        let err = load(line, LoadMode::Strict).unwrap_err();
        assert!(matches!(err, Error::Record { line: 1, .. }), "{err}");
    }

    #[test]
    fn response_count_mismatch_is_rejected() {
        let line = r#"{"query_id":"q1","responses":["a","b","c"],"entailment":[[1,0],[0,1]]}"#;
        assert!(load(line, LoadMode::Strict).is_err());
    }

    #[test]
    fn explicit_n_guards_truncation() {
        let line = r#"{"query_id":"q1","n":4,"cluster_labels":[0,1,2]}"#;
        assert!(load(line, LoadMode::Strict).is_err());
    }

    #[test]
    fn empty_file_warns() {
        let out = load("", LoadMode::Strict).unwrap();
        assert!(out.queries.is_empty());
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn out_of_range_entry() {
        let line = r#"{"query_id":"q1","entailment":[[1,1.5],[0,1]]}"#;
        assert!(load(line, LoadMode::Strict).is_err());
    }

    #[test]
    fn duplicate_ids() {
        let text = "{\"query_id\":\"a\",\"cluster_labels\":[0]}\n{\"query_id\":\"a\",\"cluster_labels\":[1]}\n";
        let err = load(text, LoadMode::Strict).unwrap_err();
        assert!(matches!(err, Error::Record { line: 2, .. }));
    }

    #[test]
    fn lenient_mode_skips_bad_lines() {
        let text = "{\"query_id\":\"a\",\"cluster_labels\":[0]}\nnot json\n{\"query_id\":\"b\"}\n{\"query_id\":\"c\",\"cluster_labels\":[0,1]}\n";
        let out = load(text, LoadMode::Lenient).unwrap();
        let ids: Vec<_> = out.queries.iter().map(|q| q.id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
        assert_eq!(out.warnings.len(), 2);
        assert!(out.warnings[0].starts_with("line 2:"));
        assert!(out.warnings[1].starts_with("line 3:"));
    }

    #[test]
    fn bad_correctness_label() {
        let line = r#"{"query_id":"a","cluster_labels":[0],"labels":{"sequence":2}}"#;
        assert!(load(line, LoadMode::Strict).is_err());
    }

    #[test]
    fn diagonal_is_normalized_with_warning() {
        let line = r#"{"query_id":"a","entailment":[[0.9,0.1],[0.2,1.0]]}"#;
        let out = load(line, LoadMode::Strict).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.queries[0].entailment.as_ref().unwrap().get(0, 0), 1.0);
    }

    #[test]
    fn meta_line_round_trip() {
        let rec = QueryRecord {
            query_id: "q".into(),
            cluster_labels: Some(vec![3, 3, 1]),
            n: Some(3),
            ..Default::default()
        };
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &serde_json::json!({"seed": 1}), &[rec]).unwrap();
        let out = read_jsonl(buf.as_slice(), LoadMode::Strict).unwrap();
        assert!(out.warnings.is_empty());
        assert_eq!(out.queries[0].cluster_labels.as_deref(), Some(&[3, 3, 1][..]));
    }

    #[test]
    fn select_restricts_every_field() {
        let rows = vec![
            vec![1.0, 0.1, 0.2],
            vec![0.3, 1.0, 0.4],
            vec![0.5, 0.6, 1.0],
        ];
        let rec = QueryRecord {
            query_id: "q".into(),
            cluster_labels: Some(vec![7, 8, 9]),
            entailment: Some(rows),
            ..Default::default()
        };
        let (q, _) = Query::from_record(rec).unwrap();
        let s = q.select(&[0, 2]);
        assert_eq!(s.n, 2);
        assert_eq!(s.cluster_labels.as_deref(), Some(&[7, 9][..]));
        assert_eq!(s.entailment.unwrap().get(1, 0), 0.5);
    }
}
