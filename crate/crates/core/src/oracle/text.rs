//! Line-oriented text format.
//!
//! ```text
//! n=<n> lambda=<λ> q=<q>
//! <indices of query 1, space separated; empty line for ∅>
//! ...
//! ```
//!
//! Defect sets use a header `n=<n> d=<d>` followed by one line of indices.

use std::fmt::Write as _;

use super::{check_universe, DefectSet, OracleError, Query, QueryPlan};

fn parse_err(line: usize, msg: impl Into<String>) -> OracleError {
    OracleError::Parse { line, msg: msg.into() }
}

/// Parses `key=value` fields of a header in the given order.
fn parse_header(line: &str, keys: &[&str]) -> Result<Vec<u64>, OracleError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != keys.len() {
        return Err(parse_err(1, format!("expected header fields {keys:?}, got {line:?}")));
    }
    fields
        .iter()
        .zip(keys)
        .map(|(f, k)| {
            let v = f
                .strip_prefix(k)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| parse_err(1, format!("expected {k}=<value>, got {f:?}")))?;
            v.parse::<u64>().map_err(|e| parse_err(1, format!("{k}: {e}")))
        })
        .collect()
}

fn parse_indices(line: &str, lineno: usize) -> Result<Vec<u32>, OracleError> {
    line.split_whitespace()
        .map(|t| t.parse::<u32>().map_err(|e| parse_err(lineno, format!("{t:?}: {e}"))))
        .collect()
}

fn write_indices(out: &mut String, items: impl Iterator<Item = u32>) {
    let mut first = true;
    for i in items {
        if !first {
            out.push(' ');
        }
        first = false;
        write!(out, "{i}").unwrap();
    }
    out.push('\n');
}

impl QueryPlan {
    pub fn to_text(&self) -> String {
        let mut out = format!("n={} lambda={} q={}\n", self.n, self.lambda, self.queries.len());
        for q in &self.queries {
            write_indices(&mut out, q.iter());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, OracleError> {
        let mut lines = text.split('\n');
        let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let h = parse_header(header, &["n", "lambda", "q"])?;
        let (n, lambda, q) = (h[0], h[1], h[2] as usize);
        check_universe(n)?;
        let lambda = u32::try_from(lambda).map_err(|_| parse_err(1, "lambda too large"))?;
        let body: Vec<&str> = lines.collect();
        // A trailing newline leaves one empty fragment after the last query.
        let expected_fragments = q + 1;
        if body.len() != expected_fragments || !body[q].is_empty() {
            return Err(parse_err(1, format!("header announces {q} queries, body has {}", body.len().saturating_sub(1))));
        }
        let queries = body[..q]
            .iter()
            .enumerate()
            .map(|(i, line)| {
                let items = parse_indices(line, i + 2)?;
                Query::new(n, items).map_err(|e| parse_err(i + 2, e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        QueryPlan::new(n, lambda, queries)
    }
}

impl DefectSet {
    pub fn to_text(&self) -> String {
        let mut out = format!("n={} d={}\n", self.n, self.members.len());
        write_indices(&mut out, self.members.iter().copied());
        out
    }

    pub fn from_text(text: &str) -> Result<Self, OracleError> {
        let mut lines = text.split('\n');
        let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let h = parse_header(header, &["n", "d"])?;
        let body = lines.next().ok_or_else(|| parse_err(2, "missing member line"))?;
        if lines.next().is_some_and(|rest| !rest.is_empty()) || lines.next().is_some() {
            return Err(parse_err(3, "unexpected trailing content"));
        }
        let items = parse_indices(body, 2)?;
        if items.len() as u64 != h[1] {
            return Err(parse_err(2, format!("header announces {} items, found {}", h[1], items.len())));
        }
        DefectSet::new(h[0], items).map_err(|e| parse_err(2, e.to_string()))
    }
}
