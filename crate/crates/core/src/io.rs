//! Problem files: one JSON document per problem, JSONL for corpora.
//!
//! ```text
//! {"version":1,"n_meas":2,"n_land":1,"log_lik":[[-0.5],["-inf"]],
//!  "null_log_lik":[-8.0,-8.0],"truth":[0,-1],"meta":{"frame":3}}
//! ```
//!
//! Writing is deterministic: fixed field order, floats printed with 17
//! significant digits, `-inf` as the string `"-inf"`, meta keys sorted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::problem::{AssignmentProblem, Target};

pub const FORMAT_VERSION: i64 = 1;

const NEG_INF: &str = "-inf";

/// Decodes one problem document.
pub fn problem_read(text: &str) -> Result<AssignmentProblem> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::parse("document", e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::parse("document", "expected a JSON object"))?;

    let version = obj
        .get("version")
        .and_then(Value::as_i64)
        .ok_or_else(|| Error::parse("version", "missing or not an integer"))?;
    if version != FORMAT_VERSION {
        return Err(Error::parse(
            "version",
            format!("unsupported version {version}"),
        ));
    }
    let n_meas = read_count(obj, "n_meas")?;
    let n_land = read_count(obj, "n_land")?;

    let rows = obj
        .get("log_lik")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("log_lik", "missing or not an array"))?;
    if rows.len() != n_meas {
        return Err(Error::parse(
            "log_lik",
            format!("has {} rows but n_meas = {n_meas}", rows.len()),
        ));
    }
    let mut log_lik = Vec::with_capacity(n_meas * n_land);
    for (k, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::parse(format!("log_lik[{k}]"), "not an array"))?;
        if row.len() != n_land {
            return Err(Error::parse(
                format!("log_lik[{k}]"),
                format!("has {} entries but n_land = {n_land}", row.len()),
            ));
        }
        for (j, v) in row.iter().enumerate() {
            log_lik.push(read_log_lik(v, &format!("log_lik[{k}][{j}]"), true)?);
        }
    }

    let nulls = obj
        .get("null_log_lik")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse("null_log_lik", "missing or not an array"))?;
    if nulls.len() != n_meas {
        return Err(Error::parse(
            "null_log_lik",
            format!("has {} entries but n_meas = {n_meas}", nulls.len()),
        ));
    }
    let null_log_lik = nulls
        .iter()
        .enumerate()
        .map(|(k, v)| read_log_lik(v, &format!("null_log_lik[{k}]"), false))
        .collect::<Result<Vec<_>>>()?;

    let mut problem = AssignmentProblem::new(n_meas, n_land, log_lik, null_log_lik)?;

    if let Some(truth) = obj.get("truth").filter(|v| !v.is_null()) {
        let arr = truth
            .as_array()
            .ok_or_else(|| Error::parse("truth", "not an array"))?;
        if arr.len() != n_meas {
            return Err(Error::parse(
                "truth",
                format!("has {} entries but n_meas = {n_meas}", arr.len()),
            ));
        }
        let targets = arr
            .iter()
            .enumerate()
            .map(|(k, v)| match v.as_i64() {
                Some(-1) => Ok(Target::Null),
                Some(j) if j >= 0 && (j as usize) < n_land => Ok(Target::Landmark(j as usize)),
                _ => Err(Error::parse(
                    format!("truth[{k}]"),
                    format!("invalid target {v}"),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        problem
            .set_truth(targets)
            .map_err(|e| Error::parse("truth", e.to_string()))?;
    }

    if let Some(meta) = obj.get("meta").filter(|v| !v.is_null()) {
        let map = meta
            .as_object()
            .ok_or_else(|| Error::parse("meta", "not an object"))?;
        problem.set_meta_map(map.iter().map(|(k, v)| (k.clone(), v.clone())).collect());
    }
    Ok(problem)
}

fn read_count(obj: &serde_json::Map<String, Value>, field: &str) -> Result<usize> {
    obj.get(field)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::parse(field, "missing or not a non-negative integer"))
}

fn read_log_lik(v: &Value, field: &str, allow_neg_inf: bool) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| Error::parse(field, "number not representable as f64")),
        Value::String(s) if s == NEG_INF && allow_neg_inf => Ok(f64::NEG_INFINITY),
        Value::String(s) if s.eq_ignore_ascii_case("nan") => Err(Error::parse(field, "NaN entry")),
        other => Err(Error::parse(
            field,
            format!("expected a number, got {other}"),
        )),
    }
}

/// Encodes one problem as a single line (no trailing newline).
pub fn problem_write(p: &AssignmentProblem) -> String {
    let mut out = String::with_capacity(64 + 24 * p.n_meas() * (p.n_land() + 1));
    write!(
        out,
        "{{\"version\":{FORMAT_VERSION},\"n_meas\":{},\"n_land\":{},\"log_lik\":[",
        p.n_meas(),
        p.n_land()
    )
    .unwrap();
    for k in 0..p.n_meas() {
        if k > 0 {
            out.push(',');
        }
        out.push('[');
        for (j, v) in p.row(k).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            push_float(&mut out, *v);
        }
        out.push(']');
    }
    out.push_str("],\"null_log_lik\":[");
    for (k, v) in p.null_log_lik().iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        push_float(&mut out, *v);
    }
    out.push(']');
    if let Some(truth) = p.truth() {
        out.push_str(",\"truth\":[");
        for (k, t) in truth.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{}", t.to_code()).unwrap();
        }
        out.push(']');
    }
    if !p.meta().is_empty() {
        // BTreeMap gives sorted keys
        let meta: &BTreeMap<String, Value> = p.meta();
        out.push_str(",\"meta\":");
        out.push_str(&serde_json::to_string(meta).expect("meta is plain JSON"));
    }
    out.push('}');
    out
}

fn push_float(out: &mut String, v: f64) {
    if v == f64::NEG_INFINITY {
        write!(out, "\"{NEG_INF}\"").unwrap();
    } else {
        write!(out, "{v:.16e}").unwrap();
    }
}

/// Decodes a JSONL corpus; blank lines are skipped. Errors carry the 1-based line number.
pub fn corpus_read(text: &str) -> Result<Vec<AssignmentProblem>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            problem_read(l).map_err(|e| match e {
                Error::Parse { field, msg } => Error::Parse {
                    field: format!("line {}: {field}", i + 1),
                    msg,
                },
                other => other,
            })
        })
        .collect()
}

pub fn corpus_write<'a, I>(problems: I) -> String
where
    I: IntoIterator<Item = &'a AssignmentProblem>,
{
    let mut out = String::new();
    for p in problems {
        out.push_str(&problem_write(p));
        out.push('\n');
    }
    out
}

/// Reads a file holding either a single (possibly pretty-printed) problem document or a JSONL corpus.
pub fn read_problems(path: &Path) -> Result<Vec<AssignmentProblem>> {
    let text = std::fs::read_to_string(path)?;
    match corpus_read(&text) {
        Ok(problems) => Ok(problems),
        Err(corpus_err) => problem_read(&text).map(|p| vec![p]).map_err(|_| corpus_err),
    }
}
