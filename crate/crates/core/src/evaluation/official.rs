//! Answer-key files and the official Perl scorer.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;

use crate::corpus::{parse_label, RelationLabel};
use crate::error::{Error, Result};

/// Reads `<id>\t<label>` lines. Blank lines are skipped.
pub fn read_answer_key(path: &Path) -> Result<Vec<(u32, RelationLabel)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_answer_key(&text)
}

pub fn parse_answer_key(text: &str) -> Result<Vec<(u32, RelationLabel)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id, label) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(i + 1, "expected `<id>\\t<label>`"))?;
        let id: u32 = id
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("bad id `{id}`")))?;
        let label = parse_label(label).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        out.push((id, label));
    }
    Ok(out)
}

pub fn format_answer_key(rows: &[(u32, RelationLabel)]) -> String {
    let mut out = String::new();
    for (id, label) in rows {
        writeln!(out, "{id}\t{label}").unwrap();
    }
    out
}

pub fn write_answer_key(path: &Path, rows: &[(u32, RelationLabel)]) -> Result<()> {
    std::fs::write(path, format_answer_key(rows)).map_err(|e| Error::io(path, e))
}

/// Pairs gold and predicted labels by id, in gold order. Every gold id must
/// have exactly one prediction.
pub fn align_by_id(
    gold: &[(u32, RelationLabel)],
    pred: &[(u32, RelationLabel)],
) -> Result<(Vec<RelationLabel>, Vec<RelationLabel>)> {
    let mut by_id = HashMap::with_capacity(pred.len());
    for &(id, label) in pred {
        if by_id.insert(id, label).is_some() {
            return Err(Error::Scorer(format!("duplicate prediction for id {id}")));
        }
    }
    if by_id.len() != gold.len() {
        return Err(Error::Scorer(format!(
            "{} gold ids but {} predictions",
            gold.len(),
            by_id.len()
        )));
    }
    let mut g = Vec::with_capacity(gold.len());
    let mut p = Vec::with_capacity(gold.len());
    for &(id, label) in gold {
        let pl = by_id
            .get(&id)
            .ok_or_else(|| Error::Scorer(format!("no prediction for id {id}")))?;
        g.push(label);
        p.push(*pl);
    }
    Ok((g, p))
}

/// Runs `perl <scorer> <proposed> <answer_key>` and returns the official
/// macro-F1 (9+1-way, directionality taken into account).
pub fn run_official_scorer(scorer: &Path, proposed: &Path, answer_key: &Path) -> Result<f64> {
    let output = Command::new("perl")
        .arg(scorer)
        .arg(proposed)
        .arg(answer_key)
        .output()
        .map_err(|e| Error::io(scorer, e))?;
    if !output.status.success() {
        return Err(Error::Scorer(format!(
            "{} exited with {}: {}",
            scorer.display(),
            output.status,
            String::from_utf8_lossy(&output.stderr)
        )));
    }
    parse_official_output(&String::from_utf8_lossy(&output.stdout))
}

/// Extracts the score from the scorer's `<<< The official score is ... >>>`
/// line, falling back to the last macro-averaged F1 printed.
pub fn parse_official_output(stdout: &str) -> Result<f64> {
    let value = |line: &str| -> Option<f64> {
        let rest = line.split("macro-averaged F1 =").nth(1)?;
        rest.trim().split('%').next()?.trim().parse().ok()
    };
    stdout
        .lines()
        .find(|l| l.contains("official score"))
        .and_then(value)
        .or_else(|| stdout.lines().rev().find_map(value))
        .ok_or_else(|| Error::Scorer("no macro-averaged F1 in scorer output".into()))
}
