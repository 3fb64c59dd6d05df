//! Per-cell risk and the two-stage accept/route rule.
//!
//! A cell is auto-accepted only when its normalized AI score clears the
//! partial-credit threshold `t` (inclusive) and its risk `|s - p|` is within
//! the tolerance `r` (inclusive). The credit screen is evaluated first.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{csv_field, ScoreMatrix};
use crate::error::FilterError;
use crate::irt::{expected_scores, FitResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    t: f64,
    r: f64,
}

impl FilterConfig {
    pub fn new(t: f64, r: f64) -> Result<Self, FilterError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(FilterError::OutOfRange(format!("credit threshold t = {t}")));
        }
        if !(0.0..=1.0).contains(&r) {
            return Err(FilterError::OutOfRange(format!("risk tolerance r = {r}")));
        }
        Ok(Self { t, r })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouteReason {
    BelowCreditThreshold,
    HighRisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Accept,
    Route(RouteReason),
}

impl Outcome {
    pub fn is_accept(&self) -> bool {
        matches!(self, Outcome::Accept)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Accept => "accept",
            Outcome::Route(_) => "route",
        }
    }

    pub fn reason_label(&self) -> &'static str {
        match self {
            Outcome::Accept => "none",
            Outcome::Route(RouteReason::BelowCreditThreshold) => "below_credit_threshold",
            Outcome::Route(RouteReason::HighRisk) => "high_risk",
        }
    }

    pub fn from_labels(outcome: &str, reason: &str) -> Option<Self> {
        match (outcome, reason) {
            ("accept", "none") => Some(Outcome::Accept),
            ("route", "below_credit_threshold") => Some(Outcome::Route(RouteReason::BelowCreditThreshold)),
            ("route", "high_risk") => Some(Outcome::Route(RouteReason::HighRisk)),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.label(), self.reason_label())
    }
}

fn check_score(s: f64) -> Result<(), FilterError> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(FilterError::OutOfRange(format!("score s = {s}")))
    }
}

fn check_probability(p: f64) -> Result<(), FilterError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(FilterError::OutOfRange(format!("expected probability p = {p}")))
    }
}

/// `|s - p|`.
pub fn risk(s: f64, p: f64) -> Result<f64, FilterError> {
    check_score(s)?;
    check_probability(p)?;
    Ok((s - p).abs())
}

pub fn decide(s: f64, p: f64, cfg: &FilterConfig) -> Result<Outcome, FilterError> {
    let risk = risk(s, p)?;
    Ok(outcome_for(s, risk, cfg))
}

#[inline]
fn outcome_for(s: f64, risk: f64, cfg: &FilterConfig) -> Outcome {
    if s < cfg.t {
        Outcome::Route(RouteReason::BelowCreditThreshold)
    } else if risk > cfg.r {
        Outcome::Route(RouteReason::HighRisk)
    } else {
        Outcome::Accept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub student_id: String,
    pub item_id: String,
    pub s: f64,
    pub p: f64,
    pub risk: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub records: Vec<DecisionRecord>,
    pub accepted: usize,
}

impl FilterReport {
    pub fn total(&self) -> usize {
        self.records.len()
    }

    /// Accepted / total; zero for an empty matrix.
    pub fn acceptance_rate(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.accepted as f64 / self.records.len() as f64
        }
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.records.iter().filter(|r| r.outcome == outcome).count()
    }
}

/// Scores every present AI cell against the fitted expectation.
pub fn score_cells(ai: &ScoreMatrix, fit: &FitResult) -> Result<Vec<(usize, usize, f64, f64)>, FilterError> {
    let expected = expected_scores(fit, ai)?;
    ai.iter_cells()
        .map(|(i, j, cell)| {
            let p = expected.get(i, j);
            risk(cell.normalized, p)?;
            Ok((i, j, cell.normalized, p))
        })
        .collect()
}

pub fn apply_filter(ai: &ScoreMatrix, fit: &FitResult, cfg: &FilterConfig) -> Result<FilterReport, FilterError> {
    let scored = score_cells(ai, fit)?;
    let items = ai.rubric().items();
    let mut accepted = 0;
    let records = scored
        .into_iter()
        .map(|(i, j, s, p)| {
            let risk = (s - p).abs();
            let outcome = outcome_for(s, risk, cfg);
            accepted += usize::from(outcome.is_accept());
            DecisionRecord {
                student_id: ai.students()[i].clone(),
                item_id: items[j].id.clone(),
                s,
                p,
                risk,
                outcome,
            }
        })
        .collect();
    Ok(FilterReport { records, accepted })
}

pub const DECISIONS_HEADER: &str = "student_id,item_id,s,p,risk,outcome,route_reason";

pub fn decisions_to_csv(records: &[DecisionRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(DECISIONS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_field(&r.student_id),
            csv_field(&r.item_id),
            r.s,
            r.p,
            r.risk,
            r.outcome.label(),
            r.outcome.reason_label()
        ));
    }
    out
}

#[derive(Debug, Deserialize)]
struct DecisionRow {
    student_id: String,
    item_id: String,
    s: f64,
    p: f64,
    risk: f64,
    outcome: String,
    route_reason: String,
}

pub fn parse_decisions(text: &str) -> Result<Vec<DecisionRecord>, crate::error::DataError> {
    use crate::error::DataError;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::MalformedCsv(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    if header.join(",") != DECISIONS_HEADER {
        return Err(DataError::MalformedCsv(format!("expected header `{DECISIONS_HEADER}`")));
    }
    reader
        .deserialize::<DecisionRow>()
        .map(|row| {
            let row = row.map_err(|e| DataError::MalformedCsv(e.to_string()))?;
            let outcome = Outcome::from_labels(&row.outcome, &row.route_reason).ok_or_else(|| {
                DataError::MalformedCsv(format!("bad outcome `{}` / `{}`", row.outcome, row.route_reason))
            })?;
            Ok(DecisionRecord {
                student_id: row.student_id,
                item_id: row.item_id,
                s: row.s,
                p: row.p,
                risk: row.risk,
                outcome,
            })
        })
        .collect()
}

/// Students x items risk table.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapTable {
    pub students: Vec<String>,
    pub item_ids: Vec<String>,
    /// Row-major; `None` where no record exists.
    pub values: Vec<Option<f64>>,
}

impl HeatmapTable {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.item_ids.len() + j]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("student_id");
        for id in &self.item_ids {
            out.push(',');
            out.push_str(&csv_field(id));
        }
        out.push('\n');
        for (i, s) in self.students.iter().enumerate() {
            out.push_str(&csv_field(s));
            for j in 0..self.item_ids.len() {
                out.push(',');
                if let Some(v) = self.get(i, j) {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Lays records out on the given student and item order. Pairs not in the
/// ordering are ignored.
pub fn export_risk_heatmap(
    records: &[DecisionRecord],
    students: &[String],
    item_ids: &[String],
) -> Result<HeatmapTable, FilterError> {
    if records.is_empty() {
        return Err(FilterError::EmptyInput);
    }
    let row: std::collections::HashMap<&str, usize> =
        students.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let col: std::collections::HashMap<&str, usize> =
        item_ids.iter().enumerate().map(|(j, s)| (s.as_str(), j)).collect();
    let mut values = vec![None; students.len() * item_ids.len()];
    for r in records {
        if let (Some(&i), Some(&j)) = (row.get(r.student_id.as_str()), col.get(r.item_id.as_str())) {
            values[i * item_ids.len() + j] = Some(r.risk);
        }
    }
    Ok(HeatmapTable { students: students.to_vec(), item_ids: item_ids.to_vec(), values })
}

/// Student and item order as first seen in the records.
pub fn record_order(records: &[DecisionRecord]) -> (Vec<String>, Vec<String>) {
    let mut students = Vec::new();
    let mut items = Vec::new();
    let mut seen_s = std::collections::HashSet::new();
    let mut seen_i = std::collections::HashSet::new();
    for r in records {
        if seen_s.insert(r.student_id.as_str()) {
            students.push(r.student_id.clone());
        }
        if seen_i.insert(r.item_id.as_str()) {
            items.push(r.item_id.clone());
        }
    }
    (students, items)
}
