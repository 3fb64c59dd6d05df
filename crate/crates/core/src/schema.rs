//! Line-oriented JSON files for fitted parameters (`triage-params-v1`) and
//! synthetic ground truth (`triage-synth-truth-v1`).
//!
//! Each file starts with one header object carrying `"schema"`, followed by
//! one object per item and one per student, each tagged by `"kind"`:
//!
//! ```text
//! {"kind":"header","schema":"triage-params-v1","iterations":37,"converged":true,"log_posterior":-2051.3,...}
//! {"kind":"item","item_id":"I01","a":1.21,"b":-0.43}
//! {"kind":"student","student_id":"S0001","theta":0.17}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::SchemaError;
use crate::irt::{AbilityEstimates, FitConfig, FitResult, ItemParams};
use crate::synth::{Provenance, SynthItem};

pub const PARAMS_SCHEMA: &str = "triage-params-v1";
pub const SYNTH_TRUTH_SCHEMA: &str = "triage-synth-truth-v1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ParamsLine {
    Header {
        schema: String,
        iterations: usize,
        converged: bool,
        log_posterior: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        config: Option<FitConfig>,
    },
    Item { item_id: String, a: f64, b: f64 },
    Student { student_id: String, theta: f64 },
}

fn to_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn params_to_string(fit: &FitResult, config: Option<&FitConfig>) -> String {
    let mut out = to_line(&ParamsLine::Header {
        schema: PARAMS_SCHEMA.into(),
        iterations: fit.iterations_used,
        converged: fit.converged,
        log_posterior: fit.final_log_posterior,
        config: config.copied(),
    });
    for p in &fit.items {
        out.push_str(&to_line(&ParamsLine::Item { item_id: p.item_id.clone(), a: p.a, b: p.b }));
    }
    for (s, theta) in fit.abilities.iter() {
        out.push_str(&to_line(&ParamsLine::Student { student_id: s.to_string(), theta }));
    }
    out
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(k, l)| (k + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

fn parse_err(line: usize, message: impl ToString) -> SchemaError {
    SchemaError::Parse { line, message: message.to_string() }
}

pub fn parse_params(text: &str) -> Result<FitResult, SchemaError> {
    let mut header = None;
    let mut items = Vec::new();
    let mut students = Vec::new();
    let mut theta = Vec::new();
    for (n, line) in lines(text) {
        let parsed: ParamsLine = serde_json::from_str(line).map_err(|e| parse_err(n, e))?;
        match parsed {
            ParamsLine::Header { schema, iterations, converged, log_posterior, .. } => {
                if header.is_some() {
                    return Err(parse_err(n, "second header"));
                }
                if schema != PARAMS_SCHEMA {
                    return Err(SchemaError::UnsupportedSchema(schema));
                }
                header = Some((iterations, converged, log_posterior));
            }
            _ if header.is_none() => return Err(parse_err(n, "record before header")),
            ParamsLine::Item { item_id, a, b } => {
                if !(a.is_finite() && a > 0.0 && b.is_finite()) {
                    return Err(parse_err(n, format!("invalid parameters for item {item_id}")));
                }
                items.push(ItemParams { item_id, a, b });
            }
            ParamsLine::Student { student_id, theta: t } => {
                if !t.is_finite() {
                    return Err(parse_err(n, format!("non-finite theta for {student_id}")));
                }
                students.push(student_id);
                theta.push(t);
            }
        }
    }
    let (iterations_used, converged, final_log_posterior) = header.ok_or_else(|| parse_err(0, "missing header"))?;
    Ok(FitResult {
        items,
        abilities: AbilityEstimates::new(students, theta),
        final_log_posterior,
        iterations_used,
        converged,
        log_posterior_trace: Vec::new(),
    })
}

pub fn load_params(path: impl AsRef<std::path::Path>) -> Result<FitResult, SchemaError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| SchemaError::Io { path: path.display().to_string(), source })?;
    parse_params(&text)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TruthLine {
    Header { schema: String, seed: u64 },
    Item { item_id: String, max_points: f64, a: f64, b: f64 },
    Student { student_id: String, theta: f64 },
}

pub fn provenance_to_string(p: &Provenance) -> String {
    let mut out = to_line(&TruthLine::Header { schema: SYNTH_TRUTH_SCHEMA.into(), seed: p.seed });
    for it in &p.items {
        out.push_str(&to_line(&TruthLine::Item {
            item_id: it.item_id.clone(),
            max_points: it.max_points,
            a: it.a,
            b: it.b,
        }));
    }
    for (s, &theta) in p.students.iter().zip(&p.theta) {
        out.push_str(&to_line(&TruthLine::Student { student_id: s.clone(), theta }));
    }
    out
}

pub fn parse_provenance(text: &str) -> Result<Provenance, SchemaError> {
    let mut seed = None;
    let mut items = Vec::new();
    let mut students = Vec::new();
    let mut theta = Vec::new();
    for (n, line) in lines(text) {
        match serde_json::from_str::<TruthLine>(line).map_err(|e| parse_err(n, e))? {
            TruthLine::Header { schema, seed: s } => {
                if schema != SYNTH_TRUTH_SCHEMA {
                    return Err(SchemaError::UnsupportedSchema(schema));
                }
                seed = Some(s);
            }
            TruthLine::Item { item_id, max_points, a, b } => items.push(SynthItem { item_id, max_points, a, b }),
            TruthLine::Student { student_id, theta: t } => {
                students.push(student_id);
                theta.push(t);
            }
        }
    }
    Ok(Provenance { seed: seed.ok_or_else(|| parse_err(0, "missing header"))?, items, students, theta })
}
