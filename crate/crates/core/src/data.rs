//! Rubric and score-matrix types, CSV ingestion and AI/ground-truth alignment.
//!
//! Scores are held per cell as raw points together with the normalized value
//! `raw / max_points`. Everything downstream (ICC, risk, thresholds) works on
//! the normalized scale; raw points are kept for totals so reporting does not
//! pick up a rounding step from multiplying back.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::error::DataError;

/// One rubric checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct RubricItem {
    pub id: String,
    pub max_points: f64,
}

/// Ordered list of rubric items. Item order here is the canonical column order
/// for every artifact the toolkit writes.
#[derive(Debug, Clone, PartialEq)]
pub struct RubricSpec {
    items: Vec<RubricItem>,
    total_max_points: f64,
    index: HashMap<String, usize>,
}

impl RubricSpec {
    pub fn new(items: Vec<RubricItem>) -> Result<Self, DataError> {
        if items.is_empty() {
            return Err(DataError::InvalidRubric("rubric has no items".into()));
        }
        let mut index = HashMap::with_capacity(items.len());
        for (j, item) in items.iter().enumerate() {
            if item.id.trim().is_empty() {
                return Err(DataError::InvalidRubric(format!("item {} has an empty id", j + 1)));
            }
            if !(item.max_points.is_finite() && item.max_points > 0.0) {
                return Err(DataError::InvalidRubric(format!(
                    "item {} has non-positive max_points {}",
                    item.id, item.max_points
                )));
            }
            if index.insert(item.id.clone(), j).is_some() {
                return Err(DataError::InvalidRubric(format!("duplicate item id {}", item.id)));
            }
        }
        let total_max_points = items.iter().map(|i| i.max_points).sum();
        Ok(Self { items, total_max_points, index })
    }

    /// Convenience constructor from `(id, max_points)` pairs.
    pub fn from_pairs<S: Into<String>>(
        pairs: impl IntoIterator<Item = (S, f64)>,
    ) -> Result<Self, DataError> {
        Self::new(
            pairs
                .into_iter()
                .map(|(id, max_points)| RubricItem { id: id.into(), max_points })
                .collect(),
        )
    }

    pub fn items(&self) -> &[RubricItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn total_max_points(&self) -> f64 {
        self.total_max_points
    }

    pub fn position(&self, item_id: &str) -> Option<usize> {
        self.index.get(item_id).copied()
    }

    pub fn item_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.id.as_str())
    }
}

/// A single scored cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub raw: f64,
    pub normalized: f64,
}

/// Sparse students x rubric-items table. Absent cells are explicit `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    students: Vec<String>,
    student_index: HashMap<String, usize>,
    rubric: RubricSpec,
    // row-major, students x items
    cells: Vec<Option<Cell>>,
}

impl ScoreMatrix {
    /// Empty matrix with the given declared students.
    pub fn new(students: Vec<String>, rubric: RubricSpec) -> Result<Self, DataError> {
        let mut student_index = HashMap::with_capacity(students.len());
        for (i, s) in students.iter().enumerate() {
            if s.trim().is_empty() {
                return Err(DataError::InvalidStudent("empty student id".into()));
            }
            if student_index.insert(s.clone(), i).is_some() {
                return Err(DataError::InvalidStudent(format!("duplicate student id {s}")));
            }
        }
        let cells = vec![None; students.len() * rubric.len()];
        Ok(Self { students, student_index, rubric, cells })
    }

    /// Insert a raw score. Rejects undeclared ids, duplicates and out-of-range points.
    pub fn insert(&mut self, student_id: &str, item_id: &str, raw: f64) -> Result<(), DataError> {
        let i = *self
            .student_index
            .get(student_id)
            .ok_or_else(|| DataError::UnknownStudent(student_id.to_string()))?;
        let j = self
            .rubric
            .position(item_id)
            .ok_or_else(|| DataError::UnknownItem(item_id.to_string()))?;
        self.insert_at(i, j, raw)
    }

    pub(crate) fn insert_at(&mut self, i: usize, j: usize, raw: f64) -> Result<(), DataError> {
        let item = &self.rubric.items[j];
        if !raw.is_finite() || raw < 0.0 || raw > item.max_points {
            return Err(DataError::OutOfRangeScore {
                student: self.students[i].clone(),
                item: item.id.clone(),
                raw,
                max_points: item.max_points,
            });
        }
        let slot = &mut self.cells[i * self.rubric.len() + j];
        if slot.is_some() {
            return Err(DataError::DuplicateCell {
                student: self.students[i].clone(),
                item: item.id.clone(),
            });
        }
        *slot = Some(Cell { raw, normalized: raw / item.max_points });
        Ok(())
    }

    pub fn students(&self) -> &[String] {
        &self.students
    }

    pub fn rubric(&self) -> &RubricSpec {
        &self.rubric
    }

    pub fn n_students(&self) -> usize {
        self.students.len()
    }

    pub fn n_items(&self) -> usize {
        self.rubric.len()
    }

    pub fn student_position(&self, student_id: &str) -> Option<usize> {
        self.student_index.get(student_id).copied()
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<Cell> {
        self.cells[i * self.rubric.len() + j]
    }

    pub fn get(&self, student_id: &str, item_id: &str) -> Option<Cell> {
        let i = self.student_position(student_id)?;
        let j = self.rubric.position(item_id)?;
        self.cell(i, j)
    }

    /// Normalized score, if present.
    pub fn score(&self, i: usize, j: usize) -> Option<f64> {
        self.cell(i, j).map(|c| c.normalized)
    }

    /// Number of present cells.
    pub fn n_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_dense(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    /// Present cells in canonical order (student-major, rubric order within a student).
    pub fn iter_cells(&self) -> impl Iterator<Item = (usize, usize, Cell)> + '_ {
        let n_items = self.rubric.len();
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(k, c)| c.map(|c| (k / n_items, k % n_items, c)))
    }

    /// Every declared pair without a cell gets raw score 0.
    pub fn fill_missing_as_zero(&self) -> ScoreMatrix {
        let mut out = self.clone();
        for slot in out.cells.iter_mut().filter(|c| c.is_none()) {
            *slot = Some(Cell { raw: 0.0, normalized: 0.0 });
        }
        out
    }

    /// Keeps only the listed students (in the given order), dropping others.
    pub fn select_students(&self, keep: &[&str]) -> Result<ScoreMatrix, DataError> {
        let mut out = ScoreMatrix::new(keep.iter().map(|s| s.to_string()).collect(), self.rubric.clone())?;
        for (new_i, id) in keep.iter().enumerate() {
            let i = self
                .student_position(id)
                .ok_or_else(|| DataError::UnknownStudent(id.to_string()))?;
            for j in 0..self.n_items() {
                out.cells[new_i * self.n_items() + j] = self.cell(i, j);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    student_id: String,
    item_id: String,
    raw_points: f64,
}

#[derive(Debug, Deserialize)]
struct RubricRow {
    item_id: String,
    max_points: f64,
}

fn read_to_string(path: &Path) -> Result<String, DataError> {
    let mut buf = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut buf))
        .map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
    Ok(buf)
}

fn check_header(
    reader: &mut csv::Reader<&[u8]>,
    expected: &[&str],
) -> Result<(), DataError> {
    let header = reader.headers().map_err(|e| DataError::MalformedCsv(e.to_string()))?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(DataError::MalformedCsv(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes())
}

/// Parses rubric CSV text (`item_id,max_points`).
pub fn parse_rubric(text: &str) -> Result<RubricSpec, DataError> {
    let mut reader = csv_reader(text);
    check_header(&mut reader, &["item_id", "max_points"])?;
    let mut items = Vec::new();
    for row in reader.deserialize::<RubricRow>() {
        let row = row.map_err(|e| DataError::MalformedCsv(e.to_string()))?;
        items.push(RubricItem { id: row.item_id, max_points: row.max_points });
    }
    RubricSpec::new(items)
}

pub fn load_rubric(path: impl AsRef<Path>) -> Result<RubricSpec, DataError> {
    parse_rubric(&read_to_string(path.as_ref())?)
}

/// Parses scores CSV text (`student_id,item_id,raw_points`). Students are
/// declared in order of first appearance.
pub fn parse_scores(text: &str, rubric: &RubricSpec) -> Result<ScoreMatrix, DataError> {
    let mut reader = csv_reader(text);
    check_header(&mut reader, &["student_id", "item_id", "raw_points"])?;
    let mut rows = Vec::new();
    let mut students: Vec<String> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for row in reader.deserialize::<ScoreRow>() {
        let row = row.map_err(|e| DataError::MalformedCsv(e.to_string()))?;
        let j = rubric
            .position(&row.item_id)
            .ok_or_else(|| DataError::UnknownItem(row.item_id.clone()))?;
        if row.student_id.is_empty() {
            return Err(DataError::MalformedCsv("empty student_id".into()));
        }
        let i = *seen.entry(row.student_id.clone()).or_insert_with(|| {
            students.push(row.student_id.clone());
            students.len() - 1
        });
        rows.push((i, j, row.raw_points));
    }
    let mut matrix = ScoreMatrix::new(students, rubric.clone())?;
    for (i, j, raw) in rows {
        matrix.insert_at(i, j, raw)?;
    }
    Ok(matrix)
}

pub fn load_scores(path: impl AsRef<Path>, rubric: &RubricSpec) -> Result<ScoreMatrix, DataError> {
    parse_scores(&read_to_string(path.as_ref())?, rubric)
}

/// Serializes a rubric as CSV text.
pub fn rubric_to_csv(rubric: &RubricSpec) -> String {
    let mut out = String::from("item_id,max_points\n");
    for item in rubric.items() {
        out.push_str(&format!("{},{}\n", csv_field(&item.id), item.max_points));
    }
    out
}

/// Serializes present cells as scores CSV text, canonical order.
pub fn scores_to_csv(matrix: &ScoreMatrix) -> String {
    let mut out = String::from("student_id,item_id,raw_points\n");
    for (i, j, cell) in matrix.iter_cells() {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_field(&matrix.students()[i]),
            csv_field(&matrix.rubric().items()[j].id),
            cell.raw
        ));
    }
    out
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A (student, item) pair by id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub student: String,
    pub item: String,
}

impl CellKey {
    pub fn new(student: impl Into<String>, item: impl Into<String>) -> Self {
        Self { student: student.into(), item: item.into() }
    }
}

/// Result of aligning an AI matrix with a ground-truth matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPairs {
    /// Pairs present in both, AI student order then rubric order.
    pub both: Vec<CellKey>,
    pub ai_only: Vec<CellKey>,
    pub truth_only: Vec<CellKey>,
    /// Set when the intersection is empty.
    pub disjoint: bool,
}

impl AlignedPairs {
    pub fn both_set(&self) -> BTreeSet<CellKey> {
        self.both.iter().cloned().collect()
    }
}

pub fn align(ai: &ScoreMatrix, truth: &ScoreMatrix) -> Result<AlignedPairs, DataError> {
    if ai.rubric().items() != truth.rubric().items() {
        return Err(DataError::RubricMismatch);
    }
    let mut both = Vec::new();
    let mut ai_only = Vec::new();
    let mut truth_only = Vec::new();
    for (i, j, _) in ai.iter_cells() {
        let student = &ai.students()[i];
        let key = CellKey::new(student.as_str(), ai.rubric().items()[j].id.as_str());
        let in_truth = truth
            .student_position(student)
            .is_some_and(|ti| truth.cell(ti, j).is_some());
        if in_truth {
            both.push(key);
        } else {
            ai_only.push(key);
        }
    }
    for (i, j, _) in truth.iter_cells() {
        let student = &truth.students()[i];
        let in_ai = ai.student_position(student).is_some_and(|ai_i| ai.cell(ai_i, j).is_some());
        if !in_ai {
            truth_only.push(CellKey::new(student.as_str(), truth.rubric().items()[j].id.as_str()));
        }
    }
    let disjoint = both.is_empty();
    Ok(AlignedPairs { both, ai_only, truth_only, disjoint })
}
