//! AI-versus-ground-truth agreement and the (t, r) threshold sweep.
//!
//! Agreement is an ordinary least-squares fit of per-student AI totals (y) on
//! ground-truth totals (x). Under a filter, both totals are summed over the
//! accepted cells only, and students with no accepted cell drop out.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::data::{align, CellKey, ScoreMatrix};
use crate::error::MetricsError;
use crate::filter::{score_cells, FilterConfig};
use crate::irt::FitResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionStats {
    pub slope: f64,
    pub offset: f64,
    pub r2: f64,
    pub offset_fraction: f64,
    pub n: usize,
}

/// OLS of y on x for `(x, y)` pairs. `r2` is the squared Pearson correlation,
/// taken as 0 when y has no variance.
pub fn regress_totals(pairs: &[(f64, f64)], total_max_points: f64) -> Result<RegressionStats, MetricsError> {
    let n = pairs.len();
    if n < 3 {
        return Err(MetricsError::TooFewPoints(n));
    }
    let x0 = pairs[0].0;
    if pairs.iter().all(|&(x, _)| x == x0) {
        return Err(MetricsError::DegenerateX);
    }
    let nf = n as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let offset = mean_y - slope * mean_x;
    let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 0.0 };
    Ok(RegressionStats { slope, offset, r2, offset_fraction: offset / total_max_points, n })
}

/// Per-student raw-point totals over a subset of cells, in matrix student
/// order. Students without a cell in the subset are omitted.
pub fn totals_over(cells: &BTreeSet<CellKey>, matrix: &ScoreMatrix) -> Result<Vec<(String, f64)>, MetricsError> {
    let n_items = matrix.n_items();
    let mut mask = vec![false; matrix.n_students() * n_items];
    for key in cells {
        let unknown = || MetricsError::UnknownCell { student: key.student.clone(), item: key.item.clone() };
        let i = matrix.student_position(&key.student).ok_or_else(unknown)?;
        let j = matrix.rubric().position(&key.item).ok_or_else(unknown)?;
        if matrix.cell(i, j).is_none() {
            return Err(unknown());
        }
        mask[i * n_items + j] = true;
    }
    Ok(masked_totals(&mask, matrix))
}

fn masked_totals(mask: &[bool], matrix: &ScoreMatrix) -> Vec<(String, f64)> {
    let n_items = matrix.n_items();
    let mut out = Vec::new();
    for (i, student) in matrix.students().iter().enumerate() {
        let mut total = 0.0;
        let mut any = false;
        for j in 0..n_items {
            if mask[i * n_items + j] {
                if let Some(cell) = matrix.cell(i, j) {
                    total += cell.raw;
                    any = true;
                }
            }
        }
        if any {
            out.push((student.clone(), total));
        }
    }
    out
}

/// `(truth total, ai total)` per student over the given cells, AI student order.
pub fn paired_totals(
    cells: &BTreeSet<CellKey>,
    ai: &ScoreMatrix,
    truth: &ScoreMatrix,
) -> Result<Vec<(String, f64, f64)>, MetricsError> {
    let ai_totals = totals_over(cells, ai)?;
    let truth_totals: std::collections::HashMap<String, f64> = totals_over(cells, truth)?.into_iter().collect();
    Ok(ai_totals
        .into_iter()
        .filter_map(|(s, y)| truth_totals.get(&s).map(|&x| (s, x, y)))
        .collect())
}

/// Regression of AI totals on truth totals restricted to `cells`.
pub fn agreement_over(
    cells: &BTreeSet<CellKey>,
    ai: &ScoreMatrix,
    truth: &ScoreMatrix,
) -> Result<(usize, Result<RegressionStats, MetricsError>), MetricsError> {
    let pairs: Vec<(f64, f64)> = paired_totals(cells, ai, truth)?.into_iter().map(|(_, x, y)| (x, y)).collect();
    Ok((pairs.len(), regress_totals(&pairs, ai.rubric().total_max_points())))
}

/// Unfiltered agreement over every cell present in both matrices.
pub fn unfiltered_agreement(ai: &ScoreMatrix, truth: &ScoreMatrix) -> Result<RegressionStats, MetricsError> {
    let aligned = align(ai, truth).map_err(|_| MetricsError::RubricMismatch)?;
    agreement_over(&aligned.both_set(), ai, truth)?.1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub r: f64,
    /// `None` when the regression is infeasible (fewer than 3 students or
    /// constant truth totals).
    pub stats: Option<RegressionStats>,
    pub acceptance_rate: f64,
    pub accepted: usize,
    pub total: usize,
    pub n_students: usize,
}

impl SweepRow {
    pub fn feasible(&self) -> bool {
        self.stats.is_some()
    }
}

fn check_grid(grid: &[f64]) -> Result<(), MetricsError> {
    if grid.is_empty() {
        return Err(MetricsError::EmptyGrid);
    }
    match grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(&v) => Err(MetricsError::OutOfRange(v)),
        None => Ok(()),
    }
}

/// Filters the AI matrix at every `(t, r)` (t outer, r inner) and measures
/// agreement on the accepted cells.
pub fn sweep(
    ai: &ScoreMatrix,
    truth: &ScoreMatrix,
    fit: &FitResult,
    t_grid: &[f64],
    r_grid: &[f64],
) -> Result<Vec<SweepRow>, MetricsError> {
    check_grid(t_grid)?;
    check_grid(r_grid)?;
    let aligned = align(ai, truth).map_err(|_| MetricsError::RubricMismatch)?;
    let in_truth = aligned.both_set();
    let scored = score_cells(ai, fit)?;
    let items = ai.rubric().items();
    let keys: Vec<CellKey> = scored
        .iter()
        .map(|&(i, j, _, _)| CellKey::new(ai.students()[i].as_str(), items[j].id.as_str()))
        .collect();

    let mut rows = Vec::with_capacity(t_grid.len() * r_grid.len());
    for &t in t_grid {
        for &r in r_grid {
            let cfg = FilterConfig::new(t, r)?;
            let mut accepted = 0;
            let mut cells = BTreeSet::new();
            for (&(_, _, s, p), key) in scored.iter().zip(&keys) {
                if crate::filter::decide(s, p, &cfg)?.is_accept() {
                    accepted += 1;
                    if in_truth.contains(key) {
                        cells.insert(key.clone());
                    }
                }
            }
            let (n_students, stats) = agreement_over(&cells, ai, truth)?;
            let total = scored.len();
            rows.push(SweepRow {
                t,
                r,
                stats: stats.ok(),
                acceptance_rate: if total == 0 { 0.0 } else { accepted as f64 / total as f64 },
                accepted,
                total,
                n_students,
            });
        }
    }
    Ok(rows)
}

/// Feasible row with the lowest acceptance rate; ties go to the larger t,
/// then the smaller r.
pub fn strictest_feasible(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter().filter(|r| r.feasible()).min_by(|a, b| {
        a.acceptance_rate
            .total_cmp(&b.acceptance_rate)
            .then(b.t.total_cmp(&a.t))
            .then(a.r.total_cmp(&b.r))
    })
}

pub fn find_row(rows: &[SweepRow], t: f64, r: f64) -> Option<&SweepRow> {
    rows.iter().find(|row| (row.t - t).abs() < 1e-9 && (row.r - r).abs() < 1e-9)
}

pub const SWEEP_HEADER: &str = "t,r,r2,slope,offset_fraction,acceptance_rate,n_students,feasible";

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        let (r2, slope, frac) = match &row.stats {
            Some(s) => (s.r2.to_string(), s.slope.to_string(), s.offset_fraction.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.t,
            row.r,
            r2,
            slope,
            frac,
            row.acceptance_rate,
            row.n_students,
            row.feasible()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RubricSpec;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn regression_examples() {
        let s = regress_totals(&[(0.0, 0.0), (1.0, 2.0), (2.0, 4.0)], 18.0).unwrap();
        assert!(close(s.slope, 2.0) && close(s.offset, 0.0) && close(s.r2, 1.0));
        let s = regress_totals(&[(1.5, 1.5), (3.0, 3.0), (7.25, 7.25), (9.0, 9.0)], 18.0).unwrap();
        assert!(close(s.slope, 1.0) && close(s.offset, 0.0) && close(s.r2, 1.0));
        let s = regress_totals(&[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)], 18.0).unwrap();
        assert_eq!((s.slope, s.offset, s.r2), (0.0, 1.0, 0.0));
        assert!(close(s.offset_fraction * 18.0, s.offset));
    }

    #[test]
    fn regression_errors() {
        assert_eq!(regress_totals(&[(0.0, 0.0), (1.0, 1.0)], 1.0), Err(MetricsError::TooFewPoints(2)));
        assert_eq!(
            regress_totals(&[(0.1, 0.0), (0.1, 1.0), (0.1, 3.0)], 1.0),
            Err(MetricsError::DegenerateX)
        );
    }

    fn small() -> ScoreMatrix {
        let rubric = RubricSpec::from_pairs([("a", 1.0), ("b", 1.0), ("c", 2.0)]).unwrap();
        let mut m = ScoreMatrix::new(vec!["s1".into(), "s2".into()], rubric).unwrap();
        m.insert("s1", "a", 1.0).unwrap();
        m.insert("s1", "b", 0.0).unwrap();
        m.insert("s1", "c", 1.0).unwrap();
        m.insert("s2", "a", 1.0).unwrap();
        m
    }

    #[test]
    fn totals() {
        let m = small();
        let all: BTreeSet<CellKey> =
            ["a", "b", "c"].iter().map(|i| CellKey::new("s1", *i)).chain([CellKey::new("s2", "a")]).collect();
        assert_eq!(totals_over(&all, &m).unwrap(), vec![("s1".to_string(), 2.0), ("s2".to_string(), 1.0)]);
        assert!(totals_over(&BTreeSet::new(), &m).unwrap().is_empty());
        let mut without_c = all.clone();
        without_c.remove(&CellKey::new("s1", "c"));
        assert_eq!(totals_over(&without_c, &m).unwrap()[0].1, 1.0);
        let bad: BTreeSet<CellKey> = [CellKey::new("s2", "b")].into_iter().collect();
        assert!(matches!(totals_over(&bad, &m), Err(MetricsError::UnknownCell { .. })));
    }

    #[test]
    fn grid_validation() {
        assert_eq!(check_grid(&[]), Err(MetricsError::EmptyGrid));
        assert_eq!(check_grid(&[0.0, 1.5]), Err(MetricsError::OutOfRange(1.5)));
    }
}
