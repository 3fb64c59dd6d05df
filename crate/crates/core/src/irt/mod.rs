//! Two-parameter logistic item response model.
//!
//! `icc` is the item characteristic curve. `fit_2pl` estimates item
//! parameters by penalized marginal maximum likelihood (EM over a fixed
//! quadrature grid) and student abilities as posterior means on that grid.

mod em;
pub mod mstep;
pub mod quadrature;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::ScoreMatrix;
use crate::error::IrtError;

pub use em::{expected_counts, fit_2pl, EStep};
pub use mstep::ItemObjective;
pub use quadrature::QuadratureGrid;

/// Upper bound on fitted discrimination.
pub const A_MAX: f64 = 20.0;
/// Lower bound on fitted discrimination.
pub const A_MIN: f64 = 1e-4;
/// Bound on fitted |difficulty|.
pub const B_MAX: f64 = 10.0;

const P_LOW: f64 = f64::MIN_POSITIVE;
const P_HIGH: f64 = 1.0 - f64::EPSILON / 2.0;

/// Success probability `1 / (1 + exp(-a (theta - b)))`, kept inside the open
/// interval (0, 1).
pub fn icc(a: f64, b: f64, theta: f64) -> Result<f64, IrtError> {
    if !(a.is_finite() && b.is_finite() && theta.is_finite()) {
        return Err(IrtError::NonFiniteInput);
    }
    Ok(sigmoid(a * (theta - b)).clamp(P_LOW, P_HIGH))
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln sigmoid(z)` without cancellation.
#[inline]
pub(crate) fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalPrior {
    pub location: f64,
    pub scale: f64,
}

impl LogNormalPrior {
    pub fn log_density(&self, a: f64) -> f64 {
        let z = (a.ln() - self.location) / self.scale;
        -a.ln() - self.scale.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * z * z
    }

    pub fn d1(&self, a: f64) -> f64 {
        let s2 = self.scale * self.scale;
        -1.0 / a - (a.ln() - self.location) / (s2 * a)
    }

    pub fn d2(&self, a: f64) -> f64 {
        let s2 = self.scale * self.scale;
        (1.0 - 1.0 / s2 + (a.ln() - self.location) / s2) / (a * a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub sd: f64,
}

impl NormalPrior {
    pub fn log_density(&self, b: f64) -> f64 {
        let z = (b - self.mean) / self.sd;
        -self.sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * z * z
    }

    pub fn d1(&self, b: f64) -> f64 {
        -(b - self.mean) / (self.sd * self.sd)
    }

    pub fn d2(&self) -> f64 {
        -1.0 / (self.sd * self.sd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub quadrature_nodes: usize,
    /// Half-width of the symmetric ability interval.
    pub quadrature_range: f64,
    pub max_iterations: usize,
    /// Relative change of the log-posterior between EM iterations.
    pub convergence_tol: f64,
    pub prior_a: LogNormalPrior,
    pub prior_b: NormalPrior,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            quadrature_nodes: 41,
            quadrature_range: 5.0,
            max_iterations: 500,
            convergence_tol: 1e-6,
            prior_a: LogNormalPrior { location: 0.0, scale: 1.0 },
            prior_b: NormalPrior { mean: 0.0, sd: 2.0 },
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), IrtError> {
        let bad = |m: &str| Err(IrtError::InvalidConfig(m.to_string()));
        if self.quadrature_nodes < 11 {
            return bad("quadrature_nodes must be at least 11");
        }
        if !(self.quadrature_range.is_finite() && self.quadrature_range > 0.0) {
            return bad("quadrature_range must be positive");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return bad("convergence_tol must be positive");
        }
        if !(self.prior_a.scale > 0.0 && self.prior_a.location.is_finite()) {
            return bad("prior_a scale must be positive");
        }
        if !(self.prior_b.sd > 0.0 && self.prior_b.mean.is_finite()) {
            return bad("prior_b sd must be positive");
        }
        Ok(())
    }

    pub fn grid(&self) -> QuadratureGrid {
        QuadratureGrid::standard_normal(self.quadrature_nodes, self.quadrature_range)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemParams {
    pub item_id: String,
    pub a: f64,
    pub b: f64,
}

/// Student abilities in the order they were fitted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AbilityEstimates {
    students: Vec<String>,
    theta: Vec<f64>,
}

impl AbilityEstimates {
    pub fn new(students: Vec<String>, theta: Vec<f64>) -> Self {
        assert_eq!(students.len(), theta.len());
        Self { students, theta }
    }

    pub fn students(&self) -> &[String] {
        &self.students
    }

    pub fn values(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn get(&self, student_id: &str) -> Option<f64> {
        self.students.iter().position(|s| s == student_id).map(|i| self.theta[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.students.iter().map(String::as_str).zip(self.theta.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub items: Vec<ItemParams>,
    pub abilities: AbilityEstimates,
    pub final_log_posterior: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// Log-posterior at the start and after each EM iteration. Empty when
    /// the result was loaded from a file.
    pub log_posterior_trace: Vec<f64>,
}

impl FitResult {
    pub fn item(&self, item_id: &str) -> Option<&ItemParams> {
        self.items.iter().find(|p| p.item_id == item_id)
    }
}

/// Model-expected scores for every declared (student, item) pair of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    pub students: Vec<String>,
    pub item_ids: Vec<String>,
    values: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.item_ids.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.item_ids.len();
        &self.values[i * n..(i + 1) * n]
    }
}

pub fn expected_scores(fit: &FitResult, matrix: &ScoreMatrix) -> Result<ProbabilityMatrix, IrtError> {
    let abilities: HashMap<&str, f64> = fit.abilities.iter().collect();
    let items: HashMap<&str, &ItemParams> = fit.items.iter().map(|p| (p.item_id.as_str(), p)).collect();
    let params = matrix
        .rubric()
        .item_ids()
        .map(|id| items.get(id).copied().ok_or_else(|| IrtError::CoverageGap(format!("item `{id}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut values = Vec::with_capacity(matrix.n_students() * params.len());
    for student in matrix.students() {
        let theta = *abilities
            .get(student.as_str())
            .ok_or_else(|| IrtError::CoverageGap(format!("student `{student}`")))?;
        for p in &params {
            values.push(icc(p.a, p.b, theta)?);
        }
    }
    Ok(ProbabilityMatrix {
        students: matrix.students().to_vec(),
        item_ids: matrix.rubric().item_ids().map(String::from).collect(),
        values,
    })
}

/// ICC samples over an ability grid, one column per item.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub theta: Vec<f64>,
    pub item_ids: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl CurveTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta");
        for id in &self.item_ids {
            out.push(',');
            out.push_str(&crate::data::csv_field(id));
        }
        out.push('\n');
        for (k, t) in self.theta.iter().enumerate() {
            out.push_str(&t.to_string());
            for col in &self.columns {
                out.push(',');
                out.push_str(&col[k].to_string());
            }
            out.push('\n');
        }
        out
    }
}

pub fn sample_icc_curves(fit: &FitResult, theta_grid: &[f64]) -> Result<CurveTable, IrtError> {
    if theta_grid.is_empty() {
        return Err(IrtError::EmptyGrid);
    }
    if theta_grid.iter().any(|t| !t.is_finite()) {
        return Err(IrtError::NonFiniteInput);
    }
    if theta_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(IrtError::UnsortedGrid);
    }
    let columns = fit
        .items
        .iter()
        .map(|p| theta_grid.iter().map(|&t| icc(p.a, p.b, t)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CurveTable {
        theta: theta_grid.to_vec(),
        item_ids: fit.items.iter().map(|p| p.item_id.clone()).collect(),
        columns,
    })
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn icc_reference_values() {
        assert_eq!(icc(1.7, 0.0, 0.0).unwrap(), 0.5);
        // 1/(1+e^-2) and 1/(1+e^4), evaluated independently to 16 digits
        assert!((icc(1.0, 0.0, 2.0).unwrap() - 0.880_797_077_977_882_4).abs() < 1e-15);
        assert!((icc(2.0, 1.0, -1.0).unwrap() - 0.017_986_209_962_091_56).abs() < 1e-15);
        assert_eq!(icc(f64::NAN, 0.0, 0.0), Err(IrtError::NonFiniteInput));
        assert_eq!(icc(1.0, f64::INFINITY, 0.0), Err(IrtError::NonFiniteInput));
    }

    #[test]
    fn icc_stays_inside_open_interval() {
        let hi = icc(20.0, -10.0, 10.0).unwrap();
        let lo = icc(20.0, 10.0, -10.0).unwrap();
        assert!(hi < 1.0 && lo > 0.0);
    }

    proptest! {
        #[test]
        fn icc_symmetry(a in 0.01f64..20.0, b in -10.0f64..10.0, d in -10.0f64..10.0) {
            let s = icc(a, b, b + d).unwrap() + icc(a, b, b - d).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn icc_increasing(a in 0.01f64..5.0, b in -3.0f64..3.0, t in -4.0f64..4.0, dt in 0.01f64..1.0) {
            prop_assert!(icc(a, b, t + dt).unwrap() > icc(a, b, t).unwrap());
        }
    }

    fn toy_fit() -> FitResult {
        FitResult {
            items: vec![
                ItemParams { item_id: "x".into(), a: 1.2, b: 0.3 },
                ItemParams { item_id: "y".into(), a: 1.2, b: 0.3 },
                ItemParams { item_id: "z".into(), a: 0.7, b: -1.0 },
            ],
            abilities: AbilityEstimates::new(vec!["s1".into(), "s2".into()], vec![0.3, -1.0]),
            final_log_posterior: 0.0,
            iterations_used: 0,
            converged: true,
            log_posterior_trace: vec![],
        }
    }

    #[test]
    fn curves_monotone_and_symmetric() {
        let grid: Vec<f64> = (0..=80).map(|k| -4.0 + 0.1 * k as f64).collect();
        let t = sample_icc_curves(&toy_fit(), &grid).unwrap();
        assert_eq!(t.columns.len(), 3);
        for col in &t.columns {
            assert_eq!(col.len(), 81);
            assert!(col.windows(2).all(|w| w[1] >= w[0]));
        }
        assert_eq!(t.columns[0], t.columns[1]);
        let at_b = sample_icc_curves(&toy_fit(), &[0.3]).unwrap();
        assert_eq!(at_b.columns[0][0], 0.5);
        assert_eq!(sample_icc_curves(&toy_fit(), &[]), Err(IrtError::EmptyGrid));
        assert_eq!(sample_icc_curves(&toy_fit(), &[1.0, 0.0]), Err(IrtError::UnsortedGrid));
    }

    #[test]
    fn expected_scores_match_icc() {
        let rubric = crate::data::RubricSpec::from_pairs([("x", 1.0), ("y", 1.0), ("z", 1.0)]).unwrap();
        let m = ScoreMatrix::new(vec!["s1".into(), "s2".into()], rubric).unwrap();
        let fit = toy_fit();
        let p = expected_scores(&fit, &m).unwrap();
        assert_eq!(p.get(0, 0), 0.5);
        assert_eq!(p.get(1, 2), 0.5);
        for i in 0..2 {
            for (j, item) in fit.items.iter().enumerate() {
                let theta = fit.abilities.values()[i];
                assert_eq!(p.get(i, j), icc(item.a, item.b, theta).unwrap());
                assert!(p.get(i, j) > 0.0 && p.get(i, j) < 1.0);
            }
        }

        let other = crate::data::RubricSpec::from_pairs([("x", 1.0), ("w", 1.0)]).unwrap();
        let m = ScoreMatrix::new(vec!["s1".into()], other).unwrap();
        assert!(matches!(expected_scores(&fit, &m), Err(IrtError::CoverageGap(_))));
        let rubric = crate::data::RubricSpec::from_pairs([("x", 1.0)]).unwrap();
        let m = ScoreMatrix::new(vec!["nobody".into()], rubric).unwrap();
        assert!(matches!(expected_scores(&fit, &m), Err(IrtError::CoverageGap(_))));
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig::default().validate().is_ok());
        let c = FitConfig { quadrature_nodes: 5, ..FitConfig::default() };
        assert!(c.validate().is_err());
        let c = FitConfig { convergence_tol: 0.0, ..FitConfig::default() };
        assert!(c.validate().is_err());
        let c = FitConfig { max_iterations: 0, ..FitConfig::default() };
        assert!(c.validate().is_err());
    }
}
