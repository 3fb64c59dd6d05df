use super::mstep::ItemObjective;
use super::quadrature::QuadratureGrid;
use super::{log_sigmoid, AbilityEstimates, FitConfig, FitResult, ItemParams, A_MAX, A_MIN, B_MAX};
use crate::data::ScoreMatrix;
use crate::error::IrtError;

/// Sufficient statistics of one E-step.
#[derive(Debug, Clone)]
pub struct EStep {
    /// Sum over students of the log marginal likelihood.
    pub log_marginal: f64,
    /// Expected student count per item and node, `[item][node]`.
    pub n: Vec<Vec<f64>>,
    /// Expected score mass per item and node, `[item][node]`.
    pub r: Vec<Vec<f64>>,
    /// Posterior-mean ability per student.
    pub eap: Vec<f64>,
}

/// Responses grouped by student: `(item index, normalized score)`.
pub(crate) struct Responses {
    rows: Vec<Vec<(usize, f64)>>,
    n_items: usize,
}

impl Responses {
    pub(crate) fn from_matrix(matrix: &ScoreMatrix) -> Result<Self, IrtError> {
        if matrix.n_students() < 2 || matrix.n_items() < 2 {
            return Err(IrtError::DegenerateMatrix(format!(
                "need at least 2 students and 2 items, got {} x {}",
                matrix.n_students(),
                matrix.n_items()
            )));
        }
        let mut rows = vec![Vec::new(); matrix.n_students()];
        let mut item_counts = vec![0usize; matrix.n_items()];
        for (i, j, cell) in matrix.iter_cells() {
            rows[i].push((j, cell.normalized));
            item_counts[j] += 1;
        }
        if let Some(i) = rows.iter().position(Vec::is_empty) {
            return Err(IrtError::DegenerateMatrix(format!(
                "student `{}` has no cells",
                matrix.students()[i]
            )));
        }
        if let Some(j) = item_counts.iter().position(|&c| c == 0) {
            return Err(IrtError::DegenerateMatrix(format!(
                "item `{}` has no cells",
                matrix.rubric().items()[j].id
            )));
        }
        Ok(Self { rows, n_items: matrix.n_items() })
    }

    fn item_means(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.n_items];
        let mut count = vec![0.0; self.n_items];
        for row in &self.rows {
            for &(j, s) in row {
                sum[j] += s;
                count[j] += 1.0;
            }
        }
        sum.iter().zip(&count).map(|(s, c)| s / c).collect()
    }
}

pub(crate) fn e_step(resp: &Responses, grid: &QuadratureGrid, a: &[f64], b: &[f64]) -> EStep {
    let nq = grid.len();
    // ln p and ln (1 - p) per item and node
    let mut lp = vec![vec![0.0; nq]; resp.n_items];
    let mut lq = vec![vec![0.0; nq]; resp.n_items];
    for j in 0..resp.n_items {
        for q in 0..nq {
            let z = a[j] * (grid.nodes[q] - b[j]);
            lp[j][q] = log_sigmoid(z);
            lq[j][q] = log_sigmoid(-z);
        }
    }
    let log_w: Vec<f64> = grid.weights.iter().map(|w| w.ln()).collect();

    let mut n = vec![vec![0.0; nq]; resp.n_items];
    let mut r = vec![vec![0.0; nq]; resp.n_items];
    let mut eap = Vec::with_capacity(resp.rows.len());
    let mut log_marginal = 0.0;
    let mut ll = vec![0.0; nq];
    let mut post = vec![0.0; nq];

    for row in &resp.rows {
        ll.copy_from_slice(&log_w);
        for &(j, s) in row {
            for q in 0..nq {
                ll[q] += s * lp[j][q] + (1.0 - s) * lq[j][q];
            }
        }
        let max = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for q in 0..nq {
            post[q] = (ll[q] - max).exp();
            total += post[q];
        }
        log_marginal += max + total.ln();
        let mut mean = 0.0;
        for (w, &x) in post.iter_mut().zip(&grid.nodes) {
            *w /= total;
            mean += *w * x;
        }
        eap.push(mean);
        for &(j, s) in row {
            for q in 0..nq {
                n[j][q] += post[q];
                r[j][q] += post[q] * s;
            }
        }
    }
    EStep { log_marginal, n, r, eap }
}

fn log_prior(config: &FitConfig, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&a, &b)| config.prior_a.log_density(a) + config.prior_b.log_density(b))
        .sum()
}

/// Penalized marginal-likelihood EM for the 2PL model.
///
/// Missing cells are left out of the likelihood; call
/// [`ScoreMatrix::fill_missing_as_zero`] first to score them as zero.
/// Fractional scores `s` contribute `s ln p + (1 - s) ln (1 - p)`.
/// Failing to converge within `max_iterations` is reported through
/// `converged = false` on the returned (best) estimate.
pub fn fit_2pl(matrix: &ScoreMatrix, config: &FitConfig) -> Result<FitResult, IrtError> {
    config.validate()?;
    let resp = Responses::from_matrix(matrix)?;
    let grid = config.grid();
    let n_items = matrix.n_items();

    let mut a = vec![1.0; n_items];
    let mut b: Vec<f64> = resp
        .item_means()
        .into_iter()
        .map(|m| {
            let m = m.clamp(1e-3, 1.0 - 1e-3);
            (-(m / (1.0 - m)).ln()).clamp(-B_MAX, B_MAX)
        })
        .collect();

    let mut e = e_step(&resp, &grid, &a, &b);
    let mut log_post = e.log_marginal + log_prior(config, &a, &b);
    let mut trace = vec![log_post];
    let mut converged = false;
    let mut iterations_used = 0;

    for it in 1..=config.max_iterations {
        for j in 0..n_items {
            let obj = ItemObjective {
                nodes: &grid.nodes,
                n: &e.n[j],
                r: &e.r[j],
                prior_a: config.prior_a,
                prior_b: config.prior_b,
            };
            let (na, nb) = obj.maximize(a[j], b[j]);
            a[j] = na;
            b[j] = nb;
        }
        e = e_step(&resp, &grid, &a, &b);
        let next = e.log_marginal + log_prior(config, &a, &b);
        trace.push(next);
        iterations_used = it;
        let rel = (next - log_post).abs() / log_post.abs().max(f64::MIN_POSITIVE);
        log_post = next;
        if rel <= config.convergence_tol {
            converged = true;
            break;
        }
    }

    debug_assert!(a.iter().all(|&x| (A_MIN..=A_MAX).contains(&x)));
    let items = matrix
        .rubric()
        .items()
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(item, (&a, &b))| ItemParams { item_id: item.id.clone(), a, b })
        .collect();
    Ok(FitResult {
        items,
        abilities: AbilityEstimates::new(matrix.students().to_vec(), e.eap),
        final_log_posterior: log_post,
        iterations_used,
        converged,
        log_posterior_trace: trace,
    })
}

/// E-step statistics for given item parameters, exposed for diagnostics.
pub fn expected_counts(
    matrix: &ScoreMatrix,
    config: &FitConfig,
    items: &[ItemParams],
) -> Result<EStep, IrtError> {
    let resp = Responses::from_matrix(matrix)?;
    if items.len() != matrix.n_items() {
        return Err(IrtError::CoverageGap("every rubric item".into()));
    }
    let a: Vec<f64> = items.iter().map(|p| p.a).collect();
    let b: Vec<f64> = items.iter().map(|p| p.b).collect();
    Ok(e_step(&resp, &config.grid(), &a, &b))
}
