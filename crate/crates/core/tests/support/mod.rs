//! Helpers shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use triage_core::data::{RubricSpec, ScoreMatrix};

/// Least squares by the normal equations in exact rational arithmetic.
/// Every f64 input is converted exactly, so the only rounding is the final
/// conversion of each statistic back to f64.
#[derive(Debug, Clone, Copy)]
pub struct ExactFit {
    pub slope: f64,
    pub offset: f64,
    pub r2: f64,
}

pub fn exact_regression(pairs: &[(f64, f64)]) -> Option<ExactFit> {
    let q = |v: f64| BigRational::from_float(v).expect("finite input");
    let n = BigRational::from_integer(BigInt::from(pairs.len()));
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) =
        (BigRational::zero(), BigRational::zero(), BigRational::zero(), BigRational::zero(), BigRational::zero());
    for &(x, y) in pairs {
        let (x, y) = (q(x), q(y));
        sxx += &x * &x;
        syy += &y * &y;
        sxy += &x * &y;
        sx += x;
        sy += y;
    }
    // n * centered sums
    let cxx = &n * &sxx - &sx * &sx;
    let cyy = &n * &syy - &sy * &sy;
    let cxy = &n * &sxy - &sx * &sy;
    if cxx.is_zero() {
        return None;
    }
    let slope = &cxy / &cxx;
    let offset = (&sy - &slope * &sx) / &n;
    let r2 = if cyy.is_zero() { BigRational::zero() } else { (&cxy * &cxy) / (&cxx * &cyy) };
    Some(ExactFit { slope: slope.to_f64()?, offset: offset.to_f64()?, r2: r2.to_f64()? })
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn rmse(x: &[f64], y: &[f64]) -> f64 {
    (x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Dense one-point-item matrix from rows of normalized scores.
pub fn matrix(rows: &[Vec<f64>]) -> ScoreMatrix {
    let n_items = rows[0].len();
    let rubric = RubricSpec::from_pairs((0..n_items).map(|j| (format!("i{j:02}"), 1.0))).unwrap();
    let mut m = ScoreMatrix::new((0..rows.len()).map(|i| format!("s{i:03}")).collect(), rubric).unwrap();
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m.insert(&format!("s{i:03}"), &format!("i{j:02}"), v).unwrap();
        }
    }
    m
}

/// Recovery of generating item parameters: `(rmse of b, pearson of a)`.
pub fn recovery(seed: u64) -> (f64, f64) {
    use triage_core::synth::ItemSource;
    use triage_core::{fit_2pl, generate, FitConfig, SynthConfig};
    let cfg = SynthConfig {
        n_students: 500,
        items: ItemSource::random(20),
        fn_rate: 0.0,
        fp_rate: 0.0,
        partial_rate: 0.0,
        seed,
    };
    let out = generate(&cfg).unwrap();
    let fit = fit_2pl(&out.truth, &FitConfig::default()).unwrap();
    let tb: Vec<f64> = out.provenance.items.iter().map(|i| i.b).collect();
    let ta: Vec<f64> = out.provenance.items.iter().map(|i| i.a).collect();
    let fb: Vec<f64> = fit.items.iter().map(|i| i.b).collect();
    let fa: Vec<f64> = fit.items.iter().map(|i| i.a).collect();
    (rmse(&tb, &fb), pearson(&ta, &fa))
}

/// Worst relative error between the analytic M-step gradient and a central
/// difference with step `h`, over `instances` random small problems (at most
/// 20 students x 5 items, fractional scores included).
pub fn worst_gradient_error(instances: u64, h: f64) -> f64 {
    use triage_core::irt::{expected_counts, ItemObjective};
    use triage_core::synth::CounterRng;
    use triage_core::{FitConfig, ItemParams};

    let config = FitConfig::default();
    let grid = config.grid();
    let mut worst = 0.0f64;
    for k in 0..instances {
        let rng = CounterRng::new(0x6772_6164 ^ k);
        let u = |a: u64, b: u64| rng.uniform(a, b, k, 0);
        let n_students = 3 + (u(0, 0) * 18.0) as usize;
        let n_items = 2 + (u(0, 1) * 4.0) as usize;
        let rows: Vec<Vec<f64>> = (0..n_students)
            .map(|i| (0..n_items).map(|j| (u(1 + i as u64, j as u64) * 5.0).floor() / 4.0).map(|v| v.min(1.0)).collect())
            .collect();
        let m = matrix(&rows);
        let items: Vec<ItemParams> = (0..n_items)
            .map(|j| ItemParams { item_id: format!("i{j:02}"), a: 0.3 + 2.7 * u(2, j as u64), b: -3.0 + 6.0 * u(3, j as u64) })
            .collect();
        let e = expected_counts(&m, &config, &items).unwrap();
        for j in 0..n_items {
            let obj = ItemObjective {
                nodes: &grid.nodes,
                n: &e.n[j],
                r: &e.r[j],
                prior_a: config.prior_a,
                prior_b: config.prior_b,
            };
            let (a, b) = (0.3 + 2.7 * u(4, j as u64), -3.0 + 6.0 * u(5, j as u64));
            let g = obj.gradient(a, b);
            let fd = [
                (obj.value(a + h, b) - obj.value(a - h, b)) / (2.0 * h),
                (obj.value(a, b + h) - obj.value(a, b - h)) / (2.0 * h),
            ];
            for c in 0..2 {
                worst = worst.max(rel_err(g[c], fd[c]));
            }
        }
    }
    worst
}

pub const NESTING_T: [f64; 6] = [0.0, 0.1, 0.25, 0.5, 0.75, 1.0];

pub fn r_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 * 0.05).collect()
}

/// Small noisy synthetic exam whose shape depends on the seed.
pub fn random_dataset(seed: u64) -> triage_core::synth::SynthOutput {
    use triage_core::synth::{CounterRng, ItemSource};
    use triage_core::{generate, SynthConfig};
    let rng = CounterRng::new(seed);
    let cfg = SynthConfig {
        n_students: 40 + (rng.uniform(9, 0, 0, 0) * 60.0) as usize,
        items: ItemSource::random(5 + (rng.uniform(9, 1, 0, 0) * 6.0) as usize),
        seed,
        ..SynthConfig::default()
    };
    generate(&cfg).unwrap()
}

/// Exhaustive cell-level check that accepted sets shrink as r decreases
/// (t fixed) and as t increases (r fixed). Returns the number of subset
/// relations checked.
pub fn check_nesting(seed: u64) -> Result<usize, String> {
    use std::collections::BTreeSet;
    use triage_core::{apply_filter, fit_2pl, FilterConfig, FitConfig};
    let out = random_dataset(seed);
    let fit = fit_2pl(&out.ai, &FitConfig::default()).map_err(|e| e.to_string())?;
    let rs = r_grid();
    let accepted: Vec<Vec<BTreeSet<(String, String)>>> = NESTING_T
        .iter()
        .map(|&t| {
            rs.iter()
                .map(|&r| {
                    apply_filter(&out.ai, &fit, &FilterConfig::new(t, r).unwrap())
                        .unwrap()
                        .records
                        .into_iter()
                        .filter(|d| d.outcome.is_accept())
                        .map(|d| (d.student_id, d.item_id))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut checked = 0;
    for (ti, row) in accepted.iter().enumerate() {
        for ri in 0..rs.len() {
            if ri + 1 < rs.len() {
                if !row[ri].is_subset(&row[ri + 1]) {
                    return Err(format!("seed {seed}: t={} r={} not inside r={}", NESTING_T[ti], rs[ri], rs[ri + 1]));
                }
                checked += 1;
            }
            if ti + 1 < NESTING_T.len() {
                if !accepted[ti + 1][ri].is_subset(&row[ri]) {
                    return Err(format!("seed {seed}: r={} t={} not inside t={}", rs[ri], NESTING_T[ti + 1], NESTING_T[ti]));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

/// Row (t=0, r=1) equals the unfiltered regression bit for bit, and the
/// acceptance rate never falls as r grows.
pub fn check_sweep_consistency(out: &triage_core::synth::SynthOutput) -> Result<(), String> {
    use triage_core::metrics::{find_row, unfiltered_agreement};
    use triage_core::{fit_2pl, sweep, FitConfig};
    let fit = fit_2pl(&out.ai, &FitConfig::default()).map_err(|e| e.to_string())?;
    let ts = [0.0, 0.1, 0.25, 0.5];
    let rs = r_grid();
    let rows = sweep(&out.ai, &out.truth, &fit, &ts, &rs).map_err(|e| e.to_string())?;
    let full = find_row(&rows, 0.0, 1.0).ok_or("no (0, 1) row")?;
    let un = unfiltered_agreement(&out.ai, &out.truth).map_err(|e| e.to_string())?;
    let st = full.stats.ok_or("(0, 1) row infeasible")?;
    let bits = |s: &triage_core::RegressionStats| {
        (s.slope.to_bits(), s.offset.to_bits(), s.r2.to_bits(), s.offset_fraction.to_bits(), s.n)
    };
    if bits(&st) != bits(&un) {
        return Err(format!("(0, 1) row {st:?} differs from unfiltered {un:?}"));
    }
    if full.acceptance_rate != 1.0 {
        return Err(format!("(0, 1) acceptance {}", full.acceptance_rate));
    }
    for (k, chunk) in rows.chunks(rs.len()).enumerate() {
        for w in chunk.windows(2) {
            if w[1].acceptance_rate < w[0].acceptance_rate {
                return Err(format!("t={}: acceptance falls from r={} to r={}", ts[k], w[0].r, w[1].r));
            }
        }
    }
    Ok(())
}
