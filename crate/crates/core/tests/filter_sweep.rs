mod support;

use proptest::prelude::*;
use triage_core::metrics::{find_row, strictest_feasible, sweep_to_csv};
use triage_core::{apply_filter, fit_2pl, generate, sweep, FilterConfig, FitConfig, SynthConfig};

#[test]
fn accepted_sets_are_nested() {
    for seed in 100..110 {
        let checked = support::check_nesting(seed).unwrap();
        assert!(checked > 0);
    }
}

#[test]
fn sweep_is_consistent_with_the_unfiltered_regression() {
    for seed in [42, 7, 8] {
        let out = generate(&SynthConfig { seed, ..SynthConfig::default() }).unwrap();
        support::check_sweep_consistency(&out).unwrap();
    }
}

#[test]
fn sweep_agrees_with_single_filter_runs() {
    let out = support::random_dataset(5);
    let fit = fit_2pl(&out.ai, &FitConfig::default()).unwrap();
    let rows = sweep(&out.ai, &out.truth, &fit, &[0.0, 0.5], &[0.1, 0.4]).unwrap();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let report = apply_filter(&out.ai, &fit, &FilterConfig::new(row.t, row.r).unwrap()).unwrap();
        assert_eq!(report.accepted, row.accepted);
        assert_eq!(report.acceptance_rate(), row.acceptance_rate);
    }
}

#[test]
fn grid_shape_and_csv() {
    let out = support::random_dataset(6);
    let fit = fit_2pl(&out.ai, &FitConfig::default()).unwrap();
    let rows = sweep(&out.ai, &out.truth, &fit, &[0.0, 0.1, 0.5], &support::r_grid()).unwrap();
    assert_eq!(rows.len(), 63);
    assert_eq!(sweep_to_csv(&rows).lines().count(), 64);
    // r = 0 accepts nothing unless some s equals p exactly
    let zero = find_row(&rows, 0.0, 0.0).unwrap();
    assert_eq!(zero.accepted, 0);
    assert!(!zero.feasible());
}

#[test]
fn stricter_pair_accepts_less_on_the_reference_data() {
    let out = generate(&SynthConfig::default()).unwrap();
    let fit = fit_2pl(&out.ai, &FitConfig::default()).unwrap();
    let loose = apply_filter(&out.ai, &fit, &FilterConfig::new(0.0, 0.3).unwrap()).unwrap();
    let strict = apply_filter(&out.ai, &fit, &FilterConfig::new(0.1, 0.2).unwrap()).unwrap();
    assert!(strict.acceptance_rate() < loose.acceptance_rate());
    let all = apply_filter(&out.ai, &fit, &FilterConfig::new(0.0, 1.0).unwrap()).unwrap();
    assert_eq!(all.acceptance_rate(), 1.0);
}

#[test]
fn strictest_feasible_prefers_low_acceptance() {
    let out = generate(&SynthConfig::default()).unwrap();
    let fit = fit_2pl(&out.ai, &FitConfig::default()).unwrap();
    let rows = sweep(&out.ai, &out.truth, &fit, &[0.0, 0.1, 0.25, 0.5], &support::r_grid()).unwrap();
    let s = strictest_feasible(&rows).unwrap();
    assert!(rows.iter().filter(|r| r.feasible()).all(|r| r.acceptance_rate >= s.acceptance_rate));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sweep_rows_are_bounded(seed in 0u64..1000) {
        let out = support::random_dataset(seed);
        let fit = fit_2pl(&out.ai, &FitConfig::default()).unwrap();
        let rows = sweep(&out.ai, &out.truth, &fit, &[0.0, 0.25, 1.0], &[0.0, 0.3, 1.0]).unwrap();
        for row in &rows {
            prop_assert!((0.0..=1.0).contains(&row.acceptance_rate));
            prop_assert_eq!(row.total, out.ai.n_cells());
            if let Some(st) = row.stats {
                prop_assert!((0.0..=1.0).contains(&st.r2));
                prop_assert!(st.n >= 3 && st.n == row.n_students);
            }
        }
    }
}
