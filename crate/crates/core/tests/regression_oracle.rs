mod support;

use proptest::prelude::*;
use support::{exact_regression, rel_err};
use triage_core::{regress_totals, MetricsError};

fn instance() -> impl Strategy<Value = (Vec<(f64, f64)>, f64)> {
    (3usize..400, 0.2f64..3.0, -20.0f64..20.0, 0.0f64..15.0, 1.0f64..200.0).prop_flat_map(
        |(n, slope, offset, noise, max)| {
            prop::collection::vec((0.0..max, -1.0f64..1.0), n).prop_map(move |raw| {
                let pairs = raw.iter().map(|&(x, e)| (x, offset + slope * x + noise * e)).collect();
                (pairs, max)
            })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_exact_normal_equations((pairs, max) in instance()) {
        let got = regress_totals(&pairs, max).unwrap();
        let want = exact_regression(&pairs).unwrap();
        prop_assert!(rel_err(got.slope, want.slope) < 1e-10, "slope {} vs {}", got.slope, want.slope);
        prop_assert!(rel_err(got.offset, want.offset) < 1e-10, "offset {} vs {}", got.offset, want.offset);
        prop_assert!(rel_err(got.r2, want.r2) < 1e-10, "r2 {} vs {}", got.r2, want.r2);
        prop_assert!(rel_err(got.offset_fraction, want.offset / max) < 1e-10);
        prop_assert_eq!(got.n, pairs.len());
    }
}

#[test]
fn integer_totals_are_exact_on_a_line() {
    let pairs: Vec<(f64, f64)> = (0..19).map(|x| (x as f64, 2.0 * x as f64 + 1.0)).collect();
    let got = regress_totals(&pairs, 19.0).unwrap();
    let want = exact_regression(&pairs).unwrap();
    assert_eq!((got.slope, got.offset, got.r2), (want.slope, want.offset, want.r2));
    assert_eq!((got.slope, got.offset, got.r2), (2.0, 1.0, 1.0));
}

#[test]
fn constant_y_has_zero_r2() {
    let pairs = [(0.0, 4.0), (1.0, 4.0), (5.0, 4.0)];
    let got = regress_totals(&pairs, 10.0).unwrap();
    assert_eq!(got.r2, 0.0);
    assert_eq!(got.slope, 0.0);
    assert_eq!(exact_regression(&pairs).unwrap().r2, 0.0);
}

#[test]
fn infeasible_inputs() {
    assert_eq!(regress_totals(&[(0.0, 1.0), (1.0, 2.0)], 1.0), Err(MetricsError::TooFewPoints(2)));
    assert_eq!(regress_totals(&[(2.0, 1.0), (2.0, 2.0), (2.0, 0.0)], 1.0), Err(MetricsError::DegenerateX));
    assert!(exact_regression(&[(2.0, 1.0), (2.0, 2.0), (2.0, 0.0)]).is_none());
}
