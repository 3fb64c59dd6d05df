//! Per-item maximization step.
//!
//! Given posterior-weighted counts at each quadrature node, an item's
//! expected complete-data log-posterior is
//!
//! ```text
//! Q(a, b) = sum_q [ r_q ln p_q + (n_q - r_q) ln (1 - p_q) ] + ln pi_a(a) + ln pi_b(b)
//! p_q     = sigmoid(a (theta_q - b))
//! ```
//!
//! where `n_q` is the expected number of students at node `q` who have a cell
//! for the item and `r_q` their expected (fractional) score mass.

use super::{log_sigmoid, sigmoid, LogNormalPrior, NormalPrior, A_MAX, A_MIN, B_MAX};

#[derive(Debug, Clone)]
pub struct ItemObjective<'a> {
    pub nodes: &'a [f64],
    pub n: &'a [f64],
    pub r: &'a [f64],
    pub prior_a: LogNormalPrior,
    pub prior_b: NormalPrior,
}

impl ItemObjective<'_> {
    pub fn value(&self, a: f64, b: f64) -> f64 {
        let mut ll = 0.0;
        for q in 0..self.nodes.len() {
            let z = a * (self.nodes[q] - b);
            ll += self.r[q] * log_sigmoid(z) + (self.n[q] - self.r[q]) * log_sigmoid(-z);
        }
        ll + self.prior_a.log_density(a) + self.prior_b.log_density(b)
    }

    /// `(dQ/da, dQ/db)`.
    pub fn gradient(&self, a: f64, b: f64) -> [f64; 2] {
        let mut ga = 0.0;
        let mut gb = 0.0;
        for q in 0..self.nodes.len() {
            let d = self.nodes[q] - b;
            let resid = self.r[q] - self.n[q] * sigmoid(a * d);
            ga += resid * d;
            gb -= resid * a;
        }
        [ga + self.prior_a.d1(a), gb + self.prior_b.d1(b)]
    }

    /// `[[Qaa, Qab], [Qab, Qbb]]`.
    pub fn hessian(&self, a: f64, b: f64) -> [[f64; 2]; 2] {
        let mut haa = 0.0;
        let mut hab = 0.0;
        let mut hbb = 0.0;
        for q in 0..self.nodes.len() {
            let d = self.nodes[q] - b;
            let p = sigmoid(a * d);
            let info = self.n[q] * p * (1.0 - p);
            let resid = self.r[q] - self.n[q] * p;
            haa -= info * d * d;
            hbb -= info * a * a;
            hab += info * a * d - resid;
        }
        [[haa + self.prior_a.d2(a), hab], [hab, hbb + self.prior_b.d2()]]
    }

    /// Monotone ascent from `(a, b)` inside the parameter box. Never returns
    /// a point with a lower objective than the start.
    pub fn maximize(&self, a: f64, b: f64) -> (f64, f64) {
        let (mut a, mut b) = clamp_box(a, b);
        let mut f = self.value(a, b);
        for _ in 0..MAX_NEWTON {
            let (na, nb, nf) = match self.newton_step(a, b, f) {
                Some(next) => next,
                None => self.coordinate_step(a, b, f),
            };
            let moved = (na - a).abs().max((nb - b).abs());
            if nf < f {
                break;
            }
            a = na;
            b = nb;
            f = nf;
            if moved < STEP_TOL {
                break;
            }
        }
        (a, b)
    }

    fn newton_step(&self, a: f64, b: f64, f: f64) -> Option<(f64, f64, f64)> {
        let g = self.gradient(a, b);
        let h = self.hessian(a, b);
        let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
        if !(h[0][0] < 0.0 && det > 0.0) || !det.is_finite() {
            return None;
        }
        // step = -H^{-1} g
        let da = -(h[1][1] * g[0] - h[0][1] * g[1]) / det;
        let db = -(-h[0][1] * g[0] + h[0][0] * g[1]) / det;
        let mut lambda = 1.0;
        for _ in 0..MAX_HALVINGS {
            let (ca, cb) = clamp_box(a + lambda * da, b + lambda * db);
            let cf = self.value(ca, cb);
            if cf >= f {
                return Some((ca, cb, cf));
            }
            lambda *= 0.5;
        }
        Some((a, b, f))
    }

    /// Used when the Hessian is not negative definite: bisection on the
    /// difficulty score (Q is concave in b for fixed a), then a safeguarded
    /// step in a.
    fn coordinate_step(&self, a: f64, b: f64, f: f64) -> (f64, f64, f64) {
        let (mut a, mut b, mut f) = (a, b, f);

        let cb = self.bisect_b(a);
        let cf = self.value(a, cb);
        if cf >= f {
            b = cb;
            f = cf;
        }

        let ga = self.gradient(a, b)[0];
        let haa = self.hessian(a, b)[0][0];
        let mut da = if haa < 0.0 { -ga / haa } else { ga.signum() * 0.5 * a };
        for _ in 0..MAX_HALVINGS {
            let (ca, _) = clamp_box(a + da, b);
            let cf = self.value(ca, b);
            if cf >= f {
                a = ca;
                f = cf;
                break;
            }
            da *= 0.5;
        }
        (a, b, f)
    }

    fn bisect_b(&self, a: f64) -> f64 {
        let gb = |b: f64| self.gradient(a, b)[1];
        let (mut lo, mut hi) = (-B_MAX, B_MAX);
        if gb(lo) <= 0.0 {
            return lo;
        }
        if gb(hi) >= 0.0 {
            return hi;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if gb(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

const MAX_NEWTON: usize = 30;
const MAX_HALVINGS: usize = 40;
const STEP_TOL: f64 = 1e-10;

fn clamp_box(a: f64, b: f64) -> (f64, f64) {
    (a.clamp(A_MIN, A_MAX), b.clamp(-B_MAX, B_MAX))
}
