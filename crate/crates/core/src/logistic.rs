//! Weighted binary logistic regression by damped Newton-Raphson.
//!
//! Every M-step block and every naive fit is an instance of
//! `max_b Σ_i [a_i log σ(x_i·b) + c_i log σ(−x_i·b)]` with non-negative
//! category weights `a_i` (category 1) and `c_i` (category 2).

use nalgebra::{DMatrix, DVector};

use crate::model::{dot, log_prob, logistic_pair, Class, Design};

/// Newton iterates are kept inside `[-COEF_CAP, COEF_CAP]`; separated blocks stop there.
pub const COEF_CAP: f64 = 50.0;

const MAX_HALVINGS: usize = 50;

// Line searches squeezed against the cap approach it without reaching it exactly.
fn at_cap(v: f64) -> bool {
    v.abs() >= COEF_CAP - 1e-6
}

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Convergence threshold on the max-norm of the coefficient update.
    pub tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

/// One weighted binary regression problem over a subset of design rows.
#[derive(Clone, Debug)]
pub struct WeightedBinary<'a> {
    design: &'a Design,
    rows: Vec<usize>,
    w_one: Vec<f64>,
    w_two: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticFit {
    pub coef: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The iterate touched [`COEF_CAP`] (separation or near-separation).
    pub capped: bool,
    pub objective: f64,
}

impl LogisticFit {
    pub fn is_boundary(&self) -> bool {
        self.capped || !self.converged
    }
}

impl<'a> WeightedBinary<'a> {
    pub fn new(design: &'a Design) -> Self {
        WeightedBinary {
            design,
            rows: Vec::new(),
            w_one: Vec::new(),
            w_two: Vec::new(),
        }
    }

    /// Adds row `i` with weight `a` on category 1 and `c` on category 2.
    pub fn push(&mut self, i: usize, a: f64, c: f64) {
        debug_assert!(a >= 0.0 && c >= 0.0);
        if a > 0.0 || c > 0.0 {
            self.rows.push(i);
            self.w_one.push(a);
            self.w_two.push(c);
        }
    }

    /// Adds row `i` observed in `class` with weight `w`.
    pub fn push_observed(&mut self, i: usize, class: Class, w: f64) {
        match class {
            Class::One => self.push(i, w, 0.0),
            Class::Two => self.push(i, 0.0, w),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.design.ncols()
    }

    pub fn objective(&self, coef: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(self.w_one.iter().zip(&self.w_two))
            .map(|(&i, (&a, &c))| {
                let eta = dot(coef, self.design.row(i));
                let mut v = 0.0;
                if a > 0.0 {
                    v += a * log_prob(eta, Class::One);
                }
                if c > 0.0 {
                    v += c * log_prob(eta, Class::Two);
                }
                v
            })
            .sum()
    }

    pub fn gradient(&self, coef: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; coef.len()];
        for (k, &i) in self.rows.iter().enumerate() {
            let row = self.design.row(i);
            let p = logistic_pair(dot(coef, row))[0];
            let r = self.w_one[k] - (self.w_one[k] + self.w_two[k]) * p;
            for (gc, xc) in g.iter_mut().zip(row) {
                *gc += r * xc;
            }
        }
        g
    }

    /// Negative Hessian `Σ (a_i + c_i) p_i (1 − p_i) x_i x_iᵀ`.
    pub fn information(&self, coef: &[f64]) -> DMatrix<f64> {
        let p = coef.len();
        let mut h = DMatrix::zeros(p, p);
        for (k, &i) in self.rows.iter().enumerate() {
            let row = self.design.row(i);
            let [p1, p2] = logistic_pair(dot(coef, row));
            let v = (self.w_one[k] + self.w_two[k]) * p1 * p2;
            for r in 0..p {
                for c in 0..=r {
                    h[(r, c)] += v * row[r] * row[c];
                }
            }
        }
        for r in 0..p {
            for c in 0..r {
                h[(c, r)] = h[(r, c)];
            }
        }
        h
    }

    /// Maximizes the objective starting from `warm`. Never decreases it.
    pub fn solve(&self, warm: &[f64], opts: NewtonOptions) -> LogisticFit {
        let mut coef: Vec<f64> = warm.iter().map(|v| v.clamp(-COEF_CAP, COEF_CAP)).collect();
        let mut obj = self.objective(&coef);
        if self.rows.is_empty() {
            return LogisticFit {
                coef,
                iterations: 0,
                converged: true,
                capped: false,
                objective: obj,
            };
        }
        let mut capped = coef.iter().any(|&v| at_cap(v));
        let mut converged = false;
        let mut iterations = 0;
        while iterations < opts.max_iter {
            iterations += 1;
            let grad = DVector::from_vec(self.gradient(&coef));
            let Some(step) = newton_direction(self.information(&coef), &grad) else {
                break;
            };
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let cand: Vec<f64> = coef
                    .iter()
                    .zip(step.iter())
                    .map(|(b, d)| (b + t * d).clamp(-COEF_CAP, COEF_CAP))
                    .collect();
                let cand_obj = self.objective(&cand);
                if cand_obj >= obj {
                    accepted = Some((cand, cand_obj));
                    break;
                }
                t *= 0.5;
            }
            let Some((cand, cand_obj)) = accepted else {
                // no ascent along the Newton direction: numerically stationary
                converged = true;
                break;
            };
            let change = coef
                .iter()
                .zip(&cand)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if cand.iter().any(|&v| at_cap(v)) {
                capped = true;
            }
            coef = cand;
            obj = cand_obj;
            if change < opts.tol {
                converged = true;
                break;
            }
        }
        LogisticFit {
            coef,
            iterations,
            converged,
            capped,
            objective: obj,
        }
    }
}

/// Solves `info · d = grad`, adding a growing ridge when `info` is not positive definite.
fn newton_direction(info: DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = info.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..12 {
        let mut m = info.clone();
        for d in 0..m.nrows() {
            m[(d, d)] += ridge;
        }
        if let Some(ch) = m.cholesky() {
            let step = ch.solve(grad);
            if step.iter().all(|v| v.is_finite()) {
                return Some(step);
            }
        }
        ridge = if ridge == 0.0 { scale * 1e-10 } else { ridge * 100.0 };
    }
    None
}

/// Unweighted logistic MLE of `y` (category 1 vs 2) on `design` rows `rows`.
pub fn fit_unweighted<'a>(design: &'a Design, rows: &[usize], y: &[Class], opts: NewtonOptions) -> (LogisticFit, WeightedBinary<'a>) {
    let mut prob = WeightedBinary::new(design);
    for &i in rows {
        prob.push_observed(i, y[i], 1.0);
    }
    let fit = prob.solve(&vec![0.0; design.ncols()], opts);
    (fit, prob)
}
