//! Weighted logistic regression by Newton-Raphson (equivalently IRLS) with
//! step-halving.
//!
//! No penalty is applied. Quasi-separation is reported through
//! [`LogisticFit::separation_flag`], never repaired.

use crate::error::{Error, Result};
use crate::numeric::{logistic, solve_psd};

/// Convergence threshold on the weight-normalised score `max_j |g_j| / Σw`.
pub const SCORE_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 50;
/// Coefficients beyond this magnitude signal (quasi-)separation.
pub const SEPARATION_BOUND: f64 = 15.0;

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Design {
    pub fn new(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(cols: usize, rows: usize) -> Self {
        Self {
            rows: 0,
            cols,
            data: Vec::with_capacity(rows * cols),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut d = Self::with_capacity(cols, rows.len());
        for r in rows {
            d.push_row(r);
        }
        d
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row width mismatch");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `max_j |Σ_i w_i (y_i - p_i) x_ij| / Σ_i w_i` at the returned estimate.
    pub max_abs_score: f64,
    pub separation_flag: bool,
}

impl LogisticFit {
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }

    /// Fitted `Pr(y = 1)` for one design row.
    pub fn predict(&self, row: &[f64]) -> f64 {
        logistic(self.linear_predictor(row))
    }
}

fn log_likelihood(x: &Design, y: &[f64], w: &[f64], beta: &[f64]) -> f64 {
    (0..x.rows())
        .map(|i| {
            let eta: f64 = x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
            // y*eta - log(1 + e^eta), stable for large |eta|
            let log1pexp = if eta > 0.0 {
                eta + (-eta).exp().ln_1p()
            } else {
                eta.exp().ln_1p()
            };
            w[i] * (y[i] * eta - log1pexp)
        })
        .sum()
}

/// Accumulates the score vector and (optionally) the information matrix.
fn score_and_information(
    x: &Design,
    y: &[f64],
    w: &[f64],
    beta: &[f64],
    info: Option<&mut [f64]>,
) -> Vec<f64> {
    let p = x.cols();
    let mut score = vec![0.0; p];
    let mut info = info;
    for i in 0..x.rows() {
        let row = x.row(i);
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let mu = logistic(eta);
        let r = w[i] * (y[i] - mu);
        for j in 0..p {
            score[j] += r * row[j];
        }
        if let Some(h) = info.as_deref_mut() {
            let v = w[i] * mu * (1.0 - mu);
            if v > 0.0 {
                for a in 0..p {
                    let va = v * row[a];
                    for b in 0..=a {
                        h[a * p + b] += va * row[b];
                    }
                }
            }
        }
    }
    if let Some(h) = info {
        for a in 0..p {
            for b in 0..a {
                h[b * p + a] = h[a * p + b];
            }
        }
    }
    score
}

/// Maximises `Σ w_i [y_i η_i - log(1 + e^{η_i})]` over the coefficients.
///
/// Fails on empty input, on invalid weights or responses, and when the
/// weighted design `Xᵀ W X` is rank deficient (the error lists the columns
/// found dependent on earlier ones).
pub fn fit_weighted_logistic(x: &Design, y: &[u8], w: &[f64]) -> Result<LogisticFit> {
    let n = x.rows();
    let p = x.cols();
    if n == 0 || p == 0 {
        return Err(Error::EmptyData("logistic regression needs at least one row and column".into()));
    }
    if y.len() != n || w.len() != n {
        return Err(Error::Shape(format!(
            "design has {n} rows but y has {} and w has {}",
            y.len(),
            w.len()
        )));
    }
    if n < p {
        return Err(Error::Shape(format!("{n} rows cannot identify {p} coefficients")));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidParameter("responses must be 0 or 1".into()));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidParameter("case weights must be finite and non-negative".into()));
    }
    if x.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("design matrix has non-finite entries".into()));
    }
    let total_weight: f64 = w.iter().sum();
    if !(total_weight > 0.0) {
        return Err(Error::EmptyData("all case weights are zero".into()));
    }

    // structural rank check on X^T W X
    let mut xtwx = vec![0.0; p * p];
    for i in 0..n {
        let row = x.row(i);
        for a in 0..p {
            for b in 0..p {
                xtwx[a * p + b] += w[i] * row[a] * row[b];
            }
        }
    }
    let rank = solve_psd(&xtwx, p, &vec![0.0; p], &vec![true; p]);
    if !rank.dependent.is_empty() {
        return Err(Error::SingularDesign {
            columns: rank.dependent,
        });
    }

    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let all_active = vec![true; p];
    let mut beta = vec![0.0; p];
    let mut loglik = log_likelihood(x, &yf, w, &beta);
    let mut converged = false;
    let mut iterations = 0;
    let mut max_abs_score;

    loop {
        let mut info = vec![0.0; p * p];
        let score = score_and_information(x, &yf, w, &beta, Some(&mut info));
        max_abs_score = score.iter().fold(0.0f64, |m, g| m.max(g.abs())) / total_weight;
        if max_abs_score <= SCORE_TOLERANCE {
            converged = true;
            break;
        }
        if iterations >= MAX_ITERATIONS {
            break;
        }
        let step = solve_psd(&info, p, &score, &all_active);
        if !step.dependent.is_empty() {
            // information has collapsed numerically (fitted probabilities at
            // 0 or 1); the current estimate is as far as Newton can go
            break;
        }
        iterations += 1;

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate: Vec<f64> = beta.iter().zip(&step.x).map(|(b, d)| b + scale * d).collect();
            let cand_ll = log_likelihood(x, &yf, w, &candidate);
            if cand_ll.is_finite() && cand_ll >= loglik - 1e-12 * loglik.abs().max(1.0) {
                beta = candidate;
                loglik = cand_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let separation_flag = beta.iter().any(|b| b.abs() > SEPARATION_BOUND);
    Ok(LogisticFit {
        coefficients: beta,
        converged,
        iterations,
        max_abs_score,
        separation_flag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::logit;
    use crate::stochastic::{derive_stream, StreamKey};
    use proptest::prelude::*;

    fn intercept_design(n: usize) -> Design {
        Design::from_rows(&vec![vec![1.0]; n])
    }

    #[test]
    fn balanced_intercept_is_zero() {
        let y = [0, 1, 0, 1, 1, 0];
        let fit = fit_weighted_logistic(&intercept_design(6), &y, &[1.0; 6]).unwrap();
        assert!(fit.converged);
        assert!(fit.coefficients[0].abs() < 1e-12);
    }

    #[test]
    fn intercept_only_mle_is_logit_of_mean() {
        let y = [1, 0, 0, 0, 1, 0, 0, 0];
        let fit = fit_weighted_logistic(&intercept_design(8), &y, &[1.0; 8]).unwrap();
        assert!((fit.coefficients[0] - logit(0.25)).abs() < 1e-10);
        assert!((fit.coefficients[0] + 1.0986122886681098).abs() < 1e-10);
    }

    fn grid_search(x: &Design, y: &[u8], w: &[f64]) -> (f64, f64) {
        let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let (mut c0, mut c1, mut step) = (0.0, 0.0, 0.05);
        let mut half_width: f64 = 6.0;
        while step > 1e-7 {
            let mut best = (f64::NEG_INFINITY, c0, c1);
            let m = (half_width / step).round() as i64;
            for i in -m..=m {
                for j in -m..=m {
                    let b = [c0 + i as f64 * step, c1 + j as f64 * step];
                    let ll = log_likelihood(x, &yf, w, &b);
                    if ll > best.0 {
                        best = (ll, b[0], b[1]);
                    }
                }
            }
            c0 = best.1;
            c1 = best.2;
            half_width = 4.0 * step;
            step /= 10.0;
        }
        (c0, c1)
    }

    #[test]
    fn matches_grid_search_oracle() {
        let xs = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let y = [0, 0, 1, 0, 1, 1, 0, 1];
        let x = Design::from_rows(&xs.iter().map(|&v| vec![1.0, v]).collect::<Vec<_>>());
        let w = [1.0, 2.0, 1.0, 0.5, 1.0, 1.5, 1.0, 1.0];
        let fit = fit_weighted_logistic(&x, &y, &w).unwrap();
        let (g0, g1) = grid_search(&x, &y, &w);
        assert!((fit.coefficients[0] - g0).abs() < 1e-4, "{} vs {g0}", fit.coefficients[0]);
        assert!((fit.coefficients[1] - g1).abs() < 1e-4, "{} vs {g1}", fit.coefficients[1]);
    }

    #[test]
    fn reports_collinear_columns() {
        let x = Design::from_rows(&[
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 2.0],
            vec![1.0, 2.0, 3.0],
            vec![1.0, 3.0, 4.0],
        ]);
        match fit_weighted_logistic(&x, &[0, 1, 0, 1], &[1.0; 4]) {
            Err(Error::SingularDesign { columns }) => assert_eq!(columns, vec![2]),
            other => panic!("expected singular design, got {other:?}"),
        }
    }

    #[test]
    fn input_errors() {
        assert!(matches!(
            fit_weighted_logistic(&Design::new(1), &[], &[]),
            Err(Error::EmptyData(_))
        ));
        assert!(matches!(
            fit_weighted_logistic(&intercept_design(2), &[0, 1], &[0.0, 0.0]),
            Err(Error::EmptyData(_))
        ));
        assert!(fit_weighted_logistic(&intercept_design(2), &[0, 1], &[-1.0, 1.0]).is_err());
        assert!(fit_weighted_logistic(&intercept_design(2), &[0, 2], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn separation_is_flagged_not_repaired() {
        let x = Design::from_rows(&(0..10).map(|i| vec![1.0, i as f64]).collect::<Vec<_>>());
        let y = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let fit = fit_weighted_logistic(&x, &y, &[1.0; 10]).unwrap();
        assert!(fit.separation_flag);
        assert!(fit.coefficients.iter().all(|c| c.is_finite()));
    }

    fn random_problem(seed: u64, n: usize) -> (Design, Vec<u8>, Vec<f64>) {
        let mut s = derive_stream(&StreamKey::new(seed));
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut w = Vec::new();
        for _ in 0..n {
            let x1 = s.standard_normal();
            let x2 = f64::from(u8::from(s.uniform() < 0.4));
            let p = logistic(-0.5 + 0.8 * x1 - 0.6 * x2);
            y.push(u8::from(s.uniform() < p));
            w.push(0.2 + 2.0 * s.uniform());
            rows.push(vec![1.0, x1, x2]);
        }
        (Design::from_rows(&rows), y, w)
    }

    #[test]
    fn converged_fit_solves_score_equations() {
        let (x, y, w) = random_problem(5, 400);
        let fit = fit_weighted_logistic(&x, &y, &w).unwrap();
        assert!(fit.converged);
        assert!(fit.max_abs_score <= SCORE_TOLERANCE);
        for j in 0..x.cols() {
            let g: f64 = (0..x.rows())
                .map(|i| w[i] * (f64::from(y[i]) - fit.predict(x.row(i))) * x.row(i)[j])
                .sum();
            assert!(g.abs() <= 1e-6, "column {j}: {g}");
        }
    }

    #[test]
    fn duplicating_a_row_equals_doubling_its_weight() {
        let (x, y, w) = random_problem(6, 60);
        let fit_w = {
            let mut w2 = w.clone();
            w2[0] *= 2.0;
            fit_weighted_logistic(&x, &y, &w2).unwrap()
        };
        let mut rows: Vec<Vec<f64>> = (0..x.rows()).map(|i| x.row(i).to_vec()).collect();
        rows.push(rows[0].clone());
        let mut y2 = y.clone();
        y2.push(y[0]);
        let mut w2 = w.clone();
        w2.push(w[0]);
        let fit_d = fit_weighted_logistic(&Design::from_rows(&rows), &y2, &w2).unwrap();
        for (a, b) in fit_w.coefficients.iter().zip(&fit_d.coefficients) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn weight_scaling_invariance(seed in 0u64..1000, c in 0.01f64..100.0) {
            let (x, y, w) = random_problem(seed, 80);
            let a = fit_weighted_logistic(&x, &y, &w).unwrap();
            let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
            let b = fit_weighted_logistic(&x, &y, &scaled).unwrap();
            for (u, v) in a.coefficients.iter().zip(&b.coefficients) {
                prop_assert!((u - v).abs() < 1e-10, "{} vs {}", u, v);
            }
        }
    }
}
