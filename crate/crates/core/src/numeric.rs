//! Small numerical helpers shared across modules.

/// Inverse logit, evaluated without overflow for large |x|.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Percentile by linear interpolation between order statistics (the
/// "type 7" rule: 1-based position `h = (n - 1) p + 1`). `sorted` must be
/// ascending and non-empty; `p` in `[0, 1]`.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Sorts a copy and returns the requested percentiles.
pub fn percentiles(values: &[f64], ps: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    ps.iter().map(|&p| percentile_sorted(&sorted, p)).collect()
}

/// Result of [`solve_psd`].
#[derive(Debug, Clone)]
pub struct PsdSolution {
    pub x: Vec<f64>,
    /// Columns that were requested but found linearly dependent on earlier
    /// ones. Their entries of `x` are zero.
    pub dependent: Vec<usize>,
}

const PIVOT_REL_TOL: f64 = 1e-9;

/// Solves `A x = b` for a symmetric positive semi-definite `p x p` matrix
/// (row-major) restricted to the columns flagged in `active`.
///
/// A Cholesky sweep in column order drops any column whose remaining pivot is
/// below `1e-9` times its diagonal, so an exactly collinear column is reported
/// in `dependent` and the system is solved on the rest.
pub fn solve_psd(a: &[f64], p: usize, b: &[f64], active: &[bool]) -> PsdSolution {
    debug_assert_eq!(a.len(), p * p);
    debug_assert_eq!(b.len(), p);
    let mut l = vec![0.0; p * p];
    let mut kept: Vec<usize> = Vec::with_capacity(p);
    let mut dependent = Vec::new();

    for j in 0..p {
        if !active[j] {
            continue;
        }
        let ajj = a[j * p + j];
        let mut d = ajj;
        for &k in &kept {
            d -= l[j * p + k] * l[j * p + k];
        }
        if !(ajj > 0.0) || !(d > PIVOT_REL_TOL * ajj) {
            dependent.push(j);
            continue;
        }
        let ljj = d.sqrt();
        l[j * p + j] = ljj;
        for i in (j + 1)..p {
            if !active[i] {
                continue;
            }
            let mut s = a[i * p + j];
            for &k in &kept {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / ljj;
        }
        kept.push(j);
    }

    // forward: L y = b
    let mut y = vec![0.0; p];
    for (idx, &j) in kept.iter().enumerate() {
        let mut s = b[j];
        for &k in &kept[..idx] {
            s -= l[j * p + k] * y[k];
        }
        y[j] = s / l[j * p + j];
    }
    // backward: L^T x = y
    let mut x = vec![0.0; p];
    for (idx, &j) in kept.iter().enumerate().rev() {
        let mut s = y[j];
        for &k in &kept[idx + 1..] {
            s -= l[k * p + j] * x[k];
        }
        x[j] = s / l[j * p + j];
    }
    PsdSolution { x, dependent }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_basics() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((logistic(-3.0) - 0.047425873177566774).abs() < 1e-15);
        assert_eq!(logistic(-800.0), 0.0);
        assert_eq!(logistic(800.0), 1.0);
        assert!((logit(0.25) + 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn type7_percentiles() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        // h = 99 * 0.1 = 9.9 -> 10 + 0.9 * (11 - 10)
        let q = percentiles(&v, &[0.1, 0.9, 0.0, 1.0, 0.5]);
        assert!((q[0] - 10.9).abs() < 1e-12);
        assert!((q[1] - 90.1).abs() < 1e-12);
        assert_eq!(q[2], 1.0);
        assert_eq!(q[3], 100.0);
        assert_eq!(q[4], 50.5);
        assert_eq!(percentiles(&[4.0], &[0.3]), vec![4.0]);
    }

    #[test]
    fn solves_spd_system() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let b = [1.0, 2.0, 3.0];
        let sol = solve_psd(&a, 3, &b, &[true; 3]);
        assert!(sol.dependent.is_empty());
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * sol.x[j]).sum();
            assert!((r - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn flags_collinear_column() {
        // column 2 = column 0 + column 1 in the underlying design
        let x = [[1.0, 0.0, 1.0], [1.0, 1.0, 2.0], [1.0, 2.0, 3.0], [1.0, 5.0, 6.0]];
        let mut a = [0.0; 9];
        for row in &x {
            for i in 0..3 {
                for j in 0..3 {
                    a[i * 3 + j] += row[i] * row[j];
                }
            }
        }
        let sol = solve_psd(&a, 3, &[1.0, 1.0, 1.0], &[true; 3]);
        assert_eq!(sol.dependent, vec![2]);
        assert_eq!(sol.x[2], 0.0);
    }

    #[test]
    fn inactive_columns_ignored() {
        let a = [2.0, 0.0, 0.0, 0.0];
        let sol = solve_psd(&a, 2, &[4.0, 0.0], &[true, false]);
        assert!((sol.x[0] - 2.0).abs() < 1e-14);
        assert_eq!(sol.x[1], 0.0);
        assert!(sol.dependent.is_empty());
    }
}
