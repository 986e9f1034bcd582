//! Least squares with sign constraints on a subset of coefficients
//! (Lawson–Hanson active set; unconstrained columns stay in the passive set).

use nalgebra::{DMatrix, DVector};

/// Minimizes `‖A z − b‖²` subject to `z_i >= 0` wherever `nonneg[i]`.
pub(crate) fn bounded_lsq(a: &DMatrix<f64>, b: &DVector<f64>, nonneg: &[bool]) -> DVector<f64> {
    let k = a.ncols();
    assert_eq!(nonneg.len(), k);
    let mut passive: Vec<bool> = nonneg.iter().map(|&c| !c).collect();
    let mut z = DVector::zeros(k);
    if passive.iter().any(|&p| p) {
        z = solve_passive(a, b, &passive);
    }
    let scale = (a.transpose() * b).amax().max(a.amax() * b.amax()).max(1e-300);
    let tol = 1e-13 * scale;
    for _ in 0..(3 * k + 30) {
        let grad = a.transpose() * (b - a * &z);
        let entering = (0..k)
            .filter(|&i| nonneg[i] && !passive[i] && grad[i] > tol)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = entering else { break };
        passive[j] = true;
        loop {
            let s = solve_passive(a, b, &passive);
            let blocked: Vec<usize> = (0..k)
                .filter(|&i| nonneg[i] && passive[i] && s[i] <= 0.0)
                .collect();
            if blocked.is_empty() {
                z = s;
                break;
            }
            let alpha = blocked
                .iter()
                .map(|&i| z[i] / (z[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            z += (s - &z) * alpha;
            for i in 0..k {
                if nonneg[i] && passive[i] && z[i] <= 1e-15 * scale.max(1.0) {
                    z[i] = 0.0;
                    passive[i] = false;
                }
            }
            if !passive.iter().zip(nonneg).any(|(&p, &c)| p && c) {
                z = if passive.iter().any(|&p| p) {
                    solve_passive(a, b, &passive)
                } else {
                    DVector::zeros(k)
                };
                break;
            }
        }
    }
    z
}

/// Unconstrained least squares on the passive columns; other entries zero.
fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let mut z = DVector::zeros(passive.len());
    if cols.is_empty() {
        return z;
    }
    let sub = a.select_columns(&cols);
    let svd = sub.clone().svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-13;
    let mut sol = svd.solve(b, cutoff).expect("u and v were computed");
    // one refinement pass against the residual's normal-equation component
    let correction = svd.solve(&(b - &sub * &sol), cutoff).expect("u and v were computed");
    sol += correction;
    for (pos, &c) in cols.iter().enumerate() {
        z[c] = sol[pos];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_matches_normal_equations() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        let z = bounded_lsq(&a, &b, &[false, false]);
        // intercept 2/3, slope 1/2
        assert!((z[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((z[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn negative_slope_clamped() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![0.9, 0.5, 0.1]);
        let z = bounded_lsq(&a, &b, &[false, true]);
        assert!((z[0] - 0.5).abs() < 1e-12);
        assert_eq!(z[1], 0.0);
    }

    #[test]
    fn all_constrained() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![-1.0, 2.0]);
        let z = bounded_lsq(&a, &b, &[true, true]);
        assert_eq!(z[0], 0.0);
        assert!((z[1] - 2.0).abs() < 1e-12);
    }
}
