//! Gauss rules from the Golub–Welsch eigenvalue construction.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights for a standard normal variable; weights sum to one.
pub fn gauss_hermite_normal(n: usize) -> Vec<(f64, f64)> {
    // Hermite recurrence for weight e^{-x²/2}: off-diagonal √k.
    golub_welsch(n, |_| 0.0, |k| (k as f64).sqrt())
}

/// Nodes and weights for a unit-mean exponential variable.
pub fn gauss_laguerre(n: usize) -> Vec<(f64, f64)> {
    golub_welsch(n, |k| (2 * k + 1) as f64, |k| k as f64)
}

fn golub_welsch(n: usize, diag: impl Fn(usize) -> f64, off: impl Fn(usize) -> f64) -> Vec<(f64, f64)> {
    assert!(n >= 1, "at least one quadrature node");
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        j[(k, k)] = diag(k);
        if k + 1 < n {
            let b = off(k + 1);
            j[(k, k + 1)] = b;
            j[(k + 1, k)] = b;
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = rule.iter().map(|r| r.1).sum();
    rule.iter_mut().for_each(|r| r.1 /= total);
    rule
}
