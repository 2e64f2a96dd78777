//! Gauss quadrature for the half-line weight `u^{-1/2} e^{-u}`.
//!
//! Nodes and weights come from the Golub-Welsch construction: eigenvalues of
//! the symmetric tridiagonal Jacobi matrix of the generalized Laguerre
//! polynomials with parameter `-1/2`, weights from the squared first
//! components of its eigenvectors scaled by `Gamma(1/2) = sqrt(pi)`.
//!
//! Accuracy note for the subordination integrand `exp(-c/u)`: the rule is
//! exact at `c = 0` and reaches abs error below `5e-7` at 64 nodes once
//! `c >= 3`, but the essential singularity at `u = 0` keeps the error around
//! `1e-2 .. 1e-4` for `c` in `(1e-4, 0.25)`.  Callers must keep `c = t^2
//! Lambda / 4` out of that region (or at exactly 0) when they need tight
//! agreement at the default node count.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::spectral::sym_eig_matrix;

const ALPHA: f64 = -0.5;

/// Nodes and weights of the `n`-point rule for `integral_0^inf u^{-1/2} e^{-u} f(u) du`.
pub fn half_weight_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut jac = DMatrix::zeros(n, n);
    for k in 0..n {
        jac[(k, k)] = Complex64::new(2.0 * k as f64 + ALPHA + 1.0, 0.0);
        if k + 1 < n {
            let off = ((k as f64 + 1.0) * (k as f64 + 1.0 + ALPHA)).sqrt();
            jac[(k, k + 1)] = Complex64::new(off, 0.0);
            jac[(k + 1, k)] = Complex64::new(off, 0.0);
        }
    }
    let (vals, vecs) = sym_eig_matrix(&jac);
    let total = std::f64::consts::PI.sqrt(); // Gamma(1/2)
    let weights: Vec<f64> = (0..n).map(|i| total * vecs[(0, i)].norm_sqr()).collect();
    (vals, weights)
}
