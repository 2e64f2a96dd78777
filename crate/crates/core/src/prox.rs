//! Proximal maps of the weighted Schatten norms on hermitian elements.
//!
//! `prox_schatten(x, p, c)` returns the minimizer of
//!
//! ```text
//!   (1/2) ||z - x||_2^2 + c ||z||_p
//! ```
//!
//! over hermitian `z`, where both norms use the trace weights.  The map
//! diagonalizes in the eigenbasis of `x`, so everything reduces to a vector
//! problem on the weighted eigenvalues: exact shrinkage formulas for
//! `p in {1, 2, inf}`, and for other exponents a scalar root per eigenvalue
//! coupled through the norm value, solved by safeguarded Newton inside an
//! outer bisection.

use crate::element::Element;
use crate::error::{Error, Result};
use crate::spectral::herm_eig;

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(format!(
            "exponent p = {p} is outside [1, inf]"
        )));
    }
    Ok(())
}

/// Weighted p-norm of eigenvalue/weight pairs.
fn weighted_p_norm(pairs: &[(f64, f64)], p: f64) -> f64 {
    if p == f64::INFINITY {
        pairs.iter().map(|(v, _)| v.abs()).fold(0.0f64, f64::max)
    } else {
        pairs
            .iter()
            .map(|(v, w)| w * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Clip level `nu` with `sum_i w_i * max(|v_i| - nu, 0) = budget`, assuming
/// the weighted absolute sum exceeds the budget.  Piecewise linear in `nu`;
/// solved exactly by a sweep over the sorted magnitudes.
fn weighted_clip_level(pairs: &[(f64, f64)], budget: f64) -> f64 {
    let mut mags: Vec<(f64, f64)> = pairs.iter().map(|&(v, w)| (v.abs(), w)).collect();
    mags.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut cum_w = 0.0f64;
    let mut cum_s = 0.0f64;
    for (k, &(t, w)) in mags.iter().enumerate() {
        cum_w += w;
        cum_s += w * t;
        let next_t = mags.get(k + 1).map(|m| m.0).unwrap_or(0.0);
        let nu = (cum_s - budget) / cum_w;
        if nu >= next_t - 1e-300 && nu <= t {
            return nu.max(0.0);
        }
    }
    0.0
}

/// Root of `mu + kappa * mu^(p-1) = lambda` on `[0, lambda]` for
/// `lambda >= 0`, by Newton steps kept inside a shrinking bracket.
fn shrink_root(lambda: f64, kappa: f64, p: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let pm1 = p - 1.0;
    let tol = 1e-12 * (1.0 + lambda);
    let mut lo = 0.0f64;
    let mut hi = lambda;
    let mut mu = lambda;
    for _ in 0..200 {
        let val = mu + kappa * mu.powf(pm1) - lambda;
        if val.abs() <= tol {
            return mu;
        }
        if val > 0.0 {
            hi = mu;
        } else {
            lo = mu;
        }
        let dh = 1.0 + kappa * pm1 * mu.powf(pm1 - 1.0);
        let cand = mu - val / dh;
        mu = if cand.is_finite() && cand > lo && cand < hi {
            cand
        } else {
            0.5 * (lo + hi)
        };
    }
    mu
}

/// Coupling constant for the general-exponent prox: finds the norm value `S`
/// of the shrunk spectrum by bisection and returns `kappa = c / S^{p-1}`, or
/// `None` when the prox collapses to zero (dual-norm ball membership).
fn general_coupling(pairs: &[(f64, f64)], p: f64, c: f64) -> Option<f64> {
    let q = p / (p - 1.0);
    let dual = weighted_p_norm(pairs, q);
    if dual <= c {
        return None;
    }
    let hi0 = weighted_p_norm(pairs, p);
    let norm_of_roots = |s: f64| -> f64 {
        let kappa = c / s.powf(p - 1.0);
        let shrunk: Vec<(f64, f64)> = pairs
            .iter()
            .map(|&(v, w)| (shrink_root(v.abs(), kappa, p), w))
            .collect();
        weighted_p_norm(&shrunk, p)
    };
    let mut lo = hi0 * 1e-16;
    let mut tries = 0;
    while norm_of_roots(lo) <= lo && tries < 8 {
        lo *= 1e-4;
        tries += 1;
    }
    let mut hi = hi0;
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + hi0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if norm_of_roots(mid) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    Some(c / s.powf(p - 1.0))
}

/// Proximal map of `c * ||.||_p` at a hermitian element, in the weighted
/// Hilbert-Schmidt geometry.
pub fn prox_schatten(x: &Element, p: f64, c: f64) -> Result<Element> {
    check_p(p)?;
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "prox coefficient must be finite and nonnegative, got {c}"
        )));
    }
    if c == 0.0 {
        return Ok(x.clone());
    }
    let eig = herm_eig(x)?;
    let pairs = eig.weighted_values();
    if p == 1.0 {
        // Per-eigenvalue soft threshold; the trace weights cancel.
        return Ok(eig.map(move |v| v.signum() * (v.abs() - c).max(0.0)));
    }
    if p == 2.0 {
        let n2 = weighted_p_norm(&pairs, 2.0);
        let factor = if n2 <= c { 0.0 } else { 1.0 - c / n2 };
        return Ok(eig.map(move |v| factor * v));
    }
    if p == f64::INFINITY {
        let total = pairs.iter().map(|(v, w)| w * v.abs()).sum::<f64>();
        if total <= c {
            return Ok(Element::zero(x.context()));
        }
        let nu = weighted_clip_level(&pairs, c);
        return Ok(eig.map(move |v| v.clamp(-nu, nu)));
    }
    match general_coupling(&pairs, p, c) {
        None => Ok(Element::zero(x.context())),
        Some(kappa) => Ok(eig.map(move |v| v.signum() * shrink_root(v.abs(), kappa, p))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{Block, TraceContext};
    use crate::norms::schatten_norm;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn objective(z: &Element, x: &Element, p: f64, c: f64) -> f64 {
        let d = z.sub(x).unwrap().hs_norm();
        0.5 * d * d + c * schatten_norm(z, p).unwrap()
    }

    #[test]
    fn soft_threshold_matches_direct_formula() {
        let ctx = TraceContext::new(vec![
            Block { dim: 1, weight: 3.0 },
            Block { dim: 2, weight: 0.5 },
        ])
        .unwrap();
        let x = Element::from_diagonal(&ctx, &[2.0, -0.3, 1.1]).unwrap();
        let z = prox_schatten(&x, 1.0, 0.5).unwrap();
        let want = Element::from_diagonal(&ctx, &[1.5, 0.0, 0.6]).unwrap();
        assert!(z.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn l2_shrinkage_closed_form() {
        let ctx = TraceContext::full(2);
        let x = Element::from_diagonal(&ctx, &[3.0, 4.0]).unwrap();
        // ||x||_2 = 5, so the prox scales by (1 - c/5).
        let z = prox_schatten(&x, 2.0, 1.0).unwrap();
        let want = x.scale(0.8);
        assert!(z.max_abs_diff(&want) < 1e-12);
        // Shrinking past the norm collapses to zero.
        let z0 = prox_schatten(&x, 2.0, 6.0).unwrap();
        assert!(z0.max_abs_entry() < 1e-12);
    }

    #[test]
    fn sup_norm_prox_clips_spectrum() {
        let ctx = TraceContext::full(2);
        let x = Element::from_diagonal(&ctx, &[3.0, 1.0]).unwrap();
        // Budget 1 forces the clip level nu = 2: (3-2) + 0 = 1.
        let z = prox_schatten(&x, f64::INFINITY, 1.0).unwrap();
        let want = Element::from_diagonal(&ctx, &[2.0, 1.0]).unwrap();
        assert!(z.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn sup_norm_prox_respects_weights() {
        // With weight 2 on the first coordinate, the clip satisfies
        // 2*(3 - nu) = 1 while the second eigenvalue stays untouched.
        let ctx = TraceContext::new(vec![
            Block { dim: 1, weight: 2.0 },
            Block { dim: 1, weight: 1.0 },
        ])
        .unwrap();
        let x = Element::from_diagonal(&ctx, &[3.0, 1.0]).unwrap();
        let z = prox_schatten(&x, f64::INFINITY, 1.0).unwrap();
        let want = Element::from_diagonal(&ctx, &[2.5, 1.0]).unwrap();
        assert!(z.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn general_exponent_agrees_with_quadratic_limit() {
        let ctx = TraceContext::full(3);
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 0)] = Complex64::new(1.5, 0.0);
        m[(0, 2)] = Complex64::new(0.4, -0.3);
        m[(2, 0)] = Complex64::new(0.4, 0.3);
        m[(1, 1)] = Complex64::new(-0.8, 0.0);
        m[(2, 2)] = Complex64::new(0.2, 0.0);
        let x = Element::from_matrix(&ctx, m).unwrap();
        let close = prox_schatten(&x, 2.0 + 1e-11, 0.7).unwrap();
        let exact = prox_schatten(&x, 2.0, 0.7).unwrap();
        assert!(close.max_abs_diff(&exact) < 1e-7);
    }

    #[test]
    fn general_exponent_minimizes_objective() {
        let ctx = TraceContext::new(vec![
            Block { dim: 2, weight: 1.0 },
            Block { dim: 1, weight: 2.5 },
        ])
        .unwrap();
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(0, 1)] = Complex64::new(0.3, 0.2);
        m[(1, 0)] = Complex64::new(0.3, -0.2);
        m[(1, 1)] = Complex64::new(-1.4, 0.0);
        m[(2, 2)] = Complex64::new(0.9, 0.0);
        let x = Element::from_matrix(&ctx, m).unwrap();
        for &(p, c) in &[(1.5, 0.4), (3.0, 0.6), (4.0, 1.2)] {
            let z = prox_schatten(&x, p, c).unwrap();
            let base = objective(&z, &x, p, c);
            // Stationarity: no perturbation direction improves the objective.
            let dirs = [
                Element::from_diagonal(&ctx, &[1.0, 0.0, 0.0]).unwrap(),
                Element::from_diagonal(&ctx, &[0.0, 1.0, -1.0]).unwrap(),
                Element::identity(&ctx),
                x.clone(),
            ];
            for d in &dirs {
                for eps in [1e-5, -1e-5] {
                    let zp = z.add(&d.scale(eps)).unwrap();
                    assert!(
                        objective(&zp, &x, p, c) >= base - 1e-9,
                        "p = {p}: perturbation improved objective"
                    );
                }
            }
        }
    }

    #[test]
    fn prox_of_zero_and_zero_coefficient() {
        let ctx = TraceContext::full(2);
        let z = Element::zero(&ctx);
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            assert!(prox_schatten(&z, p, 0.3).unwrap().max_abs_entry() < 1e-15);
        }
        let x = Element::from_diagonal(&ctx, &[1.0, 2.0]).unwrap();
        assert!(prox_schatten(&x, 1.5, 0.0).unwrap().max_abs_diff(&x) < 1e-15);
        assert!(prox_schatten(&x, 0.5, 1.0).is_err());
        assert!(prox_schatten(&x, 2.0, -1.0).is_err());
    }
}
