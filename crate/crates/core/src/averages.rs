//! Ergodic averages, fractional (Cesaro-type) means, finite differences,
//! square-function sums, and subordinated semigroups.
//!
//! Fractional coefficients follow the product form
//!
//! ```text
//!   A_0^a = 1,     A_n^a = A_{n-1}^a * (a + n) / n,
//! ```
//!
//! so that `M_n^a = (n+1)^{-a} sum_{k<=n} A_{n-k}^{a-1} T^k` interpolates the
//! plain average (`a = 1`), the bare power (`a = 0`) and the scaled backward
//! difference (`a = -1`).

use num_complex::Complex64;

use crate::element::Element;
use crate::error::{Error, Result};
use crate::laguerre::half_weight_rule;
use crate::norms::schatten_norm;
use crate::superop::SuperOp;

/// Table of coefficients `A_0^alpha .. A_n^alpha` for a fixed (possibly
/// complex) order.
#[derive(Clone, Debug)]
pub struct FracCoeff {
    alpha: Complex64,
    table: Vec<Complex64>,
}

impl FracCoeff {
    pub fn new(alpha: Complex64, n_max: usize) -> Self {
        let mut table = Vec::with_capacity(n_max + 1);
        let mut a = Complex64::new(1.0, 0.0);
        table.push(a);
        for n in 1..=n_max {
            a = a * (alpha + n as f64) / (n as f64);
            table.push(a);
        }
        FracCoeff { alpha, table }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn max_index(&self) -> usize {
        self.table.len() - 1
    }

    pub fn get(&self, n: usize) -> Complex64 {
        self.table[n]
    }
}

/// `A_n^alpha` for a single index.
pub fn frac_coeff(alpha: Complex64, n: usize) -> Complex64 {
    FracCoeff::new(alpha, n).get(n)
}

fn powers_of(t: &SuperOp, x: &Element, n: usize) -> Result<Vec<Element>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(x.clone());
    for k in 1..=n {
        let next = t.apply(&out[k - 1])?;
        out.push(next);
    }
    Ok(out)
}

/// Plain ergodic average `M_n(T) x = (n+1)^{-1} sum_{k=0}^n T^k x`.
pub fn ergodic_average(t: &SuperOp, x: &Element, n: usize) -> Result<Element> {
    t.require_certified()?;
    let mut acc = x.clone();
    let mut cur = x.clone();
    for _ in 1..=n {
        cur = t.apply(&cur)?;
        acc = acc.add(&cur)?;
    }
    Ok(acc.scale(1.0 / (n as f64 + 1.0)))
}

/// Fractional mean `M_n^alpha(T) x = (n+1)^{-alpha} sum_{k=0}^n A_{n-k}^{alpha-1} T^k x`.
pub fn fractional_average(
    t: &SuperOp,
    x: &Element,
    n: usize,
    alpha: Complex64,
) -> Result<Element> {
    t.require_certified()?;
    let coeff = FracCoeff::new(alpha - Complex64::new(1.0, 0.0), n);
    let powers = powers_of(t, x, n)?;
    let mut acc = Element::zero(x.context());
    for (k, p) in powers.iter().enumerate() {
        acc = acc.add(&p.scale_complex(coeff.get(n - k)))?;
    }
    let norm = (-alpha * (n as f64 + 1.0).ln()).exp();
    Ok(acc.scale_complex(norm))
}

/// `Delta_n^m(T) x = (T - 1)^m T^{n-m} x` for `n >= m >= 1`.
///
/// Computed two ways (repeated differencing, and the coefficient route with
/// order `-m`); a disagreement above `1e-10` relative is reported as a
/// numerical inconsistency.
pub fn difference(t: &SuperOp, x: &Element, n: usize, m: usize) -> Result<Element> {
    t.require_certified()?;
    if m == 0 || n < m {
        return Err(Error::InvalidArgument(format!(
            "difference needs n >= m >= 1, got n = {n}, m = {m}"
        )));
    }
    let mut direct = {
        let mut y = x.clone();
        for _ in 0..(n - m) {
            y = t.apply(&y)?;
        }
        y
    };
    for _ in 0..m {
        direct = t.apply(&direct)?.sub(&direct)?;
    }

    // Coefficient route: A_j^{-m-1} = (-1)^j C(m, j), zero beyond j = m.
    let coeff = FracCoeff::new(Complex64::new(-(m as f64) - 1.0, 0.0), m);
    let powers = powers_of(t, x, n)?;
    let mut via_coeff = Element::zero(x.context());
    for j in 0..=m {
        via_coeff = via_coeff.add(&powers[n - j].scale_complex(coeff.get(j)))?;
    }

    let scale = 1.0 + direct.max_abs_entry();
    let dev = direct.max_abs_diff(&via_coeff);
    if dev > 1e-10 * scale {
        return Err(Error::Numerical(format!(
            "difference routes disagree by {dev:.3e} (scale {scale:.3e})"
        )));
    }
    Ok(direct)
}

/// Truncated square-function sum together with its scalar comparison constant.
#[derive(Clone, Copy, Debug)]
pub struct SquareSum {
    /// `sum_{k=m}^K k (B_{k-1}^{m-1})^2 ||Delta_k^m x||_2^2`.
    pub sum: f64,
    /// `sup_{0<=s<=1} sum_{k=m}^K k (B_{k-1}^{m-1})^2 (1-s)^{2m} s^{2(k-m)}`
    /// on a 10^4-point grid; for a symmetric L2-positive contraction the sum
    /// above is at most `constant * ||x||_2^2`.
    pub constant: f64,
}

/// Falling factorial `B_j^i = j (j-1) ... (j-i+1)`, with `B_j^0 = 1` and zero
/// when `i > j`.
fn falling_factorial(j: usize, i: usize) -> f64 {
    if i > j {
        return 0.0;
    }
    let mut acc = 1.0f64;
    for step in 0..i {
        acc *= (j - step) as f64;
    }
    acc
}

/// Computes the order-`m` square-function sum for a tau-symmetric,
/// L2-positive certified contraction, truncated at `cutoff`.
pub fn littlewood_paley_sum(
    t: &SuperOp,
    x: &Element,
    m: usize,
    cutoff: usize,
) -> Result<SquareSum> {
    t.require_symmetric_certified()?;
    if m == 0 || cutoff < m {
        return Err(Error::InvalidArgument(format!(
            "square-function sum needs cutoff >= m >= 1, got m = {m}, cutoff = {cutoff}"
        )));
    }
    let powers = powers_of(t, x, cutoff)?;
    // Binomial coefficients of (T - 1)^m.
    let coeff = FracCoeff::new(Complex64::new(-(m as f64) - 1.0, 0.0), m);
    let weights: Vec<f64> = (m..=cutoff)
        .map(|k| k as f64 * falling_factorial(k - 1, m - 1).powi(2))
        .collect();

    let mut sum = 0.0f64;
    for k in m..=cutoff {
        let mut delta = Element::zero(x.context());
        for j in 0..=m {
            delta = delta.add(&powers[k - j].scale_complex(coeff.get(j)))?;
        }
        let n2 = schatten_norm(&delta, 2.0)?;
        sum += weights[k - m] * n2 * n2;
    }

    const GRID: usize = 10_000;
    let mut constant = 0.0f64;
    for g in 0..GRID {
        let s = g as f64 / (GRID - 1) as f64;
        let mut phi = 0.0f64;
        let mut spow = 1.0f64; // s^{2(k-m)}
        let off = (1.0 - s).powi(2 * m as i32);
        for (idx, w) in weights.iter().enumerate() {
            if idx > 0 {
                spow *= s * s;
            }
            phi += w * off * spow;
        }
        constant = constant.max(phi);
    }

    Ok(SquareSum { sum, constant })
}

/// Subordinated Poisson-type semigroup
/// `P_t x = pi^{-1/2} integral_0^inf u^{-1/2} e^{-u} T_{t^2/(4u)} x du`,
/// evaluated by the half-line Gauss rule with `nodes` points.
///
/// The family must satisfy the semigroup law; it is probed at two split
/// points of `t` and a violation above `1e-8` (relative to the action scale)
/// is an error.
pub fn subordinate_poisson(
    family: &dyn Fn(f64) -> Result<SuperOp>,
    t: f64,
    x: &Element,
    nodes: usize,
) -> Result<Element> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("t = {t}; need t > 0")));
    }
    if nodes == 0 {
        return Err(Error::InvalidArgument("need at least one node".into()));
    }

    let whole = family(t)?;
    for (s1, s2) in [(t / 3.0, 2.0 * t / 3.0), (t / 2.0, t / 2.0)] {
        let a = family(s1)?;
        let b = family(s2)?;
        let composed = a.compose(&b)?;
        let scale = 1.0
            + whole
                .action()
                .iter()
                .map(|z| z.norm())
                .fold(0.0f64, f64::max);
        let dev = composed.max_abs_action_diff(&whole);
        if dev > 1e-8 * scale {
            return Err(Error::SemigroupLaw(format!(
                "T_{s1} T_{s2} deviates from T_{t} by {dev:.3e}"
            )));
        }
    }

    let (us, ws) = half_weight_rule(nodes);
    let norm = 1.0 / std::f64::consts::PI.sqrt();
    let mut acc = Element::zero(x.context());
    for (&u, &w) in us.iter().zip(&ws) {
        let ts = family(t * t / (4.0 * u))?;
        acc = acc.add(&ts.apply(x)?.scale(norm * w))?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::TraceContext;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn re(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn coefficient_values() {
        assert_relative_eq!(frac_coeff(re(1.0), 3).re, 4.0, epsilon = 1e-14);
        assert_relative_eq!(frac_coeff(re(-0.5), 2).re, 3.0 / 8.0, epsilon = 1e-14);
        for n in 0..10 {
            assert_relative_eq!(frac_coeff(re(0.0), n).re, 1.0, epsilon = 1e-14);
        }
        // A_j^{-2}: 1, -1, then exactly zero.
        let c = FracCoeff::new(re(-2.0), 5);
        assert_eq!(c.get(0), re(1.0));
        assert_eq!(c.get(1), re(-1.0));
        for j in 2..=5 {
            assert_eq!(c.get(j), re(0.0));
        }
    }

    #[test]
    fn coefficient_identities_to_high_order() {
        let alphas = [
            re(0.7),
            re(-0.3),
            re(2.5),
            Complex64::new(0.5, 1.0),
            Complex64::new(-0.25, -2.0),
        ];
        for &alpha in &alphas {
            let a = FracCoeff::new(alpha, 200);
            let am1 = FracCoeff::new(alpha - re(1.0), 200);
            let mut running = Complex64::new(0.0, 0.0);
            for n in 0..=200 {
                running += am1.get(n);
                let scale = a.get(n).norm().max(1.0);
                assert!(
                    (a.get(n) - running).norm() <= 1e-10 * scale,
                    "summation identity fails at n = {n}, alpha = {alpha}"
                );
                if n >= 1 {
                    let lhs = a.get(n) - am1.get(n);
                    assert!(
                        (lhs - a.get(n - 1)).norm() <= 1e-10 * scale,
                        "difference identity fails at n = {n}, alpha = {alpha}"
                    );
                }
            }
        }
    }

    #[test]
    fn complex_order_modulus_bound() {
        // For alpha = beta + i gamma (beta not an integer), the modulus obeys
        // |A_n^alpha| <= exp(u_max) |A_n^beta| with
        // u_max = (gamma^2/2) sum_{k=1}^n (beta + k)^{-2}.
        for &(beta, gamma) in &[(0.5, 1.0), (-0.3, 2.0), (1.25, -3.0), (-1.7, 0.5)] {
            let a = FracCoeff::new(Complex64::new(beta, gamma), 200);
            let b = FracCoeff::new(re(beta), 200);
            for n in 1..=200 {
                let u_max: f64 = (1..=n)
                    .map(|k| {
                        let d = beta + k as f64;
                        0.5 * gamma * gamma / (d * d)
                    })
                    .sum();
                let bound = u_max.exp() * b.get(n).norm();
                assert!(
                    a.get(n).norm() <= bound * (1.0 + 1e-10),
                    "modulus bound fails at n = {n}, beta = {beta}, gamma = {gamma}"
                );
            }
        }
    }

    #[test]
    fn growth_ratio_is_bounded() {
        // A_n^beta grows like (n+1)^beta / Gamma(beta+1); the ratio is
        // reported, not pinned to an asserted constant.
        for &beta in &[0.25, 0.5, 0.75] {
            let a = FracCoeff::new(re(beta), 400);
            let mut worst: f64 = 0.0;
            for n in 0..=400 {
                let ratio = a.get(n).norm() / ((n + 1) as f64).powf(beta);
                assert!(ratio.is_finite() && ratio > 0.0);
                worst = worst.max(ratio);
            }
            println!("measured sup_n A_n^{beta} / (n+1)^{beta} = {worst:.6}");
            assert!(worst < 10.0);
        }
    }

    fn depolarizing(ctx: &std::sync::Arc<TraceContext>, keep: f64) -> SuperOp {
        let d = ctx.total_dim();
        let mut a = DMatrix::identity(d * d, d * d).map(|v: f64| re(keep * v));
        let tot = ctx.trace_of_identity();
        for i in 0..d {
            for j in 0..d {
                a[(i * d + i, j * d + j)] += re((1.0 - keep) * ctx.row_weight(j) / tot);
            }
        }
        SuperOp::from_action(ctx, a).unwrap()
    }

    #[test]
    fn fractional_interpolates_known_orders() {
        let ctx = TraceContext::full(3);
        let t = depolarizing(&ctx, 0.7);
        let x = Element::from_diagonal(&ctx, &[1.0, -0.5, 2.0]).unwrap();
        let n = 6;

        let m1 = fractional_average(&t, &x, n, re(1.0)).unwrap();
        let plain = ergodic_average(&t, &x, n).unwrap();
        assert!(m1.max_abs_diff(&plain) < 1e-12);

        let m0 = fractional_average(&t, &x, n, re(0.0)).unwrap();
        let mut pow = x.clone();
        for _ in 0..n {
            pow = t.apply(&pow).unwrap();
        }
        assert!(m0.max_abs_diff(&pow) < 1e-12);

        let mm1 = fractional_average(&t, &x, n, re(-1.0)).unwrap();
        let mut pow1 = x.clone();
        for _ in 0..(n - 1) {
            pow1 = t.apply(&pow1).unwrap();
        }
        let expect = pow.sub(&pow1).unwrap().scale(n as f64 + 1.0);
        assert!(mm1.max_abs_diff(&expect) < 1e-11);
    }

    #[test]
    fn difference_vanishes_for_identity_map() {
        let ctx = TraceContext::full(2);
        let id = SuperOp::identity(&ctx);
        let x = Element::from_diagonal(&ctx, &[2.0, -1.0]).unwrap();
        for (n, m) in [(1, 1), (3, 2), (5, 3)] {
            let d = difference(&id, &x, n, m).unwrap();
            assert!(d.max_abs_entry() < 1e-14);
        }
        assert!(difference(&id, &x, 1, 2).is_err());
        assert!(difference(&id, &x, 3, 0).is_err());
    }

    #[test]
    fn square_sum_for_zero_map_is_l2_norm() {
        let ctx = TraceContext::full(2);
        let z = SuperOp::zero(&ctx);
        let x = Element::from_diagonal(&ctx, &[1.0, 2.0]).unwrap();
        let r = littlewood_paley_sum(&z, &x, 1, 50).unwrap();
        let n2 = schatten_norm(&x, 2.0).unwrap();
        assert_relative_eq!(r.sum, n2 * n2, epsilon = 1e-12);
        assert!(r.constant >= 1.0 - 1e-12);
        assert!(r.sum <= r.constant * n2 * n2 + 1e-10);
    }

    #[test]
    fn square_sum_bounded_by_scalar_constant() {
        let ctx = TraceContext::full(3);
        let t = depolarizing(&ctx, 0.8);
        assert!(t.verify_conditions().is_symmetric_certified());
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 0)] = re(1.0);
        m[(0, 1)] = Complex64::new(0.5, 0.25);
        m[(1, 0)] = Complex64::new(0.5, -0.25);
        m[(1, 1)] = re(-0.7);
        m[(2, 2)] = re(0.4);
        let x = Element::from_matrix(&ctx, m).unwrap();
        let n2 = schatten_norm(&x, 2.0).unwrap();
        for m_ord in 1..=3 {
            let r = littlewood_paley_sum(&t, &x, m_ord, 120).unwrap();
            assert!(
                r.sum <= r.constant * n2 * n2 + 1e-8 * (1.0 + r.constant * n2 * n2),
                "m = {m_ord}: sum {} vs bound {}",
                r.sum,
                r.constant * n2 * n2
            );
        }
    }

    #[test]
    fn square_sum_requires_symmetry() {
        // A non-symmetric certified map must be refused.
        let ctx = TraceContext::full(2);
        let mut u = DMatrix::zeros(2, 2);
        u[(0, 1)] = re(1.0);
        u[(1, 0)] = re(1.0);
        let ue = Element::from_matrix(&ctx, u).unwrap();
        // Shift mixed with a phase: conjugation by a non-hermitian unitary.
        let mut v = DMatrix::zeros(2, 2);
        v[(0, 1)] = Complex64::new(0.0, 1.0);
        v[(1, 0)] = re(1.0);
        let ve = Element::from_matrix(&ctx, v).unwrap();
        let t = SuperOp::sandwich(&ue)
            .scale(0.5)
            .add(&SuperOp::sandwich(&ve).scale(0.5))
            .unwrap();
        let x = Element::from_diagonal(&ctx, &[1.0, 0.0]).unwrap();
        if !t.verify_conditions().is_symmetric_certified() {
            assert!(matches!(
                littlewood_paley_sum(&t, &x, 1, 10),
                Err(Error::CertificationFailed(_))
            ));
        }
    }

    #[test]
    fn subordination_of_identity_family_is_identity() {
        let ctx = TraceContext::full(2);
        let x = Element::from_diagonal(&ctx, &[1.0, -2.0]).unwrap();
        let family = |_s: f64| Ok(SuperOp::identity(&ctx));
        let y = subordinate_poisson(&family, 1.0, &x, 64).unwrap();
        assert!(y.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn subordination_scalar_semigroup() {
        // T_s = e^{-s lam} id: P_t = e^{-t sqrt(lam)} id, with
        // lam t^2 inside the supported exponent range.
        let ctx = TraceContext::full(2);
        let lam = 25.0;
        let x = Element::from_diagonal(&ctx, &[1.0, 3.0]).unwrap();
        let family = |s: f64| Ok(SuperOp::identity(&ctx).scale((-s * lam).exp()));
        let y = subordinate_poisson(&family, 1.0, &x, 64).unwrap();
        let expect = x.scale((-(lam as f64).sqrt()).exp());
        assert!(y.max_abs_diff(&expect) < 5e-7 * (1.0 + x.max_abs_entry()));
    }

    #[test]
    fn subordination_rejects_non_semigroup() {
        let ctx = TraceContext::full(2);
        let x = Element::identity(&ctx);
        // Affine time dependence breaks T_s T_r = T_{s+r}.
        let family = |s: f64| Ok(SuperOp::identity(&ctx).scale(1.0 / (1.0 + s)));
        assert!(matches!(
            subordinate_poisson(&family, 1.0, &x, 16),
            Err(Error::SemigroupLaw(_))
        ));
        let family_ok = |_s: f64| Ok(SuperOp::identity(&ctx));
        assert!(subordinate_poisson(&family_ok, 0.0, &x, 16).is_err());
        assert!(subordinate_poisson(&family_ok, -1.0, &x, 16).is_err());
    }
}
