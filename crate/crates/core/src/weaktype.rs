//! Weak-type projections and the dyadic majorant pipeline.
//!
//! Given a positive sequence, a weak-type witness is a projection that
//! compresses every item below a level `lambda` while discarding trace mass
//! at most of order `||x||_1 / lambda`.  The construction here is the
//! Chebyshev heuristic: solve for the least trace-norm order majorant and cut
//! its spectrum at `lambda`.  The achieved constant is measured and reported,
//! never assumed.
//!
//! On top of per-level witnesses sits a dyadic decomposition: projections
//! `f_k` compressing below `2^k` are combined into a decreasing tail family
//! `g_k`, orthogonal slices `d_k`, cumulative supports `e_k`, and weighted
//! sums `b_k = sum_{j<=k} 2^{js} d_j` whose factorization turns a maximal
//! bound at one level into a norm bound with an explicit rate in `s`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::element::{Element, PROJ_TOL};
use crate::error::{Error, Result};
use crate::maxnorm::{sup_norm_pos, PosSequence, SolverConfig};
use crate::norms::schatten_norm;
use crate::prox::check_p;
use crate::spectral::{herm_eig, join_projections, singular_values_matrix, spectral_project};

/// Level-`lambda` compression witness for a positive sequence.
#[derive(Clone, Debug)]
pub struct WeakTypeWitness {
    /// The compressing projection.
    pub e: Element,
    pub lambda: f64,
    /// Trace of the discarded part `1 - e`.
    pub tail_trace: f64,
    /// `max_n ||e x_n e||_inf`; at most `lambda` up to solver slack.
    pub compression_bound: f64,
    /// Trace of the solved majorant; `tail_trace <= majorant_trace / lambda`
    /// holds exactly for the witness built from it.
    pub majorant_trace: f64,
    /// `tail_trace * lambda / ||x||_1`, with the sequence's L1 size taken as
    /// the largest trace norm among the items.  Measured, not guaranteed.
    pub achieved_constant: f64,
}

/// Per-level data of the dyadic majorant construction on the window
/// `k_min..=k_max`; vectors are indexed by `k - k_min`.
#[derive(Clone, Debug)]
pub struct DyadicDecomposition {
    pub k_min: i32,
    pub k_max: i32,
    /// Oracle projections: `||f_k x_n f_k||_inf <= 2^k`.
    pub f: Vec<Element>,
    /// Decreasing tails `g_k = join of f_j^perp over j >= k` in the window.
    pub g: Vec<Element>,
    /// Orthogonal slices `d_k = g_k - g_{k+1}` (with `g` past the window = 0).
    pub d: Vec<Element>,
    /// Cumulative supports `e_k = sum_{j <= k} d_j`.
    pub e: Vec<Element>,
    /// Weighted sums `b_k = sum_{j <= k} 2^{js} d_j`.
    pub b: Vec<Element>,
    /// The dyadic weight exponent.
    pub s: f64,
    /// Bottom-of-window tail `g_{k_min}`; its complement carries the part of
    /// the space every oracle level compresses to nothing.
    pub g_minus_infinity: Element,
    /// Measured per-level constants: `tau(f_k^perp) * 2^k / ||x||_1`.
    pub level_constants: Vec<f64>,
}

impl DyadicDecomposition {
    /// Index of level `k` into the per-level vectors.
    pub fn idx(&self, k: i32) -> Option<usize> {
        if k < self.k_min || k > self.k_max {
            None
        } else {
            Some((k - self.k_min) as usize)
        }
    }

    pub fn level_count(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }
}

fn l1_size(xs: &PosSequence) -> Result<f64> {
    let mut best = 0.0f64;
    for x in xs.items() {
        best = best.max(schatten_norm(x, 1.0)?);
    }
    Ok(best)
}

fn op_scale(xs: &PosSequence) -> Result<f64> {
    let mut best = 0.0f64;
    for x in xs.items() {
        best = best.max(schatten_norm(x, f64::INFINITY)?);
    }
    Ok(best)
}

fn require_level(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "level must be a positive real, got {lambda}"
        )));
    }
    Ok(())
}

/// Weak-type witness by the majorant-spectrum cut: solve the least
/// trace-norm majorant `a`, take `e = 1_{[0, lambda]}(a)`.
///
/// Then `e x_n e <= e a e <= lambda e` for every item, and the trace
/// Chebyshev bound gives `tau(1 - e) <= tau(a) / lambda`.
pub fn chebyshev_projection(
    xs: &PosSequence,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<WeakTypeWitness> {
    require_level(lambda)?;
    let cert = sup_norm_pos(xs, 1.0, cfg)?;
    let e = spectral_project(&cert.a, f64::NEG_INFINITY, lambda)?;
    let ctx = xs.context();
    let tail_trace = ctx.trace_of_identity() - e.trace().re;
    let mut compression_bound = 0.0f64;
    for x in xs.items() {
        let exe = e.matmul(x)?.matmul(&e)?;
        compression_bound = compression_bound.max(schatten_norm(&exe, f64::INFINITY)?);
    }
    let size = l1_size(xs)?;
    let achieved_constant = if size > 0.0 {
        tail_trace * lambda / size
    } else {
        0.0
    };
    Ok(WeakTypeWitness {
        e,
        lambda,
        tail_trace,
        compression_bound,
        majorant_trace: cert.value,
        achieved_constant,
    })
}

/// Reusable level oracle backed by one majorant solve: the returned closure
/// maps a level to the spectral cut of the fixed trace-norm majorant.
pub fn chebyshev_oracle(
    xs: &PosSequence,
    cfg: &SolverConfig,
) -> Result<impl Fn(f64) -> Result<Element>> {
    let a = sup_norm_pos(xs, 1.0, cfg)?.a;
    Ok(move |level: f64| {
        require_level(level)?;
        spectral_project(&a, f64::NEG_INFINITY, level)
    })
}

/// Dyadic majorant construction at the level containing `lambda`, with the
/// default weight exponent `s = 2 / (1 + p)`.
///
/// Returns the combined projection `e`, the factorization value
/// `||b_k||_p * max_n ||b_k^{-1/2} e_k x_n e_k b_k^{-1/2}||_inf`, and the
/// full decomposition.
pub fn marcinkiewicz_majorant(
    xs: &PosSequence,
    lambda: f64,
    p: f64,
    oracle: &dyn Fn(f64) -> Result<Element>,
    cfg: &SolverConfig,
) -> Result<(Element, f64, DyadicDecomposition)> {
    check_finite_p(p)?;
    marcinkiewicz_majorant_with_exponent(xs, lambda, p, 2.0 / (1.0 + p), oracle, cfg)
}

fn check_finite_p(p: f64) -> Result<()> {
    check_p(p)?;
    if !(p > 1.0) || p == f64::INFINITY {
        return Err(Error::InvalidExponent(format!(
            "dyadic majorant needs p in (1, inf), got {p}"
        )));
    }
    Ok(())
}

/// As [`marcinkiewicz_majorant`] but with an explicit weight exponent `s`,
/// constrained to `0 < s < 1` and `s * p > 1` so the dyadic sums converge at
/// both ends.
pub fn marcinkiewicz_majorant_with_exponent(
    xs: &PosSequence,
    lambda: f64,
    p: f64,
    s: f64,
    oracle: &dyn Fn(f64) -> Result<Element>,
    cfg: &SolverConfig,
) -> Result<(Element, f64, DyadicDecomposition)> {
    check_finite_p(p)?;
    require_level(lambda)?;
    if !(s > 0.0 && s < 1.0) || !(s * p > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "weight exponent must satisfy 0 < s < 1 and s * p > 1, got s = {s}, p = {p}"
        )));
    }
    let ctx = xs.context().clone();
    let ident = Element::identity(&ctx);
    let k_sel = lambda.log2().floor() as i32;

    // Default window: the dyadic band of the trace-norm majorant spectrum,
    // two levels of margin on each side, always containing the selected
    // level.
    let a_star = sup_norm_pos(xs, 1.0, cfg)?.a;
    let spectrum: Vec<f64> = herm_eig(&a_star)?
        .weighted_values()
        .into_iter()
        .map(|(v, _)| v)
        .collect();
    let top = spectrum.iter().cloned().fold(0.0f64, f64::max);
    let floor = 1e-10 * (1.0 + top);
    let bottom = spectrum
        .iter()
        .cloned()
        .filter(|&v| v > floor)
        .fold(f64::INFINITY, f64::min);
    let (mut k_lo, mut k_hi) = if top > floor {
        (
            (bottom.log2().floor() as i32) - 2,
            (top.log2().ceil() as i32) + 2,
        )
    } else {
        (k_sel, k_sel)
    };
    k_lo = k_lo.min(k_sel);
    k_hi = k_hi.max(k_sel);

    // Level solves, bottom up, with contract checks on each oracle output.
    let op = op_scale(xs)?;
    let size = l1_size(xs)?;
    let mut fs = Vec::with_capacity((k_hi - k_lo + 1) as usize);
    for k in k_lo..=k_hi {
        let level = (k as f64).exp2();
        let f = oracle(level)?;
        if !f.is_projection() {
            let sq = f.matmul(&f)?;
            return Err(Error::NotProjection {
                deviation: sq.max_abs_diff(&f).max(f.herm_deviation()),
            });
        }
        for x in xs.items() {
            let fxf = f.matmul(x)?.matmul(&f)?;
            let bound = schatten_norm(&fxf, f64::INFINITY)?;
            if bound > level * (1.0 + 1e-8) + 1e-8 * (1.0 + op) {
                return Err(Error::InvalidArgument(format!(
                    "oracle violates its compression contract at level 2^{k}: \
                     got {bound:.6e} > {level:.6e}"
                )));
            }
        }
        fs.push(f);
    }

    // Clip trivial levels: all-zero projections below, identities above,
    // while keeping the selected level inside the window.
    let is_zero = |f: &Element| f.max_abs_entry() <= PROJ_TOL;
    let is_ident = |f: &Element| f.max_abs_diff(&ident) <= PROJ_TOL;
    let mut k_min = k_hi + 1;
    for (off, f) in fs.iter().enumerate() {
        if !is_zero(f) {
            k_min = k_lo + off as i32;
            break;
        }
    }
    let mut k_max = k_lo - 1;
    for (off, f) in fs.iter().enumerate().rev() {
        if !is_ident(f) {
            k_max = k_lo + off as i32;
            break;
        }
    }
    k_min = k_min.min(k_sel);
    k_max = k_max.max(k_sel);
    if k_min > k_max {
        return Err(Error::InvalidArgument("empty dyadic level range".into()));
    }
    let f: Vec<Element> = fs[(k_min - k_lo) as usize..=(k_max - k_lo) as usize].to_vec();
    let count = f.len();

    let level_constants: Vec<f64> = f
        .iter()
        .enumerate()
        .map(|(off, fk)| {
            let k = k_min + off as i32;
            let tail = ctx.trace_of_identity() - fk.trace().re;
            if size > 0.0 {
                tail * (k as f64).exp2() / size
            } else {
                0.0
            }
        })
        .collect();

    // Tails by downward accumulation, then slices and cumulative supports.
    let mut g = vec![Element::zero(&ctx); count];
    let mut running = Element::zero(&ctx);
    for off in (0..count).rev() {
        let comp = ident.sub(&f[off])?;
        running = join_projections(&[running, comp])?;
        g[off] = running.clone();
    }
    let mut d = Vec::with_capacity(count);
    for off in 0..count {
        let next = if off + 1 < count {
            g[off + 1].clone()
        } else {
            Element::zero(&ctx)
        };
        d.push(g[off].sub(&next)?);
    }
    let g_minus_infinity = g[0].clone();
    let mut e = Vec::with_capacity(count);
    let mut b = Vec::with_capacity(count);
    let mut e_run = Element::zero(&ctx);
    let mut b_run = Element::zero(&ctx);
    for (off, dk) in d.iter().enumerate() {
        let k = k_min + off as i32;
        e_run = e_run.add(dk)?;
        b_run = b_run.add(&dk.scale((k as f64 * s).exp2()))?;
        e.push(e_run.clone());
        b.push(b_run.clone());
    }

    // Factorization value at the selected level.
    let sel = (k_sel - k_min) as usize;
    let mut inv_half = Element::zero(&ctx);
    for (off, dk) in d.iter().enumerate().take(sel + 1) {
        let k = k_min + off as i32;
        inv_half = inv_half.add(&dk.scale((-(k as f64) * s / 2.0).exp2()))?;
    }
    let b_norm = schatten_norm(&b[sel], p)?;
    let mut inner = 0.0f64;
    for x in xs.items() {
        let m = inv_half.matmul(x)?.matmul(&inv_half)?;
        inner = inner.max(schatten_norm(&m, f64::INFINITY)?);
    }
    let majorant_value = b_norm * inner;
    let e_out = ident.sub(&g_minus_infinity)?.add(&e[sel])?;

    let decomposition = DyadicDecomposition {
        k_min,
        k_max,
        f,
        g,
        d,
        e,
        b,
        s,
        g_minus_infinity,
        level_constants,
    };
    Ok((e_out, majorant_value, decomposition))
}

/// Compression inequality for a matrix of elements between two disjoint
/// projection families: the operator norm of `sum_ij e_i x_ij f_j` is at
/// most the spectral norm of the scalar matrix of compressed norms.
///
/// Returns `(lhs, rhs)`; callers assert `lhs <= rhs` to their tolerance.
pub fn vector_matrix_check(
    x_blocks: &[Vec<Element>],
    es: &[Element],
    fs: &[Element],
) -> Result<(f64, f64)> {
    if x_blocks.is_empty() || x_blocks.len() != es.len() {
        return Err(Error::InvalidArgument(format!(
            "need one row per left projection: {} rows, {} projections",
            x_blocks.len(),
            es.len()
        )));
    }
    for row in x_blocks {
        if row.len() != fs.len() {
            return Err(Error::InvalidArgument(format!(
                "need one column per right projection: {} columns, {} projections",
                row.len(),
                fs.len()
            )));
        }
    }
    for fam in [es, fs] {
        for (i, a) in fam.iter().enumerate() {
            if !a.is_projection() {
                let sq = a.matmul(a)?;
                return Err(Error::NotProjection {
                    deviation: sq.max_abs_diff(a).max(a.herm_deviation()),
                });
            }
            for b in fam.iter().skip(i + 1) {
                let overlap = a.matmul(b)?.max_abs_entry();
                if overlap > PROJ_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "projection family is not pairwise disjoint (overlap {overlap:.3e})"
                    )));
                }
            }
        }
    }
    let ctx = es[0].context();
    let mut total = Element::zero(ctx);
    let mut scalar = DMatrix::zeros(es.len(), fs.len());
    for (i, row) in x_blocks.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let piece = es[i].matmul(x)?.matmul(&fs[j])?;
            scalar[(i, j)] = Complex64::new(schatten_norm(&piece, f64::INFINITY)?, 0.0);
            total = total.add(&piece)?;
        }
    }
    let lhs = schatten_norm(&total, f64::INFINITY)?;
    let rhs = singular_values_matrix(&scalar)
        .into_iter()
        .fold(0.0f64, f64::max);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{Block, TraceContext};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn diag_seq(ctx: &Arc<TraceContext>, rows: &[&[f64]]) -> PosSequence {
        PosSequence::new(
            rows.iter()
                .map(|r| Element::from_diagonal(ctx, r).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn witness_is_identity_above_the_spectrum() {
        let ctx = TraceContext::full(3);
        let xs = diag_seq(&ctx, &[&[0.5, 1.0, 0.2], &[0.1, 0.4, 1.5]]);
        let w = chebyshev_projection(&xs, 10.0, &SolverConfig::default()).unwrap();
        assert!(w.e.max_abs_diff(&Element::identity(&ctx)) < 1e-9);
        assert!(w.tail_trace.abs() < 1e-9);
        assert!(w.compression_bound <= 10.0 * (1.0 + 1e-8));
    }

    #[test]
    fn witness_on_a_one_dimensional_algebra_is_the_scalar_indicator() {
        let ctx = TraceContext::new(vec![Block { dim: 1, weight: 1.0 }]).unwrap();
        let xs = PosSequence::new(vec![Element::from_diagonal(&ctx, &[2.0]).unwrap()]).unwrap();
        let cfg = SolverConfig::default();
        let below = chebyshev_projection(&xs, 1.0, &cfg).unwrap();
        assert!(below.e.max_abs_entry() < 1e-9, "2 > 1 must be discarded");
        assert_relative_eq!(below.tail_trace, 1.0, epsilon = 1e-9);
        let above = chebyshev_projection(&xs, 3.0, &cfg).unwrap();
        assert!(above.e.max_abs_diff(&Element::identity(&ctx)) < 1e-9);
        assert_relative_eq!(above.compression_bound, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn witness_matches_the_classical_level_set_on_diagonals() {
        let ctx = TraceContext::new(vec![
            Block { dim: 1, weight: 1.0 },
            Block { dim: 1, weight: 0.5 },
            Block { dim: 2, weight: 1.0 },
        ])
        .unwrap();
        let xs = diag_seq(
            &ctx,
            &[&[0.5, 1.4, 0.9, 2.2], &[0.3, 0.8, 0.2, 1.9], &[0.1, 1.1, 0.6, 0.4]],
        );
        let cfg = SolverConfig::default();
        let w = chebyshev_projection(&xs, 1.0, &cfg).unwrap();
        // Pointwise maxima are [0.5, 1.4, 0.9, 2.2]; the level set at 1.0
        // keeps coordinates 0 and 2.
        let classical = Element::from_diagonal(&ctx, &[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(
            w.e.max_abs_diff(&classical) < 1e-6,
            "projection strays from the classical level set"
        );
        assert_relative_eq!(w.tail_trace, 0.5 + 1.0, epsilon = 1e-6);
        assert!(w.compression_bound <= 1.0 + 1e-6);
        // Exact trace Chebyshev inequality against the solved majorant.
        let a_star = sup_norm_pos(&xs, 1.0, &cfg).unwrap();
        assert!(w.tail_trace * w.lambda <= a_star.a.trace().re + 1e-9);
        assert!(w.achieved_constant.is_finite() && w.achieved_constant > 0.0);
    }

    #[test]
    fn dyadic_pipeline_matches_a_scalar_reimplementation() {
        let ctx = TraceContext::full(5);
        let rows: [&[f64]; 3] = [
            &[0.3, 1.7, 5.0, 20.0, 0.0],
            &[0.2, 1.1, 4.2, 17.0, 0.0],
            &[0.3, 0.9, 3.1, 11.0, 0.0],
        ];
        let xs = diag_seq(&ctx, &rows);
        let cfg = SolverConfig::default();
        let lambda = 3.0;
        let p = 2.0;
        let oracle = chebyshev_oracle(&xs, &cfg).unwrap();
        let (e, value, dec) = marcinkiewicz_majorant(&xs, lambda, p, &oracle, &cfg).unwrap();

        // Scalar pipeline on the pointwise maxima: the combined projection
        // keeps exactly the coordinates with maximum at most 2^(k+1) for
        // 2^k <= lambda < 2^(k+1).
        let maxima = [0.3f64, 1.7, 5.0, 20.0, 0.0];
        let cut = (lambda.log2().floor() + 1.0).exp2();
        let scalar_tail: f64 = maxima.iter().filter(|&&m| m > cut).count() as f64;
        let tail = ctx.trace_of_identity() - e.trace().re;
        assert_relative_eq!(tail, scalar_tail, epsilon = 1e-6);
        assert!(value.is_finite() && value > 0.0);

        // Structural invariants of the decomposition.
        for off in 0..dec.level_count() - 1 {
            let diff = dec.g[off].sub(&dec.g[off + 1]).unwrap();
            assert!(
                crate::spectral::psd_part(&diff).unwrap().max_abs_diff(&diff) < 1e-8,
                "tail projections must decrease"
            );
        }
        for i in 0..dec.d.len() {
            for j in i + 1..dec.d.len() {
                let prod = dec.d[i].matmul(&dec.d[j]).unwrap();
                assert!(prod.max_abs_entry() <= 1e-9, "slices {i},{j} overlap");
            }
        }
        for off in 0..dec.level_count() {
            let mut esum = Element::zero(&ctx);
            let mut bsum = Element::zero(&ctx);
            for j in 0..=off {
                let k = dec.k_min + j as i32;
                esum = esum.add(&dec.d[j]).unwrap();
                bsum = bsum
                    .add(&dec.d[j].scale((k as f64 * dec.s).exp2()))
                    .unwrap();
            }
            assert!(dec.e[off].max_abs_diff(&esum) < 1e-12);
            assert!(dec.b[off].max_abs_diff(&bsum) < 1e-12);
            let supp = crate::spectral::support_projection(&dec.b[off]).unwrap();
            assert!(supp.max_abs_diff(&dec.e[off]) < 1e-8, "support of b is e");
        }

        // Tail traces bounded by the recorded level constants, exactly.
        let size = rows
            .iter()
            .map(|r| r.iter().sum::<f64>())
            .fold(0.0f64, f64::max);
        for off in 0..dec.level_count() {
            let bound: f64 = (off..dec.level_count())
                .map(|j| {
                    let k = dec.k_min + j as i32;
                    dec.level_constants[j] * (-(k as f64)).exp2() * size
                })
                .sum();
            assert!(dec.g[off].trace().re <= bound + 1e-9);
        }

        // The all-levels-compressed part annihilates every item: the zero
        // coordinate is captured by the bottom of the window.
        let gperp = Element::identity(&ctx).sub(&dec.g_minus_infinity).unwrap();
        for x in xs.items() {
            let m = gperp.matmul(x).unwrap().matmul(&gperp).unwrap();
            assert!(schatten_norm(&m, f64::INFINITY).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn dyadic_rate_constant_is_measured() {
        let ctx = TraceContext::full(4);
        let xs = diag_seq(
            &ctx,
            &[&[0.4, 2.3, 9.0, 30.0], &[0.4, 1.9, 7.5, 28.0]],
        );
        let cfg = SolverConfig::default();
        for p in [1.5, 2.0, 3.0] {
            let s = 2.0 / (1.0 + p);
            let lambda = 4.0f64;
            let k = lambda.log2().floor();
            let oracle = chebyshev_oracle(&xs, &cfg).unwrap();
            let (_e, _value, dec) = marcinkiewicz_majorant(&xs, lambda, p, &oracle, &cfg).unwrap();
            let sel = dec.idx(k as i32).unwrap();
            let mut inv_half = Element::zero(&ctx);
            for j in 0..=sel {
                let kk = dec.k_min + j as i32;
                inv_half = inv_half
                    .add(&dec.d[j].scale((-(kk as f64) * s / 2.0).exp2()))
                    .unwrap();
            }
            let mut inner = 0.0f64;
            for x in xs.items() {
                let m = inv_half.matmul(x).unwrap().matmul(&inv_half).unwrap();
                inner = inner.max(schatten_norm(&m, f64::INFINITY).unwrap());
            }
            let kappa = inner * (1.0 - s) * (-(k * (1.0 - s))).exp2();
            println!("p = {p}: inner bound constant kappa-hat = {kappa:.4}");
            assert!(kappa.is_finite() && kappa > 0.0);
        }
    }

    #[test]
    fn huge_level_gives_the_identity_witness() {
        let ctx = TraceContext::full(3);
        let xs = diag_seq(&ctx, &[&[0.5, 1.0, 0.2]]);
        let cfg = SolverConfig::default();
        let oracle = chebyshev_oracle(&xs, &cfg).unwrap();
        let (e, value, _dec) = marcinkiewicz_majorant(&xs, 64.0, 2.0, &oracle, &cfg).unwrap();
        assert!(e.max_abs_diff(&Element::identity(&ctx)) < 1e-9);
        assert!(value.is_finite());
    }

    #[test]
    fn exponent_validation_and_custom_s() {
        let ctx = TraceContext::full(2);
        let xs = diag_seq(&ctx, &[&[0.5, 2.0]]);
        let cfg = SolverConfig::default();
        let oracle = chebyshev_oracle(&xs, &cfg).unwrap();
        assert!(marcinkiewicz_majorant(&xs, 1.0, 1.0, &oracle, &cfg).is_err());
        assert!(marcinkiewicz_majorant(&xs, 1.0, f64::INFINITY, &oracle, &cfg).is_err());
        assert!(marcinkiewicz_majorant(&xs, 0.0, 2.0, &oracle, &cfg).is_err());
        assert!(
            marcinkiewicz_majorant_with_exponent(&xs, 1.0, 2.0, 0.3, &oracle, &cfg).is_err(),
            "s * p <= 1 must be rejected"
        );
        let (_, v_default, _) = marcinkiewicz_majorant(&xs, 1.0, 2.0, &oracle, &cfg).unwrap();
        let (_, v_other, _) =
            marcinkiewicz_majorant_with_exponent(&xs, 1.0, 2.0, 0.9, &oracle, &cfg).unwrap();
        assert!(v_default.is_finite() && v_other.is_finite());
    }

    #[test]
    fn matrix_check_single_entry_is_tight() {
        let ctx = TraceContext::full(2);
        let x = Element::from_diagonal(&ctx, &[1.0, -2.0]).unwrap();
        let e = Element::identity(&ctx);
        let (lhs, rhs) = vector_matrix_check(
            &[vec![x]],
            std::slice::from_ref(&e),
            std::slice::from_ref(&e),
        )
        .unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        assert_relative_eq!(lhs, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn matrix_check_on_coordinate_projections_of_a_diagonal() {
        let ctx = TraceContext::full(3);
        let x = Element::from_diagonal(&ctx, &[0.7, 1.9, 0.3]).unwrap();
        let es: Vec<Element> = (0..3)
            .map(|i| {
                let mut d = [0.0; 3];
                d[i] = 1.0;
                Element::from_diagonal(&ctx, &d).unwrap()
            })
            .collect();
        let blocks: Vec<Vec<Element>> = (0..3).map(|_| vec![x.clone(); 3]).collect();
        let (lhs, rhs) = vector_matrix_check(&blocks, &es, &es).unwrap();
        assert_relative_eq!(lhs, 1.9, epsilon = 1e-12);
        assert_relative_eq!(rhs, 1.9, epsilon = 1e-12);
    }

    #[test]
    fn matrix_check_holds_on_a_seeded_dense_family() {
        let ctx = TraceContext::full(6);
        let es: Vec<Element> = (0..3)
            .map(|i| {
                let mut d = [0.0; 6];
                d[2 * i] = 1.0;
                d[2 * i + 1] = 1.0;
                Element::from_diagonal(&ctx, &d).unwrap()
            })
            .collect();
        let mut blocks = Vec::new();
        for i in 0..3usize {
            let mut row = Vec::new();
            for j in 0..3usize {
                let mut m = DMatrix::zeros(6, 6);
                for r in 0..6 {
                    for c in 0..6 {
                        let t = (1.0 + i as f64)
                            * (7.0 + j as f64)
                            * (1.0 + r as f64)
                            * (13.0 + c as f64);
                        m[(r, c)] = Complex64::new((0.91 * t).sin(), (1.73 * t).cos());
                    }
                }
                row.push(Element::from_matrix(&ctx, m).unwrap());
            }
            blocks.push(row);
        }
        let (lhs, rhs) = vector_matrix_check(&blocks, &es, &es).unwrap();
        assert!(lhs <= rhs + 1e-9, "lhs {lhs:.6} exceeds rhs {rhs:.6}");
        println!("compression slack: {:.6}", rhs - lhs);
    }

    #[test]
    fn matrix_check_rejects_overlapping_projections() {
        let ctx = TraceContext::full(2);
        let p = Element::from_diagonal(&ctx, &[1.0, 0.0]).unwrap();
        let x = Element::identity(&ctx);
        let err = vector_matrix_check(
            &[vec![x.clone(), x.clone()], vec![x.clone(), x]],
            &[p.clone(), p.clone()],
            &[p.clone(), Element::from_diagonal(&ctx, &[0.0, 1.0]).unwrap()],
        );
        assert!(err.is_err());
    }
}
