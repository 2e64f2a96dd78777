//! Spectral machinery: blockwise eigendecompositions, functional calculus,
//! spectral projections, lattice joins, and the four-positive-parts split.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::context::TraceContext;
use crate::element::{Element, PROJ_TOL, PSD_TOL};
use crate::error::{Error, Result};
use std::sync::Arc;

/// Eigendecomposition of one diagonal block; eigenvalues ascending.
pub struct BlockEig {
    pub vals: Vec<f64>,
    pub vecs: DMatrix<Complex64>,
}

/// Blockwise eigendecomposition of a hermitian element.
pub struct HermEig {
    ctx: Arc<TraceContext>,
    pub blocks: Vec<BlockEig>,
}

/// Cyclic Jacobi eigensolver for a hermitian matrix.
///
/// Everything numeric in this crate sits on top of this routine, so it is
/// written for reliability over speed: plane rotations strictly decrease the
/// off-diagonal mass, the iteration has no shift heuristics that can stall,
/// and the eigenvector matrix is unitary to machine precision by
/// construction.  Returns unsorted (eigenvalues, eigenvector columns).
fn jacobi_hermitian(h: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = h.nrows();
    let mut a = h.clone();
    let mut v: DMatrix<Complex64> = DMatrix::identity(n, n);
    let scale = a.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    assert!(scale.is_finite(), "eigensolver input has non-finite entries");
    if scale == 0.0 || n == 1 {
        return ((0..n).map(|i| a[(i, i)].re).collect(), v);
    }
    let stop = 1e-15 * scale;
    let rot_floor = 0.1 * stop;
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = a[(p, q)];
                let babs = beta.norm();
                if babs <= rot_floor {
                    continue;
                }
                let g = beta / babs;
                let gc = g.conj();
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * babs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * gc * akq;
                    a[(k, q)] = s * g * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * g * aqk;
                    a[(q, k)] = s * gc * apk + c * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * gc * vkq;
                    v[(k, q)] = s * g * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

/// Hermitian eigendecomposition of a raw matrix (symmetrized first),
/// eigenvalues ascending.
pub(crate) fn sym_eig_matrix(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if n == 1 {
        return (
            vec![m[(0, 0)].re],
            DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
        );
    }
    let h = (m + m.adjoint()).map(|z| 0.5 * z);
    let (raw_vals, raw_vecs) = jacobi_hermitian(&h);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| raw_vals[a].total_cmp(&raw_vals[b]));
    let vals: Vec<f64> = idx.iter().map(|&i| raw_vals[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        vecs.set_column(dst, &raw_vecs.column(src));
    }
    (vals, vecs)
}

/// Singular values of a rectangular matrix, ascending, via the hermitian
/// embedding `[[0, M], [M^*, 0]]` whose spectrum is `{+sigma} u {-sigma}`.
pub(crate) fn singular_values_matrix(m: &DMatrix<Complex64>) -> Vec<f64> {
    let (rows, cols) = m.shape();
    if rows == 1 && cols == 1 {
        return vec![m[(0, 0)].norm()];
    }
    let n = rows + cols;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..rows {
        for j in 0..cols {
            h[(i, rows + j)] = m[(i, j)];
            h[(rows + j, i)] = m[(i, j)].conj();
        }
    }
    let (vals, _) = jacobi_hermitian(&h);
    let mut s: Vec<f64> = vals.into_iter().map(f64::abs).collect();
    s.sort_by(f64::total_cmp);
    // The embedding's spectrum is {+sigma, -sigma} plus |rows - cols| exact
    // zeros, so after taking absolute values every second entry from the top
    // walks the singular values once.
    let mut out: Vec<f64> = (0..rows.min(cols)).map(|k| s[n - 1 - 2 * k]).collect();
    out.reverse();
    out
}

/// Greedy orthonormalization with pivoting: repeatedly takes the candidate of
/// largest remaining norm, normalizes it, and deflates the rest.  Candidates
/// whose residual drops below `keep_tol` are discarded.
fn pivoted_orthonormalize(
    mut cands: Vec<DVector<Complex64>>,
    keep_tol: f64,
) -> Vec<DVector<Complex64>> {
    let mut kept: Vec<DVector<Complex64>> = Vec::new();
    while !cands.is_empty() {
        let (best, bnorm) = cands
            .iter()
            .enumerate()
            .map(|(i, w)| (i, w.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty candidate list");
        if bnorm < keep_tol {
            break;
        }
        let mut q = cands.swap_remove(best);
        // One re-orthogonalization pass against what is already kept guards
        // against drift accumulated through earlier deflations.
        for k in &kept {
            let overlap = k.dotc(&q);
            q -= k * overlap;
        }
        let norm = q.norm();
        if norm < keep_tol {
            continue;
        }
        q /= Complex64::new(norm, 0.0);
        for w in cands.iter_mut() {
            let overlap = q.dotc(w);
            *w -= &q * overlap;
        }
        kept.push(q);
    }
    kept
}

/// Orthonormal bases of the right and left null spaces of a square matrix,
/// together with its largest singular value.
///
/// Null space means singular values at most `rel_tol * max(1, sigma_max)`.
/// Computed from the hermitian embedding: an eigenvector `(u; v)` of
/// `[[0, M], [M^*, 0]]` with near-zero eigenvalue has `M v ~ 0` and
/// `M^* u ~ 0` separately, so the two halves of the near-kernel eigenvectors
/// span the two null spaces.
pub(crate) fn null_pair(
    m: &DMatrix<Complex64>,
    rel_tol: f64,
) -> (DMatrix<Complex64>, DMatrix<Complex64>, f64) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "null_pair expects a square matrix");
    let two = 2 * n;
    let mut h = DMatrix::zeros(two, two);
    for i in 0..n {
        for j in 0..n {
            h[(i, n + j)] = m[(i, j)];
            h[(n + j, i)] = m[(i, j)].conj();
        }
    }
    let (vals, vecs) = sym_eig_matrix(&h);
    let smax = vals.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let tol = rel_tol * smax.max(1.0);
    let mut tops = Vec::new();
    let mut bottoms = Vec::new();
    for (i, &lam) in vals.iter().enumerate() {
        if lam.abs() <= tol {
            let col = vecs.column(i);
            tops.push(DVector::from_fn(n, |r, _| col[r]));
            bottoms.push(DVector::from_fn(n, |r, _| col[n + r]));
        }
    }
    // The kept halves have norm about 1/sqrt(2); contamination from outside
    // the null space is on the order of the cluster tolerance, so a fixed
    // cutoff far above it and far below 1/sqrt(2k) separates cleanly.
    let right = pivoted_orthonormalize(bottoms, 1e-3);
    let left = pivoted_orthonormalize(tops, 1e-3);
    let pack = |cols: Vec<DVector<Complex64>>| {
        let mut out = DMatrix::zeros(n, cols.len());
        for (c, v) in cols.iter().enumerate() {
            out.set_column(c, v);
        }
        out
    };
    (pack(right), pack(left), smax)
}

pub fn herm_eig(x: &Element) -> Result<HermEig> {
    if !x.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: x.herm_deviation(),
        });
    }
    let ctx = x.context().clone();
    let mut blocks = Vec::with_capacity(ctx.n_blocks());
    for b in 0..ctx.n_blocks() {
        let m = x.block(b);
        let (vals, vecs) = sym_eig_matrix(&m);
        blocks.push(BlockEig { vals, vecs });
    }
    Ok(HermEig { ctx, blocks })
}

impl HermEig {
    /// Applies a real function to the spectrum: `U diag(f(lambda)) U^*`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Element {
        let d = self.ctx.total_dim();
        let mut mat = DMatrix::zeros(d, d);
        for (b, be) in self.blocks.iter().enumerate() {
            let (lo, _) = self.ctx.block_range(b);
            let n = be.vals.len();
            let mut diag = DMatrix::zeros(n, n);
            for (k, &v) in be.vals.iter().enumerate() {
                diag[(k, k)] = Complex64::new(f(v), 0.0);
            }
            let blk = &be.vecs * diag * be.vecs.adjoint();
            for i in 0..n {
                for j in 0..n {
                    mat[(lo + i, lo + j)] = blk[(i, j)];
                }
            }
        }
        Element::from_matrix_unchecked(&self.ctx, mat)
    }

    /// All eigenvalues paired with their trace weights, in block order.
    pub fn weighted_values(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (b, be) in self.blocks.iter().enumerate() {
            let w = self.ctx.blocks()[b].weight;
            for &v in &be.vals {
                out.push((v, w));
            }
        }
        out
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.vals.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.vals.iter().map(|v| v.abs()))
            .fold(0.0f64, f64::max)
    }
}

/// `(min eigenvalue, max |eigenvalue|)` of a hermitian element.
pub(crate) fn eig_extrema(x: &Element) -> Result<(f64, f64)> {
    let eig = herm_eig(x)?;
    Ok((eig.min_eigenvalue(), eig.max_abs_eigenvalue()))
}

/// Positive part in the functional-calculus sense: eigenvalues clipped at 0.
pub fn psd_part(x: &Element) -> Result<Element> {
    Ok(herm_eig(x)?.map(|v| v.max(0.0)))
}

/// Spectral projection of a hermitian element onto the interval `(a, b]`.
///
/// Endpoints may be infinite.  Eigenvalues within `1e-10 * (1 + max|lambda|)`
/// of an endpoint are assigned to the lower side, so the left endpoint excludes
/// and the right endpoint includes its tolerance band.
pub fn spectral_project(x: &Element, a: f64, b: f64) -> Result<Element> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!(
            "spectral interval ({a}, {b}] is empty"
        )));
    }
    let eig = herm_eig(x)?;
    let tol = PSD_TOL * (1.0 + eig.max_abs_eigenvalue());
    Ok(eig.map(|v| {
        let above_a = if a == f64::NEG_INFINITY { true } else { v - a > tol };
        let within_b = if b == f64::INFINITY { true } else { v - b <= tol };
        if above_a && within_b {
            1.0
        } else {
            0.0
        }
    }))
}

/// Support projection of a positive element (eigenvalues above the PSD tolerance).
pub fn support_projection(x: &Element) -> Result<Element> {
    let eig = herm_eig(x)?;
    let tol = PSD_TOL * (1.0 + eig.max_abs_eigenvalue());
    Ok(eig.map(|v| if v > tol { 1.0 } else { 0.0 }))
}

/// Lattice join (supremum) of projections, computed as the support of their sum.
pub fn join_projections(es: &[Element]) -> Result<Element> {
    let first = es
        .first()
        .ok_or_else(|| Error::InvalidArgument("join of empty projection list".into()))?;
    let mut sum = Element::zero(first.context());
    for e in es {
        if !e.is_projection() {
            let dev = {
                let sq = e.matmul(e)?;
                sq.max_abs_diff(e).max(e.herm_deviation())
            };
            return Err(Error::NotProjection { deviation: dev });
        }
        sum = sum.add(e)?;
    }
    let eig = herm_eig(&sum)?;
    // A sum of projections has eigenvalues in [0, k]; anything above the
    // projection tolerance counts as support.
    let tol = PROJ_TOL * 0.1;
    Ok(eig.map(|v| if v > tol { 1.0 } else { 0.0 }))
}

/// Splits an element into four positive parts:
/// `x = p0 - p1 + i*p2 - i*p3` with each part PSD.
pub fn decompose_four(x: &Element) -> Result<[Element; 4]> {
    let re = x.hermitian_part();
    let im = x.antihermitian_part();
    let re_eig = herm_eig(&re)?;
    let im_eig = herm_eig(&im)?;
    Ok([
        re_eig.map(|v| v.max(0.0)),
        re_eig.map(|v| (-v).max(0.0)),
        im_eig.map(|v| v.max(0.0)),
        im_eig.map(|v| (-v).max(0.0)),
    ])
}

/// Singular values of an arbitrary element, paired with trace weights.
pub fn singular_values_weighted(x: &Element) -> Vec<(f64, f64)> {
    let ctx = x.context();
    let mut out = Vec::new();
    for b in 0..ctx.n_blocks() {
        let w = ctx.blocks()[b].weight;
        let blk = x.block(b);
        for s in singular_values_matrix(&blk) {
            out.push((s, w));
        }
    }
    out
}
