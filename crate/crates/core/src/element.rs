//! Elements of a tracial block algebra.
//!
//! An `Element` is a complex matrix that vanishes identically outside the
//! diagonal blocks of its [`TraceContext`].  Hermiticity and positivity flags
//! are computed lazily and cached; both use the fixed tolerances below so that
//! every module in the crate agrees on what counts as hermitian or positive.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use once_cell::sync::OnceCell;

use crate::context::{require_same_context, TraceContext};
use crate::error::{Error, Result};

/// Absolute entrywise tolerance for the hermitian flag.
pub const HERM_TOL: f64 = 1e-12;
/// Relative eigenvalue tolerance for positivity and projection flags.
pub const PSD_TOL: f64 = 1e-10;
/// Tolerance for recognizing a projection (`e^2 = e = e^*`).
pub const PROJ_TOL: f64 = 1e-8;

#[derive(Debug)]
pub struct Element {
    ctx: Arc<TraceContext>,
    mat: DMatrix<Complex64>,
    herm: OnceCell<bool>,
    psd: OnceCell<bool>,
}

impl Clone for Element {
    fn clone(&self) -> Self {
        Element {
            ctx: self.ctx.clone(),
            mat: self.mat.clone(),
            herm: self.herm.clone(),
            psd: self.psd.clone(),
        }
    }
}

impl Element {
    /// Wraps a matrix, checking that it lives on the context's diagonal blocks.
    /// Off-block entries up to `1e-12 * (1 + max|entry|)` are forced to exact
    /// zero; anything larger is an error.
    pub fn from_matrix(ctx: &Arc<TraceContext>, mat: DMatrix<Complex64>) -> Result<Self> {
        let d = ctx.total_dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, context needs {d}x{d}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let scale = mat.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if !scale.is_finite() {
            return Err(Error::InvalidArgument(
                "matrix has non-finite entries".into(),
            ));
        }
        let tol = 1e-12 * (1.0 + scale);
        let mut mat = mat;
        for i in 0..d {
            for j in 0..d {
                if !ctx.same_block(i, j) {
                    let z = mat[(i, j)];
                    if z.norm() > tol {
                        return Err(Error::BlockViolation(format!(
                            "entry ({i}, {j}) = {z} crosses blocks"
                        )));
                    }
                    mat[(i, j)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        Ok(Element {
            ctx: ctx.clone(),
            mat,
            herm: OnceCell::new(),
            psd: OnceCell::new(),
        })
    }

    /// Internal constructor for matrices already known to respect the blocks.
    pub(crate) fn from_matrix_unchecked(ctx: &Arc<TraceContext>, mat: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(mat.nrows(), ctx.total_dim());
        Element {
            ctx: ctx.clone(),
            mat,
            herm: OnceCell::new(),
            psd: OnceCell::new(),
        }
    }

    pub fn zero(ctx: &Arc<TraceContext>) -> Self {
        let d = ctx.total_dim();
        Self::from_matrix_unchecked(ctx, DMatrix::zeros(d, d))
    }

    pub fn identity(ctx: &Arc<TraceContext>) -> Self {
        let d = ctx.total_dim();
        Self::from_matrix_unchecked(ctx, DMatrix::identity(d, d))
    }

    /// Diagonal element from real entries (length must match the total dimension).
    pub fn from_diagonal(ctx: &Arc<TraceContext>, diag: &[f64]) -> Result<Self> {
        let d = ctx.total_dim();
        if diag.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "diagonal has {} entries, context needs {d}",
                diag.len()
            )));
        }
        let mut mat = DMatrix::zeros(d, d);
        for (i, &v) in diag.iter().enumerate() {
            mat[(i, i)] = Complex64::new(v, 0.0);
        }
        Ok(Self::from_matrix_unchecked(ctx, mat))
    }

    pub fn context(&self) -> &Arc<TraceContext> {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.ctx.total_dim()
    }

    pub(crate) fn mat(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        self.mat.clone()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    /// View of one diagonal block as an owned matrix.
    pub fn block(&self, b: usize) -> DMatrix<Complex64> {
        let (lo, hi) = self.ctx.block_range(b);
        self.mat.view((lo, lo), (hi - lo, hi - lo)).into_owned()
    }

    /// `tau(x)`; real up to rounding when `x` is hermitian.
    pub fn trace(&self) -> Complex64 {
        let mut t = Complex64::new(0.0, 0.0);
        for b in 0..self.ctx.n_blocks() {
            let (lo, hi) = self.ctx.block_range(b);
            let w = self.ctx.blocks()[b].weight;
            let mut s = Complex64::new(0.0, 0.0);
            for i in lo..hi {
                s += self.mat[(i, i)];
            }
            t += w * s;
        }
        t
    }

    pub fn trace_re(&self) -> f64 {
        self.trace().re
    }

    /// Weighted Hilbert-Schmidt pairing `tau(x^* y)`.
    pub fn hs_inner(&self, other: &Element) -> Result<Complex64> {
        require_same_context(&self.ctx, &other.ctx, "hs_inner")?;
        let d = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..d {
            for i in 0..d {
                if self.ctx.same_block(i, j) {
                    let w = self.ctx.row_weight(i);
                    acc += w * self.mat[(i, j)].conj() * other.mat[(i, j)];
                }
            }
        }
        Ok(acc)
    }

    /// Weighted Hilbert-Schmidt norm `tau(x^* x)^{1/2}`.
    pub fn hs_norm(&self) -> f64 {
        let mut acc = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                if self.ctx.same_block(i, j) {
                    acc += self.ctx.row_weight(i) * self.mat[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0f64, f64::max)
    }

    pub fn adjoint(&self) -> Element {
        Self::from_matrix_unchecked(&self.ctx, self.mat.adjoint())
    }

    pub fn scale(&self, c: f64) -> Element {
        self.scale_complex(Complex64::new(c, 0.0))
    }

    pub fn scale_complex(&self, c: Complex64) -> Element {
        Self::from_matrix_unchecked(&self.ctx, self.mat.map(|z| c * z))
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        require_same_context(&self.ctx, &other.ctx, "add")?;
        Ok(Self::from_matrix_unchecked(&self.ctx, &self.mat + &other.mat))
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        require_same_context(&self.ctx, &other.ctx, "sub")?;
        Ok(Self::from_matrix_unchecked(&self.ctx, &self.mat - &other.mat))
    }

    /// Algebra product; block structure is preserved exactly.
    pub fn matmul(&self, other: &Element) -> Result<Element> {
        require_same_context(&self.ctx, &other.ctx, "matmul")?;
        Ok(Self::from_matrix_unchecked(&self.ctx, &self.mat * &other.mat))
    }

    /// `(x + x^*) / 2`.
    pub fn hermitian_part(&self) -> Element {
        let h = (&self.mat + self.mat.adjoint()).map(|z| 0.5 * z);
        Self::from_matrix_unchecked(&self.ctx, h)
    }

    /// `(x - x^*) / (2i)`, itself hermitian.
    pub fn antihermitian_part(&self) -> Element {
        let factor = Complex64::new(0.0, -0.5);
        let h = (&self.mat - self.mat.adjoint()).map(|z| factor * z);
        Self::from_matrix_unchecked(&self.ctx, h)
    }

    /// Max entrywise deviation from hermiticity.
    pub fn herm_deviation(&self) -> f64 {
        let d = self.dim();
        let mut dev = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let z = self.mat[(i, j)] - self.mat[(j, i)].conj();
                dev = dev.max(z.norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        *self.herm.get_or_init(|| self.herm_deviation() <= HERM_TOL)
    }

    /// Hermitian with min eigenvalue `>= -PSD_TOL * (1 + ||x||_inf)`.
    pub fn is_psd(&self) -> bool {
        *self.psd.get_or_init(|| {
            if !self.is_hermitian() {
                return false;
            }
            match crate::spectral::eig_extrema(self) {
                Ok((min_eig, max_abs)) => min_eig >= -PSD_TOL * (1.0 + max_abs),
                Err(_) => false,
            }
        })
    }

    /// Checks `e = e^* = e^2` within `PROJ_TOL`.
    pub fn is_projection(&self) -> bool {
        if self.herm_deviation() > PROJ_TOL {
            return false;
        }
        match self.matmul(self) {
            Ok(sq) => sq
                .mat
                .iter()
                .zip(self.mat.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max)
                .le(&PROJ_TOL),
            Err(_) => false,
        }
    }

    /// Max entrywise distance to another element.
    pub fn max_abs_diff(&self, other: &Element) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::Block;

    fn two_block_ctx() -> Arc<TraceContext> {
        TraceContext::new(vec![
            Block { dim: 2, weight: 1.0 },
            Block { dim: 1, weight: 0.5 },
        ])
        .unwrap()
    }

    #[test]
    fn rejects_cross_block_entries() {
        let ctx = two_block_ctx();
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 2)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            Element::from_matrix(&ctx, m),
            Err(Error::BlockViolation(_))
        ));
    }

    #[test]
    fn trace_uses_weights() {
        let ctx = two_block_ctx();
        let x = Element::from_diagonal(&ctx, &[1.0, 2.0, 4.0]).unwrap();
        // 1*(1+2) + 0.5*4
        assert_eq!(x.trace_re(), 5.0);
    }

    #[test]
    fn hermitian_flag_tolerance() {
        let ctx = TraceContext::full(2);
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(0.0, 1.0);
        m[(1, 0)] = Complex64::new(0.0, -1.0 + 1e-13);
        let x = Element::from_matrix(&ctx, m.clone()).unwrap();
        assert!(x.is_hermitian());
        m[(1, 0)] = Complex64::new(0.0, -1.0 + 1e-9);
        let y = Element::from_matrix(&ctx, m).unwrap();
        assert!(!y.is_hermitian());
    }

    #[test]
    fn parts_recombine() {
        let ctx = TraceContext::full(3);
        let mut m = DMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = Complex64::new((i + 2 * j) as f64, (i as f64) - (j as f64) * 0.3);
            }
        }
        let x = Element::from_matrix(&ctx, m).unwrap();
        let re = x.hermitian_part();
        let im = x.antihermitian_part();
        assert!(re.is_hermitian() && im.is_hermitian());
        let back = re
            .add(&im.scale_complex(Complex64::new(0.0, 1.0)))
            .unwrap();
        assert!(back.max_abs_diff(&x) < 1e-14);
    }
}
