//! Superoperators: linear maps on a tracial block algebra, with certification.
//!
//! A `SuperOp` stores its action as a `d^2 x d^2` matrix over column-stacked
//! elements (`vec(x)[j*d + i] = x[i, j]`).  Certification computes numeric
//! slacks for five conditions:
//!
//! * `subunital`: `1 - T(1)` is PSD;
//! * `cp`: the Choi matrix is PSD (complete positivity);
//! * `trace_nonincreasing`: `1 - T^*(1)` is PSD, where `T^*` is the adjoint
//!   for the pairing `tau(y^* x)`;
//! * `tau_symmetric`: `tau(T(y)^* x) = tau(y^* T(x))` on a spanning set;
//! * `l2_positive`: the action is PSD as an operator on the weighted
//!   Hilbert-Schmidt space.
//!
//! A map passing the first three is called *certified* here; several
//! downstream operations insist on it, and the `L_2` statements additionally
//! require `tau_symmetric` and `l2_positive`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use once_cell::sync::OnceCell;
use serde::Serialize;

use crate::context::{require_same_context, TraceContext};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::spectral::sym_eig_matrix;

/// Absolute slack tolerance for certification flags.
pub const CERT_TOL: f64 = 1e-9;
/// Relative singular-value cutoff for the fixed-point splitting.
const SPLIT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Flag {
    pub ok: bool,
    /// Signed evidence: min eigenvalue for PSD-style checks, negated
    /// deviation for equality-style checks.  Nonnegative means clean.
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertRecord {
    pub subunital: Flag,
    pub cp: Flag,
    pub trace_nonincreasing: Flag,
    pub tau_symmetric: Flag,
    pub l2_positive: Flag,
}

impl CertRecord {
    /// Compact one-line summary, e.g. `cp+ sub+ tni+ sym+ l2-`.
    pub fn summary(&self) -> String {
        let m = |f: &Flag| if f.ok { '+' } else { '-' };
        format!(
            "cp{} sub{} tni{} sym{} l2{}",
            m(&self.cp),
            m(&self.subunital),
            m(&self.trace_nonincreasing),
            m(&self.tau_symmetric),
            m(&self.l2_positive)
        )
    }

    pub fn is_certified(&self) -> bool {
        self.cp.ok && self.subunital.ok && self.trace_nonincreasing.ok
    }

    pub fn is_symmetric_certified(&self) -> bool {
        self.is_certified() && self.tau_symmetric.ok && self.l2_positive.ok
    }
}

#[derive(Debug)]
pub struct SuperOp {
    ctx: Arc<TraceContext>,
    action: DMatrix<Complex64>,
    certs: OnceCell<CertRecord>,
}

impl Clone for SuperOp {
    fn clone(&self) -> Self {
        SuperOp {
            ctx: self.ctx.clone(),
            action: self.action.clone(),
            certs: self.certs.clone(),
        }
    }
}

impl SuperOp {
    /// Wraps an action matrix.  Columns attached to cross-block coordinates
    /// (which no element can populate) are zeroed; a live column leaking into
    /// cross-block rows beyond `1e-12 * (1 + max|entry|)` is an error.
    pub fn from_action(ctx: &Arc<TraceContext>, action: DMatrix<Complex64>) -> Result<Self> {
        let d = ctx.total_dim();
        let d2 = d * d;
        if action.nrows() != d2 || action.ncols() != d2 {
            return Err(Error::DimensionMismatch(format!(
                "action is {}x{}, context needs {d2}x{d2}",
                action.nrows(),
                action.ncols()
            )));
        }
        let scale = action.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if !scale.is_finite() {
            return Err(Error::InvalidArgument(
                "action matrix has non-finite entries".into(),
            ));
        }
        let tol = 1e-12 * (1.0 + scale);
        let mut action = action;
        for cj in 0..d {
            for ci in 0..d {
                let col = cj * d + ci;
                if !ctx.same_block(ci, cj) {
                    for r in 0..d2 {
                        action[(r, col)] = Complex64::new(0.0, 0.0);
                    }
                    continue;
                }
                for rj in 0..d {
                    for ri in 0..d {
                        if !ctx.same_block(ri, rj) {
                            let row = rj * d + ri;
                            let z = action[(row, col)];
                            if z.norm() > tol {
                                return Err(Error::NotBlockRespecting {
                                    row,
                                    col,
                                    magnitude: z.norm(),
                                });
                            }
                            action[(row, col)] = Complex64::new(0.0, 0.0);
                        }
                    }
                }
            }
        }
        Ok(SuperOp {
            ctx: ctx.clone(),
            action,
            certs: OnceCell::new(),
        })
    }

    pub(crate) fn from_action_unchecked(ctx: &Arc<TraceContext>, action: DMatrix<Complex64>) -> Self {
        SuperOp {
            ctx: ctx.clone(),
            action,
            certs: OnceCell::new(),
        }
    }

    pub fn identity(ctx: &Arc<TraceContext>) -> Self {
        let d2 = ctx.total_dim() * ctx.total_dim();
        Self::from_action_unchecked(ctx, DMatrix::identity(d2, d2))
    }

    pub fn zero(ctx: &Arc<TraceContext>) -> Self {
        let d2 = ctx.total_dim() * ctx.total_dim();
        Self::from_action_unchecked(ctx, DMatrix::zeros(d2, d2))
    }

    /// `x -> a x a^*` for a block-respecting `a`.
    pub fn sandwich(a: &Element) -> SuperOp {
        let conj = a.to_matrix().map(|z| z.conj());
        let action = conj.kronecker(a.mat());
        Self::from_action_unchecked(a.context(), action)
    }

    pub fn context(&self) -> &Arc<TraceContext> {
        &self.ctx
    }

    pub fn action(&self) -> &DMatrix<Complex64> {
        &self.action
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        require_same_context(&self.ctx, x.context(), "superop apply")?;
        let d = self.ctx.total_dim();
        let v = DVector::from_fn(d * d, |k, _| x.entry(k % d, k / d));
        let w = &self.action * v;
        let mat = DMatrix::from_fn(d, d, |i, j| w[j * d + i]);
        Ok(Element::from_matrix_unchecked(&self.ctx, mat))
    }

    pub fn compose(&self, other: &SuperOp) -> Result<SuperOp> {
        require_same_context(&self.ctx, &other.ctx, "superop compose")?;
        Ok(Self::from_action_unchecked(
            &self.ctx,
            &self.action * &other.action,
        ))
    }

    pub fn add(&self, other: &SuperOp) -> Result<SuperOp> {
        require_same_context(&self.ctx, &other.ctx, "superop add")?;
        Ok(Self::from_action_unchecked(
            &self.ctx,
            &self.action + &other.action,
        ))
    }

    pub fn sub(&self, other: &SuperOp) -> Result<SuperOp> {
        require_same_context(&self.ctx, &other.ctx, "superop sub")?;
        Ok(Self::from_action_unchecked(
            &self.ctx,
            &self.action - &other.action,
        ))
    }

    pub fn scale(&self, c: f64) -> SuperOp {
        let c = Complex64::new(c, 0.0);
        Self::from_action_unchecked(&self.ctx, self.action.map(|z| c * z))
    }

    pub fn max_abs_action_diff(&self, other: &SuperOp) -> f64 {
        self.action
            .iter()
            .zip(other.action.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max)
    }

    /// Diagonal of coordinate weights `sqrt(w_i w_j)` in vec order.
    fn coord_weights(&self) -> Vec<f64> {
        let d = self.ctx.total_dim();
        let mut w = Vec::with_capacity(d * d);
        for j in 0..d {
            for i in 0..d {
                w.push(self.ctx.coord_weight(i, j));
            }
        }
        w
    }

    /// Adjoint with respect to the trace pairing `<x, y> = tau(x^* y)`.
    pub fn adjoint_tau(&self) -> SuperOp {
        let w = self.coord_weights();
        let d2 = w.len();
        let at = self.action.adjoint();
        let mut out = DMatrix::zeros(d2, d2);
        for r in 0..d2 {
            for c in 0..d2 {
                out[(r, c)] = at[(r, c)] * (w[c] / w[r]);
            }
        }
        Self::from_action_unchecked(&self.ctx, out)
    }

    /// Action conjugated into the weighted Hilbert-Schmidt geometry:
    /// `W^{1/2} A W^{-1/2}`.  Hermitian exactly when `T` is tau-symmetric.
    pub fn weighted_action(&self) -> DMatrix<Complex64> {
        let w = self.coord_weights();
        let d2 = w.len();
        DMatrix::from_fn(d2, d2, |r, c| {
            self.action[(r, c)] * (w[r].sqrt() / w[c].sqrt())
        })
    }

    /// Choi matrix `sum_{jk} e_jk (x) T(e_jk)`.
    pub fn choi(&self) -> DMatrix<Complex64> {
        let d = self.ctx.total_dim();
        let mut c = DMatrix::zeros(d * d, d * d);
        for j in 0..d {
            for k in 0..d {
                let col = k * d + j;
                for r in 0..d {
                    for s in 0..d {
                        c[(j * d + r, k * d + s)] = self.action[(s * d + r, col)];
                    }
                }
            }
        }
        c
    }

    /// Computes (and caches) the certification record.
    pub fn verify_conditions(&self) -> &CertRecord {
        self.certs.get_or_init(|| self.compute_certs())
    }

    fn compute_certs(&self) -> CertRecord {
        let one = Element::identity(&self.ctx);

        let psd_flag = |m: &Element| -> Flag {
            let dev = m.herm_deviation();
            match crate::spectral::herm_eig(&m.hermitian_part()) {
                Ok(eig) => {
                    let min = eig.min_eigenvalue();
                    Flag {
                        ok: dev <= CERT_TOL && min >= -CERT_TOL,
                        slack: min.min(-dev),
                    }
                }
                Err(_) => Flag {
                    ok: false,
                    slack: f64::NEG_INFINITY,
                },
            }
        };

        // (0.I) together with cp: contraction certified as cp + subunital.
        let t_one = self.apply(&one).expect("same context");
        let subunital = psd_flag(&one.sub(&t_one).expect("same context"));

        // (0.III): 1 - T^*(1) PSD.
        let ts_one = self.adjoint_tau().apply(&one).expect("same context");
        let trace_nonincreasing = psd_flag(&one.sub(&ts_one).expect("same context"));

        // (0.II) via complete positivity of the Choi matrix.
        let choi = self.choi();
        let cp = {
            let dev = hermitian_deviation(&choi);
            let (vals, _) = sym_eig_matrix(&choi);
            let min = vals.first().copied().unwrap_or(0.0);
            Flag {
                ok: dev <= CERT_TOL && min >= -CERT_TOL,
                slack: min.min(-dev),
            }
        };

        // (0.IV): W A = A^+ W on the spanning set of matrix units.
        let tau_symmetric = {
            let w = self.coord_weights();
            let d2 = w.len();
            let mut dev = 0.0f64;
            for r in 0..d2 {
                for c in 0..d2 {
                    let lhs = w[r] * self.action[(r, c)];
                    let rhs = self.action[(c, r)].conj() * w[c];
                    dev = dev.max((lhs - rhs).norm());
                }
            }
            Flag {
                ok: dev <= CERT_TOL,
                slack: -dev,
            }
        };

        // Positivity as an operator on weighted L_2.
        let l2_positive = {
            let b = self.weighted_action();
            let dev = hermitian_deviation(&b);
            let (vals, _) = sym_eig_matrix(&b);
            let min = vals.first().copied().unwrap_or(0.0);
            Flag {
                ok: dev <= CERT_TOL && min >= -CERT_TOL,
                slack: min.min(-dev),
            }
        };

        CertRecord {
            subunital,
            cp,
            trace_nonincreasing,
            tau_symmetric,
            l2_positive,
        }
    }

    pub fn require_certified(&self) -> Result<()> {
        let c = self.verify_conditions();
        if c.is_certified() {
            Ok(())
        } else {
            Err(Error::CertificationFailed(format!(
                "map is not a certified contraction: {}",
                c.summary()
            )))
        }
    }

    pub fn require_symmetric_certified(&self) -> Result<()> {
        let c = self.verify_conditions();
        if c.is_symmetric_certified() {
            Ok(())
        } else {
            Err(Error::CertificationFailed(format!(
                "map is not symmetric and L2-positive: {}",
                c.summary()
            )))
        }
    }

    /// Projection onto `ker(1 - T)` along `ran(1 - T)`.
    ///
    /// Fails when the two spaces do not split the whole space (a Jordan block
    /// at eigenvalue 1), which signals a non-power-bounded input.  For a
    /// tau-symmetric `T` the result is the orthogonal projection onto the
    /// fixed-point space of the weighted Hilbert-Schmidt geometry.
    pub fn fixed_point_projection(&self) -> Result<SuperOp> {
        let d2 = self.action.nrows();
        let m = DMatrix::identity(d2, d2) - &self.action;
        let (kk, ll, _smax) = crate::spectral::null_pair(&m, SPLIT_TOL);
        let k = kk.ncols();
        if k != ll.ncols() {
            return Err(Error::Numerical(format!(
                "kernel extraction found {k} right but {} left directions",
                ll.ncols()
            )));
        }
        if k == 0 {
            return Ok(SuperOp::zero(&self.ctx));
        }
        let g = ll.adjoint() * &kk;
        let gmin = crate::spectral::singular_values_matrix(&g)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if gmin < 1e-6 {
            return Err(Error::SplittingFailed(format!(
                "kernel and range of (1 - T) nearly overlap (splitting condition {gmin:.3e})"
            )));
        }
        let g_inv = g
            .try_inverse()
            .ok_or_else(|| Error::SplittingFailed("singular splitting matrix".into()))?;
        let f = &kk * g_inv * ll.adjoint();
        SuperOp::from_action(&self.ctx, f)
    }

    /// One minus the largest subcritical eigenvalue of the weighted action.
    ///
    /// Requires a symmetric certified map: the weighted action is then
    /// hermitian positive semidefinite, so its eigenvalues are its singular
    /// values, lie in `[0, 1]`, and everything within `1e-8` of 1 is the
    /// fixed space.  Returns 1 when nothing lies below that cluster.
    pub fn spectral_gap(&self) -> Result<f64> {
        self.require_symmetric_certified()?;
        let svs = crate::spectral::singular_values_matrix(&self.weighted_action());
        let mut sub = 0.0f64;
        for &s in &svs {
            if s > 1.0 + 1e-9 {
                return Err(Error::Numerical(format!(
                    "certified map has a singular value {s} beyond 1"
                )));
            }
            if s < 1.0 - 1e-8 {
                sub = sub.max(s);
            }
        }
        Ok(1.0 - sub)
    }
}

fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Min eigenvalue of `T(x^2) - T(x)^2` for hermitian `x` under a certified
/// subunital `T`; the two-positivity inequality says this is nonnegative.
pub fn kadison_slack(t: &SuperOp, x: &Element) -> Result<f64> {
    t.require_certified()?;
    if !x.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: x.herm_deviation(),
        });
    }
    let tx = t.apply(x)?;
    let tx2 = t.apply(&x.matmul(x)?)?;
    let gap = tx2.sub(&tx.matmul(&tx)?)?;
    let eig = crate::spectral::herm_eig(&gap.hermitian_part())?;
    Ok(eig.min_eigenvalue())
}
