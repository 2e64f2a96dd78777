//! A zoo of concrete certified semigroups.
//!
//! Every constructor returns a [`SuperOp`] that has passed its certification
//! checks: complete positivity, subunitality, trace behavior, and trace
//! symmetry.  The families are
//!
//! * entrywise (Schur) multipliers from a metric point embedding,
//! * spectral multipliers of a commutator with a fixed hermitian generator,
//! * Fourier multipliers on circulant matrices over a cyclic group, with an
//!   explicit positive-definiteness check instead of an assumed one,
//! * classical substochastic kernels tensored with a matrix fiber,
//! * convex mixtures of trace-compatible conditional expectations onto
//!   nested partition algebras.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::context::TraceContext;
use crate::element::Element;
use crate::error::{Error, Result};
use crate::spectral::herm_eig;
use crate::superop::SuperOp;

/// Decay profile of a multiplier family: squared-distance or plain-distance
/// exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatKind {
    Gauss,
    Poisson,
}

impl HeatKind {
    fn symbol(self, t: f64, dist: f64) -> f64 {
        match self {
            HeatKind::Gauss => (-t * dist * dist).exp(),
            HeatKind::Poisson => (-t * dist).exp(),
        }
    }
}

fn require_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time parameter must be a finite nonnegative real, got {t}"
        )));
    }
    Ok(())
}

/// Finite list of points in a common Euclidean space, one per matrix index.
#[derive(Clone, Debug)]
pub struct PointEmbedding {
    points: Vec<Vec<f64>>,
}

impl PointEmbedding {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidArgument("embedding needs at least one point".into()))?;
        let m = first.len();
        for p in &points {
            if p.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "all points must share a dimension: {} vs {m}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument("points must be finite".into()));
            }
        }
        Ok(PointEmbedding { points })
    }

    /// Points on the integer line `0, 1, ..., d-1`.
    pub fn line(d: usize) -> Result<Self> {
        Self::new((0..d).map(|j| vec![j as f64]).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Euclidean distance between points `j` and `k`.
    pub fn distance(&self, j: usize, k: usize) -> f64 {
        self.points[j]
            .iter()
            .zip(&self.points[k])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

fn certify(op: SuperOp, what: &str) -> Result<SuperOp> {
    let certs = op.verify_conditions();
    if !certs.is_certified() || !certs.tau_symmetric.ok {
        return Err(Error::CertificationFailed(format!(
            "{what}: {}",
            certs.summary()
        )));
    }
    Ok(op)
}

/// Entrywise multiplier semigroup `e_{jk} -> symbol(t, dist(j, k)) e_{jk}`
/// on the full matrix algebra over the embedding's points.
///
/// Distances come from a Euclidean embedding, so the symbol matrix is
/// positive definite for both kinds and the result certifies completely
/// positive, unital, and trace preserving.
pub fn schur_semigroup(emb: &PointEmbedding, t: f64, kind: HeatKind) -> Result<SuperOp> {
    require_time(t)?;
    let d = emb.len();
    let ctx = TraceContext::full(d);
    let d2 = d * d;
    let mut action = DMatrix::zeros(d2, d2);
    for j in 0..d {
        for i in 0..d {
            let idx = j * d + i;
            action[(idx, idx)] = Complex64::new(kind.symbol(t, emb.distance(i, j)), 0.0);
        }
    }
    certify(SuperOp::from_action(&ctx, action)?, "entrywise multiplier")
}

/// Spectral multiplier of the commutator with `l`: in an eigenbasis of `l`
/// the matrix unit at eigenvalues `(lambda_i, lambda_j)` is scaled by
/// `symbol(t, |lambda_i - lambda_j|)`.
///
/// Diagonal symbol value 1 makes the family unital and trace preserving; it
/// is a mixture of unitary conjugations, hence completely positive.
pub fn hamiltonian_semigroup(l: &Element, t: f64, kind: HeatKind) -> Result<SuperOp> {
    require_time(t)?;
    if !l.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: l.herm_deviation(),
        });
    }
    let ctx = l.context().clone();
    let d = ctx.total_dim();
    let eig = herm_eig(l)?;
    let mut u = DMatrix::zeros(d, d);
    let mut lam = vec![0.0f64; d];
    for (b, be) in eig.blocks.iter().enumerate() {
        let (lo, _) = ctx.block_range(b);
        let n = be.vals.len();
        for c in 0..n {
            lam[lo + c] = be.vals[c];
            for r in 0..n {
                u[(lo + r, lo + c)] = be.vecs[(r, c)];
            }
        }
    }
    let w = u.map(|z| z.conj()).kronecker(&u);
    let mut symbol = DMatrix::zeros(d * d, d * d);
    for j in 0..d {
        for i in 0..d {
            let idx = j * d + i;
            symbol[(idx, idx)] = Complex64::new(kind.symbol(t, (lam[i] - lam[j]).abs()), 0.0);
        }
    }
    let action = &w * symbol * w.adjoint();
    certify(SuperOp::from_action(&ctx, action)?, "commutator multiplier")
}

/// Word length on the cyclic group of order `n`: `min(k, n - k)`.
fn cyclic_length(k: usize, n: usize) -> f64 {
    k.min(n - k) as f64
}

/// Fourier multiplier semigroup on circulant matrices over the cyclic group
/// of order `n`, extended to the full matrix algebra as the entrywise
/// multiplier with symbol `h((j - k) mod n)` for `h(g) = symbol(t, |g|)`.
///
/// Complete positivity of this extension is equivalent to positive
/// definiteness of `h` on the group, which the constructor checks through
/// the discrete Fourier transform: every coefficient must be nonnegative
/// within `1e-10`.  Squared word length fails this for some `(n, t)`, so the
/// check is a gate, not a formality.
pub fn cyclic_multiplier_semigroup(n: usize, t: f64, kind: HeatKind) -> Result<SuperOp> {
    require_time(t)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cyclic group order must be at least 2, got {n}"
        )));
    }
    let h: Vec<f64> = (0..n).map(|g| kind.symbol(t, cyclic_length(g, n))).collect();
    for chi in 0..n {
        let mut coeff = Complex64::new(0.0, 0.0);
        for (g, &hg) in h.iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * (g * chi) as f64 / n as f64;
            coeff += Complex64::new(hg * phase.cos(), hg * phase.sin());
        }
        if coeff.re < -1e-10 {
            return Err(Error::CertificationFailed(format!(
                "multiplier symbol is not positive definite on the cyclic group of order {n}: \
                 transform coefficient at frequency {chi} is {:.6e}",
                coeff.re
            )));
        }
    }
    let ctx = TraceContext::full(n);
    let d2 = n * n;
    let mut action = DMatrix::zeros(d2, d2);
    for j in 0..n {
        for i in 0..n {
            let idx = j * n + i;
            action[(idx, idx)] = Complex64::new(h[(i + n - j) % n], 0.0);
        }
    }
    certify(SuperOp::from_action(&ctx, action)?, "cyclic multiplier")
}

/// Circulant element `sum_g coeffs[g] lambda(g)` where `lambda(1)` is the
/// cyclic shift; the natural probe family for the cyclic multiplier.
pub fn circulant(ctx: &Arc<TraceContext>, coeffs: &[Complex64]) -> Result<Element> {
    let n = ctx.total_dim();
    if coeffs.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for a circulant of order {n}",
            coeffs.len()
        )));
    }
    let m = DMatrix::from_fn(n, n, |i, j| coeffs[(i + n - j) % n]);
    Element::from_matrix(ctx, m)
}

/// Classical substochastic kernel tensored with a matrix fiber: on tuples
/// `(x_1, ..., x_n)` of `d x d` matrices the map sends `x_i` to
/// `sum_j kernel[(i, j)] x_j`, iterated `steps` times.
pub fn semicommutative_semigroup(
    kernel: &DMatrix<f64>,
    d: usize,
    steps: usize,
) -> Result<SuperOp> {
    let n = kernel.nrows();
    if n == 0 || kernel.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "kernel must be square and nonempty, got {}x{}",
            kernel.nrows(),
            kernel.ncols()
        )));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("fiber dimension must be positive".into()));
    }
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            let v = kernel[(i, j)];
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "kernel entries must be finite and nonnegative, got {v} at ({i}, {j})"
                )));
            }
            if (v - kernel[(j, i)]).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "kernel must be symmetric; asymmetry at ({i}, {j})"
                )));
            }
            row += v;
        }
        if row > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "kernel row {i} sums to {row} > 1"
            )));
        }
    }
    let mut p = DMatrix::identity(n, n);
    for _ in 0..steps {
        p = &p * kernel;
    }
    let ctx = TraceContext::new(
        (0..n)
            .map(|_| crate::context::Block { dim: d, weight: 1.0 })
            .collect(),
    )?;
    let total = n * d;
    let mut action = DMatrix::zeros(total * total, total * total);
    for i in 0..n {
        for j in 0..n {
            let v = p[(i, j)];
            if v == 0.0 {
                continue;
            }
            for r in 0..d {
                for c in 0..d {
                    // Output block i at entry (r, c) collects input block j
                    // at the same fiber entry.
                    let row = (i * d + c) * total + (i * d + r);
                    let col = (j * d + c) * total + (j * d + r);
                    action[(row, col)] += Complex64::new(v, 0.0);
                }
            }
        }
    }
    certify(SuperOp::from_action(&ctx, action)?, "semicommutative kernel")
}

/// Nested partitions of matrix indices with mixture weights; level `n`
/// averages each cell of `partitions[n]` to a multiple of its projection.
#[derive(Clone, Debug)]
pub struct ExpectationChain {
    dim: usize,
    partitions: Vec<Vec<Vec<usize>>>,
    alphas: Vec<f64>,
}

impl ExpectationChain {
    /// Validates that every level partitions `0..dim`, that later partitions
    /// are coarser (each cell is contained in one cell of the next level),
    /// and that the weights start at 0 and increase strictly inside `[0, 1)`.
    pub fn new(dim: usize, partitions: Vec<Vec<Vec<usize>>>, alphas: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("ambient dimension must be positive".into()));
        }
        if partitions.is_empty() || partitions.len() != alphas.len() {
            return Err(Error::InvalidArgument(format!(
                "need one weight per partition level: {} levels, {} weights",
                partitions.len(),
                alphas.len()
            )));
        }
        for part in &partitions {
            let mut seen = vec![false; dim];
            for cell in part {
                if cell.is_empty() {
                    return Err(Error::InvalidArgument("empty partition cell".into()));
                }
                for &i in cell {
                    if i >= dim || seen[i] {
                        return Err(Error::InvalidArgument(format!(
                            "index {i} missing, repeated, or out of range in partition"
                        )));
                    }
                    seen[i] = true;
                }
            }
            if seen.iter().any(|&s| !s) {
                return Err(Error::InvalidArgument(
                    "partition does not cover every index".into(),
                ));
            }
        }
        for w in partitions.windows(2) {
            let (finer, coarser) = (&w[0], &w[1]);
            for cell in finer {
                let host = coarser
                    .iter()
                    .find(|big| cell.iter().all(|i| big.contains(i)));
                if host.is_none() {
                    return Err(Error::InvalidArgument(
                        "partitions are not nested: a cell splits across the next level".into(),
                    ));
                }
            }
        }
        if alphas[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "first weight must be 0, got {}",
                alphas[0]
            )));
        }
        for w in alphas.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidArgument(
                    "weights must increase strictly".into(),
                ));
            }
        }
        if alphas.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(Error::InvalidArgument("weights must lie in [0, 1]".into()));
        }
        Ok(ExpectationChain {
            dim,
            partitions,
            alphas,
        })
    }

    pub fn levels(&self) -> usize {
        self.partitions.len()
    }

    pub fn context(&self) -> Arc<TraceContext> {
        TraceContext::full(self.dim)
    }

    /// Conditional expectation at level `n`: each cell's compression is
    /// replaced by its normalized trace times the cell projection.
    pub fn expectation(&self, n: usize) -> Result<SuperOp> {
        let part = self.partitions.get(n).ok_or_else(|| {
            Error::InvalidArgument(format!("level {n} beyond {} levels", self.levels()))
        })?;
        let d = self.dim;
        let mut action = DMatrix::zeros(d * d, d * d);
        for cell in part {
            let inv = 1.0 / cell.len() as f64;
            for &i in cell {
                for &j in cell {
                    action[(i * d + i, j * d + j)] = Complex64::new(inv, 0.0);
                }
            }
        }
        SuperOp::from_action(&self.context(), action)
    }
}

/// Convex mixture `sum_n (alpha_{n+1} - alpha_n) E_n` of the chain's
/// conditional expectations, with the terminal weight taken as 1.
///
/// The result is certified symmetric: completely positive, unital, trace
/// preserving, trace symmetric, and positive as an operator on the weighted
/// Hilbert-Schmidt space.
pub fn neveu_mixture(chain: &ExpectationChain) -> Result<SuperOp> {
    let ctx = chain.context();
    let mut t = SuperOp::zero(&ctx);
    let m = chain.levels();
    for n in 0..m {
        let upper = if n + 1 < m { chain.alphas[n + 1] } else { 1.0 };
        let weight = upper - chain.alphas[n];
        t = t.add(&chain.expectation(n)?.scale(weight))?;
    }
    t.require_symmetric_certified()?;
    Ok(t)
}
