//! Pure data representations for elements and superoperator families.
//!
//! These types carry no file handles; reading and writing actual files is
//! the runner's business.  Every representation rejects unknown keys so a
//! typo in an input document fails loudly with the offending name.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::context::{Block, TraceContext};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::semigroups::{
    cyclic_multiplier_semigroup, hamiltonian_semigroup, neveu_mixture, schur_semigroup,
    semicommutative_semigroup, ExpectationChain, HeatKind, PointEmbedding,
};
use crate::superop::SuperOp;

/// Matrix literal: block layout plus real and imaginary parts as dense rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementRepr {
    pub blocks: Vec<Block>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

fn matrix_from_parts(d: usize, re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<DMatrix<Complex64>> {
    if re.len() != d || im.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "need {d} rows in re and im, got {} and {}",
            re.len(),
            im.len()
        )));
    }
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        if re[i].len() != d || im[i].len() != d {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has {} real and {} imaginary entries, need {d}",
                re[i].len(),
                im[i].len()
            )));
        }
        for j in 0..d {
            m[(i, j)] = Complex64::new(re[i][j], im[i][j]);
        }
    }
    Ok(m)
}

fn parts_of(m: &DMatrix<Complex64>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let d = m.nrows();
    let re = (0..d)
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect())
        .collect();
    let im = (0..d)
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect())
        .collect();
    (re, im)
}

impl ElementRepr {
    pub fn from_element(x: &Element) -> Self {
        let (re, im) = parts_of(&x.to_matrix());
        ElementRepr {
            blocks: x.context().blocks().to_vec(),
            re,
            im,
        }
    }

    pub fn build(&self) -> Result<Element> {
        let ctx = TraceContext::new(self.blocks.clone())?;
        let m = matrix_from_parts(ctx.total_dim(), &self.re, &self.im)?;
        Element::from_matrix(&ctx, m)
    }
}

/// Raw action matrix over an explicit block layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub blocks: Vec<Block>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Entrywise multiplier family over embedded points.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchurSpec {
    pub points: Vec<Vec<f64>>,
    pub t: f64,
    pub heat: HeatKind,
}

/// Spectral multiplier of the commutator with a hermitian generator.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub generator: ElementRepr,
    pub t: f64,
    pub heat: HeatKind,
}

/// Mixture of conditional expectations onto nested partitions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectationMixtureSpec {
    pub dim: usize,
    pub partitions: Vec<Vec<Vec<usize>>>,
    pub alphas: Vec<f64>,
}

/// Classical substochastic kernel tensored with a matrix fiber.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorSpec {
    pub kernel: Vec<Vec<f64>>,
    pub fiber_dim: usize,
    #[serde(default = "one_step")]
    pub steps: usize,
}

fn one_step() -> usize {
    1
}

/// Length multiplier on a finite cyclic group.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CyclicSpec {
    pub order: usize,
    pub t: f64,
    pub heat: HeatKind,
}

/// Tagged family description; `build` turns one into a certified map.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SuperOpSpec {
    Matrix(MatrixSpec),
    Schur(SchurSpec),
    Hamiltonian(HamiltonianSpec),
    ExpectationMixture(ExpectationMixtureSpec),
    Tensor(TensorSpec),
    Cyclic(CyclicSpec),
}

impl SuperOpSpec {
    /// Whether the family carries a continuous time parameter that a grid
    /// may override.
    pub fn is_continuous(&self) -> bool {
        matches!(
            self,
            SuperOpSpec::Schur(_) | SuperOpSpec::Hamiltonian(_) | SuperOpSpec::Cyclic(_)
        )
    }

    /// Builds the map at the parameters stored in the description.
    pub fn build(&self) -> Result<SuperOp> {
        match self {
            SuperOpSpec::Matrix(spec) => {
                let ctx = TraceContext::new(spec.blocks.clone())?;
                let d2 = ctx.total_dim() * ctx.total_dim();
                let action = matrix_from_parts(d2, &spec.re, &spec.im)?;
                SuperOp::from_action(&ctx, action)
            }
            SuperOpSpec::Schur(spec) => {
                let emb = PointEmbedding::new(spec.points.clone())?;
                schur_semigroup(&emb, spec.t, spec.heat)
            }
            SuperOpSpec::Hamiltonian(spec) => {
                let l = spec.generator.build()?;
                hamiltonian_semigroup(&l, spec.t, spec.heat)
            }
            SuperOpSpec::ExpectationMixture(spec) => {
                let chain = ExpectationChain::new(
                    spec.dim,
                    spec.partitions.clone(),
                    spec.alphas.clone(),
                )?;
                neveu_mixture(&chain)
            }
            SuperOpSpec::Tensor(spec) => {
                let n = spec.kernel.len();
                let mut k = DMatrix::zeros(n, n);
                for (i, row) in spec.kernel.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::DimensionMismatch(format!(
                            "kernel row {i} has {} entries, need {n}",
                            row.len()
                        )));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        k[(i, j)] = v;
                    }
                }
                semicommutative_semigroup(&k, spec.fiber_dim, spec.steps)
            }
            SuperOpSpec::Cyclic(spec) => {
                cyclic_multiplier_semigroup(spec.order, spec.t, spec.heat)
            }
        }
    }

    /// Builds a continuous family at time `t`, overriding the stored value.
    pub fn build_at(&self, t: f64) -> Result<SuperOp> {
        match self {
            SuperOpSpec::Schur(spec) => {
                let emb = PointEmbedding::new(spec.points.clone())?;
                schur_semigroup(&emb, t, spec.heat)
            }
            SuperOpSpec::Hamiltonian(spec) => {
                let l = spec.generator.build()?;
                hamiltonian_semigroup(&l, t, spec.heat)
            }
            SuperOpSpec::Cyclic(spec) => {
                cyclic_multiplier_semigroup(spec.order, t, spec.heat)
            }
            _ => Err(Error::InvalidArgument(
                "this family has no continuous time parameter".into(),
            )),
        }
    }
}
