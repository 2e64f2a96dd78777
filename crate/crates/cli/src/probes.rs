//! Deterministic probe element generation.

use std::sync::Arc;

use anyhow::{bail, Context};
use nalgebra::DMatrix;
use ncmax_core::context::{same_context, TraceContext};
use ncmax_core::element::Element;
use ncmax_core::norms::schatten_norm;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::scenario::{ProbeRule, ProbeSet};

fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_hermitian(ctx: &Arc<TraceContext>, rng: &mut ChaCha12Rng) -> Element {
    let d = ctx.total_dim();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if ctx.same_block(i, j) {
                m[(i, j)] = Complex64::new(standard_normal(rng), standard_normal(rng));
            }
        }
    }
    let m = (&m + m.adjoint()).scale(0.5);
    Element::from_matrix(ctx, m).expect("block-respecting by construction")
}

fn unit_sup(x: Element) -> Element {
    let norm = schatten_norm(&x, f64::INFINITY).expect("operator norm of a finite matrix");
    if norm > 1e-12 {
        x.scale(1.0 / norm)
    } else {
        Element::identity(x.context())
    }
}

/// Builds the probe list for a context, honoring an optional seed override.
pub fn build_probes(
    spec: &ProbeSet,
    ctx: &Arc<TraceContext>,
    seed_override: Option<u64>,
) -> anyhow::Result<Vec<Element>> {
    let seed = seed_override.unwrap_or(spec.seed);
    match &spec.rule {
        ProbeRule::Listed(reprs) => {
            let mut out = Vec::with_capacity(reprs.len());
            for (i, repr) in reprs.iter().enumerate() {
                let x = repr
                    .build()
                    .with_context(|| format!("listed probe {i}"))?;
                if !same_context(ctx, x.context()) {
                    bail!(
                        "listed probe {i} lives on blocks {:?}, family needs {:?}",
                        x.context().blocks(),
                        ctx.blocks()
                    );
                }
                out.push(x);
            }
            Ok(out)
        }
        rule => {
            let mut out = Vec::with_capacity(spec.count);
            for i in 0..spec.count {
                let mut rng =
                    ChaCha12Rng::seed_from_u64(seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
                let h = random_hermitian(ctx, &mut rng);
                let x = match rule {
                    ProbeRule::Psd => h.matmul(&h).expect("same context"),
                    ProbeRule::Hermitian => h,
                    ProbeRule::Listed(_) => unreachable!(),
                };
                out.push(unit_sup(x));
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(rule: ProbeRule) -> ProbeSet {
        ProbeSet {
            count: 3,
            seed: 42,
            rule,
        }
    }

    #[test]
    fn generation_is_deterministic_and_normalized() {
        let ctx = TraceContext::full(3);
        let a = build_probes(&spec(ProbeRule::Psd), &ctx, None).unwrap();
        let b = build_probes(&spec(ProbeRule::Psd), &ctx, None).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.max_abs_diff(y) == 0.0);
            assert!(x.is_psd());
            let norm = schatten_norm(x, f64::INFINITY).unwrap();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        let c = build_probes(&spec(ProbeRule::Psd), &ctx, Some(43)).unwrap();
        assert!(a[0].max_abs_diff(&c[0]) > 1e-6, "override changes the draw");
    }

    #[test]
    fn hermitian_rule_respects_blocks() {
        let ctx = ncmax_core::context::TraceContext::new(vec![
            ncmax_core::context::Block { dim: 2, weight: 1.0 },
            ncmax_core::context::Block { dim: 2, weight: 0.5 },
        ])
        .unwrap();
        let xs = build_probes(&spec(ProbeRule::Hermitian), &ctx, None).unwrap();
        for x in &xs {
            assert!(x.is_hermitian());
            assert_eq!(x.entry(0, 2), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn listed_probes_check_their_context() {
        let ctx = TraceContext::full(2);
        let other = TraceContext::full(3);
        let repr = ncmax_core::serial::ElementRepr::from_element(&Element::identity(&other));
        let err = build_probes(
            &ProbeSet {
                count: 1,
                seed: 0,
                rule: ProbeRule::Listed(vec![repr]),
            },
            &ctx,
            None,
        )
        .unwrap_err();
        assert!(format!("{err:#}").contains("blocks"));
    }
}
