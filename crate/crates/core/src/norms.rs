//! Trace norms and the singular value staircase.
//!
//! The generalized singular value function of `x` is the right-continuous
//! nonincreasing step function
//!
//! ```text
//!   mu_t(x) = inf { s > 0 : tau( 1_(s,inf)(|x|) ) <= t },
//! ```
//!
//! here realized exactly: the singular values of the blocks, repeated with
//! their trace weights as interval lengths.  Schatten, Lorentz and
//! K-functional quantities are closed-form integrals against this staircase.

use crate::element::{Element, PSD_TOL};
use crate::error::{Error, Result};
use crate::spectral::singular_values_weighted;

/// Nonincreasing staircase on `[0, t_K)`, zero beyond `t_K`.
///
/// `breakpoints[k]` is the right endpoint of the interval carrying
/// `values[k]`; the left endpoint of the first interval is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    /// Builds a staircase from `(value, width)` pairs, sorting by value
    /// descending and merging exactly-equal neighbors.
    pub fn from_weighted_values(pairs: &[(f64, f64)]) -> Self {
        let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
        sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut breakpoints = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut t = 0.0f64;
        for &(v, w) in &sorted {
            t += w;
            if let Some(last) = values.last() {
                if *last == v {
                    *breakpoints.last_mut().unwrap() = t;
                    continue;
                }
            }
            values.push(v);
            breakpoints.push(t);
        }
        StepFunction { breakpoints, values }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Right endpoint of the support, `tau` of the support projection.
    pub fn total_length(&self) -> f64 {
        self.breakpoints.last().copied().unwrap_or(0.0)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::NAN;
        }
        for (k, &bp) in self.breakpoints.iter().enumerate() {
            if t < bp {
                return self.values[k];
            }
        }
        0.0
    }

    /// `integral_0^t` of the staircase.
    pub fn integral_to(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut left = 0.0;
        for (k, &bp) in self.breakpoints.iter().enumerate() {
            let lo = left;
            let hi = bp.min(t);
            if hi > lo {
                acc += self.values[k] * (hi - lo);
            }
            left = bp;
            if bp >= t {
                break;
            }
        }
        acc
    }

    /// `integral_0^inf (t^{1/p} f(t))^q dt/t`, exact per interval.
    fn lorentz_integral(&self, p: f64, q: f64) -> f64 {
        let mut acc = 0.0;
        let mut left = 0.0f64;
        for (k, &bp) in self.breakpoints.iter().enumerate() {
            let v = self.values[k];
            if v > 0.0 {
                acc += v.powf(q) * (p / q) * (bp.powf(q / p) - left.powf(q / p));
            }
            left = bp;
        }
        acc
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(format!(
            "p = {p}; need p in [1, inf]"
        )));
    }
    Ok(())
}

/// Schatten norm `(tau |x|^p)^{1/p}`, operator norm at `p = inf`.
pub fn schatten_norm(x: &Element, p: f64) -> Result<f64> {
    check_p(p)?;
    let sv = singular_values_weighted(x);
    if p == f64::INFINITY {
        return Ok(sv.iter().map(|t| t.0).fold(0.0f64, f64::max));
    }
    let acc: f64 = sv.iter().map(|&(s, w)| w * s.powf(p)).sum();
    Ok(acc.powf(1.0 / p))
}

/// The singular value staircase of `x`; values at or below the relative
/// positivity tolerance are treated as zero, so the total length equals
/// `tau` of the support projection of `|x|`.
pub fn singular_value_function(x: &Element) -> StepFunction {
    let sv = singular_values_weighted(x);
    let max = sv.iter().map(|t| t.0).fold(0.0f64, f64::max);
    let tol = PSD_TOL * (1.0 + max);
    let kept: Vec<(f64, f64)> = sv.into_iter().filter(|&(s, _)| s > tol).collect();
    StepFunction::from_weighted_values(&kept)
}

/// Lorentz norm `||x||_{p,q}` for `p` in `(0, inf)`, `q` in `[1, inf]`.
///
/// `q < 1` is rejected: the quasi-norm range is outside this crate's contract.
pub fn lorentz_norm(x: &Element, p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(format!(
            "p = {p}; need p in (0, inf)"
        )));
    }
    if q.is_nan() || q < 1.0 {
        return Err(Error::InvalidExponent(format!(
            "q = {q}; need q in [1, inf]"
        )));
    }
    let mu = singular_value_function(x);
    if q == f64::INFINITY {
        let mut sup = 0.0f64;
        for (k, &bp) in mu.breakpoints().iter().enumerate() {
            sup = sup.max(bp.powf(1.0 / p) * mu.values()[k]);
        }
        return Ok(sup);
    }
    Ok(mu.lorentz_integral(p, q).powf(1.0 / q))
}

/// K-functional for the couple `(L_1, L_inf)`: `integral_0^t mu_s(x) ds`.
pub fn k_functional(x: &Element, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t}; need t >= 0")));
    }
    Ok(singular_value_function(x).integral_to(t))
}
