//! Many-copy behaviour: the AEP for `D_H^ε`, its normal approximation
//! `nD + √n s Φ⁻¹(ε) + O(ln n)`, and the resulting `√n` gap between
//! extractable work and formation cost.
//!
//! Exact values for `R^{⊗n}` come from the type-class representation in
//! [`crate::typed`]; sweeps over `n` run in parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergences::{rel_entropy_variance, relative_entropy};
use crate::error::{Error, Result};
use crate::lorenz::build_lorenz;
use crate::numeric::ExtReal;
use crate::states::QcState;
use crate::typed::{iid_power, type_class_count};
use crate::work::work_cost_bounds;

/// Largest type-class count for which exact product values are computed
/// (covers `d = 4` up to `n = 200`).
pub const EXACT_CLASS_LIMIT: u64 = 1_400_000;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal CDF.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal quantile `Φ⁻¹(p)`, `p ∈ (0, 1)`.
///
/// Acklam's rational approximation (relative error ~1e-9) followed by one
/// Newton step against `erfc`. The upper half is mirrored from the lower
/// half, so `Φ⁻¹(p) = -Φ⁻¹(1-p)` holds exactly.
pub fn inv_gaussian_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile needs p in (0, 1), got {p}")));
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    if p == 0.5 {
        return 0.0;
    }
    let x = if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = gaussian_cdf(x) - p;
    x - e * SQRT_2PI * (0.5 * x * x).exp()
}

/// `D_H^ε(r^{⊗n}‖g^{⊗n})` against its normal approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderExpansion {
    pub n: usize,
    pub eps: f64,
    /// `n D(r‖g)`.
    pub leading: f64,
    /// `√n s Φ⁻¹(ε)`.
    pub correction: f64,
    /// Exact value; `None` when the type-class count exceeds [`EXACT_CLASS_LIMIT`].
    pub exact: Option<ExtReal>,
    /// `exact - leading - correction`, when finite.
    pub residual: Option<f64>,
}

impl SecondOrderExpansion {
    pub fn approximation(&self) -> f64 {
        self.leading + self.correction
    }
}

fn check_open_unit(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")))
    }
}

/// Exact `D_H^ε` of the `n`-fold power, if the type-class count allows it.
pub fn exact_power_dh(state: &QcState, n: usize, eps: f64) -> Result<Option<ExtReal>> {
    if n == 0 {
        return Err(Error::Domain("number of copies must be at least 1".into()));
    }
    if type_class_count(n, state.dim()) > EXACT_CLASS_LIMIT {
        return Ok(None);
    }
    let typed = iid_power(state, n)?;
    Ok(Some(build_lorenz(&typed).dh_entropy(eps)?))
}

pub fn normal_approx_dh(state: &QcState, n: usize, eps: f64) -> Result<SecondOrderExpansion> {
    check_open_unit(eps)?;
    let d = relative_entropy(state);
    let (_, s) = rel_entropy_variance(state)?;
    let leading = n as f64 * d;
    let correction = (n as f64).sqrt() * s * inv_gaussian_cdf(eps)?;
    let exact = exact_power_dh(state, n, eps)?;
    let residual = exact.and_then(|e| e.finite()).map(|e| e - leading - correction);
    Ok(SecondOrderExpansion {
        n,
        eps,
        leading,
        correction,
        exact,
        residual,
    })
}

/// [`normal_approx_dh`] for every `n` in `ns`, computed in parallel and
/// returned in input order.
pub fn second_order_sweep(state: &QcState, eps: f64, ns: &[usize]) -> Result<Vec<SecondOrderExpansion>> {
    ns.par_iter().map(|&n| normal_approx_dh(state, n, eps)).collect()
}

/// `(n, D_H^ε(r^{⊗n}‖g^{⊗n}) / n)` for each `n` in `ns` (ascending), stopping
/// before the first `n` whose type-class count is too large.
pub fn aep_check(state: &QcState, eps: f64, ns: &[usize]) -> Result<Vec<(usize, f64)>> {
    check_open_unit(eps)?;
    let mut ns: Vec<usize> = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let cut = ns
        .iter()
        .position(|&n| type_class_count(n, state.dim()) > EXACT_CLASS_LIMIT)
        .unwrap_or(ns.len());
    ns.truncate(cut);
    ns.par_iter()
        .map(|&n| match exact_power_dh(state, n, eps)? {
            Some(ExtReal::Finite(v)) => Ok((n, v / n as f64)),
            Some(ExtReal::Infinite) => Err(Error::Domain(
                "hypothesis-testing entropy is infinite for this state".into(),
            )),
            None => unreachable!("class count checked above"),
        })
        .collect()
}

/// Heuristic envelope `(s |Φ⁻¹(ε)| + 1) / √n` for the AEP gap.
pub fn aep_envelope(state: &QcState, eps: f64, n: usize) -> Result<f64> {
    let (_, s) = rel_entropy_variance(state)?;
    Ok((s * inv_gaussian_cdf(eps)?.abs() + 1.0) / (n as f64).sqrt())
}

/// Least-squares limit `L` of `y_n ≈ L + a/√n + c ln(n)/n`.
///
/// The two correction terms are the shapes of the second-order term and
/// the logarithmic remainder after dividing by `n`.
pub fn extrapolate_limit(points: &[(usize, f64)]) -> Result<f64> {
    let mut distinct: Vec<usize> = points.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 || distinct[0] == 0 {
        return Err(Error::Domain(
            "extrapolation needs at least three distinct positive n".into(),
        ));
    }
    let mut ata = [[0.0f64; 3]; 3];
    let mut aty = [0.0f64; 3];
    for &(n, y) in points {
        let nf = n as f64;
        let row = [1.0, 1.0 / nf.sqrt(), nf.ln() / nf];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let sol = solve3(ata, aty).ok_or_else(|| Error::Numerical("singular extrapolation system".into()))?;
    Ok(sol[0])
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Normalized one-shot gaps of the `n`-fold power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderGaps {
    pub n: usize,
    /// `(nD/β - W_gain) / √n`.
    pub gain_gap: f64,
    /// `(W_cost lower bound - nD/β) / √n`.
    pub cost_gap_lower: f64,
    /// `(W_cost upper bound - nD/β) / √n`.
    pub cost_gap_upper: f64,
    /// `s Φ⁻¹(1-ε) / β`, the common large-`n` value.
    pub limit: f64,
}

pub fn second_order_gaps(state: &QcState, eps: f64, n: usize) -> Result<SecondOrderGaps> {
    check_open_unit(eps)?;
    if n == 0 {
        return Err(Error::Domain("number of copies must be at least 1".into()));
    }
    let classes = type_class_count(n, state.dim());
    if classes > EXACT_CLASS_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "{classes} type classes exceed the exact-computation limit {EXACT_CLASS_LIMIT}"
        )));
    }
    let beta = state.theory().beta();
    let typed = iid_power(state, n)?;
    let curve = build_lorenz(&typed);
    let gain = match curve.dh_entropy(eps)? {
        ExtReal::Finite(v) => v / beta,
        ExtReal::Infinite => return Err(Error::Domain("work gain is infinite".into())),
    };
    let cost = work_cost_bounds(&typed, eps)?;
    let asym = n as f64 * relative_entropy(state) / beta;
    let rt = (n as f64).sqrt();
    let (_, s) = rel_entropy_variance(state)?;
    Ok(SecondOrderGaps {
        n,
        gain_gap: (asym - gain) / rt,
        cost_gap_lower: (cost.lower - asym) / rt,
        cost_gap_upper: (cost.upper - asym) / rt,
        limit: s * inv_gaussian_cdf(1.0 - eps)? / beta,
    })
}
