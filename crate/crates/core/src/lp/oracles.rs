//! Independent checks on the Lorenz-curve Type II error: exhaustive search
//! over threshold tests, and a dual certificate from the breakpoint recipe.

use crate::error::{Error, Result};
use crate::lorenz::build_lorenz;
use crate::numeric::accurate_sum;
use crate::states::StatePair;

/// Largest dimension accepted by [`bruteforce_type2_error`].
pub const BRUTEFORCE_MAX_DIM: usize = 14;

const EXACT_TOL: f64 = 1e-12;

/// Minimal `Q·g` over tests with `Q·r = 1 - eps`, searching every 0/1
/// pattern plus at most one fractional coordinate. Some optimal test has
/// that shape (it is a basic solution of a one-constraint LP), so the
/// search is exact.
pub fn bruteforce_type2_error<S: StatePair + ?Sized>(state: &S, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps must lie in [0, 1], got {eps}")));
    }
    let (r, g) = (state.r(), state.g());
    let d = r.len();
    if d > BRUTEFORCE_MAX_DIM {
        return Err(Error::ResourceLimit(format!(
            "brute-force search supports d ≤ {BRUTEFORCE_MAX_DIM}, got {d}"
        )));
    }
    let target = 1.0 - eps;
    if target <= 0.0 {
        return Ok(0.0);
    }
    let count = 1usize << d;
    let mut sr = vec![0.0; count];
    let mut sg = vec![0.0; count];
    let mut best = f64::INFINITY;
    for mask in 0..count {
        if mask > 0 {
            let low = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            sr[mask] = sr[rest] + r[low];
            sg[mask] = sg[rest] + g[low];
        }
        let (a, b) = (sr[mask], sg[mask]);
        if (a - target).abs() <= EXACT_TOL {
            best = best.min(b);
        }
        if a < target {
            for k in (0..d).filter(|&k| mask & (1 << k) == 0 && r[k] > 0.0) {
                let lambda = (target - a) / r[k];
                if lambda <= 1.0 + EXACT_TOL {
                    best = best.min(b + lambda.min(1.0) * g[k]);
                }
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Numerical("no test reaches the requested type-I error".into()))
    }
}

/// Dual pair `(μ, τ)` for `max (1-ε)μ - Σ τ_i` s.t. `μ r - g ≤ τ`, `μ, τ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub mu: f64,
    pub tau: Vec<f64>,
}

impl DualCertificate {
    /// Dual objective `(1-ε)μ - Σ τ_i`; a lower bound on `b_ε` when feasible.
    pub fn value(&self, eps: f64) -> f64 {
        (1.0 - eps) * self.mu - accurate_sum(self.tau.iter().copied())
    }

    pub fn is_feasible(&self, r: &[f64], g: &[f64], tol: f64) -> bool {
        self.mu >= 0.0
            && self.tau.len() == r.len()
            && self.tau.iter().all(|&t| t >= 0.0)
            && r.iter()
                .zip(g)
                .zip(&self.tau)
                .all(|((&ri, &gi), &ti)| self.mu * ri - gi <= ti + tol)
    }
}

/// Certificate built at the Lorenz segment containing `1 - eps`: `μ` is the
/// inverse slope of that segment and `τ` collects the excess `μ r - g` of
/// the levels before it. Its value equals `b_ε`.
pub fn dual_certificate<S: StatePair + ?Sized>(state: &S, eps: f64) -> Result<DualCertificate> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps must lie in [0, 1], got {eps}")));
    }
    let d = state.r().len();
    if 1.0 - eps <= 0.0 {
        return Ok(DualCertificate {
            mu: 0.0,
            tau: vec![0.0; d],
        });
    }
    let curve = build_lorenz(state);
    let (pos, _) = curve.segment(eps);
    let (rs, gs) = curve.sorted_weights();
    let mu = gs[pos] / rs[pos];
    let mut tau = vec![0.0; d];
    for (k, &i) in curve.permutation()[..pos].iter().enumerate() {
        tau[i] = (mu * rs[k] - gs[k]).max(0.0);
    }
    Ok(DualCertificate { mu, tau })
}
