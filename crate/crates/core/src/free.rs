//! Structure of free states.
//!
//! A candidate free state is only consistent with the theory if it is
//! grand canonical. [`fit_gibbs`] detects that form from the probabilities
//! alone, [`uniform_eigensubspace_check`] tests the weaker necessary
//! condition (equal weight across each degenerate `(E, n)` sector), and
//! [`level_swap_step`] is the single degenerate-swap update that pumps a
//! resource against a non-Boltzmann free state.

use crate::error::{Error, Result};
use crate::numeric::accurate_sum;
use crate::states::QcState;

/// Result of a successful grand-canonical fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsFit {
    pub beta: f64,
    pub mu: f64,
    /// Max-norm of the log-space residual.
    pub max_residual: f64,
}

// Relative threshold below which a centered design column (or the pair) is
// treated as degenerate.
const RANK_TOL: f64 = 1e-10;

/// Least-squares fit of `ln r_i ≈ -beta E_i + alpha n_i + c`.
///
/// Returns `Ok(Some(fit))` with `mu = alpha / beta` when the residual
/// max-norm is at most `tol` and `beta > 0`, `Ok(None)` when the fit is
/// rejected, [`Error::NotFittable`] for zero probabilities and
/// [`Error::Underdetermined`] when the spectrum cannot pin down both
/// parameters.
pub fn fit_gibbs(state: &QcState, tol: f64) -> Result<Option<GibbsFit>> {
    let r = state.probs();
    if r.iter().any(|&p| p <= 0.0) {
        return Err(Error::NotFittable);
    }
    let d = r.len() as f64;
    let levels = state.spectrum().levels();
    let y: Vec<f64> = r.iter().map(|p| p.ln()).collect();
    let x1: Vec<f64> = levels.iter().map(|l| -l.energy).collect();
    let x2: Vec<f64> = levels.iter().map(|l| l.particles).collect();

    let mean = |v: &[f64]| accurate_sum(v.iter().copied()) / d;
    let (m1, m2, my) = (mean(&x1), mean(&x2), mean(&y));
    let a: Vec<f64> = x1.iter().map(|x| x - m1).collect();
    let c: Vec<f64> = x2.iter().map(|x| x - m2).collect();
    let yc: Vec<f64> = y.iter().map(|x| x - my).collect();
    let dot = |u: &[f64], v: &[f64]| accurate_sum(u.iter().zip(v).map(|(p, q)| p * q));

    let (saa, scc, sac) = (dot(&a, &a), dot(&c, &c), dot(&a, &c));
    let (say, scy) = (dot(&a, &yc), dot(&c, &yc));
    let scale_e = levels.iter().map(|l| l.energy.abs()).fold(1.0, f64::max);
    let scale_n = levels.iter().map(|l| l.particles.abs()).fold(1.0, f64::max);

    if saa.sqrt() <= RANK_TOL * scale_e * d.sqrt() {
        return Err(Error::Underdetermined(
            "all energies are equal, so beta is not identified".into(),
        ));
    }

    let residual = |beta: f64, alpha: f64| {
        (0..r.len())
            .map(|i| (yc[i] - beta * a[i] - alpha * c[i]).abs())
            .fold(0.0, f64::max)
    };

    let n_dependent = scc.sqrt() <= RANK_TOL * scale_n * d.sqrt()
        || (saa * scc - sac * sac) <= RANK_TOL * saa * scc;
    if n_dependent {
        // Only the energy direction is identified.
        let beta = say / saa;
        let res = residual(beta, 0.0);
        if !(beta > 0.0) || res > tol {
            return Ok(None);
        }
        return Err(Error::Underdetermined(
            "particle numbers are constant or collinear with energies, so mu is not identified"
                .into(),
        ));
    }

    let det = saa * scc - sac * sac;
    let beta = (scc * say - sac * scy) / det;
    let alpha = (saa * scy - sac * say) / det;
    let max_residual = residual(beta, alpha);
    if !(beta > 0.0) || max_residual > tol {
        return Ok(None);
    }
    Ok(Some(GibbsFit {
        beta,
        mu: alpha / beta,
        max_residual,
    }))
}

/// True iff all levels sharing an `(E, n)` sector carry equal weight within `tol`.
pub fn uniform_eigensubspace_check(state: &QcState, tol: f64) -> bool {
    let levels = state.spectrum().levels();
    let r = state.probs();
    for i in 0..levels.len() {
        for j in (i + 1)..levels.len() {
            if levels[i].same_sector(&levels[j]) && (r[i] - r[j]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// One degenerate-swap step between level 0 and level `j`.
///
/// `p1` and `pj` are the free state's weights on the two swapped composite
/// levels. Returns `r` with `r'_j = r_j + δ`, `r'_0 = r_0 - δ`,
/// `δ = r_0 p_j - r_j p_1`.
pub fn level_swap_step(r: &[f64], j: usize, p1: f64, pj: f64) -> Result<Vec<f64>> {
    if j == 0 || j >= r.len() {
        return Err(Error::Domain(format!(
            "swap partner index {j} must be in 1..{}",
            r.len()
        )));
    }
    if !(p1 >= 0.0 && pj >= 0.0 && p1 + pj <= 1.0) {
        return Err(Error::Domain(format!(
            "swap weights must be non-negative with p1 + pj <= 1, got ({p1}, {pj})"
        )));
    }
    let delta = r[0] * pj - r[j] * p1;
    let mut out = r.to_vec();
    out[0] -= delta;
    out[j] += delta;
    for &k in &[0, j] {
        if !(0.0..=1.0).contains(&out[k]) {
            return Err(Error::InfeasibleStep(format!(
                "entry {k} would become {}",
                out[k]
            )));
        }
    }
    Ok(out)
}

/// Repeats [`level_swap_step`] until `|δ| <= tol` or `max_steps` is hit.
/// Returns the final vector and the number of steps taken.
pub fn iterate_level_swap(
    r: &[f64],
    j: usize,
    p1: f64,
    pj: f64,
    tol: f64,
    max_steps: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut cur = r.to_vec();
    for step in 0..max_steps {
        let next = level_swap_step(&cur, j, p1, pj)?;
        let moved = (next[j] - cur[j]).abs();
        cur = next;
        if moved <= tol {
            return Ok((cur, step + 1));
        }
    }
    Ok((cur, max_steps))
}
