//! Stochastic witness matrices for equimajorization.
//!
//! `R ≻ S` iff some column-stochastic `M` satisfies `M r = s` and
//! `M g_R = g_S`. That is a linear feasibility problem in the entries of
//! `M`, so the witness is found (or ruled out) by the simplex solver and
//! then checked independently. The solve is exact: Gibbs weights can span
//! fifteen decades, far beyond what a floating-point pivot tolerance can
//! resolve, and "no witness" should mean the LP really is infeasible.

use serde::{Deserialize, Serialize};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::simplex::exact_feasible_point;
use crate::error::{Error, Result};
use crate::numeric::accurate_sum;
use crate::states::QcState;

/// Tolerance used to accept a solver-produced witness.
pub const WITNESS_TOL: f64 = 1e-8;
/// Negative entries down to this value are rounding noise and clamped to 0.
pub const CLAMP_TOL: f64 = 1e-9;

/// A `rows × cols` matrix in row-major order (`rows = d_S`, `cols = d_R`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticWitness {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl StochasticWitness {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(StochasticWitness { rows, cols, data })
    }

    pub fn identity(d: usize) -> Self {
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = 1.0;
        }
        StochasticWitness { rows: d, cols: d, data }
    }

    /// Every column equal to `target` (the replacement map).
    pub fn replacement(target: &[f64], cols: usize) -> Self {
        let rows = target.len();
        let mut data = Vec::with_capacity(rows * cols);
        for &t in target {
            data.extend(std::iter::repeat(t).take(cols));
        }
        StochasticWitness { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `M v`; `v` must have length `cols`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| accurate_sum((0..self.cols).map(|j| self.get(i, j) * v[j])))
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| accurate_sum((0..self.rows).map(|i| self.get(i, j))))
            .collect()
    }
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Checks non-negativity, column sums, `M r = s` and `M g_R = g_S`, all
/// within `tol` in max-norm.
pub fn verify_witness(w: &StochasticWitness, r: &QcState, s: &QcState, tol: f64) -> bool {
    if w.cols != r.dim() || w.rows != s.dim() || w.data.len() != w.rows * w.cols {
        return false;
    }
    w.data.iter().all(|&x| x >= -tol && x <= 1.0 + tol)
        && w.column_sums().iter().all(|c| (c - 1.0).abs() <= tol)
        && max_dev(&w.apply(r.probs()), s.probs()) <= tol
        && max_dev(&w.apply(r.gibbs_weights()), s.gibbs_weights()) <= tol
}

/// Searches for a witness of `r ≻ s`.
///
/// `Ok(None)` means the LP was found infeasible. A solution that fails
/// [`verify_witness`] at [`WITNESS_TOL`] is reported as [`Error::Solver`].
pub fn find_witness(r: &QcState, s: &QcState) -> Result<Option<StochasticWitness>> {
    r.ensure_same_theory(s)?;
    let (dr, ds) = (r.dim(), s.dim());
    let nv = dr * ds;
    let idx = |i: usize, j: usize| i * dr + j;

    // Each vector is renormalized exactly: float normalization leaves sums
    // a few ulps off one, and column-stochasticity forces Σs = Σr exactly.
    let exact = |v: &[f64]| -> Vec<BigRational> {
        let v: Vec<BigRational> = v.iter().map(|&x| BigRational::from_float(x).unwrap_or_default()).collect();
        let total = v.iter().fold(BigRational::zero(), |acc, x| acc + x);
        v.into_iter().map(|x| x / &total).collect()
    };
    let (rp, rg) = (exact(r.probs()), exact(r.gibbs_weights()));
    let (sp, sg) = (exact(s.probs()), exact(s.gibbs_weights()));

    let zero = BigRational::zero();
    let mut rows = Vec::with_capacity(2 * ds + dr);
    for i in 0..ds {
        for (coef, rhs) in [(&rp, &sp[i]), (&rg, &sg[i])] {
            let mut row = vec![zero.clone(); nv];
            for j in 0..dr {
                row[idx(i, j)] = coef[j].clone();
            }
            rows.push((row, rhs.clone()));
        }
    }
    for j in 0..dr {
        let mut row = vec![zero.clone(); nv];
        for i in 0..ds {
            row[idx(i, j)] = BigRational::one();
        }
        rows.push((row, BigRational::one()));
    }

    let Some(x) = exact_feasible_point(nv, rows)? else {
        return Ok(None);
    };
    let x: Vec<f64> = x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    let data = x
        .into_iter()
        .map(|v| if (-CLAMP_TOL..0.0).contains(&v) { 0.0 } else { v })
        .collect();
    let w = StochasticWitness::new(ds, dr, data)?;
    if !verify_witness(&w, r, s, WITNESS_TOL) {
        return Err(Error::Solver(
            "solver returned a matrix that fails witness verification".into(),
        ));
    }
    Ok(Some(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{gibbs_state, Spectrum, TheoryParams};

    fn setup() -> (QcState, QcState) {
        let th = TheoryParams::new(1.0, 0.0).unwrap();
        let sp = Spectrum::from_energies(&[0.0, 1.0, 2.0]).unwrap();
        let r = QcState::new(sp.clone(), vec![0.1, 0.3, 0.6], th).unwrap();
        let s = QcState::new(sp, vec![0.632193, 0.255783, 0.112024], th).unwrap();
        (r, s)
    }

    #[test]
    fn identity_and_replacement_verify() {
        let (r, _) = setup();
        assert!(verify_witness(&StochasticWitness::identity(3), &r, &r, 1e-12));
        let g = r.equilibrium();
        let w = StochasticWitness::replacement(g.probs(), 3);
        assert!(verify_witness(&w, &r, &g, 1e-12));
    }

    #[test]
    fn solver_witnesses_verify() {
        let (r, s) = setup();
        let w = find_witness(&r, &r).unwrap().unwrap();
        assert!(verify_witness(&w, &r, &r, WITNESS_TOL));
        let w = find_witness(&r, &s).unwrap().unwrap();
        assert!(verify_witness(&w, &r, &s, WITNESS_TOL));
        assert!(find_witness(&s, &r).unwrap().is_none());
        let other = Spectrum::from_pairs(&[(0.3, 1.0), (1.5, 0.0)]).unwrap();
        let g = gibbs_state(&other, r.theory()).unwrap();
        let w = find_witness(&r, &g).unwrap().unwrap();
        assert_eq!((w.rows, w.cols), (2, 3));
    }

    #[test]
    fn perturbed_witness_fails() {
        let (r, _) = setup();
        let mut w = StochasticWitness::identity(3);
        w.data[1] += 1e-3;
        assert!(!verify_witness(&w, &r, &r, 1e-8));
    }

    #[test]
    fn json_round_trip() {
        let w = StochasticWitness::identity(2);
        let js = serde_json::to_string(&w).unwrap();
        assert_eq!(js, r#"{"rows":2,"cols":2,"data":[1.0,0.0,0.0,1.0]}"#);
        assert_eq!(serde_json::from_str::<StochasticWitness>(&js).unwrap(), w);
    }

    #[test]
    fn theory_mismatch() {
        let (r, _) = setup();
        let other = gibbs_state(r.spectrum(), TheoryParams::new(2.0, 0.0).unwrap()).unwrap();
        assert_eq!(find_witness(&r, &other), Err(Error::TheoryMismatch));
    }
}
