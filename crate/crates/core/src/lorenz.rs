//! Rescaled Lorenz curves and the Neyman–Pearson correspondence.
//!
//! The curve of `R` connects `(0, 0)` and the cumulative sums
//! `(G_m, R_m) = (Σ_{k≤m} g_{π(k)}, Σ_{k≤m} r_{π(k)})`, where `π` orders the
//! levels by non-increasing ratio `r_i / g_i`. It is concave, and `R` can be
//! converted into `S` by an equilibrating operation iff `L_R ≥ L_S`
//! pointwise.
//!
//! The same breakpoints give the optimal Type II error of the test
//! `r` vs `g`: at `ε_m = 1 - R_m` it is `b = G_m`, and between breakpoints
//! it interpolates linearly, `b = G_m + λ g_{π(m+1)}` with
//! `λ = (1 - ε - R_m) / r_{π(m+1)}`.

use crate::error::{Error, Result};
use crate::numeric::{ExtReal, KahanSum};
use crate::states::StatePair;

/// Default absolute slack on `L` values in dominance checks.
pub const DOMINANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceConfig {
    pub tol: f64,
}

impl Default for DominanceConfig {
    fn default() -> Self {
        DominanceConfig { tol: DOMINANCE_TOL }
    }
}

/// Piecewise linear rescaled Lorenz curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LorenzCurve {
    t: Vec<f64>,
    l: Vec<f64>,
    permutation: Vec<usize>,
    r_sorted: Vec<f64>,
    g_sorted: Vec<f64>,
}

fn ratio(r: f64, g: f64) -> f64 {
    if g > 0.0 {
        r / g
    } else if r > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

impl LorenzCurve {
    /// Builds the curve from parallel weight vectors. Ties in ratio keep
    /// their input order.
    pub fn from_weights(r: &[f64], g: &[f64]) -> Result<Self> {
        if r.len() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: r.len(),
                found: g.len(),
            });
        }
        let mut permutation: Vec<usize> = (0..r.len()).collect();
        permutation.sort_by(|&a, &b| ratio(r[b], g[b]).total_cmp(&ratio(r[a], g[a])));

        let d = r.len();
        let mut t = Vec::with_capacity(d + 1);
        let mut l = Vec::with_capacity(d + 1);
        let (mut tg, mut lr) = (KahanSum::default(), KahanSum::default());
        t.push(0.0);
        l.push(0.0);
        for &i in &permutation {
            tg.add(g[i]);
            lr.add(r[i]);
            t.push(tg.value());
            l.push(lr.value());
        }
        let r_sorted = permutation.iter().map(|&i| r[i]).collect();
        let g_sorted = permutation.iter().map(|&i| g[i]).collect();
        Ok(LorenzCurve {
            t,
            l,
            permutation,
            r_sorted,
            g_sorted,
        })
    }

    /// Breakpoints `(t_k, L_k)`, `k = 0..=d`.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.l.iter().copied())
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t
    }

    pub fn l_values(&self) -> &[f64] {
        &self.l
    }

    /// Sorting permutation `π` (position → original level index).
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Segment slopes `r_{π(k)} / g_{π(k)}`, non-increasing.
    pub fn slopes(&self) -> Vec<f64> {
        self.r_sorted
            .iter()
            .zip(&self.g_sorted)
            .map(|(&r, &g)| ratio(r, g))
            .collect()
    }

    /// `L(t)` for `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("Lorenz curve argument {t} is outside [0, 1]")));
        }
        Ok(self.eval_clamped(t))
    }

    fn eval_clamped(&self, t: f64) -> f64 {
        let idx = self.t.partition_point(|&x| x < t);
        if idx >= self.t.len() {
            return *self.l.last().unwrap();
        }
        if self.t[idx] == t || idx == 0 {
            // several breakpoints may share t when a g-weight underflowed;
            // the concave curve takes the highest of them
            let mut j = idx;
            while j + 1 < self.t.len() && self.t[j + 1] == self.t[idx] {
                j += 1;
            }
            return self.l[j];
        }
        let (t0, t1) = (self.t[idx - 1], self.t[idx]);
        let (l0, l1) = (self.l[idx - 1], self.l[idx]);
        l0 + (l1 - l0) * (t - t0) / (t1 - t0)
    }

    /// `L_self(t) ≥ L_other(t) - tol` on every breakpoint of either curve.
    pub fn dominates_with(&self, other: &LorenzCurve, config: DominanceConfig) -> bool {
        self.t
            .iter()
            .chain(other.t.iter())
            .map(|&t| t.clamp(0.0, 1.0))
            .all(|t| self.eval_clamped(t) >= other.eval_clamped(t) - config.tol)
    }

    pub fn dominates(&self, other: &LorenzCurve) -> bool {
        self.dominates_with(other, DominanceConfig::default())
    }

    /// Locates the segment holding `1 - eps`: returns `(m, λ)` with the
    /// optimal test equal to one on positions `< m` and `λ` on position `m`.
    pub(crate) fn segment(&self, eps: f64) -> (usize, f64) {
        let target = 1.0 - eps;
        if target <= 0.0 {
            return (0, 0.0);
        }
        // smallest k ≥ 1 with L_k ≥ target
        let k = self.l[1..].partition_point(|&x| x < target) + 1;
        if k < self.l.len() {
            let pos = k - 1;
            let lambda = ((target - self.l[pos]) / self.r_sorted[pos]).clamp(0.0, 1.0);
            (pos, lambda)
        } else {
            // cumulative r fell short of 1 by rounding: take the full support
            let pos = self.r_sorted.iter().rposition(|&x| x > 0.0).unwrap_or(0);
            (pos, 1.0)
        }
    }

    /// Optimal Type II error `b_ε` for `eps ∈ [0, 1]`.
    pub fn type2_error(&self, eps: f64) -> Result<f64> {
        check_unit(eps)?;
        let target = 1.0 - eps;
        if target <= 0.0 {
            return Ok(0.0);
        }
        let (pos, lambda) = self.segment(eps);
        Ok(self.t[pos] + lambda * self.g_sorted[pos])
    }

    /// `D_H^ε = -ln b_ε` for `eps ∈ [0, 1)`.
    pub fn dh_entropy(&self, eps: f64) -> Result<ExtReal> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::Domain(format!(
                "hypothesis-testing entropy needs eps in [0, 1), got {eps}"
            )));
        }
        Ok(ExtReal::neg_ln(self.type2_error(eps)?))
    }

    /// An optimal test attaining `b_ε`, in original level order.
    pub fn optimal_test(&self, eps: f64) -> Result<TestVector> {
        check_unit(eps)?;
        let mut q = vec![0.0; self.permutation.len()];
        if 1.0 - eps > 0.0 {
            let (pos, lambda) = self.segment(eps);
            for &i in &self.permutation[..pos] {
                q[i] = 1.0;
            }
            q[self.permutation[pos]] = lambda;
        }
        TestVector::new(q)
    }

    pub(crate) fn sorted_weights(&self) -> (&[f64], &[f64]) {
        (&self.r_sorted, &self.g_sorted)
    }
}

fn check_unit(eps: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps must lie in [0, 1], got {eps}")))
    }
}

/// Diagonal POVM element `Q` of a two-outcome test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestVector {
    q: Vec<f64>,
}

impl TestVector {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if let Some((i, x)) = q.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("test entry {i} = {x} is outside [0, 1]")));
        }
        Ok(TestVector { q })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    /// `Σ q_i v_i`.
    pub fn apply(&self, v: &[f64]) -> f64 {
        crate::numeric::accurate_sum(self.q.iter().zip(v).map(|(a, b)| a * b))
    }
}

/// Lorenz curve of a state (or of a typed i.i.d. power).
pub fn build_lorenz<S: StatePair + ?Sized>(state: &S) -> LorenzCurve {
    LorenzCurve::from_weights(state.r(), state.g()).expect("state vectors have equal length")
}

pub fn eval_lorenz(curve: &LorenzCurve, t: f64) -> Result<f64> {
    curve.eval(t)
}

pub fn dominates(a: &LorenzCurve, b: &LorenzCurve) -> bool {
    a.dominates(b)
}

/// Whether `r` equimajorizes `s`, i.e. an equilibrating operation maps one to the other.
pub fn equimajorizes<R: StatePair + ?Sized, S: StatePair + ?Sized>(r: &R, s: &S) -> Result<bool> {
    if r.theory() != s.theory() {
        return Err(Error::TheoryMismatch);
    }
    Ok(build_lorenz(r).dominates(&build_lorenz(s)))
}

pub fn type2_error<S: StatePair + ?Sized>(state: &S, eps: f64) -> Result<f64> {
    build_lorenz(state).type2_error(eps)
}

pub fn dh_entropy<S: StatePair + ?Sized>(state: &S, eps: f64) -> Result<ExtReal> {
    build_lorenz(state).dh_entropy(eps)
}

pub fn optimal_test<S: StatePair + ?Sized>(state: &S, eps: f64) -> Result<TestVector> {
    build_lorenz(state).optimal_test(eps)
}
