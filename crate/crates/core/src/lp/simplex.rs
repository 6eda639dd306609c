//! Dense two-phase simplex with Bland's rule.
//!
//! Small, dense and deterministic: good enough for witness matrices of a
//! few dozen variables, and easy to audit. Bland's rule rules out cycling,
//! so the iteration cap is only a guard against numerical trouble.
//!
//! The same tableau runs over `f64` ([`solve_lp`]) or over exact rationals
//! ([`solve_lp_exact`]). Floating point is fine for well-scaled data, but a
//! witness problem mixes Gibbs weights spanning many decades, and there a
//! 1e-9 pivot tolerance cannot tell a tiny coefficient from zero.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Pivot and feasibility tolerance (on row-scaled data).
pub const LP_TOL: f64 = 1e-9;
/// Hard cap on simplex pivots across both phases.
pub const MAX_ITERATIONS: usize = 1_000_000;
/// Hard cap on structural plus slack variables.
pub const MAX_VARIABLES: usize = 5000;

/// `min c·x` subject to `A_eq x = b_eq`, `A_ub x ≤ b_ub`, `lower ≤ x ≤ upper`.
///
/// Empty `lower` means all zeros and empty `upper` means unbounded above.
/// Lower bounds must be finite; `upper` entries may be `f64::INFINITY`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(c: Vec<f64>) -> Self {
        LpProblem {
            c,
            ..Default::default()
        }
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self
    }

    pub fn ub(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
        self
    }

    pub fn bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.c.len();
        let mismatch = |expected: usize, found: usize| Err(Error::DimensionMismatch { expected, found });
        if self.a_eq.len() != self.b_eq.len() {
            return mismatch(self.a_eq.len(), self.b_eq.len());
        }
        if self.a_ub.len() != self.b_ub.len() {
            return mismatch(self.a_ub.len(), self.b_ub.len());
        }
        for row in self.a_eq.iter().chain(&self.a_ub) {
            if row.len() != n {
                return mismatch(n, row.len());
            }
        }
        for v in [&self.lower, &self.upper] {
            if !v.is_empty() && v.len() != n {
                return mismatch(n, v.len());
            }
        }
        let finite = self
            .c
            .iter()
            .chain(self.b_eq.iter())
            .chain(self.b_ub.iter())
            .chain(self.a_eq.iter().flatten())
            .chain(self.a_ub.iter().flatten())
            .chain(self.lower.iter())
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite("LP data and lower bounds must be finite".into()));
        }
        for j in 0..n {
            let (l, u) = (self.lower_of(j), self.upper_of(j));
            if u.is_nan() || u < l {
                return Err(Error::Domain(format!("bounds of x{j} are empty: [{l}, {u}]")));
            }
        }
        Ok(())
    }

    fn lower_of(&self, j: usize) -> f64 {
        self.lower.get(j).copied().unwrap_or(0.0)
    }

    fn upper_of(&self, j: usize) -> f64 {
        self.upper.get(j).copied().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

/// Field operations the tableau needs. `f64` compares against [`LP_TOL`];
/// exact rationals compare against zero.
trait Scalar: Clone + PartialOrd {
    /// Whether rows are rescaled to unit max-norm first. Only helps floats.
    const SCALE_ROWS: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    /// Greater than the tolerance.
    fn positive(&self) -> bool;
    /// Below minus the tolerance.
    fn negative(&self) -> bool;
    fn abs(&self) -> Self;
    fn sub_mul(&mut self, f: &Self, q: &Self);
    fn div_by(&mut self, p: &Self);
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn add(&self, o: &Self) -> Self;
}

impl Scalar for f64 {
    const SCALE_ROWS: bool = true;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn positive(&self) -> bool {
        *self > LP_TOL
    }
    fn negative(&self) -> bool {
        *self < -LP_TOL
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sub_mul(&mut self, f: &Self, q: &Self) {
        *self -= f * q;
    }
    fn div_by(&mut self, p: &Self) {
        *self /= p;
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
}

impl Scalar for BigRational {
    const SCALE_ROWS: bool = false;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("LP data is validated finite")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn sub_mul(&mut self, f: &Self, q: &Self) {
        *self -= f * q;
    }
    fn div_by(&mut self, p: &Self) {
        *self /= p;
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
}

struct Tableau<T> {
    rows: usize,
    cols: usize, // excluding rhs
    data: Vec<T>,
    basis: Vec<usize>,
    iterations: usize,
}

impl<T: Scalar> Tableau<T> {
    fn at(&self, i: usize, j: usize) -> &T {
        &self.data[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> &T {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, obj: &mut [T], r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.at(r, c).clone();
        for v in &mut self.data[r * w..(r + 1) * w] {
            v.div_by(&p);
        }
        let prow: Vec<T> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.at(i, c).clone();
            if !f.is_zero() {
                for (v, q) in self.data[i * w..(i + 1) * w].iter_mut().zip(&prow) {
                    if !q.is_zero() {
                        v.sub_mul(&f, q);
                    }
                }
            }
        }
        let f = obj[c].clone();
        if !f.is_zero() {
            for (v, q) in obj.iter_mut().zip(&prow) {
                if !q.is_zero() {
                    v.sub_mul(&f, q);
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs Bland's rule on `obj` over entering columns `< allowed`.
    /// Returns `Ok(false)` when unbounded.
    fn optimize(&mut self, obj: &mut [T], allowed: usize) -> Result<bool> {
        loop {
            let Some(enter) = (0..allowed).find(|&j| obj[j].negative()) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows {
                let a = self.at(i, enter);
                if a.positive() {
                    let rhs = if self.rhs(i) < &T::zero() {
                        T::zero()
                    } else {
                        self.rhs(i).clone()
                    };
                    let ratio = rhs.div(a);
                    let better = match &leave {
                        None => true,
                        Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.iterations += 1;
            if self.iterations > MAX_ITERATIONS {
                return Err(Error::Solver(format!(
                    "simplex exceeded {MAX_ITERATIONS} iterations"
                )));
            }
            self.pivot(obj, r, enter);
        }
    }
}

/// Solves `problem` in floating point with the [`LP_TOL`] tolerances.
/// Deterministic for a given input.
pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome> {
    solve_with::<f64>(problem)
}

/// Solves `problem` in exact rational arithmetic: every input float is
/// taken at its exact value, so "infeasible" is a certificate rather than a
/// tolerance call. Slower, and meant for small, badly scaled problems.
/// The returned point is rounded to the nearest floats.
pub fn solve_lp_exact(problem: &LpProblem) -> Result<LpOutcome> {
    solve_with::<BigRational>(problem)
}

fn solve_with<T: Scalar>(problem: &LpProblem) -> Result<LpOutcome> {
    problem.validate()?;
    let n = problem.c.len();
    let lower: Vec<T> = (0..n).map(|j| T::from_f64(problem.lower_of(j))).collect();

    // Rows over shifted variables y = x - lower, each with an optional slack.
    let conv = |a: &[f64]| a.iter().map(|&v| T::from_f64(v)).collect::<Vec<T>>();
    let shift = |a: &[T], b: f64| {
        let mut rhs = T::from_f64(b);
        for (p, q) in a.iter().zip(&lower) {
            rhs.sub_mul(p, q);
        }
        rhs
    };
    let mut rows: Vec<(Vec<T>, T, bool)> = Vec::new();
    for (a, &b) in problem.a_eq.iter().zip(&problem.b_eq) {
        let a = conv(a);
        let rhs = shift(&a, b);
        rows.push((a, rhs, false));
    }
    for (a, &b) in problem.a_ub.iter().zip(&problem.b_ub) {
        let a = conv(a);
        let rhs = shift(&a, b);
        rows.push((a, rhs, true));
    }
    for j in 0..n {
        let u = problem.upper_of(j);
        if u.is_finite() {
            let mut a = vec![T::zero(); n];
            a[j] = T::one();
            rows.push((a, T::from_f64(u).add(&lower[j].neg()), true));
        }
    }
    let c: Vec<T> = problem.c.iter().map(|&v| T::from_f64(v)).collect();
    Ok(match solve_rows(c, rows)? {
        Solved::Optimal(y) => {
            let x: Vec<f64> = y.iter().zip(&lower).map(|(y, l)| y.add(l).to_f64()).collect();
            let value = problem.c.iter().zip(&x).map(|(c, x)| c * x).sum();
            LpOutcome::Optimal { x, value }
        }
        Solved::Infeasible => LpOutcome::Infeasible,
        Solved::Unbounded => LpOutcome::Unbounded,
    })
}

enum Solved<T> {
    Optimal(Vec<T>),
    Infeasible,
    Unbounded,
}

/// Exact feasibility of `A y = b, y ≥ 0`; `Some(y)` is a feasible point.
pub(crate) fn exact_feasible_point(
    n: usize,
    rows: Vec<(Vec<BigRational>, BigRational)>,
) -> Result<Option<Vec<BigRational>>> {
    let rows = rows.into_iter().map(|(a, b)| (a, b, false)).collect();
    Ok(match solve_rows(vec![<BigRational as Zero>::zero(); n], rows)? {
        Solved::Optimal(y) => Some(y),
        _ => None,
    })
}

/// Minimizes `c·y` over `y ≥ 0` subject to `rows`, where a row flagged
/// `true` is `a·y ≤ b` and gets a slack.
fn solve_rows<T: Scalar>(c: Vec<T>, rows: Vec<(Vec<T>, T, bool)>) -> Result<Solved<T>> {
    let n = c.len();
    let slacks = rows.iter().filter(|r| r.2).count();
    let nv = n + slacks;
    if nv > MAX_VARIABLES {
        return Err(Error::ResourceLimit(format!(
            "LP has {nv} variables, limit is {MAX_VARIABLES}"
        )));
    }

    // Optionally scale rows to unit max-norm; make every rhs non-negative;
    // drop empty rows (or detect 0 = b ≠ 0).
    let mut scaled: Vec<(Vec<T>, T)> = Vec::with_capacity(rows.len());
    let mut slack_idx = n;
    for (a, b, has_slack) in rows {
        let mut full = a;
        full.resize(nv, T::zero());
        if has_slack {
            full[slack_idx] = T::one();
            slack_idx += 1;
        }
        let norm = full.iter().fold(T::zero(), |m, v| {
            let v = v.abs();
            if v > m {
                v
            } else {
                m
            }
        });
        if norm.is_zero() {
            if b.positive() || b.negative() {
                return Ok(Solved::Infeasible);
            }
            continue;
        }
        let mut f = if T::SCALE_ROWS { T::one().div(&norm) } else { T::one() };
        if b < T::zero() {
            f = f.neg();
        }
        scaled.push((full.iter().map(|v| v.mul(&f)).collect(), b.mul(&f)));
    }

    let m = scaled.len();
    let cols = nv + m;
    let mut data = Vec::with_capacity(m * (cols + 1));
    for (i, (a, b)) in scaled.into_iter().enumerate() {
        data.extend(a);
        data.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
        data.push(b);
    }
    let mut t = Tableau {
        rows: m,
        cols,
        data,
        basis: (nv..nv + m).collect(),
        iterations: 0,
    };

    // Phase 1: minimize the sum of artificials.
    let mut w = vec![T::zero(); cols + 1];
    for i in 0..m {
        for j in (0..nv).chain([cols]) {
            let v = t.at(i, j).clone();
            w[j] = w[j].add(&v.neg());
        }
    }
    t.optimize(&mut w, nv)?;
    if w[cols].negative() {
        return Ok(Solved::Infeasible);
    }

    // Drive remaining artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.rows {
        if t.basis[i] >= nv {
            let mut best: Option<(usize, T)> = None;
            for j in 0..nv {
                let a = t.at(i, j).abs();
                if a.positive() && best.as_ref().map_or(true, |(_, b)| a > *b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                t.pivot(&mut w, i, j);
                i += 1;
            } else {
                let width = t.cols + 1;
                t.data.drain(i * width..(i + 1) * width);
                t.basis.remove(i);
                t.rows -= 1;
            }
        } else {
            i += 1;
        }
    }

    // Phase 2.
    let mut z = c.clone();
    z.resize(cols + 1, T::zero());
    for i in 0..t.rows {
        let b = t.basis[i];
        if b < n && !c[b].is_zero() {
            let w = t.cols + 1;
            for (v, q) in z.iter_mut().zip(&t.data[i * w..(i + 1) * w]) {
                v.sub_mul(&c[b], q);
            }
        }
    }
    if !t.optimize(&mut z, nv)? {
        return Ok(Solved::Unbounded);
    }

    let mut y = vec![T::zero(); n];
    for i in 0..t.rows {
        let j = t.basis[i];
        if j < n && t.rhs(i) > &T::zero() {
            y[j] = t.rhs(i).clone();
        }
    }
    Ok(Solved::Optimal(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(p: &LpProblem) -> (Vec<f64>, f64) {
        match solve_lp(p).unwrap() {
            LpOutcome::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn one_variable_bounds() {
        let p = LpProblem::new(vec![1.0]).bounds(vec![3.0], vec![10.0]);
        let (x, v) = optimal(&p);
        assert!((x[0] - 3.0).abs() < 1e-12 && (v - 3.0).abs() < 1e-12);
        // same thing through explicit rows
        let p = LpProblem::new(vec![1.0]).ub(vec![-1.0], -3.0).ub(vec![1.0], 10.0);
        assert!((optimal(&p).0[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = LpProblem::new(vec![0.0]).ub(vec![-1.0], -1.0).ub(vec![1.0], 0.0);
        assert_eq!(solve_lp(&p).unwrap(), LpOutcome::Infeasible);
        let p = LpProblem::new(vec![-1.0, 0.0]).ub(vec![-1.0, 1.0], 1.0);
        assert_eq!(solve_lp(&p).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn transportation_toy() {
        // supplies (3, 5), demands (4, 4), costs [[1, 3], [2, 1]]
        let p = LpProblem::new(vec![1.0, 3.0, 2.0, 1.0])
            .eq(vec![1.0, 1.0, 0.0, 0.0], 3.0)
            .eq(vec![0.0, 0.0, 1.0, 1.0], 5.0)
            .eq(vec![1.0, 0.0, 1.0, 0.0], 4.0)
            .eq(vec![0.0, 1.0, 0.0, 1.0], 4.0);
        let (x, v) = optimal(&p);
        for (a, b) in x.iter().zip([3.0, 0.0, 1.0, 4.0]) {
            assert!((a - b).abs() < 1e-9, "{x:?}");
        }
        assert!((v - 9.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let p = LpProblem::new(vec![1.0, 2.0])
            .eq(vec![1.0, 1.0], 1.0)
            .eq(vec![2.0, 2.0], 2.0);
        let (x, v) = optimal(&p);
        assert!((x[0] - 1.0).abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook rule; Bland terminates.
        let p = LpProblem::new(vec![-0.75, 150.0, -0.02, 6.0])
            .ub(vec![0.25, -60.0, -0.04, 9.0], 0.0)
            .ub(vec![0.5, -90.0, -0.02, 3.0], 0.0)
            .ub(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let (_, v) = optimal(&p);
        assert!((v + 0.05).abs() < 1e-9, "{v}");
    }

    #[test]
    fn malformed_input() {
        let p = LpProblem::new(vec![1.0, 1.0]).eq(vec![1.0], 1.0);
        assert!(matches!(solve_lp(&p), Err(Error::DimensionMismatch { .. })));
        let p = LpProblem::new(vec![1.0]).bounds(vec![2.0], vec![1.0]);
        assert!(matches!(solve_lp(&p), Err(Error::Domain(_))));
        let p = LpProblem::new(vec![0.0; MAX_VARIABLES + 1]);
        assert!(matches!(solve_lp(&p), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn shifted_lower_bounds() {
        let p = LpProblem::new(vec![1.0, 1.0])
            .eq(vec![1.0, 1.0], 0.5)
            .bounds(vec![-1.0, -2.0], vec![f64::INFINITY, f64::INFINITY]);
        let (x, v) = optimal(&p);
        assert!((v - 0.5).abs() < 1e-12);
        assert!(x[0] >= -1.0 - 1e-12 && x[1] >= -2.0 - 1e-12);
    }

    #[test]
    fn exact_matches_float_on_small_problems() {
        let transport = LpProblem::new(vec![1.0, 3.0, 2.0, 1.0])
            .eq(vec![1.0, 1.0, 0.0, 0.0], 3.0)
            .eq(vec![0.0, 0.0, 1.0, 1.0], 5.0)
            .eq(vec![1.0, 0.0, 1.0, 0.0], 4.0)
            .eq(vec![0.0, 1.0, 0.0, 1.0], 4.0);
        assert_eq!(
            solve_lp_exact(&transport).unwrap(),
            LpOutcome::Optimal { x: vec![3.0, 0.0, 1.0, 4.0], value: 9.0 }
        );
        let beale = LpProblem::new(vec![-0.75, 150.0, -0.02, 6.0])
            .ub(vec![0.25, -60.0, -0.04, 9.0], 0.0)
            .ub(vec![0.5, -90.0, -0.02, 3.0], 0.0)
            .ub(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        match solve_lp_exact(&beale).unwrap() {
            LpOutcome::Optimal { value, .. } => assert!((value + 0.05).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        let p = LpProblem::new(vec![0.0]).ub(vec![-1.0], -1.0).ub(vec![1.0], 0.0);
        assert_eq!(solve_lp_exact(&p).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn exact_resolves_what_the_tolerance_hides() {
        // x = 1e-12 exactly is forced; with 1e-9 tolerances the float
        // solver may not separate it from x = 0, the exact one must
        let p = LpProblem::new(vec![0.0]).eq(vec![1.0], 1e-12).ub(vec![-1.0], -2e-12);
        assert_eq!(solve_lp_exact(&p).unwrap(), LpOutcome::Infeasible);
        let p = LpProblem::new(vec![1.0, 0.0]).eq(vec![1e-12, 1.0], 1.0).bounds(vec![], vec![f64::INFINITY, 0.5]);
        match solve_lp_exact(&p).unwrap() {
            LpOutcome::Optimal { x, .. } => assert_eq!(x, vec![5e11, 0.5]),
            other => panic!("{other:?}"),
        }
    }
}
