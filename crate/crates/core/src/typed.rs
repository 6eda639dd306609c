//! i.i.d. powers `R^{⊗n}` aggregated by type class.
//!
//! All sequences with the same multiset of outcomes share their `r`-weight
//! and `g`-weight, hence their ratio. Lorenz curves, Type II errors and
//! divergences of the product state depend only on `(weight, ratio)` pairs,
//! so one entry per class (with equal-ratio classes merged) is a lossless
//! representation for everything in this crate.

use crate::error::{Error, Result};
use crate::numeric::{accurate_sum, KahanSum};
use crate::states::{QcState, StatePair, TheoryParams};

/// Hard cap on the number of type classes [`iid_power`] will enumerate.
pub const MAX_TYPE_CLASSES: u64 = 10_000_000;

/// Aggregated representation of `R^{⊗n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedState {
    theory: TheoryParams,
    n: usize,
    r: Vec<f64>,
    g: Vec<f64>,
}

impl TypedState {
    pub fn copies(&self) -> usize {
        self.n
    }

    /// Number of (merged) entries.
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `(r-weight, g-weight)` per entry, in non-increasing ratio order.
    pub fn entries(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.r.iter().copied().zip(self.g.iter().copied())
    }
}

impl StatePair for TypedState {
    fn r(&self) -> &[f64] {
        &self.r
    }

    fn g(&self) -> &[f64] {
        &self.g
    }

    fn theory(&self) -> TheoryParams {
        self.theory
    }
}

/// `C(n + d - 1, d - 1)`, saturating at `u64::MAX`.
pub fn type_class_count(n: usize, d: usize) -> u64 {
    if d == 0 {
        return 0;
    }
    let k = (d - 1).min(n) as u128;
    let top = (n + d - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (top - i) / (i + 1);
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Advances `k` to the next weak composition of `n` into `k.len()` parts.
fn next_composition(k: &mut [usize]) -> bool {
    let d = k.len();
    if d <= 1 {
        return false;
    }
    // find the last non-zero among the first d-1 parts
    let last = k[d - 1];
    let Some(j) = (0..d - 1).rev().find(|&j| k[j] > 0) else {
        return false;
    };
    k[j] -= 1;
    k[d - 1] = 0;
    k[j + 1] = last + 1;
    true
}

/// `R^{⊗n}` as one entry per type class.
pub fn iid_power(state: &QcState, n: usize) -> Result<TypedState> {
    if n == 0 {
        return Err(Error::Domain("number of copies must be at least 1".into()));
    }
    let d = state.dim();
    let classes = type_class_count(n, d);
    if classes > MAX_TYPE_CLASSES {
        return Err(Error::ResourceLimit(format!(
            "{classes} type classes for n={n}, d={d} exceeds {MAX_TYPE_CLASSES}"
        )));
    }

    let mut ln_fact = Vec::with_capacity(n + 1);
    let mut acc = KahanSum::default();
    ln_fact.push(0.0);
    for i in 1..=n {
        acc.add((i as f64).ln());
        ln_fact.push(acc.value());
    }
    let ln_r: Vec<f64> = state.probs().iter().map(|p| p.ln()).collect();
    let ln_g: Vec<f64> = state.gibbs_weights().iter().map(|p| p.ln()).collect();

    // (ln ratio, ln r-weight, ln g-weight)
    let mut rows: Vec<(f64, f64, f64)> = Vec::with_capacity(classes as usize);
    let mut k = vec![0usize; d];
    k[0] = n;
    loop {
        let mut ln_mult = ln_fact[n];
        let mut lr = 0.0;
        let mut lg = 0.0;
        for (i, &ki) in k.iter().enumerate() {
            if ki == 0 {
                continue;
            }
            ln_mult -= ln_fact[ki];
            lr += ki as f64 * ln_r[i];
            lg += ki as f64 * ln_g[i];
        }
        rows.push((lr - lg, ln_mult + lr, ln_mult + lg));
        if !next_composition(&mut k) {
            break;
        }
    }

    rows.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut r = Vec::with_capacity(rows.len());
    let mut g = Vec::with_capacity(rows.len());
    let mut last_ratio = f64::NAN;
    for (lratio, lr, lg) in rows {
        let (rw, gw) = (lr.exp(), lg.exp());
        let merge = !r.is_empty()
            && (lratio == last_ratio
                || (lratio.is_finite()
                    && last_ratio.is_finite()
                    && (lratio - last_ratio).abs() <= 1e-12 * lratio.abs().max(1.0)));
        if merge {
            *r.last_mut().unwrap() += rw;
            *g.last_mut().unwrap() += gw;
        } else {
            r.push(rw);
            g.push(gw);
            last_ratio = lratio;
        }
    }

    let rt = accurate_sum(r.iter().copied());
    let gt = accurate_sum(g.iter().copied());
    for x in &mut r {
        *x /= rt;
    }
    for x in &mut g {
        *x /= gt;
    }

    Ok(TypedState {
        theory: state.theory(),
        n,
        r,
        g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::Spectrum;

    fn binary(p: f64) -> QcState {
        let th = TheoryParams::new(1.0, 0.0).unwrap();
        QcState::new(Spectrum::from_energies(&[0.0, 0.5]).unwrap(), vec![p, 1.0 - p], th).unwrap()
    }

    #[test]
    fn class_counts() {
        assert_eq!(type_class_count(2, 2), 3);
        assert_eq!(type_class_count(200, 4), 1_373_701);
        assert_eq!(type_class_count(5, 1), 1);
    }

    #[test]
    fn compositions_enumerated_once() {
        let mut k = vec![4, 0, 0];
        let mut seen = vec![k.clone()];
        while next_composition(&mut k) {
            assert_eq!(k.iter().sum::<usize>(), 4);
            seen.push(k.clone());
        }
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len() as u64, type_class_count(4, 3));
    }

    #[test]
    fn n_one_is_identity() {
        let s = binary(0.8);
        let t = iid_power(&s, 1).unwrap();
        assert_eq!(t.len(), 2);
        // ratio order: level 0 has ratio 0.8/g0
        let g = s.gibbs_weights();
        let mut expect = vec![(0.8, g[0]), (0.2, g[1])];
        expect.sort_by(|a, b| (b.0 / b.1).total_cmp(&(a.0 / a.1)));
        for ((r, gg), (er, eg)) in t.entries().zip(expect) {
            assert!((r - er).abs() < 1e-15 && (gg - eg).abs() < 1e-15);
        }
    }

    #[test]
    fn binomial_weights() {
        let p = 0.3;
        let t = iid_power(&binary(p), 2).unwrap();
        let mut rs: Vec<f64> = t.r().to_vec();
        rs.sort_by(f64::total_cmp);
        let mut expect = vec![p * p, 2.0 * p * (1.0 - p), (1.0 - p) * (1.0 - p)];
        expect.sort_by(f64::total_cmp);
        for (a, b) in rs.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_ratios_merge() {
        let th = TheoryParams::new(1.0, 0.0).unwrap();
        let g = QcState::gibbs(Spectrum::from_energies(&[0.0, 1.0, 2.0]).unwrap(), th).unwrap();
        let t = iid_power(&g, 6).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t.r()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn class_limit_enforced() {
        let th = TheoryParams::new(1.0, 0.0).unwrap();
        let s = QcState::gibbs(Spectrum::from_energies(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), th).unwrap();
        assert!(matches!(iid_power(&s, 1000), Err(Error::ResourceLimit(_))));
        assert!(iid_power(&s, 0).is_err());
    }

    #[test]
    fn zero_probability_levels() {
        let th = TheoryParams::new(1.0, 0.0).unwrap();
        let s = QcState::new(Spectrum::from_energies(&[0.0, 1.0, 2.0]).unwrap(), vec![0.6, 0.4, 0.0], th).unwrap();
        let t = iid_power(&s, 3).unwrap();
        assert!((t.r().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // every class touching level 2 has zero r-weight and lands in one merged tail entry
        assert_eq!(*t.r().last().unwrap(), 0.0);
        assert_eq!(t.r().iter().filter(|&&x| x == 0.0).count(), 1);
    }
}
