//! Monotones: f-divergences against the Gibbs state, relative entropy and
//! its variance, Rényi and hinge divergences, and the grand potential.
//!
//! All of them are non-increasing under equilibrating operations. The hinge
//! family `f_a(t) = max(0, t - a)` is complete: it alone decides
//! convertibility.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{accurate_sum, log_sum_exp};
use crate::states::{QcState, StatePair};

/// Below this `V` is treated as rounding noise and clamped to zero.
pub const VARIANCE_NEG_TOL: f64 = 1e-12;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A convex `f` on `[0, ∞)` defining `φ_f(R) = Σ g_i f(r_i / g_i)`.
#[derive(Clone)]
pub enum ConvexFunction {
    /// `t ln t`, giving the relative entropy.
    XLogX,
    /// `-ln t`; infinite at `t = 0`.
    NegLog,
    /// `t^α` for `α > 1`, `-t^α` for `0 < α < 1`.
    Renyi(f64),
    /// `max(0, t - a)`.
    Hinge(f64),
    /// User-supplied function. `at_zero` is its limit at `0⁺`; convexity is
    /// taken on trust (see [`ConvexFunction::midpoint_violations`]).
    Custom { f: ScalarFn, at_zero: f64 },
}

impl fmt::Debug for ConvexFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexFunction::XLogX => f.write_str("XLogX"),
            ConvexFunction::NegLog => f.write_str("NegLog"),
            ConvexFunction::Renyi(a) => write!(f, "Renyi({a})"),
            ConvexFunction::Hinge(a) => write!(f, "Hinge({a})"),
            ConvexFunction::Custom { at_zero, .. } => write!(f, "Custom {{ at_zero: {at_zero} }}"),
        }
    }
}

impl ConvexFunction {
    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F, at_zero: f64) -> Self {
        ConvexFunction::Custom {
            f: Arc::new(f),
            at_zero,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ConvexFunction::XLogX => {
                if t == 0.0 {
                    0.0
                } else {
                    t * t.ln()
                }
            }
            ConvexFunction::NegLog => -t.ln(),
            ConvexFunction::Renyi(a) => {
                let p = t.powf(*a);
                if *a > 1.0 {
                    p
                } else {
                    -p
                }
            }
            ConvexFunction::Hinge(a) => (t - a).max(0.0),
            ConvexFunction::Custom { f, at_zero } => {
                if t == 0.0 {
                    *at_zero
                } else {
                    f(t)
                }
            }
        }
    }

    /// Counts midpoint-convexity failures `f((x+y)/2) > (f(x)+f(y))/2 + tol`
    /// over all pairs of an `n`-point grid on `[lo, hi]`. A diagnostic only.
    pub fn midpoint_violations(&self, lo: f64, hi: f64, n: usize, tol: f64) -> usize {
        let n = n.max(2);
        let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
        let mut bad = 0;
        for (i, &x) in grid.iter().enumerate() {
            for &y in &grid[i + 1..] {
                let mid = self.eval(0.5 * (x + y));
                if mid > 0.5 * (self.eval(x) + self.eval(y)) + tol {
                    bad += 1;
                }
            }
        }
        bad
    }
}

fn require_positive_g(g: &[f64]) -> Result<()> {
    if g.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("free-state weights must be strictly positive".into()));
    }
    Ok(())
}

/// `Σ g_i f(r_i / g_i)`.
pub fn f_divergence<S: StatePair + ?Sized>(state: &S, f: &ConvexFunction) -> Result<f64> {
    if let ConvexFunction::Renyi(a) = f {
        if !(*a > 0.0 && *a != 1.0) {
            return Err(Error::Domain(format!("Rényi generator needs α > 0, α ≠ 1, got {a}")));
        }
    }
    let (r, g) = (state.r(), state.g());
    require_positive_g(g)?;
    let mut terms = Vec::with_capacity(r.len());
    for (i, (&ri, &gi)) in r.iter().zip(g).enumerate() {
        let v = gi * f.eval(ri / gi);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("f-divergence term {i} is {v}")));
        }
        terms.push(v);
    }
    Ok(accurate_sum(terms))
}

/// `D(r‖g) = Σ_{r_i>0} r_i ln(r_i / g_i)`.
pub fn relative_entropy<S: StatePair + ?Sized>(state: &S) -> f64 {
    let d = accurate_sum(
        state
            .r()
            .iter()
            .zip(state.g())
            .filter(|(&r, _)| r > 0.0)
            .map(|(&r, &g)| r * (r.ln() - g.ln())),
    );
    d.max(0.0)
}

/// `D_α(r‖g) = ln(Σ r_i^α g_i^{1-α}) / (α - 1)`, natural log; non-negative.
pub fn renyi_divergence<S: StatePair + ?Sized>(state: &S, alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Err(Error::UseRelativeEntropy);
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("Rényi order must be finite and ≥ 0, got {alpha}")));
    }
    let (r, g) = (state.r(), state.g());
    require_positive_g(g)?;
    let logs: Vec<f64> = r
        .iter()
        .zip(g)
        .filter(|(&ri, _)| ri > 0.0)
        .map(|(&ri, &gi)| alpha * ri.ln() + (1.0 - alpha) * gi.ln())
        .collect();
    Ok(log_sum_exp(&logs) / (alpha - 1.0))
}

/// `Σ max(0, r_i - a g_i)`.
pub fn hinge_divergence<S: StatePair + ?Sized>(state: &S, a: f64) -> f64 {
    accurate_sum(state.r().iter().zip(state.g()).map(|(&r, &g)| (r - a * g).max(0.0)))
}

/// Relative entropy variance `V` and its square root `s`.
pub fn rel_entropy_variance<S: StatePair + ?Sized>(state: &S) -> Result<(f64, f64)> {
    let d = relative_entropy(state);
    let second = accurate_sum(
        state
            .r()
            .iter()
            .zip(state.g())
            .filter(|(&r, _)| r > 0.0)
            .map(|(&r, &g)| {
                let l = r.ln() - g.ln();
                r * l * l
            }),
    );
    let v = second - d * d;
    if v < -VARIANCE_NEG_TOL {
        return Err(Error::Numerical(format!("relative entropy variance is negative: {v}")));
    }
    let v = v.max(0.0);
    Ok((v, v.sqrt()))
}

/// `-Σ r_i ln r_i`.
pub fn shannon_entropy(r: &[f64]) -> f64 {
    -accurate_sum(r.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()))
}

/// `Φ(R) = ⟨E⟩ - S/β - μ⟨n⟩` (with `k_B = 1`).
pub fn grand_potential(state: &QcState) -> f64 {
    let th = state.theory();
    state.mean_energy() - shannon_entropy(state.probs()) / th.beta() - th.mu() * state.mean_particles()
}

/// `Φ(G) = -ln Z / β`.
pub fn equilibrium_grand_potential(state: &QcState) -> f64 {
    -state.log_z() / state.theory().beta()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{gibbs_state, Spectrum, TheoryParams};

    fn two_level(r: [f64; 2], beta: f64) -> QcState {
        QcState::new(
            Spectrum::from_energies(&[0.0, 1.0]).unwrap(),
            r.to_vec(),
            TheoryParams::new(beta, 0.0).unwrap(),
        )
        .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pure_second_level() {
        // g = (2/3, 1/3)
        let e2 = two_level([0.0, 1.0], 2f64.ln());
        let ln3 = 1.09861228866810969;
        assert!(close(f_divergence(&e2, &ConvexFunction::XLogX).unwrap(), ln3, 1e-15));
        assert!(close(relative_entropy(&e2), ln3, 1e-15));
        assert_eq!(rel_entropy_variance(&e2).unwrap().0, 0.0);
        assert!(f_divergence(&e2, &ConvexFunction::NegLog).is_err());
    }

    #[test]
    fn renyi_examples() {
        // beta = 0 is not allowed, so use a degenerate spectrum for g = (1/2, 1/2)
        let th = TheoryParams::new(1.0, 0.0).unwrap();
        let s = QcState::new(Spectrum::from_energies(&[0.0, 0.0]).unwrap(), vec![0.9, 0.1], th).unwrap();
        let d2 = renyi_divergence(&s, 2.0).unwrap();
        assert!(close(d2, 0.494696241836107054665, 1e-14), "{d2}");
        assert_eq!(renyi_divergence(&s, 1.0), Err(Error::UseRelativeEntropy));
        assert!(renyi_divergence(&s, -0.5).is_err());
        let part = two_level([1.0, 0.0], 1.0);
        let g0 = part.gibbs_weights()[0];
        assert!(close(renyi_divergence(&part, 0.0).unwrap(), -g0.ln(), 1e-15));
        let g = part.equilibrium();
        for a in [0.0, 0.5, 2.0, 7.0] {
            assert!(close(renyi_divergence(&g, a).unwrap(), 0.0, 1e-15));
        }
    }

    #[test]
    fn hinge_examples() {
        let s = two_level([0.3, 0.7], 0.8);
        assert!(close(hinge_divergence(&s, 0.0), 1.0, 1e-15));
        assert!(close(hinge_divergence(&s, -2.0), 3.0, 1e-15));
        let max_ratio = s.probs().iter().zip(s.gibbs_weights()).map(|(r, g)| r / g).fold(0.0, f64::max);
        assert_eq!(hinge_divergence(&s, max_ratio), 0.0);
        assert!(close(hinge_divergence(&s.equilibrium(), 1.0), 0.0, 1e-15));
        assert!(close(f_divergence(&s, &ConvexFunction::Hinge(0.0)).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn two_level_variance_closed_form() {
        let th = TheoryParams::new(0.6f64.ln() - 0.4f64.ln(), 0.0).unwrap();
        let s = QcState::new(Spectrum::from_energies(&[0.0, 1.0]).unwrap(), vec![0.3, 0.7], th).unwrap();
        // g = (0.6, 0.4)
        let (v, sd) = rel_entropy_variance(&s).unwrap();
        assert!(close(v, 0.329577161598998540914, 1e-14), "{v}");
        assert!(close(sd * sd, v, 1e-15));
    }

    #[test]
    fn shannon_examples() {
        assert!(close(shannon_entropy(&[0.25; 4]), 4f64.ln(), 1e-15));
        assert_eq!(shannon_entropy(&[1.0, 0.0]), 0.0);
        assert!(close(shannon_entropy(&[0.5, 0.25, 0.25]), 1.5 * 2f64.ln(), 1e-15));
    }

    #[test]
    fn grand_potential_gap_is_scaled_relative_entropy() {
        let th = TheoryParams::new(1.7, 0.3).unwrap();
        let sp = Spectrum::from_pairs(&[(0.0, 0.0), (0.5, 1.0), (1.2, 1.0), (2.0, 2.0)]).unwrap();
        let s = QcState::new(sp.clone(), vec![0.1, 0.4, 0.2, 0.3], th).unwrap();
        let gap = grand_potential(&s) - equilibrium_grand_potential(&s);
        assert!(close(gap, relative_entropy(&s) / 1.7, 1e-12));
        let g = gibbs_state(&sp, th).unwrap();
        assert!(close(grand_potential(&g), equilibrium_grand_potential(&g), 1e-12));
        let e = QcState::pure_level(sp, th, 2).unwrap();
        assert!(close(grand_potential(&e), 1.2 - 0.3, 1e-15));
    }

    #[test]
    fn convexity_diagnostic() {
        assert_eq!(ConvexFunction::XLogX.midpoint_violations(0.0, 5.0, 40, 1e-12), 0);
        assert_eq!(ConvexFunction::Renyi(0.5).midpoint_violations(0.0, 5.0, 40, 1e-12), 0);
        let concave = ConvexFunction::custom(|t: f64| t.sqrt(), 0.0);
        assert!(concave.midpoint_violations(0.0, 5.0, 40, 1e-12) > 0);
        assert!(f_divergence(&two_level([0.5, 0.5], 1.0), &ConvexFunction::custom(|_| f64::NAN, 0.0)).is_err());
    }
}
