//! One-shot work: what can be stored in a battery from a state, what it
//! costs to make one, and the explicit maps that realize those numbers.
//!
//! Batteries are systems held on a single level `e_E`; work is the shift of
//! that level. All work values are in units of `1/β` times nats, i.e. the
//! energy unit of the spectrum.

use serde::{Deserialize, Serialize};

use crate::divergences::{hinge_divergence, relative_entropy};
use crate::error::{Error, Result};
use crate::lorenz::{build_lorenz, equimajorizes};
use crate::lp::{dual_certificate, StochasticWitness};
use crate::numeric::ExtReal;
use crate::states::{compose, trace_distance, EnergyLevel, QcState, Spectrum, StatePair, SECTOR_TOL};

/// Slack allowed in the formation condition `K(e^{βW}) = 0`.
pub const FORMATION_TOL: f64 = 1e-12;
/// A relative entropy at or below this counts as equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-14;

const UNITS_NOTE: &str = "energy units of 1/beta unless beta carries units";

/// ε-work yield, cost bounds and the asymptotic rate of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkReport {
    pub eps: f64,
    pub w_gain: ExtReal,
    pub w_cost_lower: f64,
    pub w_cost_upper: f64,
    /// `D(r‖g)/β`, the work per copy in the many-copy limit.
    pub asymptotic_rate: f64,
    pub units: String,
}

/// `D_H^ε(r‖g)/β`; infinite when some test has zero Type II error.
pub fn work_gain(state: &QcState, eps: f64) -> Result<ExtReal> {
    Ok(build_lorenz(state).dh_entropy(eps)?.scale(1.0 / state.theory().beta()))
}

/// Lower and upper bound on the ε-work cost of forming a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Bounds on the work cost, `eps ∈ (0, 1)`.
///
/// Upper: `[D_H^{1-ε} - ln((1-ε)/ε)] / β`.
/// Lower: `max_{δ ∈ (0, 1-ε]} [ln δ - ln b_{1-ε-δ}] / β`, evaluated exactly.
/// On a segment where `b = a + cδ` with `a > 0` the objective increases in
/// `δ`, so only segment right ends (`ε + δ` a Lorenz breakpoint) and
/// `δ = 1 - ε` need to be checked.
pub fn work_cost_bounds<S: StatePair + ?Sized>(state: &S, eps: f64) -> Result<CostBounds> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("work cost needs eps in (0, 1), got {eps}")));
    }
    let beta = state.theory().beta();
    let curve = build_lorenz(state);

    let b_upper = curve.type2_error(1.0 - eps)?;
    let upper = (-b_upper.ln() - ((1.0 - eps) / eps).ln()) / beta;

    let mut best = (1.0 - eps).ln() - curve.type2_error(0.0)?.ln();
    for (t, l) in curve.points() {
        let delta = l - eps;
        if delta > 0.0 && delta <= 1.0 - eps && t > 0.0 {
            best = best.max(delta.ln() - t.ln());
        }
    }
    Ok(CostBounds {
        lower: best / beta,
        upper,
    })
}

/// Everything in [`WorkReport`], `eps ∈ (0, 1)`.
pub fn work_report(state: &QcState, eps: f64) -> Result<WorkReport> {
    let bounds = work_cost_bounds(state, eps)?;
    Ok(WorkReport {
        eps,
        w_gain: work_gain(state, eps)?,
        w_cost_lower: bounds.lower,
        w_cost_upper: bounds.upper,
        asymptotic_rate: relative_entropy(state) / state.theory().beta(),
        units: UNITS_NOTE.into(),
    })
}

/// First battery level within [`SECTOR_TOL`] of `energy` (any particle number).
fn level_at_energy(battery: &Spectrum, energy: f64) -> Result<usize> {
    battery
        .levels()
        .iter()
        .position(|l| (l.energy - energy).abs() <= SECTOR_TOL)
        .ok_or(Error::MissingBatteryLevel {
            energy,
            particles: f64::NAN,
        })
}

/// Returns `battery` with a level `(energy, particles)` appended if it has
/// none, the level's index, and whether it was inserted.
pub fn ensure_battery_level(battery: &Spectrum, energy: f64, particles: f64) -> Result<(Spectrum, usize, bool)> {
    if let Some(i) = battery.find_level(energy, particles) {
        return Ok((battery.clone(), i, false));
    }
    let mut levels = battery.levels().to_vec();
    levels.push(EnergyLevel::new(energy, particles));
    let idx = levels.len() - 1;
    Ok((Spectrum::new(levels)?, idx, true))
}

/// Work-extraction map from system ⊗ battery to the battery.
///
/// `ℰ(x) = (1 - q·x) g̃' + (q·x) e_T` where `q = Q ⊗ e_E` is the optimal
/// test on the system (lifted to the start level), `T` is the battery level
/// `E + W`, and `g̃'` is the battery Gibbs vector with level `T` removed and
/// renormalized. With `W = D_H^ε/β` the map sends the composite Gibbs state
/// to the battery Gibbs state.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionChannel {
    pub matrix: StochasticWitness,
    pub work: f64,
    pub start_level: usize,
    pub target_level: usize,
    pub bath: Vec<f64>,
    pub test: Vec<f64>,
}

impl ExtractionChannel {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.apply(x)
    }
}

/// Builds [`ExtractionChannel`] for `state`, extracting `W = D_H^ε/β`
/// starting from battery level `energy`. The battery needs a level at
/// `energy + W` with the start level's particle number.
pub fn build_extraction_channel(
    state: &QcState,
    eps: f64,
    battery: &Spectrum,
    energy: f64,
) -> Result<ExtractionChannel> {
    let curve = build_lorenz(state);
    let beta = state.theory().beta();
    let work = match curve.dh_entropy(eps)? {
        ExtReal::Finite(d) => d / beta,
        ExtReal::Infinite => {
            return Err(Error::Domain("extractable work is unbounded (b_eps = 0)".into()))
        }
    };
    let start = level_at_energy(battery, energy)?;
    let particles = battery.levels()[start].particles;
    let target = battery
        .find_level(energy + work, particles)
        .ok_or(Error::MissingBatteryLevel {
            energy: energy + work,
            particles,
        })?;

    let g_b = QcState::gibbs(battery.clone(), state.theory())?;
    let gb = g_b.gibbs_weights();
    let rest = 1.0 - gb[target];
    if !(rest > 0.0) {
        return Err(Error::Domain(
            "battery Gibbs weight is concentrated on the target level".into(),
        ));
    }
    let bath: Vec<f64> = gb
        .iter()
        .enumerate()
        .map(|(i, &g)| if i == target { 0.0 } else { g / rest })
        .collect();

    let q_sys = curve.optimal_test(eps)?;
    let (ds, db) = (state.dim(), battery.len());
    let mut test = vec![0.0; ds * db];
    for (i, &q) in q_sys.as_slice().iter().enumerate() {
        test[i * db + start] = q;
    }

    let cols = ds * db;
    let mut data = vec![0.0; db * cols];
    for (c, &q) in test.iter().enumerate() {
        for (t, &b) in bath.iter().enumerate() {
            data[t * cols + c] = (1.0 - q) * b;
        }
        data[target * cols + c] += q;
    }
    Ok(ExtractionChannel {
        matrix: StochasticWitness::new(db, cols, data)?,
        work,
        start_level: start,
        target_level: target,
        bath,
        test,
    })
}

/// `K_R(a) = Σ max(0, r_i - g_i a)`: the hinge divergence as a function of `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct KFunction {
    r: Vec<f64>,
    g: Vec<f64>,
}

impl KFunction {
    pub fn new<S: StatePair + ?Sized>(state: &S) -> Self {
        KFunction {
            r: state.r().to_vec(),
            g: state.g().to_vec(),
        }
    }

    pub fn eval(&self, a: f64) -> f64 {
        crate::numeric::accurate_sum(self.r.iter().zip(&self.g).map(|(&r, &g)| (r - g * a).max(0.0)))
    }
}

pub fn k_function<S: StatePair + ?Sized>(state: &S, a: f64) -> f64 {
    hinge_divergence(state, a)
}

/// Whether `state` can be formed exactly by a battery dropping from
/// `energy + work` to `energy`.
///
/// The input hinge curve is the line through `(0, 1)` and
/// `(Z e^{β(E+W)}, 0)`; the output curve is convex with the same value at
/// `0`, so dominance reduces to the output vanishing at that point. After
/// rescaling by the battery's Gibbs weight this is `K_R(e^{βW}) = 0`: the
/// start energy and partition function cancel.
pub fn formation_feasible(state: &QcState, work: f64, energy: f64) -> Result<bool> {
    if !work.is_finite() || !energy.is_finite() {
        return Err(Error::NonFinite(format!("work {work}, energy {energy}")));
    }
    let a = (state.theory().beta() * work).exp();
    Ok(k_function(state, a) <= FORMATION_TOL)
}

/// `r̃ ≈_ε r` and a work value sufficient to form it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationTarget {
    pub smoothed: QcState,
    pub work: f64,
    pub distance: f64,
}

/// Smooths `r` using the optimal dual pair at error `1 - ε`:
/// `r'_k = r_k g_k / (g_k + τ_k)`, renormalized, with
/// `e^{βW} = ε/(1-ε) · e^{D_H^{1-ε}}`.
pub fn smoothed_formation_target(state: &QcState, eps: f64) -> Result<FormationTarget> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("formation needs eps in (0, 1), got {eps}")));
    }
    let dual = dual_certificate(state, 1.0 - eps)?;
    let (r, g) = (state.probs(), state.gibbs_weights());
    let shrunk: Vec<f64> = r
        .iter()
        .zip(g)
        .zip(&dual.tau)
        .map(|((&ri, &gi), &ti)| ri * gi / (gi + ti))
        .collect();
    let total = crate::numeric::accurate_sum(shrunk.iter().copied());
    let smoothed = state.with_probs(shrunk.iter().map(|x| x / total).collect())?;
    let b = build_lorenz(state).type2_error(1.0 - eps)?;
    let work = ((eps / (1.0 - eps)).ln() - b.ln()) / state.theory().beta();
    let distance = trace_distance(r, smoothed.probs())?;
    Ok(FormationTarget {
        smoothed,
        work,
        distance,
    })
}

/// Optimal asymptotic rate `D(r‖g_R) / D(s‖g_S)`.
pub fn conversion_rate(r: &QcState, s: &QcState) -> Result<f64> {
    r.ensure_same_theory(s)?;
    let ds = relative_entropy(s);
    if ds <= EQUILIBRIUM_TOL {
        return Err(Error::InfiniteRate);
    }
    Ok(relative_entropy(r) / ds)
}

fn battery_pair(state: &QcState, work: f64, energy: f64, battery: &Spectrum) -> Result<(QcState, QcState)> {
    let th = state.theory();
    let b_e = QcState::pure_level(battery.clone(), th, level_at_energy(battery, energy)?)?;
    let b_w = QcState::pure_level(battery.clone(), th, level_at_energy(battery, work)?)?;
    Ok((b_e, b_w))
}

/// Checks `R + B_E ≻ B_W + B_E  ⟺  R ≻ B_W` on a two-part battery built
/// from `battery`; returns whether both sides agree.
pub fn battery_reduction_check(state: &QcState, work: f64, energy: f64, battery: &Spectrum) -> Result<bool> {
    let (b_e, b_w) = battery_pair(state, work, energy, battery)?;
    let lhs = equimajorizes(&compose(state, &b_e)?, &compose(&b_w, &b_e)?)?;
    let rhs = equimajorizes(state, &b_w)?;
    Ok(lhs == rhs)
}

/// Formation direction: `B_W + B_E ≻ R + B_E  ⟺  B_W ≻ R`.
pub fn formation_reduction_check(state: &QcState, work: f64, energy: f64, battery: &Spectrum) -> Result<bool> {
    let (b_e, b_w) = battery_pair(state, work, energy, battery)?;
    let lhs = equimajorizes(&compose(&b_w, &b_e)?, &compose(state, &b_e)?)?;
    let rhs = equimajorizes(&b_w, state)?;
    Ok(lhs == rhs)
}
