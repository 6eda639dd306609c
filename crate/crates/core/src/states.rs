//! Theories, spectra and quasiclassical states.
//!
//! A grand-potential theory is fixed by an inverse temperature `beta` and a
//! chemical potential `mu`. A quasiclassical state is a probability vector
//! over joint (energy, particle-number) levels; its equilibrium partner is
//! the grand-canonical vector `g_i = exp(-beta (E_i - mu n_i)) / Z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{accurate_sum, log_sum_exp};

/// Accepted deviation of `Σ r_i` from one before an input is rejected.
pub const RENORMALIZE_TOL: f64 = 1e-9;

/// Deviation of `Σ r_i` from one that is left untouched.
pub const NORMALIZED_TOL: f64 = 1e-12;

/// Absolute tolerance on `E` and `n` when grouping degenerate levels.
pub const SECTOR_TOL: f64 = 1e-9;

/// Bath parameters `(beta, mu)` of one resource theory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    beta: f64,
    mu: f64,
}

impl TheoryParams {
    pub fn new(beta: f64, mu: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidTheory(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidTheory(format!("mu must be finite, got {mu}")));
        }
        Ok(TheoryParams { beta, mu })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Temperature `1/beta` (with `k_B = 1`).
    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }

    /// Boltzmann exponent `-beta (E - mu n)` of a level.
    pub fn exponent(&self, level: &EnergyLevel) -> f64 {
        -self.beta * (level.energy - self.mu * level.particles)
    }
}

/// One joint eigenvalue pair of `H` and `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevel {
    pub energy: f64,
    pub particles: f64,
}

impl EnergyLevel {
    pub fn new(energy: f64, particles: f64) -> Self {
        EnergyLevel { energy, particles }
    }

    /// Same sector up to [`SECTOR_TOL`].
    pub fn same_sector(&self, other: &EnergyLevel) -> bool {
        (self.energy - other.energy).abs() <= SECTOR_TOL
            && (self.particles - other.particles).abs() <= SECTOR_TOL
    }
}

/// Ordered list of levels. Degeneracies are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    levels: Vec<EnergyLevel>,
}

impl Spectrum {
    pub fn new(levels: Vec<EnergyLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidSpectrum("spectrum must have at least one level".into()));
        }
        if let Some((i, l)) = levels
            .iter()
            .enumerate()
            .find(|(_, l)| !(l.energy.is_finite() && l.particles.is_finite()))
        {
            return Err(Error::InvalidSpectrum(format!(
                "level {i} has non-finite values (E={}, n={})",
                l.energy, l.particles
            )));
        }
        Ok(Spectrum { levels })
    }

    /// Levels with zero particle number.
    pub fn from_energies(energies: &[f64]) -> Result<Self> {
        Spectrum::new(energies.iter().map(|&e| EnergyLevel::new(e, 0.0)).collect())
    }

    /// Levels from `(E, n)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Spectrum::new(pairs.iter().map(|&(e, n)| EnergyLevel::new(e, n)).collect())
    }

    pub fn levels(&self) -> &[EnergyLevel] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Composite spectrum, index `(i, j) ↦ i * other.len() + j`.
    pub fn compose(&self, other: &Spectrum) -> Spectrum {
        let mut levels = Vec::with_capacity(self.len() * other.len());
        for a in &self.levels {
            for b in &other.levels {
                levels.push(EnergyLevel::new(a.energy + b.energy, a.particles + b.particles));
            }
        }
        Spectrum { levels }
    }

    /// First level within [`SECTOR_TOL`] of `(energy, particles)`.
    pub fn find_level(&self, energy: f64, particles: f64) -> Option<usize> {
        let probe = EnergyLevel::new(energy, particles);
        self.levels.iter().position(|l| l.same_sector(&probe))
    }
}

/// Access to the `(r, g)` pair a state is tested against.
///
/// Everything that depends only on the weight/ratio structure of a state
/// (Lorenz curves, Type II errors, divergences) is written against this
/// trait, so the aggregated [`TypedState`](crate::typed::TypedState) of an
/// i.i.d. power is accepted wherever a [`QcState`] is.
pub trait StatePair {
    fn r(&self) -> &[f64];
    fn g(&self) -> &[f64];
    fn theory(&self) -> TheoryParams;
}

/// Quasiclassical state `R = (r, H, N)` with its derived Gibbs vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QcState {
    spectrum: Spectrum,
    probs: Vec<f64>,
    theory: TheoryParams,
    gibbs: Vec<f64>,
    log_z: f64,
}

fn gibbs_vector(spectrum: &Spectrum, theory: &TheoryParams) -> Result<(Vec<f64>, f64)> {
    let exps: Vec<f64> = spectrum.levels().iter().map(|l| theory.exponent(l)).collect();
    if let Some(i) = exps.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidSpectrum(format!(
            "Boltzmann exponent of level {i} is not finite"
        )));
    }
    let log_z = log_sum_exp(&exps);
    let gibbs: Vec<f64> = exps.iter().map(|&x| (x - log_z).exp()).collect();
    if let Some(i) = gibbs.iter().position(|&g| g <= 0.0) {
        return Err(Error::InvalidSpectrum(format!(
            "Gibbs weight of level {i} underflows to zero; spread of beta*(E - mu n) is too large"
        )));
    }
    Ok((gibbs, log_z))
}

/// Validates and, when `NORMALIZED_TOL < |Σ r - 1| <= RENORMALIZE_TOL`, renormalizes.
pub(crate) fn normalize_probs(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.is_finite() && **p >= 0.0))
    {
        return Err(Error::InvalidProbabilities(format!(
            "entry {i} is {p}; probabilities must be finite and non-negative"
        )));
    }
    let total = accurate_sum(probs.iter().copied());
    let dev = (total - 1.0).abs();
    if dev > RENORMALIZE_TOL {
        return Err(Error::InvalidProbabilities(format!(
            "entries sum to {total}, more than {RENORMALIZE_TOL} away from 1"
        )));
    }
    if dev > NORMALIZED_TOL {
        for p in &mut probs {
            *p /= total;
        }
    }
    Ok(probs)
}

impl QcState {
    pub fn new(spectrum: Spectrum, probs: Vec<f64>, theory: TheoryParams) -> Result<Self> {
        if probs.len() != spectrum.len() {
            return Err(Error::DimensionMismatch {
                expected: spectrum.len(),
                found: probs.len(),
            });
        }
        let probs = normalize_probs(probs)?;
        let (gibbs, log_z) = gibbs_vector(&spectrum, &theory)?;
        Ok(QcState {
            spectrum,
            probs,
            theory,
            gibbs,
            log_z,
        })
    }

    /// The equilibrium state `G` of a spectrum.
    pub fn gibbs(spectrum: Spectrum, theory: TheoryParams) -> Result<Self> {
        let (gibbs, log_z) = gibbs_vector(&spectrum, &theory)?;
        Ok(QcState {
            spectrum,
            probs: gibbs.clone(),
            theory,
            gibbs,
            log_z,
        })
    }

    /// Unit vector on level `index`.
    pub fn pure_level(spectrum: Spectrum, theory: TheoryParams, index: usize) -> Result<Self> {
        if index >= spectrum.len() {
            return Err(Error::Domain(format!(
                "level index {index} out of range for a {}-level spectrum",
                spectrum.len()
            )));
        }
        let mut probs = vec![0.0; spectrum.len()];
        probs[index] = 1.0;
        QcState::new(spectrum, probs, theory)
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn gibbs_weights(&self) -> &[f64] {
        &self.gibbs
    }

    pub fn theory(&self) -> TheoryParams {
        self.theory
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    /// Equilibrium state on the same spectrum.
    pub fn equilibrium(&self) -> QcState {
        QcState {
            spectrum: self.spectrum.clone(),
            probs: self.gibbs.clone(),
            theory: self.theory,
            gibbs: self.gibbs.clone(),
            log_z: self.log_z,
        }
    }

    /// Same spectrum and theory, new probabilities.
    pub fn with_probs(&self, probs: Vec<f64>) -> Result<QcState> {
        QcState::new(self.spectrum.clone(), probs, self.theory)
    }

    pub fn ensure_same_theory(&self, other: &QcState) -> Result<()> {
        if self.theory == other.theory {
            Ok(())
        } else {
            Err(Error::TheoryMismatch)
        }
    }

    /// Mean energy `Σ r_i E_i`.
    pub fn mean_energy(&self) -> f64 {
        accurate_sum(self.probs.iter().zip(self.spectrum.levels()).map(|(p, l)| p * l.energy))
    }

    /// Mean particle number `Σ r_i n_i`.
    pub fn mean_particles(&self) -> f64 {
        accurate_sum(self.probs.iter().zip(self.spectrum.levels()).map(|(p, l)| p * l.particles))
    }
}

impl StatePair for QcState {
    fn r(&self) -> &[f64] {
        &self.probs
    }

    fn g(&self) -> &[f64] {
        &self.gibbs
    }

    fn theory(&self) -> TheoryParams {
        self.theory
    }
}

/// Equilibrium state of `spectrum` in `theory`.
pub fn gibbs_state(spectrum: &Spectrum, theory: TheoryParams) -> Result<QcState> {
    QcState::gibbs(spectrum.clone(), theory)
}

/// Composite `R + S`: product probabilities, additive energies and particle numbers.
pub fn compose(r: &QcState, s: &QcState) -> Result<QcState> {
    r.ensure_same_theory(s)?;
    let spectrum = r.spectrum.compose(&s.spectrum);
    let mut probs = Vec::with_capacity(r.dim() * s.dim());
    for &a in &r.probs {
        for &b in &s.probs {
            probs.push(a * b);
        }
    }
    let (gibbs, log_z) = gibbs_vector(&spectrum, &r.theory)?;
    Ok(QcState {
        spectrum,
        probs,
        theory: r.theory,
        gibbs,
        log_z,
    })
}

/// `½ Σ |r_i − s_i|`.
pub fn trace_distance(r: &[f64], s: &[f64]) -> Result<f64> {
    if r.len() != s.len() {
        return Err(Error::DimensionMismatch {
            expected: r.len(),
            found: s.len(),
        });
    }
    Ok(0.5 * accurate_sum(r.iter().zip(s).map(|(a, b)| (a - b).abs())))
}

/// A state sitting on a single level, `e_E`. Batteries are built from these.
#[derive(Debug, Clone, PartialEq)]
pub struct PureLevelState {
    state: QcState,
    index: usize,
}

impl PureLevelState {
    pub fn new(spectrum: Spectrum, theory: TheoryParams, index: usize) -> Result<Self> {
        Ok(PureLevelState {
            state: QcState::pure_level(spectrum, theory, index)?,
            index,
        })
    }

    /// Pure state on the first level matching `(energy, particles)`.
    pub fn at_level(spectrum: Spectrum, theory: TheoryParams, energy: f64, particles: f64) -> Result<Self> {
        let index = spectrum
            .find_level(energy, particles)
            .ok_or(Error::MissingBatteryLevel { energy, particles })?;
        PureLevelState::new(spectrum, theory, index)
    }

    /// Wraps `state` if it is a unit vector.
    pub fn from_state(state: QcState) -> Option<Self> {
        let index = state.probs.iter().position(|&p| p == 1.0)?;
        let rest_zero = state
            .probs
            .iter()
            .enumerate()
            .all(|(i, &p)| i == index || p == 0.0);
        rest_zero.then_some(PureLevelState { state, index })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn level(&self) -> EnergyLevel {
        self.state.spectrum.levels()[self.index]
    }

    pub fn state(&self) -> &QcState {
        &self.state
    }

    pub fn into_state(self) -> QcState {
        self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th(beta: f64, mu: f64) -> TheoryParams {
        TheoryParams::new(beta, mu).unwrap()
    }

    #[test]
    fn theory_rejects_bad_beta() {
        assert!(TheoryParams::new(0.0, 0.0).is_err());
        assert!(TheoryParams::new(-1.0, 0.0).is_err());
        assert!(TheoryParams::new(f64::INFINITY, 0.0).is_err());
        assert!(TheoryParams::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn gibbs_two_level_ln2() {
        let g = gibbs_state(&Spectrum::from_energies(&[0.0, 1.0]).unwrap(), th(2f64.ln(), 0.0)).unwrap();
        assert!((g.probs()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((g.probs()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gibbs_degenerate_is_uniform() {
        let g = gibbs_state(&Spectrum::from_pairs(&[(0.0, 0.0), (0.0, 0.0)]).unwrap(), th(3.7, -1.2)).unwrap();
        assert_eq!(g.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn gibbs_with_particles() {
        // exponents (0, -1, 0); weights from a 30-digit reference evaluation
        let g = gibbs_state(&Spectrum::from_pairs(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]).unwrap(), th(1.0, 1.0)).unwrap();
        let expected = [0.422318798251518196603290705988, 0.155362403496963606793418588024, 0.422318798251518196603290705988];
        for (a, b) in g.probs().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn gibbs_survives_huge_exponents() {
        let g = gibbs_state(&Spectrum::from_energies(&[700.0, 700.5]).unwrap(), th(1.0, 0.0)).unwrap();
        let ratio = g.probs()[1] / g.probs()[0];
        assert!((ratio - (-0.5f64).exp()).abs() < 1e-14);
        assert!((g.log_z() - (-700.0 + (1.0 + (-0.5f64).exp()).ln())).abs() < 1e-10);
    }

    #[test]
    fn non_finite_spectrum_rejected() {
        assert!(matches!(
            Spectrum::from_energies(&[0.0, f64::NAN]),
            Err(Error::InvalidSpectrum(_))
        ));
        assert!(Spectrum::new(vec![]).is_err());
    }

    #[test]
    fn normalization_policy() {
        let s = Spectrum::from_energies(&[0.0, 1.0]).unwrap();
        let st = QcState::new(s.clone(), vec![0.5, 0.5 + 5e-10], th(1.0, 0.0)).unwrap();
        assert!((st.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(QcState::new(s.clone(), vec![0.5, 0.6], th(1.0, 0.0)).is_err());
        assert!(QcState::new(s.clone(), vec![1.1, -0.1], th(1.0, 0.0)).is_err());
        assert!(matches!(
            QcState::new(s, vec![1.0], th(1.0, 0.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn compose_layout_and_pure_levels() {
        let th = th(0.7, 0.3);
        let a = QcState::pure_level(Spectrum::from_pairs(&[(0.0, 0.0), (1.0, 1.0)]).unwrap(), th, 1).unwrap();
        let b = QcState::pure_level(Spectrum::from_pairs(&[(0.0, 0.0), (2.0, 0.0), (5.0, 2.0)]).unwrap(), th, 2).unwrap();
        let c = compose(&a, &b).unwrap();
        assert_eq!(c.dim(), 6);
        assert_eq!(c.probs()[3 * 1 + 2], 1.0);
        assert_eq!(c.spectrum().levels()[5], EnergyLevel::new(6.0, 3.0));
        assert!(PureLevelState::from_state(c).is_some());
    }

    #[test]
    fn compose_theory_mismatch() {
        let s = Spectrum::from_energies(&[0.0, 1.0]).unwrap();
        let a = gibbs_state(&s, th(1.0, 0.0)).unwrap();
        let b = gibbs_state(&s, th(2.0, 0.0)).unwrap();
        assert_eq!(compose(&a, &b), Err(Error::TheoryMismatch));
    }

    #[test]
    fn trace_distance_examples() {
        assert_eq!(trace_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(trace_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((trace_distance(&[0.7, 0.3], &[0.5, 0.5]).unwrap() - 0.2).abs() < 1e-15);
        assert!(trace_distance(&[1.0], &[0.5, 0.5]).is_err());
    }
}
