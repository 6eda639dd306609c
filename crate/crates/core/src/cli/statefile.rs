//! JSON state files.
//!
//! ```json
//! { "beta": 1.0, "mu": 0.0,
//!   "levels": [ { "E": 0.0, "n": 0, "p": 0.7 }, { "E": 1.0, "n": 0, "p": 0.3 } ] }
//! ```
//!
//! `n` defaults to 0. Either every level carries `p` or none does; with no
//! `p` at all the file describes the Gibbs state of its spectrum.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::states::{EnergyLevel, QcState, Spectrum, TheoryParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelEntry {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "n", default)]
    pub particles: f64,
    #[serde(rename = "p", default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub beta: f64,
    pub mu: f64,
    pub levels: Vec<LevelEntry>,
}

/// Why a state file could not be turned into a state.
#[derive(Debug, thiserror::Error)]
pub enum StateFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// Malformed JSON or schema violation; the message carries line and column.
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    /// Well-formed file describing an invalid state.
    #[error("{path}: {source}")]
    Invalid { path: String, source: Error },
}

impl StateFile {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: StateFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let with_p = file.levels.iter().filter(|l| l.prob.is_some()).count();
        if with_p != 0 && with_p != file.levels.len() {
            let missing = file.levels.iter().position(|l| l.prob.is_none()).unwrap_or(0);
            return Err(format!(
                "levels[{missing}]: field \"p\" must be given for every level or for none"
            ));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state files always serialize")
    }

    pub fn from_state(state: &QcState) -> Self {
        let th = state.theory();
        StateFile {
            beta: th.beta(),
            mu: th.mu(),
            levels: state
                .spectrum()
                .levels()
                .iter()
                .zip(state.probs())
                .map(|(l, &p)| LevelEntry {
                    energy: l.energy,
                    particles: l.particles,
                    prob: Some(p),
                })
                .collect(),
        }
    }

    pub fn theory(&self) -> Result<TheoryParams, Error> {
        TheoryParams::new(self.beta, self.mu)
    }

    pub fn spectrum(&self) -> Result<Spectrum, Error> {
        Spectrum::new(
            self.levels
                .iter()
                .map(|l| EnergyLevel::new(l.energy, l.particles))
                .collect(),
        )
    }

    /// Whether the file asks for the Gibbs state (no `p` given).
    pub fn is_gibbs_request(&self) -> bool {
        self.levels.iter().all(|l| l.prob.is_none())
    }

    pub fn to_state(&self) -> Result<QcState, Error> {
        let theory = self.theory()?;
        let spectrum = self.spectrum()?;
        if self.is_gibbs_request() {
            return QcState::gibbs(spectrum, theory);
        }
        let probs = self.levels.iter().map(|l| l.prob.unwrap_or(0.0)).collect();
        QcState::new(spectrum, probs, theory)
    }
}

/// Reads and validates a state file.
pub fn load_state(path: &Path) -> Result<QcState, StateFileError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| StateFileError::Io {
        path: shown.clone(),
        source,
    })?;
    let file = StateFile::from_json(&text).map_err(|message| StateFileError::Parse {
        path: shown.clone(),
        message,
    })?;
    file.to_state()
        .map_err(|source| StateFileError::Invalid { path: shown, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gibbs_when_p_absent() {
        let f = StateFile::from_json(r#"{"beta":1,"mu":0,"levels":[{"E":0},{"E":1,"n":0}]}"#).unwrap();
        assert!(f.is_gibbs_request());
        let s = f.to_state().unwrap();
        assert_eq!(s.probs(), s.gibbs_weights());
    }

    #[test]
    fn mixed_p_rejected() {
        let e = StateFile::from_json(r#"{"beta":1,"mu":0,"levels":[{"E":0,"p":1},{"E":1}]}"#).unwrap_err();
        assert!(e.contains("levels[1]"), "{e}");
    }

    #[test]
    fn parse_errors_have_locations() {
        let e = StateFile::from_json("{\"beta\":1,\n\"mu\":0,\n\"levels\":[{\"E\":\"x\"}]}").unwrap_err();
        assert!(e.contains("line 3"), "{e}");
        let e = StateFile::from_json(r#"{"beta":1,"mu":0,"levels":[],"extra":1}"#).unwrap_err();
        assert!(e.contains("extra"), "{e}");
    }

    #[test]
    fn round_trip_is_bitwise() {
        let th = TheoryParams::new(0.7, -0.3).unwrap();
        let sp = Spectrum::from_pairs(&[(0.1, 0.0), (1.0 / 3.0, 1.0), (2.0, 2.0)]).unwrap();
        let s = QcState::new(sp, vec![0.1, 0.2, 0.7], th).unwrap();
        let text = StateFile::from_state(&s).to_json();
        let back = StateFile::from_json(&text).unwrap().to_state().unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn invalid_states_surface_library_errors() {
        let f = StateFile::from_json(r#"{"beta":-1,"mu":0,"levels":[{"E":0}]}"#).unwrap();
        assert!(matches!(f.to_state(), Err(Error::InvalidTheory(_))));
    }
}
