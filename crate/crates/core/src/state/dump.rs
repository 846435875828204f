//! JSON state dump: `[{"ket": [["D1","H",1], ...], "re": x, "im": y}, ...]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ket::{FockKet, Polarization, SpatialMode};
use super::pure::PureState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpTerm {
    pub ket: Vec<(String, Polarization, u32)>,
    pub re: f64,
    pub im: f64,
}

pub fn dump_terms(state: &PureState) -> Vec<DumpTerm> {
    state
        .terms()
        .map(|(k, a)| DumpTerm {
            ket: k
                .occupations()
                .iter()
                .map(|(r, n)| (r.spatial.name().to_string(), r.pol, *n))
                .collect(),
            re: a.re,
            im: a.im,
        })
        .collect()
}

pub fn to_json(state: &PureState) -> String {
    serde_json::to_string(&dump_terms(state)).expect("state dump serializes")
}

pub fn from_terms(terms: &[DumpTerm]) -> PureState {
    PureState::from_terms(terms.iter().map(|t| {
        let ket = FockKet::from_counts(
            t.ket.iter().map(|(m, p, n)| (SpatialMode::new(m).rail(*p), *n)),
        );
        (ket, Complex64::new(t.re, t.im))
    }))
}

pub fn from_json(text: &str) -> serde_json::Result<PureState> {
    let terms: Vec<DumpTerm> = serde_json::from_str(text)?;
    Ok(from_terms(&terms))
}
