//! Down-conversion sources: single singlet pairs and the two-pass two-pair
//! emission.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{FockKet, Polarization, PureState, SpatialMode};

/// Where the two pairs of a two-pair emission went.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PairCase {
    /// Both pairs in `a1, b1`.
    UpperUpper,
    /// Both pairs in `a2, b2`.
    LowerLower,
    /// One pair on each pass.
    Mixed,
}

/// Probabilities of the three cases. Non-negative, summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseWeights {
    pub upper_upper: f64,
    pub lower_lower: f64,
    pub mixed: f64,
}

impl Default for CaseWeights {
    /// Uniform over the ordered pass labels `(i, j)`.
    fn default() -> Self {
        CaseWeights { upper_upper: 0.25, lower_lower: 0.25, mixed: 0.5 }
    }
}

impl CaseWeights {
    pub fn new(upper_upper: f64, lower_lower: f64, mixed: f64) -> Result<Self> {
        for w in [upper_upper, lower_lower, mixed] {
            if w < 0.0 || w.is_nan() {
                return Err(Error::NegativeWeight(w));
            }
        }
        let total = upper_upper + lower_lower + mixed;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::WeightsNotNormalized(total));
        }
        Ok(CaseWeights { upper_upper, lower_lower, mixed })
    }

    pub fn weight(&self, case: PairCase) -> f64 {
        match case {
            PairCase::UpperUpper => self.upper_upper,
            PairCase::LowerLower => self.lower_lower,
            PairCase::Mixed => self.mixed,
        }
    }
}

/// The four source modes, in order `a1, b1, a2, b2`.
pub fn source_modes() -> [SpatialMode; 4] {
    crate::state::modes(["a1", "b1", "a2", "b2"])
}

fn pass_modes(pass: u8) -> (SpatialMode, SpatialMode) {
    let [a1, b1, a2, b2] = source_modes();
    if pass == 1 {
        (a1, b1)
    } else {
        (a2, b2)
    }
}

/// `(|H⟩_a|V⟩_b − |V⟩_a|H⟩_b)/√2`.
pub fn pdc_pair(a: &SpatialMode, b: &SpatialMode) -> Result<PureState> {
    if a == b {
        return Err(Error::DuplicateMode(a.clone()));
    }
    use Polarization::{H, V};
    Ok(PureState::from_real([
        (FockKet::photons([(a, H), (b, V)]), FRAC_1_SQRT_2),
        (FockKet::photons([(a, V), (b, H)]), -FRAC_1_SQRT_2),
    ]))
}

/// Two pairs, on passes `i` and `j` (each 1 or 2), normalized.
///
/// When `i == j` both pairs share modes and the product of pair creation
/// operators carries bosonic enhancement; the result is renormalized.
///
/// # Panics
/// If `i` or `j` is not 1 or 2.
pub fn two_pair_product(i: u8, j: u8) -> PureState {
    assert!(matches!(i, 1 | 2) && matches!(j, 1 | 2), "pass index must be 1 or 2");
    let (ai, bi) = pass_modes(i);
    let (aj, bj) = pass_modes(j);
    let first = pdc_pair(&ai, &bi).expect("distinct modes");
    let second = pdc_pair(&aj, &bj).expect("distinct modes");
    first
        .creation_product(&second)
        .normalized()
        .expect("two-pair state is nonzero")
}

pub fn case_state(case: PairCase) -> PureState {
    match case {
        PairCase::UpperUpper => two_pair_product(1, 1),
        PairCase::LowerLower => two_pair_product(2, 2),
        PairCase::Mixed => two_pair_product(1, 2),
    }
}

/// `√w₁·case₁ + √w₂·case₂ + √w₃·mixed`, all relative phases +1.
pub fn dual_pass_emission(weights: &CaseWeights) -> Result<PureState> {
    let weights = CaseWeights::new(weights.upper_upper, weights.lower_lower, weights.mixed)?;
    let mut out = PureState::empty();
    for case in [PairCase::UpperUpper, PairCase::LowerLower, PairCase::Mixed] {
        let w = weights.weight(case);
        if w > 0.0 {
            out = out.add(&case_state(case).scaled(Complex64::new(w.sqrt(), 0.0)));
        }
    }
    Ok(out)
}
