//! Cross-Kerr quantum nondemolition detection of the a1/a2 photon
//! distribution.
//!
//! Each signal ket imprints a probe phase `tag·θ`, where the tag is the sum
//! of coupling strengths over the ket's photons. An X-quadrature homodyne
//! readout separates `|tag| = 1` (both a-photons on the same pass) from
//! `tag = 0` (one per pass) but cannot tell `+θ` from `−θ`, so the `±θ`
//! components stay coherent. They pick up opposite phases `±φ(x)` that a
//! feed-forward phase shift removes.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{FockKet, Polarization, PureState, Rail, SpatialMode};

/// Coherent probe parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    /// Coherent amplitude `α` (real).
    pub alpha: f64,
    /// Kerr phase unit `θ` in radians.
    pub theta: f64,
}

impl Default for Probe {
    fn default() -> Self {
        Probe { alpha: 1e5_f64.sqrt(), theta: 0.01 }
    }
}

impl Probe {
    /// Centre of the X-quadrature peak for a probe phase `±θ`.
    pub fn peak_shifted(&self) -> f64 {
        2.0 * self.alpha * self.theta.cos()
    }

    /// Centre of the peak for zero probe phase.
    pub fn peak_unshifted(&self) -> f64 {
        2.0 * self.alpha
    }

    /// Decision threshold `X₀`, midway between the peaks.
    pub fn threshold(&self) -> f64 {
        0.5 * (self.peak_shifted() + self.peak_unshifted())
    }

    /// Phase `φ(x) = α sinθ (x − 2α cosθ)` carried by the `+θ` component
    /// after reading `x`; the `−θ` component carries `−φ(x)`.
    pub fn induced_phase(&self, x: f64) -> f64 {
        self.alpha * self.theta.sin() * (x - self.peak_shifted())
    }
}

/// `|⟨α|αe^{iθ}⟩| = exp(−α²(1 − cos θ))`; how much the two probe peaks
/// overlap. Smaller is better.
pub fn probe_distinguishability(alpha: f64, theta: f64) -> f64 {
    (-alpha * alpha * (1.0 - theta.cos())).exp()
}

/// A Kerr medium coupling one rail to the probe with phase `units·θ` per photon.
#[derive(Debug, Clone, PartialEq)]
pub struct KerrCoupling {
    pub rail: Rail,
    pub units: f64,
}

impl KerrCoupling {
    pub fn new(rail: Rail, units: f64) -> Self {
        KerrCoupling { rail, units }
    }
}

/// One medium on each source pass: `+θ/2` per photon in `a1`, `−θ/2` per
/// photon in `a2`, both polarizations.
///
/// Kets with both a-photons in `a1` get `+θ`, both in `a2` get `−θ`, one in
/// each get `0`.
pub fn default_couplings() -> Vec<KerrCoupling> {
    let a1 = SpatialMode::new("a1");
    let a2 = SpatialMode::new("a2");
    Polarization::BOTH
        .iter()
        .map(|&p| KerrCoupling::new(a1.rail(p), 0.5))
        .chain(Polarization::BOTH.iter().map(|&p| KerrCoupling::new(a2.rail(p), -0.5)))
        .collect()
}

/// A state with a probe phase tag (in units of θ) on every ket.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedState {
    pub state: PureState,
    pub tags: BTreeMap<FockKet, f64>,
}

pub fn tag_phases(state: &PureState, couplings: &[KerrCoupling]) -> TaggedState {
    let tags = state
        .kets()
        .map(|k| {
            let tag = couplings.iter().map(|c| c.units * f64::from(k.count(&c.rail))).sum();
            (k.clone(), tag)
        })
        .collect();
    TaggedState { state: state.clone(), tags }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QndBranch {
    /// `|tag| = θ`: both pairs on the same pass.
    A,
    /// `tag = 0`: one pair per pass.
    B,
}

impl QndBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            QndBranch::A => "A",
            QndBranch::B => "B",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QndOutcome {
    pub branch: QndBranch,
    pub probability: f64,
    /// Normalized post-measurement state, including the `±φ(x)` phases.
    pub conditional: PureState,
    /// Homodyne readout `x`.
    pub readout: f64,
    /// `φ(x)`; zero on branch B.
    pub phase: f64,
    /// Sign of each conditional ket's probe tag (−1, 0, +1).
    pub signs: BTreeMap<FockKet, i8>,
}

fn tag_sign(ket: &FockKet, tag: f64) -> Result<i8> {
    const TOL: f64 = 1e-9;
    for s in [-1_i8, 0, 1] {
        if (tag - f64::from(s)).abs() <= TOL {
            return Ok(s);
        }
    }
    Err(Error::TagOutOfRange { ket: ket.clone(), tag })
}

/// Ideal binary discrimination with the branch-A readout at its peak.
pub fn homodyne_discriminate(tagged: &TaggedState, probe: &Probe) -> Result<Vec<QndOutcome>> {
    homodyne_discriminate_at(tagged, probe, probe.peak_shifted())
}

/// Ideal binary discrimination given the branch-A readout `x_a`.
///
/// Every branch with nonzero probability is returned; nothing is sampled.
pub fn homodyne_discriminate_at(tagged: &TaggedState, probe: &Probe, x_a: f64) -> Result<Vec<QndOutcome>> {
    let mut signs = BTreeMap::new();
    for (ket, tag) in &tagged.tags {
        signs.insert(ket.clone(), tag_sign(ket, *tag)?);
    }
    let phase = probe.induced_phase(x_a);
    let mut outcomes = Vec::new();
    for branch in [QndBranch::A, QndBranch::B] {
        let part = tagged.state.filter(|k| (signs[k] != 0) == (branch == QndBranch::A));
        let p = part.norm_sqr();
        if p <= 1e-24 {
            continue;
        }
        let (readout, phase) = match branch {
            QndBranch::A => (x_a, phase),
            QndBranch::B => (probe.peak_unshifted(), 0.0),
        };
        let conditional = part
            .normalized()?
            .map_amplitudes(|k, a| a * Complex64::from_polar(1.0, f64::from(signs[k]) * phase));
        let branch_signs = conditional.kets().map(|k| (k.clone(), signs[k])).collect();
        outcomes.push(QndOutcome { branch, probability: p, conditional, readout, phase, signs: branch_signs });
    }
    Ok(outcomes)
}

/// Removes the measurement-induced `±φ(x)` phases. Identity on branch B.
pub fn feed_forward(outcome: &QndOutcome) -> PureState {
    if outcome.branch == QndBranch::B || outcome.phase == 0.0 {
        return outcome.conditional.clone();
    }
    outcome.conditional.map_amplitudes(|k, a| {
        let s = outcome.signs.get(k).copied().unwrap_or(0);
        a * Complex64::from_polar(1.0, -f64::from(s) * outcome.phase)
    })
}

/// Draws one outcome: the branch by its probability, then the readout
/// from that branch's unit-variance quadrature peak.
pub fn sample_outcome<R: Rng + ?Sized>(
    tagged: &TaggedState,
    probe: &Probe,
    rng: &mut R,
) -> Result<QndOutcome> {
    let outcomes = homodyne_discriminate(tagged, probe)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut chosen = outcomes.last().ok_or(Error::EmptyState)?.branch;
    for o in &outcomes {
        acc += o.probability;
        if u < acc {
            chosen = o.branch;
            break;
        }
    }
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let x = match chosen {
        QndBranch::A => probe.peak_shifted() + noise.sample(rng),
        QndBranch::B => probe.peak_unshifted() + noise.sample(rng),
    };
    let outcomes = homodyne_discriminate_at(tagged, probe, x)?;
    let mut picked = outcomes
        .into_iter()
        .find(|o| o.branch == chosen)
        .expect("chosen branch has support");
    if chosen == QndBranch::B {
        picked.readout = x;
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{dual_pass_emission, two_pair_product, CaseWeights};
    use crate::state::{fidelity, modes};
    use rand::SeedableRng;
    use std::f64::consts::FRAC_1_SQRT_2;
    use Polarization::{H, V};

    fn two(a: (&SpatialMode, Polarization), b: (&SpatialMode, Polarization)) -> FockKet {
        FockKet::photons([a, b])
    }

    #[test]
    fn tags_of_the_four_a_mode_kets() {
        let [a1, a2] = modes(["a1", "a2"]);
        let kets = [
            (two((&a1, H), (&a2, V)), 0.0),
            (two((&a1, V), (&a2, H)), 0.0),
            (two((&a1, H), (&a1, V)), 1.0),
            (two((&a2, H), (&a2, V)), -1.0),
        ];
        let state = PureState::from_real(kets.iter().map(|(k, _)| (k.clone(), 0.5)));
        let tagged = tag_phases(&state, &default_couplings());
        for (k, expected) in kets {
            assert_eq!(tagged.tags[&k], expected, "{k:?}");
        }
    }

    #[test]
    fn default_emission_splits_evenly() {
        let s = dual_pass_emission(&CaseWeights::default()).unwrap();
        let out = homodyne_discriminate(&tag_phases(&s, &default_couplings()), &Probe::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out[0].probability - 0.5).abs() < 1e-12);
        assert!((out[1].probability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mixed_case_is_branch_b_with_certainty() {
        let s = two_pair_product(1, 2);
        let out = homodyne_discriminate(&tag_phases(&s, &default_couplings()), &Probe::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].branch, QndBranch::B);
        assert!((out[0].probability - 1.0).abs() < 1e-12);
        assert!((fidelity(&out[0].conditional, &s) - 1.0).abs() < 1e-12);
        assert_eq!(feed_forward(&out[0]), out[0].conditional);
    }

    #[test]
    fn same_pass_superposition_stays_coherent() {
        let [a1, a2] = modes(["a1", "a2"]);
        let s = PureState::from_real([
            (two((&a1, H), (&a1, V)), FRAC_1_SQRT_2),
            (two((&a2, H), (&a2, V)), FRAC_1_SQRT_2),
        ]);
        let probe = Probe::default();
        let tagged = tag_phases(&s, &default_couplings());
        let x = probe.peak_shifted() - 0.7;
        let out = homodyne_discriminate_at(&tagged, &probe, x).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].branch, QndBranch::A);
        assert!((out[0].probability - 1.0).abs() < 1e-12);
        // before correction the two components carry e^{±iφ}
        let phi = probe.induced_phase(x);
        assert!(phi.abs() > 0.1);
        assert!((fidelity(&out[0].conditional, &s) - (phi.cos()).powi(2)).abs() < 1e-12);
        let fixed = feed_forward(&out[0]);
        assert!((fidelity(&fixed, &s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_phase_readout_needs_no_correction() {
        let s = two_pair_product(1, 1);
        let probe = Probe::default();
        let out = homodyne_discriminate(&tag_phases(&s, &default_couplings()), &probe).unwrap();
        assert_eq!(out[0].phase, 0.0);
        assert_eq!(feed_forward(&out[0]), out[0].conditional);
    }

    #[test]
    fn out_of_range_tag_is_rejected() {
        let a1 = SpatialMode::new("a1");
        let s = PureState::basis(FockKet::from_rails([a1.h(), a1.h()]));
        let couplings = [KerrCoupling::new(a1.h(), 1.0)];
        let err = homodyne_discriminate(&tag_phases(&s, &couplings), &Probe::default()).unwrap_err();
        assert!(matches!(err, Error::TagOutOfRange { tag, .. } if tag == 2.0));
    }

    #[test]
    fn distinguishability_closed_form() {
        assert_eq!(probe_distinguishability(0.0, 0.3), 1.0);
        assert_eq!(probe_distinguishability(5.0, 0.0), 1.0);
        let v = probe_distinguishability(1e5_f64.sqrt(), 0.01);
        // α²(1 − cos θ) = 1e5 · 4.99995833e-5
        let expected = (-1e5 * (1.0 - 0.01_f64.cos())).exp();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 6.74e-3).abs() < 1e-5);
    }

    #[test]
    fn sampling_is_seeded() {
        let s = dual_pass_emission(&CaseWeights::default()).unwrap();
        let tagged = tag_phases(&s, &default_couplings());
        let probe = Probe::default();
        let draw = |seed| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let o = sample_outcome(&tagged, &probe, &mut rng).unwrap();
            (o.branch, o.readout.to_bits())
        };
        assert_eq!(draw(7), draw(7));
        let fixed = {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            sample_outcome(&tagged, &probe, &mut rng).unwrap()
        };
        if fixed.branch == QndBranch::A {
            assert!((fidelity(&feed_forward(&fixed), &two_pair_product(1, 1).add(&two_pair_product(2, 2)).normalized().unwrap()) - 1.0).abs() < 1e-12);
        }
    }
}
