//! Circuit networks: an ordered list of steps plus detector declarations.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elements::NetworkElement;
use crate::error::{Error, Result};
use crate::noise::{NoiseSpec, PauliCombination, PauliOp};
use crate::qnd::{feed_forward, homodyne_discriminate, tag_phases, KerrCoupling, Probe, QndBranch, QndOutcome, TaggedState};
use crate::source::CaseWeights;
use crate::state::{FockKet, ModeTransform, Polarization, PureState, SpatialMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorKind {
    /// Resolves which of its modes fired and leaves the photon in place.
    Signal,
    /// Absorbs the photon and erases which of its modes it came from.
    Trigger,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorGroup {
    pub name: String,
    pub modes: Vec<SpatialMode>,
    pub kind: DetectorKind,
}

impl DetectorGroup {
    pub fn signal(name: &str, modes: &[SpatialMode]) -> Self {
        DetectorGroup { name: name.to_string(), modes: modes.to_vec(), kind: DetectorKind::Signal }
    }

    pub fn trigger(name: &str, modes: &[SpatialMode]) -> Self {
        DetectorGroup { name: name.to_string(), modes: modes.to_vec(), kind: DetectorKind::Trigger }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Element(NetworkElement),
    Kerr(KerrCoupling),
    /// Point where channel photon `photon` (1-based) may suffer noise while
    /// in any of `modes`.
    Channel { photon: usize, modes: Vec<SpatialMode> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub probe: Probe,
    pub weights: CaseWeights,
    pub noise: Option<NoiseSpec>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CircuitNetwork {
    pub steps: Vec<Step>,
    pub detectors: Vec<DetectorGroup>,
    pub params: NetworkParams,
}

/// A QND branch of a network run before detection.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    /// `None` when the network has no Kerr couplings.
    pub branch: Option<QndBranch>,
    pub probability: f64,
    pub readout: Option<f64>,
    pub state: PureState,
}

impl CircuitNetwork {
    pub fn elements(&self) -> impl Iterator<Item = &NetworkElement> {
        self.steps.iter().filter_map(|s| match s {
            Step::Element(e) => Some(e),
            _ => None,
        })
    }

    pub fn couplings(&self) -> Vec<KerrCoupling> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Kerr(c) => Some(c.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn trigger(&self) -> Option<&DetectorGroup> {
        self.detectors.iter().find(|d| d.kind == DetectorKind::Trigger)
    }

    pub fn signal_slots(&self) -> Vec<&DetectorGroup> {
        self.detectors.iter().filter(|d| d.kind == DetectorKind::Signal).collect()
    }

    /// Applies only the linear elements, in order.
    pub fn apply_elements(&self, state: &PureState) -> Result<PureState> {
        self.elements().try_fold(state.clone(), |s, e| e.apply(&s))
    }

    /// Single-particle transform of the whole element chain.
    pub fn composed_transform(&self) -> Result<ModeTransform> {
        self.elements()
            .try_fold(ModeTransform::identity(), |t, e| t.then(e.transform()))
    }

    /// Runs the network with ideal discrimination at the branch-A peak.
    pub fn execute(&self, input: &PureState, noise: &PauliCombination) -> Result<Vec<BranchState>> {
        let probe = self.params.probe;
        self.execute_with(input, noise, |tagged| homodyne_discriminate(tagged, &probe))
    }

    /// Runs the network, using `measure` to resolve the QND block.
    ///
    /// Consecutive Kerr steps form one QND block, read out before the next
    /// non-Kerr step. Each outcome is feed-forward corrected and becomes a
    /// branch.
    pub fn execute_with<F>(&self, input: &PureState, noise: &PauliCombination, mut measure: F) -> Result<Vec<BranchState>>
    where
        F: FnMut(&TaggedState) -> Result<Vec<QndOutcome>>,
    {
        let mut branches = vec![BranchState { branch: None, probability: 1.0, readout: None, state: input.clone() }];
        let mut pending: Vec<KerrCoupling> = Vec::new();
        let mut measured = false;

        let mut resolve = |branches: Vec<BranchState>, pending: &mut Vec<KerrCoupling>| -> Result<Vec<BranchState>> {
            if pending.is_empty() {
                return Ok(branches);
            }
            if measured {
                return Err(Error::Network("more than one QND block".into()));
            }
            measured = true;
            let mut out = Vec::new();
            for b in branches {
                for o in measure(&tag_phases(&b.state, pending))? {
                    out.push(BranchState {
                        branch: Some(o.branch),
                        probability: b.probability * o.probability,
                        readout: Some(o.readout),
                        state: feed_forward(&o),
                    });
                }
            }
            pending.clear();
            Ok(out)
        };

        for step in &self.steps {
            match step {
                Step::Kerr(c) => pending.push(c.clone()),
                Step::Element(e) => {
                    branches = resolve(branches, &mut pending)?;
                    for b in &mut branches {
                        b.state = e.apply(&b.state)?;
                    }
                }
                Step::Channel { photon, modes } => {
                    branches = resolve(branches, &mut pending)?;
                    let op = photon
                        .checked_sub(1)
                        .and_then(|i| noise.get(i))
                        .copied()
                        .unwrap_or(PauliOp::I);
                    if op != PauliOp::I {
                        let t = op.transform(modes);
                        for b in &mut branches {
                            b.state = t.apply(&b.state)?;
                        }
                    }
                }
            }
        }
        resolve(branches, &mut pending)
    }
}

/// Removes the trigger photon by projecting it onto the equal-weight
/// superposition of the trigger's modes (its path is erased).
///
/// Kets without exactly one photon on the trigger modes are dropped. Returns
/// the normalized signal state and the projection probability.
pub fn herald_trigger(state: &PureState, trigger: &DetectorGroup) -> Result<(PureState, f64)> {
    let weight = 1.0 / (trigger.modes.len() as f64).sqrt();
    let mut by_pol: BTreeMap<Polarization, Vec<(FockKet, Complex64)>> = BTreeMap::new();
    for (ket, amp) in state.terms() {
        let n: u32 = trigger.modes.iter().map(|m| ket.mode_count(m)).sum();
        if n != 1 {
            continue;
        }
        let rail = ket
            .rails()
            .find(|r| trigger.modes.contains(&r.spatial))
            .expect("one trigger photon")
            .clone();
        let rest = ket.without_photon(&rail).expect("rail is occupied");
        by_pol.entry(rail.pol).or_default().push((rest, amp * weight));
    }
    let parts: Vec<PureState> = by_pol
        .into_values()
        .map(PureState::from_terms)
        .filter(|s| !s.is_empty())
        .collect();
    match parts.len() {
        0 => Ok((PureState::empty(), 0.0)),
        1 => {
            let p = parts[0].norm_sqr();
            Ok((parts[0].normalized()?, p))
        }
        _ => Err(Error::MixedHerald),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{fidelity, modes};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn herald_erases_trigger_path() {
        let [t1, t2, x, y] = modes(["T1", "T2", "x", "y"]);
        let s = PureState::from_real([
            (FockKet::from_rails([t1.h(), x.h()]), FRAC_1_SQRT_2),
            (FockKet::from_rails([t2.h(), y.h()]), FRAC_1_SQRT_2),
        ]);
        let trig = DetectorGroup::trigger("T", &[t1, t2]);
        let (out, p) = herald_trigger(&s, &trig).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let expected = PureState::from_real([
            (FockKet::from_rails([x.h()]), FRAC_1_SQRT_2),
            (FockKet::from_rails([y.h()]), FRAC_1_SQRT_2),
        ]);
        assert!((fidelity(&out, &expected) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn herald_rejects_polarization_entangled_trigger() {
        let [t1, x, y] = modes(["T1", "x", "y"]);
        let s = PureState::from_real([
            (FockKet::from_rails([t1.h(), x.h()]), FRAC_1_SQRT_2),
            (FockKet::from_rails([t1.v(), y.h()]), FRAC_1_SQRT_2),
        ]);
        let trig = DetectorGroup::trigger("T", &[t1]);
        assert_eq!(herald_trigger(&s, &trig).unwrap_err(), Error::MixedHerald);
    }

    #[test]
    fn herald_drops_double_trigger_kets() {
        let [t1] = modes(["T1"]);
        let s = PureState::basis(FockKet::from_counts([(t1.h(), 2)]));
        let (out, p) = herald_trigger(&s, &DetectorGroup::trigger("T", &[t1])).unwrap();
        assert!(out.is_empty());
        assert_eq!(p, 0.0);
    }

    #[test]
    fn empty_network_is_identity() {
        let net = CircuitNetwork::default();
        let s = PureState::basis(FockKet::from_rails([SpatialMode::new("a").h()]));
        let out = net.execute(&s, &[PauliOp::I; 3]).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].state, s);
        assert_eq!(out[0].branch, None);
    }
}
