//! The GHZ pipeline: the source-and-filter network, trigger heralding,
//! coincidence postselection, channel noise and receiver corrections.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::elements::{make_bs, make_hwp90, make_pbs, NetworkElement};
use crate::error::{Error, Result};
use crate::network::{herald_trigger, BranchState, CircuitNetwork, DetectorGroup, NetworkParams, Step};
use crate::noise::{channel_modes, classify_family, NoiseFamily, PauliCombination, PauliOp};
use crate::qnd::{default_couplings, homodyne_discriminate, QndBranch, QndOutcome, TaggedState};
use crate::source::dual_pass_emission;
use crate::state::{fidelity, modes, FockKet, Polarization, PureState, SpatialMode};

/// Projections below this probability are treated as impossible.
pub const PROBABILITY_FLOOR: f64 = 1e-15;

fn m(name: String) -> SpatialMode {
    SpatialMode::new(name)
}

fn el(e: Result<NetworkElement>) -> Step {
    Step::Element(e.expect("builtin wiring is valid"))
}

/// One side of the source-and-filter network.
///
/// `a` feeds the trigger and one position; `b` is split over the three
/// positions. Outputs land on `{prefix}1..3`.
fn side(steps: &mut Vec<Step>, s: u8, prefix: &str) {
    let a = m(format!("a{s}"));
    let b = m(format!("b{s}"));
    let t = m(format!("T{s}"));
    let x = m(format!("x{s}"));
    let [ya, yb] = [m(format!("y{s}a")), m(format!("y{s}b"))];
    let [u, w] = [m(format!("u{s}")), m(format!("w{s}"))];
    let [ua, uc] = [m(format!("u{s}a")), m(format!("u{s}c"))];
    let [wb, wc] = [m(format!("w{s}b")), m(format!("w{s}c"))];
    let [ka, kb, kc] = [m(format!("k{s}a")), m(format!("k{s}b")), m(format!("k{s}c"))];
    let [p1, p2, p3] = [1, 2, 3].map(|i| m(format!("{prefix}{i}")));

    steps.push(el(make_pbs(&a, None, &t, &x)));
    steps.push(el(make_bs(&x, None, &ya, &yb)));
    steps.push(Step::Element(make_hwp90(&yb)));
    steps.push(el(make_pbs(&b, None, &u, &w)));
    steps.push(el(make_bs(&u, None, &ua, &uc)));
    steps.push(el(make_bs(&w, None, &wb, &wc)));
    steps.push(el(make_pbs(&ua, Some(&ya), &p1, &ka)));
    steps.push(el(make_pbs(&yb, Some(&wb), &p2, &kb)));
    steps.push(el(make_pbs(&uc, Some(&wc), &p3, &kc)));
}

fn trigger_group() -> DetectorGroup {
    DetectorGroup::trigger("T", &modes(["T1", "T2"]))
}

/// The source-and-filter network with its channel points.
///
/// Detectors: trigger `T = {T1, T2}` and slots `A, B, C = {D_i, d_i}`.
pub fn build_ghzps() -> CircuitNetwork {
    let mut steps: Vec<Step> = default_couplings().into_iter().map(Step::Kerr).collect();
    side(&mut steps, 1, "D");
    side(&mut steps, 2, "d");
    for k in 1..=3 {
        steps.push(Step::Channel { photon: k, modes: channel_modes(k).to_vec() });
    }
    let mut detectors = vec![trigger_group()];
    for (k, name) in ["A", "B", "C"].into_iter().enumerate() {
        let [d, big_d] = channel_modes(k + 1);
        detectors.push(DetectorGroup::signal(name, &[big_d, d]));
    }
    CircuitNetwork { steps, detectors, params: NetworkParams::default() }
}

/// The receiver tail after the channel: a polarization flip on `D_i`, then
/// `PBS(d_i, D_i → e_i, E_i)`.
fn receiver_tail() -> Vec<Step> {
    let mut steps = Vec::new();
    for k in 1..=3 {
        let [d, big_d] = channel_modes(k);
        steps.push(Step::Element(make_hwp90(&big_d)));
        let e = m(format!("e{k}"));
        let big_e = m(format!("E{k}"));
        steps.push(el(make_pbs(&d, Some(&big_d), &e, &big_e)));
    }
    steps
}

/// The full network with the receiver tail. Slots `A, B, C = {e_i, E_i}`.
pub fn build_fig3() -> CircuitNetwork {
    let mut net = build_ghzps();
    net.steps.extend(receiver_tail());
    net.detectors.truncate(1);
    for (k, name) in ["A", "B", "C"].into_iter().enumerate() {
        let e = m(format!("e{}", k + 1));
        let big_e = m(format!("E{}", k + 1));
        net.detectors.push(DetectorGroup::signal(name, &[e, big_e]));
    }
    net
}

/// `(|HHV⟩ + |VVH⟩)/√2` on three modes.
pub fn ghz_target(on: &[SpatialMode]) -> PureState {
    use Polarization::{H, V};
    let ket = |p: [Polarization; 3]| FockKet::photons(on.iter().zip(p));
    PureState::from_real([
        (ket([H, H, V]), std::f64::consts::FRAC_1_SQRT_2),
        (ket([V, V, H]), std::f64::consts::FRAC_1_SQRT_2),
    ])
}

/// Conditional probabilities along one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityChain {
    /// Probability of the QND branch.
    pub branch: f64,
    /// One photon at the trigger and at every slot, given the branch.
    pub coincidence: f64,
    /// Trigger projection onto the path-erased mode, given coincidence.
    pub herald: f64,
    /// The detector pattern, given a heralded coincidence.
    pub pattern: f64,
}

impl ProbabilityChain {
    pub fn total(&self) -> f64 {
        self.branch * self.coincidence * self.herald * self.pattern
    }
}

/// A heralded coincidence state of one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedBranch {
    pub branch: Option<QndBranch>,
    pub readout: Option<f64>,
    pub chain: ProbabilityChain,
    pub state: PureState,
}

fn coincidence_groups(net: &CircuitNetwork) -> Vec<(Vec<SpatialMode>, u32)> {
    net.detectors.iter().map(|d| (d.modes.clone(), 1)).collect()
}

/// Postselects one photon per detector group, then heralds the trigger.
///
/// Branches with no coincidence are dropped.
pub fn herald_branches(net: &CircuitNetwork, branches: Vec<BranchState>) -> Result<Vec<HeraldedBranch>> {
    let trigger = net.trigger().ok_or_else(|| Error::Network("no trigger declared".into()))?;
    let groups = coincidence_groups(net);
    let mut out = Vec::new();
    for b in branches {
        let (clicked, p_c) = b.state.project_occupancy(&groups)?;
        if p_c <= PROBABILITY_FLOOR {
            continue;
        }
        let (state, p_h) = herald_trigger(&clicked, trigger)?;
        if p_h <= PROBABILITY_FLOOR {
            continue;
        }
        out.push(HeraldedBranch {
            branch: b.branch,
            readout: b.readout,
            chain: ProbabilityChain { branch: b.probability, coincidence: p_c, herald: p_h, pattern: 1.0 },
            state,
        });
    }
    Ok(out)
}

/// Runs the source-and-filter network on the two-pass emission.
pub fn run_ghzps(params: &NetworkParams) -> Result<Vec<HeraldedBranch>> {
    let mut net = build_ghzps();
    net.params = params.clone();
    let input = dual_pass_emission(&params.weights)?;
    herald_branches(&net, net.execute(&input, &[PauliOp::I; 3])?)
}

/// One mode per signal slot, in slot order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoincidencePattern {
    pub trigger: Option<String>,
    pub slots: Vec<SpatialMode>,
}

impl CoincidencePattern {
    /// Slot modes concatenated, e.g. `e1e2E3`.
    pub fn label(&self) -> String {
        self.slots.iter().map(|m| m.name()).collect()
    }

    /// Every detector that fired, trigger first.
    pub fn detectors(&self) -> Vec<String> {
        self.trigger
            .iter()
            .cloned()
            .chain(self.slots.iter().map(|m| m.name().to_string()))
            .collect()
    }
}

impl fmt::Display for CoincidencePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detectors().join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternOutcome {
    pub pattern: CoincidencePattern,
    pub probability: f64,
    pub state: PureState,
}

/// Resolves which mode of each signal slot fired.
///
/// Patterns come out in slot-mode order (each slot's modes in declaration
/// order, first slot slowest). Zero-probability patterns are omitted.
pub fn postselect_coincidence(state: &PureState, net: &CircuitNetwork) -> Result<Vec<PatternOutcome>> {
    let slots = net.signal_slots();
    let trigger = net.trigger().map(|t| t.name.clone());
    let mut choices: Vec<Vec<SpatialMode>> = vec![Vec::new()];
    for slot in &slots {
        choices = choices
            .into_iter()
            .flat_map(|prefix| {
                slot.modes.iter().map(move |mode| {
                    let mut next = prefix.clone();
                    next.push(mode.clone());
                    next
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for chosen in choices {
        let groups: Vec<(Vec<SpatialMode>, u32)> = slots
            .iter()
            .flat_map(|slot| {
                slot.modes
                    .iter()
                    .map(|mode| (vec![mode.clone()], u32::from(chosen.contains(mode))))
            })
            .collect();
        let (cond, p) = state.project_occupancy(&groups)?;
        if p > PROBABILITY_FLOOR {
            out.push(PatternOutcome {
                pattern: CoincidencePattern { trigger: trigger.clone(), slots: chosen },
                probability: p,
                state: cond,
            });
        }
    }
    Ok(out)
}

/// What the receiver knows about the channel state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CorrectionInput {
    /// The branch-A state.
    PhiPlus,
    Family(NoiseFamily),
}

impl fmt::Display for CorrectionInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrectionInput::PhiPlus => f.write_str("phi+"),
            CorrectionInput::Family(fam) => fam.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionRule {
    pub input: CorrectionInput,
    pub pattern: &'static str,
    pub ops: [PauliOp; 3],
}

const FAMILY_ROWS: [(crate::noise::FamilyKind, &str, [PauliOp; 3]); 8] = {
    use crate::noise::FamilyKind::*;
    use PauliOp::{I, X};
    [
        (Psi, "e1e2E3", [I, I, X]),
        (Psi, "E1E2e3", [I, X, I]),
        (Psi0, "e1e2e3", [I, I, I]),
        (Psi0, "E1E2E3", [X, I, I]),
        (Psi1, "E1e2e3", [X, I, I]),
        (Psi1, "e1E2E3", [I, I, I]),
        (Psi2, "e1E2e3", [I, X, I]),
        (Psi2, "E1e2E3", [I, I, X]),
    ]
};

/// Every correction row: the sixteen family rows (both signs share a
/// row) followed by the two branch-A rows.
pub fn correction_table() -> Vec<CorrectionRule> {
    let mut rows = Vec::new();
    for fam in NoiseFamily::all() {
        for (kind, pattern, ops) in FAMILY_ROWS {
            if kind == fam.kind {
                rows.push(CorrectionRule { input: CorrectionInput::Family(fam), pattern, ops });
            }
        }
    }
    for pattern in ["e1e2E3", "E1E2e3"] {
        rows.push(CorrectionRule { input: CorrectionInput::PhiPlus, pattern, ops: [PauliOp::I; 3] });
    }
    rows
}

pub fn lookup_correction(input: CorrectionInput, pattern: &str) -> Result<[PauliOp; 3]> {
    correction_table()
        .into_iter()
        .find(|r| r.input == input && r.pattern == pattern)
        .map(|r| r.ops)
        .ok_or_else(|| Error::ImpossiblePattern { input: input.to_string(), pattern: pattern.to_string() })
}

/// Whether the slot fired on its second mode (the `E` side).
fn pattern_bits(pattern: &CoincidencePattern, net: &CircuitNetwork) -> Option<[bool; 3]> {
    let slots = net.signal_slots();
    if slots.len() != 3 || pattern.slots.len() != 3 {
        return None;
    }
    let mut bits = [false; 3];
    for (k, slot) in slots.iter().enumerate() {
        bits[k] = slot.modes.iter().position(|x| *x == pattern.slots[k])? == 1;
    }
    Some(bits)
}

/// The correction the receiver applies, knowing only the branch and the
/// detector pattern. `None` for patterns outside the receiver's slots.
///
/// Branch B looks the pattern up in the family rows, which never share a
/// pattern. Branch A flips the photons where the pattern differs from
/// `e e E` or from its complement, whichever needs fewer flips.
pub fn receiver_correction(
    branch: Option<QndBranch>,
    pattern: &CoincidencePattern,
    net: &CircuitNetwork,
) -> Option<[PauliOp; 3]> {
    let label = pattern.label();
    if !FAMILY_ROWS.iter().any(|(_, p, _)| *p == label) {
        return None;
    }
    match branch {
        Some(QndBranch::B) => {
            FAMILY_ROWS.iter().find(|(_, p, _)| *p == label).map(|(_, _, ops)| *ops)
        }
        Some(QndBranch::A) => {
            let bits = pattern_bits(pattern, net)?;
            let diff = [bits[0], bits[1], !bits[2]];
            let weight = diff.iter().filter(|b| **b).count();
            let flip = |d: bool| if d == (weight <= 1) { PauliOp::X } else { PauliOp::I };
            Some(diff.map(flip))
        }
        None => None,
    }
}

/// Applies per-slot Pauli corrections on the modes that fired.
pub fn apply_correction(state: &PureState, on: &[SpatialMode], ops: &[PauliOp; 3]) -> Result<PureState> {
    let mut out = state.clone();
    for (mode, op) in on.iter().zip(ops) {
        if *op != PauliOp::I {
            out = op.transform(std::slice::from_ref(mode)).apply(&out)?;
        }
    }
    Ok(out)
}

/// One pattern of one branch of a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub branch: Option<QndBranch>,
    pub readout: Option<f64>,
    pub pattern: CoincidencePattern,
    pub chain: ProbabilityChain,
    /// The channel state's family, when the network has channel points and
    /// the state lies in the family set.
    pub family: Option<NoiseFamily>,
    pub correction: Option<[PauliOp; 3]>,
    pub fidelity: f64,
    pub state: PureState,
}

/// Splits after the last channel point.
fn split_at_channel(net: &CircuitNetwork) -> Option<(CircuitNetwork, CircuitNetwork)> {
    let idx = net.steps.iter().rposition(|s| matches!(s, Step::Channel { .. }))? + 1;
    let head = CircuitNetwork { steps: net.steps[..idx].to_vec(), detectors: Vec::new(), params: net.params.clone() };
    let tail = CircuitNetwork { steps: net.steps[idx..].to_vec(), detectors: Vec::new(), params: net.params.clone() };
    Some((head, tail))
}

fn channel_family(state: &PureState, net: &CircuitNetwork, head: &CircuitNetwork) -> Result<Option<NoiseFamily>> {
    let Some(trigger) = net.trigger() else { return Ok(None) };
    let mut groups = vec![(trigger.modes.clone(), 1)];
    for step in &head.steps {
        if let Step::Channel { modes, .. } = step {
            groups.push((modes.clone(), 1));
        }
    }
    let (clicked, p) = state.project_occupancy(&groups)?;
    if p <= PROBABILITY_FLOOR {
        return Ok(None);
    }
    let (heralded, p) = herald_trigger(&clicked, trigger)?;
    if p <= PROBABILITY_FLOOR {
        return Ok(None);
    }
    Ok(classify_family(&heralded).ok())
}

/// Runs a network end to end under one noise combination.
///
/// Every branch and every detector pattern with nonzero probability yields a
/// report; corrections come from [`receiver_correction`] and fidelity is
/// against the GHZ target on the modes that fired.
pub fn run_full(net: &CircuitNetwork, noise: &PauliCombination) -> Result<Vec<RunReport>> {
    let probe = net.params.probe;
    run_full_with(net, noise, |tagged| homodyne_discriminate(tagged, &probe))
}

/// [`run_full`] with a caller-supplied QND measurement.
pub fn run_full_with<F>(net: &CircuitNetwork, noise: &PauliCombination, mut measure: F) -> Result<Vec<RunReport>>
where
    F: FnMut(&TaggedState) -> Result<Vec<QndOutcome>>,
{
    let input = dual_pass_emission(&net.params.weights)?;
    let mut staged: Vec<(BranchState, Option<NoiseFamily>)> = Vec::new();
    match split_at_channel(net) {
        Some((head, tail)) => {
            if tail.steps.iter().any(|s| matches!(s, Step::Kerr(_))) {
                return Err(Error::Network("Kerr coupling after a channel point".into()));
            }
            for mut b in head.execute_with(&input, noise, &mut measure)? {
                let family = channel_family(&b.state, net, &head)?;
                b.state = tail.apply_elements(&b.state)?;
                staged.push((b, family));
            }
        }
        None => staged.extend(net.execute_with(&input, noise, &mut measure)?.into_iter().map(|b| (b, None))),
    }

    let mut reports = Vec::new();
    for (b, family) in staged {
        let heralded = herald_branches(net, vec![b])?;
        for h in heralded {
            for o in postselect_coincidence(&h.state, net)? {
                let correction = receiver_correction(h.branch, &o.pattern, net);
                let corrected = match &correction {
                    Some(ops) => apply_correction(&o.state, &o.pattern.slots, ops)?,
                    None => o.state.clone(),
                };
                let fid = if o.pattern.slots.len() == 3 { fidelity(&corrected, &ghz_target(&o.pattern.slots)) } else { 0.0 };
                reports.push(RunReport {
                    branch: h.branch,
                    readout: h.readout,
                    pattern: o.pattern,
                    chain: ProbabilityChain { pattern: o.probability, ..h.chain },
                    family,
                    correction,
                    fidelity: fid,
                    state: corrected,
                });
            }
        }
    }
    Ok(reports)
}

/// Probability-weighted corrected fidelity over all branches and patterns.
pub fn mean_fidelity(reports: &[RunReport]) -> f64 {
    let total: f64 = reports.iter().map(|r| r.chain.total()).sum();
    if total <= 0.0 {
        return 0.0;
    }
    reports.iter().map(|r| r.chain.total() * r.fidelity).sum::<f64>() / total
}

/// The receiver tail alone, with the `e_i, E_i` slots and the trigger.
pub fn build_receiver() -> CircuitNetwork {
    let fig3 = build_fig3();
    CircuitNetwork { steps: receiver_tail(), detectors: fig3.detectors, params: fig3.params }
}

/// The branch-A channel state: GHZ on `D_i` plus GHZ on `d_i`, equal weight.
pub fn phi_plus_channel_state() -> PureState {
    use Polarization::{H, V};
    let upper = modes(["D1", "D2", "D3"]);
    let lower = modes(["d1", "d2", "d3"]);
    let ket = |on: &[SpatialMode; 3], p: [Polarization; 3]| FockKet::photons(on.iter().zip(p));
    PureState::from_real([
        (ket(&upper, [H, H, V]), 0.5),
        (ket(&upper, [V, V, H]), 0.5),
        (ket(&lower, [H, H, V]), 0.5),
        (ket(&lower, [V, V, H]), 0.5),
    ])
}

/// Outcome of pushing a rule's input state through the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleCheck {
    pub probability: f64,
    pub fidelity: f64,
}

/// Sends the rule's input channel state through the receiver, postselects
/// the rule's pattern and applies its correction.
pub fn check_rule(rule: &CorrectionRule) -> Result<RuleCheck> {
    let input = match rule.input {
        CorrectionInput::PhiPlus => phi_plus_channel_state(),
        CorrectionInput::Family(f) => f.reference_state(),
    };
    let net = build_receiver();
    let out = net.apply_elements(&input)?;
    let Some(o) = postselect_coincidence(&out, &net)?
        .into_iter()
        .find(|o| o.pattern.label() == rule.pattern)
    else {
        return Ok(RuleCheck { probability: 0.0, fidelity: 0.0 });
    };
    let corrected = apply_correction(&o.state, &o.pattern.slots, &rule.ops)?;
    Ok(RuleCheck { probability: o.probability, fidelity: fidelity(&corrected, &ghz_target(&o.pattern.slots)) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_networks_are_isometric() {
        for net in [build_ghzps(), build_fig3()] {
            let t = net.composed_transform().unwrap();
            assert!(t.unitarity_deviation() < 1e-9);
        }
    }

    #[test]
    fn each_side_uses_five_pbs() {
        let n = build_ghzps()
            .elements()
            .filter(|e| matches!(e.kind(), crate::elements::ElementKind::Pbs { .. }))
            .count();
        assert_eq!(n, 10);
    }

    #[test]
    fn table_has_sixteen_family_rows() {
        let rows = correction_table();
        assert_eq!(rows.iter().filter(|r| matches!(r.input, CorrectionInput::Family(_))).count(), 16);
        assert!(lookup_correction(CorrectionInput::PhiPlus, "e1e2e3").is_err());
    }

    #[test]
    fn every_rule_restores_the_target() {
        for rule in correction_table() {
            let c = check_rule(&rule).unwrap();
            assert!((c.probability - 0.5).abs() < 1e-12, "{rule:?}");
            assert!(c.fidelity > 1.0 - 1e-12, "{rule:?}");
        }
    }

    #[test]
    fn branch_a_rule_keeps_noiseless_patterns() {
        let net = build_fig3();
        let pat = |names: [&str; 3]| CoincidencePattern { trigger: Some("T".into()), slots: modes(names).to_vec() };
        use PauliOp::{I, X};
        assert_eq!(receiver_correction(Some(QndBranch::A), &pat(["e1", "e2", "E3"]), &net), Some([I, I, I]));
        assert_eq!(receiver_correction(Some(QndBranch::A), &pat(["E1", "E2", "e3"]), &net), Some([I, I, I]));
        assert_eq!(receiver_correction(Some(QndBranch::A), &pat(["e1", "e2", "e3"]), &net), Some([I, I, X]));
        assert_eq!(receiver_correction(Some(QndBranch::A), &pat(["E1", "e2", "e3"]), &net), Some([I, X, I]));
    }
}
