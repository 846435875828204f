//! Polarization noise on the three channel photons and the eight noise
//! families it is expected to produce from ψ⁺.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{fidelity, FockKet, ModeTransform, Polarization, PureState, SpatialMode};

/// Matching threshold for family classification.
pub const FAMILY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliOp {
    I,
    X,
    Z,
    /// `Z·X`: `H → −V`, `V → H`.
    Y,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::Z, PauliOp::Y];

    pub fn flips(self) -> bool {
        matches!(self, PauliOp::X | PauliOp::Y)
    }

    /// Mode transform on the given spatial modes.
    pub fn transform(self, modes: &[SpatialMode]) -> ModeTransform {
        use Polarization::{H, V};
        let one = Complex64::new(1.0, 0.0);
        let columns = modes.iter().flat_map(|m| {
            let (h, v) = match self {
                PauliOp::I => (vec![(m.h(), one)], vec![(m.v(), one)]),
                PauliOp::X => (vec![(m.v(), one)], vec![(m.h(), one)]),
                PauliOp::Z => (vec![(m.h(), one)], vec![(m.v(), -one)]),
                PauliOp::Y => (vec![(m.v(), -one)], vec![(m.h(), one)]),
            };
            [(m.rail(H), h), (m.rail(V), v)]
        });
        ModeTransform::new(columns.collect::<Vec<_>>()).expect("Pauli operators are unitary")
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PauliOp::I => "I",
            PauliOp::X => "X",
            PauliOp::Z => "Z",
            PauliOp::Y => "Y",
        };
        f.write_str(s)
    }
}

/// One error on one channel photon (1 = A, 2 = B, 3 = C).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PauliError {
    pub photon: usize,
    pub op: PauliOp,
}

impl PauliError {
    pub fn new(photon: usize, op: PauliOp) -> Result<Self> {
        if !(1..=3).contains(&photon) {
            return Err(Error::PhotonIndex(photon));
        }
        Ok(PauliError { photon, op })
    }
}

impl fmt::Display for PauliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.op, self.photon)
    }
}

/// The two spatial modes photon `i` may occupy on its way to the receiver.
pub fn channel_modes(photon: usize) -> [SpatialMode; 2] {
    [SpatialMode::new(format!("d{photon}")), SpatialMode::new(format!("D{photon}"))]
}

/// Applies one error to the photon's `d_i`/`D_i` rails.
pub fn apply_pauli(state: &PureState, err: PauliError) -> Result<PureState> {
    if !(1..=3).contains(&err.photon) {
        return Err(Error::PhotonIndex(err.photon));
    }
    err.op.transform(&channel_modes(err.photon)).apply(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    Psi,
    Psi0,
    Psi1,
    Psi2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// One of ψ±, ψ₀±, ψ₁±, ψ₂±.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NoiseFamily {
    pub kind: FamilyKind,
    pub sign: Sign,
}

impl NoiseFamily {
    pub const PSI_PLUS: NoiseFamily = NoiseFamily { kind: FamilyKind::Psi, sign: Sign::Plus };

    pub fn all() -> [NoiseFamily; 8] {
        use FamilyKind::*;
        let mut out = [Self::PSI_PLUS; 8];
        for (i, kind) in [Psi, Psi0, Psi1, Psi2].into_iter().enumerate() {
            out[2 * i] = NoiseFamily { kind, sign: Sign::Plus };
            out[2 * i + 1] = NoiseFamily { kind, sign: Sign::Minus };
        }
        out
    }

    /// Polarizations of the two terms: the first goes with spatial patterns
    /// `d1d2D3, D1D2d3`, the second with `d1D2d3, D1d2D3`.
    pub fn polarizations(self) -> ([Polarization; 3], [Polarization; 3]) {
        use Polarization::{H, V};
        match self.kind {
            FamilyKind::Psi => ([H, H, V], [V, V, H]),
            FamilyKind::Psi0 => ([H, H, H], [V, V, V]),
            FamilyKind::Psi1 => ([V, H, H], [H, V, V]),
            FamilyKind::Psi2 => ([H, V, H], [V, H, V]),
        }
    }

    /// The literal four-term state.
    pub fn reference_state(self) -> PureState {
        let (first, second) = self.polarizations();
        let sign = match self.sign {
            Sign::Plus => 0.5,
            Sign::Minus => -0.5,
        };
        let [d1, big_d1] = channel_modes(1);
        let [d2, big_d2] = channel_modes(2);
        let [d3, big_d3] = channel_modes(3);
        let ket = |pols: [Polarization; 3], m: [&SpatialMode; 3]| FockKet::photons(m.into_iter().zip(pols));
        PureState::from_real([
            (ket(first, [&d1, &d2, &big_d3]), 0.5),
            (ket(first, [&big_d1, &big_d2, &d3]), 0.5),
            (ket(second, [&d1, &big_d2, &d3]), sign),
            (ket(second, [&big_d1, &d2, &big_d3]), sign),
        ])
    }

    pub fn label(self) -> String {
        let base = match self.kind {
            FamilyKind::Psi => "psi",
            FamilyKind::Psi0 => "psi0",
            FamilyKind::Psi1 => "psi1",
            FamilyKind::Psi2 => "psi2",
        };
        let sign = match self.sign {
            Sign::Plus => "+",
            Sign::Minus => "-",
        };
        format!("{base}{sign}")
    }
}

impl fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// The noiseless channel state ψ⁺.
pub fn psi_plus() -> PureState {
    NoiseFamily::PSI_PLUS.reference_state()
}

/// Identifies the family by a fidelity-one match, ignoring global phase.
pub fn classify_family(state: &PureState) -> Result<NoiseFamily> {
    let mut best = 0.0_f64;
    for family in NoiseFamily::all() {
        let f = fidelity(state, &family.reference_state());
        if f >= 1.0 - FAMILY_TOLERANCE {
            return Ok(family);
        }
        best = best.max(f);
    }
    Err(Error::OutsideModel { best_fidelity: best })
}

/// One Pauli per photon.
pub type PauliCombination = [PauliOp; 3];

/// Applies a per-photon combination.
pub fn apply_combination(state: &PureState, combo: &PauliCombination) -> Result<PureState> {
    let mut out = state.clone();
    for (i, op) in combo.iter().enumerate() {
        if *op != PauliOp::I {
            out = apply_pauli(&out, PauliError { photon: i + 1, op: *op })?;
        }
    }
    Ok(out)
}

/// All 64 per-photon combinations, in lexicographic `(I, X, Z, Y)` order.
pub fn all_combinations() -> Vec<PauliCombination> {
    let mut out = Vec::with_capacity(64);
    for a in PauliOp::ALL {
        for b in PauliOp::ALL {
            for c in PauliOp::ALL {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Independent depolarization of each photon: no error with `1 − p`,
/// each of X, Z, Y with `p/3`. Zero-weight combinations are omitted.
pub fn depolarizing_mixture(p: f64) -> Result<Vec<(f64, PauliCombination)>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityRange(p));
    }
    let single = |op: PauliOp| if op == PauliOp::I { 1.0 - p } else { p / 3.0 };
    Ok(all_combinations()
        .into_iter()
        .map(|c| (c.iter().map(|&op| single(op)).product::<f64>(), c))
        .filter(|(w, _)| *w > 0.0)
        .collect())
}

/// Noise settings from the command line or a network header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NoiseSpec {
    /// Fixed errors, e.g. `X@1,Z@3`.
    Errors(Vec<PauliError>),
    /// Per-photon depolarizing probability, e.g. `p=0.1`.
    Depolarizing(f64),
}

impl NoiseSpec {
    /// Folds a list of errors into one op per photon.
    pub fn combination(errors: &[PauliError]) -> PauliCombination {
        let mut combo = [PauliOp::I; 3];
        for e in errors {
            combo[e.photon - 1] = compose(e.op, combo[e.photon - 1]);
        }
        combo
    }
}

/// `later · earlier` up to global phase.
fn compose(later: PauliOp, earlier: PauliOp) -> PauliOp {
    let flips = later.flips() ^ earlier.flips();
    let phase = matches!(later, PauliOp::Z | PauliOp::Y) ^ matches!(earlier, PauliOp::Z | PauliOp::Y);
    match (flips, phase) {
        (false, false) => PauliOp::I,
        (true, false) => PauliOp::X,
        (false, true) => PauliOp::Z,
        (true, true) => PauliOp::Y,
    }
}

impl FromStr for NoiseSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(p) = s.strip_prefix("p=") {
            let p: f64 = p.parse().map_err(|_| format!("invalid probability '{p}'"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("probability {p} outside [0, 1]"));
            }
            return Ok(NoiseSpec::Depolarizing(p));
        }
        if s.is_empty() || s.eq_ignore_ascii_case("none") {
            return Ok(NoiseSpec::Errors(Vec::new()));
        }
        let errors = s
            .split(',')
            .map(|item| {
                let (op, photon) = item
                    .trim()
                    .split_once('@')
                    .ok_or_else(|| format!("expected OP@N, got '{item}'"))?;
                let op = match op {
                    "I" => PauliOp::I,
                    "X" => PauliOp::X,
                    "Z" => PauliOp::Z,
                    "Y" => PauliOp::Y,
                    _ => return Err(format!("unknown Pauli '{op}'")),
                };
                let photon: usize = photon.parse().map_err(|_| format!("invalid photon index '{photon}'"))?;
                PauliError::new(photon, op).map_err(|e| e.to_string())
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(NoiseSpec::Errors(errors))
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Depolarizing(p) => write!(f, "p={p}"),
            NoiseSpec::Errors(errs) if errs.is_empty() => f.write_str("none"),
            NoiseSpec::Errors(errs) => {
                let parts: Vec<String> = errs.iter().map(ToString::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family_of(combo: PauliCombination) -> Result<NoiseFamily> {
        classify_family(&apply_combination(&psi_plus(), &combo).unwrap())
    }

    #[test]
    fn references_are_normalized_and_orthogonal() {
        let fams = NoiseFamily::all();
        for (i, a) in fams.iter().enumerate() {
            let sa = a.reference_state();
            assert!((sa.norm() - 1.0).abs() < 1e-12);
            for b in &fams[i + 1..] {
                assert!(sa.inner(&b.reference_state()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn bit_flip_on_c_gives_psi0() {
        use PauliOp::*;
        assert_eq!(family_of([I, I, X]).unwrap(), NoiseFamily { kind: FamilyKind::Psi0, sign: Sign::Plus });
    }

    #[test]
    fn phase_flip_on_any_photon_gives_psi_minus() {
        use PauliOp::*;
        let minus = NoiseFamily { kind: FamilyKind::Psi, sign: Sign::Minus };
        for combo in [[Z, I, I], [I, Z, I], [I, I, Z]] {
            assert_eq!(family_of(combo).unwrap(), minus);
        }
    }

    #[test]
    fn no_error_leaves_psi_plus() {
        assert_eq!(family_of([PauliOp::I; 3]).unwrap(), NoiseFamily::PSI_PLUS);
    }

    #[test]
    fn paired_flips_reach_psi1_and_psi2() {
        use PauliOp::*;
        assert_eq!(family_of([X, I, X]).unwrap().kind, FamilyKind::Psi1);
        assert_eq!(family_of([I, X, X]).unwrap().kind, FamilyKind::Psi2);
    }

    #[test]
    fn single_flip_on_a_leaves_the_family_set() {
        // X_A ψ⁺ = ½(VHV·(d1d2D3 + D1D2d3) + HVH·(d1D2d3 + D1d2D3)) pairs the
        // ψ₂ polarizations with the opposite spatial patterns.
        use PauliOp::*;
        match family_of([X, I, I]) {
            Err(Error::OutsideModel { best_fidelity }) => assert!(best_fidelity < 1e-12),
            other => panic!("expected outside-model, got {other:?}"),
        }
    }

    #[test]
    fn literal_families_classify_under_global_phase() {
        let s = NoiseFamily { kind: FamilyKind::Psi2, sign: Sign::Plus }
            .reference_state()
            .scaled(Complex64::from_polar(1.0, std::f64::consts::PI / 7.0));
        assert_eq!(classify_family(&s).unwrap().label(), "psi2+");
        let lit = NoiseFamily { kind: FamilyKind::Psi1, sign: Sign::Minus }.reference_state();
        assert_eq!(classify_family(&lit).unwrap().label(), "psi1-");
    }

    #[test]
    fn paulis_are_involutions() {
        let s = psi_plus();
        for op in [PauliOp::X, PauliOp::Z] {
            for photon in 1..=3 {
                let e = PauliError { photon, op };
                let twice = apply_pauli(&apply_pauli(&s, e).unwrap(), e).unwrap();
                assert!(twice.add(&s.scaled(Complex64::new(-1.0, 0.0))).norm() < 1e-12);
            }
        }
        assert_eq!(PauliError::new(4, PauliOp::X).unwrap_err(), Error::PhotonIndex(4));
        assert!(apply_pauli(&s, PauliError { photon: 0, op: PauliOp::X }).is_err());
    }

    #[test]
    fn mixture_weights() {
        let m = depolarizing_mixture(0.0).unwrap();
        assert_eq!(m, vec![(1.0, [PauliOp::I; 3])]);
        let m = depolarizing_mixture(0.75).unwrap();
        assert_eq!(m.len(), 64);
        for (w, _) in &m {
            assert!((w - 1.0 / 64.0).abs() < 1e-15);
        }
        let m = depolarizing_mixture(0.1).unwrap();
        assert!((m.iter().map(|(w, _)| w).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(depolarizing_mixture(1.5).unwrap_err(), Error::ProbabilityRange(1.5));
    }

    #[test]
    fn noise_spec_parsing() {
        let spec: NoiseSpec = "X@1,Z@3".parse().unwrap();
        assert_eq!(
            spec,
            NoiseSpec::Errors(vec![
                PauliError { photon: 1, op: PauliOp::X },
                PauliError { photon: 3, op: PauliOp::Z }
            ])
        );
        assert_eq!(spec.to_string(), "X@1,Z@3");
        assert_eq!("p=0.1".parse::<NoiseSpec>().unwrap(), NoiseSpec::Depolarizing(0.1));
        assert!("X@4".parse::<NoiseSpec>().is_err());
        assert!("Q@1".parse::<NoiseSpec>().is_err());
        assert!("p=2".parse::<NoiseSpec>().is_err());
        let errs = [PauliError { photon: 2, op: PauliOp::X }, PauliError { photon: 2, op: PauliOp::Z }];
        assert_eq!(NoiseSpec::combination(&errs), [PauliOp::I, PauliOp::Y, PauliOp::I]);
    }
}
