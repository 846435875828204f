//! Optical elements as rail-level mode transforms.
//!
//! Sign conventions: a PBS transmits H and reflects V with no extra phase.
//! A BS sends `in1 → (out1 + out2)/√2` and `in2 → (−out1 + out2)/√2`.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{ModeTransform, Polarization, PureState, SpatialMode};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const S: Complex64 = Complex64 { re: FRAC_1_SQRT_2, im: 0.0 };
const MINUS_S: Complex64 = Complex64 { re: -FRAC_1_SQRT_2, im: 0.0 };

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementKind {
    Pbs { in1: SpatialMode, in2: Option<SpatialMode>, out_t: SpatialMode, out_r: SpatialMode },
    Bs { in1: SpatialMode, in2: Option<SpatialMode>, out1: SpatialMode, out2: SpatialMode },
    Hwp45 { mode: SpatialMode },
    Hwp90 { mode: SpatialMode },
    Route { from: SpatialMode, to: SpatialMode },
}

impl ElementKind {
    /// Modes read by the element.
    pub fn inputs(&self) -> Vec<SpatialMode> {
        match self {
            ElementKind::Pbs { in1, in2, .. } | ElementKind::Bs { in1, in2, .. } => {
                std::iter::once(in1.clone()).chain(in2.clone()).collect()
            }
            ElementKind::Hwp45 { mode } | ElementKind::Hwp90 { mode } => vec![mode.clone()],
            ElementKind::Route { from, .. } => vec![from.clone()],
        }
    }

    /// Modes written by the element. Wave plates act in place.
    pub fn outputs(&self) -> Vec<SpatialMode> {
        match self {
            ElementKind::Pbs { out_t, out_r, .. } => vec![out_t.clone(), out_r.clone()],
            ElementKind::Bs { out1, out2, .. } => vec![out1.clone(), out2.clone()],
            ElementKind::Hwp45 { mode } | ElementKind::Hwp90 { mode } => vec![mode.clone()],
            ElementKind::Route { to, .. } => vec![to.clone()],
        }
    }

    pub fn is_in_place(&self) -> bool {
        matches!(self, ElementKind::Hwp45 { .. } | ElementKind::Hwp90 { .. })
    }
}

fn port(m: &Option<SpatialMode>) -> &str {
    m.as_ref().map_or("_", |m| m.name())
}

impl fmt::Display for ElementKind {
    /// The element's line in the circuit description language.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementKind::Pbs { in1, in2, out_t, out_r } => {
                write!(f, "pbs {in1} {} -> {out_t} {out_r}", port(in2))
            }
            ElementKind::Bs { in1, in2, out1, out2 } => write!(f, "bs {in1} {} -> {out1} {out2}", port(in2)),
            ElementKind::Hwp45 { mode } => write!(f, "hwp45 {mode}"),
            ElementKind::Hwp90 { mode } => write!(f, "hwp90 {mode}"),
            ElementKind::Route { from, to } => write!(f, "route {from} -> {to}"),
        }
    }
}

/// An optical element: its wiring plus the unitary it applies.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkElement {
    kind: ElementKind,
    transform: ModeTransform,
}

impl NetworkElement {
    pub fn kind(&self) -> &ElementKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    pub fn transform(&self) -> &ModeTransform {
        &self.transform
    }

    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        self.transform.apply(state)
    }
}

fn distinct<'a>(modes: impl IntoIterator<Item = &'a SpatialMode>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for m in modes {
        if !seen.insert(m) {
            return Err(Error::DuplicateMode(m.clone()));
        }
    }
    Ok(())
}

/// Polarizing beam splitter: H transmits (`in1 → out_t`, `in2 → out_r`),
/// V reflects (`in1 → out_r`, `in2 → out_t`). `in2` may be an unused port.
pub fn make_pbs(
    in1: &SpatialMode,
    in2: Option<&SpatialMode>,
    out_t: &SpatialMode,
    out_r: &SpatialMode,
) -> Result<NetworkElement> {
    distinct([in1, out_t, out_r].into_iter().chain(in2))?;
    let mut columns = vec![
        (in1.h(), vec![(out_t.h(), ONE)]),
        (in1.v(), vec![(out_r.v(), ONE)]),
    ];
    if let Some(in2) = in2 {
        columns.push((in2.h(), vec![(out_r.h(), ONE)]));
        columns.push((in2.v(), vec![(out_t.v(), ONE)]));
    }
    Ok(NetworkElement {
        kind: ElementKind::Pbs { in1: in1.clone(), in2: in2.cloned(), out_t: out_t.clone(), out_r: out_r.clone() },
        transform: ModeTransform::new(columns)?,
    })
}

/// Polarization-independent 50:50 beam splitter.
pub fn make_bs(
    in1: &SpatialMode,
    in2: Option<&SpatialMode>,
    out1: &SpatialMode,
    out2: &SpatialMode,
) -> Result<NetworkElement> {
    distinct([in1, out1, out2].into_iter().chain(in2))?;
    let mut columns = Vec::new();
    for p in Polarization::BOTH {
        columns.push((in1.rail(p), vec![(out1.rail(p), S), (out2.rail(p), S)]));
        if let Some(in2) = in2 {
            columns.push((in2.rail(p), vec![(out1.rail(p), MINUS_S), (out2.rail(p), S)]));
        }
    }
    Ok(NetworkElement {
        kind: ElementKind::Bs { in1: in1.clone(), in2: in2.cloned(), out1: out1.clone(), out2: out2.clone() },
        transform: ModeTransform::new(columns)?,
    })
}

/// Half-wave plate at 22.5°: a Hadamard on polarization.
pub fn make_hwp45(mode: &SpatialMode) -> NetworkElement {
    let transform = ModeTransform::new([
        (mode.h(), vec![(mode.h(), S), (mode.v(), S)]),
        (mode.v(), vec![(mode.h(), S), (mode.v(), MINUS_S)]),
    ])
    .expect("hadamard is unitary");
    NetworkElement { kind: ElementKind::Hwp45 { mode: mode.clone() }, transform }
}

/// Half-wave plate at 45°: swaps H and V.
pub fn make_hwp90(mode: &SpatialMode) -> NetworkElement {
    NetworkElement {
        kind: ElementKind::Hwp90 { mode: mode.clone() },
        transform: polarization_flip(mode),
    }
}

pub(crate) fn polarization_flip(mode: &SpatialMode) -> ModeTransform {
    ModeTransform::new([
        (mode.h(), vec![(mode.v(), ONE)]),
        (mode.v(), vec![(mode.h(), ONE)]),
    ])
    .expect("swap is unitary")
}

/// Relabels a spatial mode (mirror or fiber), polarization untouched.
pub fn make_route(from: &SpatialMode, to: &SpatialMode) -> Result<NetworkElement> {
    distinct([from, to])?;
    let transform = ModeTransform::new(Polarization::BOTH.map(|p| (from.rail(p), vec![(to.rail(p), ONE)])))?;
    Ok(NetworkElement { kind: ElementKind::Route { from: from.clone(), to: to.clone() }, transform })
}

/// Rebuilds an element from its wiring.
pub fn build(kind: &ElementKind) -> Result<NetworkElement> {
    match kind {
        ElementKind::Pbs { in1, in2, out_t, out_r } => make_pbs(in1, in2.as_ref(), out_t, out_r),
        ElementKind::Bs { in1, in2, out1, out2 } => make_bs(in1, in2.as_ref(), out1, out2),
        ElementKind::Hwp45 { mode } => Ok(make_hwp45(mode)),
        ElementKind::Hwp90 { mode } => Ok(make_hwp90(mode)),
        ElementKind::Route { from, to } => make_route(from, to),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{fidelity, modes, FockKet, Rail};
    use Polarization::{H, V};

    fn photon(rail: Rail) -> PureState {
        PureState::basis(FockKet::from_rails([rail]))
    }

    fn superpose(terms: &[(Rail, f64)]) -> PureState {
        PureState::from_real(terms.iter().map(|(r, a)| (FockKet::from_rails([r.clone()]), *a)))
    }

    fn assert_same(a: &PureState, b: &PureState) {
        assert!((a.add(&b.scaled(Complex64::new(-1.0, 0.0)))).norm() < 1e-12, "{a:?} != {b:?}");
    }

    #[test]
    fn pbs_routes_by_polarization() {
        let [i1, i2, t, r] = modes(["i1", "i2", "t", "r"]);
        let pbs = make_pbs(&i1, Some(&i2), &t, &r).unwrap();
        assert_same(&pbs.apply(&photon(i1.h())).unwrap(), &photon(t.h()));
        assert_same(&pbs.apply(&photon(i1.v())).unwrap(), &photon(r.v()));
        assert_same(&pbs.apply(&photon(i2.h())).unwrap(), &photon(r.h()));
        assert_same(&pbs.apply(&photon(i2.v())).unwrap(), &photon(t.v()));
        let diag = superpose(&[(i1.h(), FRAC_1_SQRT_2), (i1.v(), FRAC_1_SQRT_2)]);
        let out = pbs.apply(&diag).unwrap();
        assert_same(&out, &superpose(&[(t.h(), FRAC_1_SQRT_2), (r.v(), FRAC_1_SQRT_2)]));
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_ports_are_rejected() {
        let [d1, e1, big_e1] = modes(["d1", "e1", "E1"]);
        assert_eq!(make_pbs(&d1, Some(&d1), &e1, &big_e1).unwrap_err(), Error::DuplicateMode(d1.clone()));
        assert_eq!(make_bs(&d1, None, &e1, &e1).unwrap_err(), Error::DuplicateMode(e1.clone()));
        assert!(make_route(&d1, &d1).is_err());
    }

    #[test]
    fn bs_splits_evenly() {
        let [i1, i2, o1, o2] = modes(["i1", "i2", "o1", "o2"]);
        let bs = make_bs(&i1, Some(&i2), &o1, &o2).unwrap();
        let out = bs.apply(&photon(i1.v())).unwrap();
        assert_same(&out, &superpose(&[(o1.v(), FRAC_1_SQRT_2), (o2.v(), FRAC_1_SQRT_2)]));
        let out = bs.apply(&photon(i2.h())).unwrap();
        assert_same(&out, &superpose(&[(o1.h(), -FRAC_1_SQRT_2), (o2.h(), FRAC_1_SQRT_2)]));
        // Hong–Ou–Mandel
        let two = PureState::basis(FockKet::from_rails([i1.h(), i2.h()]));
        let out = bs.apply(&two).unwrap();
        assert_eq!(out.amplitude(&FockKet::from_rails([o1.h(), o2.h()])).norm(), 0.0);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wave_plates() {
        let m = SpatialMode::new("x");
        let h45 = make_hwp45(&m);
        assert_same(&h45.apply(&photon(m.h())).unwrap(), &superpose(&[(m.h(), FRAC_1_SQRT_2), (m.v(), FRAC_1_SQRT_2)]));
        assert_same(&h45.apply(&photon(m.v())).unwrap(), &superpose(&[(m.h(), FRAC_1_SQRT_2), (m.v(), -FRAC_1_SQRT_2)]));
        let h90 = make_hwp90(&m);
        assert_same(&h90.apply(&photon(m.v())).unwrap(), &photon(m.h()));
        assert_same(&h90.apply(&photon(m.h())).unwrap(), &photon(m.v()));
        for plate in [h45, h90] {
            for p in [H, V] {
                let twice = plate.apply(&plate.apply(&photon(m.rail(p))).unwrap()).unwrap();
                assert_same(&twice, &photon(m.rail(p)));
            }
        }
    }

    #[test]
    fn route_relabels_and_inverts() {
        let [t1, t] = modes(["T1", "T"]);
        let r = make_route(&t1, &t).unwrap();
        assert_same(&r.apply(&photon(t1.h())).unwrap(), &photon(t.h()));
        let back = make_route(&t, &t1).unwrap();
        let s = superpose(&[(t1.h(), 0.6), (t1.v(), 0.8)]);
        let round = back.apply(&r.apply(&s).unwrap()).unwrap();
        assert!((fidelity(&round, &s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn every_constructor_is_unitary() {
        let [a, b, c, d] = modes(["a", "b", "c", "d"]);
        let all = [
            make_pbs(&a, Some(&b), &c, &d).unwrap(),
            make_pbs(&a, None, &c, &d).unwrap(),
            make_bs(&a, Some(&b), &c, &d).unwrap(),
            make_hwp45(&a),
            make_hwp90(&a),
            make_route(&a, &b).unwrap(),
        ];
        for e in &all {
            assert!(e.transform().unitarity_deviation() < 1e-12, "{}", e.name());
            assert_eq!(build(e.kind()).unwrap(), *e);
        }
    }
}
