//! Linear mode transforms acting on creation operators.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ket::{FockKet, Rail};
use super::pure::PureState;
use crate::error::{Error, Result};

/// Isometry tolerance used when a transform is constructed or applied.
pub const UNITARITY_TOLERANCE: f64 = 1e-9;

/// A linear map on rails: `a†_in → Σ U[out, in] a†_out`.
///
/// Rails without a column map to themselves. The columns must be orthonormal
/// (`U†U = I` on the declared inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform {
    columns: BTreeMap<Rail, Vec<(Rail, Complex64)>>,
}

impl ModeTransform {
    pub fn identity() -> Self {
        ModeTransform { columns: BTreeMap::new() }
    }

    /// Builds a transform from explicit columns, rejecting non-isometries.
    pub fn new<I>(columns: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rail, Vec<(Rail, Complex64)>)>,
    {
        let mut map = BTreeMap::new();
        for (input, image) in columns {
            let mut merged: BTreeMap<Rail, Complex64> = BTreeMap::new();
            for (r, a) in image {
                *merged.entry(r).or_default() += a;
            }
            let image: Vec<_> = merged.into_iter().filter(|(_, a)| a.norm() > 1e-15).collect();
            map.insert(input, image);
        }
        let t = ModeTransform { columns: map };
        let deviation = t.unitarity_deviation();
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(t)
    }

    /// Builds a transform from a dense `outputs × inputs` matrix.
    pub fn from_matrix(inputs: &[Rail], outputs: &[Rail], matrix: &DMatrix<Complex64>) -> Result<Self> {
        assert_eq!(matrix.shape(), (outputs.len(), inputs.len()), "matrix shape mismatch");
        Self::new(inputs.iter().enumerate().map(|(j, input)| {
            let image = outputs
                .iter()
                .enumerate()
                .map(|(i, out)| (out.clone(), matrix[(i, j)]))
                .collect();
            (input.clone(), image)
        }))
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Rail> {
        self.columns.keys()
    }

    /// Every rail that appears in some image.
    pub fn outputs(&self) -> BTreeSet<Rail> {
        self.columns
            .values()
            .flat_map(|c| c.iter().map(|(r, _)| r.clone()))
            .collect()
    }

    /// The image of one rail; untouched rails map to themselves.
    pub fn image(&self, rail: &Rail) -> Vec<(Rail, Complex64)> {
        match self.columns.get(rail) {
            Some(c) => c.clone(),
            None => vec![(rail.clone(), Complex64::new(1.0, 0.0))],
        }
    }

    /// `max |(U†U − I)_{ij}|` over the declared inputs.
    pub fn unitarity_deviation(&self) -> f64 {
        let cols: Vec<BTreeMap<&Rail, Complex64>> = self
            .columns
            .values()
            .map(|c| c.iter().map(|(r, a)| (r, *a)).collect())
            .collect();
        let mut worst = 0.0_f64;
        for (i, ci) in cols.iter().enumerate() {
            for (j, cj) in cols.iter().enumerate().skip(i) {
                let g: Complex64 = ci
                    .iter()
                    .filter_map(|(r, a)| cj.get(r).map(|b| a.conj() * b))
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    /// `self` followed by `next`.
    ///
    /// Rails that `self` writes without consuming are taken to be empty on
    /// entry, so they are not part of the composite's domain.
    pub fn then(&self, next: &ModeTransform) -> Result<ModeTransform> {
        let fresh: BTreeSet<Rail> = self
            .outputs()
            .into_iter()
            .filter(|r| !self.columns.contains_key(r))
            .collect();
        let inputs: BTreeSet<Rail> = self
            .columns
            .keys()
            .chain(next.columns.keys().filter(|r| !fresh.contains(*r)))
            .cloned()
            .collect();
        ModeTransform::new(inputs.into_iter().map(|r| {
            let image = self
                .image(&r)
                .into_iter()
                .flat_map(|(mid, a)| next.image(&mid).into_iter().map(move |(out, b)| (out, a * b)))
                .collect();
            (r, image)
        }))
    }

    /// Dense single-particle matrix over `rails` (rows: outputs, columns: inputs).
    pub fn matrix_over(&self, rails: &[Rail]) -> DMatrix<Complex64> {
        let index: BTreeMap<&Rail, usize> = rails.iter().enumerate().map(|(i, r)| (r, i)).collect();
        let mut m = DMatrix::zeros(rails.len(), rails.len());
        for (j, r) in rails.iter().enumerate() {
            for (out, a) in self.image(r) {
                if let Some(&i) = index.get(&out) {
                    m[(i, j)] += a;
                }
            }
        }
        m
    }

    /// Rewrites every creation operator through the transform and expands
    /// the products, with `√(n!)` bosonic normalization on both sides.
    ///
    /// Fails if the state occupies an output rail that the transform does not
    /// also consume, since the map would then not be unitary on the state.
    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        let consumed: BTreeSet<&Rail> = self.columns.keys().collect();
        let fresh: BTreeSet<Rail> = self
            .outputs()
            .into_iter()
            .filter(|r| !consumed.contains(r))
            .collect();
        let mut out = PureState::empty();
        for (ket, amp) in state.terms() {
            if let Some(r) = ket.rails().find(|r| fresh.contains(*r)) {
                return Err(Error::OutputOccupied(r.clone()));
            }
            let mut partial: BTreeMap<Vec<Rail>, Complex64> = BTreeMap::new();
            partial.insert(Vec::new(), amp / ket.factorial_product().sqrt());
            for photon in ket.photon_rails() {
                let image = self.image(&photon);
                let mut next: BTreeMap<Vec<Rail>, Complex64> = BTreeMap::new();
                for (rails, c) in &partial {
                    for (target, u) in &image {
                        let mut grown = rails.clone();
                        let pos = grown.partition_point(|r| r <= target);
                        grown.insert(pos, target.clone());
                        *next.entry(grown).or_default() += c * u;
                    }
                }
                partial = next;
            }
            for (rails, c) in partial {
                let k = FockKet::from_rails(rails);
                let norm = k.factorial_product().sqrt();
                out.accumulate(k, c * norm);
            }
        }
        out.prune();
        Ok(out)
    }
}

/// Free-function form of [`ModeTransform::apply`].
pub fn apply_mode_transform(state: &PureState, transform: &ModeTransform) -> Result<PureState> {
    transform.apply(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ket::{modes, Polarization};
    use crate::state::pure::fidelity;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn mixer(p: Polarization) -> ModeTransform {
        let [i1, i2, o1, o2] = modes(["i1", "i2", "o1", "o2"]);
        ModeTransform::new([
            (i1.rail(p), vec![(o1.rail(p), c(FRAC_1_SQRT_2)), (o2.rail(p), c(FRAC_1_SQRT_2))]),
            (i2.rail(p), vec![(o1.rail(p), c(-FRAC_1_SQRT_2)), (o2.rail(p), c(FRAC_1_SQRT_2))]),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_non_isometry() {
        let [t1, t2, t] = modes(["T1", "T2", "T"]);
        let err = ModeTransform::new([
            (t1.h(), vec![(t.h(), c(1.0))]),
            (t2.h(), vec![(t.h(), c(1.0))]),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::NonUnitary { .. }));
    }

    #[test]
    fn identical_photons_bunch_at_a_balanced_mixer() {
        // (c1† + c2†)(−c1† + c2†)/2 = (c2†² − c1†²)/2: no coincidence term.
        let [i1, i2, o1, o2] = modes(["i1", "i2", "o1", "o2"]);
        let input = PureState::basis(FockKet::from_rails([i1.h(), i2.h()]));
        let out = mixer(Polarization::H).apply(&input).unwrap();
        let coincidence = FockKet::from_rails([o1.h(), o2.h()]);
        assert_eq!(out.amplitude(&coincidence), Complex64::new(0.0, 0.0));
        let two_in_o1 = FockKet::from_counts([(o1.h(), 2)]);
        let two_in_o2 = FockKet::from_counts([(o2.h(), 2)]);
        assert!((out.amplitude(&two_in_o1).re + FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((out.amplitude(&two_in_o2).re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distinguishable_photons_do_not_bunch() {
        let [i1, i2, o1, o2] = modes(["i1", "i2", "o1", "o2"]);
        let both = ModeTransform::new(
            Polarization::BOTH
                .iter()
                .flat_map(|&p| mixer(p).columns.into_iter())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let input = PureState::basis(FockKet::from_rails([i1.h(), i2.v()]));
        let out = both.apply(&input).unwrap();
        let k = FockKet::from_rails([o1.h(), o2.v()]);
        assert!((out.amplitude(&k).norm_sqr() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn refuses_to_overwrite_occupied_outputs() {
        let [a, b] = modes(["a", "b"]);
        let route = ModeTransform::new([(a.h(), vec![(b.h(), c(1.0))])]).unwrap();
        let state = PureState::basis(FockKet::from_rails([a.h(), b.h()]));
        assert_eq!(route.apply(&state).unwrap_err(), Error::OutputOccupied(b.h()));
    }

    #[test]
    fn composition_matches_sequential_application() {
        let [i1, i2] = modes(["i1", "i2"]);
        let u = mixer(Polarization::H);
        let [o1, o2] = modes(["o1", "o2"]);
        let back = ModeTransform::new([
            (o1.h(), vec![(i1.h(), c(FRAC_1_SQRT_2)), (i2.h(), c(-FRAC_1_SQRT_2))]),
            (o2.h(), vec![(i1.h(), c(FRAC_1_SQRT_2)), (i2.h(), c(FRAC_1_SQRT_2))]),
        ])
        .unwrap();
        let input = PureState::basis(FockKet::from_rails([i1.h(), i1.h(), i2.h()]));
        let seq = back.apply(&u.apply(&input).unwrap()).unwrap();
        let composed = u.then(&back).unwrap().apply(&input).unwrap();
        assert!((fidelity(&seq, &composed) - 1.0).abs() < 1e-12);
        // back is the inverse of u
        assert!((fidelity(&seq, &input) - 1.0).abs() < 1e-12);
    }
}
