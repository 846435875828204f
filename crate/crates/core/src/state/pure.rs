use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;

use super::ket::{FockKet, SpatialMode};
use crate::error::{Error, Result};

/// Amplitudes at or below this magnitude are dropped.
pub const PRUNE_TOLERANCE: f64 = 1e-12;

/// A sparse superposition of Fock kets.
///
/// Terms are kept in canonical ket order so iteration and serialization are
/// deterministic. Kets of different photon number may coexist.
#[derive(Clone, Default, PartialEq)]
pub struct PureState {
    terms: BTreeMap<FockKet, Complex64>,
}

impl PureState {
    pub fn empty() -> Self {
        PureState::default()
    }

    pub fn vacuum() -> Self {
        PureState::basis(FockKet::vacuum())
    }

    pub fn basis(ket: FockKet) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(ket, Complex64::new(1.0, 0.0));
        PureState { terms }
    }

    /// Sums the given terms; repeated kets accumulate.
    pub fn from_terms<I: IntoIterator<Item = (FockKet, Complex64)>>(terms: I) -> Self {
        let mut state = PureState::empty();
        for (ket, amp) in terms {
            state.accumulate(ket, amp);
        }
        state.prune();
        state
    }

    /// Real-amplitude convenience constructor.
    pub fn from_real<I: IntoIterator<Item = (FockKet, f64)>>(terms: I) -> Self {
        Self::from_terms(terms.into_iter().map(|(k, a)| (k, Complex64::new(a, 0.0))))
    }

    pub(crate) fn accumulate(&mut self, ket: FockKet, amp: Complex64) {
        *self.terms.entry(ket).or_insert(Complex64::new(0.0, 0.0)) += amp;
    }

    pub(crate) fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() > PRUNE_TOLERANCE);
    }

    pub fn terms(&self) -> impl ExactSizeIterator<Item = (&FockKet, &Complex64)> {
        self.terms.iter()
    }

    pub fn kets(&self) -> impl Iterator<Item = &FockKet> {
        self.terms.keys()
    }

    pub fn amplitude(&self, ket: &FockKet) -> Complex64 {
        self.terms.get(ket).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<PureState> {
        let n = self.norm();
        if n <= PRUNE_TOLERANCE {
            return Err(Error::EmptyState);
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> PureState {
        let mut out = PureState {
            terms: self.terms.iter().map(|(k, a)| (k.clone(), a * factor)).collect(),
        };
        out.prune();
        out
    }

    pub fn add(&self, other: &PureState) -> PureState {
        let mut out = self.clone();
        for (k, a) in &other.terms {
            out.accumulate(k.clone(), *a);
        }
        out.prune();
        out
    }

    /// Rewrites each amplitude as `f(ket, amplitude)`.
    pub fn map_amplitudes<F>(&self, mut f: F) -> PureState
    where
        F: FnMut(&FockKet, Complex64) -> Complex64,
    {
        let mut out = PureState {
            terms: self.terms.iter().map(|(k, a)| (k.clone(), f(k, *a))).collect(),
        };
        out.prune();
        out
    }

    /// Keeps the terms whose ket satisfies `keep`.
    pub fn filter<F: FnMut(&FockKet) -> bool>(&self, mut keep: F) -> PureState {
        PureState {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, a)| (k.clone(), *a))
                .collect(),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        small
            .terms
            .iter()
            .filter_map(|(k, a)| large.terms.get(k).map(|b| if conj_small { a.conj() * b } else { b.conj() * a }))
            .sum()
    }

    /// Product of the creation operators that build `self` and `other`.
    ///
    /// Rails shared by both factors pick up the bosonic enhancement
    /// `√((n+m)!/(n! m!))`; the result is not renormalized.
    pub fn creation_product(&self, other: &PureState) -> PureState {
        let mut out = PureState::empty();
        for (ka, a) in &self.terms {
            for (kb, b) in &other.terms {
                let merged = FockKet::from_counts(
                    ka.occupations().iter().chain(kb.occupations()).cloned(),
                );
                let enhancement =
                    (merged.factorial_product() / (ka.factorial_product() * kb.factorial_product())).sqrt();
                out.accumulate(merged, a * b * enhancement);
            }
        }
        out.prune();
        out
    }

    /// Set of distinct photon numbers present.
    pub fn photon_numbers(&self) -> BTreeSet<u32> {
        self.terms.keys().map(FockKet::total_photons).collect()
    }

    pub fn spatial_modes(&self) -> BTreeSet<SpatialMode> {
        self.terms
            .keys()
            .flat_map(|k| k.rails().map(|r| r.spatial.clone()))
            .collect()
    }

    /// Keeps the kets whose photon count in each group (both polarizations)
    /// equals the required count.
    ///
    /// Returns the renormalized conditional state and the success
    /// probability. A zero-probability projection yields an empty state.
    pub fn project_occupancy(&self, groups: &[(Vec<SpatialMode>, u32)]) -> Result<(PureState, f64)> {
        let mut seen = BTreeSet::new();
        for (modes, _) in groups {
            for m in modes {
                if !seen.insert(m) {
                    return Err(Error::OverlappingGroups(m.clone()));
                }
            }
        }
        let kept = self.filter(|ket| {
            groups
                .iter()
                .all(|(modes, n)| modes.iter().map(|m| ket.mode_count(m)).sum::<u32>() == *n)
        });
        let p = kept.norm_sqr();
        if p <= PRUNE_TOLERANCE * PRUNE_TOLERANCE {
            return Ok((PureState::empty(), 0.0));
        }
        Ok((kept.scaled(Complex64::new(1.0 / p.sqrt(), 0.0)), p))
    }
}

impl fmt::Debug for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (k, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({:.6}{:+.6}i){:?}", a.re, a.im, k)?;
        }
        Ok(())
    }
}

/// `⟨a|b⟩`.
pub fn inner_product(a: &PureState, b: &PureState) -> Complex64 {
    a.inner(b)
}

/// `|⟨target|state⟩|²`, clamped to `[0, 1]`.
pub fn fidelity(state: &PureState, target: &PureState) -> f64 {
    target.inner(state).norm_sqr().clamp(0.0, 1.0)
}
