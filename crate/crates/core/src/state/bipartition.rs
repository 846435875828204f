//! Splitting fixed-photon-number kets into two tensor factors.
//!
//! Each photon is assigned to a logical position (a group of spatial modes
//! that it may occupy). A ket with exactly one photon per position then
//! factors either into its polarization pattern and its spatial pattern, or
//! into the photons of two disjoint position sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::density::DensityOperator;
use super::ket::{FockKet, Polarization, Rail, SpatialMode};
use super::pure::PureState;
use crate::error::{Error, Result};

/// Singular values at or below this are dropped from Schmidt decompositions.
pub const SCHMIDT_TOLERANCE: f64 = 1e-10;

/// One entry of a factor label.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    Pol(Polarization),
    Mode(SpatialMode),
    Photon(Rail),
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Pol(p) => write!(f, "{p}"),
            Factor::Mode(m) => write!(f, "{m}"),
            Factor::Photon(r) => write!(f, "{r:?}"),
        }
    }
}

/// Basis label of one tensor factor.
pub type FactorLabel = Vec<Factor>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cut {
    /// First factor: polarization pattern. Second: spatial pattern.
    PolarizationSpatial,
    /// First factor: photons at these positions. Second: the rest.
    Photons(BTreeSet<usize>),
}

/// Which factor a partial trace keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

impl Keep {
    pub const POLARIZATION: Keep = Keep::First;
    pub const SPATIAL: Keep = Keep::Second;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    positions: Vec<Vec<SpatialMode>>,
    cut: Cut,
}

impl Bipartition {
    pub fn new(positions: Vec<Vec<SpatialMode>>, cut: Cut) -> Self {
        Bipartition { positions, cut }
    }

    /// Polarization versus spatial degree of freedom.
    pub fn polarization_spatial(positions: Vec<Vec<SpatialMode>>) -> Self {
        Self::new(positions, Cut::PolarizationSpatial)
    }

    /// Photons at `first` versus all other positions.
    pub fn photons(positions: Vec<Vec<SpatialMode>>, first: impl IntoIterator<Item = usize>) -> Self {
        Self::new(positions, Cut::Photons(first.into_iter().collect()))
    }

    pub fn positions(&self) -> &[Vec<SpatialMode>] {
        &self.positions
    }

    /// The `(first, second)` factor labels of a ket.
    pub fn split(&self, ket: &FockKet) -> Result<(FactorLabel, FactorLabel)> {
        let reject = |reason: String| Error::NotDecomposable { ket: ket.clone(), reason };
        if ket.total_photons() as usize != self.positions.len() {
            return Err(reject(format!(
                "has {} photons, expected one per position ({})",
                ket.total_photons(),
                self.positions.len()
            )));
        }
        let mut placed = Vec::with_capacity(self.positions.len());
        for (i, group) in self.positions.iter().enumerate() {
            let mut found = ket
                .occupations()
                .iter()
                .filter(|(r, _)| group.contains(&r.spatial));
            match (found.next(), found.next()) {
                (Some((rail, 1)), None) => placed.push(rail.clone()),
                _ => return Err(reject(format!("position {i} is not singly occupied"))),
            }
        }
        Ok(match &self.cut {
            Cut::PolarizationSpatial => (
                placed.iter().map(|r| Factor::Pol(r.pol)).collect(),
                placed.iter().map(|r| Factor::Mode(r.spatial.clone())).collect(),
            ),
            Cut::Photons(first) => {
                let (a, b): (Vec<_>, Vec<_>) = placed.into_iter().enumerate().partition(|(i, _)| first.contains(i));
                (
                    a.into_iter().map(|(_, r)| Factor::Photon(r)).collect(),
                    b.into_iter().map(|(_, r)| Factor::Photon(r)).collect(),
                )
            }
        })
    }
}

/// Schmidt decomposition summary across a bipartition.
#[derive(Debug, Clone, PartialEq)]
pub struct Schmidt {
    pub rank: usize,
    /// Nonnegative, descending.
    pub coefficients: Vec<f64>,
}

/// Singular values of the amplitude matrix `M[first][second]`.
pub fn schmidt_rank(state: &PureState, part: &Bipartition) -> Result<Schmidt> {
    let mut rows: BTreeMap<FactorLabel, usize> = BTreeMap::new();
    let mut cols: BTreeMap<FactorLabel, usize> = BTreeMap::new();
    let mut entries = Vec::with_capacity(state.len());
    for (ket, amp) in state.terms() {
        let (a, b) = part.split(ket)?;
        let n = rows.len();
        let i = *rows.entry(a).or_insert(n);
        let n = cols.len();
        let j = *cols.entry(b).or_insert(n);
        entries.push((i, j, *amp));
    }
    if entries.is_empty() {
        return Ok(Schmidt { rank: 0, coefficients: Vec::new() });
    }
    let mut m = DMatrix::<Complex64>::zeros(rows.len(), cols.len());
    for (i, j, a) in entries {
        m[(i, j)] += a;
    }
    let mut coefficients: Vec<f64> = m
        .singular_values()
        .iter()
        .copied()
        .filter(|s| *s > SCHMIDT_TOLERANCE)
        .collect();
    coefficients.sort_by(|a, b| b.total_cmp(a));
    Ok(Schmidt { rank: coefficients.len(), coefficients })
}

/// Reduced operator on one factor.
pub fn partial_trace(
    rho: &DensityOperator<FockKet>,
    part: &Bipartition,
    keep: Keep,
) -> Result<DensityOperator<FactorLabel>> {
    let labels = rho
        .basis()
        .iter()
        .map(|k| {
            part.split(k).map(|(a, b)| match keep {
                Keep::First => (a, b),
                Keep::Second => (b, a),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<FactorLabel> = labels
        .iter()
        .map(|(k, _)| k.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&FactorLabel, usize> = kept.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let mut m = DMatrix::<Complex64>::zeros(kept.len(), kept.len());
    for (i, (ki, ti)) in labels.iter().enumerate() {
        for (j, (kj, tj)) in labels.iter().enumerate() {
            if ti == tj {
                m[(index[ki], index[kj])] += rho.matrix()[(i, j)];
            }
        }
    }
    Ok(DensityOperator::new(kept, m))
}

/// `max |ρ − ρ_first ⊗ ρ_second|` over the full product basis.
///
/// Zero (to rounding) exactly when `ρ` factors across the bipartition.
pub fn factorization_deviation(rho: &DensityOperator<FockKet>, part: &Bipartition) -> Result<f64> {
    let first = partial_trace(rho, part, Keep::First)?;
    let second = partial_trace(rho, part, Keep::Second)?;
    let mut by_pair: BTreeMap<(FactorLabel, FactorLabel), usize> = BTreeMap::new();
    for (i, k) in rho.basis().iter().enumerate() {
        by_pair.insert(part.split(k)?, i);
    }
    let pairs: Vec<(usize, usize)> = (0..first.dim())
        .flat_map(|p| (0..second.dim()).map(move |s| (p, s)))
        .collect();
    let mut worst = 0.0_f64;
    for &(p, s) in &pairs {
        let row = by_pair.get(&(first.basis()[p].clone(), second.basis()[s].clone()));
        for &(q, t) in &pairs {
            let col = by_pair.get(&(first.basis()[q].clone(), second.basis()[t].clone()));
            let full = match (row, col) {
                (Some(&i), Some(&j)) => rho.matrix()[(i, j)],
                _ => Complex64::new(0.0, 0.0),
            };
            let product = first.matrix()[(p, q)] * second.matrix()[(s, t)];
            worst = worst.max((full - product).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ket::modes;
    use crate::state::Polarization::{H, V};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bell() -> (PureState, Vec<Vec<SpatialMode>>) {
        let m = modes(["a", "b"]);
        let s = PureState::from_real([
            (FockKet::photons(m.iter().zip([H, V])), FRAC_1_SQRT_2),
            (FockKet::photons(m.iter().zip([V, H])), -FRAC_1_SQRT_2),
        ]);
        (s, m.into_iter().map(|x| vec![x]).collect())
    }

    #[test]
    fn bell_pair_has_rank_two_across_its_photons() {
        let (s, pos) = bell();
        let r = schmidt_rank(&s, &Bipartition::photons(pos, [0])).unwrap();
        assert_eq!(r.rank, 2);
        for c in r.coefficients {
            assert!((c - FRAC_1_SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn product_state_traces_to_pure_factors() {
        let m = modes(["a", "b"]);
        // (|H⟩+|V⟩)_a ⊗ |H⟩_b / √2
        let s = PureState::from_real([
            (FockKet::photons(m.iter().zip([H, H])), FRAC_1_SQRT_2),
            (FockKet::photons(m.iter().zip([V, H])), FRAC_1_SQRT_2),
        ]);
        let part = Bipartition::photons(m.iter().map(|x| vec![x.clone()]).collect(), [0]);
        let rho = DensityOperator::from_pure(&s);
        for keep in [Keep::First, Keep::Second] {
            let red = partial_trace(&rho, &part, keep).unwrap();
            assert!((red.trace().re - 1.0).abs() < 1e-12);
            assert!((red.purity() - 1.0).abs() < 1e-12);
        }
        assert!(factorization_deviation(&rho, &part).unwrap() < 1e-12);
    }

    #[test]
    fn undecomposable_ket_is_reported() {
        let [a, b] = modes(["a", "b"]);
        let ket = FockKet::from_rails([a.h(), a.v()]);
        let part = Bipartition::polarization_spatial(vec![vec![a], vec![b]]);
        match part.split(&ket).unwrap_err() {
            Error::NotDecomposable { ket: k, .. } => assert_eq!(k, ket),
            e => panic!("unexpected {e:?}"),
        }
    }
}
