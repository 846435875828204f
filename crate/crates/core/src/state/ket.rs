//! Rails and occupation-number kets.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Photon polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    pub fn flipped(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::H => "H",
            Polarization::V => "V",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "H" => Some(Polarization::H),
            "V" => Some(Polarization::V),
            _ => None,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named spatial path (`a1`, `D3`, `T1`, ...). Cheap to clone; compared by name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpatialMode(Arc<str>);

impl SpatialMode {
    pub fn new(name: impl AsRef<str>) -> Self {
        SpatialMode(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn rail(&self, pol: Polarization) -> Rail {
        Rail::new(self.clone(), pol)
    }

    pub fn h(&self) -> Rail {
        self.rail(Polarization::H)
    }

    pub fn v(&self) -> Rail {
        self.rail(Polarization::V)
    }
}

impl fmt::Debug for SpatialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for SpatialMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SpatialMode {
    fn from(s: &str) -> Self {
        SpatialMode::new(s)
    }
}

/// Shorthand for building a list of modes from names.
pub fn modes<const N: usize>(names: [&str; N]) -> [SpatialMode; N] {
    names.map(SpatialMode::new)
}

/// One bosonic mode: a spatial path with a polarization.
///
/// Ordered lexicographically on `(spatial, pol)`, which fixes the canonical
/// order of kets.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rail {
    pub spatial: SpatialMode,
    pub pol: Polarization,
}

impl Rail {
    pub fn new(spatial: SpatialMode, pol: Polarization) -> Self {
        Rail { spatial, pol }
    }
}

impl fmt::Debug for Rail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.pol, self.spatial)
    }
}

impl fmt::Display for Rail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// An occupation-number basis ket.
///
/// Stored as a rail-sorted list of `(rail, count)` with no zero counts, so
/// structural equality is ket equality.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockKet {
    occupations: Vec<(Rail, u32)>,
}

impl FockKet {
    pub fn vacuum() -> Self {
        FockKet::default()
    }

    /// Builds a ket from a list of rails, one entry per photon, in any order.
    pub fn from_rails<I: IntoIterator<Item = Rail>>(rails: I) -> Self {
        Self::from_counts(rails.into_iter().map(|r| (r, 1)))
    }

    /// Builds a ket from `(rail, count)` pairs; repeated rails accumulate and
    /// zero counts are dropped.
    pub fn from_counts<I: IntoIterator<Item = (Rail, u32)>>(counts: I) -> Self {
        let mut occupations: Vec<(Rail, u32)> = counts.into_iter().filter(|(_, n)| *n > 0).collect();
        occupations.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Rail, u32)> = Vec::with_capacity(occupations.len());
        for (rail, n) in occupations {
            match merged.last_mut() {
                Some((last, count)) if *last == rail => *count += n,
                _ => merged.push((rail, n)),
            }
        }
        FockKet { occupations: merged }
    }

    /// Kets like `|H⟩_{D1}|H⟩_{D2}|V⟩_{D3}`: one photon per `(mode, pol)` pair.
    pub fn photons<'a, I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (&'a SpatialMode, Polarization)>,
    {
        Self::from_rails(pairs.into_iter().map(|(m, p)| m.rail(p)))
    }

    pub fn occupations(&self) -> &[(Rail, u32)] {
        &self.occupations
    }

    pub fn count(&self, rail: &Rail) -> u32 {
        self.occupations
            .binary_search_by(|(r, _)| r.cmp(rail))
            .map(|i| self.occupations[i].1)
            .unwrap_or(0)
    }

    /// Photons in a spatial mode, summed over polarization.
    pub fn mode_count(&self, mode: &SpatialMode) -> u32 {
        self.occupations
            .iter()
            .filter(|(r, _)| &r.spatial == mode)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn total_photons(&self) -> u32 {
        self.occupations.iter().map(|(_, n)| n).sum()
    }

    /// Expands the ket into one rail per photon, in canonical order.
    pub fn photon_rails(&self) -> Vec<Rail> {
        self.occupations
            .iter()
            .flat_map(|(r, n)| std::iter::repeat_n(r.clone(), *n as usize))
            .collect()
    }

    /// `∏ n!` over rails; the bosonic normalization of `∏ (a†)^n |0⟩`.
    pub fn factorial_product(&self) -> f64 {
        self.occupations
            .iter()
            .map(|(_, n)| (1..=*n).map(f64::from).product::<f64>())
            .product()
    }

    pub fn rails(&self) -> impl Iterator<Item = &Rail> {
        self.occupations.iter().map(|(r, _)| r)
    }

    /// The ket with one photon removed from `rail`, or `None` if it is empty.
    pub fn without_photon(&self, rail: &Rail) -> Option<FockKet> {
        let i = self.occupations.binary_search_by(|(r, _)| r.cmp(rail)).ok()?;
        let mut occupations = self.occupations.clone();
        if occupations[i].1 == 1 {
            occupations.remove(i);
        } else {
            occupations[i].1 -= 1;
        }
        Some(FockKet { occupations })
    }
}

impl fmt::Debug for FockKet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.occupations.is_empty() {
            return f.write_str("|vac⟩");
        }
        f.write_str("|")?;
        for (i, (rail, n)) in self.occupations.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if *n == 1 {
                write!(f, "{rail:?}")?;
            } else {
                write!(f, "{n}{rail:?}")?;
            }
        }
        f.write_str("⟩")
    }
}

impl fmt::Display for FockKet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permuted_rails_give_equal_kets() {
        let [d1, d2, d3] = modes(["D1", "D2", "D3"]);
        let a = FockKet::from_rails([d1.h(), d2.h(), d3.v()]);
        let b = FockKet::from_rails([d3.v(), d1.h(), d2.h()]);
        assert_eq!(a, b);
        assert_eq!(a.total_photons(), 3);
    }

    #[test]
    fn repeated_rails_accumulate() {
        let a1 = SpatialMode::new("a1");
        let k = FockKet::from_rails([a1.h(), a1.v(), a1.h()]);
        assert_eq!(k.count(&a1.h()), 2);
        assert_eq!(k.mode_count(&a1), 3);
        assert_eq!(k.factorial_product(), 2.0);
        assert_eq!(k.without_photon(&a1.h()).unwrap().count(&a1.h()), 1);
        assert!(k.without_photon(&SpatialMode::new("b1").h()).is_none());
    }

    #[test]
    fn zero_counts_are_dropped() {
        let a = SpatialMode::new("a");
        let k = FockKet::from_counts([(a.h(), 0), (a.v(), 1)]);
        assert_eq!(k.occupations().len(), 1);
        assert_eq!(k, FockKet::from_rails([a.v()]));
    }
}
