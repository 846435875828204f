use thiserror::Error;

use crate::state::{FockKet, Rail, SpatialMode};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("transform is not unitary: max |U†U - I| = {deviation:e}")]
    NonUnitary { deviation: f64 },

    #[error("output rail {0} already carries photons that the transform does not consume")]
    OutputOccupied(Rail),

    #[error("duplicate spatial mode {0} in element ports")]
    DuplicateMode(SpatialMode),

    #[error("occupancy groups overlap on mode {0}")]
    OverlappingGroups(SpatialMode),

    #[error("ket {ket} is not decomposable under the bipartition: {reason}")]
    NotDecomposable { ket: FockKet, reason: String },

    #[error("case weight {0} is negative")]
    NegativeWeight(f64),

    #[error("case weights sum to {0}, expected 1")]
    WeightsNotNormalized(f64),

    #[error("probe tag {tag}θ on {ket} is outside {{-θ, 0, +θ}}")]
    TagOutOfRange { ket: FockKet, tag: f64 },

    #[error("photon index {0} out of range 1..=3")]
    PhotonIndex(usize),

    #[error("state matches none of the eight noise families (best fidelity {best_fidelity:.6})")]
    OutsideModel { best_fidelity: f64 },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityRange(f64),

    #[error("pattern {pattern} is not reachable for input {input}")]
    ImpossiblePattern { input: String, pattern: String },

    #[error("trigger polarization is entangled with the signal photons")]
    MixedHerald,

    #[error("state is empty")]
    EmptyState,

    #[error("{0}")]
    Network(String),
}
