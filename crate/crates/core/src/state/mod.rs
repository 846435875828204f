//! Few-photon bosonic states over polarization and spatial rails.

mod bipartition;
mod density;
pub mod dump;
mod ket;
mod pure;
mod transform;

pub use bipartition::{
    factorization_deviation, partial_trace, schmidt_rank, Bipartition, Cut, Factor, FactorLabel, Keep, Schmidt,
    SCHMIDT_TOLERANCE,
};
pub use density::DensityOperator;
pub use ket::{modes, FockKet, Polarization, Rail, SpatialMode};
pub use pure::{fidelity, inner_product, PureState, PRUNE_TOLERANCE};
pub use transform::{apply_mode_transform, ModeTransform, UNITARITY_TOLERANCE};
