//! Simulation of a linear-optical three-photon GHZ generator: sparse Fock
//! states, optical elements, a Kerr-probe parity filter, the detection
//! pipeline, channel noise and a small circuit language.

pub mod cli;
pub mod dsl;
pub mod elements;
pub mod error;
pub mod network;
pub mod noise;
pub mod pipeline;
pub mod qnd;
pub mod source;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
