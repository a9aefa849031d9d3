//! Time grids, random streams, radial bridge sampling and path simulation.

mod grid;
mod path;
mod rng;
mod transport;

pub use grid::{GridSummary, Refinement, TimeGrid};
pub use path::{sample_bessel_bridge_radial, BridgePath, DirectionTrace, PathKind, PathMode, PathSimulator};
pub use rng::RngStream;
pub use transport::{
    adapted_basis, damped_transport_step, gram_deviation, identity, mat_vec, operator_norm, reorthonormalize,
    TransportScheme,
};
