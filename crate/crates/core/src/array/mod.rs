//! Exact phase-only beamforming for element arrays: steering phases,
//! phase-shifter quantization, far-field synthesis, directivity and beam
//! peak search.

mod angle;
mod geometry;
mod grid;
mod pattern;
mod peak;
mod phase;

pub use angle::BeamPointingAngle;
pub use geometry::{ArrayGeometry, ElementModel, Orientation, PlanarSpec};
pub use grid::{DirectionGrid, GridDescriptor};
pub use pattern::{
    array_field, directivity, element_factor, radiation_pattern, Directivity, PatternSynth, PeakField,
    RadiationPattern,
};
pub use peak::{find_peak, PeakFinder};
pub use phase::{
    mgb_phases_unwrapped, mgb_weights, phase_resolution, quantize_phases, PhaseVector,
    SpatialUnwrapper,
};
