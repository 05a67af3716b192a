//! Phase-only beam steering for planar millimeter-wave arrays.
//!
//! * [`array`]: exact steering weights, quantization, pattern synthesis,
//!   directivity and peak search.
//! * [`codebook`]: 802.15.3c-style lookup-table baselines.
//! * [`metrics`]: central angle, pattern cosine similarity, quantiles, CDFs.
//! * [`neural`]: a small feed-forward regressor from pointing angles to
//!   element phases, trained from scratch.
//! * [`harness`]: dataset generation, evaluation pipelines and reports.
//!
//! The math is generic over [`Real`] (`f32`/`f64`); the aliases below fix
//! the scalar to `f64`, which is what pattern and metric code uses.

pub mod array;
pub mod codebook;
mod error;
pub mod harness;
pub mod metrics;
pub mod neural;
mod scalar;

pub use error::{Error, Result};
pub use scalar::{wrap_az, wrap_deg, Real};

pub type Bpa = array::BeamPointingAngle<f64>;
pub type Geometry = array::ArrayGeometry<f64>;
pub type Phases = array::PhaseVector<f64>;
pub type Grid = array::DirectionGrid<f64>;
pub type Pattern = array::RadiationPattern<f64>;
pub type Codebook = codebook::Codebook<f64>;
pub type Mlp = neural::MlpModel<f64>;
pub type Mlp32 = neural::MlpModel<f32>;
