//! Compressed-sensing photoacoustic tomography with wedge-restricted curvelets.

pub mod curvelet;
pub mod error;
pub mod fft;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod phantom;
pub mod sensing;
pub mod solvers;
pub mod wave;
pub mod wedge;

pub use curvelet::{CurveletCoeffs, Tiling, TilingParams};
pub use error::{Error, Result};
pub use grid::{AcousticConfig, DataField, ImageField};
pub use solvers::{SolverConfig, SolverRun};
pub use wave::Propagator;
pub use wedge::WedgeSpec;
