//! Small-deviation probabilities for symmetric α-stable Lévy processes.
//!
//! The crate is organised around the computations needed to study
//! `P{‖X_α − λ f‖ < r}` for a symmetric α-stable process `X_α`, `α ∈ (1, 2)`,
//! with Lévy measure `|x|^{−1−α} dx`:
//!
//! * [`model`]: process parameters, shift functions, triplets and estimates;
//! * [`sim`]: seeded path samplers (increment, jump-resolved, truncated,
//!   tilted and time-changed);
//! * [`tilt`]: the exponential change of measure on the Lévy measure and the
//!   resulting path log-weights;
//! * [`constants`]: `Ψ`, the symbol constant `c_α`, `K_α` (spectral and Monte
//!   Carlo), `C(α)`, `C₁(f, α)` and the martingale small-ball bound;
//! * [`smallball`]: crude and importance-sampling estimators of shifted
//!   small-ball probabilities;
//! * [`lil`]: finite-horizon diagnostics for the functional law of the
//!   iterated logarithm.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod constants;
pub mod error;
pub mod lil;
pub mod model;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod smallball;
pub mod stats;
pub mod tilt;

pub use error::{Error, Result};
pub use model::{AlphaStableParams, Estimate, ShiftFunction};
pub use rng::RngStream;
pub use sim::SimPath;
pub use tilt::TiltSpec;
