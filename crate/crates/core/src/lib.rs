//! Numerical laboratory for the parametrically driven cubic Klein-Gordon equation
//!
//! ```text
//! U_tt - U_xx + (1 + eps f cos(S(eps^2 x, eps^2 t) / eps^2)) U + gamma U^3 = 0
//! ```
//!
//! The crate is organised around three descriptions of the same solution:
//!
//! * [`kg`]: direct finite-difference integration of the PDE and carrier demodulation;
//! * [`envelope`]: the nonlinear Schrodinger envelope away from resonant curves,
//!   its WKB reconstruction and the jump map across a resonance;
//! * [`layer`]: the parabolic-cylinder type layer equation `i w' + k w + F conj(w) = 0`
//!   whose asymptotics define the connection coefficients.
//!
//! [`geometry`] holds the slow-phase bookkeeping shared by all three (resonant
//! curves, the `g`/`G` phase, the detuning `lambda` and characteristics), and
//! [`experiment`] ties everything together into the end-to-end crossing
//! measurement.
//!
//! Data-parallel inner loops go through [`par::Exec`]; with the `parallel`
//! feature disabled every path runs sequentially.

pub mod error;
pub mod experiment;
pub mod envelope;
pub mod gamma;
pub mod geometry;
pub mod interp;
pub mod io;
pub mod kg;
pub mod layer;
pub mod ode;
pub mod par;
pub mod params;
pub mod phase;
pub mod quad;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use params::{dispersion, ModelParams};
pub use phase::{DriverPhase, PhaseChoice, PolynomialPhase, QuadraticPhase};
