//! Probability engines and a learning laboratory for continuous-variable
//! quantum circuits.
//!
//! Conventions: ħ = 1, quadrature ordering (x₁, p₁, x₂, p₂, …), vacuum
//! covariance `I/2`, coherent amplitude α ↦ mean `√2 (Re α, Im α)`.

pub mod dims;
pub mod error;
pub mod fock;
pub mod gg;
pub mod io;
pub mod learner;
pub mod linalg;
pub mod photodetection;
pub mod symplectic;

pub use error::{CvError, Result};
pub use gg::{GGChannel, GGComponent, GGEffect, GGState};
pub use photodetection::{HermiteIndex, PhotoCountEffect};
pub use symplectic::{
    ChannelDilation, Diagnostic, GaussianChannel, GaussianState, GeneralDyneEffect,
    SymplecticForm,
};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
