//! Scattering by multi-layered rectangular cavities embedded in a perfectly
//! conducting ground plane, for TM and TE polarization.
//!
//! The field inside each cavity is expanded in a sine (TM) or cosine (TE)
//! series; a tri-diagonal connection formula maps the aperture coefficients to
//! every layer interface, and a weakly singular transparent boundary condition
//! closes the system on the apertures. The weakly singular aperture integrals
//! are evaluated by splitting off the logarithm of the Hankel kernel and
//! integrating the log moments exactly.

pub mod assembly;
pub mod error;
pub mod linalg;
pub mod modal;
pub mod oracle;
pub mod model;
pub mod postprocess;
pub mod quadrature;
pub mod scenarios;
pub mod special;

pub use error::{Error, Result};
pub use special::{ComplexValue, KernelScale};
