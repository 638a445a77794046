//! Hecke–Laplace eigenforms on the three-sphere through integral quaternions.
//!
//! The crate is organised bottom-up:
//!
//! * [`quat`]: exact Lipschitz/Hurwitz quaternion arithmetic and norm shells;
//! * [`poly`]: exact harmonic polynomials in four variables and their Gram matrices;
//! * [`zonal`]: Chebyshev polynomials of the second kind and the reproducing kernel;
//! * [`hecke`]: exact Hecke matrices, algebra relations and joint eigenspaces;
//! * [`theta`]: Fourier coefficients of the theta kernel and Petersson-norm estimates;
//! * [`gon`]: lattice-point counts in cylinder classes and successive minima;
//! * [`moments`]: fourth-moment sweeps over the sphere and growth fits.

pub mod error;
pub mod exact;
pub mod gon;
pub mod hecke;
pub mod moments;
pub mod poly;
pub mod quat;
pub mod special;
pub mod theta;
pub mod zonal;

pub use error::{Error, Result};
pub use hecke::{HeckeMatrix, SpectralDecomposition};
pub use poly::{HarmonicBasis, Poly4};
pub use quat::{NormShell, Parity, Quaternion};
