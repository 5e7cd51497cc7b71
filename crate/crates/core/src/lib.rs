#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]
//! Numerics for the two-factor affine model driven by the alpha-root
//! (stable CIR) process
//!
//! ```text
//! dY = (a - b Y) dt + Y^{1/alpha} dL
//! dX = (m - theta X) dt + sqrt(Y) dB
//! ```
//!
//! where `L` is a spectrally positive, compensated alpha-stable Lévy process
//! with Laplace exponent `lambda^alpha / alpha` and `B` an independent
//! Brownian motion.

pub mod bounds;
pub mod branch;
pub mod density;
pub mod error;
pub mod fmt;
pub mod harness;
pub mod lyapunov;
pub mod params;
pub mod quadrature;
pub mod sim;
pub mod stats;
pub mod transforms;
pub mod tv;

pub use branch::{principal_arg, principal_ln, principal_pow, riccati_v, riccati_v_integral, ComplexScalar};
pub use density::{cdf_y, density_fourier, density_grid, density_real_axis, DensityGrid, Representation};
pub use error::{Error, Result};
pub use params::{ModelParams, QuadratureConfig};
pub use sim::{empirical_atom, sample_stable_increment, simulate_pair, PathEnsemble, Record, SimConfig, StableDriverSpec};
pub use transforms::{atom_probability, charfn_y, laplace_y, limit_d, mean_y, TransformValue};
