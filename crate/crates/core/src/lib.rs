//! Singular spectrum analysis for arbitrarily shaped 2D arrays.
//!
//! The crate decomposes a real-valued array given on an arbitrary subset of
//! a 2D grid into additive components (trend, oscillations, noise), and
//! estimates the damped-sinusoid parameters of those components. Grids may
//! be planar, cylindrical (one circular axis) or toroidal (both circular),
//! so series on circles, tubes and tori are handled with the exact
//! wrap-around arithmetic rather than by cutting them open.
//!
//! The pipeline is the classical four-step scheme:
//!
//! 1. embed the array into a quasi-Hankel trajectory matrix by sliding a
//!    (shaped) window over all admissible placements ([`embedding`]),
//! 2. compute a truncated SVD of that matrix, without ever materializing
//!    it, through FFT-based circular convolution ([`fast_ops`], [`ssa`]),
//! 3. group singular triples ([`ssa::Decomposition::reconstruct`]),
//! 4. map each group back to the grid by averaging over fibers.
//!
//! On top of the decomposition, [`esprit`] implements a 2D ESPRIT variant
//! that works on shaped windows and returns, per component, the complex
//! roots on both axes along with periods, damping rates and the
//! wave-vector angle and wavelength.

pub mod array;
pub mod embedding;
pub mod error;
pub mod esprit;
pub mod fast_ops;
pub mod rank_model;
pub mod shape;
pub mod ssa;
pub mod testkit;
pub mod topology;

mod fft2;
mod grid;
mod lanczos;

pub use array::ShapedArray;
pub use error::{Error, Result};
pub use esprit::{EspritMethod, EspritOptions, EspritOutput};
pub use rank_model::ExponentialComponent;
pub use shape::Shape;
pub use ssa::{decompose, DecomposeOptions, Decomposition, Eigentriple};
pub use topology::{cyclic_add, IndexPair, Period, Topology, TopologyClass, MAX_COORD};
