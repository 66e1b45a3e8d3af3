//! Numerical laboratory for constant-coefficient elliptic symbols on R³:
//! level-set geometry, surface-measure Fourier decay, dyadic slab
//! decompositions, Lorentz-space metrology, restriction–extension operator
//! scans, and limiting-absorption resolvent solves on periodic FFT grids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dyadic;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod lorentz;
pub mod quadrature;
pub mod resolvent;
pub mod restriction;
pub mod sampling;
pub mod symbols;

pub use error::{Lap3dError, Result};
