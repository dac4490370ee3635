#![cfg_attr(not(feature = "std"), no_std)]

//! Time-domain boundary element solver for the homogeneous acoustic wave
//! equation. Generalized convolution quadrature (Runge-Kutta based) in time,
//! collocation with P0/P1 shape functions in space, and a frequency-stacked
//! operator tensor compressed by blockwise adaptive cross approximation with
//! either H-matrix or black-box FMM faces.

extern crate alloc;

pub mod error;
pub mod geom;
pub mod linalg;
pub mod mesh;
pub mod quad;
pub mod assemble;
pub mod htree;
pub mod aca;
pub mod tensor3;
pub mod bbfmm;
pub mod operator;
pub mod gcq;
pub mod rk;
pub mod contour;
pub mod specfun;

pub use error::{Error, Result};
