//! Numerical laboratory for the regularity of the characteristic vertex of
//! shrinking backward parabolas, for second-order reaction-diffusion
//! equations and their fourth-order bi-harmonic analogues.

pub mod blayer;
pub mod criterion;
pub mod error;
pub mod funcs;
pub mod numerics;
pub mod pdesim;
pub mod petrovskii;
pub mod spectral;

pub use error::{Error, Result};
