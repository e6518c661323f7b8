//! Least-squares finite element reconstruction of conductivity perturbations
//! from linearised hybrid data `H = sigma |grad u|^p` on the unit disc, with
//! symbol-level diagnostics that predict where reconstructions lose
//! ellipticity and in which directions singularities propagate.

pub mod error;
pub mod experiments;
pub mod fem;
pub mod forward;
pub mod inverse;
pub mod io;
pub mod mesh;
pub mod microlocal;
pub mod phantom;

pub use error::{Error, Result};
