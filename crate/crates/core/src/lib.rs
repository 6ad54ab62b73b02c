//! Field-cycling 13C relaxometry toolkit: lattice spin-bath estimates,
//! relaxation-rate models, nonlinear fitting, acquisition planning and
//! EPR lineshape analysis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod constants;
pub mod epr;
pub mod error;
pub mod fitting;
pub mod lattice;
pub mod relaxmodel;
pub mod rng;
pub mod workbench;

pub use constants::PhysicalConstants;
pub use error::{Error, ErrorClass, Result};
