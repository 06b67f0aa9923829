//! Numerical thermodynamic formalism for expanding interval maps.
//!
//! The crate is organised around a handful of objects:
//!
//! * [`systems::SystemSpec`]: an expanding map described by its inverse branches;
//! * [`potentials::Potential`]: a weight function on branch domains;
//! * [`grid::GridFunction`]: piecewise-linear functions on the hull of the state space;
//! * [`transfer`]: the Ruelle transfer operator and its leading eigen-triple;
//! * [`pressure`]: topological pressure brackets and the Bowen root;
//! * [`measures::CylinderMeasure`]: cylinder approximations of conformal and invariant measures.
//!
//! Everything is `no_std` compatible (an allocator is required). The `std`
//! feature adds `std::error::Error` impls and `parallel` spreads operator
//! applications across threads without changing any result bit.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]
// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod grid;
pub mod math;
pub mod measures;
pub mod potentials;
pub mod pressure;
pub mod systems;
pub mod transfer;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
pub use measures::{CylinderMeasure, MeasureOptions};
pub use potentials::{BowenSequence, Potential, PotentialKind};
pub use pressure::{PressureCurve, PressureEstimate};
pub use systems::{builtin_system, CylinderWord, SystemSpec};
pub use transfer::{EigenData, EigenOptions, TruncationPolicy};
