//! Heat equations on metric graphs driven by Kirchhoff vertex noise.
//!
//! The crate assembles the edge operator with continuity and Kirchhoff
//! conditions, computes its spectrum, decides the strong Feller property
//! (equivalently null controllability), builds minimal-norm null controls,
//! decomposes trees into tangle-free path unions and samples the stochastic
//! convolution in spectral coordinates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod control;
pub mod error;
pub mod feller;
pub mod graph;
pub mod io;
pub mod noise;
pub mod spectral;
pub mod stochastic;
pub mod tolerances;
pub mod tree;

pub use error::{Error, Result};
pub use graph::{Coefficient, Edge, GraphClass, MetricGraph, ValidationReport};
pub use noise::NoiseModel;
