//! Benchmark harness: named solver setups, the two experiment drivers and
//! performance profiles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod problem;
pub mod profile;
pub mod solvers;
pub mod svg;
