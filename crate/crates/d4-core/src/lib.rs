//! Exact simulation of the D4 topological order on a kagome torus.
//!
//! `no_std` + `alloc`; enable the `std` feature for `std::error::Error`
//! impls and faster float intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod anyons;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod modelops;
pub mod noise;
pub mod prep;
