//! Numerics for a metastable intermittent interval map.
//!
//! The map `T_ε` on `[0, 1]` has a neutral fixed point at `0`, two halves
//! `[0, 1/2]` and `[1/2, 1]` that are invariant at `ε = 0`, and small holes
//! that open between the halves once `ε > 0`. This crate builds:
//!
//! * the map itself with exact branch-wise evaluation and inverses ([`map`]),
//! * the first-return system on `Δ = [1/4, 1]` ([`inducing`]),
//! * exact-geometry Ulam discretizations of transfer operators ([`transfer`]),
//! * the pull-back of induced densities to the whole interval ([`pullback`]),
//! * hole sets, the limiting hole ratio and mixture weights ([`holes`]),
//! * the accessibility graph that counts ergodic components ([`graph`]).
//!
//! The crate is `no_std` and only needs an allocator.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod graph;
pub mod holes;
pub mod inducing;
pub mod map;
pub mod math;
pub mod pullback;
pub mod transfer;

pub use error::{Error, Result};
pub use map::{BranchId, MapModel, MapParams, Side};
