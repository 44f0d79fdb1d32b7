//! Ulam discretization of transfer (Perron–Frobenius) operators.
//!
//! Operators are assembled from exact branch geometry: the entry for cells
//! `I_i → I_j` is `|I_i ∩ T^{-1}(I_j)| / |I_i|`, computed from preimages of
//! the grid edges under each monotone branch. No sampling is involved.

mod density;
mod grid;
mod lasota_yorke;
mod ulam;

pub use density::StepDensity;
pub use grid::Grid;
pub use lasota_yorke::{lasota_yorke_fit, test_family, LasotaYorkeFit};
pub use ulam::{BranchPreimages, PiecewiseMonotone, UlamOperator};
