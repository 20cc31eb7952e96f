//! Staircase eigentriplets: construction, Gauss-Newton refinement and certificates.

pub mod certificates;
pub mod initial;
pub mod refine;
pub mod system;
pub mod triplet;

pub use certificates::{cluster_condition_number, nearest_matrix_with_triplet, staircase_condition_number};
pub use initial::initial_eigentriplet;
pub use refine::{eigentriplet_refine, RefineDiagnostics, RefineOptions, RefinedTriplet};
pub use system::{staircase_jacobian, staircase_residual, system_size};
pub use triplet::{AuxVectors, Eigentriplet};
