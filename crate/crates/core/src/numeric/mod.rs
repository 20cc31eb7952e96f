//! Dense complex linear algebra kernels.

pub mod givens;
pub mod hessenberg;
pub mod inverse_iteration;
pub mod qr;
pub mod schur;
pub mod svd;
pub mod triangular;

pub use hessenberg::{hessenberg_reduce, HessenbergForm};
pub use inverse_iteration::{inverse_iteration_null_vector, random_unit_vector, NullVector};
pub use qr::{householder_qr, qr_delete_row, qr_insert_row, qr_least_squares, HouseholderQr, QrFactorization};
pub use schur::{reorder_schur, schur_form, Reordered, SchurForm};
pub use svd::{singular_values, sigma_min};
