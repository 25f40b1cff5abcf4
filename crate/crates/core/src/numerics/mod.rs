//! Small dense/sparse numerics: matrices, layer primitives, Adam and gradient checking.

mod gradcheck;
mod matrix;
mod ops;
mod params;
mod sparse;

pub use gradcheck::{finite_diff_check, relative_error, MAX_CHECKED_COORDINATES};
pub use matrix::{axpy, dot, vec_mat, DenseMatrix};
pub use ops::{
    cross_entropy, glorot_bound, glorot_init, glorot_init_with, matmul_backward, matmul_forward,
    relu_backward, relu_forward, softmax_rows,
};
pub(crate) use ops::softmax_in_place;
pub use params::{AdamConfig, ParamSet};
pub use sparse::SparseRows;
