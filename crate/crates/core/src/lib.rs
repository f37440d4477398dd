//! Manifold-regularized, ℓ1-sparse orthogonal Tucker decomposition of a set
//! of equally sized order-3 tensors, solved by block coordinate descent.

pub mod cli;
pub mod error;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod rank_select;
pub mod solver;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{DenseTensor, Matrix, Norms, SampleSet};
