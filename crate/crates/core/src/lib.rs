//! General joint block diagonalization of a set of square matrices.
//!
//! Given `A_0, ..., A_p`, [`pipeline::solve`] finds a partition of `n` with
//! as many blocks as possible and a nonsingular `W` such that every
//! `W^H A_i W` is (approximately) block diagonal for that partition. The
//! candidate columns of `W` are eigenvectors of the matrix polynomial
//! `sum_i lambda^i A_i`; the block structure is read off a thresholded
//! interaction graph and then improved by alternating SVD updates.
//!
//! Everything numeric is generic over [`scalar::Real`] (`f32` or `f64`).

pub mod bench;
pub mod blockreveal;
pub mod datagen;
pub mod eigsel;
pub mod error;
pub mod exact;
pub mod io;
pub mod linalg;
pub mod matpoly;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod refine;
pub mod scalar;

pub use error::{GjbdError, Result};
pub use matpoly::MatrixSet;
pub use partition::Partition;
pub use pipeline::{solve, SolveOptions, SolveTrace};
pub use refine::Solution;

pub type MatrixSetF64 = MatrixSet<f64>;
pub type MatrixSetF32 = MatrixSet<f32>;
pub type SolutionF64 = Solution<f64>;
pub type SolutionF32 = Solution<f32>;
pub type ProblemInstanceF64 = datagen::ProblemInstance<f64>;
pub type FixtureF64 = datagen::Fixture<f64>;
