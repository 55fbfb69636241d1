//! Dense complex linear algebra for laboratory-scale (N <= 8) systems.

pub mod eigen;
pub mod matrix;
pub mod observable;
pub mod rng;
pub mod state;
pub mod unitary;

pub use eigen::{eigh, EigenTracker, SpectralDecomposition};
pub use matrix::{inner, ComplexMatrix, MAX_DIM};
pub use observable::{Observable, ObservableSpectrum};
pub use rng::{gaussian_increment, stream, SeededGenerator};
pub use state::DensityMatrix;
pub use unitary::{conjugate, direct_sum, random_hermitian, random_unitary, unbiased_2x2};
