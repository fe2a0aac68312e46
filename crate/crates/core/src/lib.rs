//! Exact homology, explicit torus diffeomorphisms and numerical estimators for
//! entropy, Lyapunov exponents, volume growth and cone-field hyperbolicity.

pub mod cones;
pub mod estimators;
pub mod homology;
pub mod lab;
pub mod torus_maps;

pub use homology::{HomologyReport, IntMatrix, Spectrum};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(String),
    #[error("root finding failed for polynomial {0}")]
    RootFinding(String),
    #[error("defective eigenbasis: {0}")]
    Defective(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("construction rejected: {0}")]
    Construction(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
