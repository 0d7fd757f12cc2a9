//! Linear stochastic maps on finite-dimensional density matrices.
//!
//! A map is held as its action supermatrix (A-form) together with the
//! reshuffled dynamical matrix (B-form). The crate classifies maps
//! (completely positive, positive but not completely positive, non-positive),
//! splits them into positive and negative operator families, parameterizes
//! those families with hyperbolic and trigonometric angles, and realizes maps
//! as contractions of unitary or pseudo-unitary evolution on a larger space.

pub mod decomposition;
pub mod dilation;
pub mod error;
pub mod linalg;
pub mod maps;
pub mod parameterization;
pub mod positivity;
pub mod random;
pub mod sampling;
pub mod states;
pub mod tolerance;

pub use decomposition::CanonicalDecomposition;
pub use dilation::{Dilation, DilationRegistry, DilationStrategy};
pub use error::{Error, Factor, Result};
pub use linalg::{CMatrix, CVector, EigenSystem, Metric, C64};
pub use maps::{DynamicalMap, MapClassification};
pub use parameterization::{HyperbolicFrame, ParameterSet};
pub use sampling::{MapSampler, SamplerOptions, SamplerRegistry};
pub use states::{DensityMatrix, ReservoirState};
pub use tolerance::Tolerances;
