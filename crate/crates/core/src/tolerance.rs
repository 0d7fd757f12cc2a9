//! Numerical thresholds used throughout the crate.

/// Relative Frobenius threshold for structural checks (hermiticity, trace, unitarity).
pub const STRUCTURAL: f64 = 1e-10;
/// Absolute threshold for sign decisions on eigenvalues.
pub const SIGN: f64 = 1e-9;
/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-9;
/// Resolution-of-identity tolerance inside the parameterization stages.
pub const RESOLUTION: f64 = 1e-8;

/// Overridable pair of thresholds, used by classification and validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub structural: f64,
    pub sign: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structural: STRUCTURAL,
            sign: SIGN,
        }
    }
}
