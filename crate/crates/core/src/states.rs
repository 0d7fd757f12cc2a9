//! Density matrices and diagonalized reservoir states.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, diag, hermitian_eig, CMatrix, Metric};
use crate::random::gaussian_matrix;
use crate::tolerance::{Tolerances, SIGN, STRUCTURAL};

/// A unit-trace, hermitian, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates trace, then hermiticity, then positivity.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        let report = DensityReport::evaluate(&m, tol)?;
        if !report.trace_ok {
            return Err(Error::TraceNotOne {
                trace: report.trace,
            });
        }
        if !report.hermitian_ok {
            return Err(Error::NotHermitian {
                residual: report.hermiticity_residual,
            });
        }
        if !report.positive_ok {
            return Err(Error::NotPositive {
                min_eigenvalue: report.min_eigenvalue,
            });
        }
        Ok(Self { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `|k⟩⟨k|`.
    pub fn basis_projector(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, dim });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = linalg::real(1.0);
        Ok(Self { matrix: m })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: linalg::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// `G G† / tr(G G†)` for a `dim × rank` complex Gaussian `G`.
    pub fn random(dim: usize, rank: usize, seed: u64) -> Result<Self> {
        if rank == 0 || rank > dim {
            return Err(Error::BadRank { rank, dim });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = gaussian_matrix(dim, rank, &mut rng);
        let gg = &g * g.adjoint();
        let tr = gg.trace().re;
        let m = gg.scale(1.0 / tr);
        let m = (&m + m.adjoint()).scale(0.5);
        Self::new(m)
    }
}

/// Per-constraint residuals for a candidate density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub trace: f64,
    pub trace_residual: f64,
    pub trace_ok: bool,
    pub hermiticity_residual: f64,
    pub hermitian_ok: bool,
    pub min_eigenvalue: f64,
    pub positive_ok: bool,
}

impl DensityReport {
    pub fn evaluate(m: &CMatrix, tol: &Tolerances) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !linalg::is_finite(m) {
            return Err(Error::NonFinite);
        }
        let tr = m.trace();
        let trace_residual = (tr - linalg::real(1.0)).norm();
        let hermiticity_residual = linalg::hermiticity_residual(m);
        let hermitian_ok = hermiticity_residual <= tol.structural * m.norm().max(1.0);
        let sym = (m + m.adjoint()).scale(0.5);
        let min_eigenvalue = hermitian_eig(&sym)?.min_eigenvalue();
        Ok(Self {
            trace: tr.re,
            trace_residual,
            trace_ok: trace_residual <= tol.structural,
            hermiticity_residual,
            hermitian_ok,
            min_eigenvalue,
            positive_ok: min_eigenvalue >= -tol.sign,
        })
    }

    pub fn all_ok(&self) -> bool {
        self.trace_ok && self.hermitian_ok && self.positive_ok
    }
}

/// A reservoir state kept in diagonal form: `τ = Q diag(τ(ν)) Q†`, together
/// with the metric signature of the reservoir space.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    eigenvalues: Vec<f64>,
    eigenbasis: CMatrix,
    signature: Metric,
}

impl ReservoirState {
    pub fn new(eigenvalues: Vec<f64>, eigenbasis: CMatrix, signature: Metric) -> Result<Self> {
        let dim = eigenvalues.len();
        if dim == 0 || eigenbasis.shape() != (dim, dim) || signature.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "reservoir: {} eigenvalues, {}x{} basis, {} signs",
                dim,
                eigenbasis.nrows(),
                eigenbasis.ncols(),
                signature.len()
            )));
        }
        if linalg::unitarity_residual(&eigenbasis) > STRUCTURAL {
            return Err(Error::BadReservoir("eigenbasis is not unitary".into()));
        }
        if let Some(&bad) = eigenvalues.iter().find(|&&t| t < -SIGN || !t.is_finite()) {
            return Err(Error::BadReservoir(format!("eigenvalue {bad} is negative")));
        }
        let total: f64 = eigenvalues.iter().sum();
        if (total - 1.0).abs() > STRUCTURAL {
            return Err(Error::BadReservoir(format!("eigenvalues sum to {total}")));
        }
        for (k, &t) in eigenvalues.iter().enumerate() {
            if t > SIGN {
                let v = eigenbasis.column(k);
                let weight: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(i, z)| z.norm_sqr() * signature.sign(i))
                    .sum();
                if weight < 1.0 - SIGN {
                    return Err(Error::BadReservoir(format!(
                        "populated eigendirection {k} leaves the positive-metric subspace"
                    )));
                }
            }
        }
        Ok(Self {
            eigenvalues,
            eigenbasis,
            signature,
        })
    }

    /// `|which⟩⟨which|` in a positive-metric reservoir.
    pub fn pure(dim: usize, which: usize) -> Result<Self> {
        Self::pure_with_metric(Metric::euclidean(dim), which)
    }

    /// `|which⟩⟨which|` in a reservoir with the given signature; `which` must
    /// be a positive-metric direction.
    pub fn pure_with_metric(signature: Metric, which: usize) -> Result<Self> {
        let dim = signature.len();
        if which >= dim {
            return Err(Error::IndexOutOfRange { index: which, dim });
        }
        let mut eigenvalues = vec![0.0; dim];
        eigenvalues[which] = 1.0;
        Self::new(eigenvalues, linalg::identity(dim), signature)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenbasis(&self) -> &CMatrix {
        &self.eigenbasis
    }

    pub fn signature(&self) -> &Metric {
        &self.signature
    }

    pub fn is_pure(&self) -> bool {
        self.eigenvalues.iter().filter(|&&t| t > SIGN).count() == 1
    }

    pub fn matrix(&self) -> CMatrix {
        &self.eigenbasis * diag(&self.eigenvalues) * self.eigenbasis.adjoint()
    }
}

/// Convenience alias matching the reservoir constructor used by dilations.
pub fn pure_reservoir(dim: usize, which: usize) -> Result<ReservoirState> {
    ReservoirState::pure(dim, which)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[real(a), real(b), real(c), real(d)])
    }

    #[test]
    fn accepts_standard_states() {
        assert!(DensityMatrix::new(linalg::identity(2).scale(0.5)).is_ok());
        assert!(DensityMatrix::new(m2(1.0, 0.0, 0.0, 0.0)).is_ok());
    }

    #[test]
    fn rejects_in_constraint_order() {
        // eigenvalues 1.1 and -0.1
        assert!(matches!(
            DensityMatrix::new(m2(0.5, 0.6, 0.6, 0.5)),
            Err(Error::NotPositive { min_eigenvalue }) if (min_eigenvalue + 0.1).abs() < 1e-12
        ));
        assert!(matches!(
            DensityMatrix::new(m2(0.5, 0.1, 0.0, 0.5)),
            Err(Error::NotHermitian { .. })
        ));
        // trace is checked before anything else
        assert!(matches!(
            DensityMatrix::new(m2(0.5, 0.1, 0.0, 0.4)),
            Err(Error::TraceNotOne { .. })
        ));
    }

    #[test]
    fn random_states_have_requested_rank() {
        let pure = DensityMatrix::random(2, 1, 11).unwrap();
        let eig = hermitian_eig(pure.matrix()).unwrap();
        assert!(eig.min_eigenvalue().abs() < 1e-12);

        assert_eq!(
            DensityMatrix::random(3, 3, 7).unwrap(),
            DensityMatrix::random(3, 3, 7).unwrap()
        );

        let rho = DensityMatrix::random(4, 2, 1).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        let eig = hermitian_eig(rho.matrix()).unwrap();
        assert_eq!(eig.eigenvalues.iter().filter(|&&l| l > 1e-12).count(), 2);

        assert!(matches!(
            DensityMatrix::random(3, 4, 0),
            Err(Error::BadRank { .. })
        ));
        assert!(matches!(
            DensityMatrix::random(3, 0, 0),
            Err(Error::BadRank { .. })
        ));
    }

    #[test]
    fn pure_reservoirs() {
        let tau = pure_reservoir(2, 0).unwrap();
        assert_eq!(tau.matrix(), diag(&[1.0, 0.0]));
        assert!(tau.is_pure());
        let tau = pure_reservoir(3, 2).unwrap();
        assert_eq!(tau.matrix(), diag(&[0.0, 0.0, 1.0]));
        assert!(tau.is_pure());
        assert!(matches!(
            pure_reservoir(3, 3),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn indefinite_reservoir_support_must_be_positive() {
        let metric = Metric::split(1, 1);
        assert!(ReservoirState::pure_with_metric(metric.clone(), 0).is_ok());
        assert!(matches!(
            ReservoirState::pure_with_metric(metric, 1),
            Err(Error::BadReservoir(_))
        ));
    }

    #[test]
    fn mixed_reservoir_validation() {
        let ok = ReservoirState::new(vec![0.25, 0.75], linalg::identity(2), Metric::euclidean(2));
        assert!(ok.is_ok());
        assert!(!ok.unwrap().is_pure());
        let bad = ReservoirState::new(vec![0.5, 0.75], linalg::identity(2), Metric::euclidean(2));
        assert!(matches!(bad, Err(Error::BadReservoir(_))));
    }
}
