//! Canonical eigenvector decomposition of the B-form.
//!
//! `B = Σ μ_α ζ^(α) ζ^(α)†` splits by the sign of `μ` into
//! `C^(α) = √μ_α · mat(ζ^(α))` and `D^(β) = √|μ_β| · mat(ζ^(β))`, where
//! `mat(ζ)[r][r'] = ζ[r·N + r']`. The map then acts as
//! `ρ ↦ Σ C ρ C† − Σ D ρ D†`.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, identity, CMatrix};
use crate::maps::DynamicalMap;
use crate::tolerance::{Tolerances, STRUCTURAL};

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDecomposition {
    pub dim: usize,
    pub positive_ops: Vec<CMatrix>,
    pub negative_ops: Vec<CMatrix>,
    /// Full Choi spectrum, descending.
    pub eigenvalues: Vec<f64>,
    pub zero_count: usize,
}

/// Outcome of the `Σ C†C − Σ D†D = I` check.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceCondition {
    pub satisfied: bool,
    pub residual: f64,
    /// `Σ C†C`
    pub j: CMatrix,
    /// `Σ D†D`
    pub k: CMatrix,
}

impl CanonicalDecomposition {
    pub fn m(&self) -> usize {
        self.positive_ops.len()
    }

    pub fn n(&self) -> usize {
        self.negative_ops.len()
    }

    pub fn is_completely_positive(&self) -> bool {
        self.negative_ops.is_empty()
    }

    /// Signed operator list `(+1, C) ∪ (−1, D)`.
    pub fn signed_operators(&self) -> Vec<(f64, CMatrix)> {
        self.positive_ops
            .iter()
            .map(|c| (1.0, c.clone()))
            .chain(self.negative_ops.iter().map(|d| (-1.0, d.clone())))
            .collect()
    }

    /// Rebuild the map from the operator families.
    pub fn reconstruct(&self) -> DynamicalMap {
        let ops = self.signed_operators();
        if ops.is_empty() {
            let n2 = self.dim * self.dim;
            return DynamicalMap::from_b_form(CMatrix::zeros(n2, n2))
                .expect("square by construction");
        }
        DynamicalMap::from_kraus_action(&ops).expect("operators share one dimension")
    }

    pub fn verify_trace_condition(&self) -> TraceCondition {
        let n = self.dim;
        let j = self
            .positive_ops
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, c| acc + c.adjoint() * c);
        let k = self
            .negative_ops
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, d| acc + d.adjoint() * d);
        let residual = (&j - &k - identity(n)).norm();
        TraceCondition {
            satisfied: residual <= STRUCTURAL * j.norm().max(1.0),
            residual,
            j,
            k,
        }
    }
}

pub fn decompose(map: &DynamicalMap) -> Result<CanonicalDecomposition> {
    decompose_with(map, &Tolerances::default())
}

pub fn decompose_with(map: &DynamicalMap, tol: &Tolerances) -> Result<CanonicalDecomposition> {
    let (hp, residual) = map.check_hermiticity_preserving_with(tol);
    if !hp {
        return Err(Error::NotHermiticityPreserving { residual });
    }
    let n = map.dim();
    let eig = hermitian_eig(map.b_form())?;
    let reshape = |k: usize, scale: f64| {
        let col = eig.eigenvectors.column(k);
        CMatrix::from_fn(n, n, |r, rp| col[r * n + rp] * scale)
    };
    let mut positive_ops = Vec::new();
    let mut negative_ops = Vec::new();
    let mut zero_count = 0;
    for (k, &mu) in eig.eigenvalues.iter().enumerate() {
        if mu > tol.sign {
            positive_ops.push(reshape(k, mu.sqrt()));
        } else if mu < -tol.sign {
            negative_ops.push(reshape(k, (-mu).sqrt()));
        } else {
            zero_count += 1;
        }
    }
    // Most negative first, mirroring the descending order of the positive part.
    negative_ops.reverse();
    Ok(CanonicalDecomposition {
        dim: n,
        positive_ops,
        negative_ops,
        eigenvalues: eig.eigenvalues,
        zero_count,
    })
}
