//! Dynamical maps in A-form and B-form.
//!
//! The A-form acts on row-major vectorized matrices:
//! `(Aρ)_{rs} = A[(r,s),(r',s')] ρ_{r's'}` with pair `(x,y) ↦ x·N + y`.
//! The B-form (dynamical matrix) is the index reshuffle
//! `B[(r,r'),(s,s')] = A[(r,s),(r',s')]`, which is hermitian exactly when the
//! map preserves hermiticity and positive semidefinite exactly when the map
//! is completely positive.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, real, CMatrix, C64};
use crate::positivity::{self, BlockCertificate};
use crate::states::DensityMatrix;
use crate::tolerance::Tolerances;

pub const DEFAULT_RESTARTS: usize = 50;

/// Exchange the inner indices of a supermatrix: `out[(a,b),(c,d)] = S[(a,c),(b,d)]`.
///
/// The operation is an entry permutation and an involution.
pub fn reshuffle(s: &CMatrix) -> Result<CMatrix> {
    let n = supermatrix_dim(s)?;
    Ok(CMatrix::from_fn(n * n, n * n, |row, col| {
        let (a, b) = (row / n, row % n);
        let (c, d) = (col / n, col % n);
        s[(a * n + c, b * n + d)]
    }))
}

fn supermatrix_dim(s: &CMatrix) -> Result<usize> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "supermatrix must be square, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    let side = s.nrows();
    let n = (side as f64).sqrt().round() as usize;
    if n == 0 || n * n != side {
        return Err(Error::NotPerfectSquare { side });
    }
    Ok(n)
}

/// A linear map on `N × N` matrices, stored in both supermatrix forms.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalMap {
    dim: usize,
    a_form: CMatrix,
    b_form: CMatrix,
}

impl DynamicalMap {
    pub fn from_a_form(a_form: CMatrix) -> Result<Self> {
        let dim = supermatrix_dim(&a_form)?;
        if !linalg::is_finite(&a_form) {
            return Err(Error::NonFinite);
        }
        let b_form = reshuffle(&a_form)?;
        Ok(Self {
            dim,
            a_form,
            b_form,
        })
    }

    pub fn from_b_form(b_form: CMatrix) -> Result<Self> {
        let dim = supermatrix_dim(&b_form)?;
        if !linalg::is_finite(&b_form) {
            return Err(Error::NonFinite);
        }
        let a_form = reshuffle(&b_form)?;
        Ok(Self {
            dim,
            a_form,
            b_form,
        })
    }

    /// `ρ ↦ Σ_k sign_k · O_k ρ O_k†`.
    pub fn from_kraus_action(operators: &[(f64, CMatrix)]) -> Result<Self> {
        let dim = operators
            .first()
            .map(|(_, op)| op.nrows())
            .ok_or_else(|| Error::DimensionMismatch("empty operator list".into()))?;
        if let Some((_, bad)) = operators.iter().find(|(_, op)| op.shape() != (dim, dim)) {
            return Err(Error::DimensionMismatch(format!(
                "operator of shape {}x{} in a family of {dim}x{dim}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        // B = Σ sign · vec(O) vec(O)†, with vec row-major.
        let n2 = dim * dim;
        let mut b = CMatrix::zeros(n2, n2);
        for (sign, op) in operators {
            let v = crate::linalg::CVector::from_iterator(n2, op.transpose().iter().copied());
            b += (&v * v.adjoint()).scale(*sign);
        }
        Self::from_b_form(b)
    }

    /// Identity map on `N × N` matrices.
    pub fn identity(dim: usize) -> Self {
        Self::from_a_form(linalg::identity(dim * dim)).expect("square by construction")
    }

    /// `ρ ↦ ρᵀ`.
    pub fn transpose(dim: usize) -> Self {
        let a = CMatrix::from_fn(dim * dim, dim * dim, |row, col| {
            let (r, s) = (row / dim, row % dim);
            let (rp, sp) = (col / dim, col % dim);
            real(if r == sp && s == rp { 1.0 } else { 0.0 })
        });
        Self::from_a_form(a).expect("square by construction")
    }

    /// `ρ ↦ (1 − p) ρ + p · tr(ρ) I/N`.
    pub fn depolarizing(dim: usize, p: f64) -> Self {
        let a = CMatrix::from_fn(dim * dim, dim * dim, |row, col| {
            let (r, s) = (row / dim, row % dim);
            let (rp, sp) = (col / dim, col % dim);
            let mut v = 0.0;
            if row == col {
                v += 1.0 - p;
            }
            if r == s && rp == sp {
                v += p / dim as f64;
            }
            real(v)
        });
        Self::from_a_form(a).expect("square by construction")
    }

    /// `ρ ↦ U ρ U†`.
    pub fn unitary(u: &CMatrix) -> Result<Self> {
        Self::from_kraus_action(&[(1.0, u.clone())])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            a_form: self.a_form.scale(factor),
            b_form: self.b_form.scale(factor),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a_form(&self) -> &CMatrix {
        &self.a_form
    }

    pub fn b_form(&self) -> &CMatrix {
        &self.b_form
    }

    /// Apply to an arbitrary `N × N` matrix.
    pub fn apply_matrix(&self, rho: &CMatrix) -> Result<CMatrix> {
        let n = self.dim;
        if rho.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "map on {n}x{n} matrices applied to {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let v = crate::linalg::CVector::from_iterator(n * n, rho.transpose().iter().copied());
        let out = &self.a_form * v;
        Ok(CMatrix::from_fn(n, n, |r, s| out[r * n + s]))
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        self.apply_matrix(rho.matrix())
    }

    /// `(Λ ⊗ id)(X)` for `X` on `C^N ⊗ C^ancilla`.
    pub fn apply_extended(&self, x: &CMatrix, ancilla: usize) -> Result<CMatrix> {
        let n = self.dim;
        let side = n * ancilla;
        if x.shape() != (side, side) {
            return Err(Error::DimensionMismatch(format!(
                "extended input must be {side}x{side}, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(CMatrix::from_fn(side, side, |row, col| {
            let (r, a) = (row / ancilla, row % ancilla);
            let (s, b) = (col / ancilla, col % ancilla);
            let mut acc = C64::new(0.0, 0.0);
            for rp in 0..n {
                for sp in 0..n {
                    acc += self.a_form[(r * n + s, rp * n + sp)]
                        * x[(rp * ancilla + a, sp * ancilla + b)];
                }
            }
            acc
        }))
    }

    /// `(flag, ‖B − B†‖_F)`.
    pub fn check_hermiticity_preserving(&self) -> (bool, f64) {
        self.check_hermiticity_preserving_with(&Tolerances::default())
    }

    pub fn check_hermiticity_preserving_with(&self, tol: &Tolerances) -> (bool, f64) {
        let residual = linalg::hermiticity_residual(&self.b_form);
        (
            residual <= linalg::relative_threshold(&self.b_form, tol.structural),
            residual,
        )
    }

    /// `T(r',s') = Σ_n B[(n,r'),(n,s')]`; the map is trace preserving iff `T = I`.
    pub fn trace_matrix(&self) -> CMatrix {
        let n = self.dim;
        CMatrix::from_fn(n, n, |rp, sp| {
            (0..n).map(|k| self.b_form[(k * n + rp, k * n + sp)]).sum()
        })
    }

    /// `(flag, ‖T − I‖_F)`.
    pub fn check_trace_preserving(&self) -> (bool, f64) {
        self.check_trace_preserving_with(&Tolerances::default())
    }

    pub fn check_trace_preserving_with(&self, tol: &Tolerances) -> (bool, f64) {
        let residual = (self.trace_matrix() - linalg::identity(self.dim)).norm();
        (
            residual <= linalg::relative_threshold(&self.b_form, tol.structural),
            residual,
        )
    }

    fn require_hermiticity_preserving(&self, tol: &Tolerances) -> Result<()> {
        let (ok, residual) = self.check_hermiticity_preserving_with(tol);
        if ok {
            Ok(())
        } else {
            Err(Error::NotHermiticityPreserving { residual })
        }
    }

    /// Spectrum of the B-form, descending.
    pub fn choi_spectrum(&self) -> Result<Vec<f64>> {
        self.require_hermiticity_preserving(&Tolerances::default())?;
        Ok(hermitian_eig(&self.b_form)?.eigenvalues)
    }

    /// `(B ≥ 0, min eigenvalue of B)`.
    pub fn is_completely_positive(&self) -> Result<(bool, f64)> {
        self.is_completely_positive_with(&Tolerances::default())
    }

    pub fn is_completely_positive_with(&self, tol: &Tolerances) -> Result<(bool, f64)> {
        self.require_hermiticity_preserving(tol)?;
        let min = hermitian_eig(&self.b_form)?.min_eigenvalue();
        Ok((min >= -tol.sign, min))
    }

    /// Heuristic test of non-negativity on product supervectors.
    pub fn is_block_positive(
        &self,
        restarts: usize,
        seed: u64,
    ) -> Result<(bool, f64, BlockCertificate)> {
        self.is_block_positive_with(restarts, seed, &Tolerances::default())
    }

    pub fn is_block_positive_with(
        &self,
        restarts: usize,
        seed: u64,
        tol: &Tolerances,
    ) -> Result<(bool, f64, BlockCertificate)> {
        self.require_hermiticity_preserving(tol)?;
        let cert = positivity::minimize_product_form(self, restarts, seed)?;
        let min = cert.best_value;
        Ok((min >= -tol.sign, min, cert))
    }

    pub fn classify(&self, restarts: usize, seed: u64) -> MapClassification {
        self.classify_with(restarts, seed, &Tolerances::default())
    }

    /// Run all checks; failures are recorded rather than returned.
    pub fn classify_with(&self, restarts: usize, seed: u64, tol: &Tolerances) -> MapClassification {
        let (hp, hp_residual) = self.check_hermiticity_preserving_with(tol);
        let (tp, tp_residual) = self.check_trace_preserving_with(tol);
        let mut out = MapClassification {
            hermiticity_preserving: hp,
            hermiticity_residual: hp_residual,
            trace_preserving: tp,
            trace_residual: tp_residual,
            completely_positive: false,
            choi_min: None,
            choi_spectrum: Vec::new(),
            block_positive: false,
            block_minimum: None,
            certificate: None,
        };
        if !hp {
            return out;
        }
        let Ok(eig) = hermitian_eig(&self.b_form) else {
            return out;
        };
        let choi_min = eig.min_eigenvalue();
        out.choi_spectrum = eig.eigenvalues;
        out.choi_min = Some(choi_min);
        out.completely_positive = choi_min >= -tol.sign;
        if out.completely_positive {
            // f(x, y) = u†Bu ≥ λ_min(B) for unit product vectors u.
            out.block_positive = true;
            out.block_minimum = Some(choi_min);
            out.certificate = Some(BlockCertificate::from_choi_bound(choi_min));
        } else if let Ok(cert) = positivity::minimize_product_form(self, restarts, seed) {
            out.block_minimum = Some(cert.best_value);
            out.block_positive = cert.best_value >= -tol.sign;
            out.certificate = Some(cert);
        }
        out
    }
}

/// Outcome of the hermiticity, trace, complete-positivity and
/// block-positivity checks on one map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapClassification {
    pub hermiticity_preserving: bool,
    pub hermiticity_residual: f64,
    pub trace_preserving: bool,
    pub trace_residual: f64,
    #[serde(rename = "cp")]
    pub completely_positive: bool,
    pub choi_min: Option<f64>,
    pub choi_spectrum: Vec<f64>,
    pub block_positive: bool,
    #[serde(rename = "block_min")]
    pub block_minimum: Option<f64>,
    pub certificate: Option<BlockCertificate>,
}

impl MapClassification {
    pub fn label(&self) -> &'static str {
        match (self.completely_positive, self.block_positive) {
            (true, _) => "completely positive",
            (false, true) => "positive, not completely positive",
            (false, false) => "not positive",
        }
    }
}

/// Result of a convex combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub map: DynamicalMap,
    pub terms: usize,
    /// More terms than the `N²` needed for any convex decomposition.
    pub exceeds_term_bound: bool,
}

/// `B = Σ k(n) B_n` with `k(n) ≥ 0`, `Σ k(n) = 1`.
pub fn convex_combine(maps: &[DynamicalMap], weights: &[f64]) -> Result<Mixture> {
    if maps.is_empty() || maps.len() != weights.len() {
        return Err(Error::BadWeights(format!(
            "{} maps with {} weights",
            maps.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::BadWeights(format!("negative or non-finite weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::BadWeights(format!("weights sum to {total}")));
    }
    let dim = maps[0].dim();
    if let Some(bad) = maps.iter().find(|m| m.dim() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "cannot mix maps on dimensions {dim} and {}",
            bad.dim()
        )));
    }
    let mut b = CMatrix::zeros(dim * dim, dim * dim);
    for (map, &w) in maps.iter().zip(weights) {
        b += map.b_form().scale(w);
    }
    Ok(Mixture {
        map: DynamicalMap::from_b_form(b)?,
        terms: maps.len(),
        exceeds_term_bound: maps.len() > dim * dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag, identity};

    fn phi_projector(n: usize) -> CMatrix {
        CMatrix::from_fn(n * n, n * n, |row, col| {
            real(if row / n == row % n && col / n == col % n { 1.0 } else { 0.0 })
        })
    }

    fn swap(n: usize) -> CMatrix {
        CMatrix::from_fn(n * n, n * n, |row, col| {
            let (i, j) = (row / n, row % n);
            let (k, l) = (col / n, col % n);
            real(if i == l && j == k { 1.0 } else { 0.0 })
        })
    }

    /// Λ(ρ) = 2 tr(ρ)|0⟩⟨0| − ρ on qubits.
    pub(crate) fn reflection_map() -> DynamicalMap {
        let mut ops = Vec::new();
        for i in 0..2 {
            let mut k = CMatrix::zeros(2, 2);
            k[(0, i)] = real(2f64.sqrt());
            ops.push((1.0, k));
        }
        ops.push((-1.0, identity(2)));
        DynamicalMap::from_kraus_action(&ops).unwrap()
    }

    #[test]
    fn reshuffle_examples() {
        let id = DynamicalMap::identity(2);
        assert_eq!(id.b_form(), &phi_projector(2));
        let t = DynamicalMap::transpose(2);
        assert_eq!(t.b_form(), &swap(2));
        let a = t.a_form().clone();
        assert_eq!(reshuffle(&reshuffle(&a).unwrap()).unwrap(), a);
        assert!(matches!(
            reshuffle(&identity(5)),
            Err(Error::NotPerfectSquare { side: 5 })
        ));
    }

    #[test]
    fn kraus_action_examples() {
        assert_eq!(
            DynamicalMap::from_kraus_action(&[(1.0, identity(2))]).unwrap(),
            DynamicalMap::identity(2)
        );
        let ops = [(1.0, identity(2).scale(2f64.sqrt())), (-1.0, identity(2))];
        let m = DynamicalMap::from_kraus_action(&ops).unwrap();
        assert!((m.a_form() - identity(4)).norm() < 1e-12);

        let h = 1.0 / 2f64.sqrt();
        let u = CMatrix::from_row_slice(2, 2, &[real(h), c(0.0, h), c(0.0, h), real(h)]);
        let m = DynamicalMap::unitary(&u).unwrap();
        assert!(m.check_trace_preserving().0);
        assert!(m.is_completely_positive().unwrap().0);

        assert!(matches!(
            DynamicalMap::from_kraus_action(&[(1.0, identity(2)), (1.0, identity(3))]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn apply_examples() {
        let rho = DensityMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[real(0.6), c(0.1, 0.2), c(0.1, -0.2), real(0.4)],
        ))
        .unwrap();
        assert_eq!(DynamicalMap::identity(2).apply(&rho).unwrap(), *rho.matrix());
        assert_eq!(
            DynamicalMap::transpose(2).apply(&rho).unwrap(),
            rho.matrix().transpose()
        );
        let out = DynamicalMap::depolarizing(2, 1.0).apply(&rho).unwrap();
        assert!((out - identity(2).scale(0.5)).norm() < 1e-15);
    }

    #[test]
    fn hermiticity_checks() {
        assert!(DynamicalMap::identity(2).check_hermiticity_preserving().0);
        assert!(DynamicalMap::transpose(2).check_hermiticity_preserving().0);
        let mut a = DynamicalMap::identity(2).a_form().clone();
        a[(1, 2)] += c(0.0, 0.1);
        let perturbed = DynamicalMap::from_a_form(a).unwrap();
        let (ok, residual) = perturbed.check_hermiticity_preserving();
        assert!(!ok);
        assert!(residual > 0.1);
    }

    #[test]
    fn trace_checks() {
        assert!(DynamicalMap::identity(2).check_trace_preserving().0);
        let (ok, residual) = DynamicalMap::identity(2).scaled(0.5).check_trace_preserving();
        assert!(!ok);
        assert!((residual - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(reflection_map().check_trace_preserving().0);
    }

    #[test]
    fn complete_positivity_examples() {
        let (cp, min) = DynamicalMap::identity(2).is_completely_positive().unwrap();
        assert!(cp && min.abs() < 1e-12);
        let (cp, min) = DynamicalMap::transpose(2).is_completely_positive().unwrap();
        assert!(!cp && (min + 1.0).abs() < 1e-12);
        assert!(DynamicalMap::depolarizing(2, 0.5).is_completely_positive().unwrap().0);

        let mut a = DynamicalMap::identity(2).a_form().clone();
        a[(1, 2)] += c(0.0, 0.1);
        assert!(matches!(
            DynamicalMap::from_a_form(a).unwrap().is_completely_positive(),
            Err(Error::NotHermiticityPreserving { .. })
        ));
    }

    #[test]
    fn depolarizing_choi_spectrum() {
        for p in [0.0, 0.25, 0.5, 1.0, 1.5] {
            let spec = DynamicalMap::depolarizing(2, p).choi_spectrum().unwrap();
            let mut want = vec![2.0 - 1.5 * p, p / 2.0, p / 2.0, p / 2.0];
            want.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (g, w) in spec.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "p={p}: {spec:?}");
            }
        }
    }

    #[test]
    fn block_positivity_examples() {
        let (ok, min, _) = DynamicalMap::transpose(2).is_block_positive(20, 3).unwrap();
        assert!(ok && min.abs() < 1e-9);
        let (ok, min, _) = DynamicalMap::identity(2).is_block_positive(20, 3).unwrap();
        assert!(ok && min.abs() < 1e-9);
        let (ok, min, cert) = reflection_map().is_block_positive(20, 3).unwrap();
        assert!(!ok);
        assert!((min + 1.0).abs() < 1e-9, "{min}");
        assert_eq!(cert.restarts, 20);
    }

    #[test]
    fn classification_examples() {
        let c = DynamicalMap::identity(2).classify(10, 0);
        assert!(c.hermiticity_preserving && c.trace_preserving);
        assert!(c.completely_positive && c.block_positive);

        let c = DynamicalMap::transpose(2).classify(10, 0);
        assert!(c.hermiticity_preserving && c.trace_preserving);
        assert!(!c.completely_positive && c.block_positive);

        let c = reflection_map().classify(10, 0);
        assert!(c.hermiticity_preserving && c.trace_preserving);
        assert!(!c.completely_positive && !c.block_positive);
        assert_eq!(c.label(), "not positive");
    }

    #[test]
    fn convex_combination_examples() {
        let id = DynamicalMap::identity(2);
        assert_eq!(convex_combine(&[id.clone()], &[1.0]).unwrap().map, id);

        let t = DynamicalMap::transpose(2);
        let mix = convex_combine(&[id.clone(), t], &[0.5, 0.5]).unwrap();
        let want = (phi_projector(2) + swap(2)).scale(0.5);
        assert!((mix.map.b_form() - want).norm() < 1e-15);
        // Antisymmetric vector: 0 from the projector, −1 from SWAP.
        let (cp, min) = mix.map.is_completely_positive().unwrap();
        assert!(!cp && (min + 0.5).abs() < 1e-12);
        assert!(!mix.exceeds_term_bound);

        assert!(matches!(
            convex_combine(&[id.clone(), id.clone()], &[0.5, 0.6]),
            Err(Error::BadWeights(_))
        ));
        assert!(matches!(
            convex_combine(&[id, DynamicalMap::identity(3)], &[0.5, 0.5]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn extended_action_matches_choi_matrix() {
        for map in [DynamicalMap::transpose(2), reflection_map(), DynamicalMap::depolarizing(3, 0.3)] {
            let n = map.dim();
            let phi = phi_projector(n).scale(1.0 / n as f64);
            let out = map.apply_extended(&phi, n).unwrap().scale(n as f64);
            assert!((out - map.b_form()).norm() < 1e-12);
        }
        let _ = diag(&[1.0]);
    }
}
