//! Maps as contractions of (pseudo-)unitary evolution on system ⊗ reservoir.
//!
//! Extended-space index `(r, a) ↦ r·R + a` for reservoir dimension `R`.
//! Operator `α` of a decomposition lives in the column block with reservoir
//! index 0: `V[(r, α), (r', 0)] = O^(α)[r][r']`. The remaining columns are
//! a completion and do not affect the contracted map when `τ = |0⟩⟨0|`.

use crate::decomposition::CanonicalDecomposition;
use crate::error::{Error, Result};
use crate::linalg::{
    identity, metric_residual, pseudo_orthonormal_completion, real, tensor, CMatrix, CVector,
    Metric,
};
use crate::maps::DynamicalMap;
use crate::states::{DensityMatrix, ReservoirState};
use crate::tolerance::{SIGN, STRUCTURAL};

/// Where one operator of the source decomposition sits inside `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KrausSlot {
    /// Reservoir row index `α` of the block `V[(·, α), (·, 0)]`.
    pub reservoir_index: usize,
    /// `+1` for positive operators, `−1` for negative ones.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dilation {
    dim_system: usize,
    dim_reservoir: usize,
    v: CMatrix,
    metric: Metric,
    reservoir: ReservoirState,
    kraus_column_map: Vec<KrausSlot>,
}

impl Dilation {
    /// Checks shapes, the metric isometry of `V` and that the extended metric
    /// is the reservoir signature lifted to the system.
    pub fn new(
        dim_system: usize,
        v: CMatrix,
        reservoir: ReservoirState,
        kraus_column_map: Vec<KrausSlot>,
    ) -> Result<Self> {
        let dim_reservoir = reservoir.dim();
        let side = dim_system * dim_reservoir;
        if dim_system == 0 || v.shape() != (side, side) {
            return Err(Error::DimensionMismatch(format!(
                "V is {}x{}, expected {side}x{side}",
                v.nrows(),
                v.ncols()
            )));
        }
        if let Some(slot) = kraus_column_map
            .iter()
            .find(|s| s.reservoir_index >= dim_reservoir)
        {
            return Err(Error::IndexOutOfRange {
                index: slot.reservoir_index,
                dim: dim_reservoir,
            });
        }
        let metric = reservoir.signature().lift_to_system(dim_system);
        let residual = metric_residual(&v, &metric);
        if residual > STRUCTURAL * v.norm_squared().max(1.0).sqrt() {
            return Err(if metric.is_definite() {
                Error::NotOrthonormal { residual }
            } else {
                Error::NotPseudoOrthonormal { residual }
            });
        }
        Ok(Self {
            dim_system,
            dim_reservoir,
            v,
            metric,
            reservoir,
            kraus_column_map,
        })
    }

    pub fn dim_system(&self) -> usize {
        self.dim_system
    }

    pub fn dim_reservoir(&self) -> usize {
        self.dim_reservoir
    }

    pub fn v(&self) -> &CMatrix {
        &self.v
    }

    /// Extended-space signature.
    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn reservoir(&self) -> &ReservoirState {
        &self.reservoir
    }

    pub fn kraus_column_map(&self) -> &[KrausSlot] {
        &self.kraus_column_map
    }

    pub fn is_unitary(&self) -> bool {
        self.metric.is_definite()
    }

    /// `‖V†ηV − η‖_F`.
    pub fn isometry_residual(&self) -> f64 {
        metric_residual(&self.v, &self.metric)
    }

    pub fn contract(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        self.contract_matrix(rho.matrix())
    }

    /// `Σ_n η_n [V (ρ ⊗ τ) V†]_{(r,n),(s,n)}`.
    pub fn contract_matrix(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = self.dim_system;
        if rho.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "state is {}x{}, system dimension is {d}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let rr = self.dim_reservoir;
        let evolved = &self.v * tensor(rho, &self.reservoir.matrix()) * self.v.adjoint();
        let eta = self.reservoir.signature();
        Ok(CMatrix::from_fn(d, d, |r, s| {
            (0..rr)
                .map(|n| evolved[(r * rr + n, s * rr + n)] * eta.sign(n))
                .sum()
        }))
    }

    /// The contraction as a supermatrix, via the operator family
    /// `K_{n,ν}[r][r'] = √τ(ν) · (V(I⊗Q))[(r,n),(r',ν)]` with sign `η_n`.
    pub fn induced_map(&self) -> DynamicalMap {
        let (d, rr) = (self.dim_system, self.dim_reservoir);
        let vq = &self.v * tensor(&identity(d), self.reservoir.eigenbasis());
        let eta = self.reservoir.signature();
        let mut ops = Vec::new();
        for (nu, &weight) in self.reservoir.eigenvalues().iter().enumerate() {
            if weight <= 0.0 {
                continue;
            }
            let scale = real(weight.sqrt());
            for n in 0..rr {
                let k = CMatrix::from_fn(d, d, |r, rp| vq[(r * rr + n, rp * rr + nu)] * scale);
                ops.push((eta.sign(n), k));
            }
        }
        DynamicalMap::from_kraus_action(&ops).expect("operators share one dimension")
    }
}

fn trace_condition_residual(dec: &CanonicalDecomposition) -> Result<()> {
    let tc = dec.verify_trace_condition();
    if tc.residual > SIGN {
        return Err(Error::TraceConditionViolated {
            residual: tc.residual,
        });
    }
    Ok(())
}

/// Columns `(r', 0)` of `V` filled from the signed operator list.
fn operator_columns(dec: &CanonicalDecomposition, dim_reservoir: usize) -> Vec<(usize, CVector)> {
    let d = dec.dim;
    let ops: Vec<&CMatrix> = dec.positive_ops.iter().chain(&dec.negative_ops).collect();
    (0..d)
        .map(|rp| {
            let mut col = CVector::zeros(d * dim_reservoir);
            for (alpha, op) in ops.iter().enumerate() {
                for r in 0..d {
                    col[r * dim_reservoir + alpha] = op[(r, rp)];
                }
            }
            (rp * dim_reservoir, col)
        })
        .collect()
}

fn slots(m: usize, n: usize) -> Vec<KrausSlot> {
    (0..m + n)
        .map(|alpha| KrausSlot {
            reservoir_index: alpha,
            sign: if alpha < m { 1 } else { -1 },
        })
        .collect()
}

/// Unitary dilation of a completely positive trace-preserving decomposition.
pub fn stinespring_dilate(dec: &CanonicalDecomposition) -> Result<Dilation> {
    if dec.n() > 0 {
        return Err(Error::NotCompletelyPositive { negative: dec.n() });
    }
    trace_condition_residual(dec)?;
    let m = dec.m();
    let metric = Metric::euclidean(dec.dim * m);
    let v = pseudo_orthonormal_completion(&operator_columns(dec, m), &metric)?;
    Dilation::new(dec.dim, v, ReservoirState::pure(m, 0)?, slots(m, 0))
}

/// Pseudo-unitary dilation with reservoir signature `(+)^m (−)^n`.
pub fn pseudo_dilate(dec: &CanonicalDecomposition) -> Result<Dilation> {
    if dec.n() == 0 {
        return Err(Error::NotApplicable(
            "map is completely positive; use the unitary dilation".into(),
        ));
    }
    trace_condition_residual(dec)?;
    let (m, n) = (dec.m(), dec.n());
    let reservoir_metric = Metric::split(m, n);
    let metric = reservoir_metric.lift_to_system(dec.dim);
    let v = pseudo_orthonormal_completion(&operator_columns(dec, m + n), &metric)?;
    let reservoir = ReservoirState::pure_with_metric(reservoir_metric, 0)?;
    Dilation::new(dec.dim, v, reservoir, slots(m, n))
}

/// A named dilation construction.
pub trait DilationStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    /// Whether this construction is the natural one for `dec`.
    fn applies(&self, dec: &CanonicalDecomposition) -> bool;
    fn dilate(&self, dec: &CanonicalDecomposition) -> Result<Dilation>;
}

pub struct Stinespring;

impl DilationStrategy for Stinespring {
    fn name(&self) -> &'static str {
        "stinespring"
    }

    fn applies(&self, dec: &CanonicalDecomposition) -> bool {
        dec.is_completely_positive()
    }

    fn dilate(&self, dec: &CanonicalDecomposition) -> Result<Dilation> {
        stinespring_dilate(dec)
    }
}

pub struct PseudoUnitary;

impl DilationStrategy for PseudoUnitary {
    fn name(&self) -> &'static str {
        "pseudo-unitary"
    }

    fn applies(&self, dec: &CanonicalDecomposition) -> bool {
        !dec.is_completely_positive()
    }

    fn dilate(&self, dec: &CanonicalDecomposition) -> Result<Dilation> {
        pseudo_dilate(dec)
    }
}

pub struct DilationRegistry {
    strategies: Vec<Box<dyn DilationStrategy>>,
}

impl Default for DilationRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(Stinespring));
        reg.register(Box::new(PseudoUnitary));
        reg
    }
}

impl DilationRegistry {
    pub fn empty() -> Self {
        Self {
            strategies: Vec::new(),
        }
    }

    /// Later registrations under an existing name replace the earlier one.
    pub fn register(&mut self, strategy: Box<dyn DilationStrategy>) {
        self.strategies.retain(|s| s.name() != strategy.name());
        self.strategies.push(strategy);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.iter().map(|s| s.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn DilationStrategy> {
        self.strategies
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                registry: "dilation strategy",
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    /// First registered strategy that applies to `dec`.
    pub fn select(&self, dec: &CanonicalDecomposition) -> Result<&dyn DilationStrategy> {
        self.strategies
            .iter()
            .find(|s| s.applies(dec))
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::NotApplicable("no registered dilation applies".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;
    use crate::linalg::{c, diag, unitarity_residual};

    fn swap2() -> CMatrix {
        let mut s = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            s[(i, j)] = real(1.0);
        }
        s
    }

    fn sample_state() -> DensityMatrix {
        DensityMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[real(0.7), c(0.1, -0.2), c(0.1, 0.2), real(0.3)],
        ))
        .unwrap()
    }

    #[test]
    fn identity_evolution_leaves_state() {
        let dil = Dilation::new(2, identity(4), ReservoirState::pure(2, 0).unwrap(), vec![]).unwrap();
        let rho = sample_state();
        assert!((dil.contract(&rho).unwrap() - rho.matrix()).norm() < 1e-15);
        assert!((dil.induced_map().a_form() - identity(4)).norm() < 1e-15);
    }

    #[test]
    fn swap_contracts_to_reservoir_state() {
        let dil = Dilation::new(2, swap2(), ReservoirState::pure(2, 0).unwrap(), vec![]).unwrap();
        let out = dil.contract(&sample_state()).unwrap();
        assert!((out - diag(&[1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn uncoupled_unitary_conjugates() {
        let h = 1.0 / 2f64.sqrt();
        let u = CMatrix::from_row_slice(2, 2, &[real(h), c(0.0, h), c(0.0, h), real(h)]);
        let v = tensor(&u, &identity(2));
        let dil = Dilation::new(2, v, ReservoirState::pure(2, 1).unwrap(), vec![]).unwrap();
        let rho = sample_state();
        let want = &u * rho.matrix() * u.adjoint();
        assert!((dil.contract(&rho).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn mixed_reservoir_matches_weighted_kraus_sum() {
        let tau = ReservoirState::new(vec![0.25, 0.75], identity(2), Metric::euclidean(2)).unwrap();
        let dil = Dilation::new(2, swap2(), tau, vec![]).unwrap();
        let rho = sample_state();
        let via_map = dil.induced_map().apply(&rho).unwrap();
        assert!((&via_map - dil.contract(&rho).unwrap()).norm() < 1e-12);
        assert!((via_map - diag(&[0.25, 0.75])).norm() < 1e-12);
    }

    #[test]
    fn identity_map_dilates_trivially() {
        let dil = stinespring_dilate(&decompose(&DynamicalMap::identity(2)).unwrap()).unwrap();
        assert_eq!(dil.dim_reservoir(), 1);
        assert!(unitarity_residual(dil.v()) < 1e-12);
        // V is the identity up to the global phase of the decomposed operator.
        let phase = dil.v()[(0, 0)];
        assert!((dil.v() - identity(2) * phase).norm() < 1e-12);
    }

    #[test]
    fn fully_depolarizing_round_trip() {
        let map = DynamicalMap::depolarizing(2, 1.0);
        let dec = decompose(&map).unwrap();
        let dil = stinespring_dilate(&dec).unwrap();
        assert_eq!(dil.v().nrows(), 2 * dec.m());
        assert!(dil.isometry_residual() < 1e-10);
        let out = dil.contract(&sample_state()).unwrap();
        assert!((out - identity(2).scale(0.5)).norm() < 1e-10);
    }

    #[test]
    fn transpose_pseudo_dilation() {
        let t = DynamicalMap::transpose(2);
        let dil = pseudo_dilate(&decompose(&t).unwrap()).unwrap();
        assert_eq!(dil.v().nrows(), 8);
        assert_eq!(dil.reservoir().signature().signs(), &[1, 1, 1, -1]);
        assert!(dil.isometry_residual() < 1e-10);
        assert!((dil.induced_map().b_form() - t.b_form()).norm() < 1e-10);
        let rho = sample_state();
        let out = dil.contract(&rho).unwrap();
        assert!((out - rho.matrix().transpose()).norm() < 1e-10);
    }

    #[test]
    fn guards() {
        let cp = decompose(&DynamicalMap::identity(2)).unwrap();
        assert!(matches!(pseudo_dilate(&cp), Err(Error::NotApplicable(_))));
        let ncp = decompose(&DynamicalMap::transpose(2)).unwrap();
        assert!(matches!(
            stinespring_dilate(&ncp),
            Err(Error::NotCompletelyPositive { negative: 1 })
        ));
        let scaled = decompose(&DynamicalMap::identity(2).scaled(0.5)).unwrap();
        assert!(matches!(
            stinespring_dilate(&scaled),
            Err(Error::TraceConditionViolated { .. })
        ));
    }

    #[test]
    fn registry_selects_by_sign_structure() {
        let reg = DilationRegistry::default();
        assert_eq!(reg.names(), vec!["stinespring", "pseudo-unitary"]);
        let cp = decompose(&DynamicalMap::identity(2)).unwrap();
        let ncp = decompose(&DynamicalMap::transpose(2)).unwrap();
        assert_eq!(reg.select(&cp).unwrap().name(), "stinespring");
        assert_eq!(reg.select(&ncp).unwrap().name(), "pseudo-unitary");
        assert!(matches!(
            reg.get("nope"),
            Err(Error::UnknownStrategy { .. })
        ));
    }
}
