//! Angle parameterization of the positive and negative operator families.
//!
//! Pipeline:
//! 1. `J = Σ C†C` and `K = Σ D†D` satisfy `J − K = I`, so one unitary `U`
//!    diagonalizes both. Their common eigenvalues are `cosh²φ_i` and `sinh²φ_i`.
//! 2. In that frame `C̃ = U†CU = M [cosh φ]` and `D̃ = U†DU = N [sinh φ]`,
//!    which makes `{M}` and `{N}` resolutions of the identity.
//! 3. Each family is peeled one operator per stage. The leading operator is
//!    written `Y diag(cos θ) W†` (singular value form). Its first angle is
//!    normalized to zero by moving the weight of the first direction from the
//!    remaining operators onto it, the rest of the family loses that direction,
//!    and the surviving columns are rescaled by `1/sin θ_i` so the reduced family
//!    is again a resolution of the identity.
//!
//! The transferred weight does not preserve the map by itself, so every stage
//! keeps it as `residue`; together with the per-stage `Y` (the residual gauge
//! of each operator) this makes the parameter set an exact description of the
//! source map.

use serde::Serialize;

use crate::decomposition::CanonicalDecomposition;
use crate::error::{Error, Result};
use crate::linalg::{diag, hermitian_eig, identity, real, thin_svd, CMatrix};
use crate::maps::DynamicalMap;
use crate::tolerance::{RESOLUTION, SIGN};

/// Common diagonal frame of `J` and `K` with hyperbolic angles.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicFrame {
    /// Columns are the common eigenvectors; `U†JU` and `U†KU` are diagonal.
    pub u: CMatrix,
    /// Nonnegative, descending.
    pub phi: Vec<f64>,
    /// Off-diagonal Frobenius norm of `U†JU` and `U†KU`.
    pub offdiag_residual: (f64, f64),
    /// `max_i |j̃_ii − k̃_ii − 1|` together with `max_i |cosh²φ_i − sinh²φ_i − 1|`.
    pub hyperbolic_residual: f64,
    /// How far `cosh²φ`, `sinh²φ` are from the diagonals of `U†JU`, `U†KU`.
    pub diagonal_residual: f64,
}

impl HyperbolicFrame {
    pub fn cosh(&self) -> Vec<f64> {
        self.phi.iter().map(|p| p.cosh()).collect()
    }

    pub fn sinh(&self) -> Vec<f64> {
        self.phi.iter().map(|p| p.sinh()).collect()
    }
}

pub fn hyperbolic_frame(j: &CMatrix, k: &CMatrix) -> Result<HyperbolicFrame> {
    let n = j.nrows();
    if !j.is_square() || k.shape() != j.shape() {
        return Err(Error::DimensionMismatch(format!(
            "J is {}x{}, K is {}x{}",
            j.nrows(),
            j.ncols(),
            k.nrows(),
            k.ncols()
        )));
    }
    let j_eig = hermitian_eig(j)?;
    if j_eig.min_eigenvalue() < -SIGN {
        return Err(Error::NotPositive {
            min_eigenvalue: j_eig.min_eigenvalue(),
        });
    }
    let k_min = hermitian_eig(k)?.min_eigenvalue();
    if k_min < -SIGN {
        return Err(Error::NotPositive {
            min_eigenvalue: k_min,
        });
    }
    let residual = (j - k - identity(n)).norm();
    if residual > SIGN {
        return Err(Error::TraceConditionViolated { residual });
    }

    let u = j_eig.eigenvectors;
    let jt = u.adjoint() * j * &u;
    let kt = u.adjoint() * k * &u;
    // asinh of the K diagonal; acosh of the J diagonal loses half the digits near φ = 0.
    let phi: Vec<f64> = (0..n).map(|i| kt[(i, i)].re.max(0.0).sqrt().asinh()).collect();
    let offdiag = |m: &CMatrix| {
        let mut m = m.clone();
        m.fill_diagonal(real(0.0));
        m.norm()
    };
    let mut hyperbolic_residual: f64 = 0.0;
    let mut diagonal_residual: f64 = 0.0;
    for (i, p) in phi.iter().enumerate() {
        let (ch, sh) = (p.cosh(), p.sinh());
        hyperbolic_residual = hyperbolic_residual
            .max((jt[(i, i)].re - kt[(i, i)].re - 1.0).abs())
            .max((ch * ch - sh * sh - 1.0).abs());
        diagonal_residual = diagonal_residual
            .max((ch * ch - jt[(i, i)].re).abs())
            .max((sh * sh - kt[(i, i)].re).abs());
    }
    Ok(HyperbolicFrame {
        offdiag_residual: (offdiag(&jt), offdiag(&kt)),
        u,
        phi,
        hyperbolic_residual,
        diagonal_residual,
    })
}

/// `{M}` and `{N}` with `Σ M†M = I` and `Σ N†N = I` (on the support of `K`).
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryFamilies {
    /// `N × N` each.
    pub m_ops: Vec<CMatrix>,
    /// `N × s` each, one column per direction in `n_support`.
    pub n_ops: Vec<CMatrix>,
    /// Frame directions on which the negative operators act (`sinh φ_i > 0`).
    pub n_support: Vec<usize>,
    pub m_resolution_residual: f64,
    pub n_resolution_residual: f64,
}

fn resolution_residual(ops: &[CMatrix]) -> f64 {
    let Some(first) = ops.first() else {
        return 0.0;
    };
    let k = first.ncols();
    let sum = ops
        .iter()
        .fold(CMatrix::zeros(k, k), |acc, op| acc + op.adjoint() * op);
    (sum - identity(k)).norm()
}

pub fn extract_isometry_families(
    dec: &CanonicalDecomposition,
    frame: &HyperbolicFrame,
) -> Result<IsometryFamilies> {
    let n = dec.dim;
    let u = &frame.u;
    let inv_cosh: Vec<f64> = frame.cosh().iter().map(|c| 1.0 / c).collect();
    let m_ops: Vec<CMatrix> = dec
        .positive_ops
        .iter()
        .map(|c| u.adjoint() * c * u * diag(&inv_cosh))
        .collect();

    let rotated: Vec<CMatrix> = dec
        .negative_ops
        .iter()
        .map(|d| u.adjoint() * d * u)
        .collect();
    let sinh = frame.sinh();
    let mut n_support = Vec::new();
    let mut degenerate = Vec::new();
    if !rotated.is_empty() {
        for i in 0..n {
            let weight: f64 = rotated
                .iter()
                .map(|d| d.column(i).norm_squared())
                .sum::<f64>()
                .sqrt();
            if weight <= SIGN {
                continue;
            }
            if sinh[i] <= SIGN {
                degenerate.push(i);
            } else {
                n_support.push(i);
            }
        }
    }
    if !degenerate.is_empty() {
        return Err(Error::SinhDegenerate {
            directions: degenerate,
        });
    }
    let n_ops: Vec<CMatrix> = rotated
        .iter()
        .map(|d| {
            CMatrix::from_fn(n, n_support.len(), |r, col| {
                let i = n_support[col];
                d[(r, i)] / sinh[i]
            })
        })
        .collect();

    Ok(IsometryFamilies {
        m_resolution_residual: resolution_residual(&m_ops),
        n_resolution_residual: resolution_residual(&n_ops),
        m_ops,
        n_ops,
        n_support,
    })
}

/// One peeling step on a resolution of the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReduction {
    pub record: StageRecord,
    /// `rows × k'` operators with `Σ op†op = I_{k'}`.
    pub reduced_ops: Vec<CMatrix>,
    /// `‖Σ op†op` after the weight transfer − before‖ in the `W` frame.
    pub transfer_drift: f64,
}

/// Everything a stage needs to undo itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    /// `θ_2 … θ_k`, each in `[0, π/2]`, ascending.
    pub theta: Vec<f64>,
    /// `cos θ_1` before it was normalized to one.
    pub cos_theta1: f64,
    /// Indices (into `0..k`) of the directions carried into the next stage.
    pub kept: Vec<usize>,
    pub ops_in: usize,
    pub rows: usize,
    pub cols: usize,
    #[serde(skip)]
    pub w: CMatrix,
    /// `k × k'` isometry: the kept columns of `W`.
    #[serde(skip)]
    pub v: CMatrix,
    /// `Y` in `ops[0] = Y diag(cos θ) W†`.
    #[serde(skip)]
    pub residual_unitary: CMatrix,
    /// `diag(1, cos θ_2, …, cos θ_k)`.
    #[serde(skip)]
    pub leading_form: CMatrix,
    /// For each remaining operator, the columns of `op W` not carried forward.
    #[serde(skip)]
    pub residue: Vec<CMatrix>,
}

impl StageRecord {
    /// Angles that count as free parameters (`sin θ_i > 0`).
    pub fn free_angles(&self) -> usize {
        self.kept.len()
    }

    /// Rebuild the stage input from the reduced family.
    pub fn expand(&self, reduced: &[CMatrix]) -> Vec<CMatrix> {
        let mut cos = vec![self.cos_theta1];
        cos.extend(self.theta.iter().map(|t| t.cos()));
        let w_adj = self.w.adjoint();
        let mut out = Vec::with_capacity(self.ops_in);
        out.push(&self.residual_unitary * diag(&cos) * &w_adj);
        for (residue, red) in self.residue.iter().zip(reduced) {
            let mut op_w = residue.clone();
            for (col, &i) in self.kept.iter().enumerate() {
                let s = self.theta[i - 1].sin();
                op_w.set_column(i, &(red.column(col) * real(s)));
            }
            out.push(op_w * &w_adj);
        }
        out
    }
}

/// Peel the leading operator off a resolution of the identity.
///
/// `ops` are `rows × k` with `rows ≥ k` and `Σ op†op = I_k`.
pub fn reduce_stage(ops: &[CMatrix], stage: usize) -> Result<StageReduction> {
    let first = ops
        .first()
        .ok_or_else(|| Error::BadArguments("reduce_stage needs at least one operator".into()))?;
    let (rows, k) = first.shape();
    if k == 0 || rows < k {
        return Err(Error::DimensionMismatch(format!(
            "stage operators must be rows × k with rows ≥ k ≥ 1, got {rows}x{k}"
        )));
    }
    if let Some(bad) = ops.iter().find(|op| op.shape() != (rows, k)) {
        return Err(Error::DimensionMismatch(format!(
            "operator {}x{} in a {rows}x{k} family",
            bad.nrows(),
            bad.ncols()
        )));
    }
    let residual = resolution_residual(ops);
    if residual > RESOLUTION {
        return Err(Error::NotResolution { residual });
    }

    let (y, sigma, w) = thin_svd(first)?;
    let cos: Vec<f64> = sigma.iter().map(|s| s.clamp(0.0, 1.0)).collect();
    if ops.len() == 1 && cos[0] * cos[0] < 1.0 - RESOLUTION {
        return Err(Error::InsufficientOperators {
            stage,
            cos2: cos[0] * cos[0],
        });
    }
    let theta: Vec<f64> = cos[1..].iter().map(|c| c.acos()).collect();
    let kept: Vec<usize> = (1..k).filter(|&i| theta[i - 1].sin() > SIGN).collect();

    let rest_w: Vec<CMatrix> = ops[1..].iter().map(|op| op * &w).collect();
    let mut residue = Vec::with_capacity(rest_w.len());
    let mut reduced_ops = Vec::with_capacity(rest_w.len());
    for op_w in &rest_w {
        let mut res = op_w.clone();
        let mut red = CMatrix::zeros(rows, kept.len());
        for (col, &i) in kept.iter().enumerate() {
            let s = theta[i - 1].sin();
            red.set_column(col, &(op_w.column(i) / real(s)));
            res.column_mut(i).fill(real(0.0));
        }
        residue.push(res);
        reduced_ops.push(red);
    }

    let mut leading_diag = vec![1.0];
    leading_diag.extend(theta.iter().map(|t| t.cos()));
    let leading_form = diag(&leading_diag);

    // Gram sums before and after moving the first direction onto ops[0].
    let first_w = first * &w;
    let before = rest_w
        .iter()
        .fold(first_w.adjoint() * &first_w, |acc, m| acc + m.adjoint() * m);
    let leading_op = &y * &leading_form;
    let after = rest_w.iter().fold(leading_op.adjoint() * &leading_op, |acc, m| {
        let mut m = m.clone();
        m.column_mut(0).fill(real(0.0));
        acc + m.adjoint() * &m
    });
    let transfer_drift = (after - &before - diag_first_gap(&before, k)).norm();

    let v = CMatrix::from_fn(k, kept.len(), |r, col| w[(r, kept[col])]);
    Ok(StageReduction {
        record: StageRecord {
            theta,
            cos_theta1: cos[0],
            kept,
            ops_in: ops.len(),
            rows,
            cols: k,
            w,
            v,
            residual_unitary: y,
            leading_form,
            residue,
        },
        reduced_ops,
        transfer_drift,
    })
}

/// The transfer sets the (0,0) Gram entry to exactly one and clears the
/// first row/column of the remainder; any gap between `before` and that target
/// comes from the input's own resolution error, not from the transfer.
fn diag_first_gap(before: &CMatrix, k: usize) -> CMatrix {
    let mut gap = CMatrix::zeros(k, k);
    gap[(0, 0)] = real(1.0) - before[(0, 0)];
    for j in 1..k {
        gap[(0, j)] = -before[(0, j)];
        gap[(j, 0)] = -before[(j, 0)];
    }
    gap
}

/// All stages for one family, plus the intermediate resolution residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReduction {
    pub stages: Vec<StageRecord>,
    /// Resolution residual of the family entering each stage and of the final remainder.
    pub resolution_residuals: Vec<f64>,
    pub transfer_drifts: Vec<f64>,
}

pub fn reduce_family(ops: &[CMatrix]) -> Result<FamilyReduction> {
    let mut stages = Vec::new();
    let mut residuals = Vec::new();
    let mut drifts = Vec::new();
    let mut current = ops.to_vec();
    while !current.is_empty() && current[0].ncols() > 0 {
        residuals.push(resolution_residual(&current));
        let step = reduce_stage(&current, stages.len() + 1)?;
        drifts.push(step.transfer_drift);
        stages.push(step.record);
        current = step.reduced_ops;
    }
    if !current.is_empty() && current[0].ncols() > 0 {
        residuals.push(resolution_residual(&current));
    }
    Ok(FamilyReduction {
        stages,
        resolution_residuals: residuals,
        transfer_drifts: drifts,
    })
}

/// Inverse of [`reduce_family`].
pub fn rebuild_family(stages: &[StageRecord]) -> Vec<CMatrix> {
    let Some(last) = stages.last() else {
        return Vec::new();
    };
    let mut family: Vec<CMatrix> = (1..last.ops_in)
        .map(|_| CMatrix::zeros(last.rows, last.kept.len()))
        .collect();
    for stage in stages.iter().rev() {
        family = stage.expand(&family);
    }
    family
}

/// The full angle description of a trace-preserving map.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub dim: usize,
    pub m: usize,
    pub n: usize,
    pub phi: Vec<f64>,
    pub frame: CMatrix,
    pub m_stages: Vec<StageRecord>,
    pub n_stages: Vec<StageRecord>,
    pub n_support: Vec<usize>,
    /// Largest resolution residual seen after extraction and after every stage.
    pub max_resolution_residual: f64,
    pub hyperbolic_residual: f64,
}

impl ParameterSet {
    pub fn theta_stages_m(&self) -> Vec<Vec<f64>> {
        self.m_stages.iter().map(|s| s.theta.clone()).collect()
    }

    pub fn theta_stages_n(&self) -> Vec<Vec<f64>> {
        self.n_stages.iter().map(|s| s.theta.clone()).collect()
    }

    /// Per-operator gauges, positive family first.
    pub fn residual_unitaries(&self) -> Vec<&CMatrix> {
        self.m_stages
            .iter()
            .chain(&self.n_stages)
            .map(|s| &s.residual_unitary)
            .collect()
    }

    /// `(W, V)` per stage, positive family first.
    pub fn diagonalizers(&self) -> Vec<(&CMatrix, &CMatrix)> {
        self.m_stages
            .iter()
            .chain(&self.n_stages)
            .map(|s| (&s.w, &s.v))
            .collect()
    }

    /// The `N` hyperbolic angles plus every angle with `sin θ > 0`.
    pub fn free_parameter_count(&self) -> usize {
        self.dim
            + self
                .m_stages
                .iter()
                .chain(&self.n_stages)
                .map(StageRecord::free_angles)
                .sum::<usize>()
    }

    pub fn bound(&self) -> Result<i64> {
        parameter_count(self.dim, self.m, self.n)
    }

    /// `(C, D)` families rebuilt from angles, frames and recorded gauges.
    pub fn reconstruct_operators(&self) -> (Vec<CMatrix>, Vec<CMatrix>) {
        let u = &self.frame;
        let cosh: Vec<f64> = self.phi.iter().map(|p| p.cosh()).collect();
        let sinh: Vec<f64> = self.phi.iter().map(|p| p.sinh()).collect();
        let c_ops = rebuild_family(&self.m_stages)
            .into_iter()
            .map(|m| u * m * diag(&cosh) * u.adjoint())
            .collect();
        let d_ops = rebuild_family(&self.n_stages)
            .into_iter()
            .map(|nb| {
                let mut dt = CMatrix::zeros(self.dim, self.dim);
                for (col, &i) in self.n_support.iter().enumerate() {
                    dt.set_column(i, &(nb.column(col) * real(sinh[i])));
                }
                u * dt * u.adjoint()
            })
            .collect();
        (c_ops, d_ops)
    }

    pub fn reconstruct_map(&self) -> DynamicalMap {
        let (c_ops, d_ops) = self.reconstruct_operators();
        let ops: Vec<(f64, CMatrix)> = c_ops
            .into_iter()
            .map(|c| (1.0, c))
            .chain(d_ops.into_iter().map(|d| (-1.0, d)))
            .collect();
        DynamicalMap::from_kraus_action(&ops).expect("operators share one dimension")
    }
}

pub fn parameterize(dec: &CanonicalDecomposition) -> Result<ParameterSet> {
    let tc = dec.verify_trace_condition();
    if !tc.satisfied {
        return Err(Error::TraceConditionViolated {
            residual: tc.residual,
        });
    }
    let frame = hyperbolic_frame(&tc.j, &tc.k)?;
    let families = extract_isometry_families(dec, &frame)?;
    for residual in [families.m_resolution_residual, families.n_resolution_residual] {
        if residual > SIGN {
            return Err(Error::NotResolution { residual });
        }
    }
    let m_red = reduce_family(&families.m_ops)?;
    let n_red = reduce_family(&families.n_ops)?;
    let max_resolution_residual = m_red
        .resolution_residuals
        .iter()
        .chain(&n_red.resolution_residuals)
        .fold(
            families.m_resolution_residual.max(families.n_resolution_residual),
            |a, &b| a.max(b),
        );
    Ok(ParameterSet {
        dim: dec.dim,
        m: dec.m(),
        n: dec.n(),
        phi: frame.phi.clone(),
        frame: frame.u,
        m_stages: m_red.stages,
        n_stages: n_red.stages,
        n_support: families.n_support,
        max_resolution_residual,
        hyperbolic_residual: frame.hyperbolic_residual,
    })
}

/// `N² − [m(m−1) + n(n−1)]/2`.
///
/// Negative for large `m`, where the count no longer describes an actual
/// number of parameters.
pub fn parameter_count(n: usize, m: usize, neg: usize) -> Result<i64> {
    if neg > m || m > n * n {
        return Err(Error::BadArguments(format!(
            "need 0 ≤ n ≤ m ≤ N², got N={n}, m={m}, n={neg}"
        )));
    }
    let (n, m, neg) = (n as i64, m as i64, neg as i64);
    Ok(n * n - (m * (m - 1) + neg * (neg - 1)) / 2)
}
