//! Dense complex matrix kernels shared by the rest of the crate.
//!
//! Composite indices always flatten as `(outer, inner) -> outer * dim_inner + inner`,
//! so for a system ⊗ reservoir space the reservoir index varies fastest.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use crate::error::{Error, Factor, Result};
use crate::tolerance::{DEGENERACY_GAP, STRUCTURAL};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

const EIG_MAX_ITER: usize = 100_000;
const NULL_PIVOT: f64 = 1e-10;
const TIE: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| real(v)),
    ))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `‖M − M†‖_F`.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Relative structural threshold `tol · max(1, ‖M‖_F)`.
pub fn relative_threshold(m: &CMatrix, tol: f64) -> f64 {
    tol * m.norm().max(1.0)
}

/// Eigenvalues sorted descending with matching column eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenSystem {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    /// `Q Λ Q†`.
    pub fn reconstruct(&self) -> CMatrix {
        let q = &self.eigenvectors;
        q * diag(&self.eigenvalues) * q.adjoint()
    }
}

/// Hermitian eigendecomposition with a fixed gauge.
///
/// Eigenvalues are sorted descending. Vectors inside a degenerate cluster
/// (gap below `DEGENERACY_GAP`) are re-orthonormalized, and every vector is
/// rotated so its largest-magnitude entry (lowest index on ties) is real positive.
pub fn hermitian_eig(h: &CMatrix) -> Result<EigenSystem> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "hermitian_eig needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if !is_finite(h) {
        return Err(Error::NonFinite);
    }
    let residual = hermiticity_residual(h);
    if residual > relative_threshold(h, STRUCTURAL) {
        return Err(Error::NotHermitian { residual });
    }
    let n = h.nrows();
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors: Vec<CVector> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end - 1] - eigenvalues[end] < DEGENERACY_GAP {
            end += 1;
        }
        if end - start > 1 {
            for k in start..end {
                let mut v = vectors[k].clone();
                for _ in 0..2 {
                    for prev in &vectors[start..k] {
                        let proj = prev.dotc(&v);
                        v -= prev * proj;
                    }
                }
                let norm = v.norm();
                vectors[k] = v / real(norm);
            }
        }
        start = end;
    }
    for v in vectors.iter_mut() {
        fix_phase(v);
    }

    Ok(EigenSystem {
        eigenvalues,
        eigenvectors: CMatrix::from_columns(&vectors),
    })
}

/// Rotate `v` so its largest-magnitude entry is real and positive.
pub fn fix_phase(v: &mut CVector) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max - TIE * max.max(1.0))
        .unwrap_or(0);
    let phase = v[pivot] / real(v[pivot].norm());
    v.apply(|z| *z /= phase);
    v[pivot] = real(v[pivot].re);
}

/// Kronecker product; entry `((a,b),(c,d)) = A(a,c)·B(b,d)`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Trace out one factor of a `(dim_system · dim_reservoir)`-square matrix.
pub fn partial_trace(
    m: &CMatrix,
    dim_system: usize,
    dim_reservoir: usize,
    keep: Factor,
) -> Result<CMatrix> {
    let side = dim_system * dim_reservoir;
    if !m.is_square() || m.nrows() != side {
        return Err(Error::DimensionMismatch(format!(
            "partial_trace: {}x{} matrix is not square with side {dim_system}·{dim_reservoir}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(match keep {
        Factor::System => CMatrix::from_fn(dim_system, dim_system, |r, s| {
            (0..dim_reservoir)
                .map(|n| m[(r * dim_reservoir + n, s * dim_reservoir + n)])
                .sum()
        }),
        Factor::Reservoir => CMatrix::from_fn(dim_reservoir, dim_reservoir, |a, b| {
            (0..dim_system)
                .map(|r| m[(r * dim_reservoir + a, r * dim_reservoir + b)])
                .sum()
        }),
    })
}

/// A diagonal ±1 metric signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metric(Vec<i8>);

impl Metric {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::BadArguments(format!(
                "metric entries must be ±1, got {bad}"
            )));
        }
        Ok(Self(signs))
    }

    pub fn euclidean(dim: usize) -> Self {
        Self(vec![1; dim])
    }

    /// `positive` copies of +1 followed by `negative` copies of −1.
    pub fn split(positive: usize, negative: usize) -> Self {
        let mut signs = vec![1; positive];
        signs.extend(std::iter::repeat_n(-1, negative));
        Self(signs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn sign(&self, i: usize) -> f64 {
        f64::from(self.0[i])
    }

    pub fn is_definite(&self) -> bool {
        self.0.iter().all(|&s| s == 1)
    }

    /// Metric of `H_S ⊗ H_R` when only the second factor carries this signature.
    pub fn lift_to_system(&self, dim_system: usize) -> Self {
        let mut signs = Vec::with_capacity(dim_system * self.len());
        for _ in 0..dim_system {
            signs.extend_from_slice(&self.0);
        }
        Self(signs)
    }

    pub fn to_matrix(&self) -> CMatrix {
        let values: Vec<f64> = self.0.iter().map(|&s| f64::from(s)).collect();
        diag(&values)
    }

    fn inner(&self, u: &CVector, v: &CVector) -> C64 {
        u.iter()
            .zip(v.iter())
            .zip(self.0.iter())
            .map(|((a, b), &s)| a.conj() * b * f64::from(s))
            .sum()
    }
}

/// `‖V†ηV − η‖_F`.
pub fn metric_residual(v: &CMatrix, metric: &Metric) -> f64 {
    let eta = metric.to_matrix();
    (v.adjoint() * &eta * v - eta).norm()
}

/// `‖V†V − I‖_F`.
pub fn unitarity_residual(v: &CMatrix) -> f64 {
    (v.adjoint() * v - identity(v.ncols())).norm()
}

/// Extend orthonormal columns to a `dim × dim` unitary; the inputs become the
/// leading columns.
pub fn unitary_completion(cols: &[CVector], dim: usize) -> Result<CMatrix> {
    let slotted: Vec<(usize, CVector)> = cols.iter().cloned().enumerate().collect();
    complete(&slotted, &Metric::euclidean(dim))
}

/// Extend pseudo-orthonormal columns to `V` with `V†ηV = η`. Each input sits
/// at its designated column slot and must have self-product equal to the
/// metric sign of that slot.
pub fn pseudo_orthonormal_completion(
    cols: &[(usize, CVector)],
    metric: &Metric,
) -> Result<CMatrix> {
    complete(cols, metric)
}

fn complete(cols: &[(usize, CVector)], metric: &Metric) -> Result<CMatrix> {
    let dim = metric.len();
    let definite = metric.is_definite();
    if cols.len() > dim {
        return Err(Error::DimensionMismatch(format!(
            "{} columns cannot be completed in dimension {dim}",
            cols.len()
        )));
    }
    let mut taken = vec![false; dim];
    for (slot, v) in cols {
        if *slot >= dim || taken[*slot] {
            return Err(Error::DimensionMismatch(format!(
                "column slot {slot} is out of range or repeated"
            )));
        }
        if v.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} in dimension {dim}",
                v.len()
            )));
        }
        taken[*slot] = true;
    }

    // Gram check against the assigned slot signatures.
    let scale = cols
        .iter()
        .map(|(_, v)| v.norm_squared())
        .fold(1.0, f64::max);
    let mut gram_residual = 0.0;
    for (i, (si, vi)) in cols.iter().enumerate() {
        for (j, (_, vj)) in cols.iter().enumerate() {
            let target = if i == j { metric.sign(*si) } else { 0.0 };
            gram_residual += (metric.inner(vi, vj) - real(target)).norm_sqr();
        }
    }
    let gram_residual = gram_residual.sqrt();
    if gram_residual > STRUCTURAL * scale {
        return Err(if definite {
            Error::NotOrthonormal {
                residual: gram_residual,
            }
        } else {
            Error::NotPseudoOrthonormal {
                residual: gram_residual,
            }
        });
    }

    let mut free_plus: std::collections::VecDeque<usize> =
        (0..dim).filter(|&k| !taken[k] && metric.sign(k) > 0.0).collect();
    let mut free_minus: std::collections::VecDeque<usize> =
        (0..dim).filter(|&k| !taken[k] && metric.sign(k) < 0.0).collect();

    let mut basis: Vec<(CVector, f64)> = cols
        .iter()
        .map(|(slot, v)| (v.clone(), metric.sign(*slot)))
        .collect();
    let mut placed: Vec<(usize, CVector)> = cols.to_vec();

    let project = |v: &CVector, basis: &[(CVector, f64)]| -> CVector {
        let mut w = v.clone();
        for _ in 0..2 {
            for (u, s) in basis {
                let coeff = metric.inner(u, &w) * *s;
                w -= u * coeff;
            }
        }
        w
    };

    let mut active = vec![true; dim];
    while placed.len() < dim {
        let projected: Vec<Option<CVector>> = (0..dim)
            .map(|k| {
                active[k].then(|| {
                    let mut e = CVector::zeros(dim);
                    e[k] = real(1.0);
                    project(&e, &basis)
                })
            })
            .collect();

        let mut best: Option<(usize, f64)> = None;
        for (k, v) in projected.iter().enumerate() {
            if let Some(v) = v {
                let q = metric.inner(v, v).re;
                if best.is_none_or(|(_, b)| q.abs() > b.abs() + TIE) {
                    best = Some((k, q));
                }
            }
        }
        let (choice, q, k_used) = match best {
            Some((k, q)) if q.abs() >= NULL_PIVOT => (projected[k].clone().unwrap(), q, Some(k)),
            other => {
                let fallback = pair_fallback(&projected, metric);
                match fallback {
                    Some((v, q)) => (v, q, None),
                    None => {
                        return Err(Error::NullVectorEncountered {
                            value: other.map_or(0.0, |(_, q)| q.abs()),
                        })
                    }
                }
            }
        };
        if let Some(k) = k_used {
            active[k] = false;
        }
        let sign = q.signum();
        let slot = if sign > 0.0 {
            free_plus.pop_front()
        } else {
            free_minus.pop_front()
        }
        .ok_or(Error::NullVectorEncountered { value: q.abs() })?;
        let unit = choice / real(q.abs().sqrt());
        basis.push((unit.clone(), sign));
        placed.push((slot, unit));
    }

    placed.sort_by_key(|(slot, _)| *slot);
    let columns: Vec<CVector> = placed.into_iter().map(|(_, v)| v).collect();
    Ok(CMatrix::from_columns(&columns))
}

/// Combinations `v_i + v_j` and `v_i + i·v_j` of non-negligible candidates,
/// tried only when every single candidate is (nearly) null.
fn pair_fallback(projected: &[Option<CVector>], metric: &Metric) -> Option<(CVector, f64)> {
    let live: Vec<&CVector> = projected
        .iter()
        .flatten()
        .filter(|v| v.norm() > 1e-8)
        .collect();
    let mut best: Option<(CVector, f64)> = None;
    for i in 0..live.len() {
        for j in (i + 1)..live.len() {
            for phase in [real(1.0), c(0.0, 1.0)] {
                let v = live[i] + live[j] * phase;
                let q = metric.inner(&v, &v).re;
                if q.abs() >= NULL_PIVOT && best.as_ref().is_none_or(|(_, b)| q.abs() > b.abs()) {
                    best = Some((v, q));
                }
            }
        }
    }
    best
}

/// Thin singular value decomposition `A = U diag(σ) V†` with σ sorted descending.
///
/// For an `r × k` input with `r ≥ k`, `U` is `r × k` with orthonormal columns
/// and `V` is `k × k` unitary.
pub fn thin_svd(a: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let (rows, cols) = a.shape();
    if rows < cols {
        return Err(Error::DimensionMismatch(format!(
            "thin_svd expects rows ≥ cols, got {rows}x{cols}"
        )));
    }
    if cols == 0 {
        return Ok((CMatrix::zeros(rows, 0), Vec::new(), CMatrix::zeros(0, 0)));
    }
    let svd = SVD::try_new(a.clone(), true, true, f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::ConvergenceFailure)?;
    let u = svd.u.ok_or(Error::ConvergenceFailure)?;
    let v = svd.v_t.ok_or(Error::ConvergenceFailure)?.adjoint();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_cols: Vec<CVector> = order.iter().map(|&i| u.column(i).into_owned()).collect();
    let v_cols: Vec<CVector> = order.iter().map(|&i| v.column(i).into_owned()).collect();
    Ok((
        CMatrix::from_columns(&u_cols),
        sigma,
        CMatrix::from_columns(&v_cols),
    ))
}

/// Principal square root of a hermitian positive semidefinite matrix.
/// Slightly negative eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt(h: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(h)?;
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok(&eig.eigenvectors * diag(&roots) * eig.eigenvectors.adjoint())
}

/// Inverse principal square root of a hermitian positive definite matrix.
pub fn psd_inv_sqrt(h: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(h)?;
    if eig.min_eigenvalue() <= 0.0 {
        return Err(Error::NotPositive {
            min_eigenvalue: eig.min_eigenvalue(),
        });
    }
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| 1.0 / l.sqrt()).collect();
    Ok(&eig.eigenvectors * diag(&roots) * eig.eigenvectors.adjoint())
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}
