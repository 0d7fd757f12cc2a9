//! Seeded random map generators, registered by name.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{identity, psd_inv_sqrt, psd_sqrt, CMatrix};
use crate::maps::DynamicalMap;
use crate::random::{gaussian_matrix, haar_unitary};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOptions {
    pub dim: usize,
    pub seed: u64,
    /// Number of positive operators (`cp`, `family`); defaults to `dim`.
    pub rank: Option<usize>,
    /// Number of negative operators (`family`); defaults to 0.
    pub negative_rank: Option<usize>,
    /// Rejection budget for `ncp`.
    pub retries: usize,
    /// Block-positivity restarts used when screening `ncp` candidates.
    pub restarts: usize,
}

impl SamplerOptions {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            rank: None,
            negative_rank: None,
            retries: 100,
            restarts: 20,
        }
    }
}

pub trait MapSampler: Send + Sync {
    fn name(&self) -> &'static str;
    fn sample(&self, opts: &SamplerOptions) -> Result<DynamicalMap>;
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::BadArguments(format!("dimension must be at least 2, got {dim}")));
    }
    Ok(())
}

/// `{G_α S^{-1/2} J^{1/2}}` for Gaussian `G_α` and `S = Σ G†G`, so that
/// `Σ C†C = J`.
fn operators_with_gram<R: Rng>(dim: usize, count: usize, j: &CMatrix, rng: &mut R) -> Result<Vec<CMatrix>> {
    let gs: Vec<CMatrix> = (0..count).map(|_| gaussian_matrix(dim, dim, rng)).collect();
    let s = gs
        .iter()
        .fold(CMatrix::zeros(dim, dim), |acc, g| acc + g.adjoint() * g);
    let right = psd_inv_sqrt(&s)? * psd_sqrt(j)?;
    Ok(gs.into_iter().map(|g| g * &right).collect())
}

fn random_channel<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> Result<DynamicalMap> {
    let ops = operators_with_gram(dim, rank, &identity(dim), rng)?;
    let signed: Vec<(f64, CMatrix)> = ops.into_iter().map(|c| (1.0, c)).collect();
    DynamicalMap::from_kraus_action(&signed)
}

/// Completely positive, trace preserving, with `rank` Kraus operators.
pub struct CpSampler;

impl MapSampler for CpSampler {
    fn name(&self) -> &'static str {
        "cp"
    }

    fn sample(&self, opts: &SamplerOptions) -> Result<DynamicalMap> {
        check_dim(opts.dim)?;
        let rank = opts.rank.unwrap_or(opts.dim);
        if rank == 0 || rank > opts.dim * opts.dim {
            return Err(Error::BadRank {
                rank,
                dim: opts.dim * opts.dim,
            });
        }
        random_channel(opts.dim, rank, &mut ChaCha8Rng::seed_from_u64(opts.seed))
    }
}

/// Positive but not completely positive, trace preserving.
///
/// Candidates are `t · (ρ ↦ UρᵀU†) + (1 − t) · Λ_cp` with `t ∈ [0.7, 1]`,
/// accepted once classification reports CP ✗ and block positive ✓.
pub struct NcpSampler;

impl MapSampler for NcpSampler {
    fn name(&self) -> &'static str {
        "ncp"
    }

    fn sample(&self, opts: &SamplerOptions) -> Result<DynamicalMap> {
        check_dim(opts.dim)?;
        let n = opts.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let transpose = DynamicalMap::transpose(n);
        let mut last = String::from("retry budget is zero");
        for attempt in 0..opts.retries {
            let u = haar_unitary(n, &mut rng);
            let t: f64 = rng.random_range(0.7..=1.0);
            let channel = random_channel(n, n, &mut rng)?;
            let rotated = DynamicalMap::unitary(&u)?.a_form() * transpose.a_form();
            let a = rotated.scale(t) + channel.a_form().scale(1.0 - t);
            let candidate = DynamicalMap::from_a_form(a)?;
            let cls = candidate.classify(opts.restarts, opts.seed.wrapping_add(attempt as u64));
            if !cls.completely_positive && cls.block_positive {
                return Ok(candidate);
            }
            last = format!("candidate {attempt} classified as {}", cls.label());
        }
        Err(Error::SamplingExhausted {
            attempts: opts.retries,
            reason: last,
        })
    }
}

/// Hermiticity preserving and trace preserving, otherwise unconstrained:
/// a GUE dynamical matrix shifted by `I ⊗ (T − I)/N`.
pub struct HermPresSampler;

impl MapSampler for HermPresSampler {
    fn name(&self) -> &'static str {
        "hermpres"
    }

    fn sample(&self, opts: &SamplerOptions) -> Result<DynamicalMap> {
        check_dim(opts.dim)?;
        let n = opts.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let g = gaussian_matrix(n * n, n * n, &mut rng);
        let b = (&g + g.adjoint()).scale(0.5);
        let map = DynamicalMap::from_b_form(b.clone())?;
        let shift = (map.trace_matrix() - identity(n)).scale(1.0 / n as f64);
        DynamicalMap::from_b_form(b - identity(n).kronecker(&shift))
    }
}

/// Trace preserving with exactly `m` positive and `n` negative operators
/// (generically), built directly from the trace condition: random `D`,
/// `K = Σ D†D`, and `C` with `Σ C†C = I + K`.
pub struct FamilySampler;

impl MapSampler for FamilySampler {
    fn name(&self) -> &'static str {
        "family"
    }

    fn sample(&self, opts: &SamplerOptions) -> Result<DynamicalMap> {
        check_dim(opts.dim)?;
        let d = opts.dim;
        let m = opts.rank.unwrap_or(d);
        let n = opts.negative_rank.unwrap_or(0);
        if m == 0 || m + n > d * d {
            return Err(Error::BadArguments(format!(
                "family needs 1 ≤ m and m + n ≤ N², got N={d}, m={m}, n={n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let scale = if n > 0 { 1.0 / ((n * d) as f64).sqrt() } else { 0.0 };
        let ds: Vec<CMatrix> = (0..n)
            .map(|_| gaussian_matrix(d, d, &mut rng).scale(scale))
            .collect();
        let k = ds
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, op| acc + op.adjoint() * op);
        let cs = operators_with_gram(d, m, &(identity(d) + k), &mut rng)?;
        let signed: Vec<(f64, CMatrix)> = cs
            .into_iter()
            .map(|c| (1.0, c))
            .chain(ds.into_iter().map(|op| (-1.0, op)))
            .collect();
        DynamicalMap::from_kraus_action(&signed)
    }
}

pub struct SamplerRegistry {
    samplers: Vec<Box<dyn MapSampler>>,
}

impl Default for SamplerRegistry {
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(CpSampler));
        reg.register(Box::new(NcpSampler));
        reg.register(Box::new(HermPresSampler));
        reg.register(Box::new(FamilySampler));
        reg
    }
}

impl SamplerRegistry {
    pub fn empty() -> Self {
        Self {
            samplers: Vec::new(),
        }
    }

    /// Later registrations under an existing name replace the earlier one.
    pub fn register(&mut self, sampler: Box<dyn MapSampler>) {
        self.samplers.retain(|s| s.name() != sampler.name());
        self.samplers.push(sampler);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.samplers.iter().map(|s| s.name()).collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn MapSampler> {
        self.samplers
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                registry: "map sampler",
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn sample(&self, name: &str, opts: &SamplerOptions) -> Result<DynamicalMap> {
        self.get(name)?.sample(opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;

    #[test]
    fn cp_samples_are_channels() {
        let map = CpSampler.sample(&SamplerOptions::new(2, 1)).unwrap();
        let cls = map.classify(5, 0);
        assert!(cls.completely_positive && cls.trace_preserving);
        assert_eq!(map, CpSampler.sample(&SamplerOptions::new(2, 1)).unwrap());
    }

    #[test]
    fn ncp_samples_are_positive_but_not_cp() {
        let map = NcpSampler.sample(&SamplerOptions::new(2, 5)).unwrap();
        let cls = map.classify(20, 1);
        assert!(!cls.completely_positive);
        assert!(cls.block_positive);
        assert!(cls.trace_preserving);
    }

    #[test]
    fn ncp_with_no_budget_is_exhausted() {
        let mut opts = SamplerOptions::new(2, 5);
        opts.retries = 0;
        assert!(matches!(
            NcpSampler.sample(&opts),
            Err(Error::SamplingExhausted { attempts: 0, .. })
        ));
    }

    #[test]
    fn hermpres_samples_preserve_trace_and_hermiticity() {
        for seed in 0..5 {
            let map = HermPresSampler.sample(&SamplerOptions::new(3, seed)).unwrap();
            assert!(map.check_hermiticity_preserving().0);
            assert!(map.check_trace_preserving().0);
        }
    }

    #[test]
    fn family_sampler_hits_requested_signature() {
        let mut opts = SamplerOptions::new(2, 3);
        opts.rank = Some(3);
        opts.negative_rank = Some(1);
        let dec = decompose(&FamilySampler.sample(&opts).unwrap()).unwrap();
        assert_eq!((dec.m(), dec.n()), (3, 1));
        assert!(dec.verify_trace_condition().satisfied);
    }

    #[test]
    fn registry_lookup() {
        let reg = SamplerRegistry::default();
        assert_eq!(reg.names(), vec!["cp", "ncp", "hermpres", "family"]);
        assert!(matches!(
            reg.get("gaussian"),
            Err(Error::UnknownStrategy { .. })
        ));
    }
}
