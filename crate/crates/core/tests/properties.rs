use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stochmap_core::decomposition::decompose;
use stochmap_core::dilation::{pseudo_dilate, stinespring_dilate};
use stochmap_core::linalg::{
    hermitian_eig, identity, metric_residual, partial_trace, real, tensor, unitarity_residual,
    unitary_completion, CMatrix, CVector, Metric,
};
use stochmap_core::maps::reshuffle;
use stochmap_core::parameterization::{extract_isometry_families, hyperbolic_frame, parameterize, reduce_family};
use stochmap_core::random::{gaussian_matrix, haar_unitary};
use stochmap_core::{DensityMatrix, DynamicalMap, Factor, SamplerOptions, SamplerRegistry};

fn sample(kind: &str, dim: usize, seed: u64) -> DynamicalMap {
    SamplerRegistry::default()
        .sample(kind, &SamplerOptions::new(dim, seed))
        .unwrap()
}

fn family(dim: usize, m: usize, n: usize, seed: u64) -> DynamicalMap {
    let mut opts = SamplerOptions::new(dim, seed);
    opts.rank = Some(m);
    opts.negative_rank = Some(n);
    SamplerRegistry::default().sample("family", &opts).unwrap()
}

fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reshuffle_is_an_involution(n in 2usize..=4, seed in any::<u64>()) {
        let s = gaussian_matrix(n * n, n * n, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(reshuffle(&reshuffle(&s).unwrap()).unwrap(), s);
    }

    #[test]
    fn random_densities_are_states(dim in 1usize..=5, rank_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let rank = 1 + ((dim - 1) as f64 * rank_frac).round() as usize;
        let rho = DensityMatrix::random(dim, rank, seed).unwrap();
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        let eig = hermitian_eig(rho.matrix()).unwrap();
        prop_assert!(eig.min_eigenvalue() >= -1e-12);
        prop_assert_eq!(eig.eigenvalues.iter().filter(|&&l| l > 1e-12).count(), rank);
    }

    #[test]
    fn partial_trace_is_adjoint_to_tensoring(ds in 1usize..=3, dr in 1usize..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = gaussian_matrix(ds * dr, ds * dr, &mut rng);
        let x = gaussian_matrix(ds, ds, &mut rng);
        let y = gaussian_matrix(dr, dr, &mut rng);
        let lhs = (partial_trace(&m, ds, dr, Factor::System).unwrap() * &x).trace();
        let rhs = (&m * tensor(&x, &identity(dr))).trace();
        prop_assert!((lhs - rhs).norm() < 1e-10);
        let lhs = (partial_trace(&m, ds, dr, Factor::Reservoir).unwrap() * &y).trace();
        let rhs = (&m * tensor(&identity(ds), &y)).trace();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn unitary_completion_of_random_columns(dim in 1usize..=6, keep_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let u = haar_unitary(dim, &mut ChaCha8Rng::seed_from_u64(seed));
        let keep = (dim as f64 * keep_frac) as usize;
        let cols: Vec<CVector> = (0..keep).map(|j| u.column(j).into_owned()).collect();
        let v = unitary_completion(&cols, dim).unwrap();
        prop_assert!(unitarity_residual(&v) <= 1e-10);
        for (j, col) in cols.iter().enumerate() {
            prop_assert!((v.column(j) - col).norm() < 1e-12);
        }
    }

    #[test]
    fn hermiticity_preserving_maps_round_trip(n in 2usize..=4, seed in any::<u64>()) {
        let map = sample("hermpres", n, seed);
        let dec = decompose(&map).unwrap();
        prop_assert!(rel(dec.reconstruct().b_form(), map.b_form()) <= 1e-10);
        prop_assert!(dec.verify_trace_condition().residual <= 1e-10);
    }

    #[test]
    fn choi_matrix_is_the_image_of_the_maximally_entangled_projector(n in 2usize..=3, seed in any::<u64>()) {
        let map = sample("hermpres", n, seed);
        let mut phi = CVector::zeros(n * n);
        for i in 0..n {
            phi[i * n + i] = real(1.0);
        }
        let image = map.apply_extended(&(&phi * phi.adjoint()), n).unwrap();
        prop_assert!((image - map.b_form()).norm() < 1e-10);
    }

    #[test]
    fn positive_maps_have_at_least_as_many_positive_operators(n in 2usize..=3, seed in 0u64..1_000) {
        let map = sample("cp", n, seed);
        let dec = decompose(&map).unwrap();
        prop_assert!(dec.m() >= dec.n());
    }

    #[test]
    fn unitary_mixing_within_an_eigenspace_leaves_the_map(seed in any::<u64>()) {
        // The transpose map's positive eigenspace is threefold degenerate.
        let map = DynamicalMap::transpose(2);
        let dec = decompose(&map).unwrap();
        let w = haar_unitary(dec.m(), &mut ChaCha8Rng::seed_from_u64(seed));
        let mixed: Vec<(f64, CMatrix)> = (0..dec.m())
            .map(|a| {
                let op = (0..dec.m()).fold(CMatrix::zeros(2, 2), |acc, b| acc + &dec.positive_ops[b] * w[(a, b)]);
                (1.0, op)
            })
            .chain(dec.negative_ops.iter().map(|d| (-1.0, d.clone())))
            .collect();
        let remixed = DynamicalMap::from_kraus_action(&mixed).unwrap();
        prop_assert!((remixed.a_form() - map.a_form()).norm() < 1e-10);
    }

    #[test]
    fn hyperbolic_frame_identity(n in 2usize..=3, seed in any::<u64>()) {
        let dec = decompose(&sample("hermpres", n, seed)).unwrap();
        let tc = dec.verify_trace_condition();
        let frame = hyperbolic_frame(&tc.j, &tc.k).unwrap();
        prop_assert!(frame.hyperbolic_residual <= 1e-9);
        prop_assert!(frame.diagonal_residual <= 1e-9);
    }

    #[test]
    fn every_stage_keeps_a_resolution_of_the_identity(n in 2usize..=3, seed in any::<u64>()) {
        let dec = decompose(&sample("hermpres", n, seed)).unwrap();
        let tc = dec.verify_trace_condition();
        let frame = hyperbolic_frame(&tc.j, &tc.k).unwrap();
        let fam = extract_isometry_families(&dec, &frame).unwrap();
        prop_assert!(fam.m_resolution_residual <= 1e-9);
        prop_assert!(fam.n_resolution_residual <= 1e-9);
        for ops in [&fam.m_ops, &fam.n_ops] {
            let red = reduce_family(ops).unwrap();
            prop_assert!(red.resolution_residuals.iter().all(|&r| r <= 1e-8));
            prop_assert!(red.transfer_drifts.iter().all(|&d| d <= 1e-12));
        }
    }

    #[test]
    fn parameter_sets_reproduce_their_maps(n in 2usize..=3, seed in any::<u64>()) {
        for map in [sample("hermpres", n, seed), sample("cp", n, seed)] {
            let p = parameterize(&decompose(&map).unwrap()).unwrap();
            prop_assert!(rel(p.reconstruct_map().b_form(), map.b_form()) <= 1e-8);
        }
    }

    #[test]
    fn parameter_count_within_bound_for_few_operators(n in 2usize..=3, m_frac in 0.0f64..1.0, seed in any::<u64>()) {
        // m + n ≤ N: at most as many operators as system dimensions.
        let m = 1 + ((n - 1) as f64 * m_frac) as usize;
        let neg = (n - m).min(m);
        let map = family(n, m, neg, seed);
        let dec = decompose(&map).unwrap();
        prop_assert_eq!((dec.m(), dec.n()), (m, neg));
        let p = parameterize(&dec).unwrap();
        prop_assert!(p.free_parameter_count() as i64 <= p.bound().unwrap());
    }

    #[test]
    fn stinespring_round_trip(n in 2usize..=3, rank_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let mut opts = SamplerOptions::new(n, seed);
        opts.rank = Some(1 + ((n * n - 1) as f64 * rank_frac) as usize);
        let map = SamplerRegistry::default().sample("cp", &opts).unwrap();
        let dil = stinespring_dilate(&decompose(&map).unwrap()).unwrap();
        prop_assert!(dil.isometry_residual() <= 1e-10);
        prop_assert!(dil.dim_reservoir() <= n * n);
        prop_assert!((dil.induced_map().b_form() - map.b_form()).norm() <= 1e-10);
    }

    #[test]
    fn pseudo_unitary_round_trip(n in 2usize..=3, seed in any::<u64>()) {
        let map = sample("hermpres", n, seed);
        let dec = decompose(&map).unwrap();
        prop_assume!(dec.n() > 0);
        let dil = pseudo_dilate(&dec).unwrap();
        prop_assert!(dil.isometry_residual() <= 1e-10);
        prop_assert!(metric_residual(dil.v(), dil.metric()) <= 1e-10);
        prop_assert!((dil.induced_map().b_form() - map.b_form()).norm() <= 1e-10);
        let rho = DensityMatrix::random(n, n, seed).unwrap();
        let direct = map.apply(&rho).unwrap();
        prop_assert!((dil.contract(&rho).unwrap() - direct).norm() <= 1e-10);
    }

    #[test]
    fn small_unitary_reservoirs_give_few_kraus_terms(d in 2usize..=3, dr in 1usize..=3, seed in any::<u64>()) {
        use stochmap_core::dilation::Dilation;
        use stochmap_core::ReservoirState;
        let v = haar_unitary(d * dr, &mut ChaCha8Rng::seed_from_u64(seed));
        let dil = Dilation::new(d, v, ReservoirState::pure(dr, 0).unwrap(), vec![]).unwrap();
        let induced = dil.induced_map();
        let cls = induced.classify(1, 0);
        prop_assert!(cls.completely_positive && cls.trace_preserving);
        prop_assert!(decompose(&induced).unwrap().m() <= dr);
    }
}

#[test]
fn full_rank_random_states_are_almost_always_definite() {
    let definite = (0..1000)
        .filter(|&seed| {
            let rho = DensityMatrix::random(3, 3, seed).unwrap();
            let min = hermitian_eig(rho.matrix()).unwrap().min_eigenvalue();
            assert!(min >= 0.0);
            min > 1e-12
        })
        .count();
    assert!(definite >= 990);
}

#[test]
fn pseudo_completion_respects_indefinite_metric() {
    let dec = decompose(&family(3, 5, 2, 11)).unwrap();
    let dil = pseudo_dilate(&dec).unwrap();
    assert_eq!(dil.metric(), &Metric::split(5, 2).lift_to_system(3));
    assert!(dil.isometry_residual() <= 1e-10);
}
