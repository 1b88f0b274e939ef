use std::f64::consts::PI;

use phonon_core::boson_stats::{
    build_submatrix, empirical_distribution, enumerate_outcomes, exact_distribution, fock_dimension,
    outcome_probability, sample_outcomes, total_variation_distance, OccupationVector, StatsError,
};
use phonon_core::boson_stats::{fock_oracle_distribution, FockSource};
use phonon_core::boson_stats::{permanent_naive, permanent_ryser};
use phonon_core::ion_chain::CouplingMatrix;
use phonon_core::linalg::{CMatrix, C64};
use phonon_core::linear_optics::{beam_splitter_unitary, evolve_modes, haar_unitary, ModeUnitary};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn inputs(m: usize, n: usize) -> Vec<OccupationVector> {
    enumerate_outcomes(m, n)
}

#[test]
fn ryser_agrees_with_permutation_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for i in 0..500 {
        let a = random_matrix(1 + i % 8, &mut rng);
        let r = permanent_ryser(&a).unwrap();
        let s = permanent_naive(&a).unwrap();
        worst = worst.max((r - s).norm() / s.norm().max(1e-300));
    }
    assert!(worst < 1e-10, "{worst:e}");
}

#[test]
fn permanent_of_all_ones_is_factorial() {
    for n in 1..=10 {
        let ones = CMatrix::from_fn(n, |_, _| C64::new(1.0, 0.0));
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        assert!((permanent_ryser(&ones).unwrap().re - fact).abs() <= 1e-9 * fact);
    }
}

#[test]
fn permanent_guards() {
    assert!(matches!(permanent_ryser(&CMatrix::identity(31)), Err(StatsError::PermanentTooLarge { .. })));
    assert!(permanent_naive(&CMatrix::identity(10)).is_err());
    assert_eq!(permanent_ryser(&CMatrix::zeros(0)).unwrap(), C64::new(1.0, 0.0));
}

#[test]
fn permanent_equals_fock_oracle_over_haar_unitaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (m, n) in [(2, 2), (3, 2), (3, 3), (4, 2), (4, 3)] {
        for trial in 0..20 {
            let u = haar_unitary(m, &mut rng);
            let t = &inputs(m, n)[trial % inputs(m, n).len()];
            let exact = exact_distribution(&u, t).unwrap();
            let oracle = fock_oracle_distribution(FockSource::Unitary(&u), t).unwrap();
            assert!(exact.normalization_residual() < 1e-9);
            assert!(total_variation_distance(&exact, &oracle).unwrap() < 1e-8);
        }
    }
}

#[test]
fn hopping_generator_matches_its_exponential() {
    let k = CouplingMatrix::from_rates(3, vec![0.0, 3.0, 0.375, 3.0, 0.0, 3.0, 0.375, 3.0, 0.0], 1e6).unwrap();
    let t = OccupationVector::new(vec![1, 1, 1]);
    for time in [0.05, 0.3, 1.7] {
        let exact = exact_distribution(&evolve_modes(&k, time), &t).unwrap();
        let oracle = fock_oracle_distribution(FockSource::Generator { couplings: &k, time }, &t).unwrap();
        assert!(total_variation_distance(&exact, &oracle).unwrap() < 1e-10);
    }
}

#[test]
fn single_boson_reads_out_the_unitary_column() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = haar_unitary(5, &mut rng);
    for input in 0..5 {
        let mut occ = vec![0; 5];
        occ[input] = 1;
        let t = OccupationVector::new(occ);
        for (s, p) in exact_distribution(&u, &t).unwrap().entries() {
            let out = s.occupations().iter().position(|&x| x == 1).unwrap();
            assert!((p - u.matrix()[(out, input)].norm_sqr()).abs() < 1e-15);
        }
    }
}

#[test]
fn marginal_mean_occupation_is_linear() {
    // <n_j> = sum_i |U_ji|^2 t_i holds for any input Fock state.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u = haar_unitary(4, &mut rng);
    let t = OccupationVector::new(vec![2, 0, 1, 1]);
    let d = exact_distribution(&u, &t).unwrap();
    for j in 0..4 {
        let mean: f64 = d.entries().iter().map(|(s, p)| s.occupations()[j] as f64 * p).sum();
        let linear: f64 = (0..4).map(|i| u.matrix()[(j, i)].norm_sqr() * t.occupations()[i] as f64).sum();
        assert!((mean - linear).abs() < 1e-12);
    }
}

#[test]
fn relabelling_output_modes_permutes_outcomes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = haar_unitary(4, &mut rng);
    let perm = [2usize, 0, 3, 1];
    let p = ModeUnitary::new(CMatrix::from_fn(4, |i, j| C64::new(f64::from(u8::from(perm[j] == i)), 0.0))).unwrap();
    let pu = p.compose(&u);
    let t = OccupationVector::new(vec![1, 1, 0, 1]);
    for s in enumerate_outcomes(4, 3) {
        let mut moved = vec![0; 4];
        for (j, &c) in s.occupations().iter().enumerate() {
            moved[perm[j]] = c;
        }
        let a = outcome_probability(&u, &s, &t).unwrap();
        let b = outcome_probability(&pu, &OccupationVector::new(moved), &t).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn hong_ou_mandel_dip() {
    let bs = beam_splitter_unitary(0, PI / 4.0, 2).unwrap();
    let d = exact_distribution(&bs, &OccupationVector::new(vec![1, 1])).unwrap();
    let p: Vec<f64> = d.probabilities().collect();
    assert!((p[0] - 0.5).abs() < 1e-12);
    assert!(p[1] < 1e-12);
    assert!((p[2] - 0.5).abs() < 1e-12);
}

#[test]
fn outcome_enumeration_matches_dimension() {
    for m in 1..=5 {
        for n in 0..=5 {
            let outs = enumerate_outcomes(m, n);
            assert_eq!(outs.len() as u128, fock_dimension(m, n));
            assert!(outs.windows(2).all(|w| w[0] > w[1]));
            assert!(outs.iter().all(|s| s.total() == n));
        }
    }
    assert_eq!(fock_dimension(12, 12), 1_352_078);
}

#[test]
fn mismatched_shapes_are_rejected() {
    let u = ModeUnitary::identity(3);
    let t = OccupationVector::new(vec![1, 1, 0]);
    assert!(matches!(
        build_submatrix(&u, &OccupationVector::new(vec![1, 0, 0]), &t),
        Err(StatsError::TotalMismatch { .. })
    ));
    assert!(exact_distribution(&u, &OccupationVector::new(vec![1, 1])).is_err());
}

#[test]
fn samples_converge_to_the_hom_distribution() {
    let bs = beam_splitter_unitary(0, PI / 4.0, 2).unwrap();
    let d = exact_distribution(&bs, &OccupationVector::new(vec![1, 1])).unwrap();
    let samples = sample_outcomes(&d, 100_000, 17).unwrap();
    assert!(samples.iter().all(|s| s.occupations() != [1, 1]));
    let e = empirical_distribution(2, &samples).unwrap();
    assert!(total_variation_distance(&d, &e).unwrap() < 0.01);
    assert_eq!(samples, sample_outcomes(&d, 100_000, 17).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn exact_distributions_are_normalized(seed in any::<u64>(), m in 2usize..=5, n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_unitary(m, &mut rng);
        let all = inputs(m, n);
        let t = &all[(seed as usize) % all.len()];
        let d = exact_distribution(&u, t).unwrap();
        prop_assert!(d.normalization_residual() < 1e-9);
        prop_assert!(d.probabilities().all(|p| p >= 0.0));
    }

    #[test]
    fn permanent_is_invariant_under_transpose(seed in any::<u64>(), n in 1usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(n, &mut rng);
        let d = (permanent_ryser(&a).unwrap() - permanent_ryser(&a.transpose()).unwrap()).norm();
        prop_assert!(d <= 1e-12 * permanent_ryser(&a).unwrap().norm().max(1.0));
    }

    #[test]
    fn permanent_scales_with_a_row(seed in any::<u64>(), n in 1usize..=7, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(n, &mut rng);
        let z = C64::new(re, im);
        let mut b = a.clone();
        b.scale_row(0, z);
        let lhs = permanent_ryser(&b).unwrap();
        let rhs = permanent_ryser(&a).unwrap() * z;
        prop_assert!((lhs - rhs).norm() <= 1e-11 * rhs.norm().max(1.0));
    }

    #[test]
    fn tvd_is_a_metric_on_samples(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_unitary(3, &mut rng);
        let d = exact_distribution(&u, &OccupationVector::new(vec![1, 1, 0])).unwrap();
        let e = empirical_distribution(3, &sample_outcomes(&d, 200, seed).unwrap()).unwrap();
        let tvd = total_variation_distance(&d, &e).unwrap();
        prop_assert!((0.0..=1.0).contains(&tvd));
        prop_assert!(total_variation_distance(&d, &d).unwrap() == 0.0);
        prop_assert!((tvd - total_variation_distance(&e, &d).unwrap()).abs() < 1e-15);
    }
}
