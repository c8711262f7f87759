mod common;

use common::{beta_raw_moment, mean_se, monomial};
use proptest::prelude::*;
use rand::Rng;
use rwa_core::distributions::{DirichletSampler, GammaSampler, SIMPLEX_TOLERANCE};
use rwa_core::moments::MomentIndex;
use rwa_core::{dirichlet_mixed_moment, sample_gamma, DirichletParams, GammaParams, RngStream};

#[test]
fn simplex_invariants_hold_for_a_million_draws() {
    let mut params_rng = RngStream::new(100, 0);
    for case in 0..50u64 {
        let k = params_rng.random_range(2..=8);
        let alpha: Vec<f64> = (0..k).map(|_| 10f64.powf(params_rng.random_range(-1.3..1.0))).collect();
        let sampler = DirichletSampler::new(&DirichletParams::new(alpha.clone()).unwrap());
        let mut rng = RngStream::new(101, case);
        for _ in 0..20_000 {
            let x = sampler.sample(&mut rng).unwrap();
            assert!(x.coords().iter().all(|&c| c >= 0.0), "{alpha:?}");
            assert!(
                (x.coords().iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOLERANCE,
                "{alpha:?}"
            );
        }
    }
}

fn normalized_gammas(alpha: &[f64], rate: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let samplers: Vec<GammaSampler> = alpha
        .iter()
        .map(|&a| GammaSampler::new(&GammaParams::new(a, rate).unwrap()))
        .collect();
    let mut rng = RngStream::new(seed, 0);
    (0..count)
        .map(|_| {
            let g: Vec<f64> = samplers.iter().map(|s| s.sample(&mut rng)).collect();
            let total: f64 = g.iter().sum();
            g.into_iter().map(|x| x / total).collect()
        })
        .collect()
}

#[test]
fn normalized_gammas_have_dirichlet_moments() {
    let alpha = [0.5, 2.0, 3.5];
    let p = DirichletParams::new(alpha.to_vec()).unwrap();
    let draws = normalized_gammas(&alpha, 2.5, 200_000, 102);
    for s in MomentIndex::enumerate(3, 3) {
        let values: Vec<f64> = draws.iter().map(|x| monomial(x, &s)).collect();
        let (m, se) = mean_se(&values);
        let exact = dirichlet_mixed_moment(&p, &s).unwrap();
        assert!((m - exact).abs() <= 5.0 * se, "s = {s}: {m} vs {exact} (se {se})");
    }
}

#[test]
fn normalization_removes_the_rate() {
    let alpha = [0.5, 1.0, 4.0];
    let slow = normalized_gammas(&alpha, 1.0, 200_000, 103);
    let fast = normalized_gammas(&alpha, 7.0, 200_000, 104);
    for j in 0..3 {
        let (ma, sa) = mean_se(&slow.iter().map(|x| x[j]).collect::<Vec<_>>());
        let (mb, sb) = mean_se(&fast.iter().map(|x| x[j]).collect::<Vec<_>>());
        assert!((ma - mb).abs() <= 5.0 * sa.hypot(sb), "coordinate {j}");
    }
}

#[test]
fn free_function_sampler_matches_gamma_moments() {
    let p = GammaParams::new(3.0, 0.5).unwrap();
    let mut rng = RngStream::new(105, 0);
    let xs: Vec<f64> = (0..100_000).map(|_| sample_gamma(&p, &mut rng)).collect();
    let (m, se) = mean_se(&xs);
    assert!((m - p.mean()).abs() <= 5.0 * se);
}

fn alpha_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..20.0, 2..7)
}

proptest! {
    #[test]
    fn zero_exponents_give_exactly_one(alpha in alpha_vec()) {
        let p = DirichletParams::new(alpha.clone()).unwrap();
        prop_assert_eq!(dirichlet_mixed_moment(&p, &vec![0; alpha.len()]).unwrap(), 1.0);
    }

    #[test]
    fn marginal_moments_are_beta_moments(alpha in alpha_vec(), i in 0usize..6, s in 1u32..10) {
        let i = i % alpha.len();
        let p = DirichletParams::new(alpha.clone()).unwrap();
        let (a, b) = p.marginal(i);
        let mut idx = vec![0; alpha.len()];
        idx[i] = s;
        let got = dirichlet_mixed_moment(&p, &idx).unwrap();
        let expected = beta_raw_moment(a, b, s);
        prop_assert!((got - expected).abs() <= 1e-12 * expected, "{} vs {}", got, expected);
    }
}
