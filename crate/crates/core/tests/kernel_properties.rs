use driftbench::baselines::{greedy_restart_partition, oracle_forecast, OracleMode};
use driftbench::datagen::{
    gen_hard_shifts, gen_stream, total_variation, Dictionary, InputMode, Norm, StreamSpec,
};
use driftbench::kernel::{effective_dimension, log_det_capacity, KernelAwv, KernelFunction};
use driftbench::Subroutine;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian() -> KernelFunction {
    KernelFunction::Gaussian { bandwidth: 0.5 }
}

#[test]
fn regret_against_fixed_function_respects_capacity_bound() {
    let kernel = gaussian();
    let dict = Dictionary::sample(kernel, 6, 2, 11).unwrap();
    let coef = [1.0, -0.5, 0.8, -1.0, 0.3, 0.6];
    let gram = dict.gram();
    let f_norm_sq = dict.norm(&gram, &coef).powi(2);
    let noise = Normal::new(0.0, 0.5).unwrap();

    for (seed, lambda) in [(1u64, 0.5), (2, 1.0), (3, 5.0)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut learner = KernelAwv::new(kernel, lambda);
        let mut inputs = Vec::new();
        let (mut ours, mut comparator, mut y_max) = (0.0, 0.0, 0.0f64);
        for _ in 0..200 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let truth = dict.evaluate(&coef, &x);
            let y = truth + noise.sample(&mut rng);
            ours += (learner.predict(&x) - y).powi(2);
            comparator += (truth - y).powi(2);
            y_max = y_max.max(y.abs());
            learner.observe(&x, y);
            inputs.push(x);
        }
        let k = kernel.gram(&inputs);
        let bound = lambda * f_norm_sq + y_max * y_max * log_det_capacity(&k, lambda).unwrap();
        assert!(
            ours - comparator <= bound,
            "λ={lambda}: regret {} > {bound}",
            ours - comparator
        );
    }
}

#[test]
fn factor_storage_grows_quadratically() {
    let mut learner = KernelAwv::new(gaussian(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for t in 1..=120usize {
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        learner.observe(&x, 0.5);
        assert_eq!(learner.factor_entries(), t * (t + 1) / 2);
    }
}

#[test]
fn effective_dimension_tends_to_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for rank in [1usize, 3, 7] {
        let f = DMatrix::<f64>::from_fn(12, rank, |_, _| rng.random_range(-1.0..1.0));
        let k = &f * f.transpose();
        let values: Vec<f64> = [1e-6, 1e-3, 1.0, 1e3]
            .iter()
            .map(|&lambda| effective_dimension(&k, lambda).unwrap())
            .collect();
        assert!(
            values.windows(2).all(|w| w[1] <= w[0] + 1e-12),
            "{values:?}"
        );
        assert!(
            (values[0] - rank as f64).abs() < 1e-3,
            "rank {rank}: {}",
            values[0]
        );
    }
}

#[test]
fn rkhs_oracle_respects_restart_bound() {
    let (n, d, size) = (400, 2, 8);
    let kappa_sq = 1.0;
    for seed in 0..10u64 {
        let dict = Dictionary::sample(gaussian(), size, d, 100 + seed).unwrap();
        let starts = [1, 37, 90, 150, 151, 260, 333];
        let path = gen_hard_shifts(n, size, &starts, 200 + seed)
            .with_dictionary(dict)
            .unwrap();
        let spec = StreamSpec {
            n,
            d,
            sigma: 1.0,
            input_mode: InputMode::UniformCube,
            seed: 300 + seed,
        };
        let stream = gen_stream(&path, &spec).unwrap();
        let c_n = total_variation(&path, Norm::Rkhs);
        for m in [1usize, 3, 10] {
            let partition = greedy_restart_partition(&path, m, Norm::Rkhs);
            let preds =
                oracle_forecast(&stream, Some(&path), &partition, OracleMode::Kernel).unwrap();
            let err: f64 = stream
                .iter()
                .zip(&preds)
                .map(|(o, p)| (p - o.y_true.unwrap()).powi(2))
                .sum();
            let mf = m as f64;
            let bound =
                kappa_sq * n as f64 * (c_n / mf).powi(2) + 4.0 * kappa_sq * path.b * path.b * mf;
            assert!(err <= bound, "seed {seed}, m {m}: {err} > {bound}");
        }
    }
}
