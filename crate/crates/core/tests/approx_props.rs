mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfsim::approx::{
    eta_decomposition, keep_skip_split, mixture_check, sample_measure, scale_index, tail_radius,
    truncated_measure, Sampler,
};
use selfsim::model::{Environment, Model};
use selfsim::{Rational, Scalar};

fn fixed_env(model: &Model<Rational>, seed: u64, len: usize) -> Environment {
    let symbols = model.realize(&Environment::random(seed), len).unwrap();
    Environment::fixed(symbols)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn keep_skip_convolution_is_exact(
        model in model_strategy(3, 2),
        seed in any::<u64>(),
        s in 2usize..=4,
        depth in 1usize..=10,
    ) {
        let env = Environment::random(seed);
        let (keep, skip) = keep_skip_split(&model, &env, s, depth).unwrap();
        let whole = truncated_measure(&model, &env, depth).unwrap();
        prop_assert!(keep.convolve(&skip, 1 << 22).unwrap().same_atoms(&whole));
        if depth < s {
            prop_assert_eq!(keep.len(), 1);
        }
    }

    #[test]
    fn decomposition_composes(model in model_strategy(2, 2), seed in any::<u64>(), n in 0u32..=4, d in 0usize..=5) {
        let env = Environment::random(seed);
        let dec = eta_decomposition(&model, &env, n).unwrap();
        prop_assume!(dec.scale_index + d <= 12);
        let tail = dec.tail.truncated(&model, d).unwrap();
        let direct = truncated_measure(&model, &env, dec.scale_index + d).unwrap();
        prop_assert!(dec.nu.convolve(&tail, 1 << 22).unwrap().same_atoms(&direct));
    }

    #[test]
    fn scale_index_brackets_the_scale(model in model_strategy(3, 2), seed in any::<u64>(), n in 0u32..=20) {
        let env = Environment::random(seed);
        let ell = scale_index(&model, &env, n).unwrap();
        let symbols = model.realize(&env, ell).unwrap();
        let two_r = int(2) * model.radius().clone();
        let target = Rational::dyadic(1, n);
        prop_assert!(two_r.clone() * model.ratio_product(&symbols) <= target);
        if ell > 0 {
            prop_assert!(two_r * model.ratio_product(&symbols[..ell - 1]) > target);
        }
    }

    #[test]
    fn mixture_identity_is_exact(spec in spec_strategy(3), r in 1usize..=3, n in 1usize..=3) {
        prop_assume!((spec.len() as u32).pow((r * n) as u32) <= 1 << 12);
        let m = mixture_check(&spec, r, n).unwrap();
        prop_assert_eq!(m.tv, 0.0);
        prop_assert!(m.direct.same_atoms(&m.mixture));
    }

    #[test]
    fn tail_radius_bounds_continuations(model in model_strategy(2, 3), seed in any::<u64>(), depth in 0usize..=8) {
        let env = fixed_env(&model, seed, depth + 30);
        let symbols = model.realize(&env, depth + 30).unwrap();
        let bound = tail_radius(&model, &env, depth).unwrap().to_f64();
        let fm: Model<f64> = model.convert().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            let mut scale: f64 = fm.ratio_product(&symbols[..depth]);
            let mut tail = 0.0;
            for &i in &symbols[depth..] {
                let f = fm.system(i);
                tail += scale * f.translations[rng.gen_range(0..f.len())];
                scale *= f.ratio;
            }
            prop_assert!(tail.abs() <= bound * (1.0 + 1e-12));
        }
    }
}

#[test]
fn spec_examples() {
    let halves = Model::uniform(r(1, 2), vec![int(0), int(1)]).unwrap();
    let env = Environment::constant(0, 64);
    assert_eq!(scale_index(&halves, &env, 3).unwrap(), 5);
    assert_eq!(tail_radius(&halves, &env, 3).unwrap(), r(1, 4));
    let one = truncated_measure(&halves, &env, 1).unwrap();
    assert_eq!(one.positions(), &[int(0), int(1)]);
    assert_eq!(truncated_measure(&halves, &env, 0).unwrap().len(), 1);

    let (keep, skip) = keep_skip_split(&halves, &env, 2, 2).unwrap();
    assert_eq!(keep.positions(), &[int(0), r(1, 2)]);
    assert_eq!(skip.positions(), &[int(0), int(1)]);

    let golden: Model<f64> = Model::uniform((5f64.sqrt() - 1.0) / 2.0, vec![0.0, 1.0]).unwrap();
    let nu = truncated_measure(&golden, &Environment::constant(0, 8), 3).unwrap();
    assert!(nu.len() <= 7);
    assert!(nu.weights().iter().any(|&w| (w - 0.25).abs() < 1e-12));
}

#[test]
fn samples_follow_the_atom_cdf() {
    let halves: Model<f64> = Model::uniform(0.5, vec![0.0, 1.0]).unwrap();
    let env = Environment::constant(0, 64);
    let count = 20_000;
    let xs = sample_measure(&halves, &env, 10, count, 99).unwrap();
    let nu = truncated_measure(&halves, &env, 10).unwrap();
    let sampler = Sampler::new(&nu);
    let mut sorted = xs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Dvoretzky–Kiefer–Wolfowitz at 99%
    let eps = ((2.0f64 / 0.01).ln() / (2.0 * count as f64)).sqrt();
    let mut worst = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        if i + 1 < count && sorted[i + 1] == x {
            continue;
        }
        let emp = (i + 1) as f64 / count as f64;
        worst = worst.max((emp - sampler.mass(f64::NEG_INFINITY, x)).abs());
    }
    assert!(worst < eps, "{worst} >= {eps}");

    let mean = xs.iter().sum::<f64>() / count as f64;
    let sigma = (1.0f64 / 3.0).sqrt();
    assert!((mean - 1.0).abs() < 3.0 * sigma / (count as f64).sqrt() + 2f64.powi(-9));

    let degenerate: Model<f64> = Model::uniform(0.5, vec![1.0, 1.0]).unwrap();
    let ys = sample_measure(&degenerate, &env, 6, 100, 1).unwrap();
    assert!(ys.iter().all(|&y| y == ys[0]));
}

#[test]
fn sampling_ignores_thread_count() {
    let model: Model<f64> = Model::uniform(0.4, vec![0.0, 1.0, 1.5]).unwrap();
    let env = Environment::constant(0, 64);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_measure(&model, &env, 8, 10_000, 5).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, run(1));
}
