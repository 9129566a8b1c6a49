mod common;

use common::*;
use num_traits::Signed;
use proptest::prelude::*;
use selfsim::model::{separation, Environment, Model, OverlapVerdict, Word};
use selfsim::recoder::{
    block_recode, compositions, delta_compare, keep_model, recode_sdim_bound, skip_model,
};
use selfsim::{Rational, Scalar};

fn words(model: &Model<Rational>, symbols: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &i in symbols {
        let m = model.system(i).len();
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..m).map(move |j| {
                    let mut v = w.clone();
                    v.push(j);
                    v
                })
            })
            .collect();
    }
    out
}

/// Minimum over all pairs of distinct words, straight from the maps.
fn brute_separation(model: &Model<Rational>, env: &Environment, n: usize) -> Option<Rational> {
    let symbols = model.realize(env, n).unwrap();
    let ws = words(model, &symbols);
    let offs: Vec<Rational> = ws
        .iter()
        .map(|w| {
            model
                .compose_map(env, &Word::new(w.clone()))
                .unwrap()
                .apply(&int(0))
        })
        .collect();
    let mut best: Option<Rational> = None;
    for a in 0..offs.len() {
        for b in a + 1..offs.len() {
            let d = (&offs[a] - &offs[b]).abs();
            best = Some(match best {
                Some(x) if x <= d => x,
                _ => d,
            });
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn composition_splits_at_any_point(
        model in model_strategy(3, 3),
        seed in any::<u64>(),
        u in prop::collection::vec(0usize..3, 0..5),
        v in prop::collection::vec(0usize..3, 0..5),
    ) {
        let env = Environment::random(seed);
        let symbols = model.realize(&env, u.len() + v.len()).unwrap();
        let fits = |w: &[usize], syms: &[usize]| w.iter().zip(syms).all(|(&j, &i)| j < model.system(i).len());
        prop_assume!(fits(&u, &symbols) && fits(&v, &symbols[u.len()..]));
        let uv: Vec<usize> = u.iter().chain(&v).copied().collect();
        let whole = model.compose_map(&env, &Word::new(uv)).unwrap();
        let left = model.compose_map(&env, &Word::new(u.clone())).unwrap();
        let right = model.compose_map(&env.shift(u.len()), &Word::new(v)).unwrap();
        prop_assert_eq!(whole, left.compose(&right));
    }

    #[test]
    fn separation_matches_pairs(model in model_strategy(2, 3), seed in any::<u64>(), n in 1usize..=5) {
        let env = Environment::random(seed);
        let sep = separation(&model, &env, n).unwrap();
        prop_assume!(sep.words <= 1 << 10);
        match brute_separation(&model, &env, n) {
            None => prop_assert_eq!(sep.verdict, OverlapVerdict::SingleWord),
            Some(d) => {
                prop_assert_eq!(sep.value(), d.clone());
                prop_assert_eq!(sep.verdict == OverlapVerdict::Exact, d == int(0));
            }
        }
    }

    #[test]
    fn overlaps_persist(model in model_strategy(2, 2), seed in any::<u64>(), n in 1usize..=7) {
        let env = Environment::random(seed);
        let a = separation(&model, &env, n).unwrap();
        let b = separation(&model, &env, n + 1).unwrap();
        if a.verdict == OverlapVerdict::Exact {
            prop_assert_eq!(b.verdict, OverlapVerdict::Exact);
        }
        if a.verdict != OverlapVerdict::SingleWord {
            let slack = int(2) * model.radius().clone() * model.lambda_max().powi(n as u32);
            prop_assert!(b.value() <= a.value() + slack);
        }
    }

    #[test]
    fn skip_model_loses_one_level_in_s(model in model_strategy(3, 3), s in 2usize..=4) {
        let skip = skip_model(&model, s).unwrap();
        let expect = (1.0 - 1.0 / s as f64) * model.similarity_dimension();
        prop_assert!((skip.similarity_dimension() - expect).abs() < 1e-12);
    }

    #[test]
    fn keep_model_dimension_by_blocks(model in model_strategy(3, 3), s in 2usize..=4) {
        let keep = keep_model(&model, s).unwrap();
        // entropy from the last level of each block, contraction from all s
        let q: Vec<f64> = model.marginal().iter().map(|x| x.to_f64()).collect();
        let h: f64 = model
            .systems()
            .iter()
            .zip(&q)
            .map(|(f, q)| q * f.prob_entropy())
            .sum();
        let lyap: f64 = model.mean_lyapunov() * s as f64;
        let by_blocks = h / lyap;
        let entropy_ln = keep.mean_prob_entropy() * std::f64::consts::LN_2;
        let lyap_ln = keep.mean_lyapunov() * std::f64::consts::LN_2;
        prop_assert!((keep.similarity_dimension() - by_blocks).abs() < 1e-12);
        prop_assert!((entropy_ln / lyap_ln - by_blocks).abs() < 1e-12);
    }

    #[test]
    fn recoding_regroups_the_words(spec in spec_strategy(3), r in 1usize..=4) {
        let rec = block_recode(&spec, r).unwrap();
        let mut regrouped: Vec<(Rational, Rational)> = Vec::new();
        for (i, f) in rec.model.systems().iter().enumerate() {
            prop_assert!(rec.model.marginal()[i] > int(0));
            for t in &f.translations {
                regrouped.push((f.ratio.clone(), t.clone()));
            }
        }
        let k = spec.len();
        let mut direct: Vec<(Rational, Rational)> = Vec::new();
        for code in 0..k.pow(r as u32) {
            let (mut c, mut off, mut scale) = (code, int(0), int(1));
            let mut letters = vec![0; r];
            for l in (0..r).rev() {
                letters[l] = c % k;
                c /= k;
            }
            for j in letters {
                off += &scale * &spec.translations[j];
                scale *= &spec.ratios[j];
            }
            direct.push((scale, off));
        }
        regrouped.sort();
        direct.sort();
        prop_assert_eq!(regrouped, direct);
        prop_assert_eq!(rec.model.index_count(), compositions(k, r as u32).len());
    }

    #[test]
    fn recoded_dimension_bound(spec in spec_strategy(3), r in 1usize..=6) {
        let b = recode_sdim_bound(&spec, r).unwrap();
        prop_assert!(b.holds(), "{:?}", b);
    }

    #[test]
    fn skip_model_is_at_least_as_separated(
        model in model_strategy(2, 2),
        seed in any::<u64>(),
        s in 2usize..=3,
        ell in 1usize..=3,
    ) {
        let env = Environment::random(seed);
        let c = delta_compare(&model, &env, s, ell).unwrap();
        prop_assert!(c.holds());
    }
}

#[test]
fn single_system_dimension() {
    let cantor = Model::uniform(r(1, 3), vec![int(0), int(2)]).unwrap();
    assert!((cantor.similarity_dimension() - 2f64.ln() / 3f64.ln()).abs() < 1e-15);
    let env = Environment::constant(0, 8);
    let halves = Model::uniform(r(1, 2), vec![int(0), int(1)]).unwrap();
    for n in 1..6 {
        let sep = separation(&halves, &env, n).unwrap();
        assert_eq!(sep.value(), r(1, 2).powi(n as u32 - 1));
    }
}
