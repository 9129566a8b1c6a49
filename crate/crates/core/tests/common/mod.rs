#![allow(dead_code)]

use proptest::prelude::*;
use selfsim::measure::AtomMeasure;
use selfsim::model::{Ifs, Model, NonHomogSpec};
use selfsim::{Rational, Scalar};

pub fn r(p: i64, q: i64) -> Rational {
    Rational::ratio(p, q)
}

pub fn int(n: i64) -> Rational {
    Rational::from_int(n)
}

/// Positive integers normalised to a probability vector.
pub fn normalise(ws: &[i64]) -> Vec<Rational> {
    let total: i64 = ws.iter().sum();
    ws.iter().map(|&w| r(w, total)).collect()
}

const RATIOS: [(i64, i64); 7] = [(1, 2), (1, 3), (2, 5), (3, 5), (1, 4), (2, 3), (3, 7)];

pub fn ratio_strategy() -> impl Strategy<Value = Rational> {
    prop::sample::select(RATIOS.to_vec()).prop_map(|(p, q)| r(p, q))
}

pub fn ifs_strategy(max_maps: usize) -> impl Strategy<Value = Ifs<Rational>> {
    (ratio_strategy(), 1..=max_maps).prop_flat_map(|(ratio, m)| {
        (
            Just(ratio),
            prop::collection::vec(-3i64..=4, m),
            prop::collection::vec(1i64..=4, m),
        )
            .prop_map(|(ratio, ts, ws)| Ifs {
                ratio,
                translations: ts.into_iter().map(int).collect(),
                probs: normalise(&ws),
            })
    })
}

/// Rational models with up to `max_systems` systems of up to `max_maps`
/// maps each.
pub fn model_strategy(
    max_systems: usize,
    max_maps: usize,
) -> impl Strategy<Value = Model<Rational>> {
    prop::collection::vec(ifs_strategy(max_maps), 1..=max_systems).prop_flat_map(|systems| {
        let k = systems.len();
        (Just(systems), prop::collection::vec(1i64..=4, k))
            .prop_map(|(systems, q)| Model::new(systems, normalise(&q)).unwrap())
    })
}

pub fn spec_strategy(max_maps: usize) -> impl Strategy<Value = NonHomogSpec<Rational>> {
    (2..=max_maps).prop_flat_map(|k| {
        (
            prop::collection::vec(ratio_strategy(), k),
            prop::sample::subsequence((0i64..8).collect::<Vec<_>>(), k),
            prop::collection::vec(1i64..=4, k),
        )
            .prop_map(|(ratios, ts, ws)| {
                NonHomogSpec::new(ratios, ts.into_iter().map(int).collect(), normalise(&ws))
                    .unwrap()
            })
    })
}

/// Atom measures with dyadic-rational positions in `[-2, 2)`.
pub fn measure_strategy(max_atoms: usize) -> impl Strategy<Value = AtomMeasure<Rational>> {
    prop::collection::vec((-(1i64 << 15)..(1i64 << 15), 1i64..=9), 1..=max_atoms).prop_map(
        |atoms| {
            let total: i64 = atoms.iter().map(|a| a.1).sum();
            let atoms = atoms
                .into_iter()
                .map(|(x, w)| (Rational::dyadic(x, 14), r(w, total)))
                .collect();
            AtomMeasure::from_atoms(atoms, 0.0).unwrap()
        },
    )
}

/// Float atom measures with arbitrary positions in `[-2, 2]`.
pub fn float_measure_strategy(max_atoms: usize) -> impl Strategy<Value = AtomMeasure<f64>> {
    prop::collection::vec((-2.0f64..2.0, 0.01f64..1.0), 1..=max_atoms).prop_map(|atoms| {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let atoms = atoms.into_iter().map(|(x, w)| (x, w / total)).collect();
        AtomMeasure::from_atoms(atoms, 1e-12).unwrap()
    })
}
