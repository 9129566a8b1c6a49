//! Rewriting a system as a random homogeneous model.
//!
//! Two constructions live here:
//!
//! * block recoding of a single system with unequal ratios: words of length
//!   `r` are grouped by how many times each map occurs, so that all words
//!   in a class share one ratio;
//! * the keep and skip models of a random homogeneous model for a block
//!   length `s`, which carry the factors at levels divisible by `s` and
//!   the remaining ones.

use crate::error::{check_cap, Error, Result};
use crate::model::{separation, Environment, Ifs, Model, NonHomogSpec, OverlapVerdict, Word};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct RecodedModel<S> {
    pub model: Model<S>,
    /// Occurrence count of each map, per class, in model index order.
    pub classes: Vec<Vec<u32>>,
    /// Words of each class, in lexicographic order.
    pub words: Vec<Vec<Word>>,
}

/// All `n̄ ∈ ℕ^k` with `|n̄| = r`, largest first in lexicographic order.
pub fn compositions(k: usize, r: u32) -> Vec<Vec<u32>> {
    fn rec(k: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() + 1 == k {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in (0..=left).rev() {
            cur.push(c);
            rec(k, left - c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    rec(k, r, &mut Vec::with_capacity(k), &mut out);
    out
}

fn counts_of(word: &[usize], k: usize) -> Vec<u32> {
    let mut c = vec![0u32; k];
    for &j in word {
        c[j] += 1;
    }
    c
}

/// Groups the words of length `r` by letter counts. Each class becomes one
/// homogeneous system whose maps are the class's compositions, with equal
/// weights; the class is selected with probability `|class| · ∏ p_j^{n_j}`.
pub fn block_recode<S: Scalar>(spec: &NonHomogSpec<S>, r: usize) -> Result<RecodedModel<S>> {
    if r == 0 {
        return Err(Error::arg("block length must be positive"));
    }
    spec.validate()?;
    let k = spec.len();
    let total = (k as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    check_cap("words", total, crate::model::Limits::default().max_words)?;

    let classes = compositions(k, r as u32);
    let mut members: Vec<Vec<Word>> = vec![Vec::new(); classes.len()];
    let mut word = vec![0usize; r];
    loop {
        let c = counts_of(&word, k);
        let idx = classes
            .iter()
            .position(|x| *x == c)
            .expect("every count vector is a class");
        members[idx].push(Word::new(word.clone()));
        let mut i = r;
        loop {
            if i == 0 {
                return assemble(spec, classes, members);
            }
            i -= 1;
            word[i] += 1;
            if word[i] < k {
                break;
            }
            word[i] = 0;
        }
    }
}

fn assemble<S: Scalar>(
    spec: &NonHomogSpec<S>,
    classes: Vec<Vec<u32>>,
    words: Vec<Vec<Word>>,
) -> Result<RecodedModel<S>> {
    let mut systems = Vec::with_capacity(classes.len());
    let mut marginal = Vec::with_capacity(classes.len());
    for (c, ws) in classes.iter().zip(&words) {
        let ratio = c
            .iter()
            .zip(&spec.ratios)
            .fold(S::one(), |acc, (&n, r)| acc * r.powi(n));
        let weight = c
            .iter()
            .zip(&spec.probs)
            .fold(S::one(), |acc, (&n, p)| acc * p.powi(n));
        let count = ws.len() as i64;
        let translations = ws
            .iter()
            .map(|w| {
                let mut off = S::zero();
                let mut scale = S::one();
                for &j in w.letters() {
                    off = off + scale.clone() * spec.translations[j].clone();
                    scale = scale * spec.ratios[j].clone();
                }
                off
            })
            .collect();
        systems.push(Ifs {
            ratio,
            translations,
            probs: vec![S::ratio(1, count); ws.len()],
        });
        marginal.push(S::from_int(count) * weight);
    }
    let model = if S::EXACT {
        Model::new(systems, marginal)?
    } else {
        let total = marginal.iter().cloned().fold(S::zero(), |a, b| a + b);
        let marginal = marginal.into_iter().map(|q| q / total.clone()).collect();
        let systems = systems
            .into_iter()
            .map(|f| {
                let n = f.probs.len() as f64;
                Ifs {
                    probs: vec![S::from_f64(1.0 / n).unwrap(); f.probs.len()],
                    ..f
                }
            })
            .collect();
        Model::new(systems, marginal)?
    };
    Ok(RecodedModel {
        model,
        classes,
        words,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SdimBound {
    pub recoded: f64,
    pub bound: f64,
    pub original: f64,
}

impl SdimBound {
    pub fn holds(&self) -> bool {
        self.recoded >= self.bound - 1e-12
    }
}

/// Similarity dimension of the `r`-block recoding against the lower bound
/// `(1 - log((r+1)^k) / (r H(p))) · s(spec)`.
pub fn recode_sdim_bound<S: Scalar>(spec: &NonHomogSpec<S>, r: usize) -> Result<SdimBound> {
    let recoded = block_recode(spec, r)?.model.similarity_dimension();
    let k = spec.len() as f64;
    let h = -spec
        .probs
        .iter()
        .map(|p| p.to_f64())
        .map(|p| p * p.ln())
        .sum::<f64>();
    let original = spec.similarity_dimension();
    let bound = (1.0 - k * ((r + 1) as f64).ln() / (r as f64 * h)) * original;
    Ok(SdimBound {
        recoded,
        bound,
        original,
    })
}

/// `ī = (ī_1..ī_s)` as a lexicographic index into `I^s`.
fn tuple_index(tuple: &[usize], base: usize) -> usize {
    tuple.iter().fold(0, |acc, &i| acc * base + i)
}

fn tuples(base: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; s];
    loop {
        out.push(cur.clone());
        let mut i = s;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < base {
                break;
            }
            cur[i] = 0;
        }
    }
}

fn check_block<S: Scalar>(model: &Model<S>, s: usize) -> Result<usize> {
    if s < 2 {
        return Err(Error::arg("block length must be at least 2"));
    }
    let m = model.index_count();
    let count = (m as u128).checked_pow(s as u32).unwrap_or(u128::MAX);
    check_cap("block systems", count, model.limits().max_words)?;
    Ok(m)
}

fn product_marginal<S: Scalar>(model: &Model<S>, t: &[usize]) -> S {
    t.iter()
        .fold(S::one(), |acc, &i| acc * model.marginal()[i].clone())
}

/// The model carrying the factors at levels divisible by `s`. Its index set
/// is `I^s`; system `ī` has ratio `λ_{ī_1}⋯λ_{ī_s}`, translations
/// `λ_{ī_1}⋯λ_{ī_{s-1}} t_j^{(ī_s)}` and the weights of `ī_s`.
pub fn keep_model<S: Scalar>(model: &Model<S>, s: usize) -> Result<Model<S>> {
    let m = check_block(model, s)?;
    let mut systems = Vec::new();
    let mut marginal = Vec::new();
    for t in tuples(m, s) {
        let last = model.system(t[s - 1]);
        let inner = t[..s - 1]
            .iter()
            .fold(S::one(), |acc, &i| acc * model.system(i).ratio.clone());
        systems.push(Ifs {
            ratio: inner.clone() * last.ratio.clone(),
            translations: last
                .translations
                .iter()
                .map(|x| inner.clone() * x.clone())
                .collect(),
            probs: last.probs.clone(),
        });
        marginal.push(product_marginal(model, &t));
    }
    Ok(Model::new(systems, marginal)?.with_limits(model.limits()))
}

/// The model carrying the factors at levels not divisible by `s`. System
/// `ī` has ratio `λ_{ī_1}⋯λ_{ī_s}`; its maps are indexed by letter tuples
/// `(j_1..j_{s-1})`, with translation `Σ_ℓ λ_{ī_1}⋯λ_{ī_{ℓ-1}} t_{j_ℓ}^{(ī_ℓ)}`
/// and weight `∏_ℓ p_{j_ℓ}^{(ī_ℓ)}`.
pub fn skip_model<S: Scalar>(model: &Model<S>, s: usize) -> Result<Model<S>> {
    let m = check_block(model, s)?;
    let cap = model.limits().max_words;
    let mut systems = Vec::new();
    let mut marginal = Vec::new();
    for t in tuples(m, s) {
        let mut offs = vec![S::zero()];
        let mut wts = vec![S::one()];
        let mut scale = S::one();
        for &i in &t[..s - 1] {
            let f = model.system(i);
            check_cap("maps", offs.len() as u128 * f.len() as u128, cap)?;
            let mut no = Vec::with_capacity(offs.len() * f.len());
            let mut nw = Vec::with_capacity(offs.len() * f.len());
            for (o, w) in offs.iter().zip(&wts) {
                for (x, p) in f.translations.iter().zip(&f.probs) {
                    no.push(o.clone() + scale.clone() * x.clone());
                    nw.push(w.clone() * p.clone());
                }
            }
            offs = no;
            wts = nw;
            scale = scale * f.ratio.clone();
        }
        systems.push(Ifs {
            ratio: scale * model.system(t[s - 1]).ratio.clone(),
            translations: offs,
            probs: wts,
        });
        marginal.push(product_marginal(model, &t));
    }
    let built = if S::EXACT {
        Model::new(systems, marginal)
    } else {
        renormalized(systems, marginal)
    };
    Ok(built?.with_limits(model.limits()))
}

fn renormalized<S: Scalar>(systems: Vec<Ifs<S>>, marginal: Vec<S>) -> Result<Model<S>> {
    let norm = |v: Vec<S>| {
        let t = v.iter().cloned().fold(S::zero(), |a, b| a + b);
        v.into_iter().map(|x| x / t.clone()).collect::<Vec<S>>()
    };
    let systems = systems
        .into_iter()
        .map(|f| Ifs {
            probs: norm(f.probs),
            ..f
        })
        .collect();
    Model::new(systems, norm(marginal))
}

/// `F(ω)`: the first `blocks` blocks of length `s` of `ω`, each read as an
/// index into `I^s`.
pub fn block_environment<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    s: usize,
    blocks: usize,
) -> Result<Environment> {
    let symbols = model.realize(env, s * blocks)?;
    Ok(Environment::fixed(
        symbols
            .chunks(s)
            .map(|c| tuple_index(c, model.index_count()))
            .collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct DeltaComparison<S> {
    /// Separation of the skip model at level `ℓ`.
    pub skip_gap: S,
    /// Separation of the original model at level `sℓ`.
    pub full_gap: S,
    /// The skip model has a single word, so its separation is the
    /// convention value 0 and the comparison says nothing.
    pub vacuous: bool,
}

impl<S: Scalar> DeltaComparison<S> {
    pub fn holds(&self) -> bool {
        self.vacuous || self.skip_gap >= self.full_gap
    }
}

/// Checks that the skip model at level `ℓ` is at least as separated as the
/// original model at level `sℓ`.
pub fn delta_compare<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    s: usize,
    ell: usize,
) -> Result<DeltaComparison<S>> {
    let skip = skip_model(model, s)?;
    let benv = block_environment(model, env, s, ell)?;
    let lhs = separation(&skip, &benv, ell)?;
    let rhs = separation(model, env, s * ell)?;
    Ok(DeltaComparison {
        vacuous: lhs.verdict == OverlapVerdict::SingleWord,
        skip_gap: lhs.value(),
        full_gap: rhs.value(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{keep_skip_split, truncated_measure};
    use crate::scalar::Rational;

    fn r(p: i64, q: i64) -> Rational {
        Rational::ratio(p, q)
    }

    #[test]
    fn composition_order() {
        assert_eq!(compositions(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(
            compositions(3, 1),
            vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]
        );
        assert_eq!(compositions(3, 4).len(), 15);
    }

    #[test]
    fn two_block_recoding() {
        let spec = NonHomogSpec::new(
            vec![r(3, 5), r(1, 2)],
            vec![r(0, 1), r(1, 1)],
            vec![r(1, 2), r(1, 2)],
        )
        .unwrap();
        let rec = block_recode(&spec, 2).unwrap();
        let m = &rec.model;
        assert_eq!(m.index_count(), 3);
        assert_eq!(m.marginal(), &[r(1, 4), r(1, 2), r(1, 4)]);
        assert_eq!(m.system(0).ratio, r(9, 25));
        assert_eq!(m.system(1).ratio, r(3, 10));
        // class (1,1) holds 12 and 21: offsets 0 + 3/5·1 and 1 + 1/2·0
        assert_eq!(m.system(1).translations, vec![r(3, 5), r(1, 1)]);
        assert_eq!(m.system(1).probs, vec![r(1, 2), r(1, 2)]);
    }

    #[test]
    fn keep_and_skip_models_match_split() {
        let a = Ifs {
            ratio: r(1, 3),
            translations: vec![r(0, 1), r(1, 1)],
            probs: vec![r(1, 3), r(2, 3)],
        };
        let b = Ifs {
            ratio: r(2, 5),
            translations: vec![r(0, 1), r(1, 2), r(2, 1)],
            probs: vec![r(1, 2), r(1, 4), r(1, 4)],
        };
        let model = Model::new(vec![a, b], vec![r(1, 3), r(2, 3)]).unwrap();
        let env = Environment::fixed(vec![0, 1, 1, 0, 1, 0]);
        for s in [2usize, 3] {
            let blocks = 6 / s;
            let (keep, skip) = keep_skip_split(&model, &env, s, 6).unwrap();
            let benv = block_environment(&model, &env, s, blocks).unwrap();
            let k = truncated_measure(&keep_model(&model, s).unwrap(), &benv, blocks).unwrap();
            let sk = truncated_measure(&skip_model(&model, s).unwrap(), &benv, blocks).unwrap();
            assert!(keep.same_atoms(&k));
            assert!(skip.same_atoms(&sk));
        }
    }

    #[test]
    fn delta_single_word_is_vacuous() {
        // one map per system: skip model has one word
        let model = Model::uniform(r(1, 2), vec![r(0, 1)]).unwrap();
        let c = delta_compare(&model, &Environment::constant(0, 8), 2, 2).unwrap();
        assert!(c.vacuous && c.holds());
    }
}
