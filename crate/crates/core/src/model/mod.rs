//! Finite families of homogeneous iterated function systems on the line and
//! the random selection of one system per level.

mod env;
mod nonhom;
mod separation;

pub use env::{Environment, Word};
pub use nonhom::{pair_offset_diff_tilde, psi_partial_sum, NonHomogSpec};
pub use separation::{merge_tolerance, separation, OverlapVerdict, Separation};

use crate::error::{check_cap, Error, Result};
use crate::scalar::{max_of, min_of, Scalar};

/// Size guards applied before any enumeration or convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_atoms: usize,
    pub max_words: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_atoms: 1 << 22,
            max_words: 1 << 24,
        }
    }
}

/// `x -> ratio * x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap<S> {
    pub ratio: S,
    pub offset: S,
}

impl<S: Scalar> AffineMap<S> {
    pub fn identity() -> Self {
        AffineMap {
            ratio: S::one(),
            offset: S::zero(),
        }
    }

    pub fn apply(&self, x: &S) -> S {
        self.ratio.clone() * x.clone() + self.offset.clone()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        AffineMap {
            ratio: self.ratio.clone() * inner.ratio.clone(),
            offset: self.ratio.clone() * inner.offset.clone() + self.offset.clone(),
        }
    }
}

/// One homogeneous system: every map shares `ratio`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ifs<S> {
    pub ratio: S,
    pub translations: Vec<S>,
    pub probs: Vec<S>,
}

impl<S: Scalar> Ifs<S> {
    pub fn len(&self) -> usize {
        self.translations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.translations.is_empty()
    }

    pub fn map(&self, j: usize) -> AffineMap<S> {
        AffineMap {
            ratio: self.ratio.clone(),
            offset: self.translations[j].clone(),
        }
    }

    /// Whether two maps have distinct translations.
    pub fn is_non_degenerate(&self) -> bool {
        self.translations
            .iter()
            .any(|t| !t.close(&self.translations[0], 0.0))
    }

    /// Shannon entropy of the weights, in bits.
    pub fn prob_entropy(&self) -> f64 {
        entropy_bits(self.probs.iter().map(|p| p.to_f64()))
    }
}

pub(crate) fn entropy_bits(ps: impl IntoIterator<Item = f64>) -> f64 {
    ps.into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<S> {
    ifs: Vec<Ifs<S>>,
    marginal: Vec<S>,
    radius: S,
    lambda_max: S,
    lambda_min: S,
    max_translation: S,
    limits: Limits,
}

impl<S: Scalar> Model<S> {
    /// Validates and assembles a model. `marginal` is the selection law on
    /// the index set; it must be strictly positive.
    pub fn new(ifs: Vec<Ifs<S>>, marginal: Vec<S>) -> Result<Self> {
        if ifs.is_empty() {
            return Err(Error::model("the index set is empty"));
        }
        if marginal.len() != ifs.len() {
            return Err(Error::model(format!(
                "marginal has {} entries for {} systems",
                marginal.len(),
                ifs.len()
            )));
        }
        check_simplex(&marginal, "marginal", false)?;
        for (i, f) in ifs.iter().enumerate() {
            if f.is_empty() {
                return Err(Error::model(format!("system {} has no maps", i + 1)));
            }
            if f.probs.len() != f.translations.len() {
                return Err(Error::model(format!(
                    "system {} has {} weights for {} maps",
                    i + 1,
                    f.probs.len(),
                    f.translations.len()
                )));
            }
            if !(f.ratio > S::zero() && f.ratio < S::one()) {
                return Err(Error::model(format!(
                    "system {} has ratio {} outside (0,1)",
                    i + 1,
                    f.ratio
                )));
            }
            check_simplex(&f.probs, "weights", false)
                .map_err(|e| Error::model(format!("system {}: {e}", i + 1)))?;
        }
        let lambda_max = max_of(ifs.iter().map(|f| f.ratio.clone())).unwrap();
        let lambda_min = min_of(ifs.iter().map(|f| f.ratio.clone())).unwrap();
        let max_translation = max_of(
            ifs.iter()
                .flat_map(|f| f.translations.iter().map(|t| t.abs())),
        )
        .unwrap();
        let r1 = max_translation.clone() / (S::one() - lambda_max.clone());
        let r2 = S::one() / (S::from_int(4) * lambda_min.clone());
        let radius = if r1 >= r2 { r1 } else { r2 };
        Ok(Model {
            ifs,
            marginal,
            radius,
            lambda_max,
            lambda_min,
            max_translation,
            limits: Limits::default(),
        })
    }

    /// A one-system model (deterministic selection).
    pub fn single(ratio: S, translations: Vec<S>, probs: Vec<S>) -> Result<Self> {
        Model::new(
            vec![Ifs {
                ratio,
                translations,
                probs,
            }],
            vec![S::one()],
        )
    }

    /// One-system model with uniform weights.
    pub fn uniform(ratio: S, translations: Vec<S>) -> Result<Self> {
        let k = translations.len() as i64;
        let probs = vec![S::ratio(1, k.max(1)); translations.len()];
        Model::single(ratio, translations, probs)
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn systems(&self) -> &[Ifs<S>] {
        &self.ifs
    }

    pub fn system(&self, i: usize) -> &Ifs<S> {
        &self.ifs[i]
    }

    pub fn index_count(&self) -> usize {
        self.ifs.len()
    }

    pub fn marginal(&self) -> &[S] {
        &self.marginal
    }

    pub fn marginal_f64(&self) -> Vec<f64> {
        self.marginal.iter().map(|q| q.to_f64()).collect()
    }

    /// Radius of the interval `[-R, R]` holding every attractor point, also
    /// at least `1/(4 λ_min)`.
    pub fn radius(&self) -> &S {
        &self.radius
    }

    pub fn lambda_max(&self) -> &S {
        &self.lambda_max
    }

    pub fn lambda_min(&self) -> &S {
        &self.lambda_min
    }

    pub fn max_translation(&self) -> &S {
        &self.max_translation
    }

    pub fn max_maps(&self) -> usize {
        self.ifs.iter().map(|f| f.len()).max().unwrap_or(0)
    }

    pub fn is_non_degenerate(&self) -> bool {
        self.ifs.iter().any(|f| f.is_non_degenerate())
    }

    /// Converts all parameters to another backend.
    pub fn convert<T: Scalar>(&self) -> Result<Model<T>> {
        let conv = |x: &S| -> Result<T> {
            if S::EXACT && T::EXACT {
                T::parse(&x.literal())
            } else {
                T::from_f64(x.to_f64())
            }
        };
        let ifs = self
            .ifs
            .iter()
            .map(|f| {
                Ok(Ifs {
                    ratio: conv(&f.ratio)?,
                    translations: f.translations.iter().map(conv).collect::<Result<_>>()?,
                    probs: f.probs.iter().map(conv).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let marginal = self.marginal.iter().map(conv).collect::<Result<_>>()?;
        Ok(Model::new_unchecked_sums(ifs, marginal)?.with_limits(self.limits))
    }

    /// Like `new` but tolerates the rounding that a float conversion of an
    /// exact simplex introduces.
    fn new_unchecked_sums(ifs: Vec<Ifs<S>>, marginal: Vec<S>) -> Result<Self> {
        if S::EXACT {
            return Model::new(ifs, marginal);
        }
        let renorm = |v: Vec<S>| -> Vec<S> {
            let total = v.iter().cloned().fold(S::zero(), |a, b| a + b);
            v.into_iter().map(|x| x / total.clone()).collect()
        };
        let ifs = ifs
            .into_iter()
            .map(|f| Ifs {
                probs: renorm(f.probs),
                ..f
            })
            .collect();
        Model::new(ifs, renorm(marginal))
    }

    /// Symbols `ω_1..ω_n`, extending the prefix deterministically.
    pub fn realize(&self, env: &Environment, n: usize) -> Result<Vec<usize>> {
        let q = self.marginal_f64();
        env.realize(n, &q)
    }

    /// `λ_{ω_1} ⋯ λ_{ω_n}`.
    pub fn ratio_product(&self, symbols: &[usize]) -> S {
        symbols
            .iter()
            .fold(S::one(), |acc, &i| acc * self.ifs[i].ratio.clone())
    }

    /// `f_{u_1} ∘ ⋯ ∘ f_{u_n}` for a word along `env`.
    pub fn compose_map(&self, env: &Environment, word: &Word) -> Result<AffineMap<S>> {
        let symbols = self.realize(env, word.len())?;
        self.compose_along(&symbols, word)
    }

    pub(crate) fn compose_along(&self, symbols: &[usize], word: &Word) -> Result<AffineMap<S>> {
        let mut acc = AffineMap::identity();
        for (level, (&i, &j)) in symbols.iter().zip(word.letters()).enumerate() {
            let f = &self.ifs[i];
            if j >= f.len() {
                return Err(Error::arg(format!(
                    "letter {} at level {} exceeds the {} maps of system {}",
                    j + 1,
                    level + 1,
                    f.len(),
                    i + 1
                )));
            }
            acc = acc.compose(&f.map(j));
        }
        Ok(acc)
    }

    /// Number of words of length `n` along the given symbols.
    pub fn word_count(&self, symbols: &[usize]) -> u128 {
        symbols.iter().fold(1u128, |acc, &i| {
            acc.saturating_mul(self.ifs[i].len() as u128)
        })
    }

    /// Offsets `f_u(0)` and weights `p_u` of every word of length
    /// `symbols.len()`, in lexicographic word order.
    pub fn enumerate_words(&self, symbols: &[usize]) -> Result<(Vec<S>, Vec<S>)> {
        check_cap("words", self.word_count(symbols), self.limits.max_words)?;
        let mut offsets = vec![S::zero()];
        let mut weights = vec![S::one()];
        let mut scale = S::one();
        for &i in symbols {
            let f = &self.ifs[i];
            let mut no = Vec::with_capacity(offsets.len() * f.len());
            let mut nw = Vec::with_capacity(offsets.len() * f.len());
            for (o, w) in offsets.iter().zip(&weights) {
                for (t, p) in f.translations.iter().zip(&f.probs) {
                    no.push(o.clone() + scale.clone() * t.clone());
                    nw.push(w.clone() * p.clone());
                }
            }
            offsets = no;
            weights = nw;
            scale = scale * f.ratio.clone();
        }
        Ok((offsets, weights))
    }

    /// `Σ_i q_i Σ_j p_ij log p_ij / Σ_i q_i log λ_i`.
    pub fn similarity_dimension(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (f, q) in self.ifs.iter().zip(&self.marginal) {
            let q = q.to_f64();
            num += q * f
                .probs
                .iter()
                .map(|p| p.to_f64())
                .filter(|&p| p > 0.0)
                .map(|p| p * p.ln())
                .sum::<f64>();
            den += q * f.ratio.to_f64().ln();
        }
        num / den
    }

    /// `Σ_i q_i H(p_i)` in bits.
    pub fn mean_prob_entropy(&self) -> f64 {
        self.ifs
            .iter()
            .zip(&self.marginal)
            .map(|(f, q)| q.to_f64() * f.prob_entropy())
            .sum()
    }

    /// `-Σ_i q_i log2 λ_i`.
    pub fn mean_lyapunov(&self) -> f64 {
        -self
            .ifs
            .iter()
            .zip(&self.marginal)
            .map(|(f, q)| q.to_f64() * f.ratio.to_f64().log2())
            .sum::<f64>()
    }

    /// Index of the most likely non-degenerate system, with its pair of
    /// most distant translations.
    pub fn designated_system(&self) -> Option<(usize, usize, usize)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, f) in self.ifs.iter().enumerate() {
            if !f.is_non_degenerate() {
                continue;
            }
            let q = self.marginal[i].to_f64();
            if best.is_none_or(|(_, bq)| q > bq) {
                best = Some((i, q));
            }
        }
        let (i, _) = best?;
        let f = &self.ifs[i];
        let lo = (0..f.len())
            .min_by(|&a, &b| f.translations[a].partial_cmp(&f.translations[b]).unwrap())
            .unwrap();
        let hi = (0..f.len())
            .max_by(|&a, &b| f.translations[a].partial_cmp(&f.translations[b]).unwrap())
            .unwrap();
        Some((i, lo.min(hi), lo.max(hi)))
    }
}

/// Entries positive and summing to one (exactly for rationals, within
/// `1e-12` for floats).
pub(crate) fn check_simplex<S: Scalar>(v: &[S], what: &str, allow_zero: bool) -> Result<()> {
    if v.is_empty() {
        return Err(Error::model(format!("{what} vector is empty")));
    }
    for x in v {
        let bad = if allow_zero {
            *x < S::zero()
        } else {
            *x <= S::zero()
        };
        if bad || !x.to_f64().is_finite() {
            return Err(Error::model(format!("{what} entry {x} is not positive")));
        }
    }
    let total = v.iter().cloned().fold(S::zero(), |a, b| a + b);
    if !total.close(&S::one(), 1e-12) {
        return Err(Error::model(format!("{what} sum to {total}, not 1")));
    }
    Ok(())
}
