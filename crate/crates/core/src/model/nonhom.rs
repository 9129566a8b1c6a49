use super::check_simplex;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A single IFS whose maps may have different contraction ratios.
///
/// Ratios are stored explicitly. When the family is parametrised as
/// `λ^{β_j}` the base and exponents are kept too so that the ratios can be
/// re-evaluated at another base.
#[derive(Debug, Clone, PartialEq)]
pub struct NonHomogSpec<S> {
    pub ratios: Vec<S>,
    pub translations: Vec<S>,
    pub probs: Vec<S>,
    pub base: Option<f64>,
    pub betas: Option<Vec<f64>>,
}

impl<S: Scalar> NonHomogSpec<S> {
    pub fn new(ratios: Vec<S>, translations: Vec<S>, probs: Vec<S>) -> Result<Self> {
        let spec = NonHomogSpec {
            ratios,
            translations,
            probs,
            base: None,
            betas: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `λ^{β_j}` with integer exponents, exact in either backend.
    pub fn from_integer_exponents(
        lambda: S,
        betas: &[u32],
        translations: Vec<S>,
        probs: Vec<S>,
    ) -> Result<Self> {
        let ratios = betas.iter().map(|&b| lambda.powi(b)).collect();
        let spec = NonHomogSpec {
            ratios,
            translations,
            probs,
            base: Some(lambda.to_f64()),
            betas: Some(betas.iter().map(|&b| b as f64).collect()),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.ratios.len();
        if k == 0 {
            return Err(Error::model("no maps"));
        }
        if self.translations.len() != k || self.probs.len() != k {
            return Err(Error::model(format!(
                "{} ratios, {} translations, {} weights",
                k,
                self.translations.len(),
                self.probs.len()
            )));
        }
        for r in &self.ratios {
            if !(*r > S::zero() && *r < S::one()) {
                return Err(Error::model(format!("ratio {r} outside (0,1)")));
            }
        }
        for a in 0..k {
            for b in a + 1..k {
                if self.translations[a].close(&self.translations[b], 0.0) {
                    return Err(Error::model(format!(
                        "translations {} and {} coincide",
                        a + 1,
                        b + 1
                    )));
                }
            }
        }
        if let Some(betas) = &self.betas {
            if betas.len() != k || betas.iter().any(|b| !(*b > 0.0)) {
                return Err(Error::model("exponents must be positive, one per map"));
            }
        }
        check_simplex(&self.probs, "weights", false)
    }

    /// Similarity dimension `Σ p log p / Σ p log r`.
    pub fn similarity_dimension(&self) -> f64 {
        let num: f64 = self
            .probs
            .iter()
            .map(|p| p.to_f64())
            .map(|p| p * p.ln())
            .sum();
        let den: f64 = self
            .probs
            .iter()
            .zip(&self.ratios)
            .map(|(p, r)| p.to_f64() * r.to_f64().ln())
            .sum();
        num / den
    }

    /// Shannon entropy of the weights in bits.
    pub fn prob_entropy(&self) -> f64 {
        super::entropy_bits(self.probs.iter().map(|p| p.to_f64()))
    }

    /// `Σ_{n<depth} r_{u_1}⋯r_{u_n} t_{u_{n+1}}` for one infinite-word prefix.
    fn partial_offset(&self, u: &[usize], depth: usize) -> S {
        let mut scale = S::one();
        let mut acc = S::zero();
        for &j in &u[..depth] {
            acc = acc + scale.clone() * self.translations[j].clone();
            scale = scale * self.ratios[j].clone();
        }
        acc
    }

    fn ratio_of(&self, u: &[usize]) -> S {
        u.iter()
            .fold(S::one(), |acc, &j| acc * self.ratios[j].clone())
    }

    fn check_word(&self, u: &[usize]) -> Result<()> {
        if let Some(&j) = u.iter().find(|&&j| j >= self.len()) {
            return Err(Error::arg(format!(
                "letter {} exceeds {} maps",
                j + 1,
                self.len()
            )));
        }
        Ok(())
    }
}

impl NonHomogSpec<f64> {
    /// `λ^{β_j}` with real exponents.
    pub fn from_exponents(
        lambda: f64,
        betas: Vec<f64>,
        translations: Vec<f64>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let ratios = betas.iter().map(|b| lambda.powf(*b)).collect();
        let spec = NonHomogSpec {
            ratios,
            translations,
            probs,
            base: Some(lambda),
            betas: Some(betas),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same exponents, another base.
    pub fn with_base(&self, lambda: f64) -> Result<Self> {
        let betas = self
            .betas
            .clone()
            .ok_or_else(|| Error::arg("spec has no exponents to re-evaluate"))?;
        Self::from_exponents(lambda, betas, self.translations.clone(), self.probs.clone())
    }
}

/// `ψ` truncated at `depth`: the difference of the first `depth` terms of
/// the coding-map series for the two infinite words.
pub fn psi_partial_sum<S: Scalar>(
    spec: &NonHomogSpec<S>,
    u: &[usize],
    v: &[usize],
    depth: usize,
) -> Result<S> {
    if u.len() < depth || v.len() < depth {
        return Err(Error::arg(format!("words shorter than depth {depth}")));
    }
    spec.check_word(u)?;
    spec.check_word(v)?;
    Ok(spec.partial_offset(u, depth) - spec.partial_offset(v, depth))
}

/// Distance between two same-level cylinder maps: 1 when their ratios
/// differ, otherwise the distance of their offsets.
pub fn pair_offset_diff_tilde<S: Scalar>(
    spec: &NonHomogSpec<S>,
    u: &[usize],
    v: &[usize],
) -> Result<S> {
    spec.check_word(u)?;
    spec.check_word(v)?;
    let (ru, rv) = (spec.ratio_of(u), spec.ratio_of(v));
    if !ru.close(&rv, 1e-15) {
        return Ok(S::one());
    }
    let ou = spec.partial_offset(u, u.len());
    let ov = spec.partial_offset(v, v.len());
    Ok((ou - ov).abs())
}
