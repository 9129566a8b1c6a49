//! TOML files describing models and non-homogeneous systems.
//!
//! Numbers may be TOML integers, TOML floats, or strings such as `"3/5"` or
//! `"0.125"`. Strings and integers are read exactly in rational mode.
//!
//! ```toml
//! [ifs.1]
//! ratio = "1/3"
//! translations = [0, 2]
//! probs = ["1/2", "1/2"]
//!
//! [selection]
//! marginal = [1]
//! seed = 7
//! prefix = [1, 1]   # optional, 1-based system indices
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Environment, Ifs, Model, NonHomogSpec};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    pub fn is_float(&self) -> bool {
        matches!(self, Number::Float(_))
    }

    pub fn value<S: Scalar>(&self) -> Result<S> {
        match self {
            Number::Int(n) => Ok(S::from_int(*n)),
            Number::Float(x) => S::from_f64(*x),
            Number::Text(s) => S::parse(s),
        }
    }

    fn of<S: Scalar>(x: &S) -> Number {
        if S::EXACT {
            let lit = x.literal();
            match lit.parse::<i64>() {
                Ok(n) => Number::Int(n),
                Err(_) => Number::Text(lit),
            }
        } else {
            Number::Float(x.to_f64())
        }
    }
}

fn values<S: Scalar>(xs: &[Number]) -> Result<Vec<S>> {
    xs.iter().map(Number::value).collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IfsEntry {
    pub ratio: Number,
    pub translations: Vec<Number>,
    pub probs: Vec<Number>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    pub marginal: Vec<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prefix: Vec<usize>,
}

/// Parsed model file, before choosing an arithmetic.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub ifs: BTreeMap<String, IfsEntry>,
    pub selection: Selection,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.ordered()?;
        Ok(file)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Systems in index order; keys must be `1..=k`.
    fn ordered(&self) -> Result<Vec<&IfsEntry>> {
        let mut keyed = Vec::with_capacity(self.ifs.len());
        for (k, v) in &self.ifs {
            let i: usize = k
                .parse()
                .map_err(|_| Error::model(format!("system key {k:?} is not an index")))?;
            keyed.push((i, v));
        }
        keyed.sort_by_key(|(i, _)| *i);
        for (pos, (i, _)) in keyed.iter().enumerate() {
            if *i != pos + 1 {
                return Err(Error::model(
                    "systems must be numbered 1, 2, … without gaps",
                ));
            }
        }
        Ok(keyed.into_iter().map(|(_, v)| v).collect())
    }

    /// No float literal appears, so rational mode reads the file exactly.
    pub fn is_exact(&self) -> bool {
        let ifs_floats = self.ifs.values().any(|f| {
            f.ratio.is_float()
                || f.translations.iter().any(Number::is_float)
                || f.probs.iter().any(Number::is_float)
        });
        !ifs_floats && !self.selection.marginal.iter().any(Number::is_float)
    }

    pub fn model<S: Scalar>(&self) -> Result<Model<S>> {
        let ifs = self
            .ordered()?
            .into_iter()
            .map(|f| {
                Ok(Ifs {
                    ratio: f.ratio.value()?,
                    translations: values(&f.translations)?,
                    probs: values(&f.probs)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Model::new(ifs, values(&self.selection.marginal)?)
    }

    /// The environment from the prefix and seed, with `fallback_seed`
    /// used when the file has none. A one-system model needs neither.
    pub fn environment(&self, fallback_seed: Option<u64>) -> Result<Environment> {
        let k = self.ifs.len();
        let prefix = self
            .selection
            .prefix
            .iter()
            .map(|&i| {
                if i == 0 || i > k {
                    Err(Error::InvalidEnvironment(format!(
                        "prefix symbol {i} outside 1..={k}"
                    )))
                } else {
                    Ok(i - 1)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let seed = self.selection.seed.or(fallback_seed);
        if seed.is_none() && k == 1 {
            return Ok(Environment::with_prefix(prefix, Some(0)));
        }
        if seed.is_none() && prefix.is_empty() {
            return Err(Error::InvalidEnvironment(
                "no seed and no prefix: the environment is undetermined".into(),
            ));
        }
        Ok(Environment::with_prefix(prefix, seed))
    }

    /// File contents for a model and environment.
    pub fn from_model<S: Scalar>(model: &Model<S>, env: &Environment) -> Self {
        let ifs = model
            .systems()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                (
                    (i + 1).to_string(),
                    IfsEntry {
                        ratio: Number::of(&f.ratio),
                        translations: f.translations.iter().map(Number::of).collect(),
                        probs: f.probs.iter().map(Number::of).collect(),
                    },
                )
            })
            .collect();
        ModelFile {
            ifs,
            selection: Selection {
                marginal: model.marginal().iter().map(Number::of).collect(),
                seed: env.seed(),
                prefix: env.prefix().iter().map(|i| i + 1).collect(),
            },
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        // Numeric keys sort as strings; write them in index order instead.
        let mut out = String::new();
        for (n, f) in self.ordered()?.into_iter().enumerate() {
            let body = toml::to_string(f).map_err(|e| Error::Parse(e.to_string()))?;
            out.push_str(&format!("[ifs.{}]\n{}\n", n + 1, body));
        }
        let body = toml::to_string(&self.selection).map_err(|e| Error::Parse(e.to_string()))?;
        out.push_str(&format!("[selection]\n{body}"));
        Ok(out)
    }
}

/// Non-homogeneous system file: either `ratios`, or `lambda` with
/// exponents `betas`. `r` and `s` are optional block lengths.
///
/// ```toml
/// lambda = "1/2"
/// betas = [1, 2]
/// translations = [0, 1]
/// probs = ["1/2", "1/2"]
/// r = 2
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NonHomogFile {
    #[serde(default)]
    pub lambda: Option<Number>,
    #[serde(default)]
    pub betas: Option<Vec<Number>>,
    #[serde(default)]
    pub ratios: Option<Vec<Number>>,
    pub translations: Vec<Number>,
    pub probs: Vec<Number>,
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub s: Option<usize>,
}

impl NonHomogFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: NonHomogFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        match (&file.lambda, &file.betas, &file.ratios) {
            (Some(_), Some(_), None) | (None, None, Some(_)) => Ok(file),
            _ => Err(Error::model(
                "give either `ratios`, or `lambda` with `betas`",
            )),
        }
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn is_exact(&self) -> bool {
        let lists = [&self.translations, &self.probs];
        !lists.iter().any(|l| l.iter().any(Number::is_float))
            && !self.lambda.as_ref().is_some_and(Number::is_float)
            && !self.ratios.iter().flatten().any(Number::is_float)
            && (self.betas.is_none() || self.integer_betas().is_some())
    }

    /// Exponents as integers, when they all are.
    fn integer_betas(&self) -> Option<Vec<u32>> {
        self.betas
            .as_ref()?
            .iter()
            .map(|b| match b {
                Number::Int(n) if *n > 0 && *n <= u32::MAX as i64 => Some(*n as u32),
                Number::Text(s) => s.trim().parse::<u32>().ok().filter(|&n| n > 0),
                _ => None,
            })
            .collect()
    }

    pub fn spec<S: Scalar>(&self) -> Result<NonHomogSpec<S>> {
        let translations = values(&self.translations)?;
        let probs = values(&self.probs)?;
        if let Some(ratios) = &self.ratios {
            return NonHomogSpec::new(values(ratios)?, translations, probs);
        }
        let lambda: S = self.lambda.as_ref().expect("checked on parse").value()?;
        match self.integer_betas() {
            Some(betas) => {
                NonHomogSpec::from_integer_exponents(lambda, &betas, translations, probs)
            }
            None if S::EXACT => Err(Error::model(
                "non-integer exponents need float mode".to_string(),
            )),
            None => {
                let betas: Vec<f64> = values::<f64>(self.betas.as_ref().unwrap())?;
                let spec = NonHomogSpec::<f64>::from_exponents(
                    lambda.to_f64(),
                    betas,
                    translations.iter().map(|t| t.to_f64()).collect(),
                    probs.iter().map(|p| p.to_f64()).collect(),
                )?;
                Ok(NonHomogSpec {
                    ratios: spec
                        .ratios
                        .iter()
                        .map(|&r| S::from_f64(r))
                        .collect::<Result<_>>()?,
                    translations,
                    probs,
                    base: spec.base,
                    betas: spec.betas,
                })
            }
        }
    }
}
