use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A sequence of system indices `ω_1 ω_2 ...`.
///
/// The first symbols come from an explicit prefix. Past the prefix the
/// sequence is drawn from the marginal with a counter-based generator, so
/// symbol `k` depends only on the seed and on `k`, and shifting keeps the
/// tail identical to the original one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    prefix: Vec<usize>,
    seed: Option<u64>,
    base: u64,
}

impl Environment {
    /// A finite environment; asking for symbols past the prefix fails.
    pub fn fixed(prefix: Vec<usize>) -> Self {
        Environment {
            prefix,
            seed: None,
            base: 0,
        }
    }

    /// Drawn from the marginal with the given seed.
    pub fn random(seed: u64) -> Self {
        Environment {
            prefix: Vec::new(),
            seed: Some(seed),
            base: 0,
        }
    }

    pub fn with_prefix(prefix: Vec<usize>, seed: Option<u64>) -> Self {
        Environment {
            prefix,
            seed,
            base: 0,
        }
    }

    /// Every symbol equal to `i`.
    pub fn constant(i: usize, len: usize) -> Self {
        Environment::fixed(vec![i; len])
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `σ^k ω`.
    pub fn shift(&self, k: usize) -> Self {
        let drop = k.min(self.prefix.len());
        Environment {
            prefix: self.prefix[drop..].to_vec(),
            seed: self.seed,
            base: self.base + k as u64,
        }
    }

    /// `ω_1..ω_n` (zero-based indices into the index set).
    pub fn realize(&self, n: usize, marginal: &[f64]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(n);
        for &i in self.prefix.iter().take(n) {
            if i >= marginal.len() {
                return Err(Error::InvalidEnvironment(format!(
                    "symbol {} outside an index set of size {}",
                    i + 1,
                    marginal.len()
                )));
            }
            out.push(i);
        }
        if out.len() == n {
            return Ok(out);
        }
        let seed = self.seed.ok_or_else(|| {
            Error::InvalidEnvironment(format!(
                "{n} symbols requested but the environment has a prefix of {} and no seed",
                self.prefix.len()
            ))
        })?;
        let start = self.base + self.prefix.len() as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(2 * start as u128);
        while out.len() < n {
            let u = (rng.next_u64() >> 11) as f64 * (-53f64).exp2();
            out.push(pick(marginal, u));
        }
        Ok(out)
    }
}

fn pick(marginal: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, q) in marginal.iter().enumerate() {
        acc += q;
        if u < acc {
            return i;
        }
    }
    marginal.len() - 1
}

/// A finite word of letters; letter `j` selects map `j` of the system in
/// force at its level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|j| (j + 1).to_string()).collect();
        write!(f, "{}", parts.join(""))
    }
}
