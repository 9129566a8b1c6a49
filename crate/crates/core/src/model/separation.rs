use rayon::slice::ParallelSliceMut;

use super::{Environment, Model};
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapVerdict {
    /// All offsets distinct.
    Separated,
    /// Two distinct words share an offset exactly.
    Exact,
    /// Float mode: two offsets agree within the merge tolerance.
    Near,
    /// Only one word exists, so there is no pair to separate.
    SingleWord,
}

#[derive(Debug, Clone)]
pub struct Separation<S> {
    /// Smallest gap between distinct words' offsets (0 with one word).
    pub gap: S,
    pub words: u128,
    pub verdict: OverlapVerdict,
}

impl<S: Scalar> Separation<S> {
    /// The gap, forced to zero when the verdict says the offsets coincide.
    pub fn value(&self) -> S {
        match self.verdict {
            OverlapVerdict::Exact | OverlapVerdict::Near => S::zero(),
            _ => self.gap.clone(),
        }
    }

    pub fn overlaps(&self) -> bool {
        matches!(self.verdict, OverlapVerdict::Exact | OverlapVerdict::Near)
    }
}

/// Minimum distance between the offsets `f_u(0)` over distinct words of
/// length `n` along `env`.
pub fn separation<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    n: usize,
) -> Result<Separation<S>> {
    let symbols = model.realize(env, n)?;
    let (mut offsets, _) = model.enumerate_words(&symbols)?;
    let words = offsets.len() as u128;
    if offsets.len() < 2 {
        return Ok(Separation {
            gap: S::zero(),
            words,
            verdict: OverlapVerdict::SingleWord,
        });
    }
    offsets.par_sort_by(|a, b| a.partial_cmp(b).expect("finite offsets"));
    let gap = offsets
        .windows(2)
        .map(|w| w[1].clone() - w[0].clone())
        .fold(None::<S>, |acc, g| match acc {
            Some(a) if a <= g => Some(a),
            _ => Some(g),
        })
        .unwrap();
    let tol = merge_tolerance(model);
    let verdict = if gap.is_zero() {
        if S::EXACT {
            OverlapVerdict::Exact
        } else {
            OverlapVerdict::Near
        }
    } else if !S::EXACT && gap.to_f64() <= tol {
        OverlapVerdict::Near
    } else {
        OverlapVerdict::Separated
    };
    Ok(Separation {
        gap,
        words,
        verdict,
    })
}

/// Float-mode tolerance for treating two positions as one: `1e-12 · 2R`.
pub fn merge_tolerance<S: Scalar>(model: &Model<S>) -> f64 {
    if S::EXACT {
        0.0
    } else {
        1e-12 * 2.0 * model.radius().to_f64()
    }
}
