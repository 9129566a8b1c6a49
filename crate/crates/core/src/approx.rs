//! Finite-level approximations of the random measure along an environment.
//!
//! Level `n` of the construction contributes the discrete factor
//! `Σ_j p_j δ_{λ_{ω_1}⋯λ_{ω_{n-1}} t_j}` (with the weights and translations
//! of system `ω_n`). The truncated measure at depth `d` is the convolution
//! of the first `d` factors; the full measure is the infinite convolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_cap, Error, Result};
use crate::measure::AtomMeasure;
use crate::model::{Environment, Model, NonHomogSpec};
use crate::recoder::block_recode;
use crate::scalar::Scalar;

/// Upper bound on the scale index search.
const MAX_SCALE_INDEX: usize = 100_000;

/// Merge tolerance for atoms built from this model.
pub fn merge_tol<S: Scalar>(model: &Model<S>) -> f64 {
    crate::model::merge_tolerance(model)
}

/// Smallest `ℓ` with `2R λ_{ω_1}⋯λ_{ω_ℓ} <= 2^{-n}`.
pub fn scale_index<S: Scalar>(model: &Model<S>, env: &Environment, n: u32) -> Result<usize> {
    let target = S::dyadic(1, n);
    let two_r = S::from_int(2) * model.radius().clone();
    let mut prod = S::one();
    let mut ell = 0usize;
    let mut block = 64usize;
    loop {
        let want = match env.seed() {
            Some(_) => ell + block,
            None => (ell + block).min(env.prefix().len()),
        };
        if want == ell {
            return Err(Error::InvalidEnvironment(format!(
                "environment of length {ell} too short to reach scale 2^-{n}"
            )));
        }
        let symbols = model.realize(env, want)?;
        for &i in &symbols[ell..] {
            if two_r.clone() * prod.clone() <= target {
                return Ok(ell);
            }
            prod = prod * model.system(i).ratio.clone();
            ell += 1;
        }
        if two_r.clone() * prod.clone() <= target {
            return Ok(ell);
        }
        if ell > MAX_SCALE_INDEX {
            return Err(Error::arg(format!(
                "scale index for n={n} exceeds {MAX_SCALE_INDEX}"
            )));
        }
        block *= 2;
    }
}

/// `λ_{ω_1}⋯λ_{ω_d} · max|t| / (1 - λ_max)`: every point of the tail
/// measure lies within this distance of 0.
pub fn tail_radius<S: Scalar>(model: &Model<S>, env: &Environment, depth: usize) -> Result<S> {
    let symbols = model.realize(env, depth)?;
    Ok(
        model.ratio_product(&symbols) * model.max_translation().clone()
            / (S::one() - model.lambda_max().clone()),
    )
}

/// The factor contributed by level `level` (1-based) given `scale`, the
/// product of the earlier ratios.
fn level_factor<S: Scalar>(model: &Model<S>, i: usize, scale: &S, tol: f64) -> AtomMeasure<S> {
    let f = model.system(i);
    let positions = f
        .translations
        .iter()
        .map(|t| scale.clone() * t.clone())
        .collect();
    AtomMeasure::assemble(positions, f.probs.clone(), tol)
}

/// Convolution of the factors at the given 1-based levels.
fn convolve_levels<S: Scalar>(
    model: &Model<S>,
    symbols: &[usize],
    keep: impl Fn(usize) -> bool,
) -> Result<AtomMeasure<S>> {
    let tol = merge_tol(model);
    let cap = model.limits().max_atoms;
    let mut acc = AtomMeasure::dirac(S::zero()).with_merge_tol(tol);
    let mut scale = S::one();
    for (k, &i) in symbols.iter().enumerate() {
        if keep(k + 1) {
            let factor = level_factor(model, i, &scale, tol);
            check_cap("atoms", acc.len() as u128 * factor.len() as u128, cap)?;
            acc = acc.convolve(&factor, cap)?;
        }
        scale = scale * model.system(i).ratio.clone();
    }
    Ok(acc)
}

/// `ν^{(ω, depth)}`, the convolution of the first `depth` level factors.
pub fn truncated_measure<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    depth: usize,
) -> Result<AtomMeasure<S>> {
    let symbols = model.realize(env, depth)?;
    convolve_levels(model, &symbols, |_| true)
}

/// The tail factor of the decomposition: the measure along `σ^ℓ ω`, scaled
/// by `λ_{ω_1}⋯λ_{ω_ℓ}`.
#[derive(Debug, Clone)]
pub struct TailFactor<S> {
    pub env: Environment,
    pub scale: S,
    pub level: usize,
}

impl<S: Scalar> TailFactor<S> {
    /// Its depth-`depth` truncation.
    pub fn truncated(&self, model: &Model<S>, depth: usize) -> Result<AtomMeasure<S>> {
        let inner = truncated_measure(model, &self.env, depth)?;
        Ok(inner.push_affine(&self.scale, &S::zero()))
    }
}

#[derive(Debug, Clone)]
pub struct EtaDecomposition<S> {
    pub scale_index: usize,
    pub nu: AtomMeasure<S>,
    pub tail: TailFactor<S>,
    /// Bound on the distance from 0 of any tail point.
    pub tail_radius: S,
}

/// Splits the measure at dyadic scale `n` into its first `ℓ_n` factors and
/// the scaled tail.
pub fn eta_decomposition<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    n: u32,
) -> Result<EtaDecomposition<S>> {
    let ell = scale_index(model, env, n)?;
    let nu = truncated_measure(model, env, ell)?;
    let symbols = model.realize(env, ell)?;
    Ok(EtaDecomposition {
        scale_index: ell,
        nu,
        tail: TailFactor {
            env: env.shift(ell),
            scale: model.ratio_product(&symbols),
            level: ell,
        },
        tail_radius: tail_radius(model, env, ell)?,
    })
}

/// Factors at levels divisible by `s` and the rest, up to `depth`.
pub fn keep_skip_split<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    s: usize,
    depth: usize,
) -> Result<(AtomMeasure<S>, AtomMeasure<S>)> {
    if s < 2 {
        return Err(Error::arg("block length must be at least 2"));
    }
    let symbols = model.realize(env, depth)?;
    let keep = convolve_levels(model, &symbols, |n| n % s == 0)?;
    let skip = convolve_levels(model, &symbols, |n| n % s != 0)?;
    Ok((keep, skip))
}

#[derive(Debug, Clone)]
pub struct MixtureCheck<S> {
    /// Depth-`rn` measure of the original system by direct enumeration.
    pub direct: AtomMeasure<S>,
    /// Average of the recoded level-`n` measures over all environments.
    pub mixture: AtomMeasure<S>,
    pub tv: f64,
    pub environments: usize,
}

/// Compares the depth-`rn` self-similar measure of `spec` with the average
/// over environments of the depth-`n` measures of its `r`-block recoding.
pub fn mixture_check<S: Scalar>(
    spec: &NonHomogSpec<S>,
    r: usize,
    n: usize,
) -> Result<MixtureCheck<S>> {
    if r == 0 || n == 0 {
        return Err(Error::arg("r and n must be positive"));
    }
    let k = spec.len();
    let depth = r * n;
    let words = (k as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    let limits = crate::model::Limits::default();
    check_cap("words", words, limits.max_words)?;

    let mut states: Vec<(S, S, S)> = vec![(S::zero(), S::one(), S::one())];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(states.len() * k);
        for (off, scale, w) in &states {
            for j in 0..k {
                next.push((
                    off.clone() + scale.clone() * spec.translations[j].clone(),
                    scale.clone() * spec.ratios[j].clone(),
                    w.clone() * spec.probs[j].clone(),
                ));
            }
        }
        states = next;
    }
    let tol = 1e-12;
    let (pos, wts): (Vec<S>, Vec<S>) = states.into_iter().map(|(o, _, w)| (o, w)).unzip();
    let direct = AtomMeasure::assemble(pos, wts, tol);

    let recoded = block_recode(spec, r)?;
    let model = &recoded.model;
    let m = model.index_count();
    let envs = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    check_cap("environments", envs, limits.max_words)?;
    let mut pos = Vec::new();
    let mut wts = Vec::new();
    let mut omega = vec![0usize; n];
    loop {
        let env = Environment::fixed(omega.clone());
        let p_env = omega
            .iter()
            .fold(S::one(), |acc, &i| acc * model.marginal()[i].clone());
        let nu = truncated_measure(model, &env, n)?;
        for (x, w) in nu.atoms() {
            pos.push(x.clone());
            wts.push(p_env.clone() * w.clone());
        }
        // next environment in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                let mixture = AtomMeasure::assemble(pos, wts, tol);
                let tv = direct.tv(&mixture);
                return Ok(MixtureCheck {
                    direct,
                    mixture,
                    tv,
                    environments: envs as usize,
                });
            }
            i -= 1;
            omega[i] += 1;
            if omega[i] < m {
                break;
            }
            omega[i] = 0;
        }
    }
}

/// Cumulative table of a finite measure for inverse-CDF sampling and
/// interval masses.
#[derive(Debug, Clone)]
pub struct Sampler {
    positions: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Sampler {
    pub fn new<S: Scalar>(mu: &AtomMeasure<S>) -> Self {
        let positions: Vec<f64> = mu.positions().iter().map(|x| x.to_f64()).collect();
        let mut cumulative = Vec::with_capacity(positions.len());
        let mut acc = 0.0;
        for w in mu.weights() {
            acc += w.to_f64();
            cumulative.push(acc);
        }
        let total = acc;
        for c in &mut cumulative {
            *c /= total;
        }
        Sampler {
            positions,
            cumulative,
        }
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// Atom index for a uniform `u` in `[0,1)`.
    pub fn index_for(&self, u: f64) -> usize {
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.positions.len() - 1)
    }

    pub fn draw(&self, u: f64) -> f64 {
        self.positions[self.index_for(u)]
    }

    /// Mass of the closed interval `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        let lo = self.positions.partition_point(|&x| x < a);
        let hi = self.positions.partition_point(|&x| x <= b);
        if hi <= lo {
            return 0.0;
        }
        let upper = self.cumulative[hi - 1];
        let lower = if lo == 0 {
            0.0
        } else {
            self.cumulative[lo - 1]
        };
        upper - lower
    }

    /// Mass of every closed interval of length `2r`, maximised over atom
    /// centres.
    pub fn max_ball_mass(&self, r: f64) -> f64 {
        let n = self.positions.len();
        let mut best = 0.0f64;
        let (mut lo, mut hi) = (0usize, 0usize);
        for i in 0..n {
            let x = self.positions[i];
            while self.positions[lo] < x - r {
                lo += 1;
            }
            while hi < n && self.positions[hi] <= x + r {
                hi += 1;
            }
            let lower = if lo == 0 {
                0.0
            } else {
                self.cumulative[lo - 1]
            };
            best = best.max(self.cumulative[hi - 1] - lower);
        }
        best
    }
}

/// Samples per generator block; output does not depend on thread count.
pub const SAMPLE_BLOCK: usize = 4096;

/// `count` independent draws from the depth-`depth` truncation.
pub fn sample_measure<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    depth: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let nu = truncated_measure(model, env, depth)?;
    let sampler = Sampler::new(&nu);
    Ok(draw_uniforms(count, seed)
        .into_par_iter()
        .map(|u| sampler.draw(u))
        .collect())
}

/// Deterministic uniforms in `[0,1)`, generated block by block.
pub fn draw_uniforms(count: usize, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; count];
    out.par_chunks_mut(SAMPLE_BLOCK)
        .enumerate()
        .for_each(|(b, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            for u in chunk.iter_mut() {
                *u = rng.gen::<f64>();
            }
        });
    out
}
