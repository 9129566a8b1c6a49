//! Erdős–Kahane style analysis for ratios `λ_i = θ^{-β_i}`.
//!
//! The environment is cut into blocks `W_i = W'_i 1`, each ending at an
//! occurrence of the designated symbol (index 0 here) and containing no
//! other occurrence. For a frequency `τ`, the quantities `Θ_k τ` are split
//! into their nearest integers `K_k` and remainders `ε_k`; when the
//! remainders are small, `K_{n+2}` is determined by `K_n` and `K_{n+1}`.
//!
//! `θ` and `τ` are taken to be exactly the binary values of the given
//! `f64`s. Everything downstream of them is computed with enough bits that
//! the remainders are accurate.

mod precise;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Environment;
pub use precise::Precise;

/// Longest stretch scanned for the designated symbol.
pub const SCAN_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecomposition {
    /// Blocks `W_i`, each ending with the designated symbol 0.
    pub blocks: Vec<Vec<usize>>,
}

impl BlockDecomposition {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `X_i = |W_i|`.
    pub fn waiting_times(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    /// `W'_i`, the block without its final symbol.
    pub fn reduced(&self, i: usize) -> &[usize] {
        let b = &self.blocks[i];
        &b[..b.len() - 1]
    }
}

/// First `count` blocks of `env`.
pub fn block_decompose(
    env: &Environment,
    marginal: &[f64],
    count: usize,
) -> Result<BlockDecomposition> {
    let mut blocks = Vec::with_capacity(count);
    let mut current = Vec::new();
    let mut seen = 0usize;
    let mut chunk = 1024usize;
    let available = if env.seed().is_some() {
        SCAN_CAP
    } else {
        env.prefix().len().min(SCAN_CAP)
    };
    while blocks.len() < count {
        if seen >= available {
            return Err(Error::InvalidEnvironment(format!(
                "only {} of {count} blocks found within {seen} symbols",
                blocks.len()
            )));
        }
        let upto = (seen + chunk).min(available);
        let symbols = env.realize(upto, marginal)?;
        for &s in &symbols[seen..] {
            current.push(s);
            if s == 0 {
                blocks.push(std::mem::take(&mut current));
                if blocks.len() == count {
                    break;
                }
            }
        }
        seen = upto;
        chunk *= 2;
    }
    Ok(BlockDecomposition { blocks })
}

/// Sum of the `⌊ϱM⌋` largest values among `xs[..M]`.
pub fn subset_sum_statistic(xs: &[usize], varrho: f64, m: usize) -> Result<u64> {
    if xs.len() < m {
        return Err(Error::arg(format!("need {m} values, have {}", xs.len())));
    }
    let take = if varrho >= 1.0 {
        m
    } else {
        (varrho * m as f64).floor() as usize
    };
    if take == 0 {
        return Ok(0);
    }
    let mut v: Vec<usize> = xs[..m].to_vec();
    v.sort_unstable_by(|a, b| b.cmp(a));
    Ok(v[..take].iter().map(|&x| x as u64).sum())
}

/// Exponents `E` with `Θ = θ^E` for the products of one decomposition.
#[derive(Debug, Clone)]
pub struct ThetaExponents {
    pub m: usize,
    /// `β(W_i)` for `i = 1..=M+1`.
    pub block_beta: Vec<f64>,
    /// `β(W'_i)` for `i = 1..=M+1`.
    pub reduced_beta: Vec<f64>,
    /// `|W_i|` for `i = 1..=M+1`.
    pub block_len: Vec<usize>,
    /// Exponent of `Θ^{(k)}` for `k = 1..=M+1`.
    pub big: Vec<f64>,
    /// Exponent of `Θ_k^{(M)}` for `k = 0..M`.
    pub sub: Vec<f64>,
    pub beta_max: f64,
}

impl ThetaExponents {
    pub fn new(betas: &[f64], blocks: &BlockDecomposition, m: usize) -> Result<Self> {
        if betas.is_empty() || betas[0] != 1.0 {
            return Err(Error::arg("the designated symbol must have exponent 1"));
        }
        if betas.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::arg("exponents must be positive"));
        }
        if m == 0 || blocks.len() < m + 1 {
            return Err(Error::arg(format!(
                "need M+1 = {} blocks, have {}",
                m + 1,
                blocks.len()
            )));
        }
        let beta_of = |w: &[usize]| -> Result<f64> {
            w.iter().try_fold(0.0, |acc, &s| {
                betas
                    .get(s)
                    .map(|b| acc + b)
                    .ok_or_else(|| Error::arg(format!("no exponent for symbol {}", s + 1)))
            })
        };
        let mut block_beta = Vec::with_capacity(m + 1);
        let mut reduced_beta = Vec::with_capacity(m + 1);
        for i in 0..=m {
            block_beta.push(beta_of(&blocks.blocks[i])?);
            reduced_beta.push(beta_of(blocks.reduced(i))?);
        }
        let mut big = Vec::with_capacity(m + 1);
        let mut prefix = 0.0;
        for k in 0..=m {
            big.push(prefix + reduced_beta[k]);
            prefix += block_beta[k];
        }
        // Θ_k^{(M)} = Θ^{(M)} / Θ^{(M-k)}; Θ^{(0)} is not needed since k < M
        let sub = (0..m)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    big[m - 1] - big[m - 1 - k]
                }
            })
            .collect();
        Ok(ThetaExponents {
            m,
            block_beta,
            reduced_beta,
            block_len: blocks.blocks[..=m].iter().map(|b| b.len()).collect(),
            big,
            sub,
            beta_max: betas.iter().cloned().fold(0.0, f64::max),
        })
    }

    /// `Θ_1^{(M+1)} = θ^{1 + β(W'_{M+1})}`, the upper end of the `τ` range.
    pub fn tau_max_exponent(&self) -> f64 {
        self.big[self.m] - self.big[self.m - 1]
    }

    /// `β(W_i)` for 1-based `i`.
    pub fn beta_block(&self, i: usize) -> f64 {
        self.block_beta[i - 1]
    }

    /// `|W_i|` for 1-based `i`.
    pub fn len_block(&self, i: usize) -> usize {
        self.block_len[i - 1]
    }
}

/// `Θ^{(k)}` for `k = 1..=M+1` and `Θ_k^{(M)}` for `k = 0..M`, as `f64`.
pub fn theta_products(
    theta: f64,
    betas: &[f64],
    blocks: &BlockDecomposition,
    m: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let ex = ThetaExponents::new(betas, blocks, m)?;
    let ln_theta = theta.ln();
    let conv = |e: &f64| -> Result<f64> {
        let l = e * ln_theta;
        if l > 700.0 {
            Err(Error::Overflow(format!(
                "log Θ = {l:.1} exceeds the f64 range; use the exponent form"
            )))
        } else {
            Ok(theta.powf(*e))
        }
    };
    Ok((
        ex.big.iter().map(conv).collect::<Result<_>>()?,
        ex.sub.iter().map(conv).collect::<Result<_>>()?,
    ))
}

/// `4 (12 b³)^{β_max (|W_{M-n}| + |W_{M-n-1}|)}` for `n = 0..=M-2`.
fn b_constants(ex: &ThetaExponents, b: f64) -> Vec<f64> {
    let m = ex.m;
    (0..m.saturating_sub(1))
        .map(|n| {
            let len = (ex.len_block(m - n) + ex.len_block(m - n - 1)) as f64;
            4.0 * (12.0 * b.powi(3)).powf(ex.beta_max * len)
        })
        .collect()
}

/// `(1/8) (12 b³)^{-4 β_max / (c1 δ)}`.
pub fn rho_helper(b: f64, beta_max: f64, c1: f64, delta: f64) -> f64 {
    0.125 * (12.0 * b.powi(3)).powf(-4.0 * beta_max / (c1 * delta))
}

#[derive(Debug, Clone)]
pub struct EkTrace {
    pub theta: f64,
    pub tau: f64,
    pub interval: (f64, f64),
    pub exponents: ThetaExponents,
    /// `log2 Θ_k^{(M)}` for `k = 0..M`.
    pub log2_theta_k: Vec<f64>,
    pub k: Vec<u128>,
    pub eps: Vec<f64>,
    /// `B_n` for `n = 0..=M-2`.
    pub b: Vec<f64>,
    /// `ρ_n = 1 / (2 B_n)`.
    pub rho: Vec<f64>,
    pub precision_bits: usize,
}

/// `K_n`, `ε_n`, `B_n`, `ρ_n` for one `(θ, τ, ω)`.
pub fn kn_trace(
    theta: f64,
    interval: (f64, f64),
    betas: &[f64],
    blocks: &BlockDecomposition,
    m: usize,
    tau: f64,
) -> Result<EkTrace> {
    let (a, b) = interval;
    if !(a > 1.0 && a <= theta && theta <= b) {
        return Err(Error::arg(format!(
            "θ = {theta} not inside [{a}, {b}] with a > 1"
        )));
    }
    let ex = ThetaExponents::new(betas, blocks, m)?;
    let tau_max = theta.powf(ex.tau_max_exponent());
    if !(1.0..=tau_max * (1.0 + 1e-15)).contains(&tau) {
        return Err(Error::arg(format!("τ = {tau} outside [1, {tau_max}]")));
    }
    let log2_theta = theta.log2();
    let log2_theta_k: Vec<f64> = ex.sub.iter().map(|e| e * log2_theta).collect();
    let top = log2_theta_k.iter().cloned().fold(0.0, f64::max) + tau.log2();
    let mut p = Precise::for_magnitude(top)?;
    let th = p.num(theta);
    let tau_p = p.num(tau);
    let mut ks = Vec::with_capacity(m);
    let mut eps = Vec::with_capacity(m);
    for e in &ex.sub {
        let x = p.pow_f64(&th, *e);
        let x = p.mul(&x, &tau_p);
        let (k, r) = p.round(&x)?;
        ks.push(k);
        eps.push(precise::to_f64(&r));
    }
    let bs = b_constants(&ex, b);
    let rho = bs.iter().map(|x| 0.5 / x).collect();
    Ok(EkTrace {
        theta,
        tau,
        interval,
        exponents: ex,
        log2_theta_k,
        k: ks,
        eps,
        b: bs,
        rho,
        precision_bits: p.bits,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct Prediction {
    pub candidate: u128,
    /// `|K_{n+2} - pivot|`.
    pub residual: f64,
    /// `B_n · max(|ε_n|, |ε_{n+1}|, |ε_{n+2}|)`.
    pub bound: f64,
    /// Slack for the rounding of the pivot itself.
    pub slack: f64,
    pub b: f64,
    /// The remainder condition `max|ε| < ρ_n` holds.
    pub unique: bool,
}

impl Prediction {
    /// The residual inequality.
    pub fn residual_ok(&self) -> bool {
        self.residual <= self.bound + self.slack
    }
}

impl EkTrace {
    pub fn m(&self) -> usize {
        self.exponents.m
    }

    /// `K_n >= max(1, a^n - 1)` for every `n`.
    pub fn k_lower_bound_holds(&self) -> bool {
        let a = self.interval.0;
        self.k
            .iter()
            .enumerate()
            .all(|(n, &k)| k as f64 >= (a.powi(n as i32) - 1.0).max(1.0) * (1.0 - 1e-12))
    }

    /// Predicts `K_{n+2}` from `K_n`, `K_{n+1}` via the pivot
    /// `K_{n+1} (K_{n+1}/K_n)^{β(W_{M-n-1})/β(W_{M-n})}`.
    pub fn predict_k(&self, n: usize) -> Result<Prediction> {
        let m = self.m();
        if m < 3 || n > m - 3 {
            return Err(Error::arg(format!(
                "prediction needs n <= M-3 = {}",
                m as i64 - 3
            )));
        }
        let (k0, k1, k2) = (self.k[n], self.k[n + 1], self.k[n + 2]);
        if k0 == 0 {
            return Err(Error::arg(format!("K_{n} = 0")));
        }
        let ex = &self.exponents;
        let mut p = Precise::for_magnitude((k2 as f64).log2() + 8.0)?;
        let (a, b) = (p.from_u128(k0), p.from_u128(k1));
        let q = p.div(&b, &a);
        let x = p.div(
            &p.num(ex.beta_block(m - n - 1)),
            &p.num(ex.beta_block(m - n)),
        );
        let step = p.pow(&q, &x);
        let pivot = p.mul(&b, &step);
        let (candidate, _) = p.round(&pivot)?;
        let residual = precise::to_f64(&p.sub(&p.from_u128(k2), &pivot)).abs();
        let emax = self.eps[n]
            .abs()
            .max(self.eps[n + 1].abs())
            .max(self.eps[n + 2].abs());
        let bn = self.b[n];
        Ok(Prediction {
            candidate,
            residual,
            bound: bn * emax,
            slack: (k2 as f64) * 2f64.powi(-(p.bits as i32) + 16),
            b: bn,
            unique: emax < self.rho[n],
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CoverRow {
    pub theta: f64,
    /// Max over the `τ` grid of the fraction of `k` with `‖Θ_k τ‖ >= ρ`.
    pub max_tau_freq: f64,
    pub exceptional: bool,
}

#[derive(Debug, Clone)]
pub struct CoverScan {
    pub rows: Vec<CoverRow>,
    pub exceptional: usize,
    pub grid_size: usize,
}

/// Largest `Θτ` handled in plain `f64` before switching to extended
/// precision.
const F64_LIMIT_LOG2: f64 = 40.0;

#[allow(clippy::too_many_arguments)]
pub fn ek_cover_scan(
    interval: (f64, f64),
    betas: &[f64],
    blocks: &BlockDecomposition,
    m: usize,
    rho: f64,
    delta: f64,
    theta_grid: usize,
    tau_grid: usize,
) -> Result<CoverScan> {
    if theta_grid == 0 || tau_grid == 0 {
        return Err(Error::arg("empty grid"));
    }
    let (a, b) = interval;
    if !(a > 1.0 && b >= a) {
        return Err(Error::arg("interval must satisfy 1 < a <= b"));
    }
    let ex = ThetaExponents::new(betas, blocks, m)?;
    let thetas: Vec<f64> = (0..theta_grid)
        .map(|i| {
            if theta_grid == 1 {
                a
            } else {
                a + (b - a) * i as f64 / (theta_grid - 1) as f64
            }
        })
        .collect();
    let rows: Vec<CoverRow> = thetas
        .par_iter()
        .map(|&theta| -> Result<CoverRow> {
            let tau_max = theta.powf(ex.tau_max_exponent());
            let mut best = 0.0f64;
            for j in 0..tau_grid {
                let tau = if tau_grid == 1 {
                    1.0
                } else {
                    1.0 + (tau_max - 1.0) * j as f64 / (tau_grid - 1) as f64
                };
                let freq = frequency(theta, tau, &ex, rho)?;
                best = best.max(freq);
            }
            Ok(CoverRow {
                theta,
                max_tau_freq: best,
                exceptional: best < delta,
            })
        })
        .collect::<Result<_>>()?;
    let exceptional = rows.iter().filter(|r| r.exceptional).count();
    Ok(CoverScan {
        rows,
        exceptional,
        grid_size: theta_grid,
    })
}

fn frequency(theta: f64, tau: f64, ex: &ThetaExponents, rho: f64) -> Result<f64> {
    let top = ex.sub.iter().cloned().fold(0.0, f64::max) * theta.log2() + tau.log2();
    let far = if top <= F64_LIMIT_LOG2 {
        ex.sub
            .iter()
            .filter(|&&e| crate::fourier::dist_to_int(theta.powf(e) * tau) >= rho)
            .count()
    } else {
        let mut p = Precise::for_magnitude(top)?;
        let th = p.num(theta);
        let tau_p = p.num(tau);
        let mut far = 0;
        for e in &ex.sub {
            let x = p.pow_f64(&th, *e);
            let (_, r) = p.round(&p.mul(&x, &tau_p))?;
            if precise::to_f64(&r).abs() >= rho {
                far += 1;
            }
        }
        far
    };
    Ok(far as f64 / ex.m as f64)
}
