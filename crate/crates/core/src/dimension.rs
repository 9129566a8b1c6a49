//! Finite-scale dimension estimators.
//!
//! All ball masses come from truncated measures. A ball of radius `r`
//! around `x` is bracketed by the truncated masses at radii `r - tail` and
//! `r + tail`, and the estimators use the midpoint of that bracket.

use rayon::prelude::*;

use crate::approx::{draw_uniforms, scale_index, tail_radius, truncated_measure, Sampler};
use crate::error::{Error, Result};
use crate::measure::{dyadic_cells, dyadic_entropy, MAX_LEVEL};
use crate::model::{separation, Environment, Model, OverlapVerdict};
use crate::scalar::Scalar;

/// Extra dyadic levels of truncation below the finest requested scale.
pub const DEPTH_MARGIN: u32 = 4;

/// Ball radii are kept at least this many tail radii wide.
const TAIL_RATIO: f64 = 32.0;

/// Slack above 1 before an estimate is flagged.
const RANGE_SLACK: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BallMass,
    Entropy,
    Fiber,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BallMass => "ball",
            Method::Entropy => "entropy",
            Method::Fiber => "fiber",
        }
    }
}

/// One scale of an estimate: `n` is the dyadic level, `value` is the
/// averaged `log2` ball mass or the normalised entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleRecord {
    pub n: u32,
    pub log2_radius: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    pub alpha: f64,
    pub records: Vec<ScaleRecord>,
    pub stderr: f64,
    pub method: Method,
    /// The measure is a single atom.
    pub degenerate: bool,
    /// The estimate left `[0, 1 + slack]`.
    pub out_of_range: bool,
}

impl DimensionEstimate {
    fn new(alpha: f64, records: Vec<ScaleRecord>, stderr: f64, method: Method) -> Self {
        DimensionEstimate {
            alpha,
            records,
            stderr,
            method,
            degenerate: false,
            out_of_range: !(0.0..=1.0 + RANGE_SLACK).contains(&alpha),
        }
    }

    fn single_atom(records: Vec<ScaleRecord>, method: Method) -> Self {
        DimensionEstimate {
            alpha: 0.0,
            records,
            stderr: 0.0,
            method,
            degenerate: true,
            out_of_range: false,
        }
    }
}

fn check_scales(scales: &[u32]) -> Result<()> {
    if scales.is_empty() {
        return Err(Error::arg("empty scale list"));
    }
    if scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("scales must be strictly increasing"));
    }
    Ok(())
}

/// Least-squares slope of `ys` on `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    crate::fourier::fit_line(xs, ys).0
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Midpoint of the truncated ball-mass bracket.
fn ball_mass(sampler: &Sampler, x: f64, r: f64, tail: f64) -> f64 {
    let inner = (r - tail).max(0.0);
    0.5 * (sampler.mass(x - inner, x + inner) + sampler.mass(x - r - tail, x + r + tail))
}

/// Truncation depth at which `tail_radius <= radius / TAIL_RATIO`, at
/// least `min_depth`.
fn resolving_depth(
    model: &Model<f64>,
    env: &Environment,
    radius: f64,
    min_depth: usize,
) -> Result<usize> {
    let mut d = min_depth;
    loop {
        if tail_radius(model, env, d)? <= radius / TAIL_RATIO {
            return Ok(d);
        }
        d += 1;
        if d > min_depth + 4096 {
            return Err(Error::arg(
                "balls cannot be resolved by any truncation depth",
            ));
        }
    }
}

/// Local dimension from ball masses `μ(B(x, 2^{-n}))` at the given levels,
/// with `x` drawn from the truncated measure. Each sample gives a
/// regression slope; the estimate is their mean.
pub fn local_dimension_estimate<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    scales: &[u32],
    samples: usize,
    seed: u64,
) -> Result<DimensionEstimate> {
    check_scales(scales)?;
    if samples < 100 {
        return Err(Error::arg("at least 100 samples are needed"));
    }
    let model = model.convert::<f64>()?;
    let n_max = *scales.last().unwrap();
    let depth = scale_index(&model, env, n_max + DEPTH_MARGIN)?;
    let nu = truncated_measure(&model, env, depth)?;
    let radii: Vec<f64> = scales.iter().map(|&n| 0.5f64.powi(n as i32)).collect();
    let log_r: Vec<f64> = scales.iter().map(|&n| -(n as f64)).collect();
    if nu.len() == 1 {
        let records = scales
            .iter()
            .zip(&log_r)
            .map(|(&n, &lr)| ScaleRecord {
                n,
                log2_radius: lr,
                value: 0.0,
            })
            .collect();
        return Ok(DimensionEstimate::single_atom(records, Method::BallMass));
    }
    let tail = tail_radius(&model, env, depth)?;
    let sampler = Sampler::new(&nu);
    let per_sample: Vec<Vec<f64>> = draw_uniforms(samples, seed)
        .into_par_iter()
        .map(|u| {
            let x = sampler.draw(u);
            radii
                .iter()
                .map(|&r| ball_mass(&sampler, x, r, tail).log2())
                .collect()
        })
        .collect();
    let slopes: Vec<f64> = per_sample.iter().map(|ys| slope(&log_r, ys)).collect();
    let (alpha, stderr) = mean_stderr(&slopes);
    let records = scales
        .iter()
        .enumerate()
        .map(|(k, &n)| ScaleRecord {
            n,
            log2_radius: log_r[k],
            value: per_sample.iter().map(|ys| ys[k]).sum::<f64>() / samples as f64,
        })
        .collect();
    Ok(DimensionEstimate::new(
        alpha,
        records,
        stderr,
        Method::BallMass,
    ))
}

/// Normalised dyadic entropies `H(ν^{(ω,ℓ_n)}, D_n)/n`. The estimate is
/// the least-squares slope of the raw entropies against `n`, which removes
/// the `c/n` term; with one level it is that level's value.
pub fn entropy_dimension_estimate<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    scales: &[u32],
) -> Result<DimensionEstimate> {
    check_scales(scales)?;
    let mut raw = Vec::with_capacity(scales.len());
    let mut single = true;
    for &n in scales {
        let depth = scale_index(model, env, n)?;
        let nu = truncated_measure(model, env, depth)?;
        single &= nu.len() == 1;
        raw.push(dyadic_entropy(&nu, n)?);
    }
    let records: Vec<ScaleRecord> = scales
        .iter()
        .zip(&raw)
        .map(|(&n, &h)| ScaleRecord {
            n,
            log2_radius: -(n as f64),
            value: h / n as f64,
        })
        .collect();
    if single {
        return Ok(DimensionEstimate::single_atom(records, Method::Entropy));
    }
    let ns: Vec<f64> = scales.iter().map(|&n| n as f64).collect();
    let alpha = if scales.len() == 1 {
        records[0].value
    } else {
        slope(&ns, &raw)
    };
    let stderr = slope_stderr(&ns, &raw);
    Ok(DimensionEstimate::new(
        alpha,
        records,
        stderr,
        Method::Entropy,
    ))
}

fn slope_stderr(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    if n < 3 {
        return 0.0;
    }
    let (b, a) = crate::fourier::fit_line(xs, ys);
    let mx = xs.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a - b * x).powi(2))
        .sum();
    (sse / (n as f64 - 2.0) / sxx).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrostmanFit {
    pub rho_hat: f64,
    pub c_hat: f64,
    /// Closed-form lower bound from the separation depth.
    pub rho_formula: f64,
    /// Depth at which the designated system's extreme pieces separate.
    pub separation_depth: usize,
    /// `(n, log2 sup_x μ(B(x, 2^{-n})))`.
    pub records: Vec<ScaleRecord>,
}

/// Regression of `log2 sup_x μ(B(x, r))` on `log2 r` for `r = 2^{-n}`,
/// together with the closed-form exponent
/// `log(1 - p_min^{2C'}) / (2C' log λ_min)`, `C' = 2ℓ/q`.
pub fn frostman_exponent<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    scales: &[u32],
) -> Result<FrostmanFit> {
    check_scales(scales)?;
    let (i0, lo, hi) = model
        .designated_system()
        .ok_or_else(|| Error::arg("every system is degenerate"))?;
    let model = model.convert::<f64>()?;
    let n_max = *scales.last().unwrap();
    let depth = scale_index(&model, env, n_max + DEPTH_MARGIN)?;
    let nu = truncated_measure(&model, env, depth)?;
    let tail = tail_radius(&model, env, depth)?;
    let sampler = Sampler::new(&nu);
    let mut records = Vec::with_capacity(scales.len());
    for &n in scales {
        let r = 0.5f64.powi(n as i32);
        let inner = sampler.max_ball_mass((r - tail).max(0.0));
        let outer = sampler.max_ball_mass(r + tail);
        records.push(ScaleRecord {
            n,
            log2_radius: -(n as f64),
            value: (0.5 * (inner + outer)).log2(),
        });
    }
    let xs: Vec<f64> = records.iter().map(|r| r.log2_radius).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.value).collect();
    let (rho_hat, intercept) = if records.len() == 1 {
        (ys[0] / xs[0], 0.0)
    } else {
        crate::fourier::fit_line(&xs, &ys)
    };

    let f = model.system(i0);
    let spread = (f.translations[hi] - f.translations[lo]).abs();
    let two_r = 2.0 * model.radius();
    let lmax = *model.lambda_max();
    let mut ell = 0usize;
    while two_r * lmax.powi(ell as i32) >= spread / 2.0 {
        ell += 1;
    }
    let q = model.marginal()[i0];
    let c_prime = 2.0 * ell as f64 / q;
    let p_min = model
        .systems()
        .iter()
        .flat_map(|f| f.probs.iter().copied())
        .filter(|&p| p > 0.0)
        .fold(1.0f64, f64::min);
    let rho_formula =
        (-(p_min.powf(2.0 * c_prime))).ln_1p() / (2.0 * c_prime * model.lambda_min().ln());
    Ok(FrostmanFit {
        rho_hat,
        c_hat: intercept.exp2(),
        rho_formula,
        separation_depth: ell,
        records,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberEstimate {
    pub n: usize,
    /// `(1/n) Σ_{k<=n} H(p_{ω_k})` along the realised environment, in bits.
    pub alpha1: f64,
    /// `Σ_i q_i H(p_i)`, the expected value of `alpha1`.
    pub alpha1_mean: f64,
    /// Conditional-entropy loss from the two-scale difference between
    /// levels `n/2` and `n`.
    pub alpha2: f64,
    /// The same loss measured at level `n` alone.
    pub alpha2_single: f64,
    pub alpha2_stderr: f64,
    /// `-(1/n) Σ_{k<=n} log2 λ_{ω_k}`.
    pub lyapunov: f64,
    /// `(alpha1 - alpha2) / lyapunov`.
    pub alpha: f64,
    pub depth: usize,
    pub samples: usize,
}

/// Fiber-entropy estimate of the exact dimension.
///
/// For a sampled word `u` with point `x = Π(u)`, the level-`k` loss is
/// `-log2 P(word|k = u|k | X ∈ B(x, r_k))` with `r_k = 2R λ_{ω_1}⋯λ_{ω_k}`.
/// Since the cylinder of `u|k` lies inside the ball this equals
/// `-log2 p_{u|k} + log2 μ(B(x, r_k))`. The loss grows linearly in `k`
/// plus a bounded term, so the slope between `k = n/2` and `k = n` is
/// reported as `alpha2`.
pub fn fiber_entropy_estimate<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<FiberEstimate> {
    if n < 2 {
        return Err(Error::arg("fiber estimate needs n >= 2"));
    }
    if samples == 0 {
        return Err(Error::arg("no samples requested"));
    }
    let model = model.convert::<f64>()?;
    let n1 = n / 2;
    let head = model.realize(env, n)?;
    let two_r = 2.0 * model.radius();
    let r_n = two_r * model.ratio_product(&head);
    let r_n1 = two_r * model.ratio_product(&head[..n1]);
    let depth = resolving_depth(&model, env, r_n, n)?;
    let symbols = model.realize(env, depth)?;
    let nu = truncated_measure(&model, env, depth)?;
    let tail = tail_radius(&model, env, depth)?;
    let sampler = Sampler::new(&nu);

    let cdfs: Vec<Vec<f64>> = symbols
        .iter()
        .map(|&i| {
            let mut acc = 0.0;
            model
                .system(i)
                .probs
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect()
        })
        .collect();
    let uniforms = draw_uniforms(samples * depth, seed);
    let losses: Vec<(f64, f64)> = uniforms
        .par_chunks(depth)
        .map(|us| {
            let mut x = 0.0;
            let mut scale = 1.0;
            let mut log_p = 0.0;
            let mut log_p1 = 0.0;
            for (k, (&i, &u)) in symbols.iter().zip(us).enumerate() {
                let f = model.system(i);
                let cdf = &cdfs[k];
                let j = cdf
                    .partition_point(|&c| c <= u * cdf[cdf.len() - 1])
                    .min(cdf.len() - 1);
                x += scale * f.translations[j];
                scale *= f.ratio;
                if k < n {
                    log_p += f.probs[j].log2();
                }
                if k < n1 {
                    log_p1 += f.probs[j].log2();
                }
            }
            let loss_n = -log_p + ball_mass(&sampler, x, r_n, tail).log2();
            let loss_n1 = -log_p1 + ball_mass(&sampler, x, r_n1, tail).log2();
            (loss_n, loss_n1)
        })
        .collect();

    let diffs: Vec<f64> = losses
        .iter()
        .map(|(a, b)| (a - b) / (n - n1) as f64)
        .collect();
    let (alpha2, alpha2_stderr) = mean_stderr(&diffs);
    let alpha2_single = losses.iter().map(|(a, _)| a).sum::<f64>() / (samples * n) as f64;
    let alpha1 = head
        .iter()
        .map(|&i| model.system(i).prob_entropy())
        .sum::<f64>()
        / n as f64;
    let lyapunov = -head
        .iter()
        .map(|&i| model.system(i).ratio.log2())
        .sum::<f64>()
        / n as f64;
    Ok(FiberEstimate {
        n,
        alpha1,
        alpha1_mean: model.mean_prob_entropy(),
        alpha2,
        alpha2_single,
        alpha2_stderr,
        lyapunov,
        alpha: (alpha1 - alpha2) / lyapunov,
        depth,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub n: u32,
    /// `ℓ_n`, the number of construction levels behind scale `2^{-n}`.
    pub depth: usize,
    pub separation: f64,
    pub verdict: OverlapVerdict,
    /// `log2 Δ / n`, `-∞` when the offsets coincide.
    pub log2_sep_rate: f64,
    /// `H(ν^{(ω,ℓ_n)}, D_{(q+1)n}) / n`.
    pub entropy: f64,
    /// `(1/n) Σ_{i<=ℓ_n} H(p_{ω_i})`.
    pub sdim: f64,
    /// `Δ > 2^{-(q+1)n}`.
    pub separated_at_cell: bool,
    /// Every word's offset falls in its own cell of level `(q+1)n`.
    pub distinct_cells: bool,
    /// `entropy == sdim` within `1e-10`.
    pub equality: bool,
}

/// Per-level separation trajectory together with the entropy check: when
/// the offsets are further apart than the cell width, the entropy at the
/// finer level equals the entropy of the word distribution.
pub fn concentration_diagnostic<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    scales: &[u32],
    q: u32,
) -> Result<Vec<ConcentrationRow>> {
    check_scales(scales)?;
    let mut rows = Vec::with_capacity(scales.len());
    for &n in scales {
        let level = (q + 1) * n;
        if level > MAX_LEVEL {
            return Err(Error::arg(format!(
                "cell level (q+1)n = {level} above {MAX_LEVEL}"
            )));
        }
        let depth = scale_index(model, env, n)?;
        let sep = separation(model, env, depth)?;
        let gap = sep.value().to_f64();
        let log2_sep_rate = match sep.verdict {
            OverlapVerdict::Separated => gap.log2() / n as f64,
            _ => f64::NEG_INFINITY,
        };
        let nu = truncated_measure(model, env, depth)?;
        let entropy = dyadic_entropy(&nu, level)? / n as f64;
        let symbols = model.realize(env, depth)?;
        let sdim = symbols
            .iter()
            .map(|&i| model.system(i).prob_entropy())
            .sum::<f64>()
            / n as f64;
        let cell = S::dyadic(1, level);
        let separated_at_cell = sep.verdict == OverlapVerdict::Separated && sep.value() > cell;
        let distinct_cells = dyadic_cells(&nu, level)?.len() as u128 == sep.words;
        rows.push(ConcentrationRow {
            n,
            depth,
            separation: gap,
            verdict: sep.verdict,
            log2_sep_rate,
            entropy,
            sdim,
            separated_at_cell,
            distinct_cells,
            equality: (entropy - sdim).abs() <= 1e-10,
        });
    }
    Ok(rows)
}
