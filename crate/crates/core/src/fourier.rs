//! Fourier transform `ξ -> ∫ e^{iπξx} dη(x)` of the random measure.
//!
//! The transform of an infinite convolution is the product of the factor
//! transforms; truncating the product at depth `d` moves the value by at
//! most `π|ξ|` times the tail radius.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::approx::{scale_index, tail_radius, truncated_measure};
use crate::error::{Error, Result};
use crate::measure::AtomMeasure;
use crate::model::{Environment, Model};
use crate::scalar::Scalar;

/// Default accuracy target for the product route.
pub const DEFAULT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct CharValue {
    pub value: Complex64,
    pub depth: usize,
    /// Bound on `|η̂(ξ) - value|`.
    pub error_bound: f64,
}

/// `∏_{n<=depth} Σ_j p_j e^{iπ λ_{ω_1}⋯λ_{ω_{n-1}} t_j ξ}`.
pub fn char_product<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    xi: f64,
    depth: usize,
) -> Result<CharValue> {
    let symbols = model.realize(env, depth)?;
    let value = product_along(model, &symbols, xi);
    let tail = tail_radius(model, env, depth)?.to_f64();
    Ok(CharValue {
        value,
        depth,
        error_bound: std::f64::consts::PI * xi.abs() * tail,
    })
}

/// `π a b`, reduced modulo `2π` before rounding so that large frequencies
/// keep their phase accuracy.
fn phase(a: f64, b: f64) -> f64 {
    let p = a * b;
    let err = a.mul_add(b, -p);
    std::f64::consts::PI * (p % 2.0 + err)
}

fn product_along<S: Scalar>(model: &Model<S>, symbols: &[usize], xi: f64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut scale = 1.0f64;
    for &i in symbols {
        let f = model.system(i);
        let mut factor = Complex64::new(0.0, 0.0);
        for (t, p) in f.translations.iter().zip(&f.probs) {
            factor += p.to_f64() * Complex64::from_polar(1.0, phase(scale * t.to_f64(), xi));
        }
        acc *= factor;
        scale *= f.ratio.to_f64();
    }
    acc
}

/// `Σ_x w_x e^{iπxξ}` for a finite measure.
pub fn char_atoms<S: Scalar>(mu: &AtomMeasure<S>, xi: f64) -> Complex64 {
    mu.atoms()
        .map(|(x, w)| w.to_f64() * Complex64::from_polar(1.0, phase(x.to_f64(), xi)))
        .sum()
}

/// Depth `ℓ_m` with `m = ⌈log2(π|ξ|/ε)⌉`, so the truncation error is at
/// most `ε`.
pub fn depth_for<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    xi: f64,
    eps: f64,
) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::arg("accuracy must be positive"));
    }
    let m = (std::f64::consts::PI * xi.abs() / eps)
        .log2()
        .ceil()
        .max(0.0) as u32;
    scale_index(model, env, m)
}

/// `char_product` at the depth that guarantees accuracy `eps`.
pub fn char_value<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    xi: f64,
    eps: f64,
) -> Result<CharValue> {
    let depth = depth_for(model, env, xi, eps)?;
    char_product(model, env, xi, depth)
}

#[derive(Debug, Clone, Copy)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub sup_modulus: f64,
    pub depth: usize,
}

impl Band {
    pub fn center(&self) -> f64 {
        (self.lo * self.hi).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct DecayScan {
    pub bands: Vec<Band>,
    /// Minus the slope of `log sup|η̂|` against `log ξ`.
    pub sigma_hat: f64,
    pub intercept: f64,
}

/// Least-squares slope and intercept.
pub(crate) fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Sup of `|η̂|` over geometric bands between 1 and `xi_max`, each sampled
/// on `samples` evenly spaced points, and the fitted decay exponent.
pub fn decay_scan<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    xi_max: f64,
    bands: usize,
    samples: usize,
) -> Result<DecayScan> {
    if !(xi_max > 1.0) || bands < 2 || samples < 2 {
        return Err(Error::arg(
            "need xi_max > 1, at least 2 bands and 2 samples per band",
        ));
    }
    let depth = depth_for(model, env, xi_max, DEFAULT_EPS)?;
    let symbols = model.realize(env, depth)?;
    let edges: Vec<f64> = (0..=bands)
        .map(|b| xi_max.powf(b as f64 / bands as f64))
        .collect();
    let rows: Vec<Band> = (0..bands)
        .into_par_iter()
        .map(|b| {
            let (lo, hi) = (edges[b], edges[b + 1]);
            let sup = (0..samples)
                .map(|s| lo + (hi - lo) * s as f64 / (samples - 1) as f64)
                .map(|xi| product_along(model, &symbols, xi).norm())
                .fold(0.0, f64::max);
            Band {
                lo,
                hi,
                sup_modulus: sup,
                depth,
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|b| b.center().ln()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|b| b.sup_modulus.max(1e-300).ln())
        .collect();
    let (slope, intercept) = fit_line(&xs, &ys);
    Ok(DecayScan {
        bands: rows,
        sigma_hat: -slope,
        intercept,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct PowerRow {
    pub n: u32,
    pub xi: f64,
    pub modulus: f64,
    pub depth: usize,
    /// Depth of the cross-check between the two routes.
    pub check_depth: usize,
    /// `|char_product - char_atoms|` at `check_depth`.
    pub route_gap: f64,
}

/// `|η̂(θ^n)|` for `n = 1..=n_max`, each cross-checked against the atom
/// route at the deepest truncation holding at most `check_atoms` atoms.
pub fn pisot_scan<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    theta: f64,
    n_max: u32,
    check_atoms: usize,
) -> Result<Vec<PowerRow>> {
    let fm: Model<f64> = model.convert()?;
    let mut check_depth = 0;
    let mut check_nu = truncated_measure(&fm, env, 0)?;
    loop {
        let next = truncated_measure(&fm, env, check_depth + 1)?;
        if next.len() > check_atoms || check_depth >= 64 {
            break;
        }
        check_nu = next;
        check_depth += 1;
    }
    let check_symbols = fm.realize(env, check_depth)?;
    (1..=n_max)
        .map(|n| {
            let xi = theta.powi(n as i32);
            let v = char_value(&fm, env, xi, DEFAULT_EPS)?;
            let a = product_along(&fm, &check_symbols, xi);
            let b = char_atoms(&check_nu, xi);
            Ok(PowerRow {
                n,
                xi,
                modulus: v.value.norm(),
                depth: v.depth,
                check_depth,
                route_gap: (a - b).norm(),
            })
        })
        .collect()
}

/// `‖x‖`, the distance to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round_ties_even()).abs()
}

#[derive(Debug, Clone)]
pub struct CosBound {
    /// Constant in `modulus(y) <= 1 - c0 ‖y‖²` for the designated pair.
    pub c0: f64,
    pub system: usize,
    pub levels: usize,
    /// Levels where the per-factor inequality failed.
    pub factor_failures: usize,
    pub product_modulus: f64,
    /// `∏ (1 - c0 ‖y_n‖²)` over the designated levels.
    pub product_bound: f64,
}

impl CosBound {
    pub fn holds(&self) -> bool {
        self.factor_failures == 0 && self.product_modulus <= self.product_bound + 1e-12
    }
}

fn pair_modulus(p1: f64, p2: f64, rest: f64, y: f64) -> f64 {
    (Complex64::new(p1, 0.0) + Complex64::from_polar(p2, std::f64::consts::PI * y)).norm() + rest
}

/// Estimates the constant `c0` for the designated pair of a system by
/// minimising over a grid, then shrinks it by 0.1% to cover off-grid points.
pub fn estimate_c0(p1: f64, p2: f64, rest: f64) -> f64 {
    const GRID: usize = 100_000;
    let mut best = std::f64::consts::PI.powi(2) * p1 * p2 / (2.0 * (p1 + p2));
    for g in 1..2 * GRID {
        let y = g as f64 / GRID as f64;
        let d = dist_to_int(y);
        if d < 1e-9 {
            continue;
        }
        let ratio = (1.0 - pair_modulus(p1, p2, rest, y)) / (d * d);
        best = best.min(ratio);
    }
    best * 0.999
}

/// Checks the per-factor cosine bound at every level using the designated
/// system and compares the product of the bounds with `|η̂|` at depth
/// `depth`.
pub fn cos_lower_bound_check<S: Scalar>(
    model: &Model<S>,
    env: &Environment,
    xi: f64,
    depth: usize,
) -> Result<CosBound> {
    let (sys, a, b) = model
        .designated_system()
        .ok_or_else(|| Error::model("no system has two distinct translations"))?;
    let f = model.system(sys);
    let (p1, p2) = (f.probs[a].to_f64(), f.probs[b].to_f64());
    let rest = 1.0 - p1 - p2;
    let d = f.translations[b].to_f64() - f.translations[a].to_f64();
    let c0 = estimate_c0(p1, p2, rest);
    let symbols = model.realize(env, depth)?;
    let mut scale = 1.0;
    let mut levels = 0;
    let mut failures = 0;
    let mut bound = 1.0;
    for &i in &symbols {
        if i == sys {
            let y = scale * xi * d;
            let actual = product_along(model, &[i], scale * xi).norm();
            let per = 1.0 - c0 * dist_to_int(y).powi(2);
            if actual > per + 1e-12 {
                failures += 1;
            }
            bound *= per;
            levels += 1;
        }
        scale *= model.system(i).ratio.to_f64();
    }
    let product_modulus = product_along(model, &symbols, xi).norm();
    Ok(CosBound {
        c0,
        system: sys,
        levels,
        factor_failures: failures,
        product_modulus,
        product_bound: bound,
    })
}
