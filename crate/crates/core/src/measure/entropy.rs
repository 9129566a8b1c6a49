//! Entropy with respect to dyadic partitions, and components.
//!
//! Cells are the half-open intervals `[j/2^n, (j+1)/2^n)`. Entropies are in
//! bits.

use std::ops::Range;

use super::AtomMeasure;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Deepest level accepted; keeps `x · 2^n` inside `i64`.
pub const MAX_LEVEL: u32 = 52;

#[derive(Debug, Clone)]
pub struct DyadicCell<S> {
    pub index: i64,
    /// Range of atom indices inside the cell.
    pub atoms: Range<usize>,
    pub mass: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    /// `μ_I`, the normalised restriction to the cell.
    Raw,
    /// `μ^I`, the restriction pushed onto `[0,1)`.
    Rescaled,
}

fn check_level(n: u32) -> Result<()> {
    if n > MAX_LEVEL {
        Err(Error::arg(format!("dyadic level {n} above {MAX_LEVEL}")))
    } else {
        Ok(())
    }
}

/// Cells of level `n` carrying mass, left to right.
pub fn dyadic_cells<S: Scalar>(mu: &AtomMeasure<S>, n: u32) -> Result<Vec<DyadicCell<S>>> {
    check_level(n)?;
    let mut cells: Vec<DyadicCell<S>> = Vec::new();
    let mut snapped = 0usize;
    for (k, (x, w)) in mu.atoms().enumerate() {
        let (j, s) = x.dyadic_floor(n);
        snapped += s as usize;
        match cells.last_mut() {
            Some(c) if c.index == j => {
                c.atoms.end = k + 1;
                c.mass = c.mass.clone() + w.clone();
            }
            _ => cells.push(DyadicCell {
                index: j,
                atoms: k..k + 1,
                mass: w.clone(),
            }),
        }
    }
    if snapped > 0 {
        log::debug!("{snapped} atoms snapped onto level-{n} boundaries");
    }
    Ok(cells)
}

fn plogp<S: Scalar>(mass: &S) -> f64 {
    let p = mass.to_f64();
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// `H(μ, D_n)`.
pub fn dyadic_entropy<S: Scalar>(mu: &AtomMeasure<S>, n: u32) -> Result<f64> {
    Ok(dyadic_cells(mu, n)?.iter().map(|c| plogp(&c.mass)).sum())
}

/// `H(μ, D_m | D_n) = Σ_{I ∈ D_n} μ(I) H(μ_I, D_m)` for `m >= n`.
pub fn conditional_entropy<S: Scalar>(mu: &AtomMeasure<S>, m: u32, n: u32) -> Result<f64> {
    if m < n {
        return Err(Error::arg(format!(
            "conditional entropy needs m >= n, got m={m}, n={n}"
        )));
    }
    check_level(m)?;
    let mut total = 0.0;
    for cell in dyadic_cells(mu, n)? {
        let part = restrict(mu, &cell);
        total += cell.mass.to_f64() * dyadic_entropy(&part, m)?;
    }
    Ok(total)
}

fn restrict<S: Scalar>(mu: &AtomMeasure<S>, cell: &DyadicCell<S>) -> AtomMeasure<S> {
    let positions = mu.positions()[cell.atoms.clone()].to_vec();
    let weights = mu.weights()[cell.atoms.clone()]
        .iter()
        .map(|w| w.clone() / cell.mass.clone())
        .collect();
    AtomMeasure {
        positions,
        weights,
        merge_tol: mu.merge_tol(),
    }
}

fn rescale<S: Scalar>(part: AtomMeasure<S>, n: u32, j: i64) -> AtomMeasure<S> {
    let shift = S::from_int(j);
    let positions = part
        .positions
        .iter()
        .map(|x| x.mul_pow2(n as i32) - shift.clone())
        .collect();
    AtomMeasure {
        positions,
        weights: part.weights,
        merge_tol: part.merge_tol * (n as f64).exp2(),
    }
}

fn make_component<S: Scalar>(
    mu: &AtomMeasure<S>,
    cell: &DyadicCell<S>,
    n: u32,
    kind: ComponentKind,
) -> AtomMeasure<S> {
    let part = restrict(mu, cell);
    match kind {
        ComponentKind::Raw => part,
        ComponentKind::Rescaled => rescale(part, n, cell.index),
    }
}

/// The level-`n` component at `x`; fails when the cell of `x` has no mass.
pub fn component<S: Scalar>(
    mu: &AtomMeasure<S>,
    x: &S,
    n: u32,
    kind: ComponentKind,
) -> Result<AtomMeasure<S>> {
    let (j, _) = x.dyadic_floor(n);
    let cell = dyadic_cells(mu, n)?
        .into_iter()
        .find(|c| c.index == j)
        .ok_or_else(|| Error::arg(format!("the level-{n} cell {j} carries no mass")))?;
    Ok(make_component(mu, &cell, n, kind))
}

/// Every level-`n` component with its cell mass.
pub fn components<S: Scalar>(
    mu: &AtomMeasure<S>,
    n: u32,
    kind: ComponentKind,
) -> Result<Vec<(DyadicCell<S>, AtomMeasure<S>)>> {
    Ok(dyadic_cells(mu, n)?
        .into_iter()
        .map(|c| {
            let comp = make_component(mu, &c, n, kind);
            (c, comp)
        })
        .collect())
}

/// `E_{n <= i <= n+m} [f(component at level i)]`, where `x` is drawn from
/// `μ` and `i` uniformly from the levels.
pub fn component_expectation<S: Scalar, F>(
    mu: &AtomMeasure<S>,
    levels: std::ops::RangeInclusive<u32>,
    kind: ComponentKind,
    mut f: F,
) -> Result<f64>
where
    F: FnMut(&AtomMeasure<S>) -> f64,
{
    let count = levels.clone().count();
    if count == 0 {
        return Err(Error::arg("empty level range"));
    }
    let mut total = 0.0;
    for i in levels {
        for (cell, comp) in components(mu, i, kind)? {
            total += cell.mass.to_f64() * f(&comp);
        }
    }
    Ok(total / count as f64)
}
