//! Finitely supported probability measures on the line.

mod csv_io;
mod entropy;

pub use csv_io::{format_f64, read_csv, write_csv};
pub use entropy::{
    component, component_expectation, components, conditional_entropy, dyadic_cells,
    dyadic_entropy, ComponentKind, DyadicCell, MAX_LEVEL,
};

use crate::error::{check_cap, Error, Result};
use crate::scalar::Scalar;

/// Float mode drops atoms lighter than this and renormalises.
pub const DUST: f64 = 1e-15;

/// Default tolerance on the total mass of user-supplied weights.
pub const LOAD_MASS_TOL: f64 = 1e-9;

const RENORM_SLACK: f64 = 1e-13;

/// Atoms sorted by position, no two at the same position, weights positive
/// and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomMeasure<S> {
    positions: Vec<S>,
    weights: Vec<S>,
    merge_tol: f64,
}

impl<S: Scalar> AtomMeasure<S> {
    pub fn dirac(x: S) -> Self {
        AtomMeasure {
            positions: vec![x],
            weights: vec![S::one()],
            merge_tol: 0.0,
        }
    }

    /// Checks the weights, then sorts and merges. `merge_tol` is ignored in
    /// exact mode.
    pub fn from_atoms(atoms: Vec<(S, S)>, merge_tol: f64) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        let mut total = S::zero();
        for (x, w) in &atoms {
            if !x.to_f64().is_finite() {
                return Err(Error::InvalidMeasure(format!("position {x} is not finite")));
            }
            if *w <= S::zero() || !w.to_f64().is_finite() {
                return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
            }
            total = total + w.clone();
        }
        if !total.close(&S::one(), LOAD_MASS_TOL) {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        let (positions, weights) = atoms.into_iter().unzip();
        Ok(Self::assemble(positions, weights, merge_tol))
    }

    /// Sorts, merges coincident atoms, drops float dust and renormalises.
    pub(crate) fn assemble(positions: Vec<S>, weights: Vec<S>, merge_tol: f64) -> Self {
        let tol = if S::EXACT { 0.0 } else { merge_tol };
        let mut idx: Vec<usize> = (0..positions.len()).collect();
        idx.sort_by(|&a, &b| {
            positions[a]
                .partial_cmp(&positions[b])
                .expect("finite positions")
                .then(a.cmp(&b))
        });
        let mut px: Vec<S> = Vec::with_capacity(idx.len());
        let mut pw: Vec<S> = Vec::with_capacity(idx.len());
        for i in idx {
            let x = &positions[i];
            let w = &weights[i];
            match px.last() {
                Some(anchor) if x.close(anchor, tol) => {
                    let last = pw.last_mut().unwrap();
                    *last = last.clone() + w.clone();
                }
                _ => {
                    px.push(x.clone());
                    pw.push(w.clone());
                }
            }
        }
        let mut m = AtomMeasure {
            positions: px,
            weights: pw,
            merge_tol: tol,
        };
        if !S::EXACT {
            m.drop_dust();
        }
        m
    }

    fn drop_dust(&mut self) {
        let keep: Vec<bool> = self.weights.iter().map(|w| w.to_f64() >= DUST).collect();
        if keep.iter().all(|&k| k) {
            self.renormalize();
            return;
        }
        if !keep.iter().any(|&k| k) {
            return;
        }
        let dropped: f64 = self
            .weights
            .iter()
            .zip(&keep)
            .filter(|(_, k)| !**k)
            .map(|(w, _)| w.to_f64())
            .sum();
        log::debug!("dropping {dropped:e} of mass in atoms lighter than {DUST:e}");
        let mut i = 0;
        self.positions.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        let mut i = 0;
        self.weights.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        self.renormalize();
    }

    fn renormalize(&mut self) {
        let total = self.total_mass();
        // float sums that are already one up to rounding are left alone so
        // that written weights read back unchanged
        if !total.close(&S::one(), RENORM_SLACK) {
            for w in &mut self.weights {
                *w = w.clone() / total.clone();
            }
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[S] {
        &self.positions
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&S, &S)> {
        self.positions.iter().zip(&self.weights)
    }

    pub fn merge_tol(&self) -> f64 {
        self.merge_tol
    }

    pub fn with_merge_tol(mut self, tol: f64) -> Self {
        self.merge_tol = if S::EXACT { 0.0 } else { tol };
        self
    }

    pub fn total_mass(&self) -> S {
        self.weights.iter().cloned().fold(S::zero(), |a, b| a + b)
    }

    /// Image under `x -> ratio * x + offset`.
    pub fn push_affine(&self, ratio: &S, offset: &S) -> Self {
        let positions = self
            .positions
            .iter()
            .map(|x| ratio.clone() * x.clone() + offset.clone())
            .collect();
        Self::assemble(positions, self.weights.clone(), self.merge_tol)
    }

    /// Convolution, merging atoms that land on the same position.
    pub fn convolve(&self, other: &Self, max_atoms: usize) -> Result<Self> {
        check_cap(
            "atoms",
            (self.len() as u128) * (other.len() as u128),
            max_atoms,
        )?;
        let mut positions = Vec::with_capacity(self.len() * other.len());
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (x, w) in self.atoms() {
            for (y, v) in other.atoms() {
                positions.push(x.clone() + y.clone());
                weights.push(w.clone() * v.clone());
            }
        }
        let tol = self.merge_tol.max(other.merge_tol);
        Ok(Self::assemble(positions, weights, tol))
    }

    /// Total variation distance, half the `ℓ¹` distance of the weights after
    /// matching positions (within the merge tolerance in float mode).
    pub fn tv(&self, other: &Self) -> f64 {
        let tol = self.merge_tol.max(other.merge_tol);
        let (mut i, mut j) = (0, 0);
        let mut acc = S::zero();
        while i < self.len() || j < other.len() {
            if j == other.len() {
                acc = acc + self.weights[i].clone();
                i += 1;
            } else if i == self.len() {
                acc = acc + other.weights[j].clone();
                j += 1;
            } else if self.positions[i].close(&other.positions[j], tol) {
                acc = acc + (self.weights[i].clone() - other.weights[j].clone()).abs();
                i += 1;
                j += 1;
            } else if self.positions[i] < other.positions[j] {
                acc = acc + self.weights[i].clone();
                i += 1;
            } else {
                acc = acc + other.weights[j].clone();
                j += 1;
            }
        }
        acc.to_f64() / 2.0
    }

    /// Moves every atom to the left end of its level-`m` dyadic cell.
    pub fn quantize(&self, m: u32) -> Self {
        let positions = self
            .positions
            .iter()
            .map(|x| S::dyadic(x.dyadic_floor(m).0, m))
            .collect();
        Self::assemble(positions, self.weights.clone(), self.merge_tol)
    }

    /// Exact equality of atoms (or within the merge tolerance in float mode).
    pub fn same_atoms(&self, other: &Self) -> bool {
        let tol = self.merge_tol.max(other.merge_tol);
        self.len() == other.len()
            && self
                .atoms()
                .zip(other.atoms())
                .all(|((x, w), (y, v))| x.close(y, tol) && w.close(v, 1e-12))
    }

    /// Smallest and largest positions.
    pub fn support_hull(&self) -> (S, S) {
        (
            self.positions[0].clone(),
            self.positions[self.len() - 1].clone(),
        )
    }

    pub fn to_f64(&self) -> AtomMeasure<f64> {
        AtomMeasure::assemble(
            self.positions.iter().map(|x| x.to_f64()).collect(),
            self.weights.iter().map(|w| w.to_f64()).collect(),
            self.merge_tol,
        )
    }
}
