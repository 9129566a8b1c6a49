//! Thin wrapper over `astro_float` for the few operations the traces need.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;

pub struct Precise {
    pub bits: usize,
    cc: Consts,
}

impl Precise {
    /// Enough bits to hold numbers of size `2^magnitude` with about 128
    /// fractional bits to spare.
    pub fn for_magnitude(magnitude_log2: f64) -> Result<Self> {
        let need = magnitude_log2.max(0.0).ceil() as usize + 128;
        let bits = need.div_ceil(64) * 64;
        let cc = Consts::new().map_err(|e| Error::Overflow(format!("precision setup: {e:?}")))?;
        Ok(Precise { bits, cc })
    }

    pub fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.bits)
    }

    pub fn from_u128(&self, v: u128) -> BigFloat {
        let hi = BigFloat::from_word((v >> 64) as u64, self.bits);
        let lo = BigFloat::from_word(v as u64, self.bits);
        let shift = BigFloat::from_f64(2f64.powi(64), self.bits);
        hi.mul(&shift, self.bits, RM).add(&lo, self.bits, RM)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, RM)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.bits, RM, &mut self.cc)
    }

    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.bits, RM, &mut self.cc)
    }

    /// `exp(e ln a)` for positive `a`. `BigFloat::pow` can stall on some
    /// integral exponents, so it is not used.
    pub fn pow(&mut self, a: &BigFloat, e: &BigFloat) -> BigFloat {
        let ln_a = self.ln(a);
        let arg = self.mul(e, &ln_a);
        self.exp(&arg)
    }

    /// `a^e`, exact for integer `e` when `a^e` fits the precision.
    pub fn pow_f64(&mut self, a: &BigFloat, e: f64) -> BigFloat {
        if e >= 0.0 && e.fract() == 0.0 && e < 1e9 {
            a.powi(e as usize, self.bits, RM)
        } else {
            let ln_a = self.ln(a);
            let arg = self.mul(&self.num(e), &ln_a);
            self.exp(&arg)
        }
    }

    /// Nearest integer and the signed remainder `x - K`.
    pub fn round(&self, x: &BigFloat) -> Result<(u128, BigFloat)> {
        let half = self.num(0.5);
        let k = self.add(x, &half).floor();
        let eps = self.sub(x, &k);
        Ok((to_u128(&k)?, eps))
    }
}

pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    match x.as_raw_parts() {
        Some((m, _, s, e, _)) => {
            let top = *m.last().unwrap_or(&0);
            let v = top as f64 * 2f64.powi(e - 64);
            if s == Sign::Neg {
                -v
            } else {
                v
            }
        }
        None => f64::NAN,
    }
}

/// Non-negative integers up to `2^128 - 1`.
pub fn to_u128(x: &BigFloat) -> Result<u128> {
    if x.is_zero() {
        return Ok(0);
    }
    let (m, _, s, e, _) = x
        .as_raw_parts()
        .ok_or_else(|| Error::Overflow("not a finite number".into()))?;
    if s == Sign::Neg {
        return Err(Error::Overflow("negative integer".into()));
    }
    if e <= 0 {
        return Ok(0);
    }
    if e > 128 {
        return Err(Error::Overflow(format!(
            "integer with {e} bits exceeds 128"
        )));
    }
    let n = m.len();
    let hi = m[n - 1] as u128;
    let lo = if n >= 2 { m[n - 2] as u128 } else { 0 };
    let top = (hi << 64) | lo;
    Ok(top >> (128 - e as u32))
}
