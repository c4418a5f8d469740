//! Fractional parts of `alpha * P(p)` computed in 128-bit fixed point.
//!
//! A double-precision product `alpha * p^d` near 1e21 keeps no fractional
//! digits at all, so `alpha` is converted exactly into a multiple of 2^-128
//! and multiplied against `P(p) mod 2^128` with wrapping integer arithmetic.

use std::f64::consts::TAU;

use num_complex::Complex64;

/// `alpha mod 1` as an integer multiple of 2^-128.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Phase128(pub u128);

impl Phase128 {
    pub fn from_f64(alpha: f64) -> Self {
        assert!(alpha.is_finite(), "frequency must be finite");
        if alpha == 0.0 {
            return Self(0);
        }
        let bits = alpha.abs().to_bits();
        let exp_bits = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if exp_bits == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        let shift = exp + 128;
        let v = if shift >= 128 {
            0
        } else if shift >= 0 {
            (mant as u128) << shift
        } else if shift > -64 {
            (mant >> (-shift)) as u128
        } else {
            0
        };
        Self(if alpha < 0.0 { v.wrapping_neg() } else { v })
    }

    /// Exact `floor(2^128 * (a mod q) / q)`.
    pub fn from_ratio(a: i64, q: u64) -> Self {
        assert!(q > 0);
        let a = (a as i128).rem_euclid(q as i128) as u128;
        let q = q as u128;
        let hi_num = a << 64;
        let hi = hi_num / q;
        let lo = ((hi_num % q) << 64) / q;
        Self((hi << 64) | lo)
    }

    /// Signed turn in `[-1/2, 1/2)` of `alpha * value`, `value` taken mod 2^128.
    #[inline]
    pub fn turn_times(self, value: u128) -> f64 {
        let prod = self.0.wrapping_mul(value) as i128;
        (prod >> 75) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn turn(self) -> f64 {
        self.turn_times(1)
    }
}

/// `e(t) = exp(2 pi i t)`.
#[inline]
pub fn e(t: f64) -> Complex64 {
    let (s, c) = (TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// Table of `e(k / m)` for `k` in `0..m`, exact at multiples of a quarter turn.
pub fn roots_of_unity(m: u64) -> Vec<Complex64> {
    (0..m)
        .map(|k| {
            if (4 * k) % m == 0 {
                return [
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.0, 1.0),
                    Complex64::new(-1.0, 0.0),
                    Complex64::new(0.0, -1.0),
                ][(4 * k / m) as usize];
            }
            // Reduce to a symmetric turn before evaluating for better accuracy.
            let k2 = if 2 * k > m { k as f64 - m as f64 } else { k as f64 };
            e(k2 / m as f64)
        })
        .collect()
}
