//! Constants of the imaginary quadratic field Q(sqrt(-n)).

use serde::Serialize;

use crate::arith::factorize;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuadField {
    pub n: u64,
    /// Squarefree part, `n = a * b^2`.
    pub a: u64,
    pub b: u64,
    pub n0: u64,
    /// `omega^2 = t * omega - mu`.
    pub omega_trace: i64,
    pub omega_norm: i64,
    pub disc: i64,
    pub class_number: u64,
    #[serde(rename = "Rn")]
    pub rn: u64,
}

impl QuadField {
    pub fn new(n: u64) -> Result<Self> {
        build_field(n as i64)
    }

    /// `N(u + v*omega) = u^2 + t*u*v + mu*v^2`, with overflow detection.
    pub fn norm_form(&self, u: i64, v: i64) -> Result<u64> {
        norm_form(self, u, v)
    }

    /// Norm form reduced mod `m`; never overflows.
    #[inline]
    pub fn norm_mod(&self, u: u64, v: u64, m: u64) -> u64 {
        let m = m as u128;
        let (u, v) = (u as u128 % m, v as u128 % m);
        let t = self.omega_trace as u128;
        let mu = self.omega_norm as u128 % m;
        ((u * u % m + t * (u * v % m) + mu * (v * v % m) % m) % m) as u64
    }
}

pub fn build_field(n: i64) -> Result<QuadField> {
    if n <= 0 {
        return Err(Error::InvalidInput(format!("n must be positive, got {n}")));
    }
    let n = n as u64;
    let (mut a, mut b) = (1u64, 1u64);
    for (p, e) in factorize(n) {
        b *= p.pow(e / 2);
        if e % 2 == 1 {
            a *= p;
        }
    }
    let (n0, t, mu, disc) = if a % 4 == 3 {
        (2 * b, 1i64, (1 + a as i64) / 4, -(a as i64))
    } else {
        (b, 0i64, a as i64, -4 * a as i64)
    };
    debug_assert_eq!(disc, t * t - 4 * mu);
    let h = class_number(disc)?;
    Ok(QuadField {
        n,
        a,
        b,
        n0,
        omega_trace: t,
        omega_norm: mu,
        disc,
        class_number: h,
        rn: 2 * h,
    })
}

pub fn norm_form(f: &QuadField, u: i64, v: i64) -> Result<u64> {
    let (u, v) = (u as i128, v as i128);
    let t = f.omega_trace as i128;
    let mu = f.omega_norm as i128;
    let uu = u.checked_mul(u);
    let uv = u.checked_mul(v).and_then(|x| x.checked_mul(t));
    let vv = v.checked_mul(v).and_then(|x| x.checked_mul(mu));
    let total = uu
        .zip(uv)
        .and_then(|(a, b)| a.checked_add(b))
        .zip(vv)
        .and_then(|(a, b)| a.checked_add(b))
        .ok_or(Error::Overflow("norm_form"))?;
    u64::try_from(total).map_err(|_| Error::Overflow("norm_form"))
}

/// Number of reduced primitive forms `(A, B, C)` with `B^2 - 4AC = disc`.
pub fn class_number(disc: i64) -> Result<u64> {
    if disc >= 0 || !matches!(disc.rem_euclid(4), 0 | 1) {
        return Err(Error::InvalidDiscriminant(disc));
    }
    Ok(reduced_forms(disc).len() as u64)
}

/// All reduced primitive forms of the given negative discriminant.
pub fn reduced_forms(disc: i64) -> Vec<(i64, i64, i64)> {
    let d = -disc;
    let mut out = Vec::new();
    // Reduced forms satisfy 3A^2 <= |disc|.
    let mut a = 1i64;
    while 3 * a * a <= d {
        for b in -a..=a {
            let num = b * b - disc;
            if num % (4 * a) != 0 {
                continue;
            }
            let c = num / (4 * a);
            if c < a {
                continue;
            }
            if b < 0 && (-b == a || a == c) {
                continue;
            }
            let g = crate::arith::gcd(crate::arith::gcd(a as u64, b.unsigned_abs()), c as u64);
            if g == 1 {
                out.push((a, b, c));
            }
        }
        a += 1;
    }
    out
}
