use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// `P(x) = c_0 + c_1 x + ... + c_d x^d` with integer coefficients and `d >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct IntPolynomial {
    coeffs: Vec<i64>,
}

impl IntPolynomial {
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidInput("polynomial must have degree at least 1".into()));
        }
        if *coeffs.last().unwrap() == 0 {
            return Err(Error::InvalidInput("leading coefficient must be nonzero".into()));
        }
        Ok(Self { coeffs })
    }

    /// `P(x) = x`.
    pub fn identity() -> Self {
        Self { coeffs: vec![0, 1] }
    }

    pub fn monomial(d: usize) -> Self {
        assert!(d >= 1);
        let mut coeffs = vec![0; d + 1];
        coeffs[d] = 1;
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Exact value, or an overflow error.
    pub fn eval_checked(&self, x: i128) -> Result<i128> {
        self.coeffs.iter().rev().try_fold(0i128, |acc, &c| {
            acc.checked_mul(x)
                .and_then(|v| v.checked_add(c as i128))
                .ok_or(Error::Overflow("polynomial evaluation"))
        })
    }

    /// `P(x) mod m` in `[0, m)`.
    pub fn eval_mod(&self, x: u64, m: u64) -> u64 {
        let m128 = m as u128;
        let x = x as u128 % m128;
        self.coeffs.iter().rev().fold(0u128, |acc, &c| {
            let c = (c as i128).rem_euclid(m as i128) as u128;
            (acc * x + c) % m128
        }) as u64
    }

    /// `P(x) mod 2^128`, two's complement.
    pub fn eval_wrapping(&self, x: u64) -> u128 {
        let x = x as u128;
        self.coeffs
            .iter()
            .rev()
            .fold(0u128, |acc, &c| acc.wrapping_mul(x).wrapping_add(c as i128 as u128))
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
    }

    /// Sum of `|c_k| * m^k`, a bound for `|P(m u)|` on `u` in `[0, 1]`.
    pub fn abs_bound(&self, m: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * m + (c as f64).abs())
    }
}

impl FromStr for IntPolynomial {
    type Err = Error;

    /// Parses `c0,c1,...,cd`, constant term first.
    fn from_str(s: &str) -> Result<Self> {
        let coeffs = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|e| Error::InvalidInput(format!("bad coefficient {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let p: IntPolynomial = "1,-2,3".parse().unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval_checked(5).unwrap(), 1 - 10 + 75);
        assert_eq!(p.eval_mod(5, 7), 66 % 7);
        assert_eq!(p.eval_wrapping(5), 66);
        assert_eq!(p.to_string(), "1,-2,3");
        assert!("1".parse::<IntPolynomial>().is_err());
        assert!("1,0".parse::<IntPolynomial>().is_err());
        assert!("1,x".parse::<IntPolynomial>().is_err());
    }

    #[test]
    fn negative_values_reduce() {
        let p = IntPolynomial::new(vec![-7, 0, -1]).unwrap();
        assert_eq!(p.eval_mod(3, 5), (-16i64).rem_euclid(5) as u64);
        assert_eq!(p.eval_wrapping(3) as i128, -16);
        assert!(IntPolynomial::monomial(9).eval_checked(1 << 20).is_err());
    }
}
