//! Ionescu-Wainger frequency sets and heights.
//!
//! Elements of `S_rho(N)` are the single product of the small prime powers
//! together with the large prime powers, so membership of a denominator `q`
//! is decided from its factorization: every prime power of `q` must fit under
//! `N`, and the number of distinct elements needed must not exceed `R`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::arith::{factorize, gcd, primes_up_to};
use crate::error::{Error, Result};
use crate::expsums::ReducedFraction;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IWConfig {
    pub rho: f64,
    pub r: u32,
    pub n: u64,
    pub q_cap: Option<u64>,
}

pub fn r_of(rho: f64) -> u32 {
    (2.0 / rho).floor() as u32 + 1
}

impl IWConfig {
    pub fn new(rho: f64, n: u64, q_cap: Option<u64>) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidConfig(format!("rho = {rho} must lie in (0, 1)")));
        }
        let r = r_of(rho);
        let min_n = 1u64.checked_shl(r).unwrap_or(u64::MAX);
        if r >= 64 || n < min_n {
            return Err(Error::InvalidConfig(format!("N = {n} is below 2^R = 2^{r}")));
        }
        Ok(Self { rho, r, n, q_cap })
    }

    fn small_prime(&self, p: u64) -> bool {
        is_small(self.rho, self.n, p)
    }
}

fn is_small(rho: f64, n: u64, p: u64) -> bool {
    // p <= N^(rho/2), compared in logs with a guard for exact powers.
    (p as f64).ln() <= 0.5 * rho * (n as f64).ln() + 1e-12
}

/// Largest `e` with `p^e <= n`.
pub fn max_exponent(p: u64, n: u64) -> u32 {
    let mut e = 0;
    let mut v = 1u64;
    while let Some(next) = v.checked_mul(p).filter(|&x| x <= n) {
        v = next;
        e += 1;
    }
    e
}

/// `S_rho(N)`, sorted ascending. The small-prime product saturates at `u128::MAX`.
pub fn iw_base_set(cfg: &IWConfig) -> BTreeSet<u128> {
    let mut out = BTreeSet::new();
    let mut product: u128 = 1;
    for p in primes_up_to(cfg.n) {
        let pe = (p as u128).pow(max_exponent(p, cfg.n));
        if cfg.small_prime(p) {
            product = product.saturating_mul(pe);
        } else {
            out.insert(pe);
        }
    }
    out.insert(product);
    out
}

/// Whether `q` divides a product of at most `R` distinct elements of `S_rho(N)`.
pub fn denominator_in_sigma(rho: f64, n: u64, q: u64) -> bool {
    let r = r_of(rho);
    let mut needs_small = false;
    let mut large = 0u32;
    for (p, e) in factorize(q) {
        if p > n || e > max_exponent(p, n) {
            return false;
        }
        if is_small(rho, n, p) {
            needs_small = true;
        } else {
            large += 1;
        }
    }
    large + needs_small as u32 <= r
}

/// Reduced fractions of `Sigma_{<=R}(N)` with denominators at most `q_cap`.
pub fn iw_frequencies(cfg: &IWConfig) -> Result<Vec<ReducedFraction>> {
    let cap = cfg
        .q_cap
        .ok_or_else(|| Error::InvalidConfig("enumeration needs a denominator cap".into()))?;
    let mut out = Vec::new();
    for q in 1..=cap {
        if denominator_in_sigma(cfg.rho, cfg.n, q) {
            out.extend((0..q).filter(|&a| gcd(a, q) == 1).map(|a| ReducedFraction { a, q }));
        }
    }
    Ok(out)
}

/// Smallest dyadic `N >= 2^R` with `frac` in `Sigma_{<=R}(N)`.
pub fn iw_height(rho: f64, frac: ReducedFraction) -> Result<u64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidConfig(format!("rho = {rho} must lie in (0, 1)")));
    }
    let r = r_of(rho);
    let mut j = r;
    while j < 64 {
        let n = 1u64 << j;
        if denominator_in_sigma(rho, n, frac.q) {
            return Ok(n);
        }
        j += 1;
    }
    Err(Error::ResourceLimit { what: "height exponent", requested: j as u64, limit: 63 })
}
