//! Primes of the form u^2 + n v^2: membership, sieving, caching and residue statistics.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::arith::{
    factorize, gcd, inv_mod, is_prime, is_square, isqrt, kronecker, mul_mod, primes_up_to, sqrt_mod,
    KahanSum,
};
use crate::error::{Error, Result};
use crate::quadfield::QuadField;

pub const DEFAULT_MAX_LIMIT: u64 = 100_000_000;
const MAGIC: &[u8; 5] = b"PNSV1";
const SEGMENT: u64 = 1 << 18;
const ENUMERATION_CUTOFF: u64 = 500;

/// Exhaustive search over `v <= sqrt(p/n)`; always correct.
pub fn representation_by_search(n: u64, p: u64) -> Option<(u64, u64)> {
    let vmax = isqrt(p / n);
    (0..=vmax).find_map(|v| is_square(p - n * v * v).map(|u| (u, v)))
}

/// Cornacchia's algorithm for `u^2 + n v^2 = p`, assuming `-n` is a square mod `p`.
fn cornacchia(n: u64, p: u64) -> Option<(u64, u64)> {
    let minus_n = (p - n % p) % p;
    let mut r0 = sqrt_mod(minus_n, p)?;
    if r0 > p / 2 {
        r0 = p - r0;
    }
    let bound = isqrt(p);
    let (mut a, mut b) = (p, r0);
    while b > bound {
        (a, b) = (b, a % b);
    }
    let rest = p - b * b;
    if rest % n != 0 {
        return None;
    }
    is_square(rest / n).map(|v| (b, v))
}

/// Whether the prime `p` is `u^2 + n v^2` for integers u, v, with a witness.
pub fn is_member(n: u64, p: u64) -> Option<(u64, u64)> {
    if p == 2 || n % p == 0 || p < n {
        return representation_by_search(n, p);
    }
    if kronecker(-(n as i64), p) != 1 {
        return None;
    }
    cornacchia(n, p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PnSieve {
    pub n: u64,
    pub limit: u64,
    members: Vec<u64>,
    prefix_log: Vec<f64>,
}

impl PnSieve {
    /// Sieve without touching any cache.
    pub fn compute(n: u64, limit: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        let members = if limit < 2 { Vec::new() } else { sieve_members(n, limit) };
        Ok(Self::from_members(n, limit, members))
    }

    fn from_members(n: u64, limit: u64, members: Vec<u64>) -> Self {
        let mut acc = KahanSum::new();
        let prefix_log = members
            .iter()
            .map(|&p| {
                acc.add((p as f64).ln());
                acc.value()
            })
            .collect();
        Self { n, limit, members, prefix_log }
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    /// Members not exceeding `x`.
    pub fn members_up_to(&self, x: u64) -> &[u64] {
        &self.members[..self.members.partition_point(|&p| p <= x)]
    }

    pub fn count_up_to(&self, x: u64) -> usize {
        self.members.partition_point(|&p| p <= x)
    }

    fn check_range(&self, x: u64) -> Result<()> {
        if x > self.limit {
            return Err(Error::OutOfRange { what: "x", value: x, limit: self.limit });
        }
        Ok(())
    }

    /// Sum of `log p` over members `p <= x`.
    pub fn weighted_count(&self, x: u64) -> Result<f64> {
        self.check_range(x)?;
        let k = self.count_up_to(x);
        Ok(if k == 0 { 0.0 } else { self.prefix_log[k - 1] })
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let mut buf = Vec::with_capacity(5 + 8 * (self.members.len() + 4));
        buf.extend_from_slice(MAGIC);
        for v in [self.n, self.limit, self.members.len() as u64] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let mut checksum = 0u64;
        for &p in &self.members {
            buf.extend_from_slice(&p.to_le_bytes());
            checksum = checksum.wrapping_add(p);
        }
        buf.extend_from_slice(&checksum.to_le_bytes());
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&buf)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let bytes = fs::read(path)?;
        let bad = |why: &str| Error::CacheIntegrity(format!("{}: {why}", path.display()));
        if bytes.len() < 5 || &bytes[..5] != MAGIC {
            return Err(bad("bad magic"));
        }
        let word = |i: usize| -> Option<u64> {
            let start = 5 + 8 * i;
            bytes.get(start..start + 8).map(|s| u64::from_le_bytes(s.try_into().unwrap()))
        };
        let (n, limit, count) = match (word(0), word(1), word(2)) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(bad("truncated header")),
        };
        let expected = count
            .checked_add(4)
            .and_then(|w| w.checked_mul(8))
            .and_then(|b| b.checked_add(5))
            .ok_or_else(|| bad("count overflows"))?;
        if bytes.len() as u64 != expected {
            return Err(bad("length does not match count"));
        }
        let members: Vec<u64> = (0..count as usize).map(|i| word(3 + i).unwrap()).collect();
        let checksum = word(3 + count as usize).unwrap();
        if members.iter().fold(0u64, |a, &p| a.wrapping_add(p)) != checksum {
            return Err(bad("checksum mismatch"));
        }
        if members.windows(2).any(|w| w[0] >= w[1]) || members.last().is_some_and(|&p| p > limit) {
            return Err(bad("member list not sorted within limit"));
        }
        Ok(Self::from_members(n, limit, members))
    }
}

fn sieve_members(n: u64, limit: u64) -> Vec<u64> {
    let base = primes_up_to(isqrt(limit));
    let segments = limit.div_ceil(SEGMENT);
    let chunks: Vec<Vec<u64>> = (0..segments)
        .into_par_iter()
        .map(|s| {
            let lo = s * SEGMENT;
            let hi = ((s + 1) * SEGMENT).min(limit + 1);
            let mut composite = vec![false; (hi - lo) as usize];
            for &p in &base {
                let start = (p * p).max(lo.div_ceil(p) * p);
                let mut j = start;
                while j < hi {
                    composite[(j - lo) as usize] = true;
                    j += p;
                }
            }
            (lo.max(2)..hi)
                .filter(|&k| !composite[(k - lo) as usize] && is_member(n, k).is_some())
                .collect()
        })
        .collect();
    chunks.concat()
}

#[derive(Clone, Debug)]
pub struct SieveConfig {
    pub cache_dir: Option<PathBuf>,
    pub max_limit: u64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        Self { cache_dir: Some(PathBuf::from("./cache")), max_limit: DEFAULT_MAX_LIMIT }
    }
}

impl SieveConfig {
    pub fn uncached() -> Self {
        Self { cache_dir: None, ..Self::default() }
    }

    pub fn cache_path(&self, n: u64, limit: u64) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(format!("pn_{n}_{limit}.bin")))
    }
}

/// Builds the sieve, reusing and populating the on-disk cache when configured.
pub fn build_sieve(n: u64, x: u64, cfg: &SieveConfig) -> Result<PnSieve> {
    if x > cfg.max_limit {
        return Err(Error::ResourceLimit { what: "sieve limit", requested: x, limit: cfg.max_limit });
    }
    let path = cfg.cache_path(n, x);
    if let Some(path) = path.as_ref().filter(|p| p.exists()) {
        let s = PnSieve::read_cache(path)?;
        if s.n != n || s.limit != x {
            return Err(Error::CacheIntegrity(format!(
                "{} holds n={}, limit={}",
                path.display(),
                s.n,
                s.limit
            )));
        }
        return Ok(s);
    }
    let s = PnSieve::compute(n, x)?;
    if let Some(path) = path {
        s.write_cache(&path)?;
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DensityReport {
    pub unweighted_density: f64,
    pub weighted_density: f64,
    pub chebotarev_reference: f64,
}

pub fn density_report(sieve: &PnSieve, field: &QuadField, x: u64) -> Result<DensityReport> {
    let w = sieve.weighted_count(x)?;
    let xf = x as f64;
    Ok(DensityReport {
        unweighted_density: sieve.count_up_to(x) as f64 * xf.ln() / xf,
        weighted_density: w / xf,
        chebotarev_reference: 1.0 / (2.0 * field.class_number as f64),
    })
}

fn check_split_odd_prime(n: u64, p: u64) -> Result<()> {
    if p == 2 || n % p == 0 || kronecker(-(n as i64), p) != 1 {
        return Err(Error::NotApplicable(format!("prime {p} does not split as required for n = {n}")));
    }
    Ok(())
}

/// Number of pairs `(x, y)` mod `p` with `x^2 + n y^2 = b (mod p)`.
pub fn residue_form_count(n: u64, p: u64, b: i64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    check_split_odd_prime(n, p)?;
    if gcd(b.unsigned_abs(), p) != 1 {
        return Err(Error::InvalidResidue { b, modulus: p });
    }
    let b = b.rem_euclid(p as i64) as u64;
    let nn = n % p;
    if p <= ENUMERATION_CUTOFF {
        let mut count = 0;
        for x in 0..p {
            for y in 0..p {
                if (x * x + nn * (y * y % p)) % p == b {
                    count += 1;
                }
            }
        }
        return Ok(count);
    }
    // x^2 + n y^2 = (x - w y)(x + w y) with w^2 = -n; walk s = x - w y over units.
    let w = sqrt_mod(p - nn, p).expect("-n is a square mod p");
    let inv2 = inv_mod(2, p).unwrap();
    let inv2w = inv_mod(2 * w % p, p).unwrap();
    let mut count = 0;
    for s in 1..p {
        let t = mul_mod(b, inv_mod(s, p).unwrap(), p);
        let x = mul_mod((s + t) % p, inv2, p);
        let y = mul_mod((t + p - s) % p, inv2w, p);
        let lhs = (mul_mod(x, x, p) + mul_mod(nn, mul_mod(y, y, p), p)) % p;
        if lhs == b {
            count += 1;
        }
    }
    Ok(count)
}

/// Share of members up to `x` lying in the class `b mod q`.
pub fn pn_residue_density(sieve: &PnSieve, q: u64, b: i64, x: u64) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    for (p, _) in factorize(q) {
        check_split_odd_prime(sieve.n, p)?;
    }
    if gcd(b.unsigned_abs(), q) != 1 {
        return Err(Error::InvalidResidue { b, modulus: q });
    }
    sieve.check_range(x)?;
    let members = sieve.members_up_to(x);
    if members.is_empty() {
        return Err(Error::EmptyAverage(x));
    }
    let b = b.rem_euclid(q as i64) as u64;
    let hits = members.iter().filter(|&&p| p % q == b).count();
    Ok(hits as f64 / members.len() as f64)
}
