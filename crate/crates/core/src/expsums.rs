//! Complete exponential sums over the norm form and the arithmetic weights around them.

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{factorize, gcd, gcd_i64, inv_mod};
use crate::error::{Error, Result};
use crate::phase::roots_of_unity;
use crate::poly::IntPolynomial;
use crate::quadfield::QuadField;

const BRUTE_PHI2_CUTOFF: u64 = 1000;

/// `a/q` in lowest terms with `0 <= a < q` (so `1/1` is stored as `0/1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ReducedFraction {
    pub a: u64,
    pub q: u64,
}

impl ReducedFraction {
    pub fn new(a: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInput("denominator must be positive".into()));
        }
        if gcd_i64(a, q as i64) != 1 {
            return Err(Error::InvalidInput(format!("{a}/{q} is not in lowest terms")));
        }
        Ok(Self { a: (a as i128).rem_euclid(q as i128) as u64, q })
    }

    pub fn value(&self) -> f64 {
        self.a as f64 / self.q as f64
    }
}

impl std::fmt::Display for ReducedFraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.a, self.q)
    }
}

/// Number of `u^2 + t u + mu = 0 (mod p)` roots, i.e. zeros of `N(u, 1)`.
fn norm_roots_mod_p(field: &QuadField, p: u64) -> u64 {
    if p == 2 {
        (0..2).filter(|&u| field.norm_mod(u, 1, 2) == 0).count() as u64
    } else {
        (1 + crate::arith::kronecker(field.disc, p)) as u64
    }
}

fn phi2_prime_local(field: &QuadField, p: u64, alpha: u32) -> u64 {
    let base = p * p - 1 - (p - 1) * norm_roots_mod_p(field, p);
    base * p.pow(2 * alpha - 2)
}

/// Pairs `(u, v)` mod `q` whose norm is a unit mod `q`, by enumeration.
pub fn phi2_raw_brute(field: &QuadField, q: u64) -> u64 {
    let coprime: Vec<bool> = (0..q).map(|r| gcd(r, q) == 1).collect();
    let t = field.omega_trace as u64 % q;
    let mut count = 0;
    for v in 0..q {
        // Walk u -> u + 1 using N(u + 1, v) - N(u, v) = 2u + 1 + t v.
        let mut val = field.norm_mod(0, v, q);
        let mut step = (1 + t * v % q) % q;
        for _ in 0..q {
            count += coprime[val as usize] as u64;
            val += step;
            if val >= q {
                val -= q;
            }
            step += 2;
            while step >= q {
                step -= q;
            }
        }
    }
    count
}

/// `phi2'(q)`: enumeration for small `q`, multiplicativity above.
pub fn phi2_raw(field: &QuadField, q: u64) -> u64 {
    if q <= BRUTE_PHI2_CUTOFF {
        return phi2_raw_brute(field, q);
    }
    factorize(q)
        .into_iter()
        .map(|(p, a)| phi2_prime_local(field, p, a))
        .product()
}

/// `phi2(q)`: halved for `q > 2`; `q = 1` keeps the value 1.
pub fn phi2(field: &QuadField, q: u64) -> u64 {
    let raw = phi2_raw(field, q);
    if q > 2 {
        debug_assert_eq!(raw % 2, 0);
        raw / 2
    } else {
        raw
    }
}

pub fn w_factor(q0: u64) -> f64 {
    if q0 > 2 {
        0.5
    } else {
        1.0
    }
}

fn q0_of(field: &QuadField, q: u64) -> Result<u64> {
    q.checked_mul(field.n0).ok_or(Error::Overflow("q * n0"))
}

/// Counts of `N(u + v omega) mod m` over `u, v` in `[m]` with `step | v` and `N` coprime to `m`.
fn norm_histogram(field: &QuadField, m: u64, step: u64) -> Vec<u64> {
    let coprime: Vec<bool> = (0..m).map(|r| gcd(r, m) == 1).collect();
    let mut hist = vec![0u64; m as usize];
    for u in 0..m {
        let mut v = 0;
        while v < m {
            let r = field.norm_mod(u, v, m);
            if coprime[r as usize] {
                hist[r as usize] += 1;
            }
            v += step;
        }
    }
    hist
}

/// `sum_r hist[r] e(c P(r) / modulus)` where residues `r` live mod `hist.len()`.
fn twisted_sum(hist: &[u64], poly: &IntPolynomial, c: u64, modulus: u64) -> Complex64 {
    let roots = roots_of_unity(modulus);
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, &cnt) in hist.iter().enumerate() {
        if cnt == 0 {
            continue;
        }
        let k = (c as u128 * poly.eval_mod(r as u64, modulus) as u128 % modulus as u128) as usize;
        acc += roots[k] * cnt as f64;
    }
    acc
}

/// Unnormalised sum over `[q0]^2` without the `w(q0)` factor, by direct enumeration.
fn raw_sum_brute(field: &QuadField, poly: &IntPolynomial, frac: ReducedFraction, m: u64) -> Complex64 {
    let hist = norm_histogram(field, m, field.n0);
    // Fold the histogram mod q (q | m) before twisting.
    let q = frac.q;
    let mut folded = vec![0u64; q as usize];
    for (r, &c) in hist.iter().enumerate() {
        folded[r % q as usize] += c;
    }
    twisted_sum(&folded, poly, frac.a, q)
}

/// Same sum via CRT: a product of local sums over the prime powers of `m`.
fn raw_sum_crt(field: &QuadField, poly: &IntPolynomial, frac: ReducedFraction, m: u64) -> Complex64 {
    let q = frac.q;
    let mut acc = Complex64::new(1.0, 0.0);
    for (p, beta) in factorize(m) {
        let pb = p.pow(beta);
        let gamma = factorize(field.n0).iter().find(|f| f.0 == p).map_or(0, |f| f.1);
        let alpha = factorize(q).iter().find(|f| f.0 == p).map_or(0, |f| f.1);
        let hist = norm_histogram(field, pb, p.pow(gamma.min(beta)));
        if alpha == 0 {
            acc *= hist.iter().sum::<u64>() as f64;
            continue;
        }
        let pa = p.pow(alpha);
        let cofactor = q / pa;
        let c = inv_mod(cofactor % pa, pa).expect("coprime cofactor") * frac.a % pa;
        let mut folded = vec![0u64; pa as usize];
        for (r, &cnt) in hist.iter().enumerate() {
            folded[r % pa as usize] += cnt;
        }
        acc *= twisted_sum(&folded, poly, c, pa);
    }
    acc
}

/// `S(a, q)` by direct enumeration over `[q0]^2`; the oracle for [`weyl_sum`].
pub fn weyl_sum_brute(field: &QuadField, poly: &IntPolynomial, frac: ReducedFraction) -> Result<Complex64> {
    let q0 = q0_of(field, frac.q)?;
    Ok(raw_sum_brute(field, poly, frac, q0) * w_factor(q0))
}

/// `S(a, q) = w(q0) * sum_{u,v in [q0], n0 | v, N coprime to q0} e(a P(N) / q)`.
pub fn weyl_sum(field: &QuadField, poly: &IntPolynomial, frac: ReducedFraction) -> Result<Complex64> {
    let q0 = q0_of(field, frac.q)?;
    Ok(raw_sum_crt(field, poly, frac, q0) * w_factor(q0))
}

/// `S(a, q) / (R_n phi2(q0))`.
pub fn coefficient(field: &QuadField, poly: &IntPolynomial, frac: ReducedFraction) -> Result<Complex64> {
    let q0 = q0_of(field, frac.q)?;
    let s = weyl_sum(field, poly, frac)?;
    Ok(s / (field.rn as f64 * phi2(field, q0) as f64))
}

/// Difference between the `phi2'`-normalised sums over `[q0]` and `[k q0]`.
pub fn invariance_check(field: &QuadField, poly: &IntPolynomial, frac: ReducedFraction, k: u64) -> Result<f64> {
    if k == 0 || k > 8 {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in 1..=8")));
    }
    let q0 = q0_of(field, frac.q)?;
    if k == 1 {
        return Ok(0.0);
    }
    let big = q0.checked_mul(k).ok_or(Error::Overflow("k * q0"))?;
    let left = raw_sum_brute(field, poly, frac, q0) / phi2_raw(field, q0) as f64;
    let right = raw_sum_brute(field, poly, frac, big) / phi2_raw(field, big) as f64;
    Ok((left - right).norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub q: u64,
    pub max_abs_s_over_q2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayScan {
    pub rows: Vec<DecayRow>,
    /// Least-squares slope of `log(max|S|/q^2)` against `log q` over `q >= 2`.
    pub slope: f64,
}

pub fn decay_scan(field: &QuadField, poly: &IntPolynomial, q_max: u64) -> Result<DecayScan> {
    if q_max == 0 || q_max > 500 {
        return Err(Error::InvalidParameter(format!("q_max = {q_max} must lie in 1..=500")));
    }
    let rows: Vec<DecayRow> = (1..=q_max)
        .map(|q| {
            let q0 = q * field.n0;
            let hist = norm_histogram(field, q0, field.n0);
            let mut folded = vec![0u64; q as usize];
            for (r, &c) in hist.iter().enumerate() {
                folded[r % q as usize] += c;
            }
            let best = (0..q)
                .filter(|&a| gcd(a, q) == 1)
                .map(|a| (twisted_sum(&folded, poly, a, q) * w_factor(q0)).norm())
                .fold(0.0, f64::max);
            DecayRow { q, max_abs_s_over_q2: best / (q * q) as f64 }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.q >= 2 && r.max_abs_s_over_q2 > 0.0)
        .map(|r| ((r.q as f64).ln(), r.max_abs_s_over_q2.ln()))
        .collect();
    Ok(DecayScan { slope: least_squares_slope(&pts), rows })
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::build_field;

    fn frac(a: i64, q: u64) -> ReducedFraction {
        ReducedFraction::new(a, q).unwrap()
    }

    #[test]
    fn incremental_count_matches_definition() {
        for n in [1, 2, 3, 5, 6, 7, 10, 12, 27] {
            let f = build_field(n).unwrap();
            for q in 1..=60 {
                let direct = (0..q)
                    .flat_map(|u| (0..q).map(move |v| (u, v)))
                    .filter(|&(u, v)| gcd(f.norm_mod(u, v, q), q) == 1)
                    .count() as u64;
                assert_eq!(phi2_raw_brute(&f, q), direct, "n={n} q={q}");
            }
        }
    }

    #[test]
    fn fraction_normalisation() {
        assert_eq!(frac(1, 1), ReducedFraction { a: 0, q: 1 });
        assert_eq!(frac(-1, 4), ReducedFraction { a: 3, q: 4 });
        assert!(ReducedFraction::new(2, 4).is_err());
        assert!(ReducedFraction::new(1, 0).is_err());
    }

    #[test]
    fn phi2_examples() {
        let f = build_field(1).unwrap();
        assert_eq!(phi2_raw(&f, 1), 1);
        assert_eq!(phi2_raw(&f, 3), 8);
        assert_eq!(phi2_raw(&f, 5), 16);
        assert_eq!(phi2(&f, 1), 1);
        assert_eq!(phi2(&f, 2), 2);
        assert_eq!(phi2(&f, 3), 4);
    }

    #[test]
    fn phi2_formula_matches_enumeration_above_cutoff() {
        for n in [1i64, 3, 7, 12] {
            let f = build_field(n).unwrap();
            for q in [1001u64, 1024, 1155, 1331, 1500] {
                let formula: u64 = factorize(q).into_iter().map(|(p, a)| phi2_prime_local(&f, p, a)).product();
                assert_eq!(phi2_raw_brute(&f, q), formula, "n={n} q={q}");
                assert_eq!(phi2_raw(&f, q), formula);
            }
        }
    }

    #[test]
    fn weyl_examples() {
        let f = build_field(1).unwrap();
        let p = IntPolynomial::identity();
        let s = weyl_sum(&f, &p, frac(1, 1)).unwrap();
        assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let s = weyl_sum(&f, &p, frac(1, 2)).unwrap();
        assert!((s - Complex64::new(-2.0, 0.0)).norm() < 1e-12);
        // Direct (u, v) double sum as an independent oracle for q = 4.
        let mut direct = Complex64::new(0.0, 0.0);
        for u in 0..4u64 {
            for v in 0..4u64 {
                let n = u * u + v * v;
                if n % 2 == 1 {
                    direct += crate::phase::e((n % 4) as f64 / 4.0);
                }
            }
        }
        let s = weyl_sum(&f, &p, frac(1, 4)).unwrap();
        assert!((s - direct * 0.5).norm() < 1e-12);
    }

    #[test]
    fn coefficient_examples() {
        let f = build_field(1).unwrap();
        let p = IntPolynomial::identity();
        assert!((coefficient(&f, &p, frac(1, 1)).unwrap() - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(coefficient(&f, &p, frac(1, 2)).unwrap(), Complex64::new(-0.5, 0.0));
    }

    #[test]
    fn crt_matches_brute() {
        for n in [1i64, 2, 3, 5, 12] {
            let f = build_field(n).unwrap();
            for poly in [IntPolynomial::identity(), IntPolynomial::new(vec![1, 0, 3]).unwrap()] {
                for q in 1..=60u64 {
                    for a in (0..q).filter(|&a| gcd(a, q) == 1).take(3) {
                        let fr = frac(a as i64, q);
                        let x = weyl_sum(&f, &poly, fr).unwrap();
                        let y = weyl_sum_brute(&f, &poly, fr).unwrap();
                        assert!((x - y).norm() < 1e-9, "n={n} q={q} a={a}");
                    }
                }
            }
        }
    }

    #[test]
    fn invariance_examples() {
        let f1 = build_field(1).unwrap();
        let x2 = IntPolynomial::monomial(2);
        assert_eq!(invariance_check(&f1, &x2, frac(1, 3), 1).unwrap(), 0.0);
        assert!(invariance_check(&f1, &x2, frac(1, 3), 2).unwrap() <= 1e-9);
        let f5 = build_field(5).unwrap();
        assert!(invariance_check(&f5, &IntPolynomial::identity(), frac(2, 5), 3).unwrap() <= 1e-9);
        assert!(invariance_check(&f5, &x2, frac(2, 5), 9).is_err());
    }

    #[test]
    fn decay_rows() {
        let f = build_field(1).unwrap();
        let scan = decay_scan(&f, &IntPolynomial::identity(), 60).unwrap();
        assert!((scan.rows[0].max_abs_s_over_q2 - 1.0).abs() < 1e-12);
        for r in &scan.rows {
            if crate::arith::is_prime(r.q) {
                let s = r.max_abs_s_over_q2 * (r.q * r.q) as f64;
                assert!(s <= 2.0 * r.q as f64 + 1e-9, "q={}", r.q);
            }
        }
        assert!(scan.slope < 0.0);
    }
}
