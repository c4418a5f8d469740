//! Fourier-side objects: the prime kernel, its rational approximants and arc scans.

use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::KahanSum;
use crate::error::{Error, Result};
use crate::expsums::{coefficient, ReducedFraction};
use crate::normprimes::PnSieve;
use crate::phase::{e, Phase128};
use crate::poly::IntPolynomial;
use crate::quadfield::QuadField;

pub const DEFAULT_B: f64 = 2.0;
const QUAD_TOL: f64 = 1e-11;
const MAX_PANELS: usize = 1 << 22;
const GL_POINTS: usize = 16;

/// Even cutoff: 1 on `|b| <= 1/4`, 0 on `|b| >= 1/2`, quintic smoothstep between.
pub fn mollifier(beta: f64) -> f64 {
    let b = beta.abs();
    if b <= 0.25 {
        1.0
    } else if b >= 0.5 {
        0.0
    } else {
        let x = 4.0 * b - 1.0;
        1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

/// `phi_s(beta) = phi(2^s beta)`.
pub fn mollifier_scaled(s: u32, beta: f64) -> f64 {
    mollifier(beta * (2f64).powi(s as i32))
}

fn gauss_legendre() -> &'static ([f64; GL_POINTS], [f64; GL_POINTS]) {
    static NODES: OnceLock<([f64; GL_POINTS], [f64; GL_POINTS])> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_POINTS;
        let mut x = [0.0; GL_POINTS];
        let mut w = [0.0; GL_POINTS];
        for i in 0..n {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

fn integrate_panels(poly: &IntPolynomial, m: f64, alpha: f64, panels: usize) -> Complex64 {
    let (x, w) = gauss_legendre();
    let h = 1.0 / panels as f64;
    let (mut re, mut im) = (KahanSum::new(), KahanSum::new());
    for j in 0..panels {
        let mid = (j as f64 + 0.5) * h;
        for k in 0..GL_POINTS {
            let u = mid + 0.5 * h * x[k];
            let z = e(alpha * poly.eval_f64(m * u)) * (0.5 * h * w[k]);
            re.add(z.re);
            im.add(z.im);
        }
    }
    Complex64::new(re.value(), im.value())
}

/// `v_m(alpha) = int_0^1 e(alpha P(m u)) du`.
pub fn osc_integral(poly: &IntPolynomial, m: u64, alpha: f64) -> Result<Complex64> {
    if alpha == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mf = m as f64;
    let cycles = alpha.abs() * poly.abs_bound(mf);
    let mut panels = ((4.0 * cycles).ceil() as usize).max(4);
    if panels > MAX_PANELS {
        return Err(Error::NumericFailure(format!(
            "oscillatory integral needs {panels} panels at alpha = {alpha}, m = {m}"
        )));
    }
    let mut prev = integrate_panels(poly, mf, alpha, panels);
    while panels * 2 <= MAX_PANELS {
        panels *= 2;
        let cur = integrate_panels(poly, mf, alpha, panels);
        if (cur - prev).norm() <= QUAD_TOL {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NumericFailure(format!("quadrature did not converge at alpha = {alpha}, m = {m}")))
}

/// Signed distance `alpha - a/q` reduced into `(-1/2, 1/2]`.
pub fn reduced_offset(alpha: f64, frac: ReducedFraction) -> f64 {
    let mut b = (alpha - frac.value()).rem_euclid(1.0);
    if b > 0.5 {
        b -= 1.0;
    }
    b
}

/// Continued-fraction convergents `(a, q)` of `alpha mod 1` with `q <= q_max`.
pub fn convergents(alpha: f64, q_max: u64) -> Vec<(u64, u64)> {
    let x = Phase128::from_f64(alpha).0 >> 1;
    let (mut num, mut den) = (x, 1u128 << 127);
    let (mut h1, mut h2) = (1u128, 0u128);
    let (mut k1, mut k2) = (0u128, 1u128);
    let mut out = Vec::new();
    while den != 0 {
        let a = num / den;
        let h = a.saturating_mul(h1).saturating_add(h2);
        let k = a.saturating_mul(k1).saturating_add(k2);
        if k > q_max as u128 {
            break;
        }
        out.push((h as u64, k as u64));
        (h2, h1) = (h1, h);
        (k2, k1) = (k1, k);
        (num, den) = (den, num - a * den);
    }
    out
}

/// The unique fraction with `q` in `[2^(s-1), 2^s)` whose scaled mollifier is nonzero at `alpha`.
pub fn block_candidate(alpha: f64, s: u32) -> Option<(ReducedFraction, f64)> {
    let lo = 1u64 << (s - 1);
    let hi = 1u64 << s;
    let radius = 0.5 / (2f64).powi(6 * s as i32);
    let mut found: Option<(ReducedFraction, f64)> = None;
    for (a, q) in convergents(alpha, hi - 1) {
        if q < lo {
            continue;
        }
        let frac = ReducedFraction { a: a % q, q };
        let beta = reduced_offset(alpha, frac);
        if beta.abs() < radius {
            if let Some((prev, _)) = found {
                assert_eq!(prev, frac, "two fractions of block {s} overlap at {alpha}");
            }
            found = Some((frac, beta));
        }
    }
    found
}

/// One dyadic block of the approximant.
pub fn lhat_dyadic(
    field: &QuadField,
    poly: &IntPolynomial,
    m: u64,
    s: u32,
    alpha: f64,
) -> Result<Complex64> {
    if s == 0 {
        return Err(Error::InvalidParameter("dyadic blocks start at s = 1".into()));
    }
    let Some((frac, beta)) = block_candidate(alpha, s) else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let cut = mollifier_scaled(6 * s, beta);
    if cut == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(coefficient(field, poly, frac)? * osc_integral(poly, m, beta)? * cut)
}

/// Largest `s` with `2^s <= bound`, or 0.
fn top_block(bound: f64) -> u32 {
    let mut s = 0;
    while (2f64).powi(s as i32 + 1) <= bound {
        s += 1;
    }
    s
}

pub fn lhat_prime_blocks(m: u64, b: f64) -> u32 {
    top_block((m as f64).ln().powf(b))
}

pub fn lhat_blocks(m: u64) -> u32 {
    top_block((m as f64).sqrt() / 16.0)
}

fn check_m(m: u64) -> Result<()> {
    if m < 16 {
        return Err(Error::InvalidParameter(format!("m = {m} must be at least 16")));
    }
    Ok(())
}

/// `L'_m`: blocks with `2^s <= (log m)^B`.
pub fn lhat_prime(field: &QuadField, poly: &IntPolynomial, m: u64, b: f64, alpha: f64) -> Result<Complex64> {
    check_m(m)?;
    (1..=lhat_prime_blocks(m, b)).try_fold(Complex64::new(0.0, 0.0), |acc, s| {
        Ok(acc + lhat_dyadic(field, poly, m, s, alpha)?)
    })
}

/// `L_m`: blocks with `2^s <= sqrt(m)/16`.
pub fn lhat(field: &QuadField, poly: &IntPolynomial, m: u64, alpha: f64) -> Result<Complex64> {
    check_m(m)?;
    (1..=lhat_blocks(m)).try_fold(Complex64::new(0.0, 0.0), |acc, s| {
        Ok(acc + lhat_dyadic(field, poly, m, s, alpha)?)
    })
}

/// Precomputed `log p` and `P(p) mod 2^128` for members up to `m`.
pub struct KernelTable {
    pub m: u64,
    logs: Vec<f64>,
    values: Vec<u128>,
}

impl KernelTable {
    pub fn new(sieve: &PnSieve, poly: &IntPolynomial, m: u64) -> Result<Self> {
        if m > sieve.limit {
            return Err(Error::OutOfRange { what: "m", value: m, limit: sieve.limit });
        }
        let ps = sieve.members_up_to(m);
        Ok(Self {
            m,
            logs: ps.iter().map(|&p| (p as f64).ln()).collect(),
            values: ps.iter().map(|&p| poly.eval_wrapping(p)).collect(),
        })
    }

    /// `sum log p * e(alpha P(p))` without the `1/m` factor.
    pub fn raw_sum(&self, alpha: f64) -> Complex64 {
        let ph = Phase128::from_f64(alpha);
        let (mut re, mut im) = (KahanSum::new(), KahanSum::new());
        for (&l, &v) in self.logs.iter().zip(&self.values) {
            let z = e(ph.turn_times(v));
            re.add(l * z.re);
            im.add(l * z.im);
        }
        Complex64::new(re.value(), im.value())
    }

    pub fn khat(&self, alpha: f64) -> Complex64 {
        self.raw_sum(alpha) / self.m as f64
    }
}

/// `K^_m(alpha) = (1/m) sum_{p in P_n, p <= m} log p e(alpha P(p))`.
pub fn khat(sieve: &PnSieve, poly: &IntPolynomial, m: u64, alpha: f64) -> Result<Complex64> {
    Ok(KernelTable::new(sieve, poly, m)?.khat(alpha))
}

/// Major arcs of radius `(log x)^B / x^d` around fractions with `q <= (log x)^B`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ArcSpec {
    pub x: u64,
    pub b: f64,
    pub degree: usize,
}

impl ArcSpec {
    pub fn new(x: u64, b: f64, degree: usize) -> Result<Self> {
        if x < 3 || !(b > 0.0) || degree == 0 {
            return Err(Error::InvalidParameter(format!("bad arc spec x={x}, B={b}, d={degree}")));
        }
        Ok(Self { x, b, degree })
    }

    pub fn q_bound(&self) -> f64 {
        (self.x as f64).ln().powf(self.b)
    }

    pub fn radius(&self) -> f64 {
        self.q_bound() / (self.x as f64).powi(self.degree as i32)
    }

    /// Center of the major arc containing `alpha`, smallest denominator first.
    pub fn classify(&self, alpha: f64) -> Option<ReducedFraction> {
        let qmax = self.q_bound().floor() as u64;
        let r = self.radius();
        (1..=qmax).find_map(|q| {
            let a = (alpha * q as f64).round() as i64;
            let frac = ReducedFraction { a: a.rem_euclid(q as i64) as u64, q };
            (reduced_offset(alpha, frac).abs() <= r).then_some(frac)
        })
    }

    pub fn contains(&self, frac: ReducedFraction, alpha: f64) -> bool {
        frac.q as f64 <= self.q_bound() && reduced_offset(alpha, frac).abs() <= self.radius()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MajorArcResidual {
    pub lhs: Complex64,
    pub main: Complex64,
    pub residual_over_x: f64,
}

/// Compares the prime sum at `alpha` with `x S(a,q)/(R phi2(q0)) v_x(alpha - a/q)`.
pub fn major_arc_residual(
    sieve: &PnSieve,
    field: &QuadField,
    poly: &IntPolynomial,
    arc: &ArcSpec,
    frac: ReducedFraction,
    alpha: f64,
) -> Result<MajorArcResidual> {
    if !arc.contains(frac, alpha) {
        return Err(Error::PreconditionViolated(format!(
            "alpha = {alpha} is outside the major arc around {frac}"
        )));
    }
    let x = arc.x;
    let lhs = KernelTable::new(sieve, poly, x)?.raw_sum(alpha);
    let beta = reduced_offset(alpha, frac);
    let main = coefficient(field, poly, frac)? * osc_integral(poly, x, beta)? * x as f64;
    Ok(MajorArcResidual { lhs, main, residual_over_x: (lhs - main).norm() / x as f64 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinorArcRow {
    pub alpha: f64,
    pub x: u64,
    pub value: f64,
    pub major: bool,
}

/// `|sum_{p^k <= x, p in P_n} log p e(alpha P(p^k))| / x` per `(alpha, x)`.
pub fn minor_arc_scan(
    sieve: &PnSieve,
    poly: &IntPolynomial,
    b: f64,
    alphas: &[f64],
    xs: &[u64],
) -> Result<Vec<MinorArcRow>> {
    let mut rows = Vec::with_capacity(alphas.len() * xs.len());
    for &x in xs {
        if x > sieve.limit {
            return Err(Error::OutOfRange { what: "x", value: x, limit: sieve.limit });
        }
        let mut terms: Vec<(f64, u128)> = Vec::new();
        for &p in sieve.members_up_to(x) {
            let l = (p as f64).ln();
            let mut pk = p;
            loop {
                terms.push((l, poly.eval_wrapping(pk)));
                match pk.checked_mul(p) {
                    Some(v) if v <= x => pk = v,
                    _ => break,
                }
            }
        }
        let arc = ArcSpec::new(x, b, poly.degree())?;
        for &alpha in alphas {
            let ph = Phase128::from_f64(alpha);
            let (mut re, mut im) = (KahanSum::new(), KahanSum::new());
            for &(l, v) in &terms {
                let z = e(ph.turn_times(v));
                re.add(l * z.re);
                im.add(l * z.im);
            }
            let value = Complex64::new(re.value(), im.value()).norm() / x as f64;
            rows.push(MinorArcRow { alpha, x, value, major: arc.classify(alpha).is_some() });
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupError {
    pub sup_err: f64,
    pub argmax_alpha: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub alpha: f64,
    pub khat: Complex64,
    pub lhat: Complex64,
    pub err: f64,
}

/// `K^_m` and `L'_m` on the grid `alpha = j / grid`.
pub fn approximation_grid(
    sieve: &PnSieve,
    field: &QuadField,
    poly: &IntPolynomial,
    m: u64,
    b: f64,
    grid: usize,
) -> Result<Vec<GridRow>> {
    check_m(m)?;
    let table = KernelTable::new(sieve, poly, m)?;
    (0..grid)
        .into_par_iter()
        .map(|j| {
            let alpha = j as f64 / grid as f64;
            let k = table.khat(alpha);
            let l = lhat_prime(field, poly, m, b, alpha)?;
            Ok(GridRow { alpha, khat: k, lhat: l, err: (k - l).norm() })
        })
        .collect()
}

/// `sup_alpha |K^_m - L'_m|` over the uniform grid of the given size.
pub fn sup_error_scan(
    sieve: &PnSieve,
    field: &QuadField,
    poly: &IntPolynomial,
    m: u64,
    b: f64,
    grid: usize,
) -> Result<SupError> {
    if grid < 256 {
        return Err(Error::InvalidParameter(format!("grid = {grid} must be at least 256")));
    }
    let rows = approximation_grid(sieve, field, poly, m, b, grid)?;
    let best = rows
        .iter()
        .fold(None::<&GridRow>, |acc, r| match acc {
            Some(a) if a.err >= r.err => Some(a),
            _ => Some(r),
        })
        .expect("nonempty grid");
    Ok(SupError { sup_err: best.err, argmax_alpha: best.alpha })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gcd;
    use crate::quadfield::build_field;

    #[test]
    fn mollifier_sandwich() {
        for i in 0..=100_000 {
            let b = -1.0 + 2.0 * i as f64 / 100_000.0;
            let v = mollifier(b);
            let lower = if b.abs() <= 0.25 { 1.0 } else { 0.0 };
            let upper = if b.abs() <= 0.5 { 1.0 } else { 0.0 };
            assert!(lower <= v && v <= upper, "beta = {b}");
            assert_eq!(v, mollifier(-b));
        }
    }

    #[test]
    fn mollifier_is_c2_at_the_seams() {
        // Centered second differences across each seam shrink like O(h); a C^1-only
        // cubic transition would leave a jump of order 50 here.
        for edge in [0.25, 0.5] {
            for h in [1e-3, 1e-4] {
                let d2 = (mollifier(edge + h) - 2.0 * mollifier(edge) + mollifier(edge - h)) / (h * h);
                assert!(d2.abs() < 1000.0 * h, "edge {edge}, h {h}: {d2}");
            }
        }
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        let (_, w) = gauss_legendre();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn osc_linear_closed_form() {
        let p = IntPolynomial::identity();
        for &(m, alpha) in &[(100u64, 0.013), (1 << 20, 1e-5), (1000, -0.37), (16, 0.5)] {
            let got = osc_integral(&p, m, alpha).unwrap();
            let t = alpha * m as f64;
            let expect = (e(t) - 1.0) / Complex64::new(0.0, std::f64::consts::TAU * t);
            assert!((got - expect).norm() < 1e-10, "m={m} alpha={alpha}");
            assert!(got.norm() <= 1.0 + 1e-12);
        }
        assert_eq!(osc_integral(&p, 77, 0.0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn osc_budget_exhaustion_is_an_error() {
        let p = IntPolynomial::monomial(3);
        assert!(matches!(osc_integral(&p, 1_000_000, 0.3), Err(Error::NumericFailure(_))));
    }

    #[test]
    fn block_candidate_matches_enumeration() {
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..3000 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mut alpha = (state >> 11) as f64 / (1u64 << 53) as f64;
            // Bias some samples onto fractions.
            if state % 3 == 0 {
                let q = 1 + (state >> 40) % 60;
                alpha = ((state >> 20) % q) as f64 / q as f64 + 1e-7;
            }
            for s in 1..=6u32 {
                let radius = 0.5 / (2f64).powi(6 * s as i32);
                let mut brute = None;
                for q in (1u64 << (s - 1))..(1u64 << s) {
                    for a in 0..q {
                        if gcd(a, q) != 1 {
                            continue;
                        }
                        let f = ReducedFraction { a, q };
                        let b = reduced_offset(alpha, f);
                        if b.abs() < radius {
                            assert!(brute.is_none());
                            brute = Some(f);
                        }
                    }
                }
                assert_eq!(block_candidate(alpha, s).map(|c| c.0), brute, "alpha={alpha} s={s}");
            }
        }
    }

    #[test]
    fn approximant_examples() {
        let f = build_field(1).unwrap();
        let p = IntPolynomial::identity();
        let m = 1u64 << 20;
        let third = lhat_prime(&f, &p, m, 2.0, 1.0 / 3.0).unwrap();
        let c = coefficient(&f, &p, ReducedFraction::new(1, 3).unwrap()).unwrap();
        assert!((third - c).norm() < 1e-9);
        let half = lhat_prime(&f, &p, m, 2.0, 0.5 + 1e-9).unwrap();
        assert!((half - Complex64::new(-0.5, 0.0)).norm() < 0.01);
        // Far from every admissible fraction.
        assert_eq!(lhat_prime(&f, &p, m, 2.0, 0.2071).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn regrouping_identity() {
        let f = build_field(5).unwrap();
        let p = IntPolynomial::identity();
        let m = 1u64 << 16;
        for alpha in [0.0, 0.25, 0.5 + 1e-8, 0.123, 2.0 / 7.0, 0.999_999_9] {
            let direct = lhat_prime(&f, &p, m, 2.0, alpha).unwrap();
            let blocks: Complex64 = (1..=lhat_prime_blocks(m, 2.0))
                .map(|s| lhat_dyadic(&f, &p, m, s, alpha).unwrap())
                .sum();
            assert!((direct - blocks).norm() <= 1e-12);
        }
        assert_eq!(lhat_blocks(1 << 20), 6);
    }

    #[test]
    fn khat_examples() {
        let s = PnSieve::compute(1, 20_000).unwrap();
        let p = IntPolynomial::identity();
        let k0 = khat(&s, &p, 20_000, 0.0).unwrap();
        assert!((k0.re - s.weighted_count(20_000).unwrap() / 20_000.0).abs() < 1e-12);
        let a = khat(&s, &p, 20_000, 0.123).unwrap();
        let b = khat(&s, &p, 20_000, -0.123).unwrap();
        assert!((a - b.conj()).norm() < 1e-12);
        assert!(a.norm() <= k0.re);
        assert!(matches!(khat(&s, &p, 20_001, 0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn arc_classification() {
        let arc = ArcSpec::new(1_000_000, 2.0, 1).unwrap();
        assert_eq!(arc.classify(1.0 / 3.0), Some(ReducedFraction { a: 1, q: 3 }));
        assert_eq!(arc.classify(0.5), Some(ReducedFraction { a: 1, q: 2 }));
        assert_eq!(arc.classify(0.0), Some(ReducedFraction { a: 0, q: 1 }));
        let s = PnSieve::compute(1, 1000).unwrap();
        let f = build_field(1).unwrap();
        let arc = ArcSpec::new(1000, 2.0, 1).unwrap();
        let r = major_arc_residual(&s, &f, &IntPolynomial::identity(), &arc, ReducedFraction::new(1, 2).unwrap(), 0.3);
        assert!(matches!(r, Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn minor_scan_flags_major_rows() {
        let s = PnSieve::compute(1, 10_000).unwrap();
        // With B = 2 the arc radius at x = 10^4 is wide enough to swallow 0.61803 near 5/8.
        let rows = minor_arc_scan(&s, &IntPolynomial::identity(), 1.0, &[1.0 / 3.0, 0.61803], &[10_000]).unwrap();
        assert!(rows[0].major);
        assert!(!rows[1].major);
        // Triangle inequality bound by the total weight of prime powers.
        let total: f64 = s
            .members_up_to(10_000)
            .iter()
            .map(|&p| {
                let mut k = 0;
                let mut v = p;
                while v <= 10_000 {
                    k += 1;
                    v *= p;
                }
                k as f64 * (p as f64).ln()
            })
            .sum();
        for r in rows {
            assert!(r.value <= total / 10_000.0 + 1e-12);
        }
    }
}
