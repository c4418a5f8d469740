//! Ergodic averages along `P(p)`, `p` in `P_n`, on the integer shift and on
//! cyclic rotations, together with the dyadic maximal function.
//!
//! On the integer shift `f(T^k x) = f(x - k)`, so the weighted average is the
//! convolution `(K_m * f)(x) = sum_y K_m(y) f(x - y)` with `K_m` supported on
//! `+P(p)`. A point mass at 0 is therefore carried to `x = P(p)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::arith::KahanSum;
use crate::error::{Error, Result};
use crate::normprimes::PnSieve;
use crate::poly::IntPolynomial;

/// Finitely supported `Z -> C`; lookups off the support give 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Signal {
    values: BTreeMap<i64, Complex64>,
}

impl Signal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn delta(x: i64) -> Self {
        let mut s = Self::new();
        s.set(x, Complex64::new(1.0, 0.0));
        s
    }

    pub fn get(&self, x: i64) -> Complex64 {
        self.values.get(&x).copied().unwrap_or_default()
    }

    /// Stores `v` at `x`; a zero value removes the point from the support.
    pub fn set(&mut self, x: i64, v: Complex64) {
        if v == Complex64::default() {
            self.values.remove(&x);
        } else {
            self.values.insert(x, v);
        }
    }

    pub fn add_at(&mut self, x: i64, v: Complex64) {
        let cur = self.get(x);
        self.set(x, cur + v);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.values.iter().map(|(&x, &v)| (x, v))
    }

    pub fn support_bounds(&self) -> Option<(i64, i64)> {
        Some((*self.values.keys().next()?, *self.values.keys().next_back()?))
    }

    /// `sum |f(x)|`.
    pub fn l1(&self) -> f64 {
        self.values.values().map(|v| v.norm()).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Real values uniform in `[-1, 1)` on `[0, len)`, drawn from ChaCha8 with `seed`.
pub fn random_signal(seed: u64, len: usize) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len as i64).map(|x| (x, Complex64::new(rng.gen_range(-1.0..1.0), 0.0))).collect()
}

impl FromIterator<(i64, Complex64)> for Signal {
    fn from_iter<T: IntoIterator<Item = (i64, Complex64)>>(iter: T) -> Self {
        let mut s = Signal::new();
        for (x, v) in iter {
            s.add_at(x, v);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToySystem {
    /// `T^k x = x - k` on `Z`.
    Shift,
    /// `T^k x = x - k c mod N` on `Z/NZ`; signals are read at residues in `[0, N)`.
    Cyclic { modulus: u64, step: u64 },
}

impl ToySystem {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ToySystem::Cyclic { modulus: 0, .. } => Err(Error::InvalidInput("cyclic modulus must be positive".into())),
            ToySystem::Cyclic { modulus, .. } if modulus > i64::MAX as u64 => {
                Err(Error::InvalidInput("cyclic modulus too large".into()))
            }
            _ => Ok(()),
        }
    }

    /// `T^{P(p)} x`.
    fn orbit_point(&self, poly: &IntPolynomial, p: u64, x: i64) -> Result<i64> {
        match *self {
            ToySystem::Shift => {
                let k = poly_value(poly, p)?;
                x.checked_sub(k).ok_or(Error::Overflow("x - P(p)"))
            }
            ToySystem::Cyclic { modulus, step } => {
                let k = poly.eval_mod(p, modulus) as u128 * (step % modulus) as u128 % modulus as u128;
                let xr = x.rem_euclid(modulus as i64) as u128;
                Ok(((xr + modulus as u128 - k) % modulus as u128) as i64)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `1 / |P_n ∩ [m]|` with unit weights.
    Unweighted,
    /// `1 / m` with weights `log p`.
    Weighted,
}

fn poly_value(poly: &IntPolynomial, p: u64) -> Result<i64> {
    let v = poly.eval_checked(p as i128)?;
    i64::try_from(v).map_err(|_| Error::Overflow("P(p) exceeds i64"))
}

fn check_m(sieve: &PnSieve, m: u64) -> Result<()> {
    if m > sieve.limit {
        return Err(Error::OutOfRange { what: "m", value: m, limit: sieve.limit });
    }
    Ok(())
}

/// `K_m = (1/m) sum_{p <= m} log p * delta_{P(p)}`.
pub fn kernel(sieve: &PnSieve, poly: &IntPolynomial, m: u64) -> Result<Signal> {
    check_m(sieve, m)?;
    let mut out = Signal::new();
    for &p in sieve.members_up_to(m) {
        out.add_at(poly_value(poly, p)?, Complex64::new((p as f64).ln() / m as f64, 0.0));
    }
    Ok(out)
}

pub fn average(
    sieve: &PnSieve,
    poly: &IntPolynomial,
    m: u64,
    sys: ToySystem,
    f: &Signal,
    x: i64,
    norm: Normalization,
) -> Result<Complex64> {
    check_m(sieve, m)?;
    sys.validate()?;
    let ps = sieve.members_up_to(m);
    if norm == Normalization::Unweighted && ps.is_empty() {
        return Err(Error::EmptyAverage(m));
    }
    let (mut re, mut im) = (KahanSum::new(), KahanSum::new());
    for &p in ps {
        let w = match norm {
            Normalization::Unweighted => 1.0,
            Normalization::Weighted => (p as f64).ln(),
        };
        let v = f.get(sys.orbit_point(poly, p, x)?) * w;
        re.add(v.re);
        im.add(v.im);
    }
    let denom = match norm {
        Normalization::Unweighted => ps.len() as f64,
        Normalization::Weighted => m as f64,
    };
    Ok(Complex64::new(re.value(), im.value()) / denom)
}

/// `A_m f(x)`, averaged over `P_n ∩ [m]`.
pub fn ergodic_avg(sieve: &PnSieve, poly: &IntPolynomial, m: u64, sys: ToySystem, f: &Signal, x: i64) -> Result<Complex64> {
    average(sieve, poly, m, sys, f, x, Normalization::Unweighted)
}

/// `A'_m f(x)` with weights `log p` and normalizer `1/m`.
pub fn weighted_avg(sieve: &PnSieve, poly: &IntPolynomial, m: u64, sys: ToySystem, f: &Signal, x: i64) -> Result<Complex64> {
    average(sieve, poly, m, sys, f, x, Normalization::Weighted)
}

pub fn avg_sequence(
    sieve: &PnSieve,
    poly: &IntPolynomial,
    sys: ToySystem,
    f: &Signal,
    x: i64,
    scales: &[u64],
    norm: Normalization,
) -> Result<Vec<Complex64>> {
    if scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("scales must be strictly increasing".into()));
    }
    scales.iter().map(|&m| average(sieve, poly, m, sys, f, x, norm)).collect()
}

/// Work bound `|supp f| * |P_n ∩ [M]|` below which convolutions are done directly.
pub const DIRECT_WORK_LIMIT: u64 = 100_000_000;
pub const MAX_FFT_LEN: usize = 1 << 26;

fn dyadic_scales(cap: u64) -> Vec<u64> {
    std::iter::successors(Some(1u64), |&m| m.checked_mul(2)).take_while(|&m| m <= cap).collect()
}

/// `sup_{m = 2^k <= cap} |K_m * f|` pointwise.
pub fn maximal_fn(sieve: &PnSieve, poly: &IntPolynomial, f: &Signal, cap: u64) -> Result<Signal> {
    maximal_fn_with_limit(sieve, poly, f, cap, DIRECT_WORK_LIMIT)
}

/// As [`maximal_fn`], switching to the FFT path when the direct work exceeds `direct_limit`.
pub fn maximal_fn_with_limit(
    sieve: &PnSieve,
    poly: &IntPolynomial,
    f: &Signal,
    cap: u64,
    direct_limit: u64,
) -> Result<Signal> {
    check_m(sieve, cap)?;
    let ps = sieve.members_up_to(cap);
    let shifts: Vec<(u64, i64, f64)> =
        ps.iter().map(|&p| Ok((p, poly_value(poly, p)?, (p as f64).ln()))).collect::<Result<_>>()?;
    let work = (f.len() as u64).saturating_mul(ps.len() as u64);
    if work <= direct_limit {
        maximal_direct(f, &shifts, cap)
    } else {
        maximal_fft(f, &shifts, cap)
    }
}

fn maximal_direct(f: &Signal, shifts: &[(u64, i64, f64)], cap: u64) -> Result<Signal> {
    // Running unnormalized sum over p <= m; scales are nested.
    let mut acc: BTreeMap<i64, Complex64> = BTreeMap::new();
    let mut best = Signal::new();
    let mut next = 0;
    for m in dyadic_scales(cap) {
        while next < shifts.len() && shifts[next].0 <= m {
            let (_, k, w) = shifts[next];
            for (y, v) in f.iter() {
                let x = y.checked_add(k).ok_or(Error::Overflow("x + P(p)"))?;
                *acc.entry(x).or_default() += v * w;
            }
            next += 1;
        }
        for (&x, &v) in &acc {
            let a = v.norm() / m as f64;
            if a > best.get(x).re {
                best.set(x, Complex64::new(a, 0.0));
            }
        }
    }
    Ok(best)
}

fn maximal_fft(f: &Signal, shifts: &[(u64, i64, f64)], cap: u64) -> Result<Signal> {
    let (f_lo, f_hi) = match f.support_bounds() {
        Some(b) => b,
        None => return Ok(Signal::new()),
    };
    if shifts.is_empty() {
        return Ok(Signal::new());
    }
    let k_lo = shifts.iter().map(|s| s.1).min().unwrap_or(0);
    let k_hi = shifts.iter().map(|s| s.1).max().unwrap_or(0);
    let span = (f_hi as i128 - f_lo as i128) + (k_hi as i128 - k_lo as i128) + 1;
    let len = usize::try_from(span)
        .ok()
        .and_then(|s| s.checked_next_power_of_two())
        .filter(|&l| l <= MAX_FFT_LEN)
        .ok_or(Error::ResourceLimit {
            what: "FFT length",
            requested: span.min(u64::MAX as i128) as u64,
            limit: MAX_FFT_LEN as u64,
        })?;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let mut fa = vec![Complex64::default(); len];
    for (y, v) in f.iter() {
        fa[(y - f_lo) as usize] = v;
    }
    fwd.process(&mut fa);

    let mut ka = vec![Complex64::default(); len];
    let mut best = vec![0.0f64; len];
    let mut next = 0;
    for m in dyadic_scales(cap) {
        let before = next;
        while next < shifts.len() && shifts[next].0 <= m {
            let (_, k, w) = shifts[next];
            ka[(k - k_lo) as usize] += Complex64::new(w, 0.0);
            next += 1;
        }
        if next == before && before == 0 {
            continue;
        }
        let mut spec = ka.clone();
        fwd.process(&mut spec);
        for (s, a) in spec.iter_mut().zip(&fa) {
            *s *= a;
        }
        inv.process(&mut spec);
        let scale = 1.0 / (len as f64 * m as f64);
        for (b, v) in best.iter_mut().zip(&spec) {
            *b = b.max(v.norm() * scale);
        }
    }
    // Round-off floor relative to the largest value.
    let floor = 1e-12 * best.iter().cloned().fold(0.0, f64::max);
    let origin = f_lo + k_lo;
    Ok(best
        .iter()
        .enumerate()
        .filter(|(i, &b)| b > floor && (*i as i128) < span)
        .map(|(i, &b)| (origin + i as i64, Complex64::new(b, 0.0)))
        .collect())
}
