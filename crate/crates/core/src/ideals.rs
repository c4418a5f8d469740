//! Integral ideals of the maximal order of Q(sqrt(-n)), stored in factored form.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::arith::{factor_with_spf, is_prime, kronecker, spf_table, sqrt_mod, KahanSum};
use crate::error::{Error, Result};
use crate::quadfield::QuadField;

pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimeKind {
    SplitPlus,
    SplitMinus,
    Ramified,
    Inert,
}

/// The prime ideal `(p, omega - root)`, or `(p)` when inert.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub struct PrimeIdealTag {
    pub p: u64,
    pub kind: PrimeKind,
    pub root: Option<u64>,
}

impl PrimeIdealTag {
    pub fn norm(&self) -> u64 {
        match self.kind {
            PrimeKind::Inert => self.p * self.p,
            _ => self.p,
        }
    }

    fn key(&self) -> (u64, u64, PrimeKind, Option<u64>) {
        (self.norm(), self.p, self.kind, self.root)
    }
}

impl Ord for PrimeIdealTag {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for PrimeIdealTag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PrimeIdealTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.root) {
            (PrimeKind::Inert, _) => write!(f, "({})", self.p),
            (_, Some(r)) => write!(f, "({}, w-{})", self.p, r),
            (_, None) => write!(f, "({})", self.p),
        }
    }
}

/// Prime ideals above the rational prime `p`.
pub fn splitting_type(field: &QuadField, p: u64) -> Result<Vec<PrimeIdealTag>> {
    if !is_prime(p) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    Ok(split_prime(field, p))
}

fn split_prime(field: &QuadField, p: u64) -> Vec<PrimeIdealTag> {
    let t = field.omega_trace.rem_euclid(p as i64) as u64;
    let mu = field.omega_norm.rem_euclid(p as i64) as u64;
    // Roots of r^2 - t r + mu mod p.
    let roots: Vec<u64> = if p == 2 {
        (0..2).filter(|&r| (r * r + p - (t * r) % p + mu) % p == 0).collect()
    } else {
        match kronecker(field.disc, p) {
            -1 => Vec::new(),
            _ => {
                let d = field.disc.rem_euclid(p as i64) as u64;
                let s = sqrt_mod(d, p).expect("disc is a square mod p");
                let inv2 = p.div_ceil(2);
                let r1 = ((t + s) % p) * inv2 % p;
                let r2 = ((t + p - s) % p) * inv2 % p;
                let mut v = vec![r1, r2];
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    };
    match kronecker(field.disc, p) {
        1 => {
            let r = roots[0];
            let conj = (t + p - r) % p;
            debug_assert_eq!(roots.len(), 2);
            vec![
                PrimeIdealTag { p, kind: PrimeKind::SplitPlus, root: Some(r) },
                PrimeIdealTag { p, kind: PrimeKind::SplitMinus, root: Some(conj) },
            ]
        }
        0 => vec![PrimeIdealTag { p, kind: PrimeKind::Ramified, root: Some(roots[0]) }],
        _ => vec![PrimeIdealTag { p, kind: PrimeKind::Inert, root: None }],
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IdealFactorization {
    factors: BTreeMap<PrimeIdealTag, u32>,
    norm: u64,
}

impl IdealFactorization {
    pub fn unit() -> Self {
        Self { factors: BTreeMap::new(), norm: 1 }
    }

    pub fn prime_power(tag: PrimeIdealTag, e: u32) -> Self {
        let mut out = Self::unit();
        out.insert(tag, e);
        out
    }

    pub fn from_factors<I: IntoIterator<Item = (PrimeIdealTag, u32)>>(it: I) -> Self {
        let mut out = Self::unit();
        for (t, e) in it {
            out.insert(t, e);
        }
        out
    }

    fn insert(&mut self, tag: PrimeIdealTag, e: u32) {
        if e == 0 {
            return;
        }
        *self.factors.entry(tag).or_insert(0) += e;
        self.norm *= tag.norm().pow(e);
    }

    pub fn norm(&self) -> u64 {
        self.norm
    }

    pub fn factors(&self) -> &BTreeMap<PrimeIdealTag, u32> {
        &self.factors
    }

    pub fn is_unit(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&t, &e) in &other.factors {
            out.insert(t, e);
        }
        out
    }

    pub fn divides(&self, other: &Self) -> bool {
        self.factors
            .iter()
            .all(|(t, &e)| other.factors.get(t).is_some_and(|&f| f >= e))
    }

    /// `other / self`, assuming `self | other`.
    pub fn quotient_of(&self, other: &Self) -> Self {
        Self::from_factors(
            other
                .factors
                .iter()
                .map(|(&t, &e)| (t, e - self.factors.get(&t).copied().unwrap_or(0))),
        )
    }

    pub fn is_coprime(&self, other: &Self) -> bool {
        self.factors.keys().all(|t| !other.factors.contains_key(t))
    }

    /// All divisors, ordered by (norm, factor list).
    pub fn divisors(&self) -> Vec<IdealFactorization> {
        let mut out = vec![Self::unit()];
        for (&t, &e) in &self.factors {
            let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
            for d in &out {
                for k in 0..=e {
                    let mut nd = d.clone();
                    nd.insert(t, k);
                    next.push(nd);
                }
            }
            out = next;
        }
        out.sort();
        out
    }

    pub fn tau(&self) -> u64 {
        self.factors.values().map(|&e| e as u64 + 1).product()
    }

    pub fn mobius(&self) -> i32 {
        if self.factors.values().any(|&e| e >= 2) {
            0
        } else if self.factors.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn von_mangoldt(&self) -> f64 {
        let mut it = self.factors.keys();
        match (it.next(), it.next()) {
            (Some(t), None) => (t.norm() as f64).ln(),
            _ => 0.0,
        }
    }
}

impl Ord for IdealFactorization {
    fn cmp(&self, other: &Self) -> Ordering {
        self.norm
            .cmp(&other.norm)
            .then_with(|| self.factors.iter().cmp(other.factors.iter()))
    }
}

impl PartialOrd for IdealFactorization {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for IdealFactorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "(1)");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(t, &e)| if e == 1 { t.to_string() } else { format!("{t}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

pub fn tau(ideal: &IdealFactorization) -> u64 {
    ideal.tau()
}

pub fn mobius(ideal: &IdealFactorization) -> i32 {
    ideal.mobius()
}

pub fn von_mangoldt(ideal: &IdealFactorization) -> f64 {
    ideal.von_mangoldt()
}

fn check_cap(x: u64, cap: u64) -> Result<()> {
    if x > cap {
        return Err(Error::ResourceLimit { what: "ideal norm bound", requested: x, limit: cap });
    }
    Ok(())
}

/// Lazily yields every integral ideal of norm at most `x`, by nondecreasing norm.
pub struct IdealStream<'a> {
    field: &'a QuadField,
    spf: Vec<u32>,
    x: u64,
    m: u64,
    buffer: std::vec::IntoIter<IdealFactorization>,
    splits: HashMap<u64, Vec<PrimeIdealTag>>,
}

impl IdealStream<'_> {
    fn ideals_of_norm(&mut self, m: u64) -> Vec<IdealFactorization> {
        let mut out = vec![IdealFactorization::unit()];
        for (p, e) in factor_with_spf(m as usize, &self.spf) {
            let field = self.field;
            let tags = self.splits.entry(p).or_insert_with(|| split_prime(field, p)).clone();
            let local: Vec<Vec<(PrimeIdealTag, u32)>> = match tags[0].kind {
                PrimeKind::SplitPlus => {
                    (0..=e).map(|i| vec![(tags[0], i), (tags[1], e - i)]).collect()
                }
                PrimeKind::Ramified => vec![vec![(tags[0], e)]],
                _ if e % 2 == 0 => vec![vec![(tags[0], e / 2)]],
                _ => return Vec::new(),
            };
            let mut next = Vec::with_capacity(out.len() * local.len());
            for base in &out {
                for choice in &local {
                    let mut id = base.clone();
                    for &(t, k) in choice {
                        id.insert(t, k);
                    }
                    next.push(id);
                }
            }
            out = next;
        }
        out.sort();
        out
    }
}

impl Iterator for IdealStream<'_> {
    type Item = IdealFactorization;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(id) = self.buffer.next() {
                return Some(id);
            }
            if self.m >= self.x {
                return None;
            }
            self.m += 1;
            let batch = self.ideals_of_norm(self.m);
            self.buffer = batch.into_iter();
        }
    }
}

pub fn enumerate_ideals(field: &QuadField, x: u64) -> Result<IdealStream<'_>> {
    enumerate_ideals_capped(field, x, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_ideals_capped(field: &QuadField, x: u64, cap: u64) -> Result<IdealStream<'_>> {
    if x == 0 {
        return Err(Error::InvalidInput("x must be at least 1".into()));
    }
    check_cap(x, cap)?;
    Ok(IdealStream {
        field,
        spf: spf_table(x as usize),
        x,
        m: 0,
        buffer: Vec::new().into_iter(),
        splits: HashMap::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct IdealSums {
    pub count: u64,
    pub tau_power_sum: u128,
}

/// Count of ideals and sum of `tau^k` over norms up to `x`, by a multiplicative sieve.
pub fn ideal_sums(field: &QuadField, x: u64, k: u32) -> Result<IdealSums> {
    if x == 0 {
        return Err(Error::InvalidInput("x must be at least 1".into()));
    }
    if k > 4 {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds 4")));
    }
    check_cap(x, DEFAULT_ENUMERATION_CAP)?;
    let spf = spf_table(x as usize);
    let mut kinds: HashMap<u64, PrimeKind> = HashMap::new();
    let (mut count, mut sum) = (0u64, 0u128);
    for m in 1..=x as usize {
        let (mut c, mut s) = (1u64, 1u128);
        for (p, e) in factor_with_spf(m, &spf) {
            let kind = *kinds.entry(p).or_insert_with(|| split_prime(field, p)[0].kind);
            let e = e as u128;
            match kind {
                PrimeKind::SplitPlus | PrimeKind::SplitMinus => {
                    c *= e as u64 + 1;
                    s *= (0..=e).map(|i| ((i + 1) * (e - i + 1)).pow(k)).sum::<u128>();
                }
                PrimeKind::Ramified => s *= (e + 1).pow(k),
                PrimeKind::Inert if e % 2 == 0 => s *= (e / 2 + 1).pow(k),
                PrimeKind::Inert => {
                    c = 0;
                    s = 0;
                }
            }
            if c == 0 {
                break;
            }
        }
        count += c;
        sum += s;
    }
    Ok(IdealSums { count, tau_power_sum: sum })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct VaughanTerms {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub residual: f64,
}

/// Evaluates the three sums of Vaughan's identity for a single ideal by divisor enumeration.
pub fn vaughan_check(
    _field: &QuadField,
    ideal: &IdealFactorization,
    u: u64,
    v: u64,
) -> Result<VaughanTerms> {
    if ideal.norm() <= u {
        return Err(Error::PreconditionViolated(format!(
            "norm {} does not exceed U = {u}",
            ideal.norm()
        )));
    }
    let divs = ideal.divisors();
    let mut s1 = KahanSum::new();
    for d in divs.iter().filter(|d| d.norm() <= v) {
        let mu = d.mobius();
        if mu != 0 {
            let a_norm = ideal.norm() / d.norm();
            s1.add(mu as f64 * (a_norm as f64).ln());
        }
    }
    let (mut s2, mut s3) = (KahanSum::new(), KahanSum::new());
    for m in &divs {
        let lam = m.von_mangoldt();
        if lam == 0.0 {
            continue;
        }
        let rest = m.quotient_of(ideal);
        for d in &divs {
            let mu = d.mobius();
            if mu == 0 || !d.divides(&rest) {
                continue;
            }
            if m.norm() <= u && d.norm() <= v {
                s2.add(lam * mu as f64);
            } else if m.norm() > u && d.norm() > v {
                s3.add(lam * mu as f64);
            }
        }
    }
    let (s1, s2, s3) = (s1.value(), s2.value(), s3.value());
    let mut r = KahanSum::new();
    r.add(s1);
    r.add(-s2);
    r.add(s3);
    r.add(-ideal.von_mangoldt());
    Ok(VaughanTerms { s1, s2, s3, residual: r.value() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum VaughanSum {
    S1,
    S2,
    S3,
}

/// Bilinear coefficients `(x_a, y_b)` attached to each Vaughan sum.
pub fn type2_coefficients(
    _field: &QuadField,
    which: VaughanSum,
    a: &IdealFactorization,
    b: &IdealFactorization,
    u: u64,
    v: u64,
) -> (f64, f64) {
    match which {
        VaughanSum::S1 => (a.mobius() as f64, (b.norm() as f64).ln()),
        VaughanSum::S2 => {
            // The identity needs N(a) <= V inclusive.
            let x = if a.norm() <= v { a.mobius() as f64 } else { 0.0 };
            let y: KahanSum = b
                .divisors()
                .iter()
                .filter(|m| m.norm() <= u)
                .map(|m| m.von_mangoldt())
                .collect();
            (x, y.value())
        }
        VaughanSum::S3 => {
            let x: i64 = a
                .divisors()
                .iter()
                .filter(|d| d.norm() > v)
                .map(|d| d.mobius() as i64)
                .sum();
            let y = if b.norm() > u { b.von_mangoldt() } else { 0.0 };
            (x as f64, y)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::build_field;

    fn gaussian() -> QuadField {
        build_field(1).unwrap()
    }

    #[test]
    fn splitting_examples() {
        let f = gaussian();
        let t5 = splitting_type(&f, 5).unwrap();
        assert_eq!(t5.len(), 2);
        let roots: Vec<u64> = t5.iter().map(|t| t.root.unwrap()).collect();
        assert_eq!(roots, vec![2, 3]);
        let t3 = splitting_type(&f, 3).unwrap();
        assert_eq!(t3.len(), 1);
        assert_eq!(t3[0].kind, PrimeKind::Inert);
        assert_eq!(t3[0].norm(), 9);
        let t2 = splitting_type(&f, 2).unwrap();
        assert_eq!(t2[0].kind, PrimeKind::Ramified);
        assert!(matches!(splitting_type(&f, 9), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn roots_satisfy_congruence() {
        for n in [1u64, 2, 3, 5, 6, 7, 10, 12, 23] {
            let f = build_field(n as i64).unwrap();
            for p in crate::arith::primes_up_to(300) {
                for tag in splitting_type(&f, p).unwrap() {
                    if let Some(r) = tag.root {
                        let t = f.omega_trace.rem_euclid(p as i64) as u64;
                        let mu = f.omega_norm.rem_euclid(p as i64) as u64;
                        assert_eq!((r * r + mu + p * p - t * r) % p, 0, "n={n} p={p}");
                    }
                }
            }
        }
    }

    #[test]
    fn enumeration_small() {
        let f = gaussian();
        let norms: Vec<u64> = enumerate_ideals(&f, 10).unwrap().map(|i| i.norm()).collect();
        assert_eq!(norms, vec![1, 2, 4, 5, 5, 8, 9, 10, 10]);
        let one: Vec<_> = enumerate_ideals(&f, 1).unwrap().collect();
        assert_eq!(one, vec![IdealFactorization::unit()]);
        let two: Vec<_> = enumerate_ideals(&f, 2).unwrap().collect();
        assert_eq!(two.len(), 2);
        assert_eq!(two[1].factors().keys().next().unwrap().kind, PrimeKind::Ramified);
        assert!(matches!(
            enumerate_ideals(&f, 10_000_001),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn arithmetic_functions() {
        let f = gaussian();
        let t5 = splitting_type(&f, 5).unwrap();
        let five = IdealFactorization::from_factors([(t5[0], 1), (t5[1], 1)]);
        assert_eq!(five.norm(), 25);
        assert_eq!(tau(&five), 4);
        let two = IdealFactorization::prime_power(splitting_type(&f, 2).unwrap()[0], 2);
        assert_eq!(tau(&two), 3);
        assert_eq!(mobius(&two), 0);
        assert_eq!(mobius(&IdealFactorization::unit()), 1);
        assert_eq!(mobius(&IdealFactorization::prime_power(t5[0], 1)), -1);
        assert_eq!(von_mangoldt(&IdealFactorization::unit()), 0.0);
        assert!((von_mangoldt(&IdealFactorization::prime_power(t5[0], 3)) - 5f64.ln()).abs() < 1e-15);
        assert_eq!(von_mangoldt(&five), 0.0);
    }

    #[test]
    fn sums_examples() {
        let f = gaussian();
        assert_eq!(ideal_sums(&f, 10, 0).unwrap(), IdealSums { count: 9, tau_power_sum: 9 });
        assert_eq!(ideal_sums(&f, 10, 1).unwrap().tau_power_sum, 24);
        assert_eq!(ideal_sums(&f, 1, 3).unwrap(), IdealSums { count: 1, tau_power_sum: 1 });
    }

    #[test]
    fn sums_match_enumeration() {
        for n in [1i64, 2, 3, 5, 12] {
            let f = build_field(n).unwrap();
            let ids: Vec<_> = enumerate_ideals(&f, 3000).unwrap().collect();
            for k in 0..=3u32 {
                let s = ideal_sums(&f, 3000, k).unwrap();
                assert_eq!(s.count, ids.len() as u64);
                let direct: u128 = ids.iter().map(|i| (i.tau() as u128).pow(k)).sum();
                assert_eq!(s.tau_power_sum, direct, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn vaughan_examples() {
        let f = gaussian();
        let t5 = splitting_type(&f, 5).unwrap();
        let p = IdealFactorization::prime_power(t5[0], 1);
        let r = vaughan_check(&f, &p, 2, 2).unwrap();
        assert!((r.s1 - 5f64.ln()).abs() < 1e-12);
        assert_eq!((r.s2, r.s3), (0.0, 0.0));
        assert!(r.residual.abs() < 1e-12);

        let three = IdealFactorization::prime_power(splitting_type(&f, 3).unwrap()[0], 1);
        let r = vaughan_check(&f, &three, 2, 2).unwrap();
        assert!((r.s1 - r.s2 + r.s3 - 9f64.ln()).abs() < 1e-12);

        let r = vaughan_check(&f, &p, 1, 1).unwrap();
        assert_eq!((r.s2, r.s3), (0.0, 0.0));
        assert!((r.s1 - 5f64.ln()).abs() < 1e-12);

        // For a cube, S1 = log N and S3 picks up the pairs (p, p) and (p^2, p).
        let p3 = IdealFactorization::prime_power(t5[1], 3);
        let r = vaughan_check(&f, &p3, 1, 1).unwrap();
        assert_eq!(r.s2, 0.0);
        assert!((r.s1 - 3.0 * 5f64.ln()).abs() < 1e-12);
        assert!((r.s3 + 2.0 * 5f64.ln()).abs() < 1e-12);
        assert!(r.residual.abs() < 1e-12);

        assert!(matches!(vaughan_check(&f, &p, 5, 2), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn type2_examples() {
        let f = gaussian();
        let t5 = splitting_type(&f, 5).unwrap();
        let a = IdealFactorization::prime_power(t5[0], 1);
        assert_eq!(type2_coefficients(&f, VaughanSum::S1, &a, &a, 3, 3).0, -1.0);
        let unit = IdealFactorization::unit();
        assert_eq!(type2_coefficients(&f, VaughanSum::S3, &unit, &a, 1, 1).0, 0.0);
        let five = IdealFactorization::from_factors([(t5[0], 1), (t5[1], 1)]);
        let (_, y) = type2_coefficients(&f, VaughanSum::S2, &unit, &five, 5, 5);
        assert!((y - 2.0 * 5f64.ln()).abs() < 1e-12);
    }

    /// Summing the bilinear coefficients over factorizations `ab = n` gives back each sum.
    #[test]
    fn bilinear_forms_reconstruct_sums() {
        for n in [1i64, 5] {
            let f = build_field(n).unwrap();
            let (u, v) = (12, 12);
            for id in enumerate_ideals(&f, 800).unwrap().filter(|i| i.norm() > u) {
                let terms = vaughan_check(&f, &id, u, v).unwrap();
                let mut sums = [0.0f64; 3];
                for a in id.divisors() {
                    let b = a.quotient_of(&id);
                    for (slot, which) in [VaughanSum::S1, VaughanSum::S2, VaughanSum::S3]
                        .into_iter()
                        .enumerate()
                    {
                        if which == VaughanSum::S1 && a.norm() > v {
                            continue;
                        }
                        let (x, y) = type2_coefficients(&f, which, &a, &b, u, v);
                        sums[slot] += x * y;
                    }
                }
                assert!((sums[0] - terms.s1).abs() < 1e-9, "{id}");
                assert!((sums[1] - terms.s2).abs() < 1e-9, "{id}");
                assert!((sums[2] - terms.s3).abs() < 1e-9, "{id}");
            }
        }
    }
}
