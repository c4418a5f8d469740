//! Variation, oscillation and jump operators on finite sequences, their long and
//! short parts, and the weight-transference construction.
//!
//! Public indices (oscillation lists `I`, long-part sets `A`) are 1-based, as in
//! `f_1, ..., f_L`. An oscillation list may end with the sentinel `L + 1`, which
//! lets the last window run to the end of the sequence.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance on `lhs - rhs` before a check counts as violated.
pub const SLACK: f64 = 1e-9;

type C = Complex64;

fn check_len(seq: &[C]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::InvalidInput("sequence must be non-empty".into()));
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 1.0) {
        return Err(Error::InvalidParameter(format!("r = {r} must be at least 1")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    Ok(())
}

fn pow_r(d: C, r: f64) -> f64 {
    if r == 2.0 {
        d.norm_sqr()
    } else {
        d.norm().powf(r)
    }
}

/// `V^r` by dynamic programming over the last chosen index.
pub fn v_variation(seq: &[C], r: f64) -> Result<f64> {
    check_r(r)?;
    check_len(seq)?;
    let mut best = vec![0.0f64; seq.len()];
    for j in 1..seq.len() {
        best[j] = (0..j).map(|i| best[i] + pow_r(seq[j] - seq[i], r)).fold(0.0, f64::max);
    }
    Ok(best.iter().cloned().fold(0.0, f64::max).powf(1.0 / r))
}

/// `V^r` by enumerating every subsequence; `L <= 20`.
pub fn v_variation_exhaustive(seq: &[C], r: f64) -> Result<f64> {
    check_r(r)?;
    check_len(seq)?;
    if seq.len() > 20 {
        return Err(Error::InvalidInput("exhaustive variation needs L <= 20".into()));
    }
    let mut best = 0.0f64;
    for mask in 1u32..(1 << seq.len()) {
        let mut prev: Option<usize> = None;
        let mut s = 0.0;
        for i in (0..seq.len()).filter(|i| mask >> i & 1 == 1) {
            if let Some(p) = prev {
                s += pow_r(seq[i] - seq[p], r);
            }
            prev = Some(i);
        }
        best = best.max(s);
    }
    Ok(best.powf(1.0 / r))
}

fn check_osc_indices(len: usize, idx: &[usize]) -> Result<()> {
    if idx.is_empty() {
        return Err(Error::InvalidParameter("oscillation index list is empty".into()));
    }
    if idx.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("oscillation indices must be strictly increasing".into()));
    }
    let last_ok = idx[idx.len() - 1] <= len + 1;
    let body_ok = idx[..idx.len() - 1].iter().all(|&i| i <= len);
    if idx[0] == 0 || !last_ok || !body_ok {
        return Err(Error::InvalidParameter(format!("oscillation indices must lie in 1..={len} (or end at {})", len + 1)));
    }
    Ok(())
}

/// `(sum_j sup_{i in [s_j, e_j]} |f_i - f_{s_j}|^2)^{1/2}` over closed 1-based windows.
pub fn oscillation_windows(seq: &[C], windows: &[(usize, usize)]) -> f64 {
    windows
        .iter()
        .map(|&(s, e)| (s..=e).map(|i| (seq[i - 1] - seq[s - 1]).norm_sqr()).fold(0.0, f64::max))
        .sum::<f64>()
        .sqrt()
}

/// `Osc_I` with windows `[I_j, I_{j+1})` for `j < M`.
pub fn oscillation(seq: &[C], idx: &[usize]) -> Result<f64> {
    check_len(seq)?;
    check_osc_indices(seq.len(), idx)?;
    let windows: Vec<(usize, usize)> = idx.windows(2).map(|w| (w[0], w[1] - 1)).collect();
    Ok(oscillation_windows(seq, &windows))
}

struct Level {
    pts: Vec<C>,
    lo: C,
    hi: C,
}

impl Level {
    fn new(z: C) -> Self {
        Self { pts: vec![z], lo: z, hi: z }
    }

    fn push(&mut self, z: C) {
        self.pts.push(z);
        self.lo = C::new(self.lo.re.min(z.re), self.lo.im.min(z.im));
        self.hi = C::new(self.hi.re.max(z.re), self.hi.im.max(z.im));
    }

    /// Whether some stored point is farther than `lambda` from `z`.
    fn has_far(&self, z: C, lambda: f64) -> bool {
        let dx = (z.re - self.lo.re).abs().max((z.re - self.hi.re).abs());
        let dy = (z.im - self.lo.im).abs().max((z.im - self.hi.im).abs());
        if dx * dx + dy * dy <= lambda * lambda {
            return false;
        }
        self.pts.iter().any(|&p| (z - p).norm() > lambda)
    }
}

/// `N_lambda`: the longest chain with consecutive gaps `> lambda`.
///
/// Points are filed by the longest chain ending at them; a new point extends
/// the highest level holding a point farther than `lambda`.
pub fn jump_count(seq: &[C], lambda: f64) -> Result<u64> {
    check_lambda(lambda)?;
    check_len(seq)?;
    let mut levels: Vec<Level> = Vec::new();
    for &z in seq {
        let k = (0..levels.len()).rev().find(|&k| levels[k].has_far(z, lambda)).map_or(0, |k| k + 1);
        if k == levels.len() {
            levels.push(Level::new(z));
        } else {
            levels[k].push(z);
        }
    }
    Ok(levels.len() as u64 - 1)
}

/// Quadratic chain DP for `N_lambda`.
pub fn jump_count_dp(seq: &[C], lambda: f64) -> Result<u64> {
    check_lambda(lambda)?;
    check_len(seq)?;
    let mut best = vec![0u64; seq.len()];
    for j in 1..seq.len() {
        best[j] = (0..j).filter(|&i| (seq[j] - seq[i]).norm() > lambda).map(|i| best[i] + 1).max().unwrap_or(0);
    }
    Ok(best.into_iter().max().unwrap_or(0))
}

/// `lambda * N_lambda^{1/2}`.
pub fn jump_operator(seq: &[C], lambda: f64) -> Result<f64> {
    Ok(lambda * (jump_count(seq, lambda)? as f64).sqrt())
}

fn diameter(seq: &[C]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            d = d.max((seq[i] - seq[j]).norm());
        }
    }
    d
}

/// `sqrt(2) sum_i (sum_j |f_{2^i (j+1)} - f_{2^i j}|^2)^{1/2}` with 0-based
/// indices and every difference kept inside the sequence.
pub fn rademacher_menshov_bound(seq: &[C]) -> Result<f64> {
    check_len(seq)?;
    let last = seq.len() - 1;
    let mut total = 0.0;
    let mut step = 1usize;
    while step <= last {
        let level: f64 = (0..).map(|j| (j * step, (j + 1) * step)).take_while(|&(_, b)| b <= last).map(|(a, b)| (seq[b] - seq[a]).norm_sqr()).sum();
        total += level.sqrt();
        step *= 2;
    }
    Ok(std::f64::consts::SQRT_2 * total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpSpec {
    Variation { r: f64 },
    Oscillation { indices: Vec<usize> },
    Jump { lambda: f64 },
}

impl OpSpec {
    /// `r / (r - 2)` for variations, 1 otherwise.
    pub fn r_factor(&self) -> f64 {
        match *self {
            OpSpec::Variation { r } => r / (r - 2.0),
            _ => 1.0,
        }
    }

    /// The operator's value on `seq`; jumps give `lambda N_lambda^{1/2}`.
    pub fn eval(&self, seq: &[C]) -> Result<f64> {
        match self {
            OpSpec::Variation { r } => v_variation(seq, *r),
            OpSpec::Oscillation { indices } => oscillation(seq, indices),
            OpSpec::Jump { lambda } => jump_operator(seq, *lambda),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub checked: u64,
    pub violations: u64,
    /// Largest observed `lhs - rhs`.
    pub max_slack: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct InequalityReport {
    pub checks: Vec<InequalityCheck>,
}

impl InequalityReport {
    pub fn new() -> Self {
        Self::default()
    }

    fn entry(&mut self, name: &str) -> &mut InequalityCheck {
        let pos = match self.checks.iter().position(|c| c.name == name) {
            Some(p) => p,
            None => {
                self.checks.push(InequalityCheck {
                    name: name.to_string(),
                    checked: 0,
                    violations: 0,
                    max_slack: f64::NEG_INFINITY,
                });
                self.checks.len() - 1
            }
        };
        &mut self.checks[pos]
    }

    /// Records `lhs <= rhs`.
    pub fn record(&mut self, name: &str, lhs: f64, rhs: f64) {
        let e = self.entry(name);
        let slack = lhs - rhs;
        e.checked += 1;
        if !(slack <= SLACK) {
            e.violations += 1;
        }
        if slack > e.max_slack || slack.is_nan() {
            e.max_slack = slack;
        }
    }

    pub fn merge(&mut self, other: &InequalityReport) {
        for c in &other.checks {
            let e = self.entry(&c.name);
            e.checked += c.checked;
            e.violations += c.violations;
            e.max_slack = e.max_slack.max(c.max_slack);
        }
    }

    pub fn violations(&self) -> u64 {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn get(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Domination by `V^2`, subadditivity, the quasi-triangle inequality for jumps
/// and the Rademacher-Menshov bound, for `f` and a companion `g` of equal length.
pub fn inequality_suite(f: &[C], g: &[C], specs: &[OpSpec]) -> Result<InequalityReport> {
    check_len(f)?;
    if g.len() != f.len() {
        return Err(Error::InvalidInput("companion sequence must have the same length".into()));
    }
    let sum: Vec<C> = f.iter().zip(g).map(|(a, b)| a + b).collect();
    let v2 = v_variation(f, 2.0)?;
    let mut rep = InequalityReport::new();
    rep.record("rademacher_menshov", v2, rademacher_menshov_bound(f)?);
    for spec in specs {
        let u = spec.eval(f)?;
        match spec {
            OpSpec::Variation { .. } => {
                rep.record("variation_le_v2", u, v2);
                rep.record("variation_subadditive", spec.eval(&sum)?, u + spec.eval(g)?);
            }
            OpSpec::Oscillation { .. } => {
                rep.record("oscillation_le_v2", u, v2);
                rep.record("oscillation_subadditive", spec.eval(&sum)?, u + spec.eval(g)?);
            }
            &OpSpec::Jump { lambda } => {
                rep.record("jump_le_v2", u, v2);
                let lhs = jump_operator(&sum, lambda)?;
                let half = |s: &[C]| -> Result<f64> { Ok(lambda * (jump_count(s, lambda / 2.0)? as f64).sqrt()) };
                let quarter = |s: &[C]| -> Result<f64> { Ok(lambda * (jump_count(s, lambda / 4.0)? as f64).sqrt()) };
                rep.record("quasi_triangle", lhs, half(f)? + half(g)?);
                rep.record("quasi_triangle_quarter", lhs, quarter(f)? + quarter(g)?);
            }
        }
    }
    Ok(rep)
}

fn check_a(len: usize, a: &[usize]) -> Result<()> {
    if a.first() != Some(&1) {
        return Err(Error::InvalidInput("long-part index set must start at 1".into()));
    }
    if a.windows(2).any(|w| w[0] >= w[1]) || a[a.len() - 1] > len {
        return Err(Error::InvalidInput(format!("long-part indices must increase within 1..={len}")));
    }
    Ok(())
}

fn subsequence(seq: &[C], a: &[usize]) -> Vec<C> {
    a.iter().map(|&i| seq[i - 1]).collect()
}

/// `V^r` of `(f_{A_n})`.
pub fn long_variation(seq: &[C], a: &[usize], r: f64) -> Result<f64> {
    check_len(seq)?;
    check_a(seq.len(), a)?;
    v_variation(&subsequence(seq, a), r)
}

/// `(sum_n V^r(f on [A_n, A_{n+1}))^r)^{1/r}`, the last block running to `L`.
pub fn short_variation(seq: &[C], a: &[usize], r: f64) -> Result<f64> {
    check_len(seq)?;
    check_a(seq.len(), a)?;
    check_r(r)?;
    let mut total = 0.0;
    for (n, &start) in a.iter().enumerate() {
        let end = a.get(n + 1).map_or(seq.len(), |&next| next - 1);
        total += v_variation(&seq[start - 1..end], r)?.powf(r);
    }
    Ok(total.powf(1.0 / r))
}

/// Most disjoint pairs `s_1 < t_1 <= s_2 < t_2 <= ...` of positions in `A`
/// with `|f_{A_t} - f_{A_s}| > lambda`.
pub fn long_jump_count(seq: &[C], a: &[usize], lambda: f64) -> Result<u64> {
    check_len(seq)?;
    check_a(seq.len(), a)?;
    check_lambda(lambda)?;
    let g = subsequence(seq, a);
    let mut dp = vec![0u64; g.len()];
    for k in 1..g.len() {
        let pair = (0..k).filter(|&s| (g[k] - g[s]).norm() > lambda).map(|s| dp[s] + 1).max().unwrap_or(0);
        dp[k] = dp[k - 1].max(pair);
    }
    Ok(dp[g.len() - 1])
}

/// `Osc^L_{I,A}` with `J_j = max{A_i <= I_j}` and closed windows `[J_j, J_{j+1}]`.
pub fn long_oscillation(seq: &[C], a: &[usize], idx: &[usize]) -> Result<f64> {
    check_len(seq)?;
    check_a(seq.len(), a)?;
    check_osc_indices(seq.len(), idx)?;
    let j_of = |i: usize| a.partition_point(|&x| x <= i) - 1;
    let js: Vec<usize> = idx.iter().map(|&i| j_of(i)).collect();
    Ok(js
        .windows(2)
        .map(|w| (w[0]..=w[1]).map(|t| (seq[a[t] - 1] - seq[a[w[0]] - 1]).norm_sqr()).fold(0.0, f64::max))
        .sum::<f64>()
        .sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LongShortValues {
    pub variation: f64,
    pub long_variation: f64,
    pub short_variation: f64,
    pub short_variation_2: f64,
    pub jump_count: u64,
    pub long_jump_count: u64,
    pub oscillation: f64,
    pub long_oscillation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LongShortReport {
    pub values: LongShortValues,
    pub report: InequalityReport,
}

/// Long/short splittings with constants 2, 9, 5 and the merged 27 (jump exponent 2).
pub fn long_short_split(seq: &[C], a: &[usize], r: f64, lambda: f64, idx: &[usize]) -> Result<LongShortReport> {
    check_lambda(lambda)?;
    let values = LongShortValues {
        variation: v_variation(seq, r)?,
        long_variation: long_variation(seq, a, r)?,
        short_variation: short_variation(seq, a, r)?,
        short_variation_2: short_variation(seq, a, 2.0)?,
        jump_count: jump_count(seq, lambda)?,
        long_jump_count: long_jump_count(seq, a, lambda / 3.0)?,
        oscillation: oscillation(seq, idx)?,
        long_oscillation: long_oscillation(seq, a, idx)?,
    };
    let v = &values;
    let jump = lambda * (v.jump_count as f64).sqrt();
    let long_jump = lambda * (v.long_jump_count as f64).sqrt();
    let mut report = InequalityReport::new();
    report.record("variation_split", v.variation, v.long_variation + 2.0 * v.short_variation);
    report.record("jump_split", jump, 9.0 * (v.short_variation_2 + long_jump));
    report.record("oscillation_split", v.oscillation, 5.0 * (v.short_variation_2 + v.long_oscillation));
    report.record("merged_variation", v.variation, 27.0 * (v.short_variation_2 + v.long_variation));
    report.record("merged_jump", jump, 27.0 * (v.short_variation_2 + long_jump / 3.0));
    report.record("merged_oscillation", v.oscillation, 27.0 * (v.short_variation_2 + v.long_oscillation));
    Ok(LongShortReport { values, report })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioMonotonicity {
    /// `w'_n / w_n` nonincreasing.
    Decreasing,
    /// `w'_n / w_n` nondecreasing and not constant.
    Increasing,
}

/// Which operators to compare through the transfer.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferOptions {
    pub r: f64,
    /// Jump thresholds; `None` uses 1/8, 1/4 and 1/2 of the diameter of the `w'` averages.
    pub lambdas: Option<Vec<f64>>,
    /// Oscillation indices; `None` uses every index.
    pub indices: Option<Vec<usize>>,
}

impl Default for TransferOptions {
    fn default() -> Self {
        Self { r: 2.5, lambdas: None, indices: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightTransferReport {
    pub monotonicity: RatioMonotonicity,
    /// `sup_N W_N w'_N / (W'_N w_N)`, reported in the increasing case.
    pub c: Option<f64>,
    /// Common value of `sum_n lambda_n^k` for the nonnegative family.
    pub big_lambda: f64,
    pub pieces: usize,
    pub identity_residual: f64,
    pub report: InequalityReport,
}

fn averages(w: &[f64], a: &[C]) -> Vec<C> {
    let mut num = C::default();
    let mut den = 0.0;
    w.iter()
        .zip(a)
        .map(|(&wn, &an)| {
            num += an * wn;
            den += wn;
            num / den
        })
        .collect()
}

/// `lambda_n^k` (row `k`, 0-based) with `sum_n lambda_n^k B_n = B'_k`.
fn transfer_coefficients(w: &[f64], wp: &[f64]) -> Vec<Vec<f64>> {
    let ratio: Vec<f64> = w.iter().zip(wp).map(|(a, b)| b / a).collect();
    let mut big_w = Vec::with_capacity(w.len());
    let mut big_wp = Vec::with_capacity(w.len());
    let (mut s, mut sp) = (0.0, 0.0);
    for (a, b) in w.iter().zip(wp) {
        s += a;
        sp += b;
        big_w.push(s);
        big_wp.push(sp);
    }
    (0..w.len())
        .map(|k| {
            let mut row: Vec<f64> = (0..k).map(|n| big_w[n] / big_wp[k] * (ratio[n] - ratio[n + 1])).collect();
            row.push(big_w[k] * ratio[k] / big_wp[k]);
            row
        })
        .collect()
}

/// Step functions `t -> N_k(t)` on `[0, Lambda)` for a nonnegative family.
struct StepFamily {
    /// `(length, N_k for every k)` per piece, 1-based indices.
    pieces: Vec<(f64, Vec<usize>)>,
}

impl StepFamily {
    fn new(rows: &[Vec<f64>], big_lambda: f64) -> Self {
        let prefixes: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter().map(|&x| {
                    acc += x;
                    acc
                }).collect()
            })
            .collect();
        let mut cuts: Vec<f64> = prefixes.iter().flatten().copied().filter(|&t| t > 0.0 && t < big_lambda).collect();
        cuts.push(0.0);
        cuts.push(big_lambda);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let pieces = cuts
            .windows(2)
            .filter(|c| c[1] > c[0])
            .map(|c| {
                let t = 0.5 * (c[0] + c[1]);
                let ns = prefixes
                    .iter()
                    .enumerate()
                    .map(|(k, pre)| (pre.partition_point(|&x| x <= t) + 1).min(k + 1))
                    .collect();
                (c[1] - c[0], ns)
            })
            .collect();
        Self { pieces }
    }

    fn integral(&self, k: usize, a: &[C]) -> C {
        self.pieces.iter().map(|(len, ns)| a[ns[k] - 1] * *len).sum()
    }

    /// `sum_t |piece| Osc over closed windows [N_{i_j}(t), N_{i_{j+1}-1}(t)]`.
    fn oscillation_bound(&self, a: &[C], idx: &[usize]) -> f64 {
        let len = a.len();
        self.pieces
            .iter()
            .map(|(l, ns)| {
                let windows: Vec<(usize, usize)> =
                    idx.windows(2).map(|w| (ns[w[0] - 1], ns[(w[1] - 1).min(len) - 1])).collect();
                l * oscillation_windows(a, &windows)
            })
            .sum()
    }
}

/// `sum_{j >= 0} 3^{j/2} lambda N^{1/2}_{2^j lambda / d}(a)`, stopping once the threshold passes the diameter.
fn dyadic_jump_bound(a: &[C], lambda: f64, d: f64) -> Result<f64> {
    let diam = diameter(a);
    let mut total = 0.0;
    let mut j = 0;
    loop {
        let theta = 2f64.powi(j) * lambda / d;
        if theta >= diam {
            return Ok(total);
        }
        total += 3f64.powf(j as f64 / 2.0) * lambda * (jump_count(a, theta)? as f64).sqrt();
        j += 1;
    }
}

pub fn weight_transfer(w: &[f64], wp: &[f64], a: &[C]) -> Result<WeightTransferReport> {
    weight_transfer_with(w, wp, a, &TransferOptions::default())
}

/// Expresses the `w'` averages of `a` through the `w` averages and checks the
/// step-function identity and the transferred variation, oscillation and jump bounds.
pub fn weight_transfer_with(w: &[f64], wp: &[f64], a: &[C], opts: &TransferOptions) -> Result<WeightTransferReport> {
    let len = a.len();
    if len == 0 || w.len() != len || wp.len() != len {
        return Err(Error::InvalidInput("weights and sequence must be non-empty and of equal length".into()));
    }
    if w.iter().chain(wp).any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::InvalidInput("weights must be positive".into()));
    }
    let ratio: Vec<f64> = w.iter().zip(wp).map(|(a, b)| b / a).collect();
    let monotonicity = if ratio.windows(2).all(|r| r[1] <= r[0]) {
        RatioMonotonicity::Decreasing
    } else if ratio.windows(2).all(|r| r[1] >= r[0]) {
        RatioMonotonicity::Increasing
    } else {
        return Err(Error::PreconditionViolated("w'/w is neither nonincreasing nor nondecreasing".into()));
    };

    let b = averages(w, a);
    let bp = averages(wp, a);
    let lam = transfer_coefficients(w, wp);
    let mut report = InequalityReport::new();
    for (k, row) in lam.iter().enumerate() {
        let combo: C = row.iter().zip(&b).map(|(l, x)| x * *l).sum();
        report.record("transfer_average", (combo - bp[k]).norm(), 0.0);
    }

    // Nonnegative family: lambda itself, or mu = 2C e_k - lambda when the ratio increases.
    let (rows, big_lambda, c) = match monotonicity {
        RatioMonotonicity::Decreasing => (lam, 1.0, None),
        RatioMonotonicity::Increasing => {
            let c = lam.iter().map(|row| row[row.len() - 1]).fold(1.0, f64::max);
            let mu: Vec<Vec<f64>> = lam
                .iter()
                .enumerate()
                .map(|(k, row)| row.iter().enumerate().map(|(n, &x)| if n == k { 2.0 * c - x } else { -x }).collect())
                .collect();
            (mu, 2.0 * c - 1.0, Some(c))
        }
    };
    for row in &rows {
        report.record("transfer_nonnegative", -row.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        report.record("transfer_lambda_sum", (row.iter().sum::<f64>() - big_lambda).abs(), 0.0);
    }
    for n in 0..len {
        let sums: Vec<f64> = rows.iter().map(|row| row.iter().take(n + 1).sum()).collect();
        for k in 1..len {
            report.record("transfer_prefix_monotone", sums[k] - sums[k - 1], 0.0);
        }
    }

    let steps = StepFamily::new(&rows, big_lambda);
    let mut identity_residual = 0.0f64;
    for (k, row) in rows.iter().enumerate() {
        let direct: C = row.iter().zip(&b).map(|(l, x)| x * *l).sum();
        let res = (direct - steps.integral(k, &b)).norm();
        identity_residual = identity_residual.max(res);
        report.record("transfer_identity", res, 0.0);
    }

    // The transferred sequence: B' itself, or T = 2C B - B'.
    let scale_b = c.map_or(0.0, |c| 2.0 * c);
    let vr_b = v_variation(&b, opts.r)?;
    report.record("transfer_variation", v_variation(&bp, opts.r)?, (scale_b + big_lambda) * vr_b);

    let idx: Vec<usize> = opts.indices.clone().unwrap_or_else(|| (1..=len).collect());
    let osc_rhs = scale_b * oscillation(&b, &idx)? + steps.oscillation_bound(&b, &idx);
    report.record("transfer_oscillation", oscillation(&bp, &idx)?, osc_rhs);

    let diam = diameter(&bp);
    let lambdas = opts.lambdas.clone().unwrap_or_else(|| {
        [0.125, 0.25, 0.5].iter().map(|f| f * diam).filter(|&l| l > 0.0).collect()
    });
    for lambda in lambdas {
        let lhs = jump_operator(&bp, lambda)?;
        let rhs = match c {
            None => dyadic_jump_bound(&b, lambda, 10.0 * big_lambda)?,
            Some(c) => {
                lambda * (jump_count(&b, lambda / (8.0 * c))? as f64).sqrt()
                    + dyadic_jump_bound(&b, lambda, 40.0 * big_lambda)?
            }
        };
        report.record("transfer_jump", lhs, rhs);
    }

    Ok(WeightTransferReport { monotonicity, c, big_lambda, pieces: steps.pieces.len(), identity_residual, report })
}

fn random_point(rng: &mut ChaCha8Rng, real: bool) -> C {
    C::new(rng.gen_range(-1.0..1.0), if real { 0.0 } else { rng.gen_range(-1.0..1.0) })
}

/// A random sequence: i.i.d. points, a random walk, or a slowly converging walk.
pub fn random_sequence(rng: &mut ChaCha8Rng, len: usize) -> Vec<C> {
    let real = rng.gen_bool(0.3);
    match rng.gen_range(0..3) {
        0 => (0..len).map(|_| random_point(rng, real)).collect(),
        1 => {
            let mut z = C::default();
            (0..len).map(|_| { z += random_point(rng, real); z }).collect()
        }
        _ => {
            let mut z = C::default();
            (1..=len).map(|n| { z += random_point(rng, real) / n as f64; z }).collect()
        }
    }
}

fn random_subset_from_one(rng: &mut ChaCha8Rng, len: usize, p: f64) -> Vec<usize> {
    std::iter::once(1).chain((2..=len).filter(|_| rng.gen_bool(p))).collect()
}

fn random_indices(rng: &mut ChaCha8Rng, len: usize) -> Vec<usize> {
    let p = rng.gen_range(0.05..0.6);
    let mut idx: Vec<usize> = (1..=len).filter(|_| rng.gen_bool(p)).collect();
    if idx.is_empty() {
        idx.push(rng.gen_range(1..=len));
    }
    if rng.gen_bool(0.5) {
        idx.push(len + 1);
    }
    idx
}

fn random_weights(rng: &mut ChaCha8Rng, len: usize) -> (Vec<f64>, Vec<f64>) {
    let w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.1..2.0)).collect();
    let mut ratio: Vec<f64> = (0..len).map(|_| rng.gen_range(0.1..3.0)).collect();
    ratio.sort_by(f64::total_cmp);
    if rng.gen_bool(0.5) {
        ratio.reverse();
    }
    let wp = w.iter().zip(&ratio).map(|(a, r)| a * r).collect();
    (w, wp)
}

/// Every check on one random instance: algorithm oracles, the suite, the
/// long/short splittings and (for `L <= 48`) the weight transfer.
pub fn check_instance(seed: u64, stream: u64) -> Result<InequalityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let len = rng.gen_range(1..=128usize);
    let f = random_sequence(&mut rng, len);
    let g = random_sequence(&mut rng, len);
    let mut rep = InequalityReport::new();

    let r = [2.0, 2.5, 3.0, 4.0][rng.gen_range(0..4)];
    let head = &f[..len.min(12)];
    rep.record("variation_dp_exhaustive", (v_variation(head, r)? - v_variation_exhaustive(head, r)?).abs(), 0.0);

    let diam = diameter(&f).max(1e-3);
    let lambdas: Vec<f64> = (0..3).map(|_| rng.gen_range(0.02..1.1) * diam).collect();
    for &l in &lambdas {
        let d = jump_count(&f, l)? as f64 - jump_count_dp(&f, l)? as f64;
        rep.record("jump_frontier_dp", d.abs(), 0.0);
    }

    let mut specs = vec![OpSpec::Variation { r: [2.5, 3.0, 4.0][rng.gen_range(0..3)] }];
    specs.push(OpSpec::Oscillation { indices: random_indices(&mut rng, len) });
    specs.extend(lambdas.iter().map(|&lambda| OpSpec::Jump { lambda }));
    rep.merge(&inequality_suite(&f, &g, &specs)?);

    let p = rng.gen_range(0.05..0.7);
    let a = random_subset_from_one(&mut rng, len, p);
    let idx = random_indices(&mut rng, len);
    rep.merge(&long_short_split(&f, &a, r, lambdas[0], &idx)?.report);

    if len <= 48 {
        let (w, wp) = random_weights(&mut rng, len);
        let opts = TransferOptions { r: 2.0 + rng.gen_range(0.1..2.0), lambdas: None, indices: Some(random_indices(&mut rng, len)) };
        rep.merge(&weight_transfer_with(&w, &wp, &f, &opts)?.report);
    }
    Ok(rep)
}

/// Runs [`check_instance`] on `count` random instances derived from `seed`.
pub fn corpus_check(seed: u64, count: u64) -> Result<InequalityReport> {
    let parts: Vec<InequalityReport> = (0..count).into_par_iter().map(|i| check_instance(seed, i)).collect::<Result<_>>()?;
    let mut out = InequalityReport::new();
    for p in &parts {
        out.merge(p);
    }
    Ok(out)
}
