use normform::averages::{self, Normalization, Signal, ToySystem};
use normform::expsums::{self, ReducedFraction};
use normform::ideals::{enumerate_ideals, vaughan_check};
use normform::iw::{iw_base_set, iw_frequencies, IWConfig};
use normform::normprimes::{build_sieve, residue_form_count, PnSieve, SieveConfig, DEFAULT_MAX_LIMIT};
use normform::quadfield::QuadField;
use normform::spectrum::{self, ArcSpec};
use normform::{arith, varops, Error, Result};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::output::{cell, Output};
use crate::{Cli, Command};

fn sieve_for(cli: &Cli, n: u64, x: u64) -> Result<PnSieve> {
    let cfg = SieveConfig {
        cache_dir: (!cli.no_cache).then(|| cli.cache_dir.clone()),
        max_limit: DEFAULT_MAX_LIMIT,
    };
    build_sieve(n, x, &cfg)
}

fn cplx(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn parse_signal(spec: &str) -> Result<Signal> {
    let bad = |s: &str| Error::InvalidInput(format!("signal entry {s:?} is not x:re[:im]"));
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|entry| {
            let parts: Vec<&str> = entry.trim().split(':').collect();
            if !(2..=3).contains(&parts.len()) {
                return Err(bad(entry));
            }
            let x: i64 = parts[0].parse().map_err(|_| bad(entry))?;
            let re: f64 = parts[1].parse().map_err(|_| bad(entry))?;
            let im: f64 = match parts.get(2) {
                Some(s) => s.parse().map_err(|_| bad(entry))?,
                None => 0.0,
            };
            if !(re.is_finite() && im.is_finite()) {
                return Err(bad(entry));
            }
            Ok((x, Complex64::new(re, im)))
        })
        .collect()
}

pub fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Sieve { n, x } => {
            let sieve = sieve_for(cli, *n, *x)?;
            let members = sieve.members_up_to(*x);
            Ok(Output {
                header: vec!["p"],
                rows: members.iter().map(|p| vec![cell(p)]).collect(),
                json: json!({
                    "n": n,
                    "x": x,
                    "count": members.len(),
                    "weighted_count": sieve.weighted_count(*x)?,
                    "members": members,
                }),
            })
        }
        Command::Expsum { n, poly, q, a } => {
            let field = QuadField::new(*n)?;
            let fracs: Vec<ReducedFraction> = match a {
                Some(a) => vec![ReducedFraction::new(*a, *q)?],
                None if *q == 0 => return Err(Error::InvalidInput("denominator must be positive".into())),
                None => {
                    (0..*q).filter(|&a| arith::gcd(a, *q) == 1).map(|a| ReducedFraction { a, q: *q }).collect()
                }
            };
            let mut rows = Vec::new();
            let mut items = Vec::new();
            for f in fracs {
                let s = expsums::weyl_sum(&field, &poly.poly, f)?;
                let c = expsums::coefficient(&field, &poly.poly, f)?;
                rows.push(vec![cell(f.a), cell(f.q), cell(s.re), cell(s.im), cell(c.re), cell(c.im)]);
                items.push(json!({ "a": f.a, "q": f.q, "sum": cplx(s), "coefficient": cplx(c) }));
            }
            Ok(Output {
                header: vec!["a", "q", "re", "im", "coefficient_re", "coefficient_im"],
                rows,
                json: json!({ "n": n, "poly": poly.poly.coeffs(), "q": q, "sums": items }),
            })
        }
        Command::SpectrumScan { n, poly, m, b, grid } => {
            if *grid == 0 {
                return Err(Error::InvalidParameter("grid must be positive".into()));
            }
            let field = QuadField::new(*n)?;
            let sieve = sieve_for(cli, *n, *m)?;
            let rows = spectrum::approximation_grid(&sieve, &field, &poly.poly, *m, *b, *grid)?;
            let best = rows.iter().fold(&rows[0], |acc, r| if r.err > acc.err { r } else { acc });
            Ok(Output {
                header: vec!["alpha", "khat_re", "khat_im", "lhat_re", "lhat_im", "err"],
                rows: rows
                    .iter()
                    .map(|r| vec![cell(r.alpha), cell(r.khat.re), cell(r.khat.im), cell(r.lhat.re), cell(r.lhat.im), cell(r.err)])
                    .collect(),
                json: json!({
                    "n": n,
                    "poly": poly.poly.coeffs(),
                    "m": m,
                    "B": b,
                    "grid": grid,
                    "sup_err": best.err,
                    "argmax_alpha": best.alpha,
                    "rows": rows.iter().map(|r| json!({
                        "alpha": r.alpha, "khat": cplx(r.khat), "lhat": cplx(r.lhat), "err": r.err,
                    })).collect::<Vec<_>>(),
                }),
            })
        }
        Command::MajorArc { n, poly, x, a, q, alpha, b } => {
            let field = QuadField::new(*n)?;
            let frac = ReducedFraction::new(*a, *q)?;
            let alpha = alpha.unwrap_or(*a as f64 / *q as f64);
            let xmax = *x.iter().max().expect("clap requires at least one x");
            let sieve = sieve_for(cli, *n, xmax)?;
            let mut rows = Vec::new();
            let mut items = Vec::new();
            for &xi in x {
                let arc = ArcSpec::new(xi, *b, poly.poly.degree())?;
                let r = spectrum::major_arc_residual(&sieve, &field, &poly.poly, &arc, frac, alpha)?;
                rows.push(vec![cell(xi), cell(r.lhs.re), cell(r.lhs.im), cell(r.main.re), cell(r.main.im), cell(r.residual_over_x)]);
                items.push(json!({ "x": xi, "lhs": cplx(r.lhs), "main": cplx(r.main), "residual_over_x": r.residual_over_x }));
            }
            Ok(Output {
                header: vec!["x", "lhs_re", "lhs_im", "main_re", "main_im", "residual_over_x"],
                rows,
                json: json!({ "n": n, "poly": poly.poly.coeffs(), "a": frac.a, "q": frac.q, "alpha": alpha, "B": b, "rows": items }),
            })
        }
        Command::MinorArc { n, poly, alpha, x, b } => {
            let xmax = *x.iter().max().expect("clap requires at least one x");
            let sieve = sieve_for(cli, *n, xmax)?;
            let rows = spectrum::minor_arc_scan(&sieve, &poly.poly, *b, alpha, x)?;
            Ok(Output {
                header: vec!["alpha", "x", "value", "major"],
                rows: rows.iter().map(|r| vec![cell(r.alpha), cell(r.x), cell(r.value), cell(r.major)]).collect(),
                json: json!({ "n": n, "poly": poly.poly.coeffs(), "B": b, "rows": rows }),
            })
        }
        Command::Vaughan { n, x, u, v } => {
            let field = QuadField::new(*n)?;
            let mut rows = Vec::new();
            let mut items = Vec::new();
            let mut max_residual = 0.0f64;
            for ideal in enumerate_ideals(&field, *x)? {
                if ideal.norm() <= *u {
                    continue;
                }
                let t = vaughan_check(&field, &ideal, *u, *v)?;
                let lam = ideal.von_mangoldt();
                max_residual = max_residual.max(t.residual.abs());
                rows.push(vec![cell(&ideal), cell(ideal.norm()), cell(lam), cell(t.s1), cell(t.s2), cell(t.s3), cell(t.residual)]);
                items.push(json!({
                    "ideal": ideal.to_string(), "norm": ideal.norm(), "lambda": lam,
                    "s1": t.s1, "s2": t.s2, "s3": t.s3, "residual": t.residual,
                }));
            }
            Ok(Output {
                header: vec!["ideal", "norm", "lambda", "s1", "s2", "s3", "residual"],
                rows,
                json: json!({ "n": n, "x": x, "U": u, "V": v, "count": items.len(), "max_residual": max_residual, "ideals": items }),
            })
        }
        Command::Residue { n, p } => {
            let mut rows = Vec::new();
            let mut items = Vec::new();
            for b in 1..*p {
                let count = residue_form_count(*n, *p, b as i64)?;
                let expected = *p - 1;
                rows.push(vec![cell(b), cell(count), cell(expected)]);
                items.push(json!({ "b": b, "count": count, "expected": expected }));
            }
            Ok(Output {
                header: vec!["b", "count", "expected"],
                rows,
                json: json!({ "n": n, "p": p, "rows": items }),
            })
        }
        Command::Avg { n, poly, scales, point, modulus, step, signal, random_signal, weighted } => {
            let f = match random_signal {
                Some(len) => averages::random_signal(cli.seed, *len),
                None => parse_signal(signal)?,
            };
            let sys = match modulus {
                Some(modulus) => ToySystem::Cyclic { modulus: *modulus, step: *step },
                None => ToySystem::Shift,
            };
            let norm = if *weighted { Normalization::Weighted } else { Normalization::Unweighted };
            let mmax = scales.iter().copied().max().expect("clap requires at least one scale");
            let sieve = sieve_for(cli, *n, mmax)?;
            let vals = averages::avg_sequence(&sieve, &poly.poly, sys, &f, *point, scales, norm)?;
            Ok(Output {
                header: vec!["m", "re", "im"],
                rows: scales.iter().zip(&vals).map(|(m, z)| vec![cell(m), cell(z.re), cell(z.im)]).collect(),
                json: json!({
                    "n": n,
                    "poly": poly.poly.coeffs(),
                    "system": sys,
                    "normalization": norm,
                    "point": point,
                    "values": scales.iter().zip(&vals).map(|(m, z)| json!({ "m": m, "re": z.re, "im": z.im })).collect::<Vec<_>>(),
                }),
            })
        }
        Command::Varcheck { count } => {
            let report = varops::corpus_check(cli.seed, *count)?;
            Ok(Output {
                header: vec!["name", "checked", "violations", "max_slack"],
                rows: report
                    .checks
                    .iter()
                    .map(|c| vec![cell(&c.name), cell(c.checked), cell(c.violations), cell(c.max_slack)])
                    .collect(),
                json: json!({ "seed": cli.seed, "count": count, "violations": report.violations(), "checks": report.checks }),
            })
        }
        Command::Iw { rho, big_n, q_cap } => {
            let cfg = IWConfig::new(*rho, *big_n, *q_cap)?;
            let base: Vec<String> = iw_base_set(&cfg).iter().map(|q| q.to_string()).collect();
            let freq_count = match q_cap {
                Some(_) => Some(iw_frequencies(&cfg)?.len()),
                None => None,
            };
            Ok(Output {
                header: vec!["q"],
                rows: base.iter().map(|q| vec![q.clone()]).collect(),
                json: json!({ "rho": rho, "N": big_n, "R": cfg.r, "q_cap": q_cap, "base_set": base, "frequency_count": freq_count }),
            })
        }
    }
}
