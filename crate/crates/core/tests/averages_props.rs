use std::sync::OnceLock;

use normform::averages::{ergodic_avg, kernel, maximal_fn, weighted_avg, Signal, ToySystem};
use normform::normprimes::PnSieve;
use normform::phase::e;
use normform::poly::IntPolynomial;
use normform::spectrum::khat;
use num_complex::Complex64;
use proptest::prelude::*;

fn sieve() -> &'static PnSieve {
    static S: OnceLock<PnSieve> = OnceLock::new();
    S.get_or_init(|| PnSieve::compute(1, 5000).unwrap())
}

fn signal_strategy() -> impl Strategy<Value = Signal> {
    prop::collection::vec((-300i64..300, -1.0f64..1.0, -1.0f64..1.0), 0..40)
        .prop_map(|v| v.into_iter().map(|(x, a, b)| (x, Complex64::new(a, b))).collect())
}

fn poly_strategy() -> impl Strategy<Value = IntPolynomial> {
    prop::sample::select(vec![vec![0, 1], vec![0, 0, 1], vec![3, 1], vec![0, -2]]).prop_map(|c| IntPolynomial::new(c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// `A'_m f(x) = sum_y K_m(y) f(x - y)` on the integer shift.
    #[test]
    fn transference_consistency(f in signal_strategy(), poly in poly_strategy(), m in 1u64..70, x in -400i64..400) {
        let k = kernel(sieve(), &poly, m).unwrap();
        let conv: Complex64 = k.iter().map(|(y, kv)| kv * f.get(x - y)).sum();
        let avg = weighted_avg(sieve(), &poly, m, ToySystem::Shift, &f, x).unwrap();
        prop_assert!((conv - avg).norm() <= 1e-12);
    }

    #[test]
    fn linear_and_positive(f in signal_strategy(), g in signal_strategy(), c in -3.0f64..3.0, m in 2u64..400, x in -300i64..300) {
        let id = IntPolynomial::identity();
        let s = sieve();
        let h: Signal = f.iter().map(|(y, v)| (y, v * c)).chain(g.iter()).collect();
        let lhs = ergodic_avg(s, &id, m, ToySystem::Shift, &h, x).unwrap();
        let rhs = ergodic_avg(s, &id, m, ToySystem::Shift, &f, x).unwrap() * c + ergodic_avg(s, &id, m, ToySystem::Shift, &g, x).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12);
        let pos: Signal = f.iter().map(|(y, v)| (y, Complex64::new(v.norm(), 0.0))).collect();
        let a = ergodic_avg(s, &id, m, ToySystem::Shift, &pos, x).unwrap();
        prop_assert!(a.re >= 0.0 && a.im == 0.0);
    }

    /// On `Z/N`, `A_m(f o T)(x) = A_m f(T x)` with `T x = x - c`.
    #[test]
    fn cyclic_invariance(vals in prop::collection::vec(-1.0f64..1.0, 1..30), step in 0u64..40, m in 2u64..2000, x in 0i64..30) {
        let modulus = vals.len() as u64;
        let sys = ToySystem::Cyclic { modulus, step };
        let f: Signal = vals.iter().enumerate().map(|(i, &v)| (i as i64, Complex64::new(v, 0.0))).collect();
        let shift = |y: i64| (y - step as i64).rem_euclid(modulus as i64);
        let ft: Signal = (0..modulus as i64).map(|y| (y, f.get(shift(y)))).collect();
        let poly = IntPolynomial::new(vec![1, 0, 1]).unwrap();
        let lhs = ergodic_avg(sieve(), &poly, m, sys, &ft, x).unwrap();
        let rhs = ergodic_avg(sieve(), &poly, m, sys, &f, shift(x)).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn kernel_fourier_matches_khat(poly in poly_strategy(), m in 1u64..5000, alpha in 0.0f64..1.0) {
        let k = kernel(sieve(), &poly, m).unwrap();
        let dft: Complex64 = k.iter().map(|(y, v)| v * e(alpha * y as f64)).sum();
        let direct = khat(sieve(), &poly, m, alpha).unwrap();
        prop_assert!((dft - direct).norm() <= 1e-9);
    }

    #[test]
    fn maximal_bounds(f in signal_strategy(), cap_exp in 0u32..12) {
        let cap = 1u64 << cap_exp;
        let id = IntPolynomial::identity();
        let pos: Signal = f.iter().map(|(y, v)| (y, Complex64::new(v.norm(), 0.0))).collect();
        let mx = maximal_fn(sieve(), &id, &pos, cap).unwrap();
        let top = kernel(sieve(), &id, cap).unwrap();
        let max_mass = (0..=cap_exp).map(|j| kernel(sieve(), &id, 1 << j).unwrap().l1()).fold(0.0, f64::max);
        prop_assert!(mx.sup_norm() <= pos.sup_norm() * max_mass + 1e-12);
        for (y, _) in pos.iter() {
            for (k, _) in top.iter() {
                let x = y + k;
                let conv: f64 = top.iter().map(|(kk, kv)| kv.re * pos.get(x - kk).re).sum();
                prop_assert!(mx.get(x).re >= 0.5 * conv - 1e-12);
            }
        }
    }
}
