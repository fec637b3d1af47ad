mod common;

use kloostpath::modring::{PrimePowerModulus, SqrtBranch};
use kloostpath::paths::{
    alpha, beta, completion_identity_check, incomplete_sum, path_eval, path_vertices, rearranged_by_restriction,
    rearranged_vertices, renormalized_eval,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn endpoints_match_oracle() {
    for (p, n, a, b) in [(3, 5, 1, 1), (5, 3, 2, 3), (7, 3, 10, 1)] {
        let m = PrimePowerModulus::new(p, n).unwrap();
        let path = path_vertices(&m, a, b).unwrap();
        let (re, im) = common::kloosterman(p, n, a, b);
        assert!((path.endpoint().re - re).abs() < 1e-9);
        assert!((path.endpoint().im - im).abs() < 1e-9);
        assert_eq!(path.len() as u64, m.phi());
    }
}

#[test]
fn completion_residual_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [3u64, 5] {
        for n in 2..=if p == 3 { 6 } else { 4 } {
            let m = PrimePowerModulus::new(p, n).unwrap();
            let br = SqrtBranch::new(m.clone());
            for _ in 0..20 {
                let a = loop {
                    let a = rng.gen_range(1..m.q());
                    if m.is_unit(a) {
                        break a;
                    }
                };
                let b = if p == 3 { 1 } else { 2 };
                let t: f64 = rng.gen_range(1e-9..=1.0);
                let r = completion_identity_check(a, b, t, &br).unwrap();
                assert!(r < 1e-6, "{p}^{n} a={a} t={t}: {r}");
            }
        }
    }
}

#[test]
fn alpha_bounds_exhaustive() {
    for n in 1..=5 {
        let m = PrimePowerModulus::new(3, n).unwrap();
        let q = m.q() as f64;
        for k in 1..=20 {
            let t = k as f64 / 20.0;
            let half = (m.q() / 2) as i64;
            for h in -half..=half {
                let a = alpha(&m, h, t) / q.sqrt();
                if h != 0 {
                    assert!(a.norm() <= (1.0f64).min(1.0 / (2.0 * h.abs() as f64)) + 1e-12);
                }
                assert!((a - beta(h, t)).norm() <= 10.0 / q, "n={n} h={h} t={t}");
            }
        }
    }
}

#[test]
fn rearranged_grouping_identity() {
    for (p, n, a, b) in [(3, 4, 1, 1), (5, 3, 4, 1), (3, 2, 1, 1), (7, 3, 2, 1)] {
        let m = PrimePowerModulus::new(p, n).unwrap();
        let path = rearranged_vertices(&m, a, b).unwrap();
        let alt = rearranged_by_restriction(&m, a, b).unwrap();
        for (u, v) in path.vertices.iter().zip(&alt) {
            assert!((u - v).norm() < 1e-9);
        }
        let (re, _) = common::kloosterman(p, n, a, b);
        if common::legendre(a * b, p) == 1 {
            assert!((path.endpoint().re - re).abs() < 1e-9);
        } else {
            assert!(path.vertices.iter().all(|v| v.norm() < 1e-9));
        }
    }
}

#[test]
fn incomplete_sums_cancel() {
    let p = 3u64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut maxima = Vec::new();
    for n in 8..=14 {
        let m = PrimePowerModulus::new(p, n).unwrap();
        let len = (m.q() as f64).powf(0.9) as u64;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let a = rng.gen_range(1..m.q() / p) * p + rng.gen_range(1..p);
            let b = rng.gen_range(1..m.q() / p) * p + 1;
            let start = rng.gen_range(0..m.q());
            let s = incomplete_sum(&m, a, b, start, len) / (m.q() as f64).sqrt();
            worst = worst.max(s.norm());
        }
        maxima.push(worst);
    }
    for w in maxima.windows(2) {
        assert!(w[1] <= 1.2 * w[0], "maxima {maxima:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn renormalized_close_to_standard(p in prop::sample::select(vec![3u64, 5]), n in 2u32..5, a in 1u64..5000, t in 0.001f64..=1.0) {
        let m = PrimePowerModulus::new(p, n).unwrap();
        prop_assume!(m.is_unit(a));
        let path = path_vertices(&m, a, 1).unwrap();
        let d = (renormalized_eval(&m, a, 1, t).unwrap() - path_eval(&path, t).unwrap()).norm();
        prop_assert!(d <= p as f64 / (m.q() as f64).sqrt() + 1e-12);
    }
}
