//! Independent oracles: plain integer loops, no library arithmetic.
#![allow(dead_code)]

use std::f64::consts::TAU;

pub fn pow_mod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Inverse by the extended Euclidean algorithm.
pub fn inv(x: u64, q: u64) -> Option<u64> {
    let (mut r0, mut r1) = (q as i128, (x % q) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (s0, s1) = (s1, s0 - k * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(q as i128) as u64)
}

/// Euler's criterion.
pub fn legendre(x: u64, p: u64) -> i32 {
    let x = x % p;
    if x == 0 {
        return 0;
    }
    if pow_mod(x as u128, ((p - 1) / 2) as u128, p as u128) == 1 {
        1
    } else {
        -1
    }
}

/// `q^{-1/2} Σ_{x unit} e((ax + b x̄)/q)` term by term.
pub fn kloosterman(p: u64, n: u32, a: u64, b: u64) -> (f64, f64) {
    let q = p.pow(n);
    let (mut re, mut im) = (0.0, 0.0);
    for x in 1..q {
        if x % p == 0 {
            continue;
        }
        let xi = inv(x, q).unwrap();
        let u = ((a as u128 * x as u128 + b as u128 * xi as u128) % q as u128) as f64;
        re += (TAU * u / q as f64).cos();
        im += (TAU * u / q as f64).sin();
    }
    let s = (q as f64).sqrt();
    (re / s, im / s)
}

/// All square roots of `x` modulo `q` by scanning.
pub fn square_roots(x: u64, q: u64) -> Vec<u64> {
    (0..q).filter(|&y| (y as u128 * y as u128 % q as u128) as u64 == x % q).collect()
}
