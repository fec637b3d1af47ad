//! Normalized Kloosterman sums `Kl_{p^n}(a, b) = p^{-n/2} Σ_x e((ax + b x̄)/p^n)`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modring::{PrimePowerModulus, SqrtBranch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KloostermanValue {
    pub value: f64,
    pub method: Method,
}

/// `e(u/q) = exp(2πi u/q)`.
#[inline]
pub fn e_q(u: u64, q: u64) -> Complex64 {
    let (s, c) = (TAU * (u as f64 / q as f64)).sin_cos();
    Complex64::new(c, s)
}

/// `e(θ) = exp(2πi θ)` for a real argument.
#[inline]
pub fn e_real(theta: f64) -> Complex64 {
    let (s, c) = (TAU * theta).sin_cos();
    Complex64::new(c, s)
}

fn require_unit(m: &PrimePowerModulus, x: u64) -> Result<()> {
    if m.is_unit(x) {
        Ok(())
    } else {
        Err(Error::NotAUnit { value: x % m.q(), modulus: m.q() })
    }
}

/// Inverses of every residue in `[0, q)`, zero at non-units.
pub fn inverse_table(m: &PrimePowerModulus) -> Vec<u64> {
    let units: Vec<u64> = m.units().collect();
    let inv = m.batch_inv(&units).expect("units are invertible");
    let mut table = vec![0u64; m.q() as usize];
    for (u, v) in units.into_iter().zip(inv) {
        table[u as usize] = v;
    }
    table
}

/// Direct summation over all units `x`.
pub fn kloosterman_naive(m: &PrimePowerModulus, a: u64, b: u64) -> Result<Complex64> {
    require_unit(m, b)?;
    let q = m.q();
    let (a, b) = (a % q, b % q);
    let units: Vec<u64> = m.units().collect();
    let inv = m.batch_inv(&units).expect("units are invertible");
    let mut acc = Complex64::new(0.0, 0.0);
    for (&x, &xi) in units.iter().zip(&inv) {
        acc += e_q(m.add(m.mul(a, x), m.mul(b, xi)), q);
    }
    Ok(acc * (1.0 / (q as f64).sqrt()))
}

/// Rows `a ↦ Kl_{p^n}(a, b)` at fixed `b`, each by one inverse DFT of
/// `x ↦ e(b x̄/q)`: the same exact sums as [`kloosterman_naive`] in
/// `O(q log q)` per row. Holds the inverse and (scaled) root-of-unity tables
/// and the plan.
pub struct NaiveRows {
    modulus: PrimePowerModulus,
    inverses: Vec<u64>,
    roots: Vec<Complex64>,
    plan: Arc<dyn Fft<f64>>,
}

impl NaiveRows {
    pub fn new(m: &PrimePowerModulus) -> Self {
        let q = m.q();
        Self {
            modulus: m.clone(),
            inverses: inverse_table(m),
            roots: (0..q).map(|k| e_q(k, q) / (q as f64).sqrt()).collect(),
            plan: FftPlanner::new().plan_fft_inverse(q as usize),
        }
    }

    pub fn row(&self, b: u64) -> Result<Vec<Complex64>> {
        let m = &self.modulus;
        require_unit(m, b)?;
        let q = m.q();
        let b = b % q;
        let mut buf = vec![Complex64::new(0.0, 0.0); q as usize];
        for x in m.units() {
            buf[x as usize] = self.roots[m.mul(b, self.inverses[x as usize]) as usize];
        }
        self.plan.process(&mut buf);
        Ok(buf)
    }
}

/// Closed form for `n >= 2`.
pub fn kloosterman_closed(a: u64, b: u64, br: &SqrtBranch) -> Result<f64> {
    let m = br.modulus();
    if m.n() < 2 {
        return Err(Error::UnsupportedDepth(m.n()));
    }
    require_unit(m, b)?;
    Ok(closed_from_product(m.mul(a, b), br))
}

/// Closed form as a function of `ab` alone (`Kl(a, b) = Kl(ab, 1)`); no depth check.
#[inline]
pub fn closed_from_product(ab: u64, br: &SqrtBranch) -> f64 {
    let m = br.modulus();
    let Some(r) = br.sqrt(ab) else {
        return 0.0;
    };
    let sign = br.jacobi(r) as f64;
    let two_r = if 2 * r >= m.q() { 2 * r - m.q() } else { 2 * r };
    let theta = TAU * (two_r as f64 / m.q() as f64);
    let re = if m.n().is_multiple_of(2) || m.p() % 4 == 1 { theta.cos() } else { -theta.sin() };
    2.0 * sign * re
}

/// Evaluate with the requested method. The closed form at `n = 1` is an error.
pub fn evaluate(a: u64, b: u64, br: &SqrtBranch, method: Method) -> Result<KloostermanValue> {
    let value = match method {
        Method::Naive => kloosterman_naive(br.modulus(), a, b)?.re,
        Method::ClosedForm => kloosterman_closed(a, b, br)?,
    };
    Ok(KloostermanValue { value, method })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummandCensus {
    pub counts: BTreeMap<u64, u64>,
    pub distinct: usize,
}

impl SummandCensus {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Multiplicities of the phases `ax + b x̄ (mod p^n)` over units `x`.
pub fn summand_census(m: &PrimePowerModulus, a: u64, b: u64) -> Result<SummandCensus> {
    require_unit(m, a)?;
    require_unit(m, b)?;
    let inv = inverse_table(m);
    let mut counts = BTreeMap::new();
    for x in m.units() {
        let u = m.add(m.mul(a % m.q(), x), m.mul(b % m.q(), inv[x as usize]));
        *counts.entry(u).or_insert(0u64) += 1;
    }
    let distinct = counts.len();
    Ok(SummandCensus { counts, distinct })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub p: u64,
    pub n: u32,
    pub kappa: u32,
    pub expected: u64,
    pub checked: usize,
    /// Classes whose count differs from `2p^κ`.
    pub counterexamples: Vec<(u64, u64)>,
    /// Every class has exactly `2p^κ` solutions.
    pub passed: bool,
    /// Classes violating the refined law: `2p^κ` solutions when `±u₀` is a
    /// square mod `p` (sign matching `±2`), none otherwise.
    pub refined_counterexamples: Vec<(u64, u64)>,
    pub refined_passed: bool,
}

/// Count the units `x` with `x + x̄ ≡ u` for every `u = ±2 + p^{2κ}u₀`,
/// `u₀ ∈ (Z/p^{n-2κ}Z)^×`, and compare against `2p^κ`.
///
/// Writing `x + x̄ ∓ 2 = (x ∓ 1)²/x` shows that `x ≡ ±1 (mod p)` and that
/// `±u₀` must be a square mod `p` for any solution to exist; the refined
/// check tracks that condition alongside the unconditional one.
pub fn multiplicity_check(m: &PrimePowerModulus, kappa: u32) -> Result<MultiplicityReport> {
    if kappa < 1 || 2 * kappa >= m.n() {
        return Err(Error::Usage(format!(
            "kappa must satisfy 1 <= kappa < n/2 (got {kappa}, n = {})",
            m.n()
        )));
    }
    let q = m.q();
    let p = m.p();
    let inv = inverse_table(m);
    let mut hits = vec![0u64; q as usize];
    for x in m.units() {
        hits[m.add(x, inv[x as usize]) as usize] += 1;
    }
    let step = m.pow_p(2 * kappa);
    let depth = m.with_depth(m.n() - 2 * kappa)?;
    let expected = 2 * m.pow_p(kappa);
    let mut checked = 0;
    let mut counterexamples = Vec::new();
    let mut refined_counterexamples = Vec::new();
    for (base, sign) in [(2, 1u64), (q - 2, p - 1)] {
        for u0 in depth.units() {
            let u = m.add(base, m.mul(step, u0));
            let count = hits[u as usize];
            checked += 1;
            if count != expected {
                counterexamples.push((u, count));
            }
            let solvable = m.legendre(sign * (u0 % p) % p) == 1;
            if count != if solvable { expected } else { 0 } {
                refined_counterexamples.push((u, count));
            }
        }
    }
    Ok(MultiplicityReport {
        p,
        n: m.n(),
        kappa,
        expected,
        checked,
        passed: counterexamples.is_empty(),
        counterexamples,
        refined_passed: refined_counterexamples.is_empty(),
        refined_counterexamples,
    })
}

/// Number of units `x` with `x + x̄ ≡ u (mod p^n)`.
pub fn trace_count(m: &PrimePowerModulus, u: u64) -> u64 {
    m.units()
        .filter(|&x| m.add(x, m.inv(x).expect("unit")) == u % m.q())
        .count() as u64
}
