//! Ensemble moments of paths, sums of products of shifted Kloosterman sums,
//! and equidistribution statistics.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::klooster::{closed_from_product, e_q, inverse_table};
use crate::modring::{PrimePowerModulus, SqrtBranch, Valuation};
use crate::numeric::pairwise_sum;
use crate::paths::{path_eval, path_vertices, rearranged_vertices};
use crate::randseries::{binomial, ks_distance, mu_cdf};
use crate::statphase::{shifted_exp_sum, ShiftPhase};

/// Cap on `ℓ(m + n)`.
pub const MAX_MOMENT_ORDER: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// Standard paths, `a ≡ a₁ (mod p)`.
    ClassA1,
    /// Standard paths, every unit `a`.
    AllUnits,
    /// Rearranged paths, `a ∈ b₀ (Z/p^nZ)^{×2}`.
    RearrangedSquares,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub t: Vec<f64>,
    pub m: Vec<u32>,
    pub n_exp: Vec<u32>,
    pub a1: u64,
    pub b0: u64,
    pub ensemble: Ensemble,
}

impl MomentSpec {
    pub fn single(t: f64, m: u32, n: u32, a1: u64, b0: u64) -> Self {
        MomentSpec { t: vec![t], m: vec![m], n_exp: vec![n], a1, b0, ensemble: Ensemble::ClassA1 }
    }

    pub fn order(&self) -> u32 {
        self.m.iter().chain(&self.n_exp).sum()
    }

    pub fn validate(&self, md: &PrimePowerModulus) -> Result<()> {
        if self.t.len() != self.m.len() || self.t.len() != self.n_exp.len() {
            return Err(Error::Usage("t, m and n must have equal length".into()));
        }
        if let Some(t) = self.t.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::Usage(format!("t = {t} outside [0, 1]")));
        }
        if self.order() > MAX_MOMENT_ORDER {
            return Err(Error::Usage(format!("moment order exceeds {MAX_MOMENT_ORDER}")));
        }
        for v in [self.a1, self.b0] {
            if !md.is_unit(v) {
                return Err(Error::NotAUnit { value: v % md.q(), modulus: md.q() });
            }
        }
        if self.ensemble == Ensemble::RearrangedSquares && md.n() < 2 {
            return Err(Error::UnsupportedDepth(md.n()));
        }
        Ok(())
    }

    fn members(&self, md: &PrimePowerModulus) -> Vec<u64> {
        let p = md.p();
        match self.ensemble {
            Ensemble::ClassA1 => (0..md.pow_p(md.n() - 1)).map(|k| self.a1 % p + k * p).collect(),
            Ensemble::AllUnits => md.units().collect(),
            Ensemble::RearrangedSquares => {
                md.units().filter(|&a| md.legendre(md.mul(a, self.b0)) == 1).collect()
            }
        }
    }

    fn product(&self, values: &[Complex64]) -> Complex64 {
        crate::randseries::mixed_product(values, &self.m, &self.n_exp)
    }
}

/// Interpolation data `(i, λ)` for a path of `len` vertices at time `t`.
fn blend(len: usize, t: f64) -> (usize, f64) {
    if len < 2 {
        return (0, 0.0);
    }
    let s = t * (len - 1) as f64;
    let i = (s.floor() as usize).min(len - 2);
    (i, s - i as f64)
}

/// `(1/|E|) Σ_{a ∈ E} ∏ conj(Kl(t_i; a, b₀))^{m_i} Kl(t_i; a, b₀)^{n_i}`.
///
/// For each `t_i` the path value at every `a` is a linear combination of
/// `e((ax + b₀x̄)/q)`, so one inverse DFT of length `q` gives it for the whole
/// ensemble.
pub fn empirical_moment(md: &PrimePowerModulus, spec: &MomentSpec) -> Result<Complex64> {
    spec.validate(md)?;
    let members = spec.members(md);
    if spec.order() == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if members.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (p, q) = (md.p(), md.q());
    let inv = inverse_table(md);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(q as usize);
    let mut product = vec![Complex64::new(1.0, 0.0); q as usize];
    let mut buf = vec![Complex64::new(0.0, 0.0); q as usize];
    let classes: Vec<Option<u64>> = match spec.ensemble {
        Ensemble::RearrangedSquares => (1..p).filter(|&c| md.legendre(md.mul(c, spec.b0)) == 1).map(Some).collect(),
        _ => vec![None],
    };
    let b = spec.b0 % q;
    for ((&t, &mi), &ni) in spec.t.iter().zip(&spec.m).zip(&spec.n_exp) {
        if mi + ni == 0 {
            continue;
        }
        for &class in &classes {
            buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            match class {
                None => {
                    let phi = md.phi() as usize;
                    let (i, lambda) = blend(phi, t);
                    for (j, x) in md.units().take(i + 2).enumerate() {
                        let w = if j <= i { 1.0 } else { lambda };
                        buf[x as usize] = e_q(md.mul(b, inv[x as usize]), q) * w;
                    }
                    let norm = 1.0 / (q as f64).sqrt();
                    fft.process(&mut buf);
                    for (prod, v) in product.iter_mut().zip(&buf) {
                        let z = v * norm;
                        *prod *= z.conj().powu(mi) * z.powu(ni);
                    }
                }
                Some(c) => {
                    // x² ≡ ā b₀ (mod p) for a ≡ c
                    let target = md.inv(c).expect("unit") % p * (b % p) % p;
                    let inner = md.with_depth(md.n() - 1)?;
                    let (i, lambda) = blend(inner.phi() as usize, t);
                    for (j, x) in inner.units().take(i + 2).enumerate() {
                        if (x % p) * (x % p) % p == target {
                            let w = if j <= i { 1.0 } else { lambda };
                            buf[x as usize] = e_q(md.mul(b, inv[x as usize]), q) * w;
                        }
                    }
                    let norm = p as f64 / (q as f64).sqrt();
                    fft.process(&mut buf);
                    for a in (c..q).step_by(p as usize) {
                        let z = buf[a as usize] * norm;
                        product[a as usize] *= z.conj().powu(mi) * z.powu(ni);
                    }
                }
            }
        }
    }
    let terms: Vec<Complex64> = members.iter().map(|&a| product[a as usize]).collect();
    Ok(pairwise_sum(&terms) / members.len() as f64)
}

/// Same quantity with one prefix-sum pass per ensemble member.
pub fn empirical_moment_direct(md: &PrimePowerModulus, spec: &MomentSpec) -> Result<Complex64> {
    spec.validate(md)?;
    let members = spec.members(md);
    if spec.order() == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if members.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let terms: Vec<Complex64> = members
        .par_iter()
        .map(|&a| {
            let path = match spec.ensemble {
                Ensemble::RearrangedSquares => rearranged_vertices(md, a, spec.b0),
                _ => path_vertices(md, a, spec.b0),
            }
            .expect("validated");
            let values: Vec<Complex64> = spec.t.iter().map(|&t| path_eval(&path, t).expect("validated")).collect();
            spec.product(&values)
        })
        .collect();
    Ok(pairwise_sum(&terms) / members.len() as f64)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftMultiset {
    pub mu: BTreeMap<u64, u32>,
}

impl ShiftMultiset {
    pub fn new(pairs: impl IntoIterator<Item = (u64, u32)>) -> Self {
        let mut mu = BTreeMap::new();
        for (tau, k) in pairs {
            if k > 0 {
                *mu.entry(tau).or_insert(0) += k;
            }
        }
        ShiftMultiset { mu }
    }

    pub fn single(tau: u64, k: u32) -> Self {
        Self::new([(tau, k)])
    }

    pub fn norm1(&self) -> u32 {
        self.mu.values().sum()
    }

    pub fn support(&self) -> Vec<u64> {
        self.mu.keys().copied().collect()
    }

    /// Largest `ord_p(τ - τ')` over distinct support pairs.
    pub fn max_collusion(&self, md: &PrimePowerModulus) -> Option<u32> {
        let s: Vec<u64> = self.mu.keys().map(|&t| t % md.q()).collect();
        let mut best: Option<u32> = None;
        for (i, &x) in s.iter().enumerate() {
            for &y in &s[i + 1..] {
                let v = match md.ord_p(md.sub(x, y) as i128) {
                    Valuation::Finite(v) => v,
                    Valuation::Infinite => md.n(),
                };
                best = Some(best.map_or(v, |b| b.max(v)));
            }
        }
        best
    }

    /// `Δ = min ‖τ - τ'‖_p = p^{-max ord_p(τ - τ')}`.
    pub fn delta(&self, md: &PrimePowerModulus) -> Option<f64> {
        self.max_collusion(md).map(|v| (md.p() as f64).powi(-(v as i32)))
    }

    /// Limit of the sum of products for well-separated shifts: `∏ δ_{2|μ} binom(μ, μ/2)`.
    pub fn main_term(&self) -> f64 {
        self.mu.values().map(|&k| if k % 2 == 0 { binomial(k, k / 2) } else { 0.0 }).product()
    }

    /// `∏ δ_{2|μ} 2^{-μ} binom(μ, μ/2)`.
    pub fn normalized_main_term(&self) -> f64 {
        self.mu.values().map(|&k| if k % 2 == 0 { binomial(k, k / 2) / 2f64.powi(k as i32) } else { 0.0 }).product()
    }
}

/// `(1/p^{n-1}) Σ_{a ≡ a₁ (p)} ∏_τ Kl(a - τ, b₀)^{μ(τ)}` from closed-form values.
pub fn sum_of_products(br: &SqrtBranch, mu: &ShiftMultiset, a1: u64, b0: u64) -> Complex64 {
    let md = br.modulus();
    if mu.mu.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    let p = md.p();
    let b0 = b0 % md.q();
    if mu.mu.keys().any(|&tau| md.legendre(md.mul(md.sub(a1 % p, tau % p), b0)) != 1) {
        return Complex64::new(0.0, 0.0);
    }
    let count = md.pow_p(md.n() - 1);
    let total = crate::numeric::par_sum_real(count, |k| {
        let a = a1 % p + k * p;
        mu.mu
            .iter()
            .map(|(&tau, &e)| closed_from_product(md.mul(md.sub(a, tau % md.q()), b0), br).powi(e as i32))
            .product()
    });
    Complex64::new(total / count as f64, 0.0)
}

#[derive(Clone, Debug)]
pub struct SopTerm<'a> {
    pub u: Vec<u32>,
    pub coefficient: Complex64,
    pub phase: ShiftPhase<'a>,
}

fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Expansion of the sum of products into shifted exponential sums.
///
/// Writing `Kl(a - τ, b₀) = J_τ (ε e(2y_τ/q) + ε̄ e(-2y_τ/q))`, the term `u` has
/// coefficient `∏ J_τ^{μ(τ)} binom(μ(τ), u_τ) ε^{μ(τ) - 2u_τ}` and phase weights
/// `ε_τ = 2(μ(τ) - 2u_τ)`.
pub fn sop_decompose<'a>(br: &'a SqrtBranch, mu: &ShiftMultiset, a1: u64, b0: u64) -> Result<Vec<SopTerm<'a>>> {
    let md = br.modulus();
    let p = md.p();
    if md.n() < 2 {
        return Err(Error::UnsupportedDepth(md.n()));
    }
    let shifts = mu.support();
    let mults: Vec<u32> = mu.mu.values().copied().collect();
    let mut signs = Vec::with_capacity(shifts.len());
    for &tau in &shifts {
        let r = md.mul(md.sub(a1 % p, tau % md.q()), b0 % md.q());
        let y = br.sqrt(r).ok_or(Error::NotASquare { value: r % p, modulus: p })?;
        signs.push(br.jacobi(y));
    }
    let quarter = i64::from(md.n() % 2 == 1 && p % 4 == 3);
    let mut terms = Vec::new();
    let mut u = vec![0u32; shifts.len()];
    loop {
        let mut c = Complex64::new(1.0, 0.0);
        let mut eps = Vec::with_capacity(shifts.len());
        for k in 0..shifts.len() {
            let d = i64::from(mults[k]) - 2 * i64::from(u[k]);
            c *= f64::from(signs[k]).powi(mults[k] as i32) * binomial(mults[k], u[k]) * i_pow(quarter * d);
            eps.push(2 * d);
        }
        let phase = ShiftPhase::new(shifts.clone(), eps, b0, br)?;
        terms.push(SopTerm { u: u.clone(), coefficient: c, phase });
        let mut k = 0;
        while k < u.len() && u[k] == mults[k] {
            u[k] = 0;
            k += 1;
        }
        if k == u.len() {
            break;
        }
        u[k] += 1;
    }
    Ok(terms)
}

/// `Σ_u c_u · shifted_exp_sum(f_u, a₁)`.
pub fn sop_reconstruct(terms: &[SopTerm], a1: u64) -> Complex64 {
    let parts: Vec<Complex64> = terms.iter().map(|t| t.coefficient * shifted_exp_sum(&t.phase, a1)).collect();
    pairwise_sum(&parts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistResult {
    pub ks: f64,
    pub degenerate: bool,
    pub samples: u64,
}

/// KS distance between `{Kl(a, b₀) : a ≡ a₁ (p)}` and `F_μ`.
pub fn equidist_stat(br: &SqrtBranch, a1: u64, b0: u64) -> Result<EquidistResult> {
    let md = br.modulus();
    if md.n() < 2 {
        return Err(Error::UnsupportedDepth(md.n()));
    }
    let p = md.p();
    let count = md.pow_p(md.n() - 1);
    let degenerate = md.legendre(md.mul(a1 % p, b0 % p)) != 1;
    let mut values: Vec<f64> = if degenerate {
        vec![0.0; count as usize]
    } else {
        (0..count)
            .into_par_iter()
            .map(|k| closed_from_product(md.mul(a1 % p + k * p, b0 % md.q()), br))
            .collect()
    };
    Ok(EquidistResult { ks: ks_distance(&mut values, mu_cdf), degenerate, samples: count })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainCount {
    pub exact: u64,
    pub predicted: f64,
    pub good_classes: u64,
    pub reduced_shifts: u32,
}

fn good_class(md: &PrimePowerModulus, shifts: &[u64], b0: u64, a: u64) -> bool {
    md.is_unit(a) && shifts.iter().all(|&tau| md.legendre(md.mul(md.sub(a % md.q(), tau % md.q()), b0 % md.q())) == 1)
}

/// `|{a ∈ (Z/p^nZ)^× : (a - τ)b₀ square for all τ ∈ T}|` with the prediction `φ(p^n)/2^{|T̄|}`.
pub fn domain_count(shifts: &[u64], b0: u64, md: &PrimePowerModulus) -> DomainCount {
    let p = md.p();
    let good_classes = (1..p).filter(|&a| good_class(md, shifts, b0, a)).count() as u64;
    let mut reduced: Vec<u64> = shifts.iter().map(|t| t % p).collect();
    reduced.sort_unstable();
    reduced.dedup();
    DomainCount {
        exact: good_classes * md.pow_p(md.n() - 1),
        predicted: md.phi() as f64 / 2f64.powi(reduced.len() as i32),
        good_classes,
        reduced_shifts: reduced.len() as u32,
    }
}

/// Exact count by scanning every unit.
pub fn domain_count_brute(shifts: &[u64], b0: u64, md: &PrimePowerModulus) -> u64 {
    md.units().filter(|&a| good_class(md, shifts, b0, a)).count() as u64
}

/// Whether `values` decreases, tolerating `max_inversions` increases of at most
/// `rel` (relative); entries at or below `floor` count as zero.
pub fn decreasing_with_noise(values: &[f64], rel: f64, max_inversions: usize, floor: f64) -> bool {
    let mut inversions = 0;
    for w in values.windows(2) {
        let (prev, next) = (w[0].max(floor), w[1].max(floor));
        if next <= prev {
            continue;
        }
        if next <= prev * (1.0 + rel) && inversions < max_inversions {
            inversions += 1;
        } else {
            return false;
        }
    }
    true
}

/// `δ` from a least-squares fit of `log err ≈ c - δ n log p`; `None` with fewer
/// than two usable points.
pub fn fitted_decay(p: u64, ns: &[u32], errs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(errs)
        .filter(|(_, &e)| e > 1e-14)
        .map(|(&n, &e)| (n as f64 * (p as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}
