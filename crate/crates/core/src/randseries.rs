//! Limit laws `μ`, `μ_U`, `μ_ST` and the random Fourier series built from them.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modring::PrimePowerModulus;
use crate::numeric::pairwise_sum;
use crate::paths::beta;

/// Truncation used by statistical experiments unless overridden.
pub const DEFAULT_H: u64 = 1000;

/// Largest `ℓ(m + n)` handled by [`exact_series_moment`].
pub const MAX_EXACT_ORDER: usize = 8;

// 32-bit words reserved per draw in a frequency stream.
const WORDS_PER_DRAW: u128 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LawKind {
    Mu,
    MuU,
    #[serde(rename = "MuST")]
    MuSt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawSpec {
    pub kind: LawKind,
}

impl LawSpec {
    pub const MU: LawSpec = LawSpec { kind: LawKind::Mu };
    pub const MU_U: LawSpec = LawSpec { kind: LawKind::MuU };
    pub const MU_ST: LawSpec = LawSpec { kind: LawKind::MuSt };

    /// `∫ x^k dλ(x)`.
    pub fn moment(self, k: u32) -> f64 {
        if k % 2 == 1 {
            return 0.0;
        }
        let half = k / 2;
        match self.kind {
            LawKind::Mu => central_binomial(half),
            LawKind::MuU if k == 0 => 1.0,
            LawKind::MuU => central_binomial(half) / 2.0,
            LawKind::MuSt => crate::statphase::catalan(half) as f64,
        }
    }

    /// Cumulants `κ_1..κ_k` from the moments.
    pub fn cumulants(self, k: usize) -> Vec<f64> {
        let mut kappa = vec![0.0; k + 1];
        for r in 1..=k {
            let mut v = self.moment(r as u32);
            for (s, &k) in kappa.iter().enumerate().take(r).skip(1) {
                v -= binomial((r - 1) as u32, (s - 1) as u32) * k * self.moment((r - s) as u32);
            }
            kappa[r] = v;
        }
        kappa
    }

    pub fn cdf(self, x: f64) -> f64 {
        match self.kind {
            LawKind::Mu => mu_cdf(x),
            LawKind::MuU => 0.5 * f64::from(u8::from(x >= 0.0)) + 0.5 * mu_cdf(x),
            LawKind::MuSt => {
                if x <= -2.0 {
                    0.0
                } else if x >= 2.0 {
                    1.0
                } else {
                    1.0 - st_angle_cdf((x / 2.0).acos())
                }
            }
        }
    }
}

fn central_binomial(k: u32) -> f64 {
    binomial(2 * k, k)
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// `F_μ(x) = 1/2 + arcsin(x/2)/π` on `[-2, 2]`.
pub fn mu_cdf(x: f64) -> f64 {
    0.5 + (x / 2.0).clamp(-1.0, 1.0).asin() / PI
}

// CDF of Θ with density (2/π) sin²θ on [0, π].
fn st_angle_cdf(theta: f64) -> f64 {
    (theta - theta.sin() * theta.cos()) / PI
}

pub fn sample_law<R: RngCore + ?Sized>(law: LawSpec, rng: &mut R) -> f64 {
    match law.kind {
        LawKind::Mu => 2.0 * (PI * rng.gen::<f64>()).cos(),
        LawKind::MuU => {
            if rng.gen::<bool>() {
                0.0
            } else {
                2.0 * (PI * rng.gen::<f64>()).cos()
            }
        }
        LawKind::MuSt => {
            let u: f64 = rng.gen();
            let (mut lo, mut hi) = (0.0, PI);
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if st_angle_cdf(mid) < u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            2.0 * (0.5 * (lo + hi)).cos()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyFilter {
    /// Every integer frequency.
    All,
    /// `{h : (a₁ - h) b₀ is a nonzero square mod p}`.
    QrClass { a1: u64, b0: u64, p: u64 },
    /// Same set as `All`.
    AllIntegers,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub law: LawSpec,
    pub h_max: u64,
    pub filter: FrequencyFilter,
    pub seed: u64,
}

impl SeriesSpec {
    /// The limit series of class `a₁` paths: law `μ` on the square-class frequencies.
    pub fn class(p: u64, a1: u64, b0: u64, h_max: u64, seed: u64) -> Self {
        SeriesSpec { law: LawSpec::MU, h_max, filter: FrequencyFilter::QrClass { a1, b0, p }, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.h_max == 0 {
            return Err(Error::Usage("truncation H must be at least 1".into()));
        }
        if let FrequencyFilter::QrClass { a1, b0, p } = self.filter {
            let m = PrimePowerModulus::new(p, 1)?;
            if !m.is_unit(a1) || !m.is_unit(b0) {
                return Err(Error::NotAUnit { value: if m.is_unit(a1) { b0 } else { a1 }, modulus: p });
            }
        }
        Ok(())
    }

    /// Frequencies `|h| <= H` passing the filter, ascending.
    pub fn frequencies(&self) -> Result<Vec<i64>> {
        self.validate()?;
        let h = self.h_max as i64;
        Ok(match self.filter {
            FrequencyFilter::All | FrequencyFilter::AllIntegers => (-h..=h).collect(),
            FrequencyFilter::QrClass { a1, b0, p } => {
                let m = PrimePowerModulus::new(p, 1)?;
                let a1 = a1 as i64;
                (-h..=h).filter(|&f| m.legendre(m.mul(m.reduce_i64(a1 - f), b0 % p)) == 1).collect()
            }
        })
    }
}

fn zigzag(h: i64) -> u64 {
    ((h << 1) ^ (h >> 63)) as u64
}

/// The `index`-th draw of `U_h`: stream `h` of the seeded generator, at a fixed
/// word offset, so draws do not depend on evaluation order.
pub fn draw(law: LawSpec, seed: u64, h: i64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(zigzag(h));
    rng.set_word_pos(u128::from(index) * WORDS_PER_DRAW);
    sample_law(law, &mut rng)
}

/// `Σ β(h; t) draw_h` over the frequency set.
pub fn series_eval(spec: &SeriesSpec, t: f64, draws: &BTreeMap<i64, f64>) -> Result<Complex64> {
    let freqs = spec.frequencies()?;
    let mut terms = Vec::with_capacity(freqs.len());
    for h in freqs {
        let u = draws.get(&h).ok_or_else(|| Error::Usage(format!("missing draw for frequency {h}")))?;
        terms.push(beta(h, t) * *u);
    }
    Ok(pairwise_sum(&terms))
}

/// Series values at each `t` for the `index`-th realization.
pub fn series_sample(spec: &SeriesSpec, freqs: &[i64], ts: &[f64], index: u64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); ts.len()];
    for &h in freqs {
        let u = draw(spec.law, spec.seed, h, index);
        for (o, &t) in out.iter_mut().zip(ts) {
            *o += beta(h, t) * u;
        }
    }
    out
}

/// Mixed moment `E ∏ conj(Z_i)^{m_i} Z_i^{n_i}`.
pub fn mixed_product(values: &[Complex64], m: &[u32], n: &[u32]) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for ((z, &mi), &ni) in values.iter().zip(m).zip(n) {
        acc *= z.conj().powu(mi) * z.powu(ni);
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMoment {
    pub value: Complex64,
    /// `(E|K - K_H|²)^{1/2}` bound for a single factor.
    pub tail_l2: f64,
}

fn check_exponents(ts: &[f64], m: &[u32], n: &[u32]) -> Result<usize> {
    if ts.len() != m.len() || ts.len() != n.len() {
        return Err(Error::Usage("t, m and n must have equal length".into()));
    }
    if let Some(t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Usage(format!("t = {t} outside [0, 1]")));
    }
    Ok(m.iter().chain(n).map(|&e| e as usize).sum())
}

fn set_partitions(size: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(i: usize, size: usize, labels: &mut Vec<u32>, blocks: u32, f: &mut impl FnMut(&[u32])) {
        if i == size {
            f(labels);
            return;
        }
        for b in 0..=blocks {
            labels.push(b);
            rec(i + 1, size, labels, blocks.max(b + 1), f);
            labels.pop();
        }
    }
    rec(0, size, &mut Vec::with_capacity(size), 0, f);
}

/// Exact moment of the series truncated at `H`, by the moment–cumulant formula:
/// a block `B` of a set partition contributes `κ_{|B|} Σ_h ∏_{j∈B} c_j(h)`.
pub fn exact_series_moment(spec: &SeriesSpec, ts: &[f64], m: &[u32], n: &[u32]) -> Result<SeriesMoment> {
    let order = check_exponents(ts, m, n)?;
    if order > MAX_EXACT_ORDER {
        return Err(Error::Usage(format!("moment order {order} exceeds {MAX_EXACT_ORDER}")));
    }
    let freqs = spec.frequencies()?;
    let mut factors: Vec<(f64, bool)> = Vec::with_capacity(order);
    for ((&t, &mi), &ni) in ts.iter().zip(m).zip(n) {
        factors.extend(std::iter::repeat_n((t, true), mi as usize));
        factors.extend(std::iter::repeat_n((t, false), ni as usize));
    }
    let coeffs: Vec<Vec<Complex64>> = factors
        .iter()
        .map(|&(t, conj)| freqs.iter().map(|&h| if conj { beta(h, t).conj() } else { beta(h, t) }).collect())
        .collect();
    let mut block_sum = vec![Complex64::new(0.0, 0.0); 1 << order];
    for (mask, slot) in block_sum.iter_mut().enumerate().skip(1) {
        let terms: Vec<Complex64> = (0..freqs.len())
            .map(|k| (0..order).filter(|j| mask >> j & 1 == 1).map(|j| coeffs[j][k]).product())
            .collect();
        *slot = pairwise_sum(&terms);
    }
    let kappa = spec.law.cumulants(order);
    let mut value = Complex64::new(0.0, 0.0);
    set_partitions(order, &mut |labels| {
        let blocks = labels.iter().max().map_or(0, |&b| b + 1) as usize;
        let mut masks = vec![0usize; blocks];
        for (j, &b) in labels.iter().enumerate() {
            masks[b as usize] |= 1 << j;
        }
        let mut term = Complex64::new(1.0, 0.0);
        for mask in masks {
            let k = kappa[mask.count_ones() as usize];
            if k == 0.0 {
                return;
            }
            term *= block_sum[mask] * k;
        }
        value += term;
    });
    let tail_l2 = (spec.law.moment(2) * 2.0 / (PI * PI * spec.h_max as f64)).sqrt();
    Ok(SeriesMoment { value, tail_l2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: Complex64,
    pub std_err: f64,
    pub samples: u64,
}

pub fn mc_estimate(values: &[Complex64]) -> McEstimate {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean).norm_sqr()).collect();
    let var = crate::numeric::pairwise_sum_real(&sq) / (n - 1.0).max(1.0);
    McEstimate { mean, std_err: (var / n).sqrt(), samples: values.len() as u64 }
}

/// Monte Carlo estimate of the same moment from `samples` realizations.
pub fn mc_series_moment(spec: &SeriesSpec, ts: &[f64], m: &[u32], n: &[u32], samples: u64) -> Result<McEstimate> {
    check_exponents(ts, m, n)?;
    let freqs = spec.frequencies()?;
    let values: Vec<Complex64> = (0..samples)
        .into_par_iter()
        .map(|i| mixed_product(&series_sample(spec, &freqs, ts, i), m, n))
        .collect();
    Ok(mc_estimate(&values))
}

/// Draws `a₁` uniformly from `(Z/pZ)^×` and evaluates `Kl_H(t; p; (a₁, b₀))`
/// with fresh `μ` draws.
pub fn sample_glued<R: RngCore + ?Sized>(p: u64, b0: u64, t: f64, h_max: u64, rng: &mut R) -> Result<(u64, Complex64)> {
    let m = PrimePowerModulus::new(p, 1)?;
    if !m.is_unit(b0) {
        return Err(Error::NotAUnit { value: b0 % p, modulus: p });
    }
    let a1 = rng.gen_range(1..p);
    let h = h_max as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for f in -h..=h {
        if m.legendre(m.mul(m.reduce_i64(a1 as i64 - f), b0 % p)) == 1 {
            acc += beta(f, t) * sample_law(LawSpec::MU, rng);
        }
    }
    Ok((a1, acc))
}

/// Monte Carlo moment of the glued variable `Kl•(t; p)`; sample `i` uses its own stream.
#[allow(clippy::too_many_arguments)]
pub fn glued_moment_mc(p: u64, b0: u64, t: f64, h_max: u64, m: u32, n: u32, samples: u64, seed: u64) -> Result<McEstimate> {
    sample_glued(p, b0, t, 1, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let values: Vec<Complex64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let (_, z) = sample_glued(p, b0, t, h_max, &mut rng).expect("validated");
            z.conj().powu(m) * z.powu(n)
        })
        .collect();
    Ok(mc_estimate(&values))
}

/// Exact moment of `Kl•(t; p)`: the average over `a₁` of the class moments.
pub fn glued_moment_exact(p: u64, b0: u64, t: f64, h_max: u64, m: u32, n: u32) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for a1 in 1..p {
        let spec = SeriesSpec::class(p, a1, b0, h_max, 0);
        acc += exact_series_moment(&spec, &[t], &[m], &[n])?.value;
    }
    Ok(acc / (p - 1) as f64)
}

/// Exact one-sample Kolmogorov–Smirnov distance, valid for laws with atoms;
/// sorts `values` in place.
pub fn ks_distance(values: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < values.len() {
        let x = values[i];
        let mut j = i;
        while j < values.len() && values[j] == x {
            j += 1;
        }
        d = d.max((j as f64 / n - cdf(x)).abs()).max((cdf(x.next_down()) - i as f64 / n).abs());
        i = j;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn law_moments() {
        let mu: Vec<f64> = (0..7).map(|k| LawSpec::MU.moment(k)).collect();
        assert_eq!(mu, vec![1.0, 0.0, 2.0, 0.0, 6.0, 0.0, 20.0]);
        let st: Vec<f64> = (0..7).map(|k| LawSpec::MU_ST.moment(k)).collect();
        assert_eq!(st, vec![1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 5.0]);
        assert_eq!(LawSpec::MU_U.moment(0), 1.0);
        assert_eq!(LawSpec::MU_U.moment(4), 3.0);
        // μ is the law of 2cos(πU): fourth cumulant 6 - 3·2² = -6
        assert_eq!(LawSpec::MU.cumulants(4), vec![0.0, 0.0, 2.0, 0.0, -6.0]);
    }

    #[test]
    fn moments_by_quadrature() {
        // midpoint rule in θ, x = 2cos θ
        let steps = 200_000;
        for law in [LawSpec::MU, LawSpec::MU_ST] {
            for k in 0..=6u32 {
                let mut acc = 0.0;
                for i in 0..steps {
                    let theta = PI * (i as f64 + 0.5) / steps as f64;
                    let w = match law.kind {
                        LawKind::Mu => 1.0 / PI,
                        _ => 2.0 / PI * theta.sin().powi(2),
                    };
                    acc += w * (2.0 * theta.cos()).powi(k as i32) * PI / steps as f64;
                }
                assert!((acc - law.moment(k)).abs() < 1e-8, "{law:?} {k}");
            }
        }
    }

    #[test]
    fn cdf_values() {
        assert_eq!(mu_cdf(0.0), 0.5);
        assert_eq!(mu_cdf(2.0), 1.0);
        assert_eq!(mu_cdf(-2.0), 0.0);
        assert!((LawSpec::MU_ST.cdf(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(LawSpec::MU_U.cdf(-1e-12), 0.5 * mu_cdf(-1e-12));
    }

    #[test]
    fn series_eval_examples() {
        let spec = SeriesSpec::class(5, 1, 1, 10, 0);
        let freqs = spec.frequencies().unwrap();
        let draws: BTreeMap<i64, f64> = freqs.iter().map(|&h| (h, 1.0)).collect();
        assert_eq!(series_eval(&spec, 0.0, &draws).unwrap(), Complex64::new(0.0, 0.0));
        let zeros: BTreeMap<i64, f64> = freqs.iter().map(|&h| (h, 0.0)).collect();
        assert_eq!(series_eval(&spec, 0.7, &zeros).unwrap(), Complex64::new(0.0, 0.0));
        let mut partial = draws.clone();
        partial.remove(&freqs[0]);
        assert!(matches!(series_eval(&spec, 0.3, &partial), Err(Error::Usage(_))));

        let single = SeriesSpec { law: LawSpec::MU, h_max: 1, filter: FrequencyFilter::QrClass { a1: 1, b0: 1, p: 3 }, seed: 0 };
        assert_eq!(single.frequencies().unwrap(), vec![0]);
        let one = BTreeMap::from([(0, 1.5)]);
        assert!((series_eval(&single, 0.4, &one).unwrap() - 0.6).norm() < 1e-15);
    }

    #[test]
    fn draws_are_order_independent() {
        let a = draw(LawSpec::MU, 7, -3, 11);
        let _ = draw(LawSpec::MU, 7, 5, 11);
        assert_eq!(a, draw(LawSpec::MU, 7, -3, 11));
        assert_ne!(a, draw(LawSpec::MU, 7, 3, 11));
        assert_ne!(a, draw(LawSpec::MU, 7, -3, 12));
    }

    #[test]
    fn exact_moments_basic() {
        let spec = SeriesSpec::class(3, 1, 1, 2000, 0);
        let first = exact_series_moment(&spec, &[0.5], &[0], &[1]).unwrap();
        assert!(first.value.norm() < 1e-15);
        let second = exact_series_moment(&spec, &[0.5], &[1], &[1]).unwrap();
        assert!((second.value.re - 5.0 / 9.0).abs() < 1e-3);
        assert!(second.value.im.abs() < 1e-12);
        let empty = exact_series_moment(&spec, &[0.5], &[0], &[0]).unwrap();
        assert_eq!(empty.value, Complex64::new(1.0, 0.0));
        assert!(exact_series_moment(&spec, &[0.5], &[5], &[4]).is_err());
    }

    #[test]
    fn exact_fourth_moment_matches_brute_force() {
        // small H: enumerate h-tuples directly
        let spec = SeriesSpec { law: LawSpec::MU, h_max: 3, filter: FrequencyFilter::All, seed: 0 };
        let freqs = spec.frequencies().unwrap();
        let (t1, t2) = (0.3, 0.8);
        let exact = exact_series_moment(&spec, &[t1, t2], &[1, 1], &[1, 1]).unwrap().value;
        let mut brute = Complex64::new(0.0, 0.0);
        for &h1 in &freqs {
            for &h2 in &freqs {
                for &h3 in &freqs {
                    for &h4 in &freqs {
                        let mut counts = BTreeMap::new();
                        for h in [h1, h2, h3, h4] {
                            *counts.entry(h).or_insert(0u32) += 1;
                        }
                        let e: f64 = counts.values().map(|&c| LawSpec::MU.moment(c)).product();
                        brute += beta(h1, t1).conj() * beta(h2, t1) * beta(h3, t2).conj() * beta(h4, t2) * e;
                    }
                }
            }
        }
        assert!((exact - brute).norm() < 1e-12);
    }

    #[test]
    fn ks_of_exact_quantiles() {
        let n = 1000;
        let mut xs: Vec<f64> = (0..n).map(|i| 2.0 * (PI * (1.0 - (i as f64 + 0.5) / n as f64)).cos()).collect();
        assert!(ks_distance(&mut xs, mu_cdf) <= 0.5 / n as f64 + 1e-12);
        let mut zeros = vec![0.0; 10];
        assert!((ks_distance(&mut zeros, mu_cdf) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn glued_zero_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a1, z) = sample_glued(11, 1, 0.0, 50, &mut rng).unwrap();
        assert!((1..11).contains(&a1));
        assert_eq!(z, Complex64::new(0.0, 0.0));
    }
}
