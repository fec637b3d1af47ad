//! Kloosterman paths: partial sums of `Kl_{p^n}(a, b)` joined into a
//! polygonal curve on `[0, 1]`, plus the renormalized and rearranged variants
//! and the completion coefficients `α`, `β`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::klooster::{closed_from_product, e_q, e_real, inverse_table};
use crate::modring::{PrimePowerModulus, SqrtBranch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Standard,
    Renormalized,
    Rearranged,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(Variant::Standard),
            "renormalized" => Ok(Variant::Renormalized),
            "rearranged" => Ok(Variant::Rearranged),
            other => Err(Error::Usage(format!("unknown path variant {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KloostermanPath {
    pub modulus: PrimePowerModulus,
    pub a: u64,
    pub b: u64,
    pub variant: Variant,
    pub vertices: Vec<Complex64>,
}

impl KloostermanPath {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn endpoint(&self) -> Complex64 {
        self.vertices.last().copied().unwrap_or_default()
    }

    pub fn eval(&self, t: f64) -> Result<Complex64> {
        path_eval(self, t)
    }
}

fn require_units(m: &PrimePowerModulus, a: u64, b: u64) -> Result<()> {
    for x in [a, b] {
        if !m.is_unit(x) {
            return Err(Error::NotAUnit { value: x % m.q(), modulus: m.q() });
        }
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Usage(format!("t = {t} lies outside [0, 1]")))
    }
}

/// Partial sums `Kl_{j;p^n}(a, b)` over units `j` in ascending order.
pub fn path_vertices(m: &PrimePowerModulus, a: u64, b: u64) -> Result<KloostermanPath> {
    require_units(m, a, b)?;
    let q = m.q();
    let (a, b) = (a % q, b % q);
    let inv = inverse_table(m);
    let norm = 1.0 / (q as f64).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut vertices = Vec::with_capacity(m.phi() as usize);
    for x in m.units() {
        acc += e_q(m.add(m.mul(a, x), m.mul(b, inv[x as usize])), q);
        vertices.push(acc * norm);
    }
    Ok(KloostermanPath { modulus: m.clone(), a, b, variant: Variant::Standard, vertices })
}

/// Linear interpolation with `len - 1` equal parameter intervals.
pub fn path_eval(path: &KloostermanPath, t: f64) -> Result<Complex64> {
    check_t(t)?;
    let v = &path.vertices;
    match v.len() {
        0 => Ok(Complex64::new(0.0, 0.0)),
        1 => Ok(v[0]),
        len => {
            let s = t * (len - 1) as f64;
            let i = (s.floor() as usize).min(len - 2);
            let lambda = s - i as f64;
            Ok(v[i] * (1.0 - lambda) + v[i + 1] * lambda)
        }
    }
}

/// Upper summation limit `⌊x_k(t)⌋` with `x_k(t) = φ(p^n)t + k - 1` for
/// `t ∈ ((k-1)/p^{n-1}, k/p^{n-1}]`; zero at `t = 0`.
pub fn renormalized_limit(m: &PrimePowerModulus, t: f64) -> u64 {
    if t <= 0.0 {
        return 0;
    }
    let blocks = m.pow_p(m.n() - 1);
    let mut k = ((t * blocks as f64).ceil() as u64).clamp(1, blocks);
    if k > 1 && (k - 1) as f64 >= t * blocks as f64 {
        k -= 1;
    }
    let x = m.phi() as f64 * t + (k - 1) as f64;
    ((x + 1e-9).floor() as u64).min(m.q() - 1)
}

/// `p^{-n/2} Σ_{units x ≤ x_k(t)} e((ax + b x̄)/p^n)`, by direct summation.
pub fn renormalized_eval(m: &PrimePowerModulus, a: u64, b: u64, t: f64) -> Result<Complex64> {
    require_units(m, a, b)?;
    check_t(t)?;
    let q = m.q();
    let limit = renormalized_limit(m, t);
    let mut acc = Complex64::new(0.0, 0.0);
    for x in (1..=limit).filter(|x| x % m.p() != 0) {
        let xi = m.inv(x).expect("unit");
        acc += e_q(m.add(m.mul(a % q, x), m.mul(b % q, xi)), q);
    }
    Ok(acc * (1.0 / (q as f64).sqrt()))
}

/// The renormalized path sampled at `t_i = (i + 1)/φ(p^n)`, `0 <= i < φ(p^n)`.
pub fn renormalized_vertices(m: &PrimePowerModulus, a: u64, b: u64) -> Result<KloostermanPath> {
    let standard = path_vertices(m, a, b)?;
    let q = m.q();
    // prefix[x] = normalized sum over units <= x
    let mut prefix = vec![Complex64::new(0.0, 0.0); q as usize];
    let mut it = m.units().zip(&standard.vertices).peekable();
    let mut current = Complex64::new(0.0, 0.0);
    for (x, slot) in prefix.iter_mut().enumerate() {
        if let Some(&(u, v)) = it.peek() {
            if u as usize == x {
                current = *v;
                it.next();
            }
        }
        *slot = current;
    }
    let phi = m.phi();
    let vertices = (0..phi)
        .map(|i| prefix[renormalized_limit(m, (i + 1) as f64 / phi as f64) as usize])
        .collect();
    Ok(KloostermanPath { variant: Variant::Renormalized, vertices, ..standard })
}

/// `f_{p^n}(x; (a, b)) = Σ_{k mod p} e((a y + b ȳ)/p^n)` with `y = x + k p^{n-1}`.
pub fn grouped_summand(m: &PrimePowerModulus, a: u64, b: u64, x: u64) -> Complex64 {
    let q = m.q();
    let step = m.pow_p(m.n() - 1);
    (0..m.p())
        .map(|k| {
            let y = (x + k * step) % q;
            let yi = m.inv(y).expect("unit");
            e_q(m.add(m.mul(a % q, y), m.mul(b % q, yi)), q)
        })
        .sum()
}

/// Prefix sums of `f_{p^n}(x; (a, b))/p^{n/2}` over units `x <= p^{n-1}`.
pub fn rearranged_vertices(m: &PrimePowerModulus, a: u64, b: u64) -> Result<KloostermanPath> {
    require_units(m, a, b)?;
    if m.n() < 2 {
        return Err(Error::UnsupportedDepth(m.n()));
    }
    let inner = m.with_depth(m.n() - 1)?;
    let norm = 1.0 / (m.q() as f64).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    let vertices = inner
        .units()
        .map(|x| {
            acc += grouped_summand(m, a, b, x) * norm;
            acc
        })
        .collect();
    Ok(KloostermanPath { modulus: m.clone(), a: a % m.q(), b: b % m.q(), variant: Variant::Rearranged, vertices })
}

/// The same vertices through the grouping identity: `p/p^{n/2}` times prefix
/// sums of `e((ax + b x̄)/p^n)` restricted to `x² ≡ ā b (mod p)`.
pub fn rearranged_by_restriction(m: &PrimePowerModulus, a: u64, b: u64) -> Result<Vec<Complex64>> {
    require_units(m, a, b)?;
    let q = m.q();
    let p = m.p();
    let target = (m.inv(a).expect("unit") % p) * (b % p) % p;
    let inner = m.with_depth(m.n() - 1)?;
    let scale = p as f64 / (q as f64).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    Ok(inner
        .units()
        .map(|x| {
            if (x % p) * (x % p) % p == target {
                let xi = m.inv(x).expect("unit");
                acc += e_q(m.add(m.mul(a % q, x), m.mul(b % q, xi)), q) * scale;
            }
            acc
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionCoefficient {
    pub h: i64,
    pub t: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
}

/// `β(0; t) = t`, `β(h; t) = (e(ht) - 1)/(2πih)`.
pub fn beta(h: i64, t: f64) -> Complex64 {
    if h == 0 {
        Complex64::new(t, 0.0)
    } else {
        (e_real(h as f64 * t) - 1.0) / Complex64::new(0.0, TAU * h as f64)
    }
}

/// `α(h; t) = p^{-n/2} Σ_{1 <= x <= x_k(t)} e(hx/p^n)` by the geometric-series formula.
pub fn alpha(m: &PrimePowerModulus, h: i64, t: f64) -> Complex64 {
    alpha_with_limit(m, h, renormalized_limit(m, t))
}

pub fn alpha_with_limit(m: &PrimePowerModulus, h: i64, limit: u64) -> Complex64 {
    let q = m.q();
    let norm = 1.0 / (q as f64).sqrt();
    let hr = m.reduce_i64(h);
    if hr == 0 {
        return Complex64::new(limit as f64 * norm, 0.0);
    }
    let z = e_q(hr, q);
    let zx = e_q(m.mul(hr, limit % q), q);
    z * (zx - 1.0) / (z - 1.0) * norm
}

pub fn completion_coeffs(
    m: &PrimePowerModulus,
    t: f64,
    hs: impl IntoIterator<Item = i64>,
) -> Result<Vec<CompletionCoefficient>> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Usage(format!("t = {t} lies outside (0, 1]")));
    }
    let limit = renormalized_limit(m, t);
    Ok(hs
        .into_iter()
        .map(|h| CompletionCoefficient { h, t, alpha: alpha_with_limit(m, h, limit), beta: beta(h, t) })
        .collect())
}

/// `|K̃l(t) - p^{-n/2} Σ_h α(h; t) Kl(a - h, b)|`, summing over the classes
/// `h mod p^n` with `(a - h)b` a square mod `p`.
pub fn completion_identity_check(a: u64, b: u64, t: f64, br: &SqrtBranch) -> Result<f64> {
    let m = br.modulus();
    if m.n() < 2 {
        return Err(Error::UnsupportedDepth(m.n()));
    }
    let direct = renormalized_eval(m, a, b, t)?;
    let q = m.q();
    let (a, b) = (a % q, b % q);
    let limit = renormalized_limit(m, t);
    let mut acc = Complex64::new(0.0, 0.0);
    for h in 0..q {
        let shifted = m.sub(a, h);
        if br.legendre(m.mul(shifted, b)) != 1 {
            continue;
        }
        let kl = closed_from_product(m.mul(shifted, b), br);
        acc += alpha_with_limit(m, h as i64, limit) * kl;
    }
    Ok((direct - acc / (q as f64).sqrt()).norm())
}

/// `p^{-n/2} Σ_{start <= x < start + len, x unit} e((ax + b x̄)/p^n)`, with
/// batched inversion.
pub fn incomplete_sum(m: &PrimePowerModulus, a: u64, b: u64, start: u64, len: u64) -> Complex64 {
    const CHUNK: u64 = 1 << 16;
    let q = m.q();
    let (a, b) = (a % q, b % q);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut lo = start;
    let end = start + len;
    let mut xs = Vec::with_capacity(CHUNK as usize);
    while lo < end {
        let hi = (lo + CHUNK).min(end);
        xs.clear();
        xs.extend((lo..hi).map(|x| x % q).filter(|x| x % m.p() != 0));
        let inv = m.batch_inv(&xs).expect("units");
        for (&x, &xi) in xs.iter().zip(&inv) {
            acc += e_q(m.add(m.mul(a, x), m.mul(b, xi)), q);
        }
        lo = hi;
    }
    acc / (q as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::klooster::{kloosterman_closed, kloosterman_naive};

    fn modulus(p: u64, n: u32) -> PrimePowerModulus {
        PrimePowerModulus::new(p, n).unwrap()
    }

    #[test]
    fn vertices_small() {
        let m = modulus(3, 1);
        let path = path_vertices(&m, 1, 1).unwrap();
        let s3 = 3f64.sqrt();
        assert_eq!(path.len(), 2);
        assert!((path.vertices[0] - e_q(2, 3) / s3).norm() < 1e-15);
        assert!((path.vertices[1] - Complex64::new(-1.0 / s3, 0.0)).norm() < 1e-12);
        let m = modulus(3, 2);
        let path = path_vertices(&m, 1, 1).unwrap();
        assert_eq!(path.len(), 6);
        assert_eq!(path.endpoint(), kloosterman_naive(&m, 1, 1).unwrap());
    }

    #[test]
    fn eval_interpolates() {
        let m = modulus(3, 2);
        let path = path_vertices(&m, 1, 1).unwrap();
        assert_eq!(path_eval(&path, 0.0).unwrap(), path.vertices[0]);
        assert_eq!(path_eval(&path, 1.0).unwrap(), path.vertices[5]);
        // 0.5·5 = 2.5: halfway between the third and fourth vertices
        let mid = (path.vertices[2] + path.vertices[3]) * 0.5;
        assert!((path_eval(&path, 0.5).unwrap() - mid).norm() < 1e-15);
        assert!(path_eval(&path, 1.5).is_err());
        assert!(path_eval(&path, -0.1).is_err());
    }

    #[test]
    fn renormalized_examples() {
        let m = modulus(3, 2);
        // t = 0.4 lies in (1/3, 2/3], so k = 2 and x_k = 6·0.4 + 1 = 3.4
        assert_eq!(renormalized_limit(&m, 0.4), 3);
        let expected: Complex64 =
            [1u64, 2].iter().map(|&x| e_q((x + m.inv(x).unwrap()) % 9, 9)).sum::<Complex64>() / 3.0;
        assert!((renormalized_eval(&m, 1, 1, 0.4).unwrap() - expected).norm() < 1e-12);
        assert_eq!(renormalized_limit(&m, 1.0), 8);
        assert_eq!(renormalized_limit(&m, 0.0), 0);
        let end = renormalized_eval(&m, 1, 1, 1.0).unwrap();
        assert!((end - kloosterman_naive(&m, 1, 1).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn renormalized_close_to_standard() {
        for (p, n, a) in [(3, 5, 2), (5, 3, 7), (7, 3, 3)] {
            let m = modulus(p, n);
            let path = path_vertices(&m, a, 1).unwrap();
            let bound = p as f64 / (m.q() as f64).sqrt();
            for i in 1..=50 {
                let t = i as f64 / 50.0;
                let d = (renormalized_eval(&m, a, 1, t).unwrap() - path_eval(&path, t).unwrap()).norm();
                assert!(d <= bound + 1e-12, "{m} t={t}: {d} > {bound}");
            }
        }
    }

    #[test]
    fn renormalized_vertices_match_direct() {
        let m = modulus(5, 3);
        let path = renormalized_vertices(&m, 2, 3).unwrap();
        assert_eq!(path.len() as u64, m.phi());
        for i in [0usize, 7, 33, 99] {
            let t = (i + 1) as f64 / m.phi() as f64;
            assert!((path.vertices[i] - renormalized_eval(&m, 2, 3, t).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn rearranged_identity_and_endpoint() {
        let m = modulus(3, 4);
        let br = SqrtBranch::new(m.clone());
        let path = rearranged_vertices(&m, 1, 1).unwrap();
        let alt = rearranged_by_restriction(&m, 1, 1).unwrap();
        assert_eq!(path.len() as u64, m.with_depth(3).unwrap().phi());
        for (x, y) in path.vertices.iter().zip(&alt) {
            assert!((x - y).norm() < 1e-9);
        }
        let kl = kloosterman_closed(1, 1, &br).unwrap();
        assert!((path.endpoint().re - kl).abs() < 1e-9);
        let m = modulus(5, 3);
        let path = rearranged_vertices(&m, 2, 1).unwrap();
        assert!(path.vertices.iter().all(|v| v.norm() < 1e-9));
    }

    #[test]
    fn alpha_examples() {
        let m = modulus(3, 3);
        let t = 0.7;
        let limit = renormalized_limit(&m, t);
        let direct: Complex64 = (1..=limit).map(|x| e_q(5 * x % 27, 27)).sum::<Complex64>() / 27f64.sqrt();
        assert!((alpha(&m, 5, t) - direct).norm() < 1e-9);
        let c = completion_coeffs(&m, t, [0]).unwrap()[0];
        assert_eq!(c.beta, Complex64::new(t, 0.0));
        assert!((c.alpha.re - limit as f64 / 27f64.sqrt()).abs() < 1e-12);
        assert!(completion_coeffs(&m, 0.0, [1]).is_err());
    }

    #[test]
    fn alpha_bounds_exhaustive() {
        for n in 1..=5 {
            let m = modulus(3, n);
            let q = m.q() as i64;
            let sq = (q as f64).sqrt();
            for t in [0.05, 0.3, 0.5, 0.77, 1.0] {
                for h in -(q / 2)..=(q / 2) {
                    let a = alpha(&m, h, t) / sq;
                    if h != 0 {
                        assert!(a.norm() <= (1.0f64).min(1.0 / (2.0 * h.abs() as f64)) + 1e-12);
                    }
                    assert!((a - beta(h, t)).norm() <= 10.0 / q as f64, "h={h} t={t} q={q}");
                }
            }
        }
    }

    #[test]
    fn completion_examples() {
        for (p, n, t) in [(3, 2, 0.5), (5, 3, 0.2), (3, 4, 1.0), (7, 2, 0.33)] {
            let br = SqrtBranch::new(modulus(p, n));
            let r = completion_identity_check(1, 1, t, &br).unwrap();
            assert!(r < 1e-6, "{p}^{n} t={t}: {r}");
        }
    }

    #[test]
    fn incomplete_sum_matches_path() {
        let m = modulus(5, 4);
        let path = path_vertices(&m, 3, 2).unwrap();
        let whole = incomplete_sum(&m, 3, 2, 0, m.q());
        assert!((whole - path.endpoint()).norm() < 1e-10);
        let part = incomplete_sum(&m, 3, 2, 1, 10);
        assert!((part - path.vertices[7]).norm() < 1e-12);
    }
}
