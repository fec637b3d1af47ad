//! Exact arithmetic in `Z/p^nZ` for an odd prime `p`.
//!
//! Residues are plain `u64` values in `[0, q)`; products go through `u128`
//! so that no intermediate ever overflows. The modulus constructor rejects
//! any `q = p^n` at or above `2^63`, which keeps sums of two residues inside
//! `u64` as well.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest modulus accepted by [`PrimePowerModulus::new`] (exclusive).
pub const MAX_MODULUS: u64 = 1 << 63;

/// Moduli up to this size get a dense square-root table on first use.
pub const LIFT_TABLE_LIMIT: u64 = 1 << 24;

/// Primes up to this size get a dense choice table for `s`.
pub const CHOICE_TABLE_LIMIT: u64 = 1 << 22;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ModulusParams", into = "ModulusParams")]
pub struct PrimePowerModulus {
    p: u64,
    n: u32,
    q: u64,
    phi: u64,
    powers: Vec<u64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct ModulusParams {
    p: u64,
    n: u32,
}

impl TryFrom<ModulusParams> for PrimePowerModulus {
    type Error = Error;
    fn try_from(v: ModulusParams) -> Result<Self> {
        PrimePowerModulus::new(v.p, v.n)
    }
}

impl From<PrimePowerModulus> for ModulusParams {
    fn from(m: PrimePowerModulus) -> Self {
        ModulusParams { p: m.p, n: m.n }
    }
}

impl fmt::Display for PrimePowerModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.p, self.n)
    }
}

/// `p`-adic valuation of a residue class, `Infinite` for the zero class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl PrimePowerModulus {
    pub fn new(p: u64, n: u32) -> Result<Self> {
        if p < 3 || p.is_multiple_of(2) || !is_prime(p) {
            return Err(Error::InvalidModulus(format!("{p} is not an odd prime")));
        }
        if n == 0 {
            return Err(Error::InvalidModulus("exponent must be at least 1".into()));
        }
        let mut powers = Vec::with_capacity(n as usize + 1);
        powers.push(1u64);
        for _ in 0..n {
            let next = powers
                .last()
                .unwrap()
                .checked_mul(p)
                .filter(|&v| v < MAX_MODULUS)
                .ok_or_else(|| {
                    Error::InvalidModulus(format!("{p}^{n} does not fit the 63-bit modulus guard"))
                })?;
            powers.push(next);
        }
        let q = powers[n as usize];
        let phi = powers[n as usize - 1] * (p - 1);
        Ok(Self { p, n, q, phi, powers })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn q(&self) -> u64 {
        self.q
    }

    /// Euler's totient `p^(n-1)(p-1)`.
    #[inline]
    pub fn phi(&self) -> u64 {
        self.phi
    }

    /// `p^k` for `0 <= k <= n`.
    #[inline]
    pub fn pow_p(&self, k: u32) -> u64 {
        self.powers[k as usize]
    }

    /// The same prime at a different depth.
    pub fn with_depth(&self, n: u32) -> Result<Self> {
        Self::new(self.p, n)
    }

    pub fn residue(&self, value: u64) -> Residue {
        Residue { value: value % self.q, q: self.q }
    }

    pub fn residue_i64(&self, value: i64) -> Residue {
        Residue { value: self.reduce_i64(value), q: self.q }
    }

    #[inline]
    pub fn reduce_i64(&self, x: i64) -> u64 {
        (x as i128).rem_euclid(self.q as i128) as u64
    }

    #[inline]
    pub fn reduce_i128(&self, x: i128) -> u64 {
        x.rem_euclid(self.q as i128) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if (a | b) >> 32 == 0 {
            return (a * b) % self.q;
        }
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut e: u64) -> u64 {
        let mut acc = 1 % self.q;
        base %= self.q;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    #[inline]
    pub fn is_unit(&self, x: u64) -> bool {
        !x.is_multiple_of(self.p)
    }

    pub fn inv(&self, x: u64) -> Option<u64> {
        inv_mod_u64(x % self.q, self.q)
    }

    /// Inverses of a slice of units with three multiplications per element.
    pub fn batch_inv(&self, xs: &[u64]) -> Option<Vec<u64>> {
        if xs.is_empty() {
            return Some(Vec::new());
        }
        let mut prefix = Vec::with_capacity(xs.len());
        let mut acc = 1u64;
        for &x in xs {
            acc = self.mul(acc, x);
            prefix.push(acc);
        }
        let mut inv_acc = self.inv(acc)?;
        let mut out = vec![0u64; xs.len()];
        for i in (0..xs.len()).rev() {
            let before = if i == 0 { 1 } else { prefix[i - 1] };
            out[i] = self.mul(inv_acc, before);
            inv_acc = self.mul(inv_acc, xs[i]);
        }
        Some(out)
    }

    /// Largest `tau <= n` with `p^tau | x`; `Infinite` when `x = 0 mod p^n`.
    pub fn ord_p(&self, x: i128) -> Valuation {
        let r = x.rem_euclid(self.q as i128) as u64;
        if r == 0 {
            return Valuation::Infinite;
        }
        let mut v = 0;
        let mut r = r;
        while r.is_multiple_of(self.p) {
            r /= self.p;
            v += 1;
        }
        Valuation::Finite(v)
    }

    /// Legendre symbol `(x / p)`.
    pub fn legendre(&self, x: u64) -> i8 {
        legendre(x, self.p)
    }

    /// Jacobi symbol `(x / p^n) = (x / p)^n`.
    pub fn jacobi(&self, x: u64) -> i8 {
        let l = self.legendre(x);
        if l == -1 && self.n.is_multiple_of(2) {
            1
        } else {
            l
        }
    }

    /// Units `1 <= x < q` in ascending order.
    pub fn units(&self) -> impl Iterator<Item = u64> + '_ {
        (1..self.q).filter(move |x| x % self.p != 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Residue {
    value: u64,
    q: u64,
}

impl Residue {
    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> u64 {
        self.q
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.q)
    }
}

pub fn mul_mod(a: Residue, b: Residue) -> Result<Residue> {
    if a.q != b.q {
        return Err(Error::ModulusMismatch(a.q, b.q));
    }
    Ok(Residue { value: ((a.value as u128 * b.value as u128) % a.q as u128) as u64, q: a.q })
}

pub fn inv_mod(x: Residue) -> Result<Residue> {
    inv_mod_u64(x.value, x.q)
        .map(|value| Residue { value, q: x.q })
        .ok_or(Error::NotAUnit { value: x.value, modulus: x.q })
}

pub fn ord_p(x: i128, m: &PrimePowerModulus) -> Valuation {
    m.ord_p(x)
}

pub fn jacobi(x: Residue, m: &PrimePowerModulus) -> i8 {
    m.jacobi(x.value)
}

pub fn sqrt_branch(x: Residue, br: &SqrtBranch) -> Result<Residue> {
    let m = br.modulus();
    if x.q != m.q {
        return Err(Error::ModulusMismatch(x.q, m.q));
    }
    br.try_sqrt(x.value).map(|value| Residue { value, q: x.q })
}

fn inv_mod_u64(x: u64, q: u64) -> Option<u64> {
    if q == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (q as i128, (x % q) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let quot = r0 / r1;
        (r0, r1) = (r1, r0 - quot * r1);
        (s0, s1) = (s1, s0 - quot * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(q as i128) as u64)
}

fn pow_mod_u64(mut base: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = ((acc as u128 * base as u128) % m as u128) as u64;
        }
        base = ((base as u128 * base as u128) % m as u128) as u64;
        e >>= 1;
    }
    acc
}

fn legendre(x: u64, p: u64) -> i8 {
    let x = x % p;
    if x == 0 {
        return 0;
    }
    if pow_mod_u64(x, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Tonelli-Shanks square root modulo an odd prime; `None` for non-residues.
fn sqrt_mod_prime(r: u64, p: u64) -> Option<u64> {
    let r = r % p;
    if r == 0 {
        return Some(0);
    }
    if legendre(r, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod_u64(r, (p + 1) / 4, p));
    }
    let s = (p - 1).trailing_zeros();
    let qodd = (p - 1) >> s;
    let mut z = 2;
    while legendre(z, p) != -1 {
        z += 1;
    }
    let mulp = |a: u64, b: u64| ((a as u128 * b as u128) % p as u128) as u64;
    let mut m = s;
    let mut c = pow_mod_u64(z, qodd, p);
    let mut t = pow_mod_u64(r, qodd, p);
    let mut root = pow_mod_u64(r, qodd.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mulp(t2, t2);
            i += 1;
        }
        let b = pow_mod_u64(c, 1 << (m - i - 1), p);
        m = i;
        c = mulp(b, b);
        t = mulp(t, c);
        root = mulp(root, b);
    }
    Some(root)
}

/// A fixed branch of the square root on `(Z/p^nZ)^×2`.
///
/// The branch is determined by a choice function `s` on quadratic residues
/// mod `p`; every unit square `x` then has a unique root `x_{1/2}` with
/// `x_{1/2} = s(x mod p) (mod p)`, found by Hensel lifting.
#[derive(Debug)]
pub struct SqrtBranch {
    modulus: PrimePowerModulus,
    /// `choice[r]` is `s(r)` for residues, `0` for non-residues. Empty when `p`
    /// is too large for a table (default branch only).
    choice: Vec<u64>,
    lifted: OnceLock<Box<[u32]>>,
}

impl Clone for SqrtBranch {
    fn clone(&self) -> Self {
        Self { modulus: self.modulus.clone(), choice: self.choice.clone(), lifted: OnceLock::new() }
    }
}

impl SqrtBranch {
    /// Default branch: `s(r)` is the root lying in `[1, (p-1)/2]`.
    pub fn new(modulus: PrimePowerModulus) -> Self {
        let p = modulus.p;
        let choice = if p <= CHOICE_TABLE_LIMIT {
            let mut table = vec![0u64; p as usize];
            for s in 1..=(p - 1) / 2 {
                table[((s * s) % p) as usize] = s;
            }
            table
        } else {
            Vec::new()
        };
        Self { modulus, choice, lifted: OnceLock::new() }
    }

    /// Branch from an explicit choice function. Every residue must map to
    /// one of its two roots.
    pub fn with_choice(modulus: PrimePowerModulus, s: impl Fn(u64) -> u64) -> Result<Self> {
        let p = modulus.p;
        if p > CHOICE_TABLE_LIMIT {
            return Err(Error::InvalidModulus(format!(
                "custom branch choice needs p <= {CHOICE_TABLE_LIMIT}"
            )));
        }
        let mut table = vec![0u64; p as usize];
        for r in 1..p {
            if legendre(r, p) == 1 {
                let root = s(r) % p;
                if root == 0 || (root * root) % p != r {
                    return Err(Error::NotASquare { value: r, modulus: p });
                }
                table[r as usize] = root;
            }
        }
        Ok(Self { modulus, choice: table, lifted: OnceLock::new() })
    }

    /// The branch with every choice negated, i.e. `x ↦ -x_{1/2}`.
    pub fn negated(&self) -> Self {
        let p = self.modulus.p;
        Self::with_choice(self.modulus.clone(), |r| p - self.choice_at(r))
            .expect("negated choice of a valid branch is valid")
    }

    pub fn modulus(&self) -> &PrimePowerModulus {
        &self.modulus
    }

    /// `s(r)` for a quadratic residue `r` mod `p`.
    pub fn choice_at(&self, r: u64) -> u64 {
        let p = self.modulus.p;
        let r = r % p;
        if !self.choice.is_empty() {
            return self.choice[r as usize];
        }
        match sqrt_mod_prime(r, p) {
            Some(s) if r != 0 => s.min(p - s),
            _ => 0,
        }
    }

    /// Legendre symbol of `x` mod `p`, using the choice table when present.
    #[inline]
    pub fn legendre(&self, x: u64) -> i8 {
        let p = self.modulus.p;
        let r = x % p;
        if r == 0 {
            0
        } else if !self.choice.is_empty() {
            if self.choice[r as usize] != 0 {
                1
            } else {
                -1
            }
        } else {
            legendre(r, p)
        }
    }

    #[inline]
    pub fn jacobi(&self, x: u64) -> i8 {
        let l = self.legendre(x);
        if l == -1 && self.modulus.n.is_multiple_of(2) {
            1
        } else {
            l
        }
    }

    /// `x_{1/2}`, or `None` when `x` is not a unit square.
    #[inline]
    pub fn sqrt(&self, x: u64) -> Option<u64> {
        let m = &self.modulus;
        let x = if x < m.q { x } else { x % m.q };
        if m.q <= LIFT_TABLE_LIMIT {
            // Non-squares and non-units hold 0, which is never a unit root.
            let root = self.lifted.get_or_init(|| self.build_table())[x as usize];
            return (root != 0).then_some(root as u64);
        }
        if self.legendre(x) != 1 {
            return None;
        }
        Some(self.hensel_lift(x))
    }

    pub fn try_sqrt(&self, x: u64) -> Result<u64> {
        let m = &self.modulus;
        let x = x % m.q;
        match self.legendre(x) {
            0 => Err(Error::NotAUnit { value: x, modulus: m.q }),
            -1 => Err(Error::NotASquare { value: x, modulus: m.q }),
            _ => Ok(self.sqrt(x).expect("residue checked")),
        }
    }

    /// Hensel lift of `s(x mod p)` by precision doubling.
    pub fn hensel_lift(&self, x: u64) -> u64 {
        let m = &self.modulus;
        let mut root = self.choice_at(x % m.p);
        let mut prec = 1u32;
        while prec < m.n {
            prec = (2 * prec).min(m.n);
            let mk = m.pow_p(prec);
            let mulk = |a: u64, b: u64| ((a as u128 * b as u128) % mk as u128) as u64;
            let xk = x % mk;
            let err = (mulk(root, root) + mk - xk) % mk;
            let inv2r = inv_mod_u64((2 * root as u128 % mk as u128) as u64, mk)
                .expect("2·root is a unit");
            root = (root + mk - mulk(err, inv2r)) % mk;
        }
        root
    }

    fn build_table(&self) -> Box<[u32]> {
        let m = &self.modulus;
        let mut table = vec![0u32; m.q as usize];
        for u in 1..m.q {
            if u % m.p == 0 {
                continue;
            }
            let x = m.mul(u, u);
            if u % m.p == self.choice_at(x % m.p) {
                table[x as usize] = u as u32;
            }
        }
        table.into_boxed_slice()
    }

    /// `x_{1/2}^k` for any integer `k` (negative powers via the inverse).
    pub fn sqrt_pow(&self, x: u64, k: i64) -> Option<u64> {
        let m = &self.modulus;
        let r = self.sqrt(x)?;
        let base = if k < 0 { m.inv(r)? } else { r };
        Some(m.pow(base, k.unsigned_abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn modulus(p: u64, n: u32) -> PrimePowerModulus {
        PrimePowerModulus::new(p, n).unwrap()
    }

    #[test]
    fn constructor_guards() {
        assert!(PrimePowerModulus::new(2, 3).is_err());
        assert!(PrimePowerModulus::new(9, 1).is_err());
        assert!(PrimePowerModulus::new(3, 0).is_err());
        assert!(PrimePowerModulus::new(3, 39).is_ok());
        assert!(PrimePowerModulus::new(3, 39).unwrap().q() < MAX_MODULUS);
        assert!(PrimePowerModulus::new(3, 40).is_err());
        let m = modulus(7, 4);
        assert_eq!(m.q(), 2401);
        let direct = (1..m.q()).filter(|x| gcd(*x, m.q()) == 1).count() as u64;
        assert_eq!(m.phi(), direct);
    }

    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    #[test]
    fn mul_mod_examples() {
        let m9 = modulus(3, 2);
        let r = mul_mod(m9.residue(4), m9.residue(7)).unwrap();
        assert_eq!(r.value(), 1);
        let m = modulus(5, 3);
        assert_eq!(mul_mod(m.residue(1), m.residue(77)).unwrap().value(), 77);
        let q1 = m.q() - 1;
        assert_eq!(mul_mod(m.residue(q1), m.residue(q1)).unwrap().value(), 1);
        let other = modulus(3, 3);
        assert_eq!(
            mul_mod(m.residue(2), other.residue(2)),
            Err(Error::ModulusMismatch(125, 27))
        );
    }

    #[test]
    fn mul_mod_near_guard() {
        let m = modulus(3, 39);
        let a = m.q() - 2;
        assert_eq!(m.mul(a, a), 4);
    }

    #[test]
    fn inv_mod_examples() {
        let m9 = modulus(3, 2);
        assert_eq!(inv_mod(m9.residue(2)).unwrap().value(), 5);
        assert_eq!(inv_mod(m9.residue(1)).unwrap().value(), 1);
        let m27 = modulus(3, 3);
        let brute = (0..27).find(|y| (7 * y) % 27 == 1).unwrap();
        assert_eq!(brute, 4);
        assert_eq!(inv_mod(m27.residue(7)).unwrap().value(), brute);
        assert!(matches!(inv_mod(m27.residue(6)), Err(Error::NotAUnit { .. })));
    }

    #[test]
    fn ord_p_examples() {
        let m = modulus(3, 4);
        assert_eq!(ord_p(18, &m), Valuation::Finite(2));
        assert_eq!(ord_p(5, &m), Valuation::Finite(0));
        assert_eq!(ord_p(0, &m), Valuation::Infinite);
        assert_eq!(ord_p(81 * 5, &m), Valuation::Infinite);
        assert_eq!(ord_p(-27, &m), Valuation::Finite(3));
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi(modulus(3, 2).residue(2), &modulus(3, 2)), 1);
        assert_eq!(jacobi(modulus(3, 3).residue(2), &modulus(3, 3)), -1);
        assert_eq!(jacobi(modulus(3, 3).residue(3), &modulus(3, 3)), 0);
    }

    #[test]
    fn sqrt_branch_examples() {
        let m = modulus(3, 2);
        let br = SqrtBranch::new(m.clone());
        // brute force: roots of 4 mod 9 congruent to 1 mod 3
        let brute: Vec<u64> = (0..9).filter(|u| (u * u) % 9 == 4 && u % 3 == 1).collect();
        assert_eq!(brute, vec![7]);
        assert_eq!(sqrt_branch(m.residue(4), &br).unwrap().value(), 7);
        assert_eq!(sqrt_branch(m.residue(1), &br).unwrap().value(), 1);
        let other = SqrtBranch::with_choice(m.clone(), |_| 2).unwrap();
        assert_eq!(sqrt_branch(m.residue(4), &other).unwrap().value(), 2);
        assert!(matches!(sqrt_branch(m.residue(2), &br), Err(Error::NotASquare { .. })));
        assert!(matches!(sqrt_branch(m.residue(3), &br), Err(Error::NotAUnit { .. })));
    }

    #[test]
    fn sqrt_exhaustive_small_moduli() {
        for (p, n) in [(3, 9), (5, 6), (7, 5), (11, 4), (13, 4), (101, 2)] {
            let m = modulus(p, n);
            assert!(m.q() <= 100_000);
            let br = SqrtBranch::new(m.clone());
            for x in m.units() {
                match br.sqrt(x) {
                    Some(r) => {
                        assert_eq!(m.mul(r, r), x, "{m}: root of {x}");
                        assert_eq!(r % p, br.choice_at(x % p));
                        assert_eq!(br.hensel_lift(x), r);
                    }
                    None => assert_eq!(m.legendre(x), -1),
                }
            }
        }
    }

    #[test]
    fn choice_default_lies_in_lower_half() {
        for p in [3u64, 5, 7, 11, 101, 1009] {
            let br = SqrtBranch::new(modulus(p, 1));
            for r in 1..p {
                let s = br.choice_at(r);
                if legendre(r, p) == 1 {
                    assert!((1..=(p - 1) / 2).contains(&s));
                    assert_eq!((s * s) % p, r);
                } else {
                    assert_eq!(s, 0);
                }
            }
        }
    }

    #[test]
    fn large_modulus_uses_hensel_path() {
        let m = modulus(7, 20);
        assert!(m.q() > LIFT_TABLE_LIMIT);
        let br = SqrtBranch::new(m.clone());
        for x in [2u64, 4, 9, 1_000_003 * 1_000_003 % m.q(), m.q() - 3] {
            if let Some(r) = br.sqrt(x) {
                assert_eq!(m.mul(r, r), x % m.q());
                assert_eq!(r % 7, br.choice_at(x % 7));
            }
        }
    }

    #[test]
    fn batch_inverse_matches_single() {
        let m = modulus(5, 7);
        let xs: Vec<u64> = m.units().take(500).collect();
        let inv = m.batch_inv(&xs).unwrap();
        for (x, y) in xs.iter().zip(&inv) {
            assert_eq!(m.mul(*x, *y), 1);
        }
    }

    #[test]
    fn primality() {
        let small: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(3_215_031_751));
    }

    proptest! {
        #[test]
        fn inverse_is_involution(p in prop::sample::select(vec![3u64, 5, 7, 11]), n in 1u32..8, x in 1u64..1_000_000) {
            let m = modulus(p, n);
            let x = x % m.q();
            prop_assume!(m.is_unit(x));
            let y = inv_mod(m.residue(x)).unwrap();
            prop_assert_eq!(inv_mod(y).unwrap().value(), x);
        }

        #[test]
        fn jacobi_is_multiplicative(p in prop::sample::select(vec![3u64, 5, 7, 13]), n in 1u32..6, x in 0u64..100_000, y in 0u64..100_000) {
            let m = modulus(p, n);
            let (x, y) = (x % m.q(), y % m.q());
            prop_assert_eq!(m.jacobi(m.mul(x, y)), m.jacobi(x) * m.jacobi(y));
        }

        #[test]
        fn sqrt_taylor_property(
            p in prop::sample::select(vec![3u64, 5, 7]),
            n in 2u32..12,
            x in 1u64..u64::MAX,
            t in 0u64..u64::MAX,
            kappa in 1u32..12,
            minus in any::<bool>(),
        ) {
            let m = modulus(p, n);
            let br = SqrtBranch::new(m.clone());
            let x = x % m.q();
            prop_assume!(br.legendre(x) == 1);
            let kappa = kappa.min(n);
            let t = t % m.q();
            let step = m.mul(m.pow_p(kappa), t);
            let k: i64 = if minus { -1 } else { 1 };
            let lhs = br.sqrt_pow(m.add(x, step), k).unwrap();
            let inv2 = m.inv(2).unwrap();
            let inv8 = m.inv(8).unwrap();
            let c1 = m.mul(m.reduce_i64(k), inv2);
            let c2 = m.mul(m.reduce_i64(k * (k - 2)), inv8);
            let mut rhs = br.sqrt_pow(x, k).unwrap();
            rhs = m.add(rhs, m.mul(c1, m.mul(br.sqrt_pow(x, k - 2).unwrap(), step)));
            rhs = m.add(rhs, m.mul(c2, m.mul(br.sqrt_pow(x, k - 4).unwrap(), m.mul(step, step))));
            let precision = m.pow_p((3 * kappa).min(n));
            prop_assert_eq!(lhs % precision, rhs % precision);
        }
    }
}
