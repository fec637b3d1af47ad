//! `p`-adic stationary phase for complete sums `Σ_{x ∈ X} e(f(x)/p^n)`.
//!
//! Phases are arbitrary callables on residues together with a domain
//! predicate `X` that is invariant under translation by `p^{κ₀}`. Nothing
//! here assumes a polynomial representation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::klooster::e_q;
use crate::modring::{PrimePowerModulus, SqrtBranch, Valuation};
use crate::numeric::par_sum;

pub type ResidueFn<'a> = Box<dyn Fn(u64) -> u64 + Send + Sync + 'a>;
pub type DomainFn<'a> = Box<dyn Fn(u64) -> bool + Send + Sync + 'a>;

/// Residues scanned exhaustively before switching to digit-by-digit refinement.
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

const CHECK_SAMPLES: usize = 64;
const CHECK_SEED: u64 = 0x6b6c_6f6f_7374;

pub struct DifferentiablePhase<'a> {
    pub modulus: PrimePowerModulus,
    pub kappa0: u32,
    pub domain: DomainFn<'a>,
    pub f: ResidueFn<'a>,
    pub f1: ResidueFn<'a>,
    pub f2: Option<ResidueFn<'a>>,
}

impl<'a> DifferentiablePhase<'a> {
    /// `f(x) = ax + b x̄` on the units, with `f₁ = a - b x̄²`, `f₂ = 2b x̄³`.
    pub fn kloosterman(m: &PrimePowerModulus, a: u64, b: u64) -> Self {
        let (m1, m2, m3, m4) = (m.clone(), m.clone(), m.clone(), m.clone());
        let (a, b) = (a % m.q(), b % m.q());
        DifferentiablePhase {
            modulus: m.clone(),
            kappa0: 1,
            domain: Box::new(move |x| m1.is_unit(x)),
            f: Box::new(move |x| {
                let xi = m2.inv(x).expect("unit");
                m2.add(m2.mul(a, x), m2.mul(b, xi))
            }),
            f1: Box::new(move |x| {
                let xi = m3.inv(x).expect("unit");
                m3.sub(a, m3.mul(b, m3.mul(xi, xi)))
            }),
            f2: Some(Box::new(move |x| {
                let xi = m4.inv(x).expect("unit");
                m4.mul(m4.mul(2, b), m4.mul(xi, m4.mul(xi, xi)))
            })),
        }
    }

    /// `f(x) = Σ c_i x^i` on all residues, with its first two derivatives.
    pub fn polynomial(m: &PrimePowerModulus, coeffs: &[i64]) -> Self {
        let c: Vec<u64> = coeffs.iter().map(|&c| m.reduce_i64(c)).collect();
        let d1: Vec<u64> = c.iter().enumerate().skip(1).map(|(i, &ci)| m.mul(i as u64 % m.q(), ci)).collect();
        let d2: Vec<u64> = d1.iter().enumerate().skip(1).map(|(i, &ci)| m.mul(i as u64 % m.q(), ci)).collect();
        let horner = |m: PrimePowerModulus, c: Vec<u64>| -> ResidueFn<'a> {
            Box::new(move |x| c.iter().rev().fold(0, |acc, &ci| m.add(m.mul(acc, x), ci)))
        };
        DifferentiablePhase {
            modulus: m.clone(),
            kappa0: 1,
            domain: Box::new(|_| true),
            f: horner(m.clone(), c),
            f1: horner(m.clone(), d1),
            f2: Some(horner(m.clone(), d2)),
        }
    }

    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        (self.domain)(x % self.modulus.q())
    }

    /// `Σ_{x ∈ X} e(f(x)/p^n)` term by term.
    pub fn direct_sum(&self) -> Complex64 {
        let q = self.modulus.q();
        par_sum(q, |x| if self.contains(x) { e_q((self.f)(x), q) } else { Complex64::new(0.0, 0.0) })
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Option<u64> {
        let q = self.modulus.q();
        (0..1000).map(|_| rng.gen_range(0..q)).find(|&x| self.contains(x))
    }

    /// Randomized check of `f(x + p^κ t) ≡ f(x) + f₁(x) p^κ t (mod p^{min(2κ, n)})`.
    pub fn check_linear(&self, samples: usize, seed: u64) -> Result<()> {
        let m = &self.modulus;
        let n = m.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let Some(x) = self.sample_point(&mut rng) else {
                return Ok(());
            };
            let kappa = rng.gen_range(self.kappa0..=n);
            let t = rng.gen_range(0..m.q());
            let h = m.mul(m.pow_p(kappa), t);
            let lhs = (self.f)(m.add(x, h));
            let rhs = m.add((self.f)(x), m.mul((self.f1)(x), h));
            let precision = m.pow_p((2 * kappa).min(n));
            if lhs % precision != rhs % precision {
                return Err(Error::InvalidPhase(format!(
                    "first-order expansion fails at x = {x}, t = {t}, kappa = {kappa}"
                )));
            }
        }
        Ok(())
    }

    /// Randomized check of the second-order expansion modulo `p^{min(2κ+1, n)}`.
    pub fn check_quadratic(&self, samples: usize, seed: u64) -> Result<()> {
        let m = &self.modulus;
        let n = m.n();
        let f2 = self.f2.as_ref().ok_or_else(|| Error::Usage("phase has no second derivative".into()))?;
        let half = m.inv(2).expect("p is odd");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let Some(x) = self.sample_point(&mut rng) else {
                return Ok(());
            };
            let kappa = rng.gen_range(self.kappa0..=n);
            let t = rng.gen_range(0..m.q());
            let h = m.mul(m.pow_p(kappa), t);
            let lhs = (self.f)(m.add(x, h));
            let mut rhs = m.add((self.f)(x), m.mul((self.f1)(x), h));
            rhs = m.add(rhs, m.mul(half, m.mul(f2(x), m.mul(h, h))));
            let precision = m.pow_p((2 * kappa + 1).min(n));
            if lhs % precision != rhs % precision {
                return Err(Error::InvalidPhase(format!(
                    "second-order expansion fails at x = {x}, t = {t}, kappa = {kappa}"
                )));
            }
        }
        Ok(())
    }
}

/// `p^{n-κ} Σ_{x ∈ X/p^κ, f₁(x) ≡ 0 (p^{n-κ})} e(f(x)/p^n)`, equal to the full sum
/// whenever `κ >= max(κ₀, n/2)`.
pub fn reduce_sum_linear(phase: &DifferentiablePhase, kappa: u32) -> Result<Complex64> {
    let m = &phase.modulus;
    let n = m.n();
    if kappa < phase.kappa0.max(n.div_ceil(2)) || kappa > n {
        return Err(Error::Usage(format!(
            "kappa = {kappa} must lie in [max(kappa0, n/2), n] = [{}, {n}]",
            phase.kappa0.max(n.div_ceil(2))
        )));
    }
    phase.check_linear(CHECK_SAMPLES, CHECK_SEED)?;
    let q = m.q();
    let crit = m.pow_p(n - kappa);
    let acc = par_sum(m.pow_p(kappa), |x| {
        if phase.contains(x) && (phase.f1)(x).is_multiple_of(crit) {
            e_q((phase.f)(x), q)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(acc * crit as f64)
}

/// `ε(c, p^ρ)`: `1` for `ρ = 0`, `(c/p)·i^{(ι-1)/2}` for `ρ = 1`, `p ≡ ι (mod 4)`.
pub fn gauss_factor(m: &PrimePowerModulus, c: u64, rho: u32) -> Complex64 {
    if rho == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let l = m.legendre(c) as f64;
    if m.p() % 4 == 1 {
        Complex64::new(l, 0.0)
    } else {
        Complex64::new(0.0, l)
    }
}

/// Second-order reduction with `n = 2κ + ρ`, `ρ ∈ {0, 1}`.
pub fn reduce_sum_quadratic(phase: &DifferentiablePhase, kappa: u32) -> Result<Complex64> {
    let m = &phase.modulus;
    let n = m.n();
    if kappa < phase.kappa0 || 2 * kappa > n || n - 2 * kappa > 1 {
        return Err(Error::Usage(format!(
            "n = {n} must equal 2·kappa + rho with rho in {{0, 1}} and kappa >= {}",
            phase.kappa0
        )));
    }
    let rho = n - 2 * kappa;
    let f2 = phase.f2.as_ref().ok_or_else(|| Error::Usage("phase has no second derivative".into()))?;
    phase.check_quadratic(CHECK_SAMPLES, CHECK_SEED)?;
    let q = m.q();
    let crit = m.pow_p(kappa);
    let mut acc = Complex64::new(0.0, 0.0);
    for x0 in (0..crit).filter(|&x| phase.contains(x)) {
        let c = m.mul(2, f2(x0));
        if !m.is_unit(c) {
            return Err(Error::SingularQuadratic(x0));
        }
        let d = (phase.f1)(x0);
        if !d.is_multiple_of(crit) {
            continue;
        }
        let value = m.sub((phase.f)(x0), m.mul(m.inv(c).expect("unit"), m.mul(d, d)));
        acc += gauss_factor(m, c, rho) * e_q(value, q);
    }
    Ok(acc * (q as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HenselLift {
    /// Root of `f` modulo `p^n` in the class `a + p^{j-ρ}Z`.
    pub root: u64,
    /// `t` with `root = a + t p^{j-ρ}`, reduced modulo `p^{n-j}`.
    pub t: u64,
    pub t_modulus: u64,
    /// Every sampled `b ≡ a (mod p^{j-ρ})` keeps `f(b) ≡ 0 (p^j)` and `p^ρ ∥ f₁(b)`.
    pub neighbourhood_ok: bool,
    /// Exhaustive uniqueness of `t` modulo `p^{n-j}`, when small enough to scan.
    pub unique: Option<bool>,
}

/// Lift a possibly singular root `a` of `f (mod p^j)` with `p^ρ ∥ f₁(a)`.
///
/// Requires `j >= max(2ρ + 1, ρ + κ₀)`.
pub fn hensel_lift_singular(phase: &DifferentiablePhase, a: u64, j: u32, rho: u32) -> Result<HenselLift> {
    let m = &phase.modulus;
    let (p, n, q) = (m.p(), m.n(), m.q());
    let a = a % q;
    let fail = |msg: String| Err(Error::PreconditionFailed(msg));
    if !phase.contains(a) {
        return fail(format!("{a} lies outside the domain"));
    }
    if j > n || rho >= n {
        return fail(format!("need j <= n and rho < n (j = {j}, rho = {rho}, n = {n})"));
    }
    if j < (2 * rho + 1).max(rho + phase.kappa0) {
        return fail(format!("j = {j} is below max(2·rho + 1, rho + kappa0)"));
    }
    if !(phase.f)(a).is_multiple_of(m.pow_p(j)) {
        return fail(format!("f({a}) is not divisible by p^{j}"));
    }
    if m.ord_p((phase.f1)(a) as i128) != Valuation::Finite(rho) {
        return fail(format!("p^{rho} does not exactly divide f1({a})"));
    }
    let step0 = m.pow_p(j - rho);
    let mut root = a;
    for level in j..n {
        let fv = (phase.f)(root);
        debug_assert_eq!(fv % m.pow_p(level), 0);
        let c = (fv / m.pow_p(level)) % p;
        let d = ((phase.f1)(root) / m.pow_p(rho)) % p;
        let d_inv = m.inv(d).expect("unit digit") % p;
        let t = (p - c * d_inv % p) % p;
        root = m.add(root, m.mul(t, m.pow_p(level - rho)));
    }
    let t_modulus = m.pow_p(n - j);
    let t = (m.sub(root, a) / step0) % t_modulus;

    let span = q / step0;
    let probe: Box<dyn Iterator<Item = u64>> = if span <= 100_000 {
        Box::new(0..span)
    } else {
        Box::new((0..100_000u64).map(move |i| i * (span / 100_000)))
    };
    let pj = m.pow_p(j);
    let mut neighbourhood_ok = true;
    for s in probe {
        let b = m.add(a, m.mul(s, step0));
        if !(phase.f)(b).is_multiple_of(pj) || m.ord_p((phase.f1)(b) as i128) != Valuation::Finite(rho) {
            neighbourhood_ok = false;
            break;
        }
    }
    let unique = (t_modulus <= 100_000).then(|| {
        (0..t_modulus)
            .filter(|&s| (phase.f)(m.add(a, m.mul(s, step0))) == 0)
            .count()
            == 1
    });
    Ok(HenselLift { root, t, t_modulus, neighbourhood_ok, unique })
}

/// Catalan number `C_k`.
pub fn catalan(k: u32) -> u64 {
    let mut c = 1u64;
    for i in 0..k as u64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

/// `binom(1/2, j) = (-1)^{j+1} C_{j-1} / 2^{2j-1}` reduced modulo `p^n`.
pub fn binom_half(m: &PrimePowerModulus, j: u32) -> u64 {
    if j == 0 {
        return 1;
    }
    let num = m.reduce_i64(catalan(j - 1) as i64 * if j % 2 == 1 { 1 } else { -1 });
    let den = m.pow(2, 2 * j as u64 - 1);
    m.mul(num, m.inv(den).expect("p is odd"))
}

/// Largest supported shift-set size.
pub const MAX_SHIFTS: usize = 8;

/// `f_{T,ε}(a) = Σ_τ ε_τ ((a - τ) b₀)_{1/2}` on `{a : (a - τ)b₀ square for all τ}`.
#[derive(Clone, Debug)]
pub struct ShiftPhase<'a> {
    shifts: Vec<u64>,
    eps: Vec<i64>,
    b0: u64,
    branch: &'a SqrtBranch,
}

impl<'a> ShiftPhase<'a> {
    pub fn new(shifts: Vec<u64>, eps: Vec<i64>, b0: u64, branch: &'a SqrtBranch) -> Result<Self> {
        let m = branch.modulus();
        if shifts.len() != eps.len() {
            return Err(Error::Usage("shifts and weights differ in length".into()));
        }
        if shifts.len() > MAX_SHIFTS {
            return Err(Error::Usage(format!("at most {MAX_SHIFTS} shifts are supported")));
        }
        if !m.is_unit(b0) {
            return Err(Error::NotAUnit { value: b0 % m.q(), modulus: m.q() });
        }
        let shifts: Vec<u64> = shifts.into_iter().map(|t| t % m.q()).collect();
        for (i, s) in shifts.iter().enumerate() {
            if shifts[..i].contains(s) {
                return Err(Error::Usage(format!("repeated shift {s}")));
            }
        }
        Ok(Self { shifts, eps, b0: b0 % m.q(), branch })
    }

    pub fn modulus(&self) -> &PrimePowerModulus {
        self.branch.modulus()
    }

    pub fn branch(&self) -> &'a SqrtBranch {
        self.branch
    }

    pub fn shifts(&self) -> &[u64] {
        &self.shifts
    }

    pub fn eps(&self) -> &[i64] {
        &self.eps
    }

    pub fn b0(&self) -> u64 {
        self.b0
    }

    /// Indices with `ε_τ ≠ 0`.
    pub fn support(&self) -> Vec<usize> {
        (0..self.eps.len()).filter(|&i| self.eps[i] != 0).collect()
    }

    #[inline]
    pub fn in_domain(&self, a: u64) -> bool {
        let m = self.modulus();
        self.shifts.iter().all(|&tau| self.branch.legendre(m.mul(m.sub(a % m.q(), tau), self.b0)) == 1)
    }

    /// `y_τ = ((a - τ) b₀)_{1/2}` for every shift, or `None` off the domain.
    pub fn roots(&self, a: u64) -> Option<Vec<u64>> {
        let m = self.modulus();
        self.shifts.iter().map(|&tau| self.branch.sqrt(m.mul(m.sub(a % m.q(), tau), self.b0))).collect()
    }

    pub fn value(&self, a: u64) -> Option<u64> {
        let m = self.modulus();
        let roots = self.roots(a)?;
        Some(roots.iter().zip(&self.eps).fold(0, |acc, (&y, &e)| m.add(acc, m.mul(m.reduce_i64(e), y))))
    }

    /// Taylor coefficient `f^{(j)}(a) = Σ_τ ε_τ binom(1/2, j) b₀^j y_τ^{1-2j}`.
    pub fn derivative(&self, j: u32, a: u64) -> Option<u64> {
        if j == 0 {
            return self.value(a);
        }
        let m = self.modulus();
        let roots = self.roots(a)?;
        let coeff = m.mul(binom_half(m, j), m.pow(self.b0, j as u64));
        let mut acc = 0;
        for (&y, &e) in roots.iter().zip(&self.eps) {
            if e == 0 {
                continue;
            }
            let yi = m.inv(y).expect("unit");
            acc = m.add(acc, m.mul(m.reduce_i64(e), m.pow(yi, 2 * j as u64 - 1)));
        }
        Some(m.mul(coeff, acc))
    }

    /// The phase in the form used by the stationary-phase reductions, with
    /// `f₁ = f^{(1)}` and `f₂ = 2f^{(2)}`, optionally restricted to `a ≡ a₁ (mod p)`.
    pub fn as_phase(&self, class: Option<u64>) -> DifferentiablePhase<'_> {
        let m = self.modulus().clone();
        let p = m.p();
        let (s0, s1, s2, s3) = (self.clone(), self.clone(), self.clone(), self.clone());
        let m2 = m.clone();
        DifferentiablePhase {
            modulus: m,
            kappa0: 1,
            domain: Box::new(move |x| class.is_none_or(|c| x % p == c % p) && s0.in_domain(x)),
            f: Box::new(move |x| s1.value(x).expect("in domain")),
            f1: Box::new(move |x| s2.derivative(1, x).expect("in domain")),
            f2: Some(Box::new(move |x| m2.mul(2, s3.derivative(2, x).expect("in domain")))),
        }
    }
}

/// Classes `a mod p^r` in the domain with `f^{(j)}(a) ≡ 0 (mod p^r)` for `1 <= j <= J`.
pub fn singular_locus(sp: &ShiftPhase, big_j: u32, r: u32) -> Result<Vec<u64>> {
    let m = sp.modulus();
    let p = m.p();
    if r > m.n() {
        return Err(Error::Usage(format!("r = {r} exceeds n = {}", m.n())));
    }
    if big_j == 0 {
        return Err(Error::Usage("order J must be at least 1".into()));
    }
    let singular = |x: u64, level: u32| {
        let pr = m.pow_p(level);
        sp.in_domain(x) && (1..=big_j).all(|j| sp.derivative(j, x).is_some_and(|v| v % pr == 0))
    };
    if m.pow_p(r) <= EXHAUSTIVE_LIMIT {
        return Ok((0..m.pow_p(r)).filter(|&x| singular(x, r)).collect());
    }
    let mut level = 0;
    while level < r && m.pow_p(level + 1) <= EXHAUSTIVE_LIMIT {
        level += 1;
    }
    let mut classes: Vec<u64> = (0..m.pow_p(level)).filter(|&x| singular(x, level)).collect();
    while level < r {
        let step = m.pow_p(level);
        classes = classes
            .iter()
            .flat_map(|&c| (0..p).map(move |d| c + d * step))
            .filter(|&x| singular(x, level + 1))
            .collect();
        classes.sort_unstable();
        level += 1;
    }
    Ok(classes)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emptiness {
    ProvedEmpty,
    Inconclusive,
}

/// `p`-adic valuation of a nonzero integer.
fn ord_int(p: u64, x: u64) -> u32 {
    let mut v = 0;
    let mut x = x;
    while x != 0 && x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    v
}

/// Sufficient condition for `⟨f_{T,ε}, |T|, p^r⟩ = ∅` from the Vandermonde
/// determinant in the values `y_τ^{-2}`.
///
/// Restricting to the support `T'`, a singular point forces
/// `Σ_{τ<τ'} ord_p(τ - τ') >= r - ϱ` with `ϱ = ρ₁ + ρ₂`; the locus is therefore
/// empty once every pair satisfies `ord_p(τ - τ') < ⌈(r - ϱ)/binom(|T'|, 2)⌉`.
pub fn vandermonde_emptiness(sp: &ShiftPhase, r: u32) -> Emptiness {
    let m = sp.modulus();
    let p = m.p();
    let support = sp.support();
    let size = support.len() as u32;
    if size < 2 {
        return Emptiness::Inconclusive;
    }
    let rho1 = (1..=size).map(|j| ord_int(p, catalan(j - 1))).max().unwrap_or(0);
    let rho2 = support.iter().map(|&i| ord_int(p, sp.eps[i].unsigned_abs())).min().unwrap_or(0);
    let varrho = rho1 + rho2;
    if r <= varrho {
        return Emptiness::Inconclusive;
    }
    let pairs = size * (size - 1) / 2;
    let threshold = (r - varrho).div_ceil(pairs);
    for (k, &i) in support.iter().enumerate() {
        for &i2 in &support[k + 1..] {
            let diff = m.sub(sp.shifts[i], sp.shifts[i2]);
            match m.ord_p(diff as i128) {
                Valuation::Finite(v) if v < threshold => {}
                _ => return Emptiness::Inconclusive,
            }
        }
    }
    Emptiness::ProvedEmpty
}

/// `p^{-(n-1)} Σ_{a ≡ a₁ (p), a ∈ domain} e(f_{T,ε}(a)/p^n)` by direct summation.
pub fn shifted_exp_sum(sp: &ShiftPhase, a1: u64) -> Complex64 {
    let m = sp.modulus();
    let (p, q) = (m.p(), m.q());
    let a1 = a1 % p;
    if !sp.in_domain(a1) {
        return Complex64::new(0.0, 0.0);
    }
    let count = m.pow_p(m.n() - 1);
    let acc = par_sum(count, |k| {
        let a = a1 + k * p;
        match sp.value(a) {
            Some(v) => e_q(v, q),
            None => Complex64::new(0.0, 0.0),
        }
    });
    acc / count as f64
}

/// Same quantity through [`reduce_sum_linear`] at `κ = ⌈n/2⌉`.
pub fn shifted_exp_sum_accelerated(sp: &ShiftPhase, a1: u64) -> Result<Complex64> {
    let m = sp.modulus();
    let a1 = a1 % m.p();
    if !sp.in_domain(a1) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let phase = sp.as_phase(Some(a1));
    let kappa = m.n().div_ceil(2).max(1);
    Ok(reduce_sum_linear(&phase, kappa)? / m.pow_p(m.n() - 1) as f64)
}
