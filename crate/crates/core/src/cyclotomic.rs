//! Exact arithmetic in the cyclotomic field Q(zeta_N).
//!
//! Every scalar in the engine lives here: roots of unity, character values,
//! lifting parameters, q-binomial coefficients. Elements are represented as
//! canonical residues modulo the N-th cyclotomic polynomial Phi_N, with
//! arbitrary-precision rational coefficients, so equality is coefficient-wise
//! and zero-testing is syntactic. No floating point anywhere.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use thiserror::Error;

pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CyclotomicError {
    #[error("cyclotomic modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u64, right: u64 },
    #[error("division by zero in Q(zeta_{modulus})")]
    DivisionByZero { modulus: u64 },
    #[error("bad scalar encoding: {0}")]
    BadEncoding(String),
}

fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

// ---------------------------------------------------------------------------
// Dense polynomials over Q, just enough for cyclotomic polynomial arithmetic.
// ---------------------------------------------------------------------------

mod poly {
    use super::Rat;
    use num_traits::{One, Zero};

    /// Coefficients low-to-high, no trailing zeros (zero poly is the empty vec).
    pub fn normalize(mut c: Vec<Rat>) -> Vec<Rat> {
        while c.last().is_some_and(Zero::is_zero) {
            c.pop();
        }
        c
    }

    pub fn degree(c: &[Rat]) -> Option<usize> {
        if c.is_empty() {
            None
        } else {
            Some(c.len() - 1)
        }
    }

    pub fn mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
        for (i, ca) in a.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (j, cb) in b.iter().enumerate() {
                if !cb.is_zero() {
                    out[i + j] += ca * cb;
                }
            }
        }
        normalize(out)
    }

    pub fn sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
        let mut out = a.to_vec();
        if out.len() < b.len() {
            out.resize(b.len(), Rat::zero());
        }
        for (j, cb) in b.iter().enumerate() {
            out[j] -= cb;
        }
        normalize(out)
    }

    /// Quotient and remainder of `a` by nonzero `b`.
    pub fn divmod(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
        let b = normalize(b.to_vec());
        assert!(!b.is_empty(), "polynomial division by zero");
        let db = b.len() - 1;
        let lead = b[db].clone();
        let mut rem = normalize(a.to_vec());
        if rem.len() < b.len() {
            return (Vec::new(), rem);
        }
        let mut quot = vec![Rat::zero(); rem.len() - db];
        while rem.len() >= b.len() {
            let dr = rem.len() - 1;
            let factor = &rem[dr] / &lead;
            quot[dr - db] = factor.clone();
            for j in 0..=db {
                let t = &factor * &b[j];
                rem[dr - db + j] -= t;
            }
            rem = normalize(rem);
            if rem.is_empty() {
                break;
            }
        }
        (normalize(quot), rem)
    }

    /// Division known to be exact; panics if a remainder survives.
    pub fn exact_div(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
        let (q, r) = divmod(a, b);
        assert!(r.is_empty(), "polynomial division was not exact");
        q
    }

    /// Extended Euclid: returns (g, s) with s*a = g modulo m, g = gcd(a, m).
    pub fn half_ext_gcd(a: &[Rat], m: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
        let (mut r0, mut r1) = (m.to_vec(), a.to_vec());
        let (mut s0, mut s1) = (Vec::new(), vec![Rat::one()]);
        while !r1.is_empty() {
            let (q, r) = divmod(&r0, &r1);
            let s = sub(&s0, &mul(&q, &s1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        (r0, s0)
    }
}

// ---------------------------------------------------------------------------
// Cyclotomic polynomials and the reduction table for a fixed modulus.
// ---------------------------------------------------------------------------

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

fn cyclotomic_poly_uncached(n: u64) -> Vec<Rat> {
    assert!(n >= 1, "cyclotomic polynomial needs n >= 1");
    if n == 1 {
        return vec![-Rat::one(), Rat::one()];
    }
    // (x^n - 1) / prod of Phi_d over proper divisors d of n.
    let mut num = vec![Rat::zero(); (n + 1) as usize];
    num[0] = -Rat::one();
    num[n as usize] = Rat::one();
    for d in divisors(n) {
        if d != n {
            num = poly::exact_div(&num, &cyclotomic_polynomial(d));
        }
    }
    num
}

/// The N-th cyclotomic polynomial Phi_N, coefficients low-to-high.
pub fn cyclotomic_polynomial(n: u64) -> Vec<Rat> {
    struct Cache(RwLock<HashMap<u64, Arc<Vec<Rat>>>>);
    static CACHE: std::sync::OnceLock<Cache> = std::sync::OnceLock::new();
    let cache = CACHE.get_or_init(|| Cache(RwLock::new(HashMap::new())));
    if let Some(p) = cache.0.read().unwrap().get(&n) {
        return p.as_ref().clone();
    }
    let p = Arc::new(cyclotomic_poly_uncached(n));
    cache
        .0
        .write()
        .unwrap()
        .entry(n)
        .or_insert_with(|| p.clone());
    p.as_ref().clone()
}

/// Euler phi(N) = deg Phi_N.
pub fn euler_phi(n: u64) -> usize {
    cyclotomic_polynomial(n).len() - 1
}

/// Precomputed residues of x^k mod Phi_N for k in deg..2*deg-1.
struct Reducer {
    degree: usize,
    phi: Vec<Rat>,
    high_rows: Vec<Vec<Rat>>,
}

impl Reducer {
    fn new(n: u64) -> Self {
        let phi = cyclotomic_polynomial(n);
        let degree = phi.len() - 1;
        // x^degree mod Phi = -(Phi - x^degree) since Phi is monic.
        let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(degree.max(1));
        let mut row: Vec<Rat> = phi[..degree].iter().map(|c| -c).collect();
        rows.push(row.clone());
        for _ in 1..degree {
            // multiply by x and fold the overflow coefficient back in
            let top = row[degree - 1].clone();
            let mut next = vec![Rat::zero(); degree];
            for i in 1..degree {
                next[i] = row[i - 1].clone();
            }
            if !top.is_zero() {
                for (i, r) in rows[0].iter().enumerate() {
                    next[i] += &top * r;
                }
            }
            rows.push(next.clone());
            row = next;
        }
        Reducer {
            degree,
            phi,
            high_rows: rows,
        }
    }

    /// Reduce a coefficient vector of arbitrary length to the canonical residue.
    fn reduce(&self, mut c: Vec<Rat>) -> Vec<Rat> {
        if c.len() <= self.degree {
            c.resize(self.degree, Rat::zero());
            return c;
        }
        if c.len() >= 2 * self.degree {
            // rare slow path: long division
            let (_, mut r) = poly::divmod(&c, &self.phi);
            r.resize(self.degree, Rat::zero());
            return r;
        }
        let mut out: Vec<Rat> = c[..self.degree].to_vec();
        for k in self.degree..c.len() {
            let coeff = std::mem::replace(&mut c[k], Rat::zero());
            if coeff.is_zero() {
                continue;
            }
            for (i, r) in self.high_rows[k - self.degree].iter().enumerate() {
                out[i] += &coeff * r;
            }
        }
        out
    }
}

fn reducer(n: u64) -> Arc<Reducer> {
    static CACHE: std::sync::OnceLock<RwLock<HashMap<u64, Arc<Reducer>>>> =
        std::sync::OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(r) = cache.read().unwrap().get(&n) {
        return r.clone();
    }
    let r = Arc::new(Reducer::new(n));
    cache.write().unwrap().entry(n).or_insert(r).clone()
}

// ---------------------------------------------------------------------------
// Scalars
// ---------------------------------------------------------------------------

/// An element of Q(zeta_N), stored as the canonical residue mod Phi_N.
///
/// All arithmetic is exact. Mixing scalars with different moduli is a
/// programming error: the operator impls panic, the `checked_*` methods
/// return `CyclotomicError::ModulusMismatch`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CyclotomicScalar {
    modulus: u64,
    coeffs: Vec<Rat>,
}

impl CyclotomicScalar {
    pub fn zero(modulus: u64) -> Self {
        CyclotomicScalar {
            modulus,
            coeffs: vec![Rat::zero(); euler_phi(modulus)],
        }
    }

    pub fn one(modulus: u64) -> Self {
        Self::from_rational(modulus, Rat::one())
    }

    pub fn from_rational(modulus: u64, r: Rat) -> Self {
        let mut coeffs = vec![Rat::zero(); euler_phi(modulus)];
        coeffs[0] = r;
        CyclotomicScalar { modulus, coeffs }
    }

    pub fn from_integer(modulus: u64, n: i64) -> Self {
        Self::from_rational(modulus, rat_int(n))
    }

    /// zeta_N^k, with k reduced mod N.
    pub fn root_of_unity(modulus: u64, k: i64) -> Self {
        let n = modulus as i64;
        let k = k.rem_euclid(n) as usize;
        let red = reducer(modulus);
        let mut c = vec![Rat::zero(); k + 1];
        c[k] = Rat::one();
        CyclotomicScalar {
            modulus,
            coeffs: red.reduce(c),
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(Zero::is_zero)
    }

    /// Some(r) when the element lies in Q.
    pub fn as_rational(&self) -> Option<Rat> {
        if self.coeffs[1..].iter().all(Zero::is_zero) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    fn guard(&self, rhs: &Self) -> Result<(), CyclotomicError> {
        if self.modulus != rhs.modulus {
            Err(CyclotomicError::ModulusMismatch {
                left: self.modulus,
                right: rhs.modulus,
            })
        } else {
            Ok(())
        }
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self, CyclotomicError> {
        self.guard(rhs)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CyclotomicScalar {
            modulus: self.modulus,
            coeffs,
        })
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self, CyclotomicError> {
        self.guard(rhs)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(CyclotomicScalar {
            modulus: self.modulus,
            coeffs,
        })
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self, CyclotomicError> {
        self.guard(rhs)?;
        if self.is_zero() || rhs.is_zero() {
            return Ok(Self::zero(self.modulus));
        }
        let d = self.coeffs.len();
        let mut prod = vec![Rat::zero(); 2 * d - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        let red = reducer(self.modulus);
        Ok(CyclotomicScalar {
            modulus: self.modulus,
            coeffs: red.reduce(prod),
        })
    }

    /// Multiplicative inverse via the extended Euclidean algorithm mod Phi_N.
    pub fn invert(&self) -> Result<Self, CyclotomicError> {
        if self.is_zero() {
            return Err(CyclotomicError::DivisionByZero {
                modulus: self.modulus,
            });
        }
        let phi = cyclotomic_polynomial(self.modulus);
        let a = poly::normalize(self.coeffs.clone());
        let (g, s) = poly::half_ext_gcd(&a, &phi);
        // Phi_N is irreducible over Q, so g is a nonzero constant.
        assert_eq!(g.len(), 1, "gcd with irreducible Phi_N must be constant");
        let ginv = Rat::one() / &g[0];
        let mut coeffs: Vec<Rat> = s.iter().map(|c| c * &ginv).collect();
        let red = reducer(self.modulus);
        coeffs = red.reduce(coeffs);
        Ok(CyclotomicScalar {
            modulus: self.modulus,
            coeffs,
        })
    }

    /// Integer power, with negative exponents via the inverse.
    ///
    /// # Panics
    /// Panics on 0^k for k < 0.
    pub fn pow(&self, k: i64) -> Self {
        if k == 0 {
            return Self::one(self.modulus);
        }
        let base = if k < 0 {
            self.invert().expect("zero has no negative power")
        } else {
            self.clone()
        };
        let mut e = k.unsigned_abs();
        let mut acc = Self::one(self.modulus);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.checked_mul(&sq).unwrap();
            }
            e >>= 1;
            if e > 0 {
                sq = sq.checked_mul(&sq).unwrap();
            }
        }
        acc
    }

    /// Multiplicative order, or None if the element is not a root of unity.
    pub fn multiplicative_order(&self) -> Option<u64> {
        if self.is_zero() {
            return None;
        }
        let mut acc = self.clone();
        for k in 1..=2 * self.modulus {
            if acc.is_one() {
                return Some(k);
            }
            acc = acc.checked_mul(self).unwrap();
        }
        None
    }

    /// Canonical triple encoding: (numerator, denominator, power of zeta),
    /// sorted by power, fractions reduced, zero terms omitted.
    pub fn to_triples(&self) -> Vec<(BigInt, BigInt, u64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (c.numer().clone(), c.denom().clone(), k as u64))
            .collect()
    }

    /// Rebuild a scalar from triple encoding; powers are reduced mod N.
    pub fn from_triples(
        modulus: u64,
        triples: &[(BigInt, BigInt, i64)],
    ) -> Result<Self, CyclotomicError> {
        let mut acc = Self::zero(modulus);
        for (num, den, pow) in triples {
            if den.is_zero() {
                return Err(CyclotomicError::BadEncoding(
                    "zero denominator in scalar".into(),
                ));
            }
            let term = Self::root_of_unity(modulus, *pow).scale(&Rat::new(num.clone(), den.clone()));
            acc = acc.checked_add(&term)?;
        }
        Ok(acc)
    }

    pub fn scale(&self, r: &Rat) -> Self {
        CyclotomicScalar {
            modulus: self.modulus,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl std::ops::$tr for &CyclotomicScalar {
            type Output = CyclotomicScalar;
            fn $m(self, rhs: &CyclotomicScalar) -> CyclotomicScalar {
                self.$checked(rhs).unwrap()
            }
        }
        impl std::ops::$tr for CyclotomicScalar {
            type Output = CyclotomicScalar;
            fn $m(self, rhs: CyclotomicScalar) -> CyclotomicScalar {
                self.$checked(&rhs).unwrap()
            }
        }
    };
}
binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl std::ops::Neg for &CyclotomicScalar {
    type Output = CyclotomicScalar;
    fn neg(self) -> CyclotomicScalar {
        CyclotomicScalar {
            modulus: self.modulus,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}
impl std::ops::Neg for CyclotomicScalar {
    type Output = CyclotomicScalar;
    fn neg(self) -> CyclotomicScalar {
        -&self
    }
}

impl fmt::Display for CyclotomicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let sign = c.is_negative();
            if first {
                if sign {
                    write!(f, "-")?;
                }
                first = false;
            } else if sign {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if k == 0 {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "z^{k}")?;
            } else {
                write!(f, "{mag}*z^{k}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for CyclotomicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (mod Phi_{})", self.modulus)
    }
}

// ---------------------------------------------------------------------------
// q-binomials
// ---------------------------------------------------------------------------

/// Gaussian binomial binom(n,k)_q by the q-Pascal recursion
/// binom(n,k) = binom(n-1,k-1) + q^k binom(n-1,k); zero whenever
/// n, k or n-k is negative.
///
/// # Panics
/// Panics when q is zero.
pub fn q_binomial(n: i64, k: i64, q: &CyclotomicScalar) -> CyclotomicScalar {
    assert!(!q.is_zero(), "q_binomial needs q != 0");
    let modulus = q.modulus();
    if n < 0 || k < 0 || n - k < 0 {
        return CyclotomicScalar::zero(modulus);
    }
    let (n, k) = (n as usize, k as usize);
    // one Pascal row at a time; row[j] = binom(m, j)_q
    let mut row = vec![CyclotomicScalar::one(modulus)];
    for _m in 1..=n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(CyclotomicScalar::one(modulus));
        let mut qpow = q.clone(); // q^j
        for j in 1..=row.len() {
            let upleft = &row[j - 1];
            let up = if j < row.len() {
                row[j].checked_mul(&qpow).unwrap()
            } else {
                CyclotomicScalar::zero(modulus)
            };
            next.push(upleft.checked_add(&up).unwrap());
            qpow = qpow.checked_mul(q).unwrap();
        }
        row = next;
    }
    row[k].clone()
}

/// q-factorial (m)!_q = prod_{t=1..m} (1 + q + ... + q^{t-1}); empty product
/// for m = 0, zero for negative m.
pub fn q_factorial(m: i64, q: &CyclotomicScalar) -> CyclotomicScalar {
    let modulus = q.modulus();
    if m < 0 {
        return CyclotomicScalar::zero(modulus);
    }
    let mut acc = CyclotomicScalar::one(modulus);
    let mut qint = CyclotomicScalar::one(modulus); // (1)_q
    let mut qpow = q.clone();
    for t in 1..=m {
        if t > 1 {
            qint = qint.checked_add(&qpow).unwrap();
            qpow = qpow.checked_mul(q).unwrap();
        }
        acc = acc.checked_mul(&qint).unwrap();
    }
    acc
}
