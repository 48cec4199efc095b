//! Prime fields and prime-power fields `F_q`, `q = p^r <= 2^16`.
//!
//! Elements are stored in canonical form: the integer `0..q` whose base-`p`
//! digits (lowest digit first) are the coefficients of the residue polynomial
//! modulo the field's modulus. Multiplication goes through discrete log
//! tables built from the least primitive element.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported field order.
pub const MAX_FIELD_ORDER: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{r} exceeds {MAX_FIELD_ORDER}")]
    TooLarge { p: u32, r: u32 },
    #[error("field of order {0} has even characteristic")]
    EvenCharacteristic(u32),
    #[error("element {0} is a square")]
    NotNonsquare(u32),
    #[error("modulus {0:?} is not a monic irreducible polynomial of the stated degree")]
    InvalidModulus(Vec<u32>),
    #[error("element {0} does not belong to a field of order {1}")]
    OutOfRange(u32, u32),
}

/// An element in canonical integer form. Meaningful only together with the
/// [`Field`] that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(pub u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Serialized description of a field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub r: u32,
    /// Monic modulus, constant coefficient first (length `r + 1`).
    pub modulus: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct Field {
    p: u32,
    r: u32,
    q: u32,
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits `n` into `(p, r)` with `n = p^r` when `n` is a prime power.
pub fn prime_power(n: u32) -> Option<(u32, u32)> {
    if n < 2 {
        return None;
    }
    let p = (2..=n).find(|d| n.is_multiple_of(*d))?;
    let mut m = n;
    let mut r = 0;
    while m.is_multiple_of(p) {
        m /= p;
        r += 1;
    }
    (m == 1).then_some((p, r))
}

// Polynomials over Z_p as coefficient vectors, constant term first.

fn poly_trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    // m is monic
    let mut a = poly_trim(a.to_vec());
    let dm = m.len() - 1;
    while a.len() > dm {
        let lead = *a.last().unwrap();
        let shift = a.len() - 1 - dm;
        for (i, &c) in m.iter().enumerate() {
            let sub = (lead as u64 * c as u64 % p as u64) as u32;
            a[shift + i] = (a[shift + i] + p - sub) % p;
        }
        a = poly_trim(a);
    }
    a
}

fn poly_mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    poly_trim(out.into_iter().map(|c| c as u32).collect())
}

fn digits_of(mut n: u32, p: u32, len: usize) -> Vec<u32> {
    let mut d = vec![0; len];
    for slot in d.iter_mut() {
        *slot = n % p;
        n /= p;
    }
    d
}

fn from_digits(d: &[u32], p: u32) -> u32 {
    d.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Irreducibility by trial division against every monic polynomial of degree
/// `1..=deg/2`.
pub fn is_irreducible(modulus: &[u32], p: u32) -> bool {
    let deg = modulus.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for low in 0..count {
            let mut divisor = digits_of(low as u32, p, d);
            divisor.push(1);
            if poly_rem(modulus, &divisor, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// The lexicographically least monic irreducible polynomial of degree `r`,
/// comparing coefficient tuples constant-term first.
fn least_irreducible(p: u32, r: u32) -> Vec<u32> {
    let r = r as usize;
    if r == 1 {
        return vec![0, 1];
    }
    // Enumerate (c_0, .., c_{r-1}) in lexicographic order: c_0 varies slowest.
    let count = (p as u64).pow(r as u32);
    for n in 0..count {
        let mut coeffs = digits_of(n as u32, p, r);
        coeffs.reverse();
        coeffs.push(1);
        if is_irreducible(&coeffs, p) {
            return coeffs;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

impl Field {
    pub fn new(p: u32, r: u32) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if r == 0 {
            return Err(FieldError::ZeroDegree);
        }
        let q = (p as u64)
            .checked_pow(r)
            .filter(|&q| q <= MAX_FIELD_ORDER)
            .ok_or(FieldError::TooLarge { p, r })? as u32;
        let modulus = least_irreducible(p, r);
        Ok(Self::with_modulus(p, r, q, modulus))
    }

    /// Field of prime-power order `q`.
    pub fn of_order(q: u32) -> Result<Self, FieldError> {
        let (p, r) = prime_power(q).ok_or(FieldError::NotPrime(q))?;
        Self::new(p, r)
    }

    fn with_modulus(p: u32, r: u32, q: u32, modulus: Vec<u32>) -> Self {
        let len = r as usize;
        let mul_slow = |a: u32, b: u32| -> u32 {
            let prod = poly_mul(&poly_trim(digits_of(a, p, len)), &poly_trim(digits_of(b, p, len)), p);
            let mut rem = poly_rem(&prod, &modulus, p);
            rem.resize(len, 0);
            from_digits(&rem, p)
        };
        let mut exp = vec![0u32; q as usize];
        let mut log = vec![0u32; q as usize];
        if q == 2 {
            exp[0] = 1;
        } else {
            // least element of multiplicative order q - 1
            for g in 2..q {
                let mut x = 1u32;
                let mut ok = true;
                for k in 0..(q - 1) {
                    if k > 0 && x == 1 {
                        ok = false;
                        break;
                    }
                    exp[k as usize] = x;
                    x = mul_slow(x, g);
                }
                if ok && x == 1 {
                    break;
                }
            }
        }
        for (k, &x) in exp.iter().enumerate().take((q - 1) as usize) {
            log[x as usize] = k as u32;
        }
        Field { p, r, q, modulus, exp, log }
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Self, FieldError> {
        let field = Self::new(spec.p, spec.r)?;
        if field.modulus != spec.modulus {
            if spec.modulus.len() != spec.r as usize + 1
                || spec.modulus.last() != Some(&1)
                || spec.modulus.iter().any(|&c| c >= spec.p)
                || !is_irreducible(&spec.modulus, spec.p)
            {
                return Err(FieldError::InvalidModulus(spec.modulus.clone()));
            }
            return Ok(Self::with_modulus(spec.p, spec.r, field.q, spec.modulus.clone()));
        }
        Ok(field)
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec { p: self.p, r: self.r, modulus: self.modulus.clone() }
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.r
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// A generator of the multiplicative group.
    pub fn primitive_element(&self) -> FieldElement {
        FieldElement(self.exp[if self.q == 2 { 0 } else { 1 }])
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(FieldElement)
    }

    pub fn element(&self, n: u32) -> Result<FieldElement, FieldError> {
        if n < self.q {
            Ok(FieldElement(n))
        } else {
            Err(FieldError::OutOfRange(n, self.q))
        }
    }

    /// Image of an integer under `Z -> F_p -> F_q`.
    pub fn from_int(&self, n: i64) -> FieldElement {
        FieldElement(n.rem_euclid(self.p as i64) as u32)
    }

    pub fn coefficients(&self, a: FieldElement) -> Vec<u32> {
        digits_of(a.0, self.p, self.r as usize)
    }

    pub fn from_coefficients(&self, c: &[u32]) -> FieldElement {
        let mut c: Vec<u32> = c.iter().map(|&x| x % self.p).collect();
        c.resize(self.r as usize, 0);
        FieldElement(from_digits(&c, self.p))
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.r == 1 {
            return FieldElement((a.0 + b.0) % self.p);
        }
        let (mut x, mut y) = (a.0, b.0);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.r {
            out += ((x % self.p + y % self.p) % self.p) * place;
            x /= self.p;
            y /= self.p;
            place = place.wrapping_mul(self.p);
        }
        FieldElement(out)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if self.r == 1 {
            return FieldElement((self.p - a.0) % self.p);
        }
        let mut x = a.0;
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.r {
            out += ((self.p - x % self.p) % self.p) * place;
            x /= self.p;
            place = place.wrapping_mul(self.p);
        }
        FieldElement(out)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        let n = self.q - 1;
        let k = (self.log[a.index()] + self.log[b.index()]) % n;
        FieldElement(self.exp[k as usize])
    }

    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if a.0 == 0 {
            return None;
        }
        let n = self.q - 1;
        Some(FieldElement(self.exp[((n - self.log[a.index()]) % n) as usize]))
    }

    /// `a / b`; panics on division by zero.
    pub fn div(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.mul(a, self.inv(b).expect("division by zero in finite field"))
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return FieldElement::ONE;
        }
        if a.0 == 0 {
            return FieldElement::ZERO;
        }
        let n = (self.q - 1) as u64;
        let k = (self.log[a.index()] as u64 * (e % n)) % n;
        FieldElement(self.exp[k as usize])
    }

    pub fn square(&self, a: FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    /// Multiplicative order of a nonzero element.
    pub fn multiplicative_order(&self, a: FieldElement) -> Option<u32> {
        if a.0 == 0 {
            return None;
        }
        let mut x = a;
        let mut k = 1;
        while x != FieldElement::ONE {
            x = self.mul(x, a);
            k += 1;
        }
        Some(k)
    }

    pub fn is_square(&self, a: FieldElement) -> bool {
        a.0 == 0 || self.p == 2 || self.log[a.index()].is_multiple_of(2)
    }

    /// First element in canonical order that is not a square.
    pub fn least_nonsquare(&self) -> Result<FieldElement, FieldError> {
        if self.p == 2 {
            return Err(FieldError::EvenCharacteristic(self.q));
        }
        Ok(self.elements().find(|&a| !self.is_square(a)).expect("odd q has nonsquares"))
    }

    /// All `(u, v)` with `u^2 - eps * v^2 = c`.
    pub fn pell_solutions(
        &self,
        eps: FieldElement,
        c: FieldElement,
    ) -> Result<Vec<(FieldElement, FieldElement)>, FieldError> {
        if self.p == 2 {
            return Err(FieldError::EvenCharacteristic(self.q));
        }
        if self.is_square(eps) {
            return Err(FieldError::NotNonsquare(eps.0));
        }
        let mut roots: Vec<Vec<FieldElement>> = vec![Vec::new(); self.q as usize];
        for u in self.elements() {
            roots[self.square(u).index()].push(u);
        }
        let mut out = Vec::new();
        for v in self.elements() {
            let rhs = self.add(c, self.mul(eps, self.square(v)));
            out.extend(roots[rhs.index()].iter().map(|&u| (u, v)));
        }
        out.sort();
        Ok(out)
    }

    /// Standard dot product on `F_q^r`.
    pub fn dot(&self, a: &[FieldElement], b: &[FieldElement]) -> FieldElement {
        a.iter()
            .zip(b)
            .fold(FieldElement::ZERO, |acc, (&x, &y)| self.add(acc, self.mul(x, y)))
    }
}
