//! Arithmetic in GF(p^m) over an explicit monic irreducible polynomial.
//!
//! Elements are little-endian coefficient vectors modulo the defining
//! polynomial. The field enumeration order is the base-p value of the
//! coefficient vector read little-endian, so index 0 is zero, index 1 is
//! one, and for GF(4) the order is `0, 1, x, x+1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw, unvalidated field description as it appears in JSON:
/// `{"p":2,"m":2,"poly":[1,1,1]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpecRaw {
    pub p: u64,
    pub m: u32,
    pub poly: Vec<u64>,
}

/// A validated finite field GF(p^m).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FieldSpecRaw", into = "FieldSpecRaw")]
pub struct FieldSpec {
    p: u64,
    m: u32,
    poly: Vec<u64>,
    q: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    coeffs: Vec<u64>,
}

impl FieldElement {
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// `Some((p, m))` when `n = p^m` with `p` prime and `m >= 1`.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    if n < 2 {
        return None;
    }
    let p = (2..=n).find(|d| n % d == 0)?;
    let mut rest = n;
    let mut m = 0;
    while rest % p == 0 {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

impl TryFrom<FieldSpecRaw> for FieldSpec {
    type Error = Error;

    fn try_from(raw: FieldSpecRaw) -> Result<Self> {
        FieldSpec::new(raw.p, raw.m, raw.poly)
    }
}

impl From<FieldSpec> for FieldSpecRaw {
    fn from(spec: FieldSpec) -> Self {
        FieldSpecRaw {
            p: spec.p,
            m: spec.m,
            poly: spec.poly,
        }
    }
}

impl FieldSpec {
    /// Validates `(p, m, poly)`: `p` prime, `poly` monic of degree `m` with
    /// coefficients in `[0, p)`, and irreducible over GF(p).
    pub fn new(p: u64, m: u32, poly: Vec<u64>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if m == 0 {
            return Err(Error::InvalidField("extension degree must be >= 1".into()));
        }
        if poly.len() != m as usize + 1 {
            return Err(Error::InvalidField(format!(
                "polynomial of degree {m} needs {} coefficients, got {}",
                m + 1,
                poly.len()
            )));
        }
        if let Some(&c) = poly.iter().find(|&&c| c >= p) {
            return Err(Error::InvalidField(format!(
                "coefficient {c} not reduced mod {p}"
            )));
        }
        let lead = poly[m as usize];
        if lead != 1 {
            return Err(Error::NotMonic(lead));
        }
        let q = p
            .checked_pow(m)
            .ok_or_else(|| Error::InvalidField(format!("{p}^{m} overflows")))?;
        if let Some(factor) = find_monic_factor(p, &poly) {
            return Err(Error::NotIrreducible { p, factor });
        }
        Ok(FieldSpec { p, m, poly, q })
    }

    /// The prime field GF(p), represented over the polynomial `x`.
    pub fn prime(p: u64) -> Result<Self> {
        FieldSpec::new(p, 1, vec![0, 1])
    }

    /// GF(p^m) over the first monic irreducible polynomial of degree `m`
    /// in enumeration order (`x` itself when `m = 1`).
    pub fn first_irreducible(p: u64, m: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if m == 1 {
            return FieldSpec::prime(p);
        }
        if m == 0 || p.checked_pow(m).is_none() {
            return Err(Error::InvalidField(format!("no usable field of size {p}^{m}")));
        }
        // constant term 0 is divisible by x, so start at 1
        (0..p.pow(m))
            .map(|code| {
                let mut poly: Vec<u64> = (0..m).map(|i| code / p.pow(i) % p).collect();
                poly.push(1);
                poly
            })
            .filter(|poly| poly[0] != 0)
            .find_map(|poly| FieldSpec::new(p, m, poly).ok())
            .ok_or_else(|| Error::Invariant(format!("no irreducible polynomial of degree {m} over GF({p})")))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn poly(&self) -> &[u64] {
        &self.poly
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            coeffs: vec![0; self.m as usize],
        }
    }

    pub fn one(&self) -> FieldElement {
        self.element_at(1)
    }

    pub fn element(&self, coeffs: Vec<u64>) -> Result<FieldElement> {
        if coeffs.len() != self.m as usize || coeffs.iter().any(|&c| c >= self.p) {
            return Err(Error::InvalidField(format!(
                "{coeffs:?} is not an element of GF({}^{})",
                self.p, self.m
            )));
        }
        Ok(FieldElement { coeffs })
    }

    /// The element at position `index` of the enumeration order.
    pub fn element_at(&self, index: u64) -> FieldElement {
        assert!(index < self.q);
        let mut rest = index;
        let coeffs = (0..self.m)
            .map(|_| {
                let c = rest % self.p;
                rest /= self.p;
                c
            })
            .collect();
        FieldElement { coeffs }
    }

    pub fn index_of(&self, a: &FieldElement) -> u64 {
        a.coeffs.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn enumerate(&self) -> Vec<FieldElement> {
        (0..self.q).map(|i| self.element_at(i)).collect()
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        FieldElement {
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| (x + y) % self.p)
                .collect(),
        }
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        FieldElement {
            coeffs: a.coeffs.iter().map(|&x| (self.p - x) % self.p).collect(),
        }
    }

    /// Schoolbook product followed by reduction modulo the defining
    /// polynomial.
    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let m = self.m as usize;
        let p = self.p;
        let mut prod = vec![0u64; 2 * m - 1];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        // x^m = -(poly[0] + ... + poly[m-1] x^{m-1})
        for d in (m..prod.len()).rev() {
            let c = prod[d];
            if c == 0 {
                continue;
            }
            prod[d] = 0;
            for (j, &pc) in self.poly[..m].iter().enumerate() {
                let sub = c * pc % p;
                prod[d - m + j] = (prod[d - m + j] + p - sub) % p;
            }
        }
        prod.truncate(m);
        FieldElement { coeffs: prod }
    }

    pub fn pow(&self, a: &FieldElement, mut e: u64) -> FieldElement {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via a^(q-2); `None` for zero.
    pub fn inv(&self, a: &FieldElement) -> Option<FieldElement> {
        if a.coeffs.iter().all(|&c| c == 0) {
            return None;
        }
        Some(self.pow(a, self.q - 2))
    }

    /// Addition and multiplication tables over enumeration indices.
    pub fn tables(&self) -> FieldTables {
        let elems = self.enumerate();
        let q = self.q as usize;
        let mut add = vec![0u32; q * q];
        let mut mul = vec![0u32; q * q];
        for (i, a) in elems.iter().enumerate() {
            for (j, b) in elems.iter().enumerate() {
                add[i * q + j] = self.index_of(&self.add(a, b)) as u32;
                mul[i * q + j] = self.index_of(&self.mul(a, b)) as u32;
            }
        }
        FieldTables { q, add, mul }
    }
}

/// Index-level operation tables; index 0 is zero and index 1 is one.
#[derive(Debug, Clone)]
pub struct FieldTables {
    q: usize,
    add: Vec<u32>,
    mul: Vec<u32>,
}

impl FieldTables {
    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        self.add[a as usize * self.q + b as usize]
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.mul[a as usize * self.q + b as usize]
    }
}

/// Remainder of `num` modulo monic `den` over GF(p); both little-endian.
fn poly_rem(p: u64, num: &[u64], den: &[u64]) -> Vec<u64> {
    let dd = den.len() - 1;
    let mut r = num.to_vec();
    while r.len() > dd {
        let top = r.len() - 1;
        let c = r[top];
        if c != 0 {
            for (j, &dc) in den.iter().enumerate() {
                let idx = top - dd + j;
                r[idx] = (r[idx] + p - c * dc % p) % p;
            }
        }
        r.pop();
    }
    r
}

/// Trial division by every monic polynomial of degree `1..=m/2`.
fn find_monic_factor(p: u64, poly: &[u64]) -> Option<Vec<u64>> {
    let m = poly.len() - 1;
    for d in 1..=m / 2 {
        let count = p.pow(d as u32);
        for code in 0..count {
            let mut cand = Vec::with_capacity(d + 1);
            let mut rest = code;
            for _ in 0..d {
                cand.push(rest % p);
                rest /= p;
            }
            cand.push(1);
            if poly_rem(p, poly, &cand).iter().all(|&c| c == 0) {
                return Some(cand);
            }
        }
    }
    None
}
