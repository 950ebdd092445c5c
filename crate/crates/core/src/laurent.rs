//! The same criterion in `𝔽_q((X⁻¹))`: polynomials over a finite field, continued
//! fractions with polynomial partial quotients, and the exact block sums
//! `Σ_{n_k ≤ n < n_{k+1}} q^{n − max(n_{k+1}, l_n)}`.
//!
//! Everything here is exact. Norms are powers of `q`, so partial sums are rationals.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::interval::Rat;

/// A field element, written in base `p` by its coefficients over `𝔽_p`.
pub type Elem = u64;

/// Largest extension degree accepted.
pub const MAX_EXTENSION: usize = 16;

/// Dense polynomials over `𝔽_p`, little-endian, no trailing zeros.
mod fp {
    pub fn norm(mut v: Vec<u64>) -> Vec<u64> {
        while v.last() == Some(&0) {
            v.pop();
        }
        v
    }

    pub fn mulmod(a: u64, b: u64, p: u64) -> u64 {
        ((a as u128 * b as u128) % p as u128) as u64
    }

    /// Inverse by the extended Euclidean algorithm on integers.
    pub fn inv(a: u64, p: u64) -> Option<u64> {
        let (mut r0, mut r1) = (p as i128, (a % p) as i128);
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        (r0 == 1).then(|| s0.rem_euclid(p as i128) as u64)
    }

    pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut out = vec![0; a.len().max(b.len())];
        for (i, o) in out.iter_mut().enumerate() {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            *o = (x + p - y) % p;
        }
        norm(out)
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + mulmod(x, y, p)) % p;
            }
        }
        norm(out)
    }

    /// `(quotient, remainder)`; `b` nonzero.
    pub fn divrem(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
        let lead = inv(*b.last().expect("nonzero divisor"), p).expect("field coefficient");
        let mut r = a.to_vec();
        if r.len() < b.len() {
            return (Vec::new(), norm(r));
        }
        let mut q = vec![0; r.len() - b.len() + 1];
        for i in (0..q.len()).rev() {
            let c = mulmod(r[i + b.len() - 1], lead, p);
            q[i] = c;
            if c != 0 {
                for (j, &y) in b.iter().enumerate() {
                    r[i + j] = (r[i + j] + p - mulmod(c, y, p)) % p;
                }
            }
        }
        (norm(q), norm(r))
    }

    pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        divrem(a, b, p).1
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let (mut x, mut y) = (norm(a.to_vec()), norm(b.to_vec()));
        while !y.is_empty() {
            let r = rem(&x, &y, p);
            x = std::mem::replace(&mut y, r);
        }
        x
    }

    pub fn powmod(base: &[u64], mut e: u64, m: &[u64], p: u64) -> Vec<u64> {
        let mut r = vec![1];
        let mut b = rem(base, m, p);
        while e > 0 {
            if e & 1 == 1 {
                r = rem(&mul(&r, &b, p), m, p);
            }
            b = rem(&mul(&b, &b, p), m, p);
            e >>= 1;
        }
        r
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Ben-Or: a monic `f` of degree `m` is irreducible iff `gcd(Y^{p^i} − Y, f) = 1` for `i ≤ m/2`.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let m = f.len() - 1;
    let y = vec![0, 1];
    let mut h = y.clone();
    for _ in 1..=m / 2 {
        h = fp::powmod(&h, p, f, p);
        let g = fp::gcd(&fp::sub(&h, &y, p), f, p);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

/// `𝔽_q` with `q = p^m`, as `𝔽_p[Y]/(modulus)` when `m > 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteField {
    p: u64,
    /// Monic, little-endian, degree `m`.
    modulus: Vec<u64>,
    q: u64,
}

impl FiniteField {
    pub fn prime(p: u64) -> Result<Self> {
        if p >= 1 << 32 || !is_prime(p) {
            return Err(Error::invalid(format!(
                "characteristic {p} is not a prime below 2^32"
            )));
        }
        Ok(FiniteField {
            p,
            modulus: vec![0, 1],
            q: p,
        })
    }

    /// `𝔽_p[Y]/(modulus)` with a little-endian modulus of degree `m ≥ 1`.
    pub fn extension(p: u64, modulus: Vec<u64>) -> Result<Self> {
        let base = Self::prime(p)?;
        let f = fp::norm(modulus.iter().map(|c| c % p).collect());
        if f.len() < 2 || f.len() - 1 > MAX_EXTENSION {
            return Err(Error::invalid(format!(
                "modulus degree must be between 1 and {MAX_EXTENSION}"
            )));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::invalid("modulus coefficients must lie in 0..p"));
        }
        let lead = fp::inv(*f.last().expect("nonempty"), p).expect("nonzero lead");
        let f: Vec<u64> = f.iter().map(|&c| fp::mulmod(c, lead, p)).collect();
        let m = f.len() - 1;
        if m > 1 && !is_irreducible(&f, p) {
            return Err(Error::invalid(format!(
                "modulus {modulus:?} is reducible over F_{p}"
            )));
        }
        let q = (0..m)
            .try_fold(1u64, |acc, _| acc.checked_mul(p))
            .ok_or_else(|| Error::invalid("field order exceeds 2^64"))?;
        Ok(FiniteField {
            p: base.p,
            modulus: if m == 1 { vec![0, 1] } else { f },
            q,
        })
    }

    /// `"p=2"`, `"p=3,m=1"` or `"p=2,m=2,mod=[1,1,1]"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (mut p, mut m, mut modulus) = (None, 1usize, None);
        let mut rest = spec.trim();
        while !rest.is_empty() {
            let (key, after) = rest.split_once('=').ok_or_else(|| {
                Error::invalid(format!("field spec {spec:?}: expected key=value"))
            })?;
            let (value, next) = if after.starts_with('[') {
                let end = after
                    .find(']')
                    .ok_or_else(|| Error::invalid("unclosed modulus list"))?;
                (&after[..=end], after[end + 1..].trim_start_matches(','))
            } else {
                after.split_once(',').unwrap_or((after, ""))
            };
            let bad = || Error::invalid(format!("field spec {spec:?}: bad value {value:?}"));
            match key.trim() {
                "p" => p = Some(value.trim().parse::<u64>().map_err(|_| bad())?),
                "m" => m = value.trim().parse().map_err(|_| bad())?,
                "mod" => {
                    modulus = Some(serde_json::from_str::<Vec<u64>>(value).map_err(|_| bad())?)
                }
                k => return Err(Error::invalid(format!("field spec: unknown key {k:?}"))),
            }
            rest = next.trim();
        }
        let p = p.ok_or_else(|| Error::invalid("field spec needs p"))?;
        match modulus {
            Some(f) => {
                let field = Self::extension(p, f)?;
                if field.m() != m && spec.contains("m=") {
                    return Err(Error::invalid(format!(
                        "modulus has degree {}, not m = {m}",
                        field.m()
                    )));
                }
                Ok(field)
            }
            None if m == 1 => Self::prime(p),
            None => Err(Error::invalid(
                "m > 1 needs an explicit irreducible modulus, e.g. mod=[1,1,1]",
            )),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn describe(&self) -> String {
        if self.m() == 1 {
            format!("p={}", self.p)
        } else {
            format!("p={},m={},mod={:?}", self.p, self.m(), self.modulus)
        }
    }

    fn decode(&self, a: Elem) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.m());
        let mut x = a;
        for _ in 0..self.m() {
            out.push(x % self.p);
            x /= self.p;
        }
        fp::norm(out)
    }

    fn encode(&self, v: &[u64]) -> Elem {
        v.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn contains(&self, a: Elem) -> bool {
        a < self.q
    }

    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        if self.m() == 1 {
            return (a + b) % self.p;
        }
        let (x, y) = (self.decode(a), self.decode(b));
        let n = x.len().max(y.len());
        let s: Vec<u64> = (0..n)
            .map(|i| (x.get(i).unwrap_or(&0) + y.get(i).unwrap_or(&0)) % self.p)
            .collect();
        self.encode(&s)
    }

    pub fn neg(&self, a: Elem) -> Elem {
        if self.m() == 1 {
            return (self.p - a % self.p) % self.p;
        }
        let x: Vec<u64> = self
            .decode(a)
            .iter()
            .map(|&c| (self.p - c) % self.p)
            .collect();
        self.encode(&x)
    }

    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if self.m() == 1 {
            return fp::mulmod(a, b, self.p);
        }
        let prod = fp::mul(&self.decode(a), &self.decode(b), self.p);
        self.encode(&fp::rem(&prod, &self.modulus, self.p))
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a == 0 {
            return Err(Error::invalid("zero has no inverse"));
        }
        if self.m() == 1 {
            return fp::inv(a, self.p)
                .ok_or_else(|| Error::Internal("prime field without inverse".into()));
        }
        // extended Euclid in F_p[Y]
        let p = self.p;
        let (mut r0, mut r1) = (self.modulus.clone(), self.decode(a));
        let (mut s0, mut s1): (Vec<u64>, Vec<u64>) = (Vec::new(), vec![1]);
        while !r1.is_empty() {
            let (q, r) = fp::divrem(&r0, &r1, p);
            r0 = std::mem::replace(&mut r1, r);
            let s = fp::sub(&s0, &fp::mul(&q, &s1, p), p);
            s0 = std::mem::replace(&mut s1, s);
        }
        let c = fp::inv(r0[0], p).expect("gcd is a unit");
        let s: Vec<u64> = s0.iter().map(|&x| fp::mulmod(x, c, p)).collect();
        Ok(self.encode(&fp::rem(&s, &self.modulus, p)))
    }

    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        let (mut r, mut b) = (1, a);
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }
}

/// Polynomial over a [`FiniteField`], little-endian and normalized.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    c: Vec<Elem>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { c: Vec::new() }
    }

    pub fn one() -> Self {
        Poly { c: vec![1] }
    }

    pub fn x() -> Self {
        Poly { c: vec![0, 1] }
    }

    pub fn constant(e: Elem) -> Self {
        Self::from_coeffs(vec![e])
    }

    /// `e·X^d`.
    pub fn monomial(e: Elem, d: usize) -> Self {
        let mut c = vec![0; d + 1];
        c[d] = e;
        Self::from_coeffs(c)
    }

    pub fn from_coeffs(mut c: Vec<Elem>) -> Self {
        while c.last() == Some(&0) {
            c.pop();
        }
        Poly { c }
    }

    pub fn coeffs(&self) -> &[Elem] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> Elem {
        self.c.get(i).copied().unwrap_or(0)
    }

    /// `None` for the zero polynomial.
    pub fn deg(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn lead(&self) -> Elem {
        self.c.last().copied().unwrap_or(0)
    }

    pub fn add(&self, o: &Poly, f: &FiniteField) -> Poly {
        let n = self.c.len().max(o.c.len());
        Self::from_coeffs((0..n).map(|i| f.add(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn neg(&self, f: &FiniteField) -> Poly {
        Poly {
            c: self.c.iter().map(|&a| f.neg(a)).collect(),
        }
    }

    pub fn sub(&self, o: &Poly, f: &FiniteField) -> Poly {
        self.add(&o.neg(f), f)
    }

    pub fn scale(&self, e: Elem, f: &FiniteField) -> Poly {
        Self::from_coeffs(self.c.iter().map(|&a| f.mul(a, e)).collect())
    }

    /// `X^k · self`.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![0; k];
        c.extend_from_slice(&self.c);
        Poly { c }
    }

    pub fn mul(&self, o: &Poly, f: &FiniteField) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                out[i + j] = f.add(out[i + j], f.mul(a, b));
            }
        }
        Self::from_coeffs(out)
    }

    pub fn divrem(&self, d: &Poly, f: &FiniteField) -> Result<(Poly, Poly)> {
        let dd = d
            .deg()
            .ok_or_else(|| Error::invalid("division by the zero polynomial"))?;
        let lead = f.inv(d.lead())?;
        let mut r = self.c.clone();
        if r.len() <= dd {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut q = vec![0; r.len() - dd];
        for i in (0..q.len()).rev() {
            let c = f.mul(r[i + dd], lead);
            q[i] = c;
            if c != 0 {
                for (j, &b) in d.c.iter().enumerate() {
                    r[i + j] = f.sub(r[i + j], f.mul(c, b));
                }
            }
        }
        Ok((Self::from_coeffs(q), Self::from_coeffs(r)))
    }

    pub fn to_json(&self) -> Value {
        json!(self.c)
    }

    pub fn from_json(v: &Value, f: &FiniteField) -> Result<Self> {
        let items = v
            .as_array()
            .ok_or_else(|| Error::invalid("polynomial must be a little-endian coefficient list"))?;
        let c: Vec<Elem> = items
            .iter()
            .map(|x| {
                x.as_u64().filter(|&e| f.contains(e)).ok_or_else(|| {
                    Error::invalid(format!("coefficient {x} is not an element of F_{}", f.q()))
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self::from_coeffs(c))
    }

    /// Uniform polynomial of degree exactly `d`.
    pub fn random(rng: &mut impl Rng, d: usize, f: &FiniteField) -> Poly {
        let mut c: Vec<Elem> = (0..d).map(|_| rng.gen_range(0..f.q())).collect();
        c.push(rng.gen_range(1..f.q()));
        Poly { c }
    }
}

/// `q^e` for any integer `e`.
pub fn q_pow(q: u64, e: i64) -> Rat {
    let b = BigInt::from(q).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Rat::from_integer(b)
    } else {
        Rat::new(BigInt::one(), b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuotientSource {
    /// `A_k = A` for every `k ≥ 1`.
    Const(Poly),
    Periodic {
        pre: Vec<Poly>,
        period: Vec<Poly>,
    },
    /// A finite prefix of an irrational expansion.
    Explicit(Vec<Poly>),
    /// The complete expansion of a rational function.
    Rational(Vec<Poly>),
    /// Quotients certified for every series agreeing with `Σ_{i ≤ N} c_i X^{−i}`.
    Series {
        coeffs: Vec<Elem>,
        certified: Vec<Poly>,
    },
}

/// `f = [0; A_1, A_2, …]` in `𝕃` with its principal convergents `P_k/Q_k`.
#[derive(Clone, Debug)]
pub struct LaurentCf {
    field: FiniteField,
    source: QuotientSource,
    /// `a[k] = A_k`, with `a[0] = 0`.
    a: Vec<Poly>,
    p: Vec<Poly>,
    q: Vec<Poly>,
    degrees: Vec<usize>,
}

/// Partial quotients of `num/den`, `deg num < deg den`.
fn rational_quotients(num: &Poly, den: &Poly, f: &FiniteField) -> Result<Vec<Poly>> {
    let (mut n, mut d) = (num.clone(), den.clone());
    let mut out = Vec::new();
    while !n.is_zero() {
        let (a, r) = d.divrem(&n, f)?;
        out.push(a);
        d = std::mem::replace(&mut n, r);
    }
    Ok(out)
}

impl LaurentCf {
    pub fn new(field: FiniteField, source: QuotientSource) -> Result<Self> {
        let check = |ps: &[Poly]| -> Result<()> {
            for a in ps {
                if a.deg().map_or(true, |d| d == 0) {
                    return Err(Error::invalid(
                        "partial quotients A_k (k ≥ 1) need degree ≥ 1",
                    ));
                }
                if a.coeffs().iter().any(|&c| !field.contains(c)) {
                    return Err(Error::invalid(
                        "partial quotient coefficient outside the field",
                    ));
                }
            }
            Ok(())
        };
        match &source {
            QuotientSource::Const(a) => check(std::slice::from_ref(a))?,
            QuotientSource::Periodic { pre, period } => {
                if period.is_empty() {
                    return Err(Error::invalid("empty period"));
                }
                check(pre)?;
                check(period)?;
            }
            QuotientSource::Explicit(v) | QuotientSource::Rational(v) => check(v)?,
            QuotientSource::Series { certified, .. } => check(certified)?,
        }
        Ok(LaurentCf {
            field,
            source,
            a: vec![Poly::zero()],
            p: vec![Poly::zero()],
            q: vec![Poly::one()],
            degrees: vec![0],
        })
    }

    /// `num/den` with `deg num < deg den`.
    pub fn from_rational(field: FiniteField, num: &Poly, den: &Poly) -> Result<Self> {
        if den.is_zero() || num.deg().is_some_and(|d| Some(d) >= den.deg()) {
            return Err(Error::invalid(
                "a rational element of 𝕃 needs deg num < deg den",
            ));
        }
        let qs = rational_quotients(num, den, &field)?;
        Self::new(field, QuotientSource::Rational(qs))
    }

    /// `f = Σ_{i=1}^{N} c_i X^{−i} + O(X^{−N−1})`. A prefix `A_1..A_k` is kept when every
    /// series in that class shares it, which holds exactly when `2 n_k ≤ N`.
    pub fn from_series(field: FiniteField, coeffs: Vec<Elem>) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|&&c| !field.contains(c)) {
            return Err(Error::invalid(format!(
                "series coefficient {c} outside F_{}",
                field.q()
            )));
        }
        let n = coeffs.len();
        // f_N = F / X^N with F = Σ c_i X^{N−i}
        let num = Poly::from_coeffs(coeffs.iter().rev().copied().collect());
        let den = Poly::monomial(1, n);
        let all = rational_quotients(&num, &den, &field)?;
        let mut certified = Vec::new();
        let mut nk = 0usize;
        for a in all {
            nk += a.deg().expect("nonzero quotient");
            if 2 * nk > n {
                break;
            }
            certified.push(a);
        }
        Self::new(field, QuotientSource::Series { coeffs, certified })
    }

    /// `"rule:const-X"`, `"rule:const:[c0,c1,…]"`, `"list:[[…],…]"`, `"periodic:{…}"`,
    /// `"series:[c1,c2,…]"`, or a JSON object (see [`LaurentCf::from_json`]).
    pub fn parse(field: FiniteField, spec: &str) -> Result<Self> {
        let bad = |e: serde_json::Error| Error::invalid(format!("A spec {spec:?}: {e}"));
        if spec == "rule:const-X" {
            return Self::new(field, QuotientSource::Const(Poly::x()));
        }
        if let Some(rest) = spec.strip_prefix("rule:const:") {
            let a = Poly::from_json(&serde_json::from_str(rest).map_err(bad)?, &field)?;
            return Self::new(field, QuotientSource::Const(a));
        }
        if let Some(rest) = spec.strip_prefix("list:") {
            return Self::from_json(
                field,
                &json!({ "quotients": serde_json::from_str::<Value>(rest).map_err(bad)? }),
            );
        }
        if let Some(rest) = spec.strip_prefix("periodic:") {
            return Self::from_json(
                field,
                &json!({ "periodic": serde_json::from_str::<Value>(rest).map_err(bad)? }),
            );
        }
        if let Some(rest) = spec.strip_prefix("series:") {
            return Self::from_json(
                field,
                &json!({ "series": serde_json::from_str::<Value>(rest).map_err(bad)? }),
            );
        }
        if spec.trim_start().starts_with('{') {
            return Self::from_json(field, &serde_json::from_str(spec).map_err(bad)?);
        }
        Err(Error::invalid(format!("unknown A spec {spec:?}")))
    }

    /// `{"quotients": [...]}`, `{"periodic": {"pre": [...], "period": [...]}}`,
    /// `{"series": [...]}` or `{"rational": {"num": [...], "den": [...]}}`.
    pub fn from_json(field: FiniteField, v: &Value) -> Result<Self> {
        let list = |x: &Value| -> Result<Vec<Poly>> {
            x.as_array()
                .ok_or_else(|| Error::invalid("expected a list of polynomials"))?
                .iter()
                .map(|p| Poly::from_json(p, &field))
                .collect()
        };
        if let Some(x) = v.get("quotients") {
            let qs = list(x)?;
            return Self::new(field, QuotientSource::Explicit(qs));
        }
        if let Some(x) = v.get("periodic") {
            let pre = x.get("pre").map(list).transpose()?.unwrap_or_default();
            let period = list(
                x.get("period")
                    .ok_or_else(|| Error::invalid("periodic needs \"period\""))?,
            )?;
            return Self::new(field, QuotientSource::Periodic { pre, period });
        }
        if let Some(x) = v.get("series") {
            let c: Vec<Elem> = x
                .as_array()
                .ok_or_else(|| Error::invalid("series must list c_1, c_2, …"))?
                .iter()
                .map(|e| {
                    e.as_u64()
                        .ok_or_else(|| Error::invalid("series coefficients are field elements"))
                })
                .collect::<Result<_>>()?;
            return Self::from_series(field, c);
        }
        if let Some(x) = v.get("rational") {
            let num = Poly::from_json(
                x.get("num")
                    .ok_or_else(|| Error::invalid("rational needs \"num\""))?,
                &field,
            )?;
            let den = Poly::from_json(
                x.get("den")
                    .ok_or_else(|| Error::invalid("rational needs \"den\""))?,
                &field,
            )?;
            return Self::from_rational(field, &num, &den);
        }
        Err(Error::invalid(
            "Laurent CF JSON needs quotients, periodic, series or rational",
        ))
    }

    pub fn field(&self) -> &FiniteField {
        &self.field
    }

    pub fn source(&self) -> &QuotientSource {
        &self.source
    }

    /// Index of the last computed convergent.
    pub fn k(&self) -> usize {
        self.q.len() - 1
    }

    /// Whether the expansion is known to be infinite with bounded `deg A_k`.
    pub fn declared_degree_bound(&self) -> Option<usize> {
        match &self.source {
            QuotientSource::Const(a) => a.deg(),
            QuotientSource::Periodic { pre, period } => {
                pre.iter().chain(period).filter_map(Poly::deg).max()
            }
            _ => None,
        }
    }

    /// `A_k` for `k ≥ 1`.
    pub fn quotient(&self, k: usize) -> Result<Poly> {
        assert!(k >= 1, "A_0 = 0 for elements of 𝕃");
        let from_list = |v: &[Poly]| v.get(k - 1).cloned();
        match &self.source {
            QuotientSource::Const(a) => Ok(a.clone()),
            QuotientSource::Periodic { pre, period } => Ok(if k <= pre.len() {
                pre[k - 1].clone()
            } else {
                period[(k - 1 - pre.len()) % period.len()].clone()
            }),
            QuotientSource::Explicit(v) | QuotientSource::Series { certified: v, .. } => {
                from_list(v).ok_or(Error::DepthExceeded {
                    needed: k,
                    available: v.len(),
                })
            }
            QuotientSource::Rational(v) => from_list(v).ok_or(Error::NotIrrational { step: k }),
        }
    }

    /// One more convergent: `Q_{k+1} = A_{k+1}Q_k + Q_{k−1}`.
    pub fn step(mut self) -> Result<Self> {
        let k = self.k();
        let a = self.quotient(k + 1)?;
        let f = &self.field;
        let (p1, q1) = if k == 0 {
            (Poly::one(), a.clone())
        } else {
            (
                a.mul(&self.p[k], f).add(&self.p[k - 1], f),
                a.mul(&self.q[k], f).add(&self.q[k - 1], f),
            )
        };
        let n = self.degrees[k] + a.deg().expect("checked degree");
        self.a.push(a);
        self.p.push(p1);
        self.q.push(q1);
        self.degrees.push(n);
        Ok(self)
    }

    pub fn advance_to(mut self, k: usize) -> Result<Self> {
        while self.k() < k {
            self = self.step()?;
        }
        Ok(self)
    }

    pub fn a(&self, k: usize) -> &Poly {
        &self.a[k]
    }

    pub fn p(&self, k: usize) -> &Poly {
        &self.p[k]
    }

    pub fn q(&self, k: usize) -> &Poly {
        &self.q[k]
    }

    /// `n_0, …, n_k`.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// `P_k Q_{k−1} − P_{k−1} Q_k` for `k ≥ 1`.
    pub fn determinant(&self, k: usize) -> Poly {
        let f = &self.field;
        let (pm, qm) = if k == 0 {
            (Poly::one(), Poly::zero())
        } else {
            (self.p[k - 1].clone(), self.q[k - 1].clone())
        };
        self.p[k].mul(&qm, f).sub(&pm.mul(&self.q[k], f), f)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "field": self.field.describe(),
            "rows": (0..=self.k()).map(|k| json!({
                "k": k,
                "A": self.a[k].to_json(),
                "P": self.p[k].to_json(),
                "Q": self.q[k].to_json(),
                "n": self.degrees[k],
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n_k,deg_A,A,Q\n");
        let join = |p: &Poly| {
            p.coeffs()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        for k in 0..=self.k() {
            let da = self.a[k].deg().map(|d| d.to_string()).unwrap_or_default();
            out += &format!(
                "{k},{},{da},{},{}\n",
                self.degrees[k],
                join(&self.a[k]),
                join(&self.q[k])
            );
        }
        out
    }
}

/// The target exponents `l_n`, non-decreasing and non-negative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DegreeSeq {
    /// `l_n = s·n + c`.
    Affine { s: u64, c: u64 },
    /// `l_0, l_1, …`; past the end either the last value holds or lookups fail.
    Table { values: Vec<u64>, hold_last: bool },
}

impl DegreeSeq {
    pub fn affine(s: u64, c: u64) -> Self {
        DegreeSeq::Affine { s, c }
    }

    pub fn table(values: Vec<u64>, hold_last: bool) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty l_n table"));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Validation {
                property: "l_n non-decreasing".into(),
                n: BigInt::from(i + 1),
            });
        }
        Ok(DegreeSeq::Table { values, hold_last })
    }

    /// `"affine:c=1"`, `"affine:s=2,c=0"`, `"table:[0,1,3]"` or `"table-hold:[…]"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("l spec {spec:?}"));
        if let Some(rest) = spec.strip_prefix("affine:") {
            let (mut s, mut c) = (1u64, 0u64);
            for part in rest.split(',').filter(|p| !p.is_empty()) {
                let (k, v) = part.split_once('=').ok_or_else(bad)?;
                let v: u64 = v.trim().parse().map_err(|_| bad())?;
                match k.trim() {
                    "s" | "slope" => s = v,
                    "c" => c = v,
                    _ => return Err(bad()),
                }
            }
            return Ok(Self::affine(s, c));
        }
        for (prefix, hold) in [("table-hold:", true), ("table:", false)] {
            if let Some(rest) = spec.strip_prefix(prefix) {
                let v: Vec<u64> = serde_json::from_str(rest).map_err(|_| bad())?;
                return Self::table(v, hold);
            }
        }
        Err(bad())
    }

    pub fn describe(&self) -> String {
        match self {
            DegreeSeq::Affine { s, c } => format!("affine:s={s},c={c}"),
            DegreeSeq::Table { values, hold_last } => format!(
                "table{}:{} values",
                if *hold_last { "-hold" } else { "" },
                values.len()
            ),
        }
    }

    pub fn at(&self, n: usize) -> Result<u64> {
        match self {
            DegreeSeq::Affine { s, c } => Ok(s * n as u64 + c),
            DegreeSeq::Table { values, hold_last } => match values.get(n) {
                Some(&v) => Ok(v),
                None if *hold_last => Ok(*values.last().expect("nonempty")),
                None => Err(Error::OutOfRange {
                    index: BigInt::from(n),
                }),
            },
        }
    }

    /// Smallest `n` in `[lo, hi]` with `l_n ≥ target`, or `hi + 1`.
    pub fn first_at_least(&self, lo: usize, hi: usize, target: u64) -> Result<usize> {
        let (mut a, mut b) = (lo, hi + 1);
        while a < b {
            let mid = a + (b - a) / 2;
            if self.at(mid)? >= target {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        Ok(a)
    }
}

/// `Σ_{n=a}^{b} q^n`, exact; zero when `a > b`.
fn geometric(q: u64, a: i64, b: i64) -> Rat {
    if a > b {
        return Rat::zero();
    }
    (q_pow(q, b + 1) - q_pow(q, a)) / Rat::from_integer(BigInt::from(q - 1))
}

/// `Σ_{n=a}^{b} q^{n − l_n}` on a range where `l_n ≥ n_{k+1}`.
fn upper_sum(q: u64, l: &DegreeSeq, a: usize, b: usize) -> Result<Rat> {
    if a > b {
        return Ok(Rat::zero());
    }
    match l {
        DegreeSeq::Affine { s, c } => {
            let c = *c as i64;
            if *s == 1 {
                return Ok(Rat::from_integer(BigInt::from(b - a + 1)) * q_pow(q, -c));
            }
            // q^{−c} Σ r^n with r = q^{1−s}; r^n = q^{(1−s)n}, so sum over exponents stepping by s−1
            let e = *s as i64 - 1;
            let r = q_pow(q, -e);
            let first = q_pow(q, -e * a as i64);
            let count = (b - a + 1) as i32;
            let ratio_pow = q_pow(q, -e * count as i64);
            Ok(q_pow(q, -c) * first * (Rat::one() - ratio_pow) / (Rat::one() - r))
        }
        DegreeSeq::Table { values, .. } => {
            let mut total = Rat::zero();
            for n in a..=b.min(values.len().saturating_sub(1)) {
                total += q_pow(q, n as i64 - values[n] as i64);
            }
            if b >= values.len() {
                let start = a.max(values.len());
                total += q_pow(q, -(l.at(start)? as i64)) * geometric(q, start as i64, b as i64);
            }
            Ok(total)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentBlock {
    pub k: usize,
    pub n_k: usize,
    pub n_k1: usize,
    /// First `n` in the block with `l_n ≥ n_{k+1}`.
    pub crossover: usize,
    pub value: Rat,
}

/// `Σ_{n=n_k}^{n_{k+1}−1} q^{n − max(n_{k+1}, l_n)}` in closed form.
pub fn block_value(
    q: u64,
    l: &DegreeSeq,
    k: usize,
    n_k: usize,
    n_k1: usize,
) -> Result<LaurentBlock> {
    let b = n_k1 - 1;
    let m = l.first_at_least(n_k, b, n_k1 as u64)?;
    let head = q_pow(q, -(n_k1 as i64)) * geometric(q, n_k as i64, m as i64 - 1);
    let tail = upper_sum(q, l, m, b)?;
    Ok(LaurentBlock {
        k,
        n_k,
        n_k1,
        crossover: m,
        value: head + tail,
    })
}

/// The same block summed term by term.
pub fn block_value_termwise(q: u64, l: &DegreeSeq, n_k: usize, n_k1: usize) -> Result<Rat> {
    let mut total = Rat::zero();
    for n in n_k..n_k1 {
        let e = l.at(n)?.max(n_k1 as u64) as i64;
        total += q_pow(q, n as i64 - e);
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentReport {
    pub k_max: usize,
    pub blocks: Vec<LaurentBlock>,
    pub partial_sums: Vec<Rat>,
    pub certificate: crate::criterion::Certificate,
    pub reason: String,
}

impl LaurentReport {
    pub fn to_json(&self) -> Value {
        json!({
            "K_max": self.k_max,
            "blocks": self.blocks.iter().map(|b| json!({
                "k": b.k,
                "n_k": b.n_k,
                "n_k1": b.n_k1,
                "crossover": b.crossover,
                "value": b.value.to_string(),
            })).collect::<Vec<_>>(),
            "partial_sums": self.partial_sums.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            "certificate": self.certificate.as_str(),
            "reason": self.reason,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n_k,n_k1,crossover,value,partial\n");
        for (b, s) in self.blocks.iter().zip(&self.partial_sums) {
            out += &format!(
                "{},{},{},{},{},{}\n",
                b.k, b.n_k, b.n_k1, b.crossover, b.value, s
            );
        }
        out
    }
}

/// Blocks `k = 0..=K_max` of the Laurent criterion, with exact partial sums.
pub fn laurent_criterion(cf: &LaurentCf, l: &DegreeSeq, k_max: usize) -> Result<LaurentReport> {
    use crate::criterion::Certificate;
    let cf = cf.clone().advance_to(k_max + 1)?;
    let q = cf.field().q();
    let n = cf.degrees();
    let blocks: Vec<LaurentBlock> = (0..=k_max)
        .into_par_iter()
        .map(|k| block_value(q, l, k, n[k], n[k + 1]))
        .collect::<Result<_>>()?;
    let mut partial_sums = Vec::with_capacity(blocks.len());
    let mut acc = Rat::zero();
    for b in &blocks {
        acc += &b.value;
        partial_sums.push(acc.clone());
    }
    let (certificate, reason) = match (l, cf.declared_degree_bound()) {
        (DegreeSeq::Affine { s, c }, _) if *s >= 2 => {
            let total = q_pow(q, -(*c as i64)) / (Rat::one() - q_pow(q, 1 - *s as i64));
            (
                Certificate::ConvergesCertified,
                format!("every term is at most q^(n−l_n) and Σ q^(n−l_n) = {total}"),
            )
        }
        (DegreeSeq::Affine { s: 1, c }, Some(d)) => {
            let floor = q_pow(q, -(d.max(*c as usize) as i64));
            (
                Certificate::DivergesCertified,
                format!("deg A_k ≤ {d} and l_n = n + {c}: every block is at least {floor}"),
            )
        }
        (
            DegreeSeq::Table {
                hold_last: true,
                values,
            },
            Some(_),
        ) => {
            let lmax = values.last().copied().unwrap_or(0);
            (
                Certificate::DivergesCertified,
                format!(
                    "l_n is eventually {lmax}: every block with n_(k+1) > {lmax} is at least 1/q"
                ),
            )
        }
        (DegreeSeq::Affine { s: 0, c }, Some(_)) => (
            Certificate::DivergesCertified,
            format!("l_n = {c} is constant: every block with n_(k+1) > {c} is at least 1/q"),
        ),
        _ => (Certificate::Inconclusive, "partial sums only".to_string()),
    };
    Ok(LaurentReport {
        k_max,
        blocks,
        partial_sums,
        certificate,
        reason,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormRow {
    pub k: usize,
    /// `−n_{k+1}`.
    pub expected: i64,
    /// `deg(Q_k f − P_k)` from a series expansion of `f`.
    pub computed: Option<i64>,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormReport {
    pub rows: Vec<NormRow>,
    pub ultrametric_pairs: usize,
    pub ultrametric_ok: bool,
    pub all_ok: bool,
}

impl NormReport {
    pub fn to_json(&self) -> Value {
        json!({
            "rows": self.rows.iter().map(|r| json!({"k": r.k, "expected": r.expected, "computed": r.computed, "ok": r.ok})).collect::<Vec<_>>(),
            "ultrametric_pairs": self.ultrametric_pairs,
            "ultrametric_ok": self.ultrametric_ok,
            "all_ok": self.all_ok,
        })
    }
}

/// `|a + b| ≤ max(|a|, |b|)` with equality when `|a| ≠ |b|`, on random pairs.
fn ultrametric_pairs(f: &FiniteField, count: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..count).all(|_| {
        let (da, db) = (rng.gen_range(0..12), rng.gen_range(0..12));
        let a = Poly::random(&mut rng, da, f);
        let b = Poly::random(&mut rng, db, f);
        let s = a.add(&b, f);
        let max = a.deg().max(b.deg());
        s.deg() <= max && (a.deg() == b.deg() || s.deg() == max)
    }) && Poly::zero().deg().is_none()
}

/// `|Q_k f − P_k| = q^{−n_{k+1}}` for `k ≤ depth`, with `f` expanded to enough coefficients.
pub fn laurent_norm_checks(cf: &LaurentCf, depth: usize) -> Result<NormReport> {
    let big = cf.clone().advance_to(depth + 2)?;
    let f = big.field();
    let n = big.degrees();
    let kk = depth + 1;
    // f = F/X^N + O(X^{−N−1}) with N = n_K + n_{K+1} − 1
    let big_n = n[kk] + n[kk + 1] - 1;
    let (series, _) = big.p(kk).shift(big_n).divrem(big.q(kk), f)?;
    let rows = (0..=depth)
        .map(|k| {
            let r = big.q(k).mul(&series, f).sub(&big.p(k).shift(big_n), f);
            let computed = r.deg().map(|d| d as i64 - big_n as i64);
            // anything at or below n_k − N − 1 is swamped by the truncation
            let valid = computed.filter(|&d| d > n[k] as i64 - big_n as i64 - 1);
            let expected = -(n[k + 1] as i64);
            NormRow {
                k,
                expected,
                computed: valid,
                ok: valid == Some(expected),
            }
        })
        .collect::<Vec<_>>();
    let pairs = 256;
    let ultrametric_ok = ultrametric_pairs(f, pairs);
    let all_ok = ultrametric_ok && rows.iter().all(|r| r.ok);
    Ok(NormReport {
        rows,
        ultrametric_pairs: pairs,
        ultrametric_ok,
        all_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criterion::Certificate;

    fn f2() -> FiniteField {
        FiniteField::prime(2).unwrap()
    }

    fn f4() -> FiniteField {
        FiniteField::parse("p=2,m=2,mod=[1,1,1]").unwrap()
    }

    fn poly(c: &[u64]) -> Poly {
        Poly::from_coeffs(c.to_vec())
    }

    #[test]
    fn field_arithmetic() {
        assert_eq!(f2().add(1, 1), 0);
        let f5 = FiniteField::prime(5).unwrap();
        assert_eq!(f5.inv(2).unwrap(), 3);
        // Y = 2 in base-2 encoding; Y² = Y + 1 = 3
        let f = f4();
        assert_eq!(f.mul(2, 2), 3);
        for a in 1..4 {
            assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
        assert!(FiniteField::prime(6).is_err());
        assert!(FiniteField::parse("p=2,m=2,mod=[1,0,1]").is_err());
        assert!(FiniteField::parse("p=2,m=2").is_err());
        let f9 = FiniteField::parse("p=3,m=2,mod=[1,0,1]").unwrap();
        assert_eq!(f9.q(), 9);
        for a in 1..9 {
            assert_eq!(f9.pow(a, 8), 1);
        }
    }

    /// Irreducible iff no monic divisor of degree `1..=m/2`.
    fn irreducible_by_trial(f: &[u64], p: u64) -> bool {
        let m = f.len() - 1;
        for d in 1..=m / 2 {
            let total = p.pow(d as u32);
            for idx in 0..total {
                let mut g: Vec<u64> = (0..d).map(|i| (idx / p.pow(i as u32)) % p).collect();
                g.push(1);
                if fp::rem(f, &g, p).is_empty() {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn ben_or_matches_trial_division() {
        for (p, m) in [
            (2u64, 2usize),
            (2, 3),
            (2, 4),
            (2, 6),
            (3, 2),
            (3, 3),
            (5, 2),
        ] {
            for idx in 0..p.pow(m as u32) {
                let mut f: Vec<u64> = (0..m).map(|i| (idx / p.pow(i as u32)) % p).collect();
                f.push(1);
                assert_eq!(
                    is_irreducible(&f, p),
                    irreducible_by_trial(&f, p),
                    "{f:?} over F_{p}"
                );
            }
        }
    }

    #[test]
    fn constant_x_convergents() {
        let cf = LaurentCf::new(f2(), QuotientSource::Const(Poly::x()))
            .unwrap()
            .advance_to(5)
            .unwrap();
        assert_eq!(cf.q(0), &poly(&[1]));
        assert_eq!(cf.q(1), &poly(&[0, 1]));
        assert_eq!(cf.q(2), &poly(&[1, 0, 1]));
        assert_eq!(cf.q(3), &poly(&[0, 0, 0, 1]));
        assert_eq!(cf.degrees(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn determinants_are_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for field in [f2(), FiniteField::prime(3).unwrap(), f4()] {
            let qs: Vec<Poly> = (0..30)
                .map(|_| {
                    let d = rng.gen_range(1..4);
                    Poly::random(&mut rng, d, &field)
                })
                .collect();
            let cf = LaurentCf::new(field.clone(), QuotientSource::Explicit(qs))
                .unwrap()
                .advance_to(30)
                .unwrap();
            for k in 1..=30 {
                let d = cf.determinant(k);
                assert_eq!(d.deg(), Some(0));
                // ±1
                assert!(d == Poly::one() || d == Poly::one().neg(&field));
                assert!(cf.degrees()[k] > cf.degrees()[k - 1]);
            }
            assert!(matches!(cf.step(), Err(Error::DepthExceeded { .. })));
        }
    }

    #[test]
    fn rational_inputs_end() {
        let cf = LaurentCf::from_rational(f2(), &poly(&[1]), &poly(&[1, 1, 1])).unwrap();
        let cf = cf.advance_to(1).unwrap();
        assert_eq!(cf.a(1), &poly(&[1, 1, 1]));
        assert!(matches!(cf.step(), Err(Error::NotIrrational { step: 2 })));
    }

    #[test]
    fn truncated_series_certification() {
        // f = Σ X^{−2^i}, 64 coefficients
        let mut c = vec![0u64; 64];
        for i in 0..7 {
            c[(1 << i) - 1] = 1;
        }
        let cf = LaurentCf::from_series(f2(), c.clone()).unwrap();
        let QuotientSource::Series { certified, .. } = cf.source().clone() else {
            unreachable!()
        };
        assert!(!certified.is_empty());
        let total: usize = certified.iter().map(|a| a.deg().unwrap()).sum();
        assert!(2 * total <= 64);
        // every member of the truncation class shares the certified prefix
        for tail in [
            vec![1u64],
            vec![0, 0, 1],
            vec![1, 1, 0, 1, 1],
            vec![0; 9].into_iter().chain([1]).collect(),
        ] {
            let mut d = c.clone();
            d.extend(tail);
            let num = Poly::from_coeffs(d.iter().rev().copied().collect());
            let other = rational_quotients(&num, &Poly::monomial(1, d.len()), &f2()).unwrap();
            assert_eq!(&other[..certified.len()], &certified[..]);
        }
        let n = certified.len();
        let cf = cf.advance_to(n).unwrap();
        assert!(
            matches!(cf.step(), Err(Error::DepthExceeded { needed, available }) if needed == n + 1 && available == n)
        );
    }

    #[test]
    fn criterion_examples() {
        let cf = LaurentCf::parse(f2(), "rule:const-X").unwrap();
        let r = laurent_criterion(&cf, &DegreeSeq::parse("affine:c=1").unwrap(), 100).unwrap();
        for (k, s) in r.partial_sums.iter().enumerate() {
            assert_eq!(s, &Rat::new(BigInt::from(k + 1), BigInt::from(2)));
        }
        assert_eq!(r.certificate, Certificate::DivergesCertified);
        let r0 = laurent_criterion(&cf, &DegreeSeq::affine(1, 0), 20).unwrap();
        assert!(r0.blocks.iter().all(|b| b.value == q_pow(2, -1)));
        let r2 = laurent_criterion(&cf, &DegreeSeq::affine(2, 0), 30).unwrap();
        for b in &r2.blocks[1..] {
            assert_eq!(b.value, q_pow(2, -(b.k as i64)));
        }
        assert_eq!(r2.certificate, Certificate::ConvergesCertified);
        assert!(r2.partial_sums.last().unwrap() < &Rat::from_integer(BigInt::from(2)));
    }

    #[test]
    fn closed_forms_match_termwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let seqs = [
            DegreeSeq::affine(1, 0),
            DegreeSeq::affine(1, 3),
            DegreeSeq::affine(2, 1),
            DegreeSeq::affine(3, 0),
            DegreeSeq::affine(0, 5),
            DegreeSeq::table(vec![0, 2, 2, 5, 9, 9, 14, 30, 31, 31, 50], true).unwrap(),
        ];
        for field in [f2(), FiniteField::prime(3).unwrap(), f4()] {
            let qs: Vec<Poly> = (0..25)
                .map(|_| {
                    let d = rng.gen_range(1..7);
                    Poly::random(&mut rng, d, &field)
                })
                .collect();
            let cf = LaurentCf::new(field.clone(), QuotientSource::Explicit(qs))
                .unwrap()
                .advance_to(25)
                .unwrap();
            let n = cf.degrees();
            for l in &seqs {
                for k in 0..25 {
                    let b = block_value(field.q(), l, k, n[k], n[k + 1]).unwrap();
                    assert_eq!(
                        b.value,
                        block_value_termwise(field.q(), l, n[k], n[k + 1]).unwrap(),
                        "{l:?} k={k}"
                    );
                    // past the crossover l_n stays at or above n_{k+1}
                    for m in b.crossover..n[k + 1] {
                        assert!(l.at(m).unwrap() >= n[k + 1] as u64);
                    }
                }
            }
        }
    }

    #[test]
    fn norm_identities() {
        let cf = LaurentCf::new(f2(), QuotientSource::Const(Poly::x())).unwrap();
        let r = laurent_norm_checks(&cf, 20).unwrap();
        assert!(r.all_ok);
        assert_eq!(r.rows[1].expected, -2);
        // independent expansion: f = [0; X, X, …] solves f² + Xf + 1 = 0 over F_2
        let big = 40usize;
        let cf40 = cf.clone().advance_to(21).unwrap();
        let (s, _) = cf40.p(21).shift(big).divrem(cf40.q(21), &f2()).unwrap();
        let f = f2();
        let lhs = s
            .mul(&s, &f)
            .add(&s.mul(&Poly::x(), &f).shift(big), &f)
            .add(&Poly::one().shift(2 * big), &f);
        // low-order truncation only: degree well below 2·big
        assert!(lhs.deg().unwrap_or(0) < 2 * big - 20);
        let periodic = LaurentCf::new(
            f4(),
            QuotientSource::Periodic {
                pre: vec![poly(&[1, 2])],
                period: vec![poly(&[3, 0, 1]), poly(&[0, 2])],
            },
        )
        .unwrap();
        assert!(laurent_norm_checks(&periodic, 15).unwrap().all_ok);
    }

    #[test]
    fn specs_parse() {
        assert_eq!(
            DegreeSeq::parse("affine:s=2,c=0").unwrap(),
            DegreeSeq::affine(2, 0)
        );
        assert!(DegreeSeq::parse("table:[3,1]").is_err());
        let cf = LaurentCf::parse(f4(), r#"periodic:{"period": [[1,1],[0,3]]}"#).unwrap();
        assert_eq!(cf.declared_degree_bound(), Some(1));
        assert!(LaurentCf::parse(f2(), "list:[[1]]").is_err());
        assert!(LaurentCf::parse(f2(), "series:[1,0,1,1]").is_ok());
    }
}
