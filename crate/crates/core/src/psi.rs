//! Approximation sequences ψ(n) with enclosures of block sums over huge ranges.
//!
//! The analytic families all reduce to `c · n^{-α} · (ln n)^{-β}`, a completely
//! monotone function on `n ≥ 2`, so Euler–Maclaurin truncations bracket the true
//! sum from both sides. Piecewise and table sequences are summed exactly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::interval::{
    ceil_scaled, floor_scaled, from_scaled, ln, ln_interval, pow_rat, rat_int, Interval, Rat,
};

/// Ranges up to this length are summed term by term.
pub const DIRECT_LIMIT: u64 = 10_000;
/// Terms summed directly before the Euler–Maclaurin tail of a long range.
const EM_PREFIX: u64 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailRule {
    HoldLast,
    Error,
}

/// Non-decreasing positive φ, used through ψ(n) = 1/(n φ(n)).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhiSeq {
    Const(Rat),
    /// `n^β`, β > 0.
    Pow(Rat),
    /// `(ln n)^β`, β > 0, with `φ(1) := φ(2)` since `ln 1 = 0`.
    LogPow(Rat),
    /// `φ(1), φ(2), …`, held at the last value beyond the table.
    Table(Vec<Rat>),
}

impl PhiSeq {
    pub fn validate(&self) -> Result<()> {
        match self {
            PhiSeq::Const(c) if !c.is_positive() => {
                Err(Error::invalid("constant φ must be positive"))
            }
            PhiSeq::Pow(b) | PhiSeq::LogPow(b) if !b.is_positive() => {
                Err(Error::invalid("φ exponent must be positive"))
            }
            PhiSeq::Table(t) => {
                if t.is_empty() {
                    return Err(Error::invalid("empty φ table"));
                }
                if let Some(i) = t.iter().position(|x| !x.is_positive()) {
                    return Err(Error::Validation {
                        property: "φ(n) > 0".into(),
                        n: BigInt::from(i + 1),
                    });
                }
                if let Some(i) = t.windows(2).position(|w| w[1] < w[0]) {
                    return Err(Error::Validation {
                        property: "φ non-decreasing".into(),
                        n: BigInt::from(i + 2),
                    });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn tends_to_infinity(&self) -> bool {
        matches!(self, PhiSeq::Pow(_) | PhiSeq::LogPow(_))
    }

    /// `sup φ` when φ is bounded.
    pub fn bound(&self) -> Option<Rat> {
        match self {
            PhiSeq::Const(c) => Some(c.clone()),
            PhiSeq::Table(t) => t.last().cloned(),
            _ => None,
        }
    }

    /// Enclosure of φ(x) for real `x ≥ 1`.
    pub fn eval_at(&self, x: &Interval, bits: u32) -> Interval {
        match self {
            PhiSeq::Const(c) => Interval::point(c.clone()),
            PhiSeq::Pow(b) => pow_rat(x, b, bits),
            PhiSeq::LogPow(b) => {
                let two = Rat::from_integer(2.into());
                let x = Interval::new(x.lo().clone().max(two.clone()), x.hi().clone().max(two));
                pow_rat(&ln_interval(&x, bits + 8), b, bits)
            }
            PhiSeq::Table(t) => {
                let at = |r: &Rat| {
                    let i = r
                        .floor()
                        .to_integer()
                        .to_usize()
                        .unwrap_or(usize::MAX)
                        .max(1);
                    t[(i - 1).min(t.len() - 1)].clone()
                };
                Interval::new(at(x.lo()), at(x.hi()))
            }
        }
    }

    pub fn eval(&self, n: &BigInt, bits: u32) -> Interval {
        self.eval_at(&Interval::from_int(n), bits)
    }

    pub fn describe(&self) -> String {
        match self {
            PhiSeq::Const(c) => format!("const:{c}"),
            PhiSeq::Pow(b) => format!("pow:{b}"),
            PhiSeq::LogPow(b) => format!("logpow:{b}"),
            PhiSeq::Table(t) => format!("table[{}]", t.len()),
        }
    }

    /// `const:<rat>`, `pow:<rat>` or `logpow:<rat>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("φ spec {spec:?} needs name:value")))?;
        let v = parse_rat(arg)?;
        let phi = match name {
            "const" => PhiSeq::Const(v),
            "pow" => PhiSeq::Pow(v),
            "logpow" => PhiSeq::LogPow(v),
            _ => return Err(Error::invalid(format!("unknown φ family {name:?}"))),
        };
        phi.validate()?;
        Ok(phi)
    }
}

/// `c · n^{-α} · (ln n)^{-β}`; for β > 0 the logarithm is clamped at `ln 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Analytic {
    c: Rat,
    alpha: Rat,
    beta: Rat,
}

impl Analytic {
    fn log_factor(&self, x: &Interval, e: &Rat, bits: u32) -> Interval {
        if e.is_zero() {
            return Interval::point(Rat::one());
        }
        let two = rat_int(2);
        let x = Interval::new(x.lo().clone().max(two.clone()), x.hi().clone().max(two));
        pow_rat(&ln_interval(&x, bits + 8), e, bits)
    }

    fn value(&self, x: &Interval, bits: u32) -> Interval {
        let p = pow_rat(x, &-&self.alpha, bits + 8);
        p.mul(&self.log_factor(x, &-&self.beta, bits))
            .scale(&self.c)
    }

    /// Coefficients of the `m`-th derivative as `x^{-α-m} Σ_j d_j (ln x)^{-β-j}`.
    fn derivative_coeffs(&self, m: usize) -> Vec<Rat> {
        let mut d = vec![self.c.clone()];
        for order in 0..m {
            let mut next = vec![Rat::zero(); d.len() + 1];
            let xe = &self.alpha + rat_int(order as u64);
            for (j, dj) in d.iter().enumerate() {
                next[j] -= &xe * dj;
                next[j + 1] -= (&self.beta + rat_int(j as u64)) * dj;
            }
            d = next;
        }
        d
    }

    fn derivative(&self, x: &Interval, m: usize, bits: u32) -> Interval {
        let xe = -(&self.alpha + rat_int(m as u64));
        let base = pow_rat(x, &xe, bits + 8);
        let mut sum = Interval::zero();
        for (j, dj) in self.derivative_coeffs(m).iter().enumerate() {
            if dj.is_zero() {
                continue;
            }
            let le = -(&self.beta + rat_int(j as u64));
            sum = sum.add(&self.log_factor(x, &le, bits).scale(dj));
        }
        base.mul(&sum)
    }

    /// `∫_m^b f(x) dx` for the shapes that occur (β = 0, or α = 1).
    fn integral(&self, m: &BigInt, b: &BigInt, bits: u32) -> Interval {
        let (xm, xb) = (Interval::from_int(m), Interval::from_int(b));
        let one = Rat::one();
        let r = if self.beta.is_zero() {
            if self.alpha == one {
                ln(&Rat::new(b.clone(), m.clone()), bits + 8)
            } else {
                let e = &one - &self.alpha;
                pow_rat(&xm, &e, bits + 8)
                    .sub(&pow_rat(&xb, &e, bits + 8))
                    .scale(&(one.clone() / (&self.alpha - &one)))
            }
        } else {
            assert!(self.alpha == one, "log-power integrals need α = 1");
            let lm = ln(&rat_int(m.clone()), bits + 16);
            let lb = ln(&rat_int(b.clone()), bits + 16);
            if self.beta == one {
                ln_interval(&lb, bits + 8).sub(&ln_interval(&lm, bits + 8))
            } else {
                let e = &one - &self.beta;
                pow_rat(&lm, &e, bits + 8)
                    .sub(&pow_rat(&lb, &e, bits + 8))
                    .scale(&(one.clone() / (&self.beta - &one)))
            }
        };
        r.scale(&self.c)
    }

    /// Euler–Maclaurin bracket of `Σ_{n=m}^{b} f(n)` for `2 ≤ m < b`.
    fn em_sum(&self, m: &BigInt, b: &BigInt, bits: u32) -> Interval {
        // B_{2j}/(2j)! for j = 1..5
        let coef = [
            Rat::new(1.into(), 12.into()),
            Rat::new((-1).into(), 720.into()),
            Rat::new(1.into(), 30240.into()),
            Rat::new((-1).into(), 1209600.into()),
            Rat::new(1.into(), 47900160.into()),
        ];
        let (xm, xb) = (Interval::from_int(m), Interval::from_int(b));
        let mut t = self.integral(m, b, bits).add(
            &self
                .value(&xm, bits)
                .add(&self.value(&xb, bits))
                .scale(&Rat::new(1.into(), 2.into())),
        );
        let mut prev = t.clone();
        for (j, cj) in coef.iter().enumerate() {
            let order = 2 * j + 1;
            let diff = self
                .derivative(&xb, order, bits)
                .sub(&self.derivative(&xm, order, bits));
            prev = t.clone();
            t = t.add(&diff.scale(cj));
        }
        // the remainder after each truncation has the sign of the next term and is smaller
        prev.hull(&t)
    }

    /// Upper enclosure of `∫_m^∞ f(x) dx` for a convergent shape, `m ≥ 2`.
    fn tail_integral(&self, m: &BigInt, bits: u32) -> Interval {
        let one = Rat::one();
        let xm = Interval::from_int(m);
        let r = if self.alpha > one {
            // (ln x)^{-β} ≤ (ln m)^{-β} on [m, ∞)
            let e = &one - &self.alpha;
            pow_rat(&xm, &e, bits + 8)
                .mul(&self.log_factor(&xm, &-&self.beta, bits))
                .scale(&(one.clone() / (&self.alpha - &one)))
        } else {
            let lm = ln(&rat_int(m.clone()), bits + 16);
            let e = &one - &self.beta;
            pow_rat(&lm, &e, bits + 8).scale(&(one.clone() / (&self.beta - &one)))
        };
        r.scale(&self.c)
    }

    fn diverges(&self) -> bool {
        self.alpha < Rat::one() || (self.alpha == Rat::one() && self.beta <= Rat::one())
    }

    fn is_rational_valued(&self) -> bool {
        self.beta.is_zero() && self.alpha.is_integer()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Family {
    Power {
        c: Rat,
        alpha: Rat,
    },
    Khintchine(PhiSeq),
    /// Value `values[i]` on `[starts[i], starts[i+1])`, the last piece ending at `end` (exclusive) or never.
    Piecewise {
        starts: Vec<BigInt>,
        values: Vec<Rat>,
        end: Option<BigInt>,
    },
    Table {
        values: Vec<Rat>,
        tail: TailRule,
    },
}

/// A positive, non-increasing approximation sequence ψ(n), n ≥ 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxSeq {
    family: Family,
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::invalid(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(n, d))
        }
        None => {
            if let Some((int, frac)) = s.split_once('.') {
                let digits = format!("{int}{frac}");
                let n: BigInt = digits.parse().map_err(|_| bad())?;
                Ok(Rat::new(n, BigInt::from(10).pow(frac.len() as u32)))
            } else {
                Ok(rat_int(s.parse::<BigInt>().map_err(|_| bad())?))
            }
        }
    }
}

pub(crate) fn rat_json(v: &Value) -> Result<Rat> {
    match v {
        Value::String(s) => parse_rat(s),
        Value::Number(n) => n.as_i64().map(rat_int).ok_or_else(|| {
            Error::invalid(format!(
                "{n}: write non-integer rationals as \"p/q\" strings"
            ))
        }),
        _ => Err(Error::invalid(format!("expected a rational, found {v}"))),
    }
}

fn u64_of(n: &BigInt) -> Option<u64> {
    n.to_u64()
}

impl ApproxSeq {
    pub fn power(c: Rat, alpha: Rat) -> Result<Self> {
        if !c.is_positive() || alpha.is_negative() {
            return Err(Error::invalid("power-law ψ needs c > 0 and α ≥ 0"));
        }
        Ok(Self {
            family: Family::Power { c, alpha },
        })
    }

    pub fn khintchine(phi: PhiSeq) -> Result<Self> {
        phi.validate()?;
        Ok(Self {
            family: Family::Khintchine(phi),
        })
    }

    pub fn constant(w: Rat) -> Result<Self> {
        Self::power(w, Rat::zero())
    }

    /// `starts[0]` must be 1; values must be positive and non-increasing.
    pub fn piecewise(starts: Vec<BigInt>, values: Vec<Rat>, end: Option<BigInt>) -> Result<Self> {
        if starts.is_empty() || starts.len() != values.len() {
            return Err(Error::invalid("piecewise ψ needs one value per breakpoint"));
        }
        if !starts[0].is_one() {
            return Err(Error::invalid("piecewise ψ must start at n = 1"));
        }
        if let Some(i) = starts.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Validation {
                property: "breakpoints increasing".into(),
                n: starts[i + 1].clone(),
            });
        }
        if let Some(e) = &end {
            if e <= starts.last().expect("non-empty") {
                return Err(Error::invalid(
                    "piecewise end must follow the last breakpoint",
                ));
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_positive()) {
            return Err(Error::Validation {
                property: "ψ(n) > 0".into(),
                n: starts[i].clone(),
            });
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::Validation {
                property: "ψ non-increasing".into(),
                n: starts[i + 1].clone(),
            });
        }
        Ok(Self {
            family: Family::Piecewise {
                starts,
                values,
                end,
            },
        })
    }

    pub fn table(values: Vec<Rat>, tail: TailRule) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty ψ table"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_positive()) {
            return Err(Error::Validation {
                property: "ψ(n) > 0".into(),
                n: BigInt::from(i + 1),
            });
        }
        if let Some(i) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::Validation {
                property: "ψ non-increasing".into(),
                n: BigInt::from(i + 2),
            });
        }
        Ok(Self {
            family: Family::Table { values, tail },
        })
    }

    /// Piecewise loader: `{"u": [...], "psi_values": [...]}` (also `breaks`/`values`).
    /// A first breakpoint above 1 extends the first value down to n = 1; one more
    /// breakpoint than values marks the exclusive end of the last piece.
    pub fn piecewise_from_json(v: &Value) -> Result<Self> {
        let u = v
            .get("u")
            .or_else(|| v.get("breaks"))
            .ok_or_else(|| Error::invalid("piecewise needs \"u\""))?;
        let vals = v
            .get("psi_values")
            .or_else(|| v.get("values"))
            .ok_or_else(|| Error::invalid("piecewise needs \"psi_values\""))?;
        let mut starts = crate::cf_real::json_int_list(u)?;
        let values: Vec<Rat> = vals
            .as_array()
            .ok_or_else(|| Error::invalid("values must be an array"))?
            .iter()
            .map(rat_json)
            .collect::<Result<_>>()?;
        let end = match starts.len().cmp(&values.len()) {
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater if starts.len() == values.len() + 1 => starts.pop(),
            _ => {
                return Err(Error::invalid(
                    "piecewise needs as many breakpoints as values, or one more",
                ))
            }
        };
        if starts.first().is_some_and(|s| s > &BigInt::one()) {
            starts[0] = BigInt::one();
        }
        Self::piecewise(starts, values, end)
    }

    /// Table loader: `{"values": [...], "tail": "hold-last" | "error"}`.
    pub fn table_from_json(v: &Value) -> Result<Self> {
        let vals = v
            .get("values")
            .ok_or_else(|| Error::invalid("table needs \"values\""))?;
        let values = vals
            .as_array()
            .ok_or_else(|| Error::invalid("values must be an array"))?
            .iter()
            .map(rat_json)
            .collect::<Result<_>>()?;
        let tail = match v.get("tail").and_then(Value::as_str) {
            None | Some("error") => TailRule::Error,
            Some("hold-last") => TailRule::HoldLast,
            Some(t) => return Err(Error::invalid(format!("unknown tail rule {t:?}"))),
        };
        Self::table(values, tail)
    }

    /// The ψ mini-language. `load` resolves `@file` references to JSON.
    pub fn parse(spec: &str, load: &dyn Fn(&str) -> Result<Value>) -> Result<Self> {
        let (name, rest) = spec
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("ψ spec {spec:?} needs family:params")))?;
        match name {
            "power" => {
                let (mut c, mut alpha) = (None, None);
                for kv in rest.split(',') {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::invalid(format!("bad parameter {kv:?}")))?;
                    match k.trim() {
                        "c" => c = Some(parse_rat(v)?),
                        "alpha" => alpha = Some(parse_rat(v)?),
                        _ => {
                            return Err(Error::invalid(format!(
                                "unknown power-law parameter {k:?}"
                            )))
                        }
                    }
                }
                Self::power(
                    c.ok_or_else(|| Error::invalid("power needs c"))?,
                    alpha.ok_or_else(|| Error::invalid("power needs alpha"))?,
                )
            }
            "khintchine" => {
                let phi = rest
                    .strip_prefix("phi=")
                    .ok_or_else(|| Error::invalid("khintchine needs phi=..."))?;
                Self::khintchine(PhiSeq::parse(phi)?)
            }
            "piecewise" | "table" => {
                let path = rest
                    .strip_prefix('@')
                    .ok_or_else(|| Error::invalid(format!("{name} needs @file")))?;
                let v = load(path)?;
                if name == "piecewise" {
                    Self::piecewise_from_json(&v)
                } else {
                    Self::table_from_json(&v)
                }
            }
            _ => Err(Error::invalid(format!("unknown ψ family {name:?}"))),
        }
    }

    pub fn describe(&self) -> String {
        match &self.family {
            Family::Power { c, alpha } => format!("power:c={c},alpha={alpha}"),
            Family::Khintchine(phi) => format!("khintchine:phi={}", phi.describe()),
            Family::Piecewise { starts, .. } => format!("piecewise[{} pieces]", starts.len()),
            Family::Table { values, .. } => format!("table[{}]", values.len()),
        }
    }

    pub fn phi(&self) -> Option<&PhiSeq> {
        match &self.family {
            Family::Khintchine(phi) => Some(phi),
            _ => None,
        }
    }

    pub fn pieces(&self) -> Option<(&[BigInt], &[Rat], Option<&BigInt>)> {
        match &self.family {
            Family::Piecewise {
                starts,
                values,
                end,
            } => Some((starts, values, end.as_ref())),
            _ => None,
        }
    }

    fn analytic(&self) -> Option<Analytic> {
        match &self.family {
            Family::Power { c, alpha } => Some(Analytic {
                c: c.clone(),
                alpha: alpha.clone(),
                beta: Rat::zero(),
            }),
            Family::Khintchine(PhiSeq::Const(k)) => Some(Analytic {
                c: k.recip(),
                alpha: Rat::one(),
                beta: Rat::zero(),
            }),
            Family::Khintchine(PhiSeq::Pow(b)) => Some(Analytic {
                c: Rat::one(),
                alpha: Rat::one() + b,
                beta: Rat::zero(),
            }),
            Family::Khintchine(PhiSeq::LogPow(b)) => Some(Analytic {
                c: Rat::one(),
                alpha: Rat::one(),
                beta: b.clone(),
            }),
            _ => None,
        }
    }

    /// True when every ψ(n) is rational and `eval` returns a point.
    pub fn is_rational_valued(&self) -> bool {
        match self.analytic() {
            Some(a) => a.is_rational_valued(),
            None => true,
        }
    }

    /// Largest index where ψ is defined, if bounded.
    pub fn domain_end(&self) -> Option<BigInt> {
        match &self.family {
            Family::Piecewise { end: Some(e), .. } => Some(e - 1),
            Family::Table {
                values,
                tail: TailRule::Error,
            } => Some(BigInt::from(values.len())),
            _ => None,
        }
    }

    /// Whether `Σ ψ(n) = ∞` follows from the family alone.
    pub fn sum_diverges(&self) -> Option<bool> {
        if let Some(a) = self.analytic() {
            return Some(a.diverges());
        }
        match &self.family {
            Family::Khintchine(PhiSeq::Table(_)) => Some(true),
            Family::Piecewise { end: None, .. }
            | Family::Table {
                tail: TailRule::HoldLast,
                ..
            } => Some(true),
            _ => None,
        }
    }

    /// Upper bound for `Σ_{n ≥ from} ψ(n)` when the family's series converges.
    pub fn tail_bound(&self, from: &BigInt, bits: u32) -> Option<Rat> {
        let a = self.analytic()?;
        if a.diverges() {
            return None;
        }
        let m = from.max(&BigInt::from(2)).clone();
        let head = self.block_sum(from, &(&m - 1), bits).ok()?;
        let first = a.value(&Interval::from_int(&m), bits);
        Some(
            head.add(&first)
                .add(&a.tail_integral(&m, bits))
                .hi()
                .clone(),
        )
    }

    fn range_error(&self, n: &BigInt) -> Result<()> {
        match self.domain_end() {
            Some(e) if n > &e => Err(Error::OutOfRange { index: n.clone() }),
            _ => Ok(()),
        }
    }

    fn piece_index(starts: &[BigInt], n: &BigInt) -> usize {
        starts.partition_point(|s| s <= n) - 1
    }

    /// Enclosure of ψ(n), a point for rational-valued families.
    pub fn eval(&self, n: &BigInt, bits: u32) -> Result<Interval> {
        if !n.is_positive() {
            return Err(Error::invalid(format!("ψ is indexed from 1, got {n}")));
        }
        self.range_error(n)?;
        if let Some(a) = self.analytic() {
            if a.is_rational_valued() {
                let p = num_traits::pow(
                    rat_int(n.clone()),
                    a.alpha.to_integer().to_usize().expect("small exponent"),
                );
                return Ok(Interval::point(&a.c / p));
            }
            return Ok(a.value(&Interval::from_int(n), bits));
        }
        Ok(match &self.family {
            Family::Khintchine(phi) => phi.eval(n, bits).scale(&rat_int(n.clone())).recip(),
            Family::Piecewise { starts, values, .. } => {
                Interval::point(values[Self::piece_index(starts, n)].clone())
            }
            Family::Table { values, .. } => {
                let i = u64_of(n)
                    .map(|i| i as usize)
                    .unwrap_or(usize::MAX)
                    .min(values.len());
                Interval::point(values[i - 1].clone())
            }
            _ => unreachable!("analytic families handled above"),
        })
    }

    /// Direct summation with outward fixed-point rounding (exact for short rational ranges).
    fn direct_sum(&self, a: &BigInt, b: &BigInt, bits: u32) -> Result<Interval> {
        let len = u64_of(&(b - a + 1u32)).expect("direct range is short");
        if self.is_rational_valued() && len <= 64 {
            let mut s = Rat::zero();
            let mut n = a.clone();
            while &n <= b {
                s += self.eval(&n, bits)?.lo();
                n += 1u32;
            }
            return Ok(Interval::point(s));
        }
        let p = bits as u64 + 16 + 64 - len.leading_zeros() as u64;
        let (mut lo, mut hi) = (BigInt::zero(), BigInt::zero());
        let mut n = a.clone();
        while &n <= b {
            let t = self.eval(&n, bits + 16)?;
            lo += floor_scaled(t.lo(), p);
            hi += ceil_scaled(t.hi(), p);
            n += 1u32;
        }
        Ok(Interval::new(from_scaled(lo, p), from_scaled(hi, p)))
    }

    /// Enclosure of `Σ_{n=a}^{b} ψ(n)`; the empty sum when `b < a`.
    pub fn block_sum(&self, a: &BigInt, b: &BigInt, bits: u32) -> Result<Interval> {
        if b < a {
            return Ok(Interval::zero());
        }
        if !a.is_positive() {
            return Err(Error::invalid(format!(
                "block sums start at n ≥ 1, got {a}"
            )));
        }
        self.range_error(b)?;
        let len = b - a + 1u32;
        match &self.family {
            Family::Power { c, alpha } if alpha.is_zero() => {
                return Ok(Interval::point(c * rat_int(len)))
            }
            Family::Piecewise { starts, values, .. } => {
                let mut s = Rat::zero();
                for i in Self::piece_index(starts, a)..=Self::piece_index(starts, b) {
                    let lo = a.max(&starts[i]).clone();
                    let hi = match starts.get(i + 1) {
                        Some(next) => b.min(&(next - 1)).clone(),
                        None => b.clone(),
                    };
                    s += &values[i] * rat_int(hi - lo + 1);
                }
                return Ok(Interval::point(s));
            }
            Family::Table { values, .. } => {
                let n_tab = BigInt::from(values.len());
                if b <= &n_tab {
                    return self.direct_sum(a, b, bits);
                }
                let head = if a <= &n_tab {
                    self.direct_sum(a, &n_tab, bits)?
                } else {
                    Interval::zero()
                };
                let from = a.max(&(&n_tab + 1)).clone();
                let last = values.last().expect("non-empty");
                return Ok(head.add_rat(&(last * rat_int(b - from + 1))));
            }
            Family::Khintchine(PhiSeq::Table(t)) => {
                let n_tab = BigInt::from(t.len());
                if b <= &n_tab || len <= BigInt::from(DIRECT_LIMIT) {
                    return self.direct_sum(a, b, bits);
                }
                let head = if a <= &n_tab {
                    self.direct_sum(a, &n_tab, bits)?
                } else {
                    Interval::zero()
                };
                let from = a.max(&(&n_tab + 1)).clone();
                let tail =
                    ApproxSeq::khintchine(PhiSeq::Const(t.last().expect("non-empty").clone()))?;
                return Ok(head.add(&tail.block_sum(&from, b, bits)?));
            }
            _ => {}
        }
        if len <= BigInt::from(DIRECT_LIMIT) {
            return self.direct_sum(a, b, bits);
        }
        let a_em = (a + EM_PREFIX).max(BigInt::from(2));
        let head = self.direct_sum(a, &(&a_em - 1), bits)?;
        let an = self.analytic().expect("remaining families are analytic");
        Ok(head.add(&an.em_sum(&a_em, b, bits)))
    }

    /// Smallest `n` in `[lo, hi]` with ψ(n) < threshold, or `hi + 1` if none.
    pub fn crossover(
        &self,
        lo: &BigInt,
        hi: &BigInt,
        threshold: &Interval,
        bits: u32,
    ) -> Result<BigInt> {
        let below = |n: &BigInt| -> Result<bool> {
            self.eval(n, bits)?
                .lt(threshold)
                .ok_or_else(|| Error::Undecided {
                    context: format!("ψ({n}) against threshold {threshold}"),
                })
        };
        if lo > hi {
            return Ok(hi + 1);
        }
        if below(lo)? {
            return Ok(lo.clone());
        }
        if !below(hi)? {
            return Ok(hi + 1);
        }
        // invariant: ψ(l) ≥ t, ψ(r) < t
        let (mut l, mut r) = (lo.clone(), hi.clone());
        while &r - &l > BigInt::one() {
            let m: BigInt = (&l + &r).div_floor(&BigInt::from(2));
            if below(&m)? {
                r = m;
            } else {
                l = m;
            }
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::rat;
    use proptest::prelude::*;

    const BITS: u32 = 160;

    fn b(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn no_files(_: &str) -> Result<Value> {
        Err(Error::invalid("no files in tests"))
    }

    #[test]
    fn eval_examples() {
        let p = ApproxSeq::power(rat(1, 4), rat(1, 1)).unwrap();
        assert_eq!(p.eval(&b(8), BITS).unwrap(), Interval::point(rat(1, 32)));
        let k = ApproxSeq::khintchine(PhiSeq::LogPow(rat(2, 1))).unwrap();
        let v = k.eval(&b(2), BITS).unwrap();
        assert!(v.width() < rat(1, 1_000_000_000_000));
        // float oracle at double precision
        let expected = 1.0 / (2.0 * std::f64::consts::LN_2.powi(2));
        assert!((v.mid().to_f64().unwrap() - expected).abs() < 1e-12);
        assert!((expected - 1.0407).abs() < 1e-4);
    }

    #[test]
    fn block_sum_examples() {
        let p = ApproxSeq::power(rat(1, 4), rat(1, 1)).unwrap();
        assert_eq!(
            p.block_sum(&b(2), &b(4), BITS).unwrap(),
            Interval::point(rat(13, 48))
        );
        let c = ApproxSeq::constant(rat(3, 7)).unwrap();
        assert_eq!(
            c.block_sum(&b(5), &b(104), BITS).unwrap(),
            Interval::point(rat(300, 7))
        );
        let sq = ApproxSeq::power(rat(1, 1), rat(2, 1)).unwrap();
        let s = sq.block_sum(&b(10), &b(1_000_000), BITS).unwrap();
        // direct f64 summation, smallest terms first
        let direct: f64 = (10..=1_000_000u64)
            .rev()
            .map(|n| 1.0 / (n as f64 * n as f64))
            .sum();
        assert!(s.width() < rat(1, 100));
        assert!((s.mid().to_f64().unwrap() - direct).abs() < 1e-12);
        assert!(s.width() < rat(1, 1 << 60));
    }

    #[test]
    fn harmonic_tail_matches_exact_sum() {
        let h = ApproxSeq::power(rat(1, 1), rat(1, 1)).unwrap();
        // exact Σ 1/n by balanced splitting
        fn split(a: u64, b: u64) -> (BigInt, BigInt) {
            if a == b {
                return (BigInt::one(), BigInt::from(a));
            }
            let m = (a + b) / 2;
            let ((p1, q1), (p2, q2)) = (split(a, m), split(m + 1, b));
            (&p1 * &q2 + &p2 * &q1, q1 * q2)
        }
        let got = h.block_sum(&b(3), &b(20_000), 200).unwrap();
        let (p, q) = split(3, 20_000);
        assert!(got.contains(&Rat::new(p, q)));
        assert!(got.width() < Rat::new(1.into(), BigInt::from(10).pow(25)));
    }

    #[test]
    fn fractional_power_tail_brackets_direct_sum() {
        let s = ApproxSeq::khintchine(PhiSeq::Pow(rat(1, 2))).unwrap();
        let got = s.block_sum(&b(7), &b(30_000), BITS).unwrap();
        let direct = s.direct_sum(&b(7), &b(30_000), BITS).unwrap();
        assert!(got.overlaps(&direct));
        assert!(got.width() < rat(1, 1 << 40));
    }

    #[test]
    fn log_power_tail_brackets_direct_sum() {
        for beta in [rat(1, 1), rat(2, 1), rat(1, 2)] {
            let s = ApproxSeq::khintchine(PhiSeq::LogPow(beta)).unwrap();
            let got = s.block_sum(&b(2), &b(25_000), 96).unwrap();
            let direct = s.direct_sum(&b(2), &b(25_000), 96).unwrap();
            assert!(got.overlaps(&direct), "{got} vs {direct}");
            assert!(got.width() < rat(1, 1 << 40));
        }
    }

    #[test]
    fn huge_block_is_fast_and_tight() {
        let s = ApproxSeq::khintchine(PhiSeq::LogPow(rat(2, 1))).unwrap();
        let a = BigInt::from(10).pow(30);
        let got = s.block_sum(&a, &(&a * 1000), BITS).unwrap();
        // ∫ dx/(x ln²x) = 1/ln a − 1/ln b, terms are ~1e-33 so the sum equals the integral closely
        let la = 30.0 * std::f64::consts::LN_10;
        let lb = 33.0 * std::f64::consts::LN_10;
        assert!((got.mid().to_f64().unwrap() - (1.0 / la - 1.0 / lb)).abs() < 1e-10);
    }

    #[test]
    fn crossover_examples() {
        let p = ApproxSeq::power(rat(1, 4), rat(1, 1)).unwrap();
        // 3 − 2√2 from the √2 − 1 convergent table
        let t = crate::cf_real::convergent_table(
            &crate::cf_real::PartialQuotientStream::sqrt2_minus_1(),
            2,
            128,
        )
        .unwrap();
        assert_eq!(p.crossover(&b(2), &b(4), &t[1].dist, BITS).unwrap(), b(2));
        let one = ApproxSeq::constant(rat(1, 1)).unwrap();
        assert_eq!(
            one.crossover(&b(1), &b(100), &Interval::point(rat(1, 1)), BITS)
                .unwrap(),
            b(101)
        );
        assert_eq!(
            p.crossover(&b(5), &b(50), &Interval::point(rat(1, 2)), BITS)
                .unwrap(),
            b(5)
        );
        let undecided = p.crossover(&b(1), &b(10), &Interval::new(rat(1, 33), rat(1, 31)), BITS);
        assert!(matches!(undecided, Err(Error::Undecided { .. })));
    }

    #[test]
    fn tables_and_pieces() {
        let t = ApproxSeq::table(vec![rat(1, 2), rat(1, 3), rat(1, 3)], TailRule::Error).unwrap();
        assert_eq!(t.eval(&b(4), BITS), Err(Error::OutOfRange { index: b(4) }));
        let h = ApproxSeq::table(vec![rat(1, 2), rat(1, 3)], TailRule::HoldLast).unwrap();
        assert_eq!(
            h.block_sum(&b(1), &b(10), BITS).unwrap(),
            Interval::point(rat(1, 2) + rat(9, 3))
        );
        assert!(ApproxSeq::table(vec![rat(1, 3), rat(1, 2)], TailRule::Error).is_err());
        let p = ApproxSeq::piecewise(
            vec![b(1), b(5), b(9)],
            vec![rat(1, 2), rat(1, 4), rat(1, 8)],
            Some(b(20)),
        )
        .unwrap();
        assert_eq!(
            p.block_sum(&b(4), &b(10), BITS).unwrap(),
            Interval::point(rat(1, 2) + rat(4, 4) + rat(2, 8))
        );
        assert!(p.eval(&b(20), BITS).is_err());
        let j = serde_json::json!({"u": [3, 10, 40], "psi_values": ["1/4", "1/16"]});
        let q = ApproxSeq::piecewise_from_json(&j).unwrap();
        assert_eq!(q.eval(&b(1), BITS).unwrap(), Interval::point(rat(1, 4)));
        assert_eq!(q.eval(&b(39), BITS).unwrap(), Interval::point(rat(1, 16)));
        assert_eq!(q.domain_end(), Some(b(39)));
    }

    #[test]
    fn spec_language() {
        let p = ApproxSeq::parse("power:c=1/4,alpha=1", &no_files).unwrap();
        assert_eq!(p, ApproxSeq::power(rat(1, 4), rat(1, 1)).unwrap());
        let k = ApproxSeq::parse("khintchine:phi=logpow:2", &no_files).unwrap();
        assert_eq!(k.phi(), Some(&PhiSeq::LogPow(rat(2, 1))));
        assert!(ApproxSeq::parse("khintchine:phi=pow:0", &no_files).is_err());
        assert!(ApproxSeq::parse("table:@x.json", &no_files).is_err());
        assert_eq!(parse_rat("0.25").unwrap(), rat(1, 4));
    }

    #[test]
    fn divergence_flags() {
        let d = |s: &str| ApproxSeq::parse(s, &no_files).unwrap().sum_diverges();
        assert_eq!(d("power:c=1/5,alpha=1"), Some(true));
        assert_eq!(d("power:c=1,alpha=3/2"), Some(false));
        assert_eq!(d("khintchine:phi=const:2"), Some(true));
        assert_eq!(d("khintchine:phi=logpow:1"), Some(true));
        assert_eq!(d("khintchine:phi=logpow:2"), Some(false));
    }

    fn families() -> Vec<ApproxSeq> {
        vec![
            ApproxSeq::power(rat(1, 4), rat(1, 1)).unwrap(),
            ApproxSeq::power(rat(3, 2), rat(3, 2)).unwrap(),
            ApproxSeq::khintchine(PhiSeq::LogPow(rat(2, 1))).unwrap(),
            ApproxSeq::khintchine(PhiSeq::Pow(rat(1, 2))).unwrap(),
            ApproxSeq::khintchine(PhiSeq::Const(rat(2, 1))).unwrap(),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn monotone_on_random_indices(n in 1u64..u64::MAX / 2) {
            for s in families() {
                let x = s.eval(&BigInt::from(n), 96).unwrap();
                let y = s.eval(&BigInt::from(n + 1), 96).unwrap();
                prop_assert!(y.hi() <= x.hi() && y.lo() <= x.lo());
                if let Some(_) = s.phi() {
                    let nx = x.scale(&rat_int(n));
                    let ny = y.scale(&rat_int(n + 1));
                    prop_assert!(ny.lo() <= nx.hi());
                }
            }
        }

    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn block_sums_are_additive(a in 1u64..5000, l1 in 0u64..3_000, l2 in 1_000u64..3_000) {
            for s in families() {
                let (a, m, c) = (BigInt::from(a), BigInt::from(a + l1), BigInt::from(a + l1 + l2 + 1));
                let whole = s.block_sum(&a, &c, 96).unwrap();
                let parts = s.block_sum(&a, &m, 96).unwrap().add(&s.block_sum(&(&m + 1), &c, 96).unwrap());
                prop_assert!(whole.overlaps(&parts));
                if s.is_rational_valued() && l1 + l2 < 60 {
                    prop_assert_eq!(whole, parts);
                }
            }
        }

        #[test]
        fn crossover_matches_linear_scan(lo in 1u64..2000, len in 0u64..600, t_num in 1u64..1000) {
            let t = Interval::point(Rat::new(BigInt::from(t_num), BigInt::from(100_000)));
            for s in families() {
                let (l, h) = (BigInt::from(lo), BigInt::from(lo + len));
                let got = match s.crossover(&l, &h, &t, 96) {
                    Ok(n) => n,
                    Err(Error::Undecided { .. }) => continue,
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                };
                let scan = (lo..=lo + len)
                    .find(|&n| s.eval(&BigInt::from(n), 96).unwrap().hi() < t.lo())
                    .map(BigInt::from)
                    .unwrap_or_else(|| BigInt::from(lo + len + 1));
                prop_assert_eq!(got, scan);
            }
        }
    }
}
