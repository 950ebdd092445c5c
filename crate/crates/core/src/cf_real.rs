//! Continued-fraction convergents of a fixed irrational θ.
//!
//! θ is always given by its partial quotients `a_0; a_1, a_2, …`, never by a float.
//! Indexing follows `q_{-1} = 0`, `q_0 = 1`, so for θ ∈ (0, 1) the first two
//! denominators are `1` and `a_1`.
//!
//! The distance `|q_k θ − p_k|` is enclosed through the complete quotient
//! `α_{k+1} = [a_{k+1}; a_{k+2}, …]` via `|q_k θ − p_k| = 1 / (α_{k+1} q_k + q_{k−1})`,
//! tightening `α_{k+1}` with further quotients until the requested relative width.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::interval::{rat_int, Interval, Rat};

/// Built-in rules `k ↦ a_k` for `k ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuotientRule {
    /// `a_k = c`.
    Const(BigInt),
    /// `a_k = 2^k`.
    Doubling,
    /// `a_k = c + d·k`.
    Arith { c: BigInt, d: BigInt },
}

impl QuotientRule {
    fn at(&self, k: usize) -> BigInt {
        match self {
            QuotientRule::Const(c) => c.clone(),
            QuotientRule::Doubling => BigInt::one() << k,
            QuotientRule::Arith { c, d } => c + d * BigInt::from(k),
        }
    }

    fn name(&self) -> String {
        match self {
            QuotientRule::Const(c) => format!("const:{c}"),
            QuotientRule::Doubling => "doubling".to_string(),
            QuotientRule::Arith { c, d } => format!("arith:{c},{d}"),
        }
    }

    /// Parse `const:c`, `doubling` or `arith:c,d`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
        let int = |s: &str| -> Result<BigInt> {
            s.trim()
                .parse::<BigInt>()
                .map_err(|_| Error::invalid(format!("bad integer {s:?} in rule {spec:?}")))
        };
        match name {
            "const" => Ok(QuotientRule::Const(int(params)?)),
            "doubling" => Ok(QuotientRule::Doubling),
            "arith" => {
                let (c, d) = params
                    .split_once(',')
                    .ok_or_else(|| Error::invalid(format!("rule {spec:?} needs arith:c,d")))?;
                Ok(QuotientRule::Arith {
                    c: int(c)?,
                    d: int(d)?,
                })
            }
            _ => Err(Error::invalid(format!("unknown quotient rule {spec:?}"))),
        }
    }
}

/// Record of a rational input and the quotients shared by its whole uncertainty interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certification {
    pub num: BigInt,
    pub den: BigInt,
    pub uncertainty: Rat,
    pub quotients: Vec<BigInt>,
}

impl Certification {
    pub fn depth(&self) -> usize {
        self.quotients.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StreamSource {
    /// `a_1, a_2, …` given explicitly; nothing is known beyond the list.
    Explicit(Vec<BigInt>),
    /// Pre-period followed by an infinitely repeated period (quadratic irrationals).
    Periodic {
        pre: Vec<BigInt>,
        period: Vec<BigInt>,
    },
    Rule(QuotientRule),
    Certified(Certification),
}

/// The canonical representation of θ: its partial quotients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialQuotientStream {
    a0: BigInt,
    source: StreamSource,
}

fn check_positive(list: &[BigInt]) -> Result<()> {
    match list.iter().position(|a| !a.is_positive()) {
        Some(i) => Err(Error::invalid(format!(
            "partial quotient a_{} = {} is not positive",
            i + 1,
            list[i]
        ))),
        None => Ok(()),
    }
}

impl PartialQuotientStream {
    pub fn explicit(a0: BigInt, list: Vec<BigInt>) -> Result<Self> {
        check_positive(&list)?;
        Ok(Self {
            a0,
            source: StreamSource::Explicit(list),
        })
    }

    pub fn periodic(a0: BigInt, pre: Vec<BigInt>, period: Vec<BigInt>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::invalid("periodic stream needs a non-empty period"));
        }
        check_positive(&pre)?;
        check_positive(&period)?;
        Ok(Self {
            a0,
            source: StreamSource::Periodic { pre, period },
        })
    }

    pub fn rule(a0: BigInt, rule: QuotientRule) -> Result<Self> {
        let ok = match &rule {
            QuotientRule::Const(c) => c.is_positive(),
            QuotientRule::Doubling => true,
            QuotientRule::Arith { c, d } => !d.is_negative() && (c + d).is_positive(),
        };
        if !ok {
            return Err(Error::invalid(format!(
                "rule {} produces non-positive quotients",
                rule.name()
            )));
        }
        Ok(Self {
            a0,
            source: StreamSource::Rule(rule),
        })
    }

    /// θ with all `a_k = c` for `k ≥ 1` and `a_0 = 0`.
    pub fn constant(c: u64) -> Self {
        Self::rule(BigInt::zero(), QuotientRule::Const(BigInt::from(c))).expect("positive constant")
    }

    /// (√5 − 1)/2.
    pub fn golden() -> Self {
        Self::constant(1)
    }

    /// √2 − 1.
    pub fn sqrt2_minus_1() -> Self {
        Self::constant(2)
    }

    pub fn doubling() -> Self {
        Self::rule(BigInt::zero(), QuotientRule::Doubling).expect("valid rule")
    }

    pub fn a0(&self) -> &BigInt {
        &self.a0
    }

    pub fn source(&self) -> &StreamSource {
        &self.source
    }

    /// Number of available quotients `a_1..`, or `None` when unbounded.
    pub fn depth(&self) -> Option<usize> {
        match &self.source {
            StreamSource::Explicit(list) => Some(list.len()),
            StreamSource::Certified(c) => Some(c.depth()),
            StreamSource::Periodic { .. } | StreamSource::Rule(_) => None,
        }
    }

    /// Partial quotient `a_k`; `k = 0` returns `a_0`.
    pub fn quotient(&self, k: usize) -> Result<BigInt> {
        if k == 0 {
            return Ok(self.a0.clone());
        }
        let missing = |available| Error::DepthExceeded {
            needed: k,
            available,
        };
        match &self.source {
            StreamSource::Explicit(list) => {
                list.get(k - 1).cloned().ok_or_else(|| missing(list.len()))
            }
            StreamSource::Certified(c) => c
                .quotients
                .get(k - 1)
                .cloned()
                .ok_or_else(|| missing(c.depth())),
            StreamSource::Periodic { pre, period } => Ok(if k <= pre.len() {
                pre[k - 1].clone()
            } else {
                period[(k - 1 - pre.len()) % period.len()].clone()
            }),
            StreamSource::Rule(rule) => Ok(rule.at(k)),
        }
    }

    /// A bound `A ≥ a_k` for all `k ≥ 1` that follows from the source's definition.
    /// Finite lists never qualify: an observed bound says nothing about the tail.
    pub fn declared_bound(&self) -> Option<BigInt> {
        match &self.source {
            StreamSource::Periodic { pre, period } => pre.iter().chain(period).max().cloned(),
            StreamSource::Rule(QuotientRule::Const(c)) => Some(c.clone()),
            StreamSource::Rule(QuotientRule::Arith { c, d }) if d.is_zero() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match &self.source {
            StreamSource::Explicit(list) => format!("explicit list of {} quotients", list.len()),
            StreamSource::Periodic { pre, period } => {
                format!(
                    "periodic (pre-period {}, period {})",
                    pre.len(),
                    period.len()
                )
            }
            StreamSource::Rule(r) => format!("rule {}", r.name()),
            StreamSource::Certified(c) => {
                format!("certified from {}/{} to depth {}", c.num, c.den, c.depth())
            }
        }
    }

    /// Parse the JSON stream file format.
    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::invalid("stream spec must be a JSON object"))?;
        let a0 = match obj.get("a0") {
            Some(v) => json_int(v)?,
            None => BigInt::zero(),
        };
        if let Some(rule) = obj.get("rule") {
            let name = rule
                .as_str()
                .ok_or_else(|| Error::invalid("\"rule\" must be a string"))?;
            let rule = match (name, obj.get("params")) {
                (n, Some(params)) if !n.contains(':') => rule_from_params(n, params)?,
                _ => QuotientRule::parse(name)?,
            };
            return Self::rule(a0, rule);
        }
        if let Some(list) = obj.get("list") {
            return Self::explicit(a0, json_int_list(list)?);
        }
        if let Some(period) = obj.get("period") {
            let pre = match obj.get("pre") {
                Some(p) => json_int_list(p)?,
                None => Vec::new(),
            };
            return Self::periodic(a0, pre, json_int_list(period)?);
        }
        Err(Error::invalid(
            "stream spec needs one of \"rule\", \"list\" or \"period\"",
        ))
    }

    pub fn to_json(&self) -> Value {
        let ints = |v: &[BigInt]| v.iter().map(int_json).collect::<Vec<_>>();
        match &self.source {
            StreamSource::Explicit(list) => json!({"a0": int_json(&self.a0), "list": ints(list)}),
            StreamSource::Certified(c) => {
                json!({"a0": int_json(&self.a0), "list": ints(&c.quotients)})
            }
            StreamSource::Periodic { pre, period } => {
                json!({"a0": int_json(&self.a0), "pre": ints(pre), "period": ints(period)})
            }
            StreamSource::Rule(r) => json!({"a0": int_json(&self.a0), "rule": r.name()}),
        }
    }
}

fn rule_from_params(name: &str, params: &Value) -> Result<QuotientRule> {
    let get = |key: &str| -> Result<BigInt> {
        params
            .get(key)
            .map(json_int)
            .unwrap_or_else(|| Err(Error::invalid(format!("rule {name} needs param {key}"))))
    };
    match name {
        "const" => Ok(QuotientRule::Const(get("c")?)),
        "doubling" => Ok(QuotientRule::Doubling),
        "arith" => Ok(QuotientRule::Arith {
            c: get("c")?,
            d: get("d")?,
        }),
        _ => Err(Error::invalid(format!("unknown quotient rule {name:?}"))),
    }
}

/// Integers in JSON may be numbers or decimal strings (for values beyond 64 bits).
pub(crate) fn json_int(v: &Value) -> Result<BigInt> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .or_else(|| n.as_u64().map(BigInt::from))
            .ok_or_else(|| Error::invalid(format!("{n} is not an integer"))),
        Value::String(s) => s
            .parse()
            .map_err(|_| Error::invalid(format!("{s:?} is not an integer"))),
        _ => Err(Error::invalid(format!("expected an integer, found {v}"))),
    }
}

pub(crate) fn json_int_list(v: &Value) -> Result<Vec<BigInt>> {
    v.as_array()
        .ok_or_else(|| Error::invalid("expected a JSON array of integers"))?
        .iter()
        .map(json_int)
        .collect()
}

/// Small integers as JSON numbers, large ones as strings.
pub(crate) fn int_json(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

/// Canonical continued-fraction expansion of a rational (Euclid's algorithm).
pub fn rational_expansion(num: &BigInt, den: &BigInt) -> Vec<BigInt> {
    assert!(den.is_positive());
    let (mut n, mut d) = (num.clone(), den.clone());
    let mut out = Vec::new();
    while !d.is_zero() {
        let (a, r) = n.div_mod_floor(&d);
        out.push(a);
        n = d;
        d = r;
    }
    out
}

/// Stream of the partial quotients shared by every real within `uncertainty` of `num/den`.
pub fn certify_from_rational(
    num: &BigInt,
    den: &BigInt,
    uncertainty: &Rat,
) -> Result<PartialQuotientStream> {
    if !den.is_positive() {
        return Err(Error::invalid("denominator must be positive"));
    }
    let x = Rat::new(num.clone(), den.clone());
    if x.is_negative() || x >= Rat::one() {
        return Err(Error::invalid("certification expects 0 <= num/den < 1"));
    }
    if !uncertainty.is_positive() {
        return Err(Error::invalid("uncertainty must be positive"));
    }
    let lo = &x - uncertainty;
    let hi = &x + uncertainty;
    let e_lo = rational_expansion(lo.numer(), lo.denom());
    let e_hi = rational_expansion(hi.numer(), hi.denom());
    let mut quotients = Vec::new();
    // The last quotient of a terminating expansion is not shared by the reals on
    // one side of that rational, so only non-terminal positions may be certified.
    if e_lo[0] == e_hi[0] {
        for j in 1..e_lo.len().min(e_hi.len()) {
            if j + 1 >= e_lo.len() || j + 1 >= e_hi.len() || e_lo[j] != e_hi[j] {
                break;
            }
            quotients.push(e_lo[j].clone());
        }
    }
    let a0 = if e_lo[0] == e_hi[0] {
        e_lo[0].clone()
    } else {
        x.floor().to_integer()
    };
    Ok(PartialQuotientStream {
        a0,
        source: StreamSource::Certified(Certification {
            num: num.clone(),
            den: den.clone(),
            uncertainty: uncertainty.clone(),
            quotients,
        }),
    })
}

/// `(k, p_k, q_k, |q_kθ − p_k|, a_{k+1})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvergentState {
    pub k: i64,
    pub p: BigInt,
    pub q: BigInt,
    pub p_prev: BigInt,
    pub q_prev: BigInt,
    /// Enclosure of `|q_k θ − p_k|`.
    pub dist: Interval,
    /// `a_{k+1}`, when the stream supplies it.
    pub next_quotient: Option<BigInt>,
}

impl ConvergentState {
    /// The state `k = −1`: `(p, q) = (1, 0)` with `(p_{−2}, q_{−2}) = (0, 1)`.
    pub fn seed(stream: &PartialQuotientStream) -> Self {
        ConvergentState {
            k: -1,
            p: BigInt::one(),
            q: BigInt::zero(),
            p_prev: BigInt::zero(),
            q_prev: BigInt::one(),
            dist: Interval::point(Rat::one()),
            next_quotient: Some(stream.a0.clone()),
        }
    }

    /// `‖q_k θ‖`, the distance to the nearest integer. It differs from `dist` only
    /// for `k = 0` when `a_1 = 1`.
    pub fn norm(&self) -> Interval {
        let half = Rat::new(BigInt::one(), BigInt::from(2));
        if self.dist.hi() <= &half {
            return self.dist.clone();
        }
        let one = Interval::point(Rat::one());
        let other = one.sub(&self.dist);
        if self.dist.lo() >= &half {
            other
        } else {
            self.dist.min(&other)
        }
    }

    /// `q_{k+1} = a_{k+1} q_k + q_{k−1}`.
    pub fn q_next(&self) -> Option<BigInt> {
        self.next_quotient
            .as_ref()
            .map(|a| a * &self.q + &self.q_prev)
    }

    pub fn p_next(&self) -> Option<BigInt> {
        self.next_quotient
            .as_ref()
            .map(|a| a * &self.p + &self.p_prev)
    }

    /// `p_k q_{k−1} − p_{k−1} q_k`, which is `(−1)^{k+1}`.
    pub fn determinant(&self) -> BigInt {
        &self.p * &self.q_prev - &self.p_prev * &self.q
    }

    pub fn convergent(&self) -> Rat {
        Rat::new(self.p.clone(), self.q.clone())
    }
}

/// Evaluate a Möbius map `(a y + b)/(c y + d)` at `y`, or at `y = ∞` when `None`.
fn mobius(m: &[BigInt; 4], y: Option<&BigInt>) -> Rat {
    match y {
        Some(y) => Rat::new(&m[0] * y + &m[1], &m[2] * y + &m[3]),
        None => Rat::new(m[0].clone(), m[2].clone()),
    }
}

/// Enclosure of the complete quotient `α_j = [a_j; a_{j+1}, …]`, `j ≥ 1`, with
/// relative width at most `2^-rel_bits` when the stream is deep enough.
/// When `a_j` itself is unavailable the enclosure is `None` (`α_j ∈ [1, ∞]`).
pub fn complete_quotient(
    stream: &PartialQuotientStream,
    j: usize,
    rel_bits: u32,
) -> Option<Interval> {
    let first = stream.quotient(j).ok()?;
    let mut m = [first, BigInt::one(), BigInt::one(), BigInt::zero()];
    let scale = BigInt::one() << rel_bits;
    let mut i = j + 1;
    loop {
        // α_j = (m0 y + m1)/(m2 y + m3) with y = α_i ≥ 1
        let a = match stream.quotient(i) {
            Ok(a) => a,
            Err(_) => {
                return Some(Interval::spanning(
                    mobius(&m, Some(&BigInt::one())),
                    mobius(&m, None),
                ))
            }
        };
        let a1 = &a + 1;
        let (n1, d1) = (&m[0] * &a + &m[1], &m[2] * &a + &m[3]);
        let (n2, d2) = (&m[0] * &a1 + &m[1], &m[2] * &a1 + &m[3]);
        // det m = ±1, so the width is 1/(d1 d2) and width·2^r ≤ lo ⇔ 2^r ≤ min(n1 d2, n2 d1)
        let (c1, c2): (BigInt, BigInt) = (&n1 * &d2, &n2 * &d1);
        if scale <= c1.min(c2) {
            return Some(Interval::spanning(Rat::new(n1, d1), Rat::new(n2, d2)));
        }
        m = [
            &m[0] * &a + &m[1],
            m[0].clone(),
            &m[2] * &a + &m[3],
            m[2].clone(),
        ];
        i += 1;
    }
}

/// `|q_k θ − p_k|` from the complete quotient `α_{k+1}`.
fn distance(
    stream: &PartialQuotientStream,
    k: i64,
    q: &BigInt,
    q_prev: &BigInt,
    rel_bits: u32,
) -> Interval {
    if q.is_zero() {
        return Interval::point(Rat::one());
    }
    let qr = rat_int(q.clone());
    let qp = rat_int(q_prev.clone());
    let alpha = complete_quotient(stream, (k + 1) as usize, rel_bits);
    let d = match alpha {
        Some(alpha) => {
            let denom = alpha.scale(&qr).add_rat(&qp);
            denom.recip()
        }
        None => Interval::new(Rat::zero(), (qr + qp).recip()),
    };
    d.round_outward(rel_bits as u64 + 2 * q.bits() + 16)
}

/// The same state with `dist` recomputed to relative width `2^-rel_bits`.
pub fn refine(
    stream: &PartialQuotientStream,
    state: &ConvergentState,
    rel_bits: u32,
) -> ConvergentState {
    let mut s = state.clone();
    if s.k >= 0 {
        s.dist = distance(stream, s.k, &s.q, &s.q_prev, rel_bits);
    }
    s
}

/// Advance one step: state `k` to state `k + 1`.
pub fn next_convergent(
    stream: &PartialQuotientStream,
    state: &ConvergentState,
    rel_bits: u32,
) -> Result<ConvergentState> {
    let k = state.k + 1;
    let a = match &state.next_quotient {
        Some(a) => a.clone(),
        None => stream.quotient(k as usize)?,
    };
    let p = &a * &state.p + &state.p_prev;
    let q = &a * &state.q + &state.q_prev;
    let next_quotient = stream.quotient((k + 1) as usize).ok();
    let dist = distance(stream, k, &q, &state.q, rel_bits);
    Ok(ConvergentState {
        k,
        p,
        q,
        p_prev: state.p.clone(),
        q_prev: state.q.clone(),
        dist,
        next_quotient,
    })
}

/// States `k = 0..count`, with distances computed in parallel.
pub fn convergent_table(
    stream: &PartialQuotientStream,
    count: usize,
    rel_bits: u32,
) -> Result<Vec<ConvergentState>> {
    let mut raw = Vec::with_capacity(count);
    let (mut p_prev, mut q_prev) = (BigInt::zero(), BigInt::one());
    let (mut p, mut q) = (BigInt::one(), BigInt::zero());
    for k in 0..count {
        let a = stream.quotient(k)?;
        let np = &a * &p + &p_prev;
        let nq = &a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, np);
        q_prev = std::mem::replace(&mut q, nq);
        raw.push((
            k as i64,
            p.clone(),
            q.clone(),
            p_prev.clone(),
            q_prev.clone(),
        ));
    }
    Ok(raw
        .into_par_iter()
        .map(|(k, p, q, p_prev, q_prev)| {
            let dist = distance(stream, k, &q, &q_prev, rel_bits);
            let next_quotient = stream.quotient((k + 1) as usize).ok();
            ConvergentState {
                k,
                p,
                q,
                p_prev,
                q_prev,
                dist,
                next_quotient,
            }
        })
        .collect())
}

/// Rational bracket `lo < θ < hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealEnclosure {
    pub lo: Rat,
    pub hi: Rat,
    /// Index `k` of the left-most convergent used.
    pub depth: usize,
}

impl RealEnclosure {
    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Rat {
        (&self.lo + &self.hi) / rat_int(2)
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn as_interval(&self) -> Interval {
        Interval::new(self.lo.clone(), self.hi.clone())
    }
}

/// Bracket θ between consecutive convergents `p_k/q_k`, `p_{k+1}/q_{k+1}` of width at most `target_width`.
pub fn enclose_theta(stream: &PartialQuotientStream, target_width: &Rat) -> Result<RealEnclosure> {
    if !target_width.is_positive() {
        return Err(Error::invalid("target width must be positive"));
    }
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let (mut p, mut q) = (stream.a0.clone(), BigInt::one());
    let mut k = 0usize;
    loop {
        let a = stream.quotient(k + 1)?;
        let np = &a * &p + &p_prev;
        let nq = &a * &q + &q_prev;
        // |p_k/q_k - p_{k+1}/q_{k+1}| = 1/(q_k q_{k+1})
        if Rat::new(BigInt::one(), &q * &nq) <= *target_width {
            let (x, y) = (Rat::new(p.clone(), q.clone()), Rat::new(np, nq));
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            return Ok(RealEnclosure { lo, hi, depth: k });
        }
        p_prev = std::mem::replace(&mut p, np);
        q_prev = std::mem::replace(&mut q, nq);
        k += 1;
    }
}
