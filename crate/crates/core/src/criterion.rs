//! The block series `Σ_k Σ_{q_k ≤ n < q_{k+1}} min(ψ(n), ‖q_kθ‖)` and its
//! Khintchine and Kurzweil specializations.
//!
//! Partial sums are always rigorous enclosures. A certificate is emitted only when
//! an analytic argument settles the infinite tail; everything else is evidence.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cf_real::{
    convergent_table, int_json, next_convergent, refine, ConvergentState, PartialQuotientStream,
};
use crate::error::{Error, Result};
use crate::interval::{ln_interval, pow_rat, rat_int, Interval, Rat};
use crate::psi::{parse_rat, ApproxSeq, PhiSeq};

pub const DEFAULT_BITS: u32 = 160;
/// Precision doublings tried before an undecided comparison is reported.
const REFINEMENTS: u32 = 3;
/// How far `khintchine_equivalence_check` looks for `k_0` on unbounded streams.
const K0_SEARCH: usize = 400;

/// Run `f` at `bits`, doubling the precision while it reports `Undecided`.
pub(crate) fn refining<T>(bits: u32, mut f: impl FnMut(u32) -> Result<T>) -> Result<T> {
    let mut b = bits;
    for _ in 0..REFINEMENTS {
        match f(b) {
            Err(Error::Undecided { .. }) => b *= 2,
            r => return r,
        }
    }
    f(b)
}

fn iv_json(x: &Interval) -> Value {
    let [lo, hi] = x.to_f64_pair();
    json!([lo, hi])
}

fn iv_csv(x: &Interval) -> String {
    let [lo, hi] = x.to_f64_pair();
    format!("{lo:e},{hi:e}")
}

/// `a_{k+1} q_k + q_{k−1}`, pulling `a_{k+1}` from the stream if the state lacks it.
fn next_q(stream: &PartialQuotientStream, state: &ConvergentState) -> Result<BigInt> {
    let a = match &state.next_quotient {
        Some(a) => a.clone(),
        None => stream.quotient((state.k + 1) as usize)?,
    };
    Ok(a * &state.q + &state.q_prev)
}

/// `(q*, Σ_{n=lo}^{hi} min(ψ(n), ‖q_kθ‖), ‖q_kθ‖)` for a sub-range of block `k`.
fn min_sum(
    stream: &PartialQuotientStream,
    state: &ConvergentState,
    seq: &ApproxSeq,
    lo: &BigInt,
    hi: &BigInt,
    bits: u32,
) -> Result<(BigInt, Interval, Interval)> {
    refining(bits, |b| {
        let d = if b == bits {
            state.norm()
        } else {
            refine(stream, state, b).norm()
        };
        let qstar = seq.crossover(lo, hi, &d, b)?;
        let flat = d.scale(&rat_int(&qstar - lo));
        let value = flat.add(&seq.block_sum(&qstar, hi, b)?);
        Ok((qstar, value, d))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockTerm {
    pub k: i64,
    pub qk: BigInt,
    pub qk1: BigInt,
    /// Enclosure of `‖q_kθ‖`.
    pub dist: Interval,
    /// First `n` in the block with `ψ(n) < ‖q_kθ‖`, or `q_{k+1}` if none.
    pub qstar: BigInt,
    pub value: Interval,
    /// Set when ψ's domain ends inside the block; the sum stops there.
    pub truncated_at: Option<BigInt>,
}

impl BlockTerm {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "k": self.k,
            "qk": self.qk.to_string(),
            "qk1": self.qk1.to_string(),
            "dist": iv_json(&self.dist),
            "qstar": self.qstar.to_string(),
            "value": iv_json(&self.value),
        });
        if let Some(t) = &self.truncated_at {
            v["truncated_at"] = Value::String(t.to_string());
        }
        v
    }
}

/// The block `q_k ≤ n < q_{k+1}` of the main series.
pub fn block_term(
    stream: &PartialQuotientStream,
    state: &ConvergentState,
    seq: &ApproxSeq,
    bits: u32,
) -> Result<BlockTerm> {
    if state.k < 0 {
        return Err(Error::invalid("blocks start at k = 0"));
    }
    let qk1 = next_q(stream, state)?;
    let mut hi = &qk1 - 1;
    let mut truncated_at = None;
    if let Some(end) = seq.domain_end() {
        if end < state.q {
            return Err(Error::OutOfRange {
                index: state.q.clone(),
            });
        }
        if end < hi {
            hi = end.clone();
            truncated_at = Some(end);
        }
    }
    let (qstar, value, dist) = min_sum(stream, state, seq, &state.q, &hi, bits)?;
    Ok(BlockTerm {
        k: state.k,
        qk: state.q.clone(),
        qk1,
        dist,
        qstar,
        value,
        truncated_at,
    })
}

/// `Σ_{n=a}^{b} h(n)` with `h(n) = min(ψ(n), ‖q_kθ‖)` on `q_k ≤ n < q_{k+1}`.
/// `table` must be the convergent table from `k = 0` and reach past `b`.
pub fn h_sum(
    stream: &PartialQuotientStream,
    table: &[ConvergentState],
    seq: &ApproxSeq,
    a: &BigInt,
    b: &BigInt,
    bits: u32,
) -> Result<Interval> {
    if !a.is_positive() {
        return Err(Error::invalid("h is indexed from 1"));
    }
    let mut total = Interval::zero();
    let mut covered = BigInt::zero();
    for s in table {
        let qk1 = next_q(stream, s)?;
        covered = &qk1 - 1;
        let lo = a.max(&s.q).clone();
        let hi = b.min(&covered).clone();
        if lo <= hi {
            total = total.add(&min_sum(stream, s, seq, &lo, &hi, bits)?.1);
        }
        if &covered >= b {
            return Ok(total);
        }
    }
    if covered.is_zero() {
        return Err(Error::invalid("empty convergent table"));
    }
    Err(Error::DepthExceeded {
        needed: table.len() + 1,
        available: table.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    DivergesCertified,
    ConvergesCertified,
    Inconclusive,
}

impl Certificate {
    pub fn as_str(&self) -> &'static str {
        match self {
            Certificate::DivergesCertified => "diverges-certified",
            Certificate::ConvergesCertified => "converges-certified",
            Certificate::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub certificate: Certificate,
    pub reason: String,
    /// The facts the certificate rests on, one per line.
    pub hypotheses: Vec<String>,
}

impl Verdict {
    fn inconclusive(reason: String) -> Self {
        Verdict {
            certificate: Certificate::Inconclusive,
            reason,
            hypotheses: Vec::new(),
        }
    }
}

/// Rules (a) and (b): bounded quotients with `Σψ = ∞`, or bounded φ.
fn divergence_rules(stream: &PartialQuotientStream, seq: &ApproxSeq) -> Option<Verdict> {
    if let (Some(bound), Some(true)) = (stream.declared_bound(), seq.sum_diverges()) {
        return Some(Verdict {
            certificate: Certificate::DivergesCertified,
            reason: "θ is badly approximable and Σ ψ(n) = ∞; Kurzweil's theorem gives divergence"
                .into(),
            hypotheses: vec![
                format!(
                    "a_k ≤ {bound} for all k by the stream's declared rule ({})",
                    stream.describe()
                ),
                format!("Σ ψ(n) = ∞ for the family {}", seq.describe()),
            ],
        });
    }
    if let Some(c) = seq.phi().and_then(PhiSeq::bound) {
        let c2 = c.clone().max(rat_int(2));
        return Some(Verdict {
            certificate: Certificate::DivergesCertified,
            reason: format!(
                "ψ(n) = 1/(nφ(n)) with φ(n) ≤ {c2}; each pair of blocks adds at least 1/(2·{c2})"
            ),
            hypotheses: vec![format!("φ(n) ≤ {c} for all n ({})", seq.describe())],
        });
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    /// Deepest block evaluated.
    pub k_max: i64,
    pub blocks: Vec<BlockTerm>,
    /// `S_K = Σ_{k ≤ K} block_k`.
    pub partial_sums: Vec<Interval>,
    pub verdict: Verdict,
}

impl CriterionReport {
    pub fn to_json(&self) -> Value {
        json!({
            "K_max": self.k_max,
            "blocks": self.blocks.iter().map(BlockTerm::to_json).collect::<Vec<_>>(),
            "partial_sums": self.partial_sums.iter().map(iv_json).collect::<Vec<_>>(),
            "certificate": self.verdict.certificate.as_str(),
            "reason": self.verdict.reason,
            "hypotheses": self.verdict.hypotheses,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "k,qk,qk1,dist_lo,dist_hi,qstar,value_lo,value_hi,partial_lo,partial_hi\n",
        );
        for (b, s) in self.blocks.iter().zip(&self.partial_sums) {
            out += &format!(
                "{},{},{},{},{},{},{}\n",
                b.k,
                b.qk,
                b.qk1,
                iv_csv(&b.dist),
                b.qstar,
                iv_csv(&b.value),
                iv_csv(s)
            );
        }
        out
    }
}

fn cumulative(values: impl IntoIterator<Item = Interval>) -> Vec<Interval> {
    let mut acc = Interval::zero();
    values
        .into_iter()
        .map(|v| {
            acc = acc.add(&v);
            acc.clone()
        })
        .collect()
}

/// Ordered parallel map that reports the first error in index order.
fn ordered<T: Send, U: Send>(
    items: Vec<T>,
    f: impl Fn(T) -> Result<U> + Sync + Send,
) -> Result<Vec<U>> {
    let out: Vec<Result<U>> = items.into_par_iter().map(f).collect();
    out.into_iter().collect()
}

/// Partial sums `S_0..S_{K_max}` of the main series with a certificate when one exists.
pub fn evaluate_criterion(
    stream: &PartialQuotientStream,
    seq: &ApproxSeq,
    k_max: usize,
    bits: u32,
) -> Result<CriterionReport> {
    let table = convergent_table(stream, k_max + 1, bits)?;
    let end = seq.domain_end();
    let live: Vec<&ConvergentState> = table
        .iter()
        .take_while(|s| end.as_ref().map_or(true, |e| &s.q <= e))
        .collect();
    let blocks = ordered(live, |s| block_term(stream, s, seq, bits))?;
    let partial_sums = cumulative(blocks.iter().map(|b| b.value.clone()));
    let last = blocks
        .last()
        .ok_or_else(|| Error::invalid("ψ is undefined on the first block"))?;
    let s_k = partial_sums.last().expect("non-empty").clone();

    let verdict = if let Some(v) = divergence_rules(stream, seq) {
        v
    } else if last.truncated_at.is_some() || (blocks.len() <= k_max && end.is_some()) {
        Verdict::inconclusive(format!(
            "ψ is defined only for n ≤ {}; S_{} ∈ {} over that range, the infinite series is not determined",
            end.expect("bounded domain"),
            last.k,
            s_k
        ))
    } else if let Some(tail) = seq.tail_bound(&last.qk1, bits) {
        let total = s_k.hi() + &tail;
        let (_, hi) = crate::interval::f64_bounds(&total);
        Verdict {
            certificate: Certificate::ConvergesCertified,
            reason: format!("every block is at most the ψ-sum over it, so the series is ≤ S_K + Σ_{{n ≥ q_{{K+1}}}} ψ(n) ≤ {hi:e}"),
            hypotheses: vec![
                format!("Σ ψ(n) < ∞ for the family {}", seq.describe()),
                format!("analytic tail bound from n = {}", last.qk1),
            ],
        }
    } else {
        let inc = &last.value;
        Verdict::inconclusive(format!(
            "no analytic rule applies; S_{} ∈ {}, last block adds {}",
            last.k, s_k, inc
        ))
    };
    Ok(CriterionReport {
        k_max: last.k,
        blocks,
        partial_sums,
        verdict,
    })
}

/// `Log min(φ(q_k), q_{k+1}/q_k)` with `Log x = max(ln x, 0)`.
fn log_term(phi_qk: &Interval, qk: &BigInt, qk1: &BigInt, bits: u32) -> Interval {
    let ratio = Interval::point(Rat::new(qk1.clone(), qk.clone()));
    let m = phi_qk.min(&ratio);
    let one = Rat::one();
    if m.hi() <= &one {
        return Interval::zero();
    }
    let clamped = Interval::new(m.lo().clone().max(one.clone()), m.hi().clone());
    ln_interval(&clamped, bits).clamp_nonneg()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTerm {
    pub k: i64,
    pub qk: BigInt,
    pub qk1: BigInt,
    pub phi: Interval,
    /// `Log min(φ(q_k), q_{k+1}/q_k)`.
    pub log: Interval,
    /// `log / φ(q_k)`.
    pub value: Interval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesReport {
    pub k_max: i64,
    pub terms: Vec<SeriesTerm>,
    pub partial_sums: Vec<Interval>,
    pub verdict: Verdict,
}

impl SeriesReport {
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|t| {
                json!({
                    "k": t.k,
                    "qk": t.qk.to_string(),
                    "qk1": t.qk1.to_string(),
                    "phi": iv_json(&t.phi),
                    "log": iv_json(&t.log),
                    "value": iv_json(&t.value),
                })
            })
            .collect();
        json!({
            "K_max": self.k_max,
            "terms": terms,
            "partial_sums": self.partial_sums.iter().map(iv_json).collect::<Vec<_>>(),
            "certificate": self.verdict.certificate.as_str(),
            "reason": self.verdict.reason,
            "hypotheses": self.verdict.hypotheses,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("k,qk,qk1,phi_lo,phi_hi,value_lo,value_hi,partial_lo,partial_hi\n");
        for (t, s) in self.terms.iter().zip(&self.partial_sums) {
            out += &format!(
                "{},{},{},{},{},{}\n",
                t.k,
                t.qk,
                t.qk1,
                iv_csv(&t.phi),
                iv_csv(&t.value),
                iv_csv(s)
            );
        }
        out
    }
}

/// Partial sums of `Σ_k Log min(φ(q_k), q_{k+1}/q_k) / φ(q_k)`.
pub fn khintchine_series(
    stream: &PartialQuotientStream,
    phi: &PhiSeq,
    k_max: usize,
    bits: u32,
) -> Result<SeriesReport> {
    phi.validate()?;
    let table = convergent_table(stream, k_max + 1, bits)?;
    let terms = ordered(table.iter().collect(), |s| {
        let qk1 = next_q(stream, s)?;
        let p = phi.eval(&s.q, bits + 16);
        let log = log_term(&p, &s.q, &qk1, bits + 16);
        let value = log.div(&p).round_outward(bits as u64 + 32);
        Ok(SeriesTerm {
            k: s.k,
            qk: s.q.clone(),
            qk1,
            phi: p,
            log,
            value,
        })
    })?;
    let partial_sums = cumulative(terms.iter().map(|t| t.value.clone()));
    let seq = ApproxSeq::khintchine(phi.clone())?;
    let verdict = match divergence_rules(stream, &seq) {
        Some(mut v) => {
            v.reason = format!("the block series with ψ = 1/(nφ(n)) diverges: {}", v.reason);
            v
        }
        None => Verdict::inconclusive(format!(
            "no analytic rule applies; partial sum after k = {} is {}",
            k_max,
            partial_sums.last().expect("non-empty")
        )),
    };
    Ok(SeriesReport {
        k_max: k_max as i64,
        terms,
        partial_sums,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SandwichRow {
    pub k: i64,
    /// `L_k / (2φ(q_{k+1}))`.
    pub lower: Interval,
    pub block: Interval,
    /// `3 L_k / φ(q_k)`.
    pub upper: Interval,
    /// `2 L_k / φ(q_k) + L_{k−1} / φ(q_{k−1})`.
    pub upper_two_term: Interval,
    pub lower_ok: Option<bool>,
    pub upper_ok: Option<bool>,
    pub upper_two_term_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub k0: i64,
    pub rows: Vec<SandwichRow>,
    pub lower_total: Interval,
    pub block_total: Interval,
    /// Includes the `k = k_0` term, as in the summed form of the bound.
    pub upper_total: Interval,
    pub totals_ok: Option<bool>,
    pub violations: usize,
    pub undecided: usize,
}

impl EquivalenceReport {
    pub fn to_json(&self) -> Value {
        let ok = |b: Option<bool>| match b {
            Some(b) => json!(b),
            None => json!("undecided"),
        };
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "k": r.k,
                    "lower": iv_json(&r.lower),
                    "block": iv_json(&r.block),
                    "upper": iv_json(&r.upper),
                    "upper_two_term": iv_json(&r.upper_two_term),
                    "lower_ok": ok(r.lower_ok),
                    "upper_ok": ok(r.upper_ok),
                    "upper_two_term_ok": ok(r.upper_two_term_ok),
                })
            })
            .collect();
        json!({
            "k0": self.k0,
            "rows": rows,
            "lower_total": iv_json(&self.lower_total),
            "block_total": iv_json(&self.block_total),
            "upper_total": iv_json(&self.upper_total),
            "totals_ok": ok(self.totals_ok),
            "violations": self.violations,
            "undecided": self.undecided,
        })
    }
}

/// First `k ≥ 1` with `ψ(q_k − 1) < ‖q_{k−1}θ‖` decided and `φ(q_k) ≥ 16`.
fn find_k0(
    stream: &PartialQuotientStream,
    seq: &ApproxSeq,
    phi: &PhiSeq,
    bits: u32,
) -> Result<usize> {
    let limit = stream.depth().map_or(K0_SEARCH, |d| d.min(K0_SEARCH));
    let sixteen = Interval::point(rat_int(16));
    let mut prev = next_convergent(stream, &ConvergentState::seed(stream), bits)?;
    for k in 1..limit {
        let cur = next_convergent(stream, &prev, bits)?;
        let crossed = if cur.q > BigInt::one() {
            let at = &cur.q - 1;
            refining(bits, |b| {
                let d = if b == bits {
                    prev.norm()
                } else {
                    refine(stream, &prev, b).norm()
                };
                seq.eval(&at, b)?
                    .lt(&d)
                    .ok_or_else(|| Error::undecided("ψ(q_k − 1) against ‖q_{k−1}θ‖"))
            })?
        } else {
            false
        };
        if crossed && sixteen.le(&phi.eval(&cur.q, bits)) == Some(true) {
            return Ok(k);
        }
        prev = cur;
    }
    Err(Error::HypothesisNotMet(format!(
        "k_0 not reached within {limit} convergents"
    )))
}

/// Checks the two-sided bound relating each block of the main series (with
/// `ψ = 1/(nφ(n))`) to the Khintchine log terms, for `blocks` blocks past `k_0`.
pub fn khintchine_equivalence_check(
    stream: &PartialQuotientStream,
    phi: &PhiSeq,
    blocks: usize,
    bits: u32,
) -> Result<EquivalenceReport> {
    phi.validate()?;
    if !phi.tends_to_infinity() {
        return Err(Error::HypothesisNotMet(format!(
            "φ = {} does not tend to infinity",
            phi.describe()
        )));
    }
    let seq = ApproxSeq::khintchine(phi.clone())?;
    let k0 = find_k0(stream, &seq, phi, bits)?;
    let table = convergent_table(stream, k0 + blocks + 1, bits)?;

    let log_ratio = |s: &ConvergentState, b: u32| -> Result<(Interval, Interval)> {
        let qk1 = next_q(stream, s)?;
        let p = phi.eval(&s.q, b);
        Ok((log_term(&p, &s.q, &qk1, b).div(&p), p))
    };
    let row_at = |k: usize, b: u32| -> Result<SandwichRow> {
        let s = &table[k];
        let qk1 = next_q(stream, s)?;
        let (lk_over, p) = log_ratio(s, b)?;
        let lk = lk_over.mul(&p);
        let phi_next = phi.eval(&qk1, b);
        let lower = lk.div(&phi_next.scale(&rat_int(2)));
        let upper = lk_over.scale(&rat_int(3));
        let (prev_over, _) = log_ratio(&table[k - 1], b)?;
        let upper_two_term = lk_over.scale(&rat_int(2)).add(&prev_over);
        let block = block_term(stream, s, &seq, b)?.value;
        Ok(SandwichRow {
            k: s.k,
            lower_ok: lower.le(&block),
            upper_ok: block.le(&upper),
            upper_two_term_ok: block.le(&upper_two_term),
            lower,
            block,
            upper,
            upper_two_term,
        })
    };
    let rows = ordered(((k0 + 1)..=(k0 + blocks)).collect(), |k| {
        let r = row_at(k, bits)?;
        if [r.lower_ok, r.upper_ok, r.upper_two_term_ok].contains(&None) {
            return row_at(k, bits * 4);
        }
        Ok(r)
    })?;

    let sum = |f: &dyn Fn(&SandwichRow) -> &Interval| {
        rows.iter().fold(Interval::zero(), |acc, r| acc.add(f(r)))
    };
    let lower_total = sum(&|r| &r.lower);
    let block_total = sum(&|r| &r.block);
    let upper_total = sum(&|r| &r.upper).add(&log_ratio(&table[k0], bits)?.0.scale(&rat_int(3)));
    let totals_ok = match (lower_total.le(&block_total), block_total.le(&upper_total)) {
        (Some(a), Some(b)) => Some(a && b),
        _ => None,
    };
    let flags = rows
        .iter()
        .flat_map(|r| [r.lower_ok, r.upper_ok, r.upper_two_term_ok])
        .chain(std::iter::once(totals_ok));
    let (mut violations, mut undecided) = (0, 0);
    for f in flags {
        match f {
            Some(false) => violations += 1,
            None => undecided += 1,
            _ => {}
        }
    }
    Ok(EquivalenceReport {
        k0: k0 as i64,
        rows,
        lower_total,
        block_total,
        upper_total,
        totals_ok,
        violations,
        undecided,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaProfile {
    pub tau: Rat,
    /// `q_k^τ ‖q_kθ‖` for `k = 0..=K`.
    pub values: Vec<Interval>,
    /// `c_K = min_{k ≤ K} q_k^τ ‖q_kθ‖`.
    pub floor: Vec<Interval>,
    /// Index where the running minimum was last lowered.
    pub argmin: usize,
    pub evidence: String,
}

impl OmegaProfile {
    pub fn to_json(&self) -> Value {
        json!({
            "tau": self.tau.to_string(),
            "values": self.values.iter().map(iv_json).collect::<Vec<_>>(),
            "floor": self.floor.iter().map(iv_json).collect::<Vec<_>>(),
            "argmin": self.argmin,
            "evidence": self.evidence,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,value_lo,value_hi,floor_lo,floor_hi\n");
        for (k, (v, f)) in self.values.iter().zip(&self.floor).enumerate() {
            out += &format!("{k},{},{}\n", iv_csv(v), iv_csv(f));
        }
        out
    }
}

/// Running minimum of `q_k^τ ‖q_kθ‖`. Between convergents `‖nθ‖ ≥ ‖q_kθ‖` and
/// `n^τ ≥ q_k^τ`, so the minimum over all `n < q_{K+1}` is attained at a convergent.
pub fn omega_tau_profile(
    stream: &PartialQuotientStream,
    tau: &Rat,
    k_max: usize,
    bits: u32,
) -> Result<OmegaProfile> {
    if tau < &Rat::one() {
        return Err(Error::invalid(format!("τ must be at least 1, got {tau}")));
    }
    let table = convergent_table(stream, k_max + 1, bits)?;
    let values: Vec<Interval> = table
        .par_iter()
        .map(|s| {
            let q = Interval::from_int(&s.q);
            let qt = match tau.to_integer().to_u32() {
                Some(t) if tau.is_integer() => q.pow_u32(t),
                _ => pow_rat(&q, tau, bits),
            };
            qt.mul(&s.norm())
        })
        .collect();
    let mut floor = Vec::with_capacity(values.len());
    let mut argmin = 0;
    for (k, v) in values.iter().enumerate() {
        let next = match floor.last() {
            None => v.clone(),
            Some(f) => {
                let f: &Interval = f;
                if v.lo() < f.lo() {
                    argmin = k;
                }
                f.min(v)
            }
        };
        floor.push(next);
    }
    let evidence = if argmin <= k_max / 2 {
        format!("positive floor: minimum attained at k = {argmin}, unchanged over the last {} convergents", k_max - argmin)
    } else {
        format!("no stable floor: running minimum still falling at k = {argmin}")
    };
    Ok(OmegaProfile {
        tau: tau.clone(),
        values,
        floor,
        argmin,
        evidence,
    })
}

/// `φ(n) = c / n^s` for the Kurzweil condition, or a table `φ(1), φ(2), …`.
#[derive(Clone, Debug, PartialEq)]
pub enum DecayPhi {
    Power { c: Rat, s: u32 },
    Table(Vec<Rat>),
}

impl DecayPhi {
    /// `pow:<c>,<s>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let rest = spec
            .strip_prefix("pow:")
            .ok_or_else(|| Error::invalid(format!("φ spec {spec:?}: expected pow:c,s")))?;
        let (c, s) = rest
            .split_once(',')
            .ok_or_else(|| Error::invalid("pow:c,s needs two values"))?;
        let s = s
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad exponent {s:?}")))?;
        Ok(DecayPhi::Power {
            c: parse_rat(c.trim())?,
            s,
        })
    }

    pub fn eval(&self, n: &BigInt) -> Result<Rat> {
        match self {
            DecayPhi::Power { c, s } => Ok(c / num_traits::pow(rat_int(n.clone()), *s as usize)),
            DecayPhi::Table(t) => n
                .to_usize()
                .filter(|&i| i >= 1 && i <= t.len())
                .map(|i| t[i - 1].clone())
                .ok_or_else(|| Error::OutOfRange { index: n.clone() }),
        }
    }

    /// (P1) `nφ(n)` non-increasing and (P2) `0 < n²φ(n) ≤ 1`, on `1..=4096`, on
    /// powers of two up to `2^128`, or on the whole table.
    pub fn validate(&self) -> Result<()> {
        let sample: Vec<BigInt> = match self {
            DecayPhi::Table(t) => (1..=t.len()).map(BigInt::from).collect(),
            DecayPhi::Power { .. } => {
                let mut s: Vec<BigInt> = (1..=4096u32).map(BigInt::from).collect();
                s.extend((13..=128).map(|j| BigInt::one() << j));
                s
            }
        };
        let mut prev: Option<Rat> = None;
        for n in &sample {
            let f = self.eval(n)?;
            let n2 = rat_int(n * n) * &f;
            if !f.is_positive() || n2 > Rat::one() {
                return Err(Error::Validation {
                    property: "(P2) 0 < n²φ(n) ≤ 1".into(),
                    n: n.clone(),
                });
            }
            let nf = rat_int(n.clone()) * &f;
            if prev.as_ref().is_some_and(|p| &nf > p) {
                return Err(Error::Validation {
                    property: "(P1) nφ(n) non-increasing".into(),
                    n: n.clone(),
                });
            }
            prev = Some(nf);
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self {
            DecayPhi::Power { c, s } => format!("pow:{c},{s}"),
            DecayPhi::Table(t) => format!("table[{}]", t.len()),
        }
    }
}

/// Non-decreasing unbounded `δ(n) ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub enum DeltaRule {
    Identity,
    Pow(u32),
    Table(Vec<BigInt>),
}

impl DeltaRule {
    /// `id` or `pow:<k>`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "id" => Ok(DeltaRule::Identity),
            _ => {
                let k = spec
                    .strip_prefix("pow:")
                    .and_then(|k| k.parse().ok())
                    .filter(|&k: &u32| k >= 1)
                    .ok_or_else(|| {
                        Error::invalid(format!("δ spec {spec:?}: expected id or pow:k with k ≥ 1"))
                    })?;
                Ok(DeltaRule::Pow(k))
            }
        }
    }

    pub fn eval(&self, n: &BigInt) -> Result<BigInt> {
        match self {
            DeltaRule::Identity => Ok(n.clone()),
            DeltaRule::Pow(k) => Ok(num_traits::pow(n.clone(), *k as usize)),
            DeltaRule::Table(t) => n
                .to_usize()
                .filter(|&i| i >= 1 && i <= t.len())
                .map(|i| t[i - 1].clone())
                .ok_or_else(|| Error::OutOfRange { index: n.clone() }),
        }
    }

    fn validate(&self) -> Result<()> {
        if let DeltaRule::Table(t) = self {
            if let Some(i) = t.iter().position(|d| d < &BigInt::one()) {
                return Err(Error::Validation {
                    property: "δ(n) ≥ 1".into(),
                    n: BigInt::from(i + 1),
                });
            }
            if let Some(i) = t.windows(2).position(|w| w[1] < w[0]) {
                return Err(Error::Validation {
                    property: "δ non-decreasing".into(),
                    n: BigInt::from(i + 2),
                });
            }
        }
        Ok(())
    }
}

/// Increasing `t_1, t_2, …`.
#[derive(Clone, Debug, PartialEq)]
pub enum IndexRule {
    /// `t_i = 2^{2^i}`.
    DoubleExponential,
    /// `t_i = b^i`.
    Geometric(BigInt),
    Table(Vec<BigInt>),
}

impl IndexRule {
    /// `double-exp` or `geometric:<b>`.
    pub fn parse(spec: &str) -> Result<Self> {
        if spec == "double-exp" {
            return Ok(IndexRule::DoubleExponential);
        }
        let b = spec
            .strip_prefix("geometric:")
            .and_then(|b| b.parse::<BigInt>().ok())
            .filter(|b| b > &BigInt::one())
            .ok_or_else(|| {
                Error::invalid(format!(
                    "t spec {spec:?}: expected double-exp or geometric:b with b ≥ 2"
                ))
            })?;
        Ok(IndexRule::Geometric(b))
    }

    pub fn at(&self, i: usize) -> Result<BigInt> {
        match self {
            IndexRule::DoubleExponential => Ok(BigInt::one() << (1usize << i)),
            IndexRule::Geometric(b) => Ok(num_traits::pow(b.clone(), i)),
            IndexRule::Table(t) => {
                t.get(i.wrapping_sub(1))
                    .cloned()
                    .ok_or_else(|| Error::OutOfRange {
                        index: BigInt::from(i),
                    })
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let IndexRule::Table(t) = self {
            if let Some(i) = t.iter().position(|x| !x.is_positive()) {
                return Err(Error::Validation {
                    property: "t_i ≥ 1".into(),
                    n: BigInt::from(i + 1),
                });
            }
            if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
                return Err(Error::Validation {
                    property: "t increasing".into(),
                    n: BigInt::from(i + 2),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KurzweilRow {
    pub i: usize,
    pub t: BigInt,
    /// `1/(t_i φ(t_i δ(t_i)))`, exact.
    pub threshold: Rat,
    /// `⌊threshold⌋`.
    pub index: BigInt,
    /// `t_{i+1} ≥ threshold`.
    pub side_ok: bool,
    /// `t_i ψ(index)`.
    pub term: Interval,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KurzweilReport {
    pub rows: Vec<KurzweilRow>,
    pub partial_sums: Vec<Interval>,
    pub side_violations: Vec<usize>,
    /// `min_{j ≤ k} ‖q_jθ‖ / (q_j φ(q_j))` when a stream is supplied: a positive
    /// floor is finite-stage evidence that θ lies in the φ-class.
    pub omega_floor: Option<Vec<Interval>>,
}

impl KurzweilReport {
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "i": r.i,
                    "t": int_json(&r.t),
                    "threshold": r.threshold.to_string(),
                    "index": int_json(&r.index),
                    "side_ok": r.side_ok,
                    "term": iv_json(&r.term),
                })
            })
            .collect();
        let mut v = json!({
            "rows": rows,
            "partial_sums": self.partial_sums.iter().map(iv_json).collect::<Vec<_>>(),
            "side_violations": self.side_violations,
        });
        if let Some(f) = &self.omega_floor {
            v["omega_floor"] = json!(f.iter().map(iv_json).collect::<Vec<_>>());
        }
        v
    }
}

/// Convergents used for the Ω^(φ) evidence in `kurzweil_condition_eval`.
const KURZWEIL_PROFILE_DEPTH: usize = 30;

/// Evaluates `Σ_i t_i ψ(⌊1/(t_i φ(t_i δ(t_i)))⌋)` for `i = 1..=i_max` and the side
/// condition `t_{i+1} ≥ 1/(t_i φ(t_i δ(t_i)))`.
pub fn kurzweil_condition_eval(
    stream: Option<&PartialQuotientStream>,
    seq: &ApproxSeq,
    phi: &DecayPhi,
    delta: &DeltaRule,
    t: &IndexRule,
    i_max: usize,
    bits: u32,
) -> Result<KurzweilReport> {
    phi.validate()?;
    delta.validate()?;
    t.validate()?;
    let threshold = |i: usize| -> Result<(BigInt, Rat)> {
        let ti = t.at(i)?;
        let arg = &ti * delta.eval(&ti)?;
        let f = phi.eval(&arg)?;
        Ok((ti.clone(), Rat::one() / (rat_int(ti) * f)))
    };
    let mut rows = Vec::with_capacity(i_max);
    for i in 1..=i_max {
        let (ti, thr) = threshold(i)?;
        let next = t.at(i + 1)?;
        if next <= ti {
            return Err(Error::Validation {
                property: "t increasing".into(),
                n: BigInt::from(i + 1),
            });
        }
        let index = thr.floor().to_integer();
        let term = seq.eval(&index, bits)?.scale(&rat_int(ti.clone()));
        rows.push(KurzweilRow {
            i,
            side_ok: rat_int(next) >= thr,
            t: ti,
            threshold: thr,
            index,
            term,
        });
    }
    let partial_sums = cumulative(rows.iter().map(|r| r.term.clone()));
    let side_violations = rows.iter().filter(|r| !r.side_ok).map(|r| r.i).collect();

    let omega_floor = match stream {
        None => None,
        Some(s) => {
            let depth = s
                .depth()
                .map_or(KURZWEIL_PROFILE_DEPTH, |d| d.min(KURZWEIL_PROFILE_DEPTH));
            let table = convergent_table(s, depth, bits)?;
            let mut floor: Vec<Interval> = Vec::with_capacity(table.len());
            for st in &table {
                let v = st
                    .norm()
                    .div(&Interval::point(rat_int(st.q.clone()) * phi.eval(&st.q)?));
                let f = floor.last().map_or(v.clone(), |f| f.min(&v));
                floor.push(f);
            }
            Some(floor)
        }
    };
    Ok(KurzweilReport {
        rows,
        partial_sums,
        side_violations,
        omega_floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf_real::QuotientRule;
    use crate::interval::rat;
    use proptest::prelude::*;

    const BITS: u32 = DEFAULT_BITS;

    fn b(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn state(stream: &PartialQuotientStream, k: usize) -> ConvergentState {
        convergent_table(stream, k + 1, BITS)
            .unwrap()
            .pop()
            .unwrap()
    }

    #[test]
    fn sqrt2_block_is_exact() {
        let s = PartialQuotientStream::sqrt2_minus_1();
        let psi = ApproxSeq::power(rat(1, 4), rat(1, 1)).unwrap();
        let t = block_term(&s, &state(&s, 1), &psi, BITS).unwrap();
        assert_eq!(
            (t.qk.clone(), t.qk1.clone(), t.qstar.clone()),
            (b(2), b(5), b(2))
        );
        assert_eq!(t.value, Interval::point(rat(13, 48)));
    }

    #[test]
    fn saturated_blocks() {
        let s = PartialQuotientStream::golden();
        let one = ApproxSeq::constant(rat(1, 1)).unwrap();
        let tiny = ApproxSeq::power(rat(1, 1_000_000_000), rat(1, 1)).unwrap();
        for k in 2..12 {
            let st = state(&s, k);
            let t = block_term(&s, &st, &one, BITS).unwrap();
            let len = rat_int(&t.qk1 - &t.qk);
            assert_eq!(t.value, st.norm().scale(&len));
            assert_eq!(t.qstar, t.qk1);
            let t = block_term(&s, &st, &tiny, BITS).unwrap();
            assert_eq!(t.value, tiny.block_sum(&t.qk, &(&t.qk1 - 1), BITS).unwrap());
            assert_eq!(t.qstar, t.qk);
        }
    }

    #[test]
    fn empty_first_block() {
        // golden ratio: q_0 = q_1 = 1
        let s = PartialQuotientStream::golden();
        let psi = ApproxSeq::power(rat(1, 5), rat(1, 1)).unwrap();
        let t = block_term(&s, &state(&s, 0), &psi, BITS).unwrap();
        assert_eq!(t.value, Interval::zero());
    }

    #[test]
    fn golden_is_certified_divergent() {
        let s = PartialQuotientStream::golden();
        let psi = ApproxSeq::power(rat(1, 5), rat(1, 1)).unwrap();
        let r = evaluate_criterion(&s, &psi, 30, BITS).unwrap();
        assert_eq!(r.verdict.certificate, Certificate::DivergesCertified);
        assert!(r.verdict.reason.contains("Kurzweil"));
        assert_eq!(r.partial_sums.len(), 31);
        assert_eq!(r.k_max, 30);
    }

    #[test]
    fn bounded_phi_is_certified_divergent() {
        let s = PartialQuotientStream::doubling();
        let psi = ApproxSeq::khintchine(PhiSeq::Const(rat(2, 1))).unwrap();
        let r = evaluate_criterion(&s, &psi, 8, BITS).unwrap();
        assert_eq!(r.verdict.certificate, Certificate::DivergesCertified);
        assert!(r.verdict.hypotheses[0].contains("φ(n) ≤ 2"));
    }

    #[test]
    fn summable_psi_is_certified_convergent() {
        let s = PartialQuotientStream::sqrt2_minus_1();
        let psi = ApproxSeq::power(rat(1, 1), rat(2, 1)).unwrap();
        let r = evaluate_criterion(&s, &psi, 12, BITS).unwrap();
        assert_eq!(r.verdict.certificate, Certificate::ConvergesCertified);
        // total ≤ ζ(2)
        let total: f64 = r
            .verdict
            .reason
            .rsplit(' ')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert!(total < 1.6449341);
        let s_k = r.partial_sums.last().unwrap().lo().to_f64().unwrap();
        assert!(total > s_k);
    }

    #[test]
    fn unbounded_quotients_are_inconclusive() {
        let s = PartialQuotientStream::doubling();
        let psi = ApproxSeq::power(rat(1, 3), rat(1, 1)).unwrap();
        let r = evaluate_criterion(&s, &psi, 10, BITS).unwrap();
        assert_eq!(r.verdict.certificate, Certificate::Inconclusive);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 12);
        let j = r.to_json();
        assert_eq!(j["blocks"].as_array().unwrap().len(), 11);
        assert_eq!(j["certificate"], "inconclusive");
    }

    #[test]
    fn bounded_domain_truncates() {
        let s = PartialQuotientStream::golden();
        let psi = ApproxSeq::piecewise(vec![b(1), b(10)], vec![rat(1, 2), rat(1, 50)], Some(b(40)))
            .unwrap();
        let r = evaluate_criterion(&s, &psi, 20, BITS).unwrap();
        let last = r.blocks.last().unwrap();
        assert_eq!(last.truncated_at, Some(b(39)));
        assert_eq!(r.verdict.certificate, Certificate::Inconclusive);
        assert!(r.verdict.reason.contains("n ≤ 39"));
    }

    #[test]
    fn h_sum_matches_blocks() {
        let s = PartialQuotientStream::sqrt2_minus_1();
        let psi = ApproxSeq::power(rat(1, 4), rat(1, 1)).unwrap();
        let table = convergent_table(&s, 8, BITS).unwrap();
        let whole = h_sum(
            &s,
            &table,
            &psi,
            &b(1),
            &(&table[7].q_next().unwrap() - 1),
            BITS,
        )
        .unwrap();
        let blocks = (0..8).fold(Interval::zero(), |acc, k| {
            acc.add(&block_term(&s, &table[k], &psi, BITS).unwrap().value)
        });
        assert!(whole.overlaps(&blocks));
        let split = h_sum(&s, &table, &psi, &b(1), &b(100), BITS).unwrap().add(
            &h_sum(
                &s,
                &table,
                &psi,
                &b(101),
                &(&table[7].q_next().unwrap() - 1),
                BITS,
            )
            .unwrap(),
        );
        assert!(split.overlaps(&whole));
        assert!(matches!(
            h_sum(&s, &table, &psi, &b(1), &b(1_000_000), BITS),
            Err(Error::DepthExceeded { .. })
        ));
    }

    #[test]
    fn khintchine_series_examples() {
        let g = PartialQuotientStream::golden();
        let r = khintchine_series(&g, &PhiSeq::Const(rat(1, 1)), 20, BITS).unwrap();
        assert!(r.partial_sums.iter().all(|s| s == &Interval::zero()));

        let r = khintchine_series(&g, &PhiSeq::LogPow(rat(2, 1)), 40, BITS).unwrap();
        for t in &r.terms {
            assert!(t.value.width() < rat(1, 1_000_000_000));
            // f64 oracle
            let (q, q1) = (t.qk.to_f64().unwrap(), t.qk1.to_f64().unwrap());
            let phi = q.max(2.0).ln().powi(2);
            let expected = phi.min(q1 / q).ln().max(0.0) / phi;
            assert!(
                (t.value.mid().to_f64().unwrap() - expected).abs() < 1e-12,
                "k = {}",
                t.k
            );
        }

        let d = PartialQuotientStream::doubling();
        let phi = PhiSeq::LogPow(rat(2, 1));
        let r = khintchine_series(&d, &phi, 25, BITS).unwrap();
        let mut seen = 0;
        for t in &r.terms {
            let ratio = Interval::point(Rat::new(t.qk1.clone(), t.qk.clone()));
            if t.phi.lt(&ratio) == Some(true) && t.phi.lo() > &Rat::one() {
                let direct = ln_interval(&t.phi, BITS).div(&t.phi);
                assert!(direct.overlaps(&t.value));
                seen += 1;
            }
        }
        assert!(seen > 5);
    }

    #[test]
    fn sandwich_golden_logpow() {
        let g = PartialQuotientStream::golden();
        let r = khintchine_equivalence_check(&g, &PhiSeq::LogPow(rat(2, 1)), 20, BITS).unwrap();
        assert_eq!(r.rows.len(), 20);
        assert_eq!((r.violations, r.undecided), (0, 0), "{:?}", r.to_json());
        // φ(q_{k0}) ≥ 16 means ln q ≥ 4
        let q0 = convergent_table(&g, r.k0 as usize + 1, BITS).unwrap()[r.k0 as usize]
            .q
            .clone();
        assert!(q0.to_f64().unwrap().ln() >= 4.0);
    }

    #[test]
    fn sandwich_refuses_bounded_phi() {
        let g = PartialQuotientStream::golden();
        assert!(matches!(
            khintchine_equivalence_check(&g, &PhiSeq::Const(rat(3, 1)), 5, BITS),
            Err(Error::HypothesisNotMet(_))
        ));
        let short = PartialQuotientStream::explicit(b(0), vec![b(1); 4]).unwrap();
        assert!(matches!(
            khintchine_equivalence_check(&short, &PhiSeq::LogPow(rat(2, 1)), 5, BITS),
            Err(Error::HypothesisNotMet(_))
        ));
    }

    #[test]
    fn omega_profiles() {
        let g = PartialQuotientStream::golden();
        let p = omega_tau_profile(&g, &rat(1, 1), 50, BITS).unwrap();
        // k = 0, 1 give 1 − θ = (3 − √5)/2
        let floor = p.floor.last().unwrap().mid().to_f64().unwrap();
        assert!((floor - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert_eq!(p.argmin, 0);
        assert!(p.values[2..].iter().all(|v| v.lo() > &rat(2, 5)));
        let last = p.values[50].mid().to_f64().unwrap();
        assert!((last - 1.0 / 5f64.sqrt()).abs() < 1e-15);

        let d = PartialQuotientStream::doubling();
        let p = omega_tau_profile(&d, &rat(1, 1), 20, BITS).unwrap();
        let table = convergent_table(&d, 21, BITS).unwrap();
        for (k, f) in p.floor.iter().enumerate() {
            let bound = Rat::new(table[k].q.clone(), table[k].q_next().unwrap());
            assert!(f.hi() <= &bound);
        }
        assert!(p.evidence.starts_with("no stable floor"));

        let p = omega_tau_profile(&g, &rat(3, 1), 30, BITS).unwrap();
        assert_eq!(p.argmin, 0);
        assert!(p.floor.windows(2).all(|w| w[1].hi() <= w[0].hi()));
        assert!(omega_tau_profile(&g, &rat(1, 2), 3, BITS).is_err());
        let p = omega_tau_profile(&g, &rat(3, 2), 30, BITS).unwrap();
        assert!(p.values[1].width() < rat(1, 1_000_000_000_000));
    }

    #[test]
    fn kurzweil_inverse_square() {
        let phi = DecayPhi::parse("pow:1,2").unwrap();
        let psi = ApproxSeq::power(rat(1, 1), rat(1, 1)).unwrap();
        let r = kurzweil_condition_eval(
            Some(&PartialQuotientStream::golden()),
            &psi,
            &phi,
            &DeltaRule::Identity,
            &IndexRule::DoubleExponential,
            5,
            BITS,
        )
        .unwrap();
        for row in &r.rows {
            let t3: BigInt = &row.t * &row.t * &row.t;
            assert_eq!(row.index, t3);
            // t_{i+1} = t_i² < t_i³
            assert!(!row.side_ok);
            assert_eq!(
                row.term,
                Interval::point(Rat::new(BigInt::one(), &row.t * &row.t))
            );
        }
        assert_eq!(r.side_violations, vec![1, 2, 3, 4, 5]);
        let floor = r.omega_floor.unwrap();
        assert!(floor.last().unwrap().lo().is_positive());
    }

    #[test]
    fn kurzweil_validation() {
        assert!(DecayPhi::parse("pow:1,2").unwrap().validate().is_ok());
        assert_eq!(
            DecayPhi::parse("pow:2,2").unwrap().validate(),
            Err(Error::Validation {
                property: "(P2) 0 < n²φ(n) ≤ 1".into(),
                n: b(1)
            })
        );
        assert!(DecayPhi::Table(vec![rat(1, 2), rat(1, 4), rat(1, 9)])
            .validate()
            .is_ok());
        // n φ(n): 1/4 then 1/2
        assert!(matches!(
            DecayPhi::Table(vec![rat(1, 4), rat(1, 4), rat(1, 16)]).validate(),
            Err(Error::Validation { n, .. }) if n == b(2)
        ));
        assert!(DecayPhi::parse("pow:1,1").unwrap().validate().is_err());
        let t = IndexRule::parse("geometric:4").unwrap();
        assert_eq!(t.at(3).unwrap(), b(64));
        assert!(IndexRule::parse("geometric:1").is_err());
        // δ = n², φ = 1/n²: threshold t⁵; with t_i = 2^{2^i} the side condition fails, geometric t as well
        let psi = ApproxSeq::power(rat(1, 1), rat(1, 1)).unwrap();
        let r = kurzweil_condition_eval(
            None,
            &psi,
            &DecayPhi::parse("pow:1,3").unwrap(),
            &DeltaRule::Pow(2),
            &t,
            3,
            BITS,
        )
        .unwrap();
        assert_eq!(r.rows[0].threshold, rat_int(b(4).pow(8)));
        assert!(r.omega_floor.is_none());
    }

    #[test]
    fn arith_stream_runs() {
        let s =
            PartialQuotientStream::rule(b(0), QuotientRule::Arith { c: b(1), d: b(1) }).unwrap();
        let psi = ApproxSeq::khintchine(PhiSeq::Pow(rat(1, 2))).unwrap();
        let r = evaluate_criterion(&s, &psi, 25, BITS).unwrap();
        assert!(r.partial_sums.windows(2).all(|w| w[0].lo() <= w[1].lo()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn block_bounds(period in proptest::collection::vec(1u32..40, 1..6), c in 1i64..20, alpha in 0i64..3) {
            let period = period.into_iter().map(BigInt::from).collect();
            let s = PartialQuotientStream::periodic(b(0), vec![], period).unwrap();
            let psi = ApproxSeq::power(rat(1, c), rat(alpha, 1)).unwrap();
            let r = evaluate_criterion(&s, &psi, 10, BITS).unwrap();
            for t in &r.blocks {
                let len = rat_int(&t.qk1 - &t.qk);
                prop_assert!(t.value.le(&t.dist.scale(&len)) != Some(false));
                let bs = psi.block_sum(&t.qk, &(&t.qk1 - 1), BITS).unwrap();
                prop_assert!(t.value.le(&bs) != Some(false));
            }
            prop_assert!(r.partial_sums.windows(2).all(|w| w[0].lo() <= w[1].lo()));
        }
    }
}
