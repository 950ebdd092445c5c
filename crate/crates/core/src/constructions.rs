//! Tseng's counterexample sequences: for θ outside `Ω^(τ)`, a non-increasing ψ with
//! `Σ ψ(n)^τ = ∞` whose h-sum converges, assembled from a fast-growing subsequence
//! `v_ℓ` of good approximation denominators.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cf_real::{convergent_table, int_json, PartialQuotientStream};
use crate::criterion::{h_sum, refining, DEFAULT_BITS};
use crate::error::{Error, Result};
use crate::interval::{pow_rat, rat_int, Interval, Rat};
use crate::psi::ApproxSeq;

/// Convergents examined before the witness search gives up.
pub const SEARCH_DEPTH: usize = 400;

#[derive(Clone, Debug)]
pub struct TsengWitness {
    pub tau: Rat,
    /// Convergent indices with `v_ℓ = q_{k_ℓ}`.
    pub ks: Vec<usize>,
    /// `v_1, …, v_{L+1}`.
    pub v: Vec<BigInt>,
    /// `u_ℓ = ⌊ℓ^{2τ} v_ℓ^τ⌋` for `ℓ = 1, …, L+1`.
    pub u: Vec<BigInt>,
    /// `ψ = 1/(2(ℓ+1)² v_{ℓ+1})` on `[u_ℓ, u_{ℓ+1})`; the first value also covers `n < u_1`.
    pub psi: ApproxSeq,
}

impl TsengWitness {
    /// Number of blocks `L`.
    pub fn len(&self) -> usize {
        self.v.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, ell: usize) -> Rat {
        block_value(ell, &self.v[ell])
    }

    pub fn to_json(&self) -> Value {
        json!({
            "tau": self.tau.to_string(),
            "k": self.ks,
            "v": self.v.iter().map(int_json).collect::<Vec<_>>(),
            "u": self.u.iter().map(int_json).collect::<Vec<_>>(),
            "psi_values": (1..=self.len()).map(|l| self.value(l).to_string()).collect::<Vec<_>>(),
        })
    }
}

/// `1/(2(ℓ+1)² v_{ℓ+1})`.
fn block_value(ell: usize, v_next: &BigInt) -> Rat {
    let l1 = BigInt::from(ell + 1);
    Rat::new(BigInt::one(), 2 * &l1 * &l1 * v_next)
}

fn tau_parts(tau: &Rat) -> Result<(u32, u32)> {
    if tau < &Rat::one() {
        return Err(Error::invalid("τ must be at least 1"));
    }
    match (tau.numer().to_u32(), tau.denom().to_u32()) {
        (Some(a), Some(b)) if a <= 64 && b <= 64 => Ok((a, b)),
        _ => Err(Error::invalid("τ = a/b needs a, b ≤ 64 for exact search")),
    }
}

/// `u_ℓ = ⌊(ℓ^{2a} v^a)^{1/b}⌋`.
pub fn u_index(ell: usize, v: &BigInt, tau: &Rat) -> Result<BigInt> {
    let (a, b) = tau_parts(tau)?;
    let inner = BigInt::from(ell).pow(2 * a) * v.pow(a);
    Ok(inner.nth_root(b))
}

/// `q_{k+1} ≥ 2 ℓ^{2τ+2} q_k^τ`, so that `‖q_kθ‖ < 1/q_{k+1}` meets the step bound.
fn step_ok(ell: usize, qk: &BigInt, qk1: &BigInt, a: u32, b: u32) -> bool {
    let lhs = BigInt::from(2).pow(b) * BigInt::from(ell).pow(2 * a + 2 * b) * qk.pow(a);
    lhs <= qk1.pow(b)
}

/// `1/(2 ℓ^{2τ+2} v^τ)`, enclosed.
fn step_bound(ell: usize, v: &BigInt, tau: &Rat, bits: u32) -> Interval {
    let l = Interval::from_int(&BigInt::from(ell));
    let lt = pow_rat(
        &l,
        &(tau * Rat::from_integer(2.into()) + Rat::from_integer(2.into())),
        bits,
    );
    let vt = pow_rat(&Interval::from_int(v), tau, bits);
    lt.mul(&vt).scale(&Rat::from_integer(2.into())).recip()
}

/// Greedy search over convergent denominators for `v_1, …, v_{L+1}`.
pub fn find_witness_sequence(
    stream: &PartialQuotientStream,
    tau: &Rat,
    l: usize,
) -> Result<TsengWitness> {
    let (a, b) = tau_parts(tau)?;
    if l == 0 {
        return Err(Error::invalid("witness length must be positive"));
    }
    let limit = stream.depth().map_or(SEARCH_DEPTH, |d| d.min(SEARCH_DEPTH));
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    let mut v: Vec<BigInt> = Vec::new();
    let mut ks = Vec::new();
    for k in 0..limit {
        let qk1 = stream.quotient(k + 1)? * &q + &q_prev;
        let ell = v.len() + 1;
        let spaced = v.last().map_or(true, |last| q >= 2 * last);
        if spaced && step_ok(ell, &q, &qk1, a, b) {
            v.push(q.clone());
            ks.push(k);
            if v.len() == l + 1 {
                break;
            }
        }
        q_prev = std::mem::replace(&mut q, qk1);
    }
    if v.len() < l + 1 {
        return Err(Error::WitnessNotFound(format!(
            "found {} of {} terms v_ℓ among the first {limit} convergents",
            v.len(),
            l + 1
        )));
    }
    // interval confirmation of ‖v_ℓθ‖ ≤ 1/(2ℓ^{2τ+2}v_ℓ^τ)
    let table = convergent_table(stream, ks[l] + 2, DEFAULT_BITS)?;
    for (i, &k) in ks.iter().enumerate() {
        let ok = refining(DEFAULT_BITS, |bits| {
            let norm = crate::cf_real::refine(stream, &table[k], bits).norm();
            norm.le(&step_bound(i + 1, &v[i], tau, bits))
                .ok_or_else(|| Error::undecided("witness step bound"))
        })?;
        if !ok {
            return Err(Error::Internal(format!(
                "convergent q_{k} passed the integer test but not the interval check"
            )));
        }
    }
    let u: Vec<BigInt> = (0..=l)
        .map(|i| u_index(i + 1, &v[i], tau))
        .collect::<Result<_>>()?;
    let mut starts = u[..l].to_vec();
    starts[0] = BigInt::one();
    let values = (1..=l).map(|ell| block_value(ell, &v[ell])).collect();
    let psi = ApproxSeq::piecewise(starts, values, Some(u[l].clone()))?;
    Ok(TsengWitness {
        tau: tau.clone(),
        ks,
        v,
        u,
        psi,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCheck {
    pub ell: usize,
    pub u: BigInt,
    pub u_next: BigInt,
    /// Lower bound for `Σ_{u_ℓ ≤ n < u_{ℓ+1}} ψ(n)^τ`.
    pub tau_sum: Rat,
    /// `v_{ℓ+1} ψ(u_ℓ)`, bounding the h-sum below `v_{ℓ+1}`.
    pub split_head: Rat,
    /// Upper bound for `u_{ℓ+1}‖v_{ℓ+1}θ‖`, bounding the rest.
    pub split_tail: Rat,
    /// Exact enclosure of the h-sum over the block, upper end.
    pub h_sum: Rat,
    /// `1/(ℓ+1)²`.
    pub h_bound: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub blocks: Vec<BlockCheck>,
    /// `min_ℓ` of the block τ-sums.
    pub c: Rat,
    /// Upper bound of `Σ_{n < u_{L+1}} h(n)`, including the stretch below `u_1`.
    pub h_total: Rat,
    /// Lower bound of `Σ_{n < u_{L+1}} ψ(n)^τ`.
    pub tau_total: Rat,
}

impl ValidationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "c": self.c.to_string(),
            "h_total": self.h_total.to_string(),
            "tau_total": self.tau_total.to_string(),
            "blocks": self.blocks.iter().map(|b| json!({
                "l": b.ell,
                "u": int_json(&b.u),
                "u_next": int_json(&b.u_next),
                "tau_sum": b.tau_sum.to_string(),
                "split_head": b.split_head.to_string(),
                "split_tail": b.split_tail.to_string(),
                "h_sum": b.h_sum.to_string(),
                "h_bound": b.h_bound.to_string(),
            })).collect::<Vec<_>>(),
        })
    }
}

fn bug(what: String) -> Error {
    Error::Internal(format!("construction check failed: {what}"))
}

/// Check both block inequalities of the construction for every ℓ.
pub fn validate_counterexample(
    w: &TsengWitness,
    stream: &PartialQuotientStream,
) -> Result<ValidationReport> {
    let l = w.len();
    let (a, b) = tau_parts(&w.tau)?;
    for ell in 1..=l {
        if w.v[ell] < 2 * &w.v[ell - 1] {
            return Err(bug(format!("v_{} < 2v_{ell}", ell + 1)));
        }
        if w.u[ell] <= w.u[ell - 1] {
            return Err(bug(format!("u_{} ≤ u_{ell}", ell + 1)));
        }
        if ell > 1 && w.value(ell) >= w.value(ell - 1) {
            return Err(bug(format!("ψ increases at block {ell}")));
        }
    }
    let end = &w.u[l];
    let mut count = w.ks[l] + 2;
    let table = loop {
        let t = convergent_table(stream, count, DEFAULT_BITS)?;
        if t.last().and_then(|s| s.q_next()).is_some_and(|q| &q > end) {
            break t;
        }
        count += 4;
    };
    let blocks: Vec<BlockCheck> = (1..=l)
        .into_par_iter()
        .map(|ell| -> Result<BlockCheck> {
            let (u0, u1) = (&w.u[ell - 1], &w.u[ell]);
            let v1 = &w.v[ell];
            let val = w.value(ell);
            let h_bound = Rat::new(BigInt::one(), BigInt::from((ell + 1) * (ell + 1)));
            let half = &h_bound / rat_int(2);
            let len = rat_int(u1 - u0);
            let tau_sum = pow_rat(&Interval::point(val.clone()), &w.tau, DEFAULT_BITS)
                .scale(&len)
                .lo()
                .clone();
            let split_head = rat_int(v1.clone()) * &val;
            if split_head > half {
                return Err(bug(format!("v_{}ψ(u_{ell}) > 1/(2(ℓ+1)²)", ell + 1)));
            }
            // u_{ℓ+1} ≤ (ℓ+1)^{2τ} v^τ exactly, so u_{ℓ+1}/(2(ℓ+1)^{2τ+2}v^τ) ≤ 1/(2(ℓ+1)²)
            let lhs = u1.pow(b) * BigInt::from(ell + 1).pow(2 * b);
            let rhs = BigInt::from(ell + 1).pow(2 * a + 2 * b) * v1.pow(a);
            if lhs > rhs {
                return Err(bug(format!("u_{} exceeds (ℓ+1)^{{2τ}}v^τ", ell + 1)));
            }
            let k = w.ks[ell];
            let split_tail = refining(DEFAULT_BITS, |bits| {
                let norm = crate::cf_real::refine(stream, &table[k], bits).norm();
                let t = norm.scale(&rat_int(u1.clone()));
                match t.le(&Interval::point(half.clone())) {
                    Some(true) => Ok(t.hi().clone()),
                    Some(false) => Err(bug(format!("u_{}‖v_{}θ‖ > 1/(2(ℓ+1)²)", ell + 1, ell + 1))),
                    None => Err(Error::undecided("split tail")),
                }
            })?;
            let h = refining(DEFAULT_BITS, |bits| {
                let s = h_sum(stream, &table, &w.psi, u0, &(u1 - 1), bits)?;
                match s.le(&Interval::point(h_bound.clone())) {
                    Some(true) => Ok(s.hi().clone()),
                    Some(false) => Err(bug(format!("h-sum over block {ell} exceeds 1/(ℓ+1)²"))),
                    None => Err(Error::undecided("block h-sum")),
                }
            })?;
            Ok(BlockCheck {
                ell,
                u: u0.clone(),
                u_next: u1.clone(),
                tau_sum,
                split_head,
                split_tail,
                h_sum: h,
                h_bound,
            })
        })
        .collect::<Result<_>>()?;
    let c = blocks
        .iter()
        .map(|b| b.tau_sum.clone())
        .min()
        .expect("at least one block");
    let head = if w.u[0] > BigInt::one() {
        h_sum(
            stream,
            &table,
            &w.psi,
            &BigInt::one(),
            &(&w.u[0] - 1),
            DEFAULT_BITS,
        )?
        .hi()
        .clone()
    } else {
        Rat::zero()
    };
    let h_total = blocks.iter().fold(head, |acc, b| acc + &b.h_sum);
    let tau_total = blocks.iter().fold(Rat::zero(), |acc, b| acc + &b.tau_sum);
    if !c.is_positive() {
        return Err(bug("τ-sum lower bound is not positive".into()));
    }
    Ok(ValidationReport {
        blocks,
        c,
        h_total,
        tau_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criterion::evaluate_criterion;
    use crate::interval::rat;

    fn doubling() -> PartialQuotientStream {
        PartialQuotientStream::doubling()
    }

    #[test]
    fn doubling_stream_witness() {
        let s = doubling();
        let w = find_witness_sequence(&s, &Rat::one(), 5).unwrap();
        // a_{k+1} = 2^{k+1} ≥ 2ℓ⁴ together with q_k ≥ 2v_{ℓ-1}
        assert_eq!(w.ks, vec![0, 4, 7, 8, 10, 11]);
        assert_eq!(w.v[0], BigInt::one());
        let mut want = Vec::new();
        let mut k = 0u32;
        for ell in 1..=6u64 {
            while (1u64 << (k + 1)) < 2 * ell.pow(4) {
                k += 1;
            }
            want.push(k as usize);
            k += 1;
        }
        assert_eq!(w.ks, want);
        assert_eq!(w.u[0], BigInt::one());
        assert_eq!(w.u[1], BigInt::from(4) * &w.v[1]);
        let back = ApproxSeq::piecewise_from_json(&w.to_json()).unwrap();
        assert_eq!(back.pieces(), w.psi.pieces());
    }

    #[test]
    fn golden_has_no_witness() {
        let e =
            find_witness_sequence(&PartialQuotientStream::golden(), &Rat::one(), 2).unwrap_err();
        assert!(matches!(e, Error::WitnessNotFound(_)));
    }

    #[test]
    fn first_block_is_first_doubling_step() {
        // ℓ = 1, τ = 1: v_1 = q_k for the first k with q_{k+1} ≥ 2q_k
        for list in [
            vec![1, 1, 1, 2, 9, 200, 5000, 90000],
            vec![3, 1, 40, 5000, 1, 90000],
            vec![1, 2, 40, 5000, 1, 90000, 7],
        ] {
            let s = PartialQuotientStream::explicit(
                BigInt::zero(),
                list.iter().map(|&a| BigInt::from(a)).collect(),
            )
            .unwrap();
            let (mut q0, mut q1, mut want) = (0u64, 1u64, None);
            for (k, &a) in list.iter().enumerate() {
                let q2 = a * q1 + q0;
                if q2 >= 2 * q1 && want.is_none() {
                    want = Some(k);
                }
                (q0, q1) = (q1, q2);
            }
            let w = find_witness_sequence(&s, &Rat::one(), 1).unwrap();
            assert_eq!(Some(w.ks[0]), want, "{list:?}");
        }
    }

    #[test]
    fn counterexample_validates() {
        let s = doubling();
        let w = find_witness_sequence(&s, &Rat::one(), 5).unwrap();
        let r = validate_counterexample(&w, &s).unwrap();
        for b in &r.blocks {
            let l1 = BigInt::from(b.ell + 1);
            assert_eq!(b.split_head, Rat::new(BigInt::one(), 2 * &l1 * &l1));
            assert!(b.h_sum <= b.h_bound);
        }
        let b2 = &r.blocks[1];
        assert_eq!(
            b2.tau_sum,
            rat_int(&b2.u_next - &b2.u) * Rat::new(BigInt::one(), 18 * &w.v[2])
        );
        assert!(r.tau_total >= &r.c * rat_int(5));
        let bound: Rat = (1..=5).map(|l: i64| rat(1, (l + 1) * (l + 1))).sum();
        let head = &r.h_total - r.blocks.iter().fold(Rat::zero(), |a, b| a + &b.h_sum);
        assert!(r.h_total <= bound + head);
        let crit = evaluate_criterion(&s, &w.psi, 40, DEFAULT_BITS).unwrap();
        let last = crit.partial_sums.last().unwrap();
        assert!(last.hi() <= &r.h_total);
    }

    #[test]
    fn rational_tau() {
        // a_{k+1} ≈ q_k²: far outside Ω^(3/2)
        let (mut list, mut q0, mut q1) = (Vec::new(), BigInt::zero(), BigInt::one());
        for _ in 0..9 {
            let a = &q1 * &q1 + 2;
            let q2 = &a * &q1 + &q0;
            list.push(a);
            (q0, q1) = (q1, q2);
        }
        let s = PartialQuotientStream::explicit(BigInt::zero(), list).unwrap();
        let tau = rat(3, 2);
        let w = find_witness_sequence(&s, &tau, 3).unwrap();
        for (i, v) in w.v.iter().enumerate() {
            let u = &w.u[i];
            let l = BigInt::from(i + 1);
            // u^2 ≤ ℓ^6 v^3 < (u+1)^2
            assert!(u.pow(2) <= l.pow(6) * v.pow(3));
            assert!((u + BigInt::one()).pow(2) > l.pow(6) * v.pow(3));
        }
        validate_counterexample(&w, &s).unwrap();
        assert!(tau_parts(&rat(1, 2)).is_err());
    }
}
