//! Finite unions of half-open arcs on ℝ/ℤ with exact rational endpoints, and the
//! shrinking-target sets built from them.
//!
//! θ enters as a rational surrogate `θ̃` with `|θ − θ̃| ≤ budget`. The point `nθ̃`
//! is then off by at most `n · budget`, and any construction whose combinatorics
//! could change within that budget is refused.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::cf_real::{enclose_theta, ConvergentState, PartialQuotientStream};
use crate::error::{Error, Result};
use crate::interval::{rat_int, Rat};
use crate::psi::ApproxSeq;

/// Default limit on the number of arcs in one construction.
pub const DEFAULT_CAP: usize = 100_000;

fn frac(x: &Rat) -> Rat {
    x - x.floor()
}

/// A finite union of disjoint half-open arcs `[l, r) ⊆ [0, 1)`, kept sorted and
/// merged so that equal sets have equal representations.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ArcUnion {
    arcs: Vec<(Rat, Rat)>,
}

impl ArcUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        ArcUnion {
            arcs: vec![(Rat::zero(), Rat::one())],
        }
    }

    /// Union of arcs `[l, r)` given on the real line, `l ≤ r`; arcs of length
    /// at least 1 cover the circle.
    pub fn from_arcs(items: impl IntoIterator<Item = (Rat, Rat)>) -> Self {
        let one = Rat::one();
        let mut pieces = Vec::new();
        for (l, r) in items {
            assert!(l <= r, "arc endpoints out of order");
            if l == r {
                continue;
            }
            if &r - &l >= one {
                return Self::full();
            }
            let l0 = frac(&l);
            let r0 = &l0 + (&r - &l);
            if r0 > one {
                pieces.push((l0, one.clone()));
                pieces.push((Rat::zero(), r0 - &one));
            } else {
                pieces.push((l0, r0));
            }
        }
        ArcUnion {
            arcs: merge(pieces),
        }
    }

    /// `[c − r, c + r)` on the circle.
    pub fn ball(center: &Rat, radius: &Rat) -> Self {
        Self::from_arcs([(center - radius, center + radius)])
    }

    pub fn balls<'a>(items: impl IntoIterator<Item = (Rat, &'a Rat)>) -> Self {
        Self::from_arcs(items.into_iter().map(|(c, r)| (&c - r, &c + r)))
    }

    pub fn arcs(&self) -> &[(Rat, Rat)] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn measure(&self) -> Rat {
        self.arcs
            .iter()
            .fold(Rat::zero(), |acc, (l, r)| acc + (r - l))
    }

    pub fn union(&self, other: &ArcUnion) -> ArcUnion {
        ArcUnion {
            arcs: merge(self.arcs.iter().chain(&other.arcs).cloned().collect()),
        }
    }

    pub fn intersection(&self, other: &ArcUnion) -> ArcUnion {
        let (a, b) = (&self.arcs, &other.arcs);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = (&a[i].0).max(&b[j].0);
            let hi = (&a[i].1).min(&b[j].1);
            if lo < hi {
                out.push((lo.clone(), hi.clone()));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        ArcUnion { arcs: out }
    }

    pub fn is_subset_of(&self, other: &ArcUnion) -> bool {
        &self.intersection(other) == self
    }

    pub fn rotate(&self, t: &Rat) -> ArcUnion {
        Self::from_arcs(self.arcs.iter().map(|(l, r)| (l + t, r + t)))
    }

    pub fn contains(&self, x: &Rat) -> bool {
        let x = frac(x);
        let i = self.arcs.partition_point(|(l, _)| l <= &x);
        i > 0 && x < self.arcs[i - 1].1
    }

    /// Points of `[0, 1)` where membership changes. After merging, the only point
    /// met twice is 0 when arcs meet across it, and that one is interior.
    pub fn boundary(&self) -> Vec<Rat> {
        let mut pts: Vec<Rat> = self
            .arcs
            .iter()
            .flat_map(|(l, r)| [l.clone(), frac(r)])
            .collect();
        pts.sort();
        let mut out = Vec::new();
        let mut i = 0;
        while i < pts.len() {
            if i + 1 < pts.len() && pts[i] == pts[i + 1] {
                i += 2;
            } else {
                out.push(pts[i].clone());
                i += 1;
            }
        }
        out
    }

    /// `lo_num,lo_den,hi_num,hi_den` per arc.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lo_num,lo_den,hi_num,hi_den\n");
        for (l, r) in &self.arcs {
            out += &format!("{},{},{},{}\n", l.numer(), l.denom(), r.numer(), r.denom());
        }
        out
    }
}

fn merge(mut v: Vec<(Rat, Rat)>) -> Vec<(Rat, Rat)> {
    v.sort();
    let mut out: Vec<(Rat, Rat)> = Vec::with_capacity(v.len());
    for (l, r) in v {
        match out.last_mut() {
            Some(last) if l <= last.1 => {
                if r > last.1 {
                    last.1 = r;
                }
            }
            _ => out.push((l, r)),
        }
    }
    out
}

/// `μ(u₁ ∩ u₂)`.
pub fn measure_intersection(u1: &ArcUnion, u2: &ArcUnion) -> Rat {
    u1.intersection(u2).measure()
}

/// Rational stand-in for θ with `|θ − value| ≤ budget`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaSurrogate {
    pub value: Rat,
    pub budget: Rat,
}

impl ThetaSurrogate {
    pub fn from_stream(stream: &PartialQuotientStream, width: &Rat) -> Result<Self> {
        let e = enclose_theta(stream, width)?;
        Ok(ThetaSurrogate {
            value: e.mid(),
            budget: e.width(),
        })
    }

    /// A rational rotation, known exactly.
    pub fn exact(value: Rat) -> Self {
        ThetaSurrogate {
            value,
            budget: Rat::zero(),
        }
    }

    /// `nθ̃ mod 1`.
    pub fn point(&self, n: &BigInt) -> Rat {
        frac(&(&self.value * rat_int(n.clone())))
    }

    /// `‖nθ̃‖`.
    pub fn norm(&self, n: &BigInt) -> Rat {
        let x = self.point(n);
        let y = Rat::one() - &x;
        x.min(y)
    }

    fn error(&self, n: &BigInt) -> Rat {
        &self.budget * rat_int(n.abs())
    }
}

/// Refuse when two distinct endpoints are closer than `tol`.
fn check_decided(mut endpoints: Vec<Rat>, tol: &Rat) -> Result<()> {
    if tol.is_zero() || endpoints.len() < 2 {
        return Ok(());
    }
    endpoints.iter_mut().for_each(|e| *e = frac(e));
    endpoints.sort();
    let wrap = endpoints[0].clone() + Rat::one() - endpoints.last().expect("non-empty");
    let close = endpoints
        .windows(2)
        .map(|w| &w[1] - &w[0])
        .chain(std::iter::once(wrap))
        .any(|d| d.is_positive() && &d <= tol);
    if close {
        return Err(Error::undecided(
            "arc endpoints closer than the θ error budget",
        ));
    }
    Ok(())
}

fn psi_rat(seq: &ApproxSeq, n: &BigInt) -> Result<Rat> {
    let v = seq.eval(n, 64)?;
    v.as_point().cloned().ok_or_else(|| {
        Error::Precision(format!(
            "set constructions need rational ψ; ψ({n}) is irrational"
        ))
    })
}

/// `h̃(m) = min(ψ(m), ‖q_j θ̃‖)` for the block `q_j ≤ m < q_{j+1}`.
pub fn h_surrogate(
    theta: &ThetaSurrogate,
    table: &[ConvergentState],
    seq: &ApproxSeq,
    m: &BigInt,
) -> Result<Rat> {
    let j = table.partition_point(|s| &s.q <= m);
    if j == 0 {
        return Err(Error::invalid(format!("h is indexed from 1, got {m}")));
    }
    let s = &table[j - 1];
    match s.q_next() {
        Some(q1) if &q1 > m => {}
        _ => {
            return Err(Error::DepthExceeded {
                needed: j + 1,
                available: table.len(),
            })
        }
    }
    Ok(psi_rat(seq, m)?.min(theta.norm(&s.q)))
}

fn cap_check(count: &BigInt, cap: usize) -> Result<()> {
    if count > &BigInt::from(cap) {
        return Err(Error::CapExceeded {
            needed: count.clone(),
            cap,
        });
    }
    Ok(())
}

fn block_ends(table: &[ConvergentState], k: usize) -> Result<(BigInt, BigInt)> {
    let s = table.get(k).ok_or(Error::DepthExceeded {
        needed: k,
        available: table.len(),
    })?;
    let q1 = s.q_next().ok_or(Error::DepthExceeded {
        needed: k + 1,
        available: table.len(),
    })?;
    Ok((s.q.clone(), q1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EkSet {
    /// The block index `k`; the set is `E_{k+1}`.
    pub k: usize,
    pub union: ArcUnion,
    pub measure: Rat,
    /// `2 q_k ψ(q_k) + Σ_{n=2q_k}^{q_{k+1}−1} min(2ψ(n), ‖q_kθ̃‖)`.
    pub bound: Rat,
}

/// `E_{k+1} = ⋃_{q_k ≤ n < q_{k+1}} B(nθ̃, ψ(n))`.
pub fn build_ek(
    theta: &ThetaSurrogate,
    table: &[ConvergentState],
    seq: &ApproxSeq,
    k: usize,
    cap: usize,
) -> Result<EkSet> {
    let (qk, qk1) = block_ends(table, k)?;
    cap_check(&(&qk1 - &qk), cap)?;
    let mut balls = Vec::new();
    let mut ends = Vec::new();
    let mut n = qk.clone();
    while n < qk1 {
        let c = theta.point(&n);
        let r = psi_rat(seq, &n)?;
        ends.push(&c - &r);
        ends.push(&c + &r);
        balls.push((c, r));
        n += 1u32;
    }
    check_decided(ends, &(theta.error(&qk1) * rat_int(2)))?;
    let union = ArcUnion::balls(balls.iter().map(|(c, r)| (c.clone(), r)));

    let norm = theta.norm(&qk);
    let two = rat_int(2);
    let mut bound = &two * rat_int(qk.clone()) * psi_rat(seq, &qk)?;
    let mut n = &qk * 2;
    while n < qk1 {
        bound += (&two * psi_rat(seq, &n)?).min(norm.clone());
        n += 1u32;
    }
    Ok(EkSet {
        k,
        measure: union.measure(),
        union,
        bound,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GkFamily {
    pub k: usize,
    pub qk: BigInt,
    pub qk1: BigInt,
    pub a_next: BigInt,
    /// `h̃(q_{k+1} − i q_k) / 2` for `0 ≤ i < a_{k+1}`.
    pub radii: Vec<Rat>,
    pub subs: Vec<ArcUnion>,
    pub union: ArcUnion,
    pub arc_count: usize,
    pub measure: Rat,
}

/// `G_k = ⋃_i ⋃_{q_{k+1}−(i+1)q_k < n ≤ q_{k+1}−i q_k} B(nθ̃, h̃(q_{k+1} − i q_k)/2)`.
/// The table must reach `k + 1`.
pub fn build_gk(
    theta: &ThetaSurrogate,
    table: &[ConvergentState],
    seq: &ApproxSeq,
    k: usize,
    cap: usize,
) -> Result<GkFamily> {
    let (qk, qk1) = block_ends(table, k)?;
    let a = table[k]
        .next_quotient
        .clone()
        .expect("block_ends checked a_{k+1}");
    cap_check(&qk1, cap)?;
    cap_check(&(&a * &qk), cap)?;
    let two = rat_int(2);
    let mut radii = Vec::new();
    let mut subs = Vec::new();
    let mut all = Vec::new();
    let mut ends = Vec::new();
    let mut expected = Rat::zero();
    let mut i = BigInt::zero();
    while i < a {
        let m = &qk1 - &i * &qk;
        let r = h_surrogate(theta, table, seq, &m)? / &two;
        let mut centers = Vec::new();
        let mut n = &m - &qk + 1;
        while n <= m {
            let c = theta.point(&n);
            ends.push(&c - &r);
            ends.push(&c + &r);
            centers.push(c);
            n += 1u32;
        }
        let sub = ArcUnion::balls(centers.iter().map(|c| (c.clone(), &r)));
        let want = rat_int(qk.clone()) * &two * &r;
        if sub.measure() != want {
            return Err(Error::Internal(format!("balls in G_{{{k},{i}}} overlap")));
        }
        expected += want;
        all.extend(centers.into_iter().map(|c| (c, r.clone())));
        subs.push(sub);
        radii.push(r);
        i += 1u32;
    }
    check_decided(ends, &(theta.error(&qk1) * rat_int(4)))?;
    let union = ArcUnion::balls(all.iter().map(|(c, r)| (c.clone(), r)));
    let measure = union.measure();
    if measure != expected {
        return Err(Error::Internal(format!(
            "balls in G_{k} overlap: μ = {measure}, Σ diameters = {expected}"
        )));
    }
    Ok(GkFamily {
        k,
        qk,
        qk1,
        a_next: a,
        radii,
        subs,
        arc_count: all.len(),
        union,
        measure,
    })
}

/// Whether `G_k ⊆ ⋃_{q_{k−1} < n ≤ q_{k+1}} B(nθ̃, ψ(n))`.
pub fn gk_containment(
    theta: &ThetaSurrogate,
    table: &[ConvergentState],
    seq: &ApproxSeq,
    fam: &GkFamily,
) -> Result<bool> {
    let lo = table[fam.k].q_prev.clone();
    let mut balls = Vec::new();
    let mut n = &lo + 1;
    while n <= fam.qk1 {
        balls.push((theta.point(&n), psi_rat(seq, &n)?));
        n += 1u32;
    }
    let cover = ArcUnion::balls(balls.iter().map(|(c, r)| (c.clone(), r)));
    Ok(fam.union.is_subset_of(&cover))
}

/// `(min gap among {nθ̃ : 1 ≤ n ≤ q_{k+1}}, ‖q_kθ̃‖)`.
pub fn orbit_separation(
    theta: &ThetaSurrogate,
    table: &[ConvergentState],
    k: usize,
    cap: usize,
) -> Result<(Rat, Rat)> {
    let (qk, qk1) = block_ends(table, k)?;
    cap_check(&qk1, cap)?;
    let n_max = qk1.to_u64().expect("capped");
    let mut pts: Vec<Rat> = (1..=n_max).map(|n| theta.point(&BigInt::from(n))).collect();
    pts.sort();
    let wrap = &pts[0] + Rat::one() - pts.last().expect("non-empty");
    let gap = pts
        .windows(2)
        .map(|w| &w[1] - &w[0])
        .chain(std::iter::once(wrap))
        .min()
        .expect("non-empty");
    Ok((gap, theta.norm(&qk)))
}

/// Sorted orbit points `nθ̃ mod 1`, `0 ≤ n < q`.
#[derive(Clone, Debug)]
pub struct OrbitIndex {
    points: Vec<(Rat, u64)>,
    budget: Rat,
    q: u64,
}

impl OrbitIndex {
    pub fn new(theta: &ThetaSurrogate, q: u64, cap: usize) -> Result<Self> {
        cap_check(&BigInt::from(q), cap)?;
        let mut points: Vec<(Rat, u64)> =
            (0..q).map(|n| (theta.point(&BigInt::from(n)), n)).collect();
        points.sort();
        Ok(OrbitIndex {
            points,
            budget: theta.budget.clone(),
            q,
        })
    }

    /// `#{0 ≤ n < q : nθ̃ ∈ u}`, refusing if an orbit point lies within its error
    /// budget of a boundary point of `u`.
    pub fn count(&self, u: &ArcUnion) -> Result<u64> {
        if !self.budget.is_zero() {
            let len = self.points.len();
            for b in u.boundary() {
                let i = self.points.partition_point(|(x, _)| x < &b);
                for j in [i + len - 1, i, i + 1] {
                    let (x, n) = &self.points[j % len];
                    let d = (x - &b).abs();
                    let d = d.clone().min(Rat::one() - d);
                    if *n > 0 && d <= &self.budget * rat_int(*n) {
                        return Err(Error::undecided(format!(
                            "orbit point {n}θ within budget of arc boundary"
                        )));
                    }
                }
            }
        }
        let mut c = 0u64;
        for (l, r) in u.arcs() {
            let a = self.points.partition_point(|(x, _)| x < l);
            let b = self.points.partition_point(|(x, _)| x < r);
            c += (b - a) as u64;
        }
        Ok(c)
    }

    pub fn q(&self) -> u64 {
        self.q
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KoksmaCount {
    pub count: u64,
    /// `q μ(I) + 2`.
    pub bound: Rat,
    pub holds: bool,
}

/// `#{0 ≤ n < q : nθ ∈ I}` against `q μ(I) + 2`, for a single arc `I`.
pub fn denjoy_koksma_count(
    theta: &ThetaSurrogate,
    q: u64,
    arc: &ArcUnion,
    cap: usize,
) -> Result<KoksmaCount> {
    let single = arc.arcs().len() <= 1
        || (arc.arcs().len() == 2 && arc.arcs()[0].0.is_zero() && arc.arcs()[1].1.is_one());
    if !single {
        return Err(Error::invalid("Denjoy–Koksma counting takes a single arc"));
    }
    let count = OrbitIndex::new(theta, q, cap)?.count(arc)?;
    let bound = rat_int(q) * arc.measure() + rat_int(2);
    Ok(KoksmaCount {
        count,
        holds: rat_int(count) <= bound,
        bound,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuasiIndependence {
    pub k: usize,
    pub l: usize,
    pub intersection: Rat,
    pub product: Rat,
    /// `μ(G_k)μ(G_ℓ) + 3 q_{ℓ+1}/q_k · μ(G_k)`.
    pub intermediate_bound: Rat,
    pub intermediate_holds: bool,
    /// Whether `μ(G_k ∩ G_ℓ) ≤ μ(G_k)μ(G_ℓ) + 6·2^{−(k−ℓ)/2} μ(G_k)`, decided exactly.
    pub holds: bool,
    /// `6·2^{−(k−ℓ)/2} μ(G_k)` as a float, for reporting slack.
    pub excess_allowance: f64,
}

pub fn quasi_independence_check(fk: &GkFamily, fl: &GkFamily) -> Result<QuasiIndependence> {
    if fl.k >= fk.k {
        return Err(Error::invalid("quasi-independence compares ℓ < k"));
    }
    let inter = measure_intersection(&fk.union, &fl.union);
    let product = &fk.measure * &fl.measure;
    let intermediate_bound = &product + Rat::new(3 * &fl.qk1, fk.qk.clone()) * &fk.measure;
    let excess = &inter - &product;
    let d = (fk.k - fl.k) as u64;
    // excess ≤ 6 μ / 2^{d/2}  ⇔  excess ≤ 0 or excess² 2^d ≤ 36 μ²
    let holds = !excess.is_positive()
        || &excess * &excess * rat_int(BigInt::one() << d)
            <= rat_int(36) * &fk.measure * &fk.measure;
    let excess_allowance =
        6.0 * fk.measure.to_f64().unwrap_or(f64::NAN) / 2f64.powf(d as f64 / 2.0);
    Ok(QuasiIndependence {
        k: fk.k,
        l: fl.k,
        intermediate_holds: inter <= intermediate_bound,
        intersection: inter,
        product,
        intermediate_bound,
        holds,
        excess_allowance,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lemma24Report {
    pub k_max: usize,
    /// `Σ_{n=q_k}^{q_{k+1}−1} h̃(n)` per block.
    pub block_sums: Vec<Rat>,
    pub gk_measures: Vec<Rat>,
    /// `q_K h̃(q_{K+1})`.
    pub boundary_term: Rat,
    pub lhs: Rat,
    pub rhs: Rat,
    pub holds: bool,
}

/// `Σ_{k≤K} Σ_{q_k ≤ n < q_{k+1}} h̃(n) + q_K h̃(q_{K+1}) ≤ Σ_{k≤K} μ(G_k)`.
/// The table must reach `K + 1`.
pub fn lemma24_inequality_check(
    theta: &ThetaSurrogate,
    table: &[ConvergentState],
    seq: &ApproxSeq,
    k_max: usize,
    cap: usize,
) -> Result<Lemma24Report> {
    let mut block_sums = Vec::new();
    let mut gk_measures = Vec::new();
    for k in 0..=k_max {
        let (qk, qk1) = block_ends(table, k)?;
        cap_check(&(&qk1 - &qk), cap)?;
        let norm = theta.norm(&qk);
        let mut s = Rat::zero();
        let mut n = qk.clone();
        while n < qk1 {
            s += psi_rat(seq, &n)?.min(norm.clone());
            n += 1u32;
        }
        block_sums.push(s);
        gk_measures.push(build_gk(theta, table, seq, k, cap)?.measure);
    }
    let (qk, qk1) = block_ends(table, k_max)?;
    let boundary_term = rat_int(qk) * h_surrogate(theta, table, seq, &qk1)?;
    let lhs = block_sums.iter().fold(boundary_term.clone(), |a, b| a + b);
    let rhs = gk_measures.iter().fold(Rat::zero(), |a, b| a + b);
    Ok(Lemma24Report {
        k_max,
        holds: lhs <= rhs,
        block_sums,
        gk_measures,
        boundary_term,
        lhs,
        rhs,
    })
}
