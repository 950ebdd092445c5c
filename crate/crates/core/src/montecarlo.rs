//! Sampling the targets `s` hit by `‖nθ − s‖ < ψ(n)` over finite windows.
//!
//! Orbit points live in 128-bit fixed point: `x_n = n·T mod 2^128` exactly, with
//! `|nθ − x_n/2^128| ≤ n·ε` for the tracked per-step error `ε`. Each decision is
//! three-valued; a hit within `2nε` of the boundary is counted as ambiguous.
//!
//! Two engines produce the same kind of report. Short windows are scanned term by
//! term. On ranges where the threshold is constant (piecewise ψ), or bounded by its
//! values at the range ends, hits are counted exactly with floor sums.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cf_real::{enclose_theta, PartialQuotientStream, RealEnclosure};
use crate::circle_sets::{ArcUnion, ThetaSurrogate};
use crate::error::{Error, Result};
use crate::interval::{ceil_scaled, floor_scaled, pow2, rat_int, Interval, Rat};
use crate::psi::ApproxSeq;

/// Fixed-point resolution in bits.
pub const FRAC_BITS: u64 = 128;
/// Longest window scanned term by term; longer ones use block counting.
pub const SCAN_LIMIT: u64 = 10_000_000;
/// Terms per shared threshold chunk in the scan engine.
const CHUNK: u64 = 1 << 16;
/// The orbit error `n·ε` must stay below this many units at the window end.
const MAX_ERROR_UNITS: u128 = 1 << 32;
const PSI_BITS: u32 = 192;

/// Resolution of the block engine, whose counts are exact in big integers.
pub const WIDE_BITS: u64 = 256;

/// θ in fixed point: `|θ − t/2^128| ≤ eps/2^128`, and the same at `2^-256` in `wide_t`, `wide_eps`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedTheta {
    pub t: u128,
    pub eps: u128,
    pub wide_t: BigInt,
    pub wide_eps: BigInt,
}

fn to_u128_clamped(n: &BigInt) -> u128 {
    if n.sign() == num_bigint::Sign::Minus {
        0
    } else {
        n.to_u128().unwrap_or(u128::MAX)
    }
}

/// `(t, eps)` with `[lo, hi] ⊆ [t, t + eps]·2^-bits`.
fn fixed_point(lo: &Rat, hi: &Rat, bits: u64) -> (BigInt, BigInt) {
    let t = floor_scaled(lo, bits);
    let t_rat = Rat::new(t.clone(), pow2(bits));
    let eps = ceil_scaled(&(hi - t_rat), bits).max(BigInt::one());
    (t % pow2(bits), eps)
}

impl FixedTheta {
    pub fn from_stream(stream: &PartialQuotientStream, n_hi: u64) -> Result<Self> {
        let bits = WIDE_BITS + 64 - n_hi.leading_zeros() as u64 + 4;
        let e = enclose_theta(stream, &Rat::new(BigInt::one(), pow2(bits)))?;
        Self::from_enclosure(&e, n_hi)
    }

    pub fn from_enclosure(e: &RealEnclosure, n_hi: u64) -> Result<Self> {
        let lo = e.lo.clone() - e.lo.floor();
        let hi = &lo + e.width();
        let (t, eps) = fixed_point(&lo, &hi, FRAC_BITS);
        let (wide_t, wide_eps) = fixed_point(&lo, &hi, WIDE_BITS);
        let fixed = FixedTheta {
            t: to_u128_clamped(&t),
            eps: eps.to_u128().unwrap_or(u128::MAX),
            wide_t,
            wide_eps,
        };
        if !fixed.wide_ok(n_hi) {
            let need = FRAC_BITS + 64 - n_hi.leading_zeros() as u64 + 4;
            return Err(Error::Precision(format!(
                "θ enclosure of width {:.3e} is too wide for n up to {n_hi}; need width ≤ 2^-{need}",
                crate::interval::f64_bounds(&e.width()).1
            )));
        }
        Ok(fixed)
    }

    fn scan_ok(&self, n_hi: u64) -> bool {
        self.eps
            .checked_mul(2 * n_hi as u128)
            .is_some_and(|b| b <= MAX_ERROR_UNITS)
    }

    /// Same relative error allowance as the scan: `2nε ≤ 2^-96`.
    fn wide_ok(&self, n_hi: u64) -> bool {
        self.wide_band(n_hi) <= pow2(WIDE_BITS - FRAC_BITS + 32)
    }

    fn band(&self, n: u64) -> u128 {
        2 * self.eps * n as u128
    }

    fn wide_band(&self, n: u64) -> BigInt {
        &self.wide_eps * (2 * n)
    }

    fn x(&self, n: u64) -> u128 {
        (n as u128).wrapping_mul(self.t)
    }
}

/// Fixed-point enclosure `[lo, hi]` of ψ(n) in units of `2^-128`.
fn threshold(x: &Interval) -> (u128, u128) {
    (
        to_u128_clamped(&floor_scaled(x.lo(), FRAC_BITS)),
        to_u128_clamped(&ceil_scaled(x.hi(), FRAC_BITS)),
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HitReport {
    pub index: u64,
    pub s: u128,
    pub n_lo: u64,
    pub n_hi: u64,
    pub hit_count: u64,
    pub first_hit: Option<u64>,
    /// Within the arithmetic error band of the boundary.
    pub ambiguous_count: u64,
    /// Block counting on a range where ψ varies: possibly a hit, threshold unresolved.
    pub unresolved_count: u64,
}

impl HitReport {
    fn new(index: u64, s: u128, n_lo: u64, n_hi: u64) -> Self {
        HitReport {
            index,
            s,
            n_lo,
            n_hi,
            hit_count: 0,
            first_hit: None,
            ambiguous_count: 0,
            unresolved_count: 0,
        }
    }

    pub fn csv_row(&self) -> String {
        let first = self.first_hit.map(|n| n.to_string()).unwrap_or_default();
        format!(
            "{},0x{:032x},{},{},{},{}",
            self.index, self.s, self.hit_count, first, self.ambiguous_count, self.unresolved_count
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Scan,
    Blocks,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McConfig {
    /// Stop scanning a sample at its first certain hit.
    pub stop_at_first_hit: bool,
    pub scan_limit: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            stop_at_first_hit: false,
            scan_limit: SCAN_LIMIT,
        }
    }
}

/// The engine used for `seq` on `[n_lo, n_hi]`.
pub fn engine_for(seq: &ApproxSeq, n_lo: u64, n_hi: u64, cfg: &McConfig) -> Engine {
    if seq.pieces().is_some() || n_hi - n_lo >= cfg.scan_limit {
        Engine::Blocks
    } else {
        Engine::Scan
    }
}

fn check_window(seq: &ApproxSeq, n_lo: u64, n_hi: u64) -> Result<()> {
    if n_lo == 0 || n_hi < n_lo {
        return Err(Error::invalid(format!(
            "window [{n_lo}, {n_hi}] must satisfy 1 ≤ N_lo ≤ N_hi"
        )));
    }
    if let Some(end) = seq.domain_end() {
        if BigInt::from(n_hi) > end {
            return Err(Error::OutOfRange {
                index: BigInt::from(n_hi),
            });
        }
    }
    Ok(())
}

fn scan(
    theta: &FixedTheta,
    seq: &ApproxSeq,
    samples: &[u128],
    n_lo: u64,
    n_hi: u64,
    cfg: &McConfig,
) -> Result<Vec<HitReport>> {
    struct State {
        x: u128,
        done: bool,
        r: HitReport,
    }
    let mut states: Vec<State> = samples
        .iter()
        .enumerate()
        .map(|(i, &s)| State {
            x: theta.x(n_lo),
            done: false,
            r: HitReport::new(i as u64, s, n_lo, n_hi),
        })
        .collect();
    let mut start = n_lo;
    while start <= n_hi {
        let end = n_hi.min(start.saturating_add(CHUNK - 1));
        let th: Vec<(u128, u128)> = (start..=end)
            .into_par_iter()
            .map(|n| seq.eval(&BigInt::from(n), PSI_BITS).map(|v| threshold(&v)))
            .collect::<Vec<Result<_>>>()
            .into_iter()
            .collect::<Result<_>>()?;
        states.par_iter_mut().filter(|st| !st.done).for_each(|st| {
            let s = st.r.s;
            for (j, &(lo, hi)) in th.iter().enumerate() {
                let n = start + j as u64;
                let y = st.x.wrapping_sub(s);
                let d = y.min(y.wrapping_neg());
                let band = theta.band(n);
                if d.saturating_add(band) < lo {
                    st.r.hit_count += 1;
                    st.r.first_hit.get_or_insert(n);
                    if cfg.stop_at_first_hit {
                        st.done = true;
                        break;
                    }
                } else if d < hi.saturating_add(band) {
                    st.r.ambiguous_count += 1;
                }
                st.x = st.x.wrapping_add(theta.t);
            }
        });
        start = end + 1;
    }
    Ok(states.into_iter().map(|s| s.r).collect())
}

/// `Σ_{i<n} ⌊(a i + b)/m⌋` for `a, b ≥ 0`, `m > 0`.
pub fn floor_sum(n: &BigInt, m: &BigInt, a: &BigInt, b: &BigInt) -> BigInt {
    let (mut n, mut m, mut a, mut b) = (n.clone(), m.clone(), a.clone(), b.clone());
    let mut ans = BigInt::zero();
    loop {
        if a >= m {
            ans += (&n * (&n - 1u32) / 2u32) * (&a / &m);
            a %= &m;
        }
        if b >= m {
            ans += &n * (&b / &m);
            b %= &m;
        }
        let y_max = &a * &n + &b;
        if y_max < m {
            break;
        }
        n = &y_max / &m;
        b = &y_max % &m;
        std::mem::swap(&mut m, &mut a);
    }
    ans
}

/// `#{A ≤ n ≤ B : d(x_n, s) < L}` with `x_n = n t mod 2^bits` and `d` the circular distance in units.
fn count_within(t: &BigInt, bits: u64, s: &BigInt, a: u64, b: u64, l: &BigInt) -> BigInt {
    let m = pow2(bits);
    let len = BigInt::from(b - a + 1);
    if l <= &BigInt::zero() {
        return BigInt::zero();
    }
    let k: BigInt = l * 2u32 - 1u32;
    if k >= m {
        return len;
    }
    // d < L  ⇔  (x_n − s + L − 1) mod 2^bits < 2L − 1
    let c = (l - BigInt::one() - s).mod_floor(&m);
    let b0 = (t * a + c).mod_floor(&m);
    floor_sum(&len, &m, t, &b0) - floor_sum(&len, &m, t, &(&b0 + &m - &k)) + len
}

fn wide_threshold(x: &Interval) -> (BigInt, BigInt) {
    (
        floor_scaled(x.lo(), WIDE_BITS).max(BigInt::zero()),
        ceil_scaled(x.hi(), WIDE_BITS),
    )
}

/// Ranges `[A, B]` of the window with fixed-point bounds: ψ ≥ `lo` and ψ ≤ `hi` on the range.
fn pieces(seq: &ApproxSeq, n_lo: u64, n_hi: u64) -> Result<Vec<(u64, u64, BigInt, BigInt)>> {
    let mut out = Vec::new();
    if let Some((starts, values, _)) = seq.pieces() {
        for (i, start) in starts.iter().enumerate() {
            let a = start.to_u64().unwrap_or(u64::MAX).max(n_lo);
            let b = starts
                .get(i + 1)
                .map(|s| s.to_u64().unwrap_or(u64::MAX).saturating_sub(1))
                .unwrap_or(u64::MAX)
                .min(n_hi);
            if a <= b {
                let (lo, hi) = wide_threshold(&Interval::point(values[i].clone()));
                out.push((a, b, lo, hi));
            }
        }
        return Ok(out);
    }
    let mut a = n_lo;
    loop {
        let b = a.saturating_mul(2).saturating_sub(1).min(n_hi).max(a);
        let lo = wide_threshold(&seq.eval(&BigInt::from(b), WIDE_BITS as u32 + 32)?).0;
        let hi = wide_threshold(&seq.eval(&BigInt::from(a), WIDE_BITS as u32 + 32)?).1;
        out.push((a, b, lo, hi));
        if b == n_hi {
            return Ok(out);
        }
        a = b + 1;
    }
}

fn blocks(
    theta: &FixedTheta,
    s: u128,
    index: u64,
    parts: &[(u64, u64, BigInt, BigInt)],
    n_lo: u64,
    n_hi: u64,
) -> HitReport {
    let mut r = HitReport::new(index, s, n_lo, n_hi);
    let to_u64 = |x: BigInt| x.to_u64().expect("count fits the window");
    let t = &theta.wide_t;
    let sw = BigInt::from(s) << (WIDE_BITS - FRAC_BITS);
    let count = |a: u64, b: u64, l: &BigInt| count_within(t, WIDE_BITS, &sw, a, b, l);
    for (a, b, lo, hi) in parts {
        let (a, b) = (*a, *b);
        let band = theta.wide_band(b);
        let certain_l = lo - &band;
        let certain = count(a, b, &certain_l);
        let banded = count(a, b, &(lo + &band));
        let possible = count(a, b, &(hi + &band));
        r.hit_count += to_u64(certain.clone());
        r.ambiguous_count += to_u64(&banded - &certain);
        r.unresolved_count += to_u64(possible - &banded);
        if r.first_hit.is_none() && certain > BigInt::zero() {
            // smallest m with a certain hit in [a, m]
            let (mut l, mut h) = (a, b);
            while l < h {
                let mid = l + (h - l) / 2;
                if count(a, mid, &certain_l) > BigInt::zero() {
                    h = mid;
                } else {
                    l = mid + 1;
                }
            }
            r.first_hit = Some(l);
        }
    }
    r
}

fn run(
    theta: &FixedTheta,
    seq: &ApproxSeq,
    samples: &[u128],
    n_lo: u64,
    n_hi: u64,
    cfg: &McConfig,
) -> Result<Vec<HitReport>> {
    check_window(seq, n_lo, n_hi)?;
    let engine = engine_for(seq, n_lo, n_hi, cfg);
    let ok = match engine {
        Engine::Scan => theta.scan_ok(n_hi),
        Engine::Blocks => theta.wide_ok(n_hi),
    };
    if !ok {
        return Err(Error::Precision(format!(
            "fixed-point θ error too large for n up to {n_hi}"
        )));
    }
    match engine {
        Engine::Scan => scan(theta, seq, samples, n_lo, n_hi, cfg),
        Engine::Blocks => {
            let parts = pieces(seq, n_lo, n_hi)?;
            Ok(samples
                .par_iter()
                .enumerate()
                .map(|(i, &s)| blocks(theta, s, i as u64, &parts, n_lo, n_hi))
                .collect())
        }
    }
}

/// Solutions of `‖nθ − s‖ < ψ(n)` for `N_lo ≤ n ≤ N_hi`, with `s = s_fixed / 2^128`.
pub fn count_hits(
    theta: &FixedTheta,
    seq: &ApproxSeq,
    s: u128,
    n_lo: u64,
    n_hi: u64,
    cfg: &McConfig,
) -> Result<HitReport> {
    Ok(run(theta, seq, &[s], n_lo, n_hi, cfg)?.remove(0))
}

/// `s` for sample `index`: one ChaCha stream per index, so order of evaluation is irrelevant.
pub fn sample(seed: u64, index: u64) -> u128 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.gen()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DichotomyEstimate {
    pub m: u64,
    pub n_lo: u64,
    pub n_hi: u64,
    pub seed: u64,
    pub engine: Engine,
    /// Samples with at least one certain hit.
    pub hits: u64,
    /// Samples without a certain hit but with an ambiguous or unresolved one.
    pub ambiguous_only: u64,
    pub fraction_hit: Rat,
    /// Half-width of the normal-approximation 95% binomial interval.
    pub confidence_radius: f64,
    pub reports: Vec<HitReport>,
}

impl DichotomyEstimate {
    pub fn to_json(&self) -> Value {
        let f = crate::interval::f64_bounds(&self.fraction_hit).0;
        json!({
            "M": self.m,
            "window": [self.n_lo, self.n_hi],
            "seed": self.seed,
            "engine": match self.engine { Engine::Scan => "scan", Engine::Blocks => "blocks" },
            "hits": self.hits,
            "ambiguous_only": self.ambiguous_only,
            "fraction_hit": self.fraction_hit.to_string(),
            "fraction_hit_f64": f,
            "confidence_radius": self.confidence_radius,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("index,s,hit_count,first_hit,ambiguous_count,unresolved_count\n");
        for r in &self.reports {
            out += &r.csv_row();
            out.push('\n');
        }
        out
    }
}

pub fn dichotomy_estimate(
    theta: &FixedTheta,
    seq: &ApproxSeq,
    m: u64,
    n_lo: u64,
    n_hi: u64,
    seed: u64,
    cfg: &McConfig,
) -> Result<DichotomyEstimate> {
    if m == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let samples: Vec<u128> = (0..m).map(|i| sample(seed, i)).collect();
    let reports = run(theta, seq, &samples, n_lo, n_hi, cfg)?;
    let hits = reports.iter().filter(|r| r.hit_count > 0).count() as u64;
    let ambiguous_only = reports
        .iter()
        .filter(|r| r.hit_count == 0 && r.ambiguous_count + r.unresolved_count > 0)
        .count() as u64;
    let p = hits as f64 / m as f64;
    Ok(DichotomyEstimate {
        m,
        n_lo,
        n_hi,
        seed,
        engine: engine_for(seq, n_lo, n_hi, cfg),
        hits,
        ambiguous_only,
        fraction_hit: Rat::new(hits.into(), m.into()),
        confidence_radius: 1.96 * (p * (1.0 - p) / m as f64).sqrt(),
        reports,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowMeasure {
    /// `μ(⋃_{N_lo ≤ n ≤ N_hi} B(nθ̃, ψ(n)))` for the surrogate θ̃.
    pub measure: Rat,
    /// Measure of the complement, swept separately.
    pub complement: Rat,
    /// Enclosure of the same measure for the true θ.
    pub bounds: Interval,
    pub union: ArcUnion,
}

/// Exact measure of the finite-window union of balls, through the arc machinery.
pub fn window_measure(
    theta: &ThetaSurrogate,
    seq: &ApproxSeq,
    n_lo: u64,
    n_hi: u64,
    cap: usize,
) -> Result<WindowMeasure> {
    check_window(seq, n_lo, n_hi)?;
    let count = n_hi - n_lo + 1;
    if count > cap as u64 {
        return Err(Error::CapExceeded {
            needed: BigInt::from(count),
            cap,
        });
    }
    let mut balls = Vec::with_capacity(count as usize);
    for n in n_lo..=n_hi {
        let n = BigInt::from(n);
        let r = seq.eval(&n, 64)?.as_point().cloned().ok_or_else(|| {
            Error::Precision("window_measure needs rational ψ; use the sampled estimate".into())
        })?;
        balls.push((theta.point(&n), r));
    }
    let union = ArcUnion::balls(balls.iter().map(|(c, r)| (c.clone(), r)));
    let measure = union.measure();
    let complement = gaps(&union).measure();
    // each endpoint moves by at most N_hi·budget under θ̃ → θ
    let slack = &theta.budget * rat_int(2 * n_hi) * rat_int(count);
    let lo = (&measure - &slack).max(Rat::zero());
    let hi = (&measure + &slack).min(Rat::one());
    Ok(WindowMeasure {
        measure,
        complement,
        bounds: Interval::new(lo, hi),
        union,
    })
}

/// The complement `[0, 1) \ u`, built from the gaps between arcs.
fn gaps(u: &ArcUnion) -> ArcUnion {
    let arcs = u.arcs();
    if arcs.is_empty() {
        return ArcUnion::full();
    }
    let mut out = Vec::new();
    let mut prev = Rat::zero();
    for (l, r) in arcs {
        if &prev < l {
            out.push((prev.clone(), l.clone()));
        }
        prev = r.clone();
    }
    if prev < Rat::one() {
        out.push((prev, Rat::one()));
    }
    ArcUnion::from_arcs(out)
}
