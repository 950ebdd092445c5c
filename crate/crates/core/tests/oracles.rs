//! Cross-checks against routes that share no code with the module under test.

use diophantus::cf_real::{convergent_table, PartialQuotientStream};
use diophantus::interval::{pow2, rat, rat_int, Interval, Rat};
use diophantus::laurent::{FiniteField, LaurentCf, Poly, QuotientSource};
use diophantus::montecarlo::{count_hits, sample, FixedTheta, McConfig};
use diophantus::psi::ApproxSeq;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: u64 = 400;

/// `(√d − c)/e` enclosed from integer square roots at `2^-N`.
fn quadratic(d: u64, c: i64, e: i64) -> Interval {
    let s = (BigInt::from(d) << (2 * N)).sqrt();
    let lo = Rat::new(s.clone(), pow2(N));
    let hi = Rat::new(s + 1, pow2(N));
    let shift = |x: Rat| (x - rat_int(c)) / rat_int(e);
    Interval::new(shift(lo), shift(hi))
}

#[test]
fn convergent_distances_match_square_roots() {
    let cases = [
        (PartialQuotientStream::golden(), quadratic(5, 1, 2)),
        (PartialQuotientStream::sqrt2_minus_1(), quadratic(2, 1, 1)),
    ];
    for (stream, theta) in cases {
        for st in convergent_table(&stream, 120, 256).unwrap() {
            let d = theta
                .scale(&rat_int(st.q.clone()))
                .add_rat(&-rat_int(st.p.clone()));
            let d = if d.lo().is_negative() { d.neg() } else { d };
            assert!(d.overlaps(&st.dist), "{} k={}", stream.describe(), st.k);
            // the library's enclosure is tight relative to the distance itself
            assert!(
                st.dist.width() * rat_int(pow2(100)) <= st.dist.hi().clone(),
                "k={}",
                st.k
            );
        }
    }
}

/// Exact classification of `‖nθ − s‖ < c/n`: `Some(hit)` when decided at `2^-N`.
fn brute_force(theta: &Interval, s: &Rat, c: &Rat, n: u64) -> Option<bool> {
    let x = theta.scale(&rat_int(n)).add_rat(&-s.clone());
    let lo_frac = x.lo() - x.lo().floor();
    let d_lo_raw = lo_frac.clone().min(Rat::one() - &lo_frac);
    let w = x.width();
    let target = c / rat_int(n);
    if d_lo_raw.clone() + &w < target {
        return Some(true);
    }
    if d_lo_raw - &w >= target {
        return Some(false);
    }
    None
}

#[test]
fn hit_counts_bracket_exact_classification() {
    let theta = quadratic(5, 1, 2);
    let fixed = FixedTheta::from_stream(&PartialQuotientStream::golden(), 2000).unwrap();
    let c = rat(1, 3);
    let psi = ApproxSeq::power(c.clone(), rat(1, 1)).unwrap();
    let scan = McConfig::default();
    let blocks = McConfig {
        scan_limit: 0,
        ..McConfig::default()
    };
    for index in 0..12 {
        let s_fixed = sample(77, index);
        let s = Rat::new(BigInt::from(s_fixed), pow2(128));
        let (mut sure, mut maybe, mut first) = (0u64, 0u64, None);
        for n in 20..=2000 {
            match brute_force(&theta, &s, &c, n) {
                Some(true) => {
                    sure += 1;
                    first.get_or_insert(n);
                }
                None => maybe += 1,
                Some(false) => {}
            }
        }
        let a = count_hits(&fixed, &psi, s_fixed, 20, 2000, &scan).unwrap();
        assert!(
            a.hit_count <= sure + maybe && sure <= a.hit_count + a.ambiguous_count,
            "scan sample {index}"
        );
        if maybe == 0 && a.ambiguous_count == 0 {
            assert_eq!(a.hit_count, sure);
            assert_eq!(a.first_hit, first);
        }
        let b = count_hits(&fixed, &psi, s_fixed, 20, 2000, &blocks).unwrap();
        let b_all = b.hit_count + b.ambiguous_count + b.unresolved_count;
        assert!(
            b.hit_count <= sure + maybe && sure <= b_all,
            "blocks sample {index}"
        );
    }
}

/// `Σ_{i=1}^{n} c_i X^{−i}` of `num/den` by long division.
fn series(num: &Poly, den: &Poly, n: usize, f: &FiniteField) -> Vec<u64> {
    let (q, _) = num.shift(n).divrem(den, f).unwrap();
    (1..=n).map(|i| q.coeff(n - i)).collect()
}

#[test]
fn series_prefix_recovers_quotients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for spec in ["p=2", "p=3", "p=5", "p=2,m=2,mod=[1,1,1]"] {
        let f = FiniteField::parse(spec).unwrap();
        for _ in 0..6 {
            let qs: Vec<Poly> = (0..8)
                .map(|_| {
                    let d = rng.gen_range(1..=4);
                    Poly::random(&mut rng, d, &f)
                })
                .collect();
            // [0; A_1, …, A_K] folded from the back: x ← 1/(A_k + x)
            let (mut num, mut den) = (Poly::zero(), Poly::one());
            for a in qs.iter().rev() {
                let new_den = a.mul(&den, &f).add(&num, &f);
                num = den;
                den = new_den;
            }
            let total: usize = qs.iter().map(|a| a.deg().unwrap()).sum();
            let coeffs = series(&num, &den, 2 * total + 3, &f);
            let cf = LaurentCf::from_series(f.clone(), coeffs).unwrap();
            let QuotientSource::Series { certified, .. } = cf.source() else {
                panic!("series source expected");
            };
            assert_eq!(certified, &qs, "over {spec}");
            let direct = LaurentCf::from_rational(f.clone(), &num, &den)
                .unwrap()
                .advance_to(qs.len())
                .unwrap();
            assert!(direct.quotient(qs.len() + 1).is_err());
            let last = qs.len();
            assert_eq!(direct.p(last), &num);
            let lead_inv = f.inv(direct.q(last).lead()).unwrap();
            assert_eq!(
                direct.q(last).scale(lead_inv, &f),
                den.scale(f.inv(den.lead()).unwrap(), &f)
            );
        }
    }
}

#[test]
fn golden_norms_are_powers_of_theta() {
    // ‖q_k θ‖ = θ^{k+1} for θ = (√5 − 1)/2
    let theta = quadratic(5, 1, 2);
    let table = convergent_table(&PartialQuotientStream::golden(), 60, 256).unwrap();
    let mut pw = theta.clone();
    for st in &table {
        assert!(st.dist.overlaps(&pw), "k={}", st.k);
        pw = pw.mul(&theta);
    }
    assert!(!table.is_empty() && table[0].q.is_one() && table[0].p.is_zero());
}
