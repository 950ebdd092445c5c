use num_bigint::BigInt;
use num_traits::One;
use serde_json::{json, Value};

use diophantus::cf_real::{convergent_table, PartialQuotientStream, QuotientRule};
use diophantus::circle_sets::{
    build_ek, build_gk, gk_containment, lemma24_inequality_check, quasi_independence_check,
    ThetaSurrogate,
};
use diophantus::constructions::{find_witness_sequence, validate_counterexample};
use diophantus::criterion::{
    evaluate_criterion, khintchine_equivalence_check, khintchine_series, kurzweil_condition_eval,
    omega_tau_profile, DecayPhi, DeltaRule, IndexRule,
};
use diophantus::interval::{f64_bounds, pow2, Interval, Rat};
use diophantus::laurent::{
    laurent_criterion, laurent_norm_checks, DegreeSeq, FiniteField, LaurentCf,
};
use diophantus::montecarlo::{dichotomy_estimate, window_measure, FixedTheta, McConfig};
use diophantus::psi::{parse_rat, ApproxSeq, PhiSeq};
use diophantus::{Error, Result};

use crate::{Artifact, Cmd};

fn read_json(path: &str) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{path}: {e}")))
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("{text:?}: {e}")))
}

/// `golden`, `sqrt2-1`, `rule:<rule>`, `list:[..]`, `period:[..]`, `@file.json` or inline JSON.
pub fn parse_theta(spec: &str) -> Result<PartialQuotientStream> {
    let s = spec.trim();
    match s {
        "golden" => return Ok(PartialQuotientStream::golden()),
        "sqrt2-1" => return Ok(PartialQuotientStream::sqrt2_minus_1()),
        _ => {}
    }
    if let Some(rule) = s.strip_prefix("rule:") {
        return PartialQuotientStream::rule(BigInt::from(0), QuotientRule::parse(rule)?);
    }
    if let Some(list) = s.strip_prefix("list:") {
        return PartialQuotientStream::from_json(&json!({ "list": parse_json(list)? }));
    }
    if let Some(period) = s.strip_prefix("period:") {
        return PartialQuotientStream::from_json(&json!({ "period": parse_json(period)? }));
    }
    if let Some(path) = s.strip_prefix('@') {
        return PartialQuotientStream::from_json(&read_json(path)?);
    }
    if s.starts_with('{') {
        return PartialQuotientStream::from_json(&parse_json(s)?);
    }
    Err(Error::InvalidInput(format!(
        "θ spec {spec:?}: expected golden, sqrt2-1, rule:.., list:[..], period:[..], @file or JSON"
    )))
}

fn parse_psi(spec: &str) -> Result<ApproxSeq> {
    ApproxSeq::parse(spec, &read_json)
}

fn parse_a(field: FiniteField, spec: &str) -> Result<LaurentCf> {
    match spec.strip_prefix('@') {
        Some(path) => LaurentCf::from_json(field, &read_json(path)?),
        None => LaurentCf::parse(field, spec),
    }
}

fn parse_tau(spec: &str) -> Result<Rat> {
    parse_rat(spec)
}

fn iv(x: &Interval) -> Value {
    let [lo, hi] = x.to_f64_pair();
    json!([lo, hi])
}

fn f64_of(x: &Rat) -> f64 {
    f64_bounds(x).0
}

fn surrogate(stream: &PartialQuotientStream, width: u64) -> Result<ThetaSurrogate> {
    ThetaSurrogate::from_stream(stream, &Rat::new(BigInt::one(), pow2(width)))
}

pub fn run(cmd: &Cmd, bits: u32) -> Result<Artifact> {
    match cmd {
        Cmd::Cf { theta, k } => cf(&parse_theta(theta)?, *k, bits),
        Cmd::Criterion { theta, psi, kmax } => {
            let stream = parse_theta(theta)?;
            let seq = parse_psi(psi)?;
            let r = evaluate_criterion(&stream, &seq, *kmax, bits)?;
            let mut v = r.to_json();
            v["input"] = json!({"theta": stream.describe(), "psi": seq.describe(), "kmax": kmax, "bits": bits});
            Ok(Artifact {
                json: v,
                csv: r.to_csv(),
            })
        }
        Cmd::Khintchine {
            theta,
            phi,
            kmax,
            sandwich,
        } => {
            let stream = parse_theta(theta)?;
            let phi = PhiSeq::parse(phi)?;
            let series = khintchine_series(&stream, &phi, *kmax, bits)?;
            let mut v = json!({
                "input": {"theta": stream.describe(), "phi": phi.describe(), "kmax": kmax, "bits": bits},
                "series": series.to_json(),
            });
            if let Some(blocks) = sandwich {
                v["sandwich"] =
                    khintchine_equivalence_check(&stream, &phi, *blocks, bits)?.to_json();
            }
            Ok(Artifact {
                json: v,
                csv: series.to_csv(),
            })
        }
        Cmd::KurzweilCond {
            psi,
            phi,
            delta,
            t,
            imax,
            theta,
        } => {
            let seq = parse_psi(psi)?;
            let phi = DecayPhi::parse(phi)?;
            let delta = DeltaRule::parse(delta)?;
            let t = IndexRule::parse(t)?;
            let stream = theta.as_deref().map(parse_theta).transpose()?;
            let r = kurzweil_condition_eval(stream.as_ref(), &seq, &phi, &delta, &t, *imax, bits)?;
            let mut csv =
                String::from("i,t,threshold,index,side_ok,term_lo,term_hi,partial_lo,partial_hi\n");
            for (row, s) in r.rows.iter().zip(&r.partial_sums) {
                let [tl, th] = row.term.to_f64_pair();
                let [sl, sh] = s.to_f64_pair();
                csv += &format!(
                    "{},{},{},{},{},{tl:e},{th:e},{sl:e},{sh:e}\n",
                    row.i, row.t, row.threshold, row.index, row.side_ok
                );
            }
            let mut v = r.to_json();
            v["input"] = json!({
                "psi": seq.describe(),
                "phi": phi.describe(),
                "imax": imax,
                "theta": stream.as_ref().map(|s| s.describe()),
                "bits": bits,
            });
            Ok(Artifact { json: v, csv })
        }
        Cmd::OmegaTau { theta, tau, kmax } => {
            let stream = parse_theta(theta)?;
            let r = omega_tau_profile(&stream, &parse_tau(tau)?, *kmax, bits)?;
            let mut v = r.to_json();
            v["input"] =
                json!({"theta": stream.describe(), "tau": tau, "kmax": kmax, "bits": bits});
            Ok(Artifact {
                json: v,
                csv: r.to_csv(),
            })
        }
        Cmd::Sets {
            theta,
            psi,
            k,
            cap,
            width,
        } => sets(
            &parse_theta(theta)?,
            &parse_psi(psi)?,
            *k,
            *cap,
            *width,
            bits,
        ),
        Cmd::Simulate {
            theta,
            psi,
            m,
            nlo,
            nhi,
            seed,
            scan_limit,
            stop_at_first_hit,
        } => {
            let stream = parse_theta(theta)?;
            let seq = parse_psi(psi)?;
            let cfg = McConfig {
                stop_at_first_hit: *stop_at_first_hit,
                scan_limit: *scan_limit,
            };
            let th = FixedTheta::from_stream(&stream, *nhi)?;
            let est = dichotomy_estimate(&th, &seq, *m, *nlo, *nhi, *seed, &cfg)?;
            let mut v = est.to_json();
            v["input"] = json!({"theta": stream.describe(), "psi": seq.describe()});
            Ok(Artifact {
                json: v,
                csv: est.to_csv(),
            })
        }
        Cmd::WindowMeasure {
            theta,
            psi,
            nlo,
            nhi,
            cap,
            width,
        } => {
            let stream = parse_theta(theta)?;
            let seq = parse_psi(psi)?;
            let w = window_measure(&surrogate(&stream, *width)?, &seq, *nlo, *nhi, *cap)?;
            let v = json!({
                "input": {"theta": stream.describe(), "psi": seq.describe(), "window": [nlo, nhi]},
                "measure": w.measure.to_string(),
                "measure_f64": f64_of(&w.measure),
                "complement": w.complement.to_string(),
                "bounds": [w.bounds.lo().to_string(), w.bounds.hi().to_string()],
                "arc_count": w.union.arcs().len(),
            });
            Ok(Artifact {
                json: v,
                csv: w.union.to_csv(),
            })
        }
        Cmd::Tseng {
            theta,
            tau,
            l,
            witness_out,
        } => {
            let stream = parse_theta(theta)?;
            let w = find_witness_sequence(&stream, &parse_tau(tau)?, *l)?;
            let report = validate_counterexample(&w, &stream)?;
            if let Some(path) = witness_out {
                let mut s = serde_json::to_string_pretty(&w.to_json()).expect("values serialize");
                s.push('\n');
                std::fs::write(path, s).map_err(|e| {
                    Error::InvalidInput(format!("cannot write {}: {e}", path.display()))
                })?;
            }
            let mut csv =
                String::from("ell,u,u_next,tau_sum,split_head,split_tail,h_sum,h_bound\n");
            for b in &report.blocks {
                csv += &format!(
                    "{},{},{},{},{},{},{},{}\n",
                    b.ell, b.u, b.u_next, b.tau_sum, b.split_head, b.split_tail, b.h_sum, b.h_bound
                );
            }
            Ok(Artifact {
                json: json!({
                    "input": {"theta": stream.describe(), "tau": tau, "L": l},
                    "witness": w.to_json(),
                    "validation": report.to_json(),
                }),
                csv,
            })
        }
        Cmd::LaurentCf { field, a, k } => {
            let field = FiniteField::parse(field)?;
            let cf = parse_a(field, a)?.advance_to(*k)?;
            Ok(Artifact {
                json: cf.to_json(),
                csv: cf.to_csv(),
            })
        }
        Cmd::LaurentCriterion {
            field,
            a,
            l,
            kmax,
            norms,
        } => {
            let field = FiniteField::parse(field)?;
            let cf = parse_a(field.clone(), a)?;
            let degrees = DegreeSeq::parse(l)?;
            let r = laurent_criterion(&cf, &degrees, *kmax)?;
            let mut v = r.to_json();
            v["input"] = json!({"field": field.describe(), "l": degrees.describe(), "kmax": kmax});
            if let Some(depth) = norms {
                v["norms"] = laurent_norm_checks(&cf, *depth)?.to_json();
            }
            Ok(Artifact {
                json: v,
                csv: r.to_csv(),
            })
        }
    }
}

fn cf(stream: &PartialQuotientStream, k: usize, bits: u32) -> Result<Artifact> {
    let table = convergent_table(stream, k + 1, bits)?;
    let mut rows = Vec::new();
    let mut csv = String::from("k,a,p,q,dist_lo,dist_hi\n");
    for st in &table {
        let a = stream.quotient(st.k as usize)?;
        let [lo, hi] = st.dist.to_f64_pair();
        csv += &format!("{},{},{},{},{lo:e},{hi:e}\n", st.k, a, st.p, st.q);
        rows.push(json!({
            "k": st.k,
            "a": a.to_string(),
            "p": st.p.to_string(),
            "q": st.q.to_string(),
            "dist": iv(&st.dist),
        }));
    }
    Ok(Artifact {
        json: json!({
            "input": {"theta": stream.describe(), "k": k, "bits": bits},
            "rows": rows,
        }),
        csv,
    })
}

fn sets(
    stream: &PartialQuotientStream,
    seq: &ApproxSeq,
    k_max: usize,
    cap: usize,
    width: u64,
    bits: u32,
) -> Result<Artifact> {
    let theta = surrogate(stream, width)?;
    let table = convergent_table(stream, k_max + 3, bits)?;
    let mut fams = Vec::new();
    let mut rows = Vec::new();
    for k in 0..=k_max {
        let g = build_gk(&theta, &table, seq, k, cap)?;
        let e = build_ek(&theta, &table, seq, k, cap)?;
        let sub_total: Rat = g.subs.iter().map(|s| s.measure()).sum();
        rows.push(json!({
            "k": k,
            "qk": g.qk.to_string(),
            "qk1": g.qk1.to_string(),
            "arc_count": g.arc_count,
            "gk_measure": g.measure.to_string(),
            "gk_measure_f64": f64_of(&g.measure),
            "disjoint": sub_total == g.measure,
            "contained": gk_containment(&theta, &table, seq, &g)?,
            "ek_measure": e.measure.to_string(),
            "ek_bound": e.bound.to_string(),
            "ek_holds": e.measure <= e.bound,
        }));
        fams.push(g);
    }
    let mut qi = Vec::new();
    for k in 1..=k_max {
        for l in 0..k {
            let c = quasi_independence_check(&fams[k], &fams[l])?;
            qi.push(json!({
                "k": k,
                "l": l,
                "intersection": c.intersection.to_string(),
                "product": c.product.to_string(),
                "holds": c.holds,
                "intermediate_holds": c.intermediate_holds,
            }));
        }
    }
    let mut lemma = Vec::new();
    for kk in 0..=k_max {
        let r = lemma24_inequality_check(&theta, &table, seq, kk, cap)?;
        lemma.push(json!({
            "K": kk,
            "lhs": r.lhs.to_string(),
            "rhs": r.rhs.to_string(),
            "holds": r.holds,
        }));
    }
    let all_ok = rows
        .iter()
        .all(|r| r["disjoint"] == true && r["contained"] == true && r["ek_holds"] == true)
        && qi.iter().all(|r| r["holds"] == true)
        && lemma.iter().all(|r| r["holds"] == true);
    Ok(Artifact {
        json: json!({
            "input": {"theta": stream.describe(), "psi": seq.describe(), "k": k_max, "cap": cap, "width": width},
            "families": rows,
            "quasi_independence": qi,
            "block_sum_inequality": lemma,
            "all_ok": all_ok,
        }),
        csv: fams.last().expect("k ≥ 0").union.to_csv(),
    })
}
