//! Checkers that run the pipeline (or pure cohomological bookkeeping) and
//! produce pass/fail records with enough evidence to recompute the verdict.
//!
//! Every checker builds its evidence first and then calls [`decide`] on it,
//! so [`recheck`] on a serialized verdict always reproduces `pass`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{
    cohomology, complements_isomorphic, cup_form_h1, homology, max_null_system, pair_cohomology, poincare_polynomial,
    subcomplex_homology, suspension_pair_homology, HomologyResult, PoincarePolynomial, Ring,
};
use crate::attractor::{analyze, AttractorReport, Classification};
use crate::blocks::{build_block, IsolatingBlock};
use crate::complex::{self, CellComplex, CellSet, RawComplex};
use crate::constructions::{catalog_flow, CatalogFlow};
use crate::error::{Error, Result};
use crate::flow::CombinatorialFlow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub id: String,
    pub inputs: String,
    pub evidence: Value,
    pub pass: bool,
    pub notes: String,
}

pub const FORCED: &str = "forced external explosions";
pub const CONSISTENT: &str = "consistent";

/// Theorem ids understood by [`run_all`], in output order.
pub const THEOREM_IDS: [&str; 15] = [
    "thm3.4",
    "prop3.2",
    "cor3.3",
    "thm4.1",
    "cor5.8",
    "thm4.2",
    "obstruction",
    "ex3.5",
    "ex3.7",
    "shape",
    "thm6.1",
    "lem3.1",
    "lem7.1",
    "lem7.2",
    "conley-euler",
];

fn verdict(id: &str, inputs: String, evidence: Value, notes: impl Into<String>) -> Result<TheoremVerdict> {
    let pass = decide(id, &evidence)?;
    Ok(TheoremVerdict { id: id.to_string(), inputs, evidence, pass, notes: notes.into() })
}

/// Recomputes `pass` from the stored evidence alone.
pub fn recheck(v: &TheoremVerdict) -> Result<bool> {
    decide(&v.id, &v.evidence)
}

// ---------------------------------------------------------------------------
// evidence access

fn field<'a>(ev: &'a Value, key: &str) -> Result<&'a Value> {
    ev.get(key).ok_or_else(|| Error::Parse(format!("evidence has no '{key}'")))
}

fn int(ev: &Value, key: &str) -> Result<i64> {
    field(ev, key)?.as_i64().ok_or_else(|| Error::Parse(format!("'{key}' is not an integer")))
}

fn flag(ev: &Value, key: &str) -> Result<bool> {
    field(ev, key)?.as_bool().ok_or_else(|| Error::Parse(format!("'{key}' is not a boolean")))
}

fn text<'a>(ev: &'a Value, key: &str) -> Result<&'a str> {
    field(ev, key)?.as_str().ok_or_else(|| Error::Parse(format!("'{key}' is not a string")))
}

fn nums(v: &Value) -> Result<Vec<usize>> {
    v.as_array()
        .ok_or_else(|| Error::Parse("expected an array".into()))?
        .iter()
        .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| Error::Parse("expected a count".into())))
        .collect()
}

fn list(ev: &Value, key: &str) -> Result<Vec<usize>> {
    nums(field(ev, key)?)
}

fn lists(ev: &Value, key: &str) -> Result<Vec<Vec<usize>>> {
    field(ev, key)?.as_array().ok_or_else(|| Error::Parse(format!("'{key}' is not an array")))?.iter().map(nums).collect()
}

fn at(v: &[usize], k: usize) -> usize {
    v.get(k).copied().unwrap_or(0)
}

fn trim(mut v: Vec<usize>) -> Vec<usize> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn show(coeffs: &[usize]) -> String {
    PoincarePolynomial::new(Ring::Z2, coeffs.to_vec()).to_string()
}

fn unstable_verdicts(c: &str) -> bool {
    c == "Stable" || c == "NoExternalExplosions"
}

// ---------------------------------------------------------------------------
// decisions

/// The pass rule of each theorem id, as a function of its evidence.
pub fn decide(id: &str, ev: &Value) -> Result<bool> {
    match id {
        "thm3.4" => {
            let n = int(ev, "n")? as usize;
            let r = int(ev, "r")? as usize;
            let p = list(ev, "p")?;
            let shifted = trim(std::iter::once(0).chain(list(ev, "p_nminus")?).collect());
            let symmetric = (1..=n).all(|k| at(&p, k) == at(&p, n + 1 - k));
            let pair_ok = match field(ev, "pair_check")? {
                Value::Null => true,
                v => trim(nums(v)?) == p,
            };
            Ok(p == shifted && symmetric && at(&p, n) == r && at(&p, 0) == 0 && pair_ok)
        }
        "prop3.2" => {
            if text(ev, "classification")? == "Stable" {
                return Ok(true);
            }
            let n = int(ev, "n")? as usize;
            let (r, s) = (int(ev, "r")? as usize, int(ev, "s")? as usize);
            let h = list(ev, "cohomology_ranks")?;
            let vanish = h.iter().skip(n).all(|&x| x == 0);
            Ok(n >= 1 && r <= s && s <= at(&h, n - 1) && vanish)
        }
        "cor3.3" => {
            let triggered = int(ev, "rank_top")? == 1 && text(ev, "classification")? == "NoExternalExplosions" && flag(ev, "unstable")?;
            Ok(!triggered || (flag(ev, "global")? && int(ev, "r")? == 1))
        }
        "thm4.1" => {
            let c = text(ev, "classification")?;
            if c == "Unknown" {
                return Ok(false);
            }
            Ok((int(ev, "chi_k")? == int(ev, "chi_basin")?) == unstable_verdicts(c))
        }
        "cor5.8" => {
            let c = text(ev, "classification")?;
            if c == "Unknown" {
                return Ok(false);
            }
            Ok((int(ev, "chi_k")? == int(ev, "chi_basin")?) == (c == "Stable"))
        }
        "thm4.2" => {
            let h = list(ev, "block_cohomology")?;
            let chi = int(ev, "chi_m")?;
            Ok(at(&h, 0) == 1 && at(&h, 1) as i64 == 1 - chi && at(&h, 2) == 0 && chi <= 0)
        }
        "obstruction" => {
            let r_max = int(ev, "r_max")?;
            let observed = list(ev, "observed_r")?;
            let expected_ok = match field(ev, "expected_r_max")? {
                Value::Null => true,
                v => v.as_i64() == Some(r_max),
            };
            Ok(expected_ok && observed.iter().all(|&r| r as i64 <= r_max))
        }
        "ex3.5" | "ex3.7" | "shape" => decide_shape(ev),
        "thm6.1" => {
            let found = fingerprint_branch(
                int(ev, "n")? as usize,
                &list(ev, "m_ranks")?,
                &lists(ev, "m_torsion")?,
            );
            let stored = text(ev, "branch")?;
            let sphere_ok = |key: &str| -> Result<bool> {
                let n = int(ev, "n")? as usize;
                Ok(is_homology_sphere(&list(ev, key)?, n))
            };
            Ok(found.as_deref() == Some(stored)
                && stored != "none"
                && sphere_ok("k_ranks")?
                && sphere_ok("nminus_ranks")?
                && sphere_ok("nplus_ranks")?
                && flag(ev, "global")?)
        }
        "lem3.1" => {
            let n = int(ev, "n")? as usize;
            let rel = list(ev, "rel_cohomology")?;
            let hn = list(ev, "block_homology")?;
            let sec = list(ev, "nminus_homology")?;
            let lefschetz = (0..=n).all(|k| at(&rel, k) == at(&hn, n - k));
            let poincare = sec.iter().all(|&x| x == 0) || (0..n).all(|k| at(&sec, k) == at(&sec, n - 1 - k));
            Ok(lefschetz && poincare && rel.len() <= n + 1)
        }
        "lem7.1" => Ok(flag(ev, "complements_isomorphic")? && list(ev, "p1")? == list(ev, "p2")?),
        "lem7.2" => {
            let pair = list(ev, "pair_ranks")?;
            let x = list(ev, "x_ranks")?;
            let len = pair.len().max(x.len() + 1);
            Ok(at(&pair, 0) == 0 && (1..len).all(|k| at(&pair, k) == at(&x, k - 1)))
        }
        "conley-euler" => {
            let n = int(ev, "n")?;
            let lhs = int(ev, "chi_n")? - int(ev, "chi_exit")?;
            let chi_k = int(ev, "chi_k")?;
            let chi_sec = int(ev, "chi_nminus")?;
            let general = lhs == chi_k - chi_sec;
            Ok(general && (n != 2 || lhs == chi_k))
        }
        other => Err(Error::UnknownTheorem(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// symmetry, bounds, global

/// `p(A(K),K)` as `t * p(n-)`: symmetric with leading coefficient `r`.
pub fn verify_symmetry(f: &CombinatorialFlow, report: &AttractorReport, block: &IsolatingBlock, ring: Ring) -> Result<TheoremVerdict> {
    if report.classification != Classification::NoExternalExplosions {
        return Err(Error::Precondition(format!("{} is {}, not NoExternalExplosions", f.name, report.classification)));
    }
    if !block.regular {
        return Err(Error::NonRegular(format!("block of {} is not regular", f.name)));
    }
    let cx = &f.complex;
    let n = cx.top_dim();
    let p_nminus = trim(subcomplex_homology(cx, &block.nminus_sec, ring)?.ranks);
    let p = trim(std::iter::once(0).chain(p_nminus.iter().copied()).collect());
    // for a global attractor the pair (M, N) has the cohomology of (A(K), K)
    let pair_check = if report.global { Some(poincare_polynomial(cx, &cx.all(), &block.n, ring)?.coeffs) } else { None };
    let ev = json!({
        "n": n,
        "r": report.r,
        "p_nminus": p_nminus,
        "p": p,
        "p_display": show(&p),
        "pair_check": pair_check,
        "ring": ring,
    });
    verdict("thm3.4", format!("{} over {ring}", f.name), ev, "p(A(K),K) = t p(n-)")
}

/// `r <= s <= rk H^{n-1}(K)` and vanishing from degree `n` on, with the
/// cohomology of `K` read off the block.
pub fn verify_bounds(f: &CombinatorialFlow, report: &AttractorReport, block: &IsolatingBlock, ring: Ring) -> Result<TheoremVerdict> {
    let cx = &f.complex;
    let h = trim(pair_cohomology(cx, &block.n, &CellSet::new(), ring)?.ranks);
    let ev = json!({
        "n": cx.top_dim(),
        "r": report.r,
        "s": report.s,
        "classification": report.classification.to_string(),
        "cohomology_ranks": h,
    });
    let notes = if report.classification == Classification::Stable { "stable attractor: holds trivially" } else { "" };
    verdict("prop3.2", format!("{} over {ring}", f.name), ev, notes)
}

/// If `rk H^{n-1}(K) = 1` for an unstable attractor without external
/// explosions, then it is global with one homoclinic component.
pub fn verify_global(f: &CombinatorialFlow, report: &AttractorReport, block: &IsolatingBlock, ring: Ring) -> Result<TheoremVerdict> {
    let cx = &f.complex;
    let n = cx.top_dim();
    let h = subcomplex_homology(cx, &block.n, ring)?;
    let ev = json!({
        "rank_top": h.rank(n.saturating_sub(1)),
        "classification": report.classification.to_string(),
        "unstable": report.classification != Classification::Stable,
        "global": report.global,
        "r": report.r,
    });
    verdict("cor3.3", format!("{} over {ring}", f.name), ev, "")
}

// ---------------------------------------------------------------------------
// Euler characteristic criteria

fn is_closed_pseudomanifold(cx: &CellComplex) -> bool {
    let d = cx.top_dim();
    d >= 1 && cx.cells_of_dim(d - 1).iter().all(|&g| cx.coboundary(g).len() == 2)
}

fn require_closed_surface(cx: &CellComplex) -> Result<()> {
    if cx.top_dim() == 2 && is_closed_pseudomanifold(cx) {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{} is not a closed surface", cx.name)))
    }
}

/// Euler characteristic of the open set spanned by the basin: the whole
/// surface minus the closed complement. On a surface this equals the
/// compactly supported characteristic.
pub fn basin_euler(cx: &CellComplex, basin: &CellSet) -> i64 {
    let outside: Vec<usize> = cx.top_cells().into_iter().filter(|&c| !basin.contains(c)).collect();
    cx.euler() - cx.euler_of(&cx.closure_of_cells(&outside))
}

fn chi_evidence(f: &CombinatorialFlow, k: &CellSet) -> Result<(Value, Classification)> {
    let cx = &f.complex;
    require_closed_surface(cx)?;
    let report = analyze(k, f)?;
    let chi_block = build_block(k, f, 1).ok().map(|b| cx.euler_of(&b.n));
    let ev = json!({
        "chi_k": cx.euler_of(k),
        "chi_block": chi_block,
        "chi_basin": basin_euler(cx, &report.basin),
        "classification": report.classification.to_string(),
        "global": report.global,
    });
    Ok((ev, report.classification))
}

/// `chi(K) = chi(A(K))` exactly when there are no external explosions.
pub fn verify_chi_criterion(f: &CombinatorialFlow, k: &CellSet) -> Result<TheoremVerdict> {
    let (ev, _) = chi_evidence(f, k)?;
    verdict("thm4.1", f.name.clone(), ev, "")
}

/// On a planar surface (sphere with a frozen ideal point) stability is
/// equivalent to `chi(K) = chi(A(K))`.
pub fn verify_planar_chi(f: &CombinatorialFlow, k: &CellSet) -> Result<TheoremVerdict> {
    let (ev, _) = chi_evidence(f, k)?;
    verdict("cor5.8", f.name.clone(), ev, "sphere flow with a fixed point at infinity")
}

/// A global unstable attractor without external explosions on a closed
/// surface is a bouquet of `1 - chi(M)` circles and `chi(M) <= 0`.
pub fn verify_bouquet(f: &CombinatorialFlow, k: &CellSet) -> Result<TheoremVerdict> {
    let cx = &f.complex;
    require_closed_surface(cx)?;
    let report = analyze(k, f)?;
    if report.classification != Classification::NoExternalExplosions || !report.global {
        return Err(Error::Precondition(format!("{} is not a global attractor without external explosions", f.name)));
    }
    let block = build_block(k, f, 1)?;
    let ring = match cx.orientable {
        complex::Orientability::Yes => Ring::Z,
        _ => Ring::Z2,
    };
    let h = pair_cohomology(cx, &block.n, &CellSet::new(), ring)?;
    let ev = json!({
        "block_cohomology": h.ranks,
        "chi_m": cx.euler(),
        "ring": ring,
    });
    verdict("thm4.2", format!("{} over {ring}", f.name), ev, format!("bouquet of {} circle(s)", 1 - cx.euler()))
}

// ---------------------------------------------------------------------------
// cup products

/// Spaces whose interior embeds in a manifold with vanishing first
/// cohomology, which rules out unstable attractors without external
/// explosions there.
pub const PLANAR_EMBEDDINGS: [(&str, &str); 1] = [("annulus", "the open annulus embeds in the plane")];

/// Values of the largest null system stated for catalog spaces.
fn stated_r_max(name: &str, ring: Ring) -> Option<usize> {
    match (name, ring) {
        ("sphere", _) => Some(0),
        ("rp2", Ring::Z2) => Some(0),
        ("torus", Ring::Z) | ("t3", Ring::Z) => Some(1),
        _ => None,
    }
}

/// Largest number of homoclinic components allowed by the cup product on
/// `H^1(m)`. `observed_r` lists `r` for flows already classified on `m`.
pub fn obstruction_report(m: &CellComplex, ring: Ring, observed_r: &[usize]) -> Result<TheoremVerdict> {
    let embedding = PLANAR_EMBEDDINGS.iter().find(|(n, _)| *n == m.name).map(|(_, why)| *why);
    let (r_max, h1, matrix) = match cup_form_h1(m, ring) {
        Ok(form) => (max_null_system(&form), form.rank(), Some(form.matrix())),
        Err(e) => match embedding {
            Some(_) => (0, cohomology(m, ring).rank(1), None),
            None => return Err(e),
        },
    };
    let text = if r_max == 0 {
        "no unstable attractor without external explosions can exist".to_string()
    } else {
        format!("at most {r_max} homoclinic components")
    };
    let ev = json!({
        "r_max": r_max,
        "h1_rank": h1,
        "form": matrix,
        "expected_r_max": stated_r_max(&m.name, ring),
        "observed_r": observed_r,
        "embedding": embedding,
        "verdict": text,
    });
    let notes = match embedding {
        Some(why) => format!("{text}; {why}, which applies to the interior only"),
        None => text,
    };
    verdict("obstruction", format!("{} over {ring}", m.name), ev, notes)
}

// ---------------------------------------------------------------------------
// shape obstructions from cohomology alone

/// What is known about the ambient manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldData {
    /// Cohomology ranks of a closed manifold.
    Cohomology(Vec<usize>),
    /// Only the Euler characteristic.
    Euler(i64),
}

/// Outcome of the coefficient bookkeeping for `p(M,K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeLedger {
    pub conclusion: String,
    pub reason: String,
    /// `r` when the top rank condition forces a global attractor.
    pub r_forced: Option<usize>,
    /// Coefficient vectors of `p(M,K)` allowed by the exact sequence (or by
    /// the Euler characteristic) with leading coefficient `r`.
    pub candidates: Vec<Vec<usize>>,
    /// The candidates that are also symmetric.
    pub symmetric: Vec<Vec<usize>>,
    /// `p(n-) = p(M,K) / t` for each symmetric candidate.
    pub nminus: Vec<Vec<usize>>,
}

/// Search bound for free middle coefficients when only `chi(M)` is known.
const FREE_COEFF_BOUND: usize = 8;

fn symmetric_ok(a: &[usize], n: usize) -> bool {
    (1..=n).all(|k| at(a, k) == at(a, n + 1 - k))
}

/// Pure bookkeeping behind [`shape_obstruction`] on rank vectors.
pub fn shape_ledger(c: &[usize], m: &ManifoldData, n: usize) -> Result<ShapeLedger> {
    if n == 0 {
        return Err(Error::Inconsistent("manifold dimension must be positive".into()));
    }
    if at(c, 0) != 1 {
        return Err(Error::Inconsistent("K must be nonempty and connected".into()));
    }
    if c.iter().skip(n + 1).any(|&x| x != 0) {
        return Err(Error::Inconsistent(format!("K has cohomology above dimension {n}")));
    }
    let mut out = ShapeLedger {
        conclusion: FORCED.into(),
        reason: String::new(),
        r_forced: None,
        candidates: vec![],
        symmetric: vec![],
        nminus: vec![],
    };
    if at(c, n) != 0 {
        out.reason = format!("H^{n}(K) is nonzero");
        return Ok(out);
    }
    match at(c, n - 1) {
        0 => {
            out.reason = format!("H^{}(K) = 0 leaves no room for a homoclinic component", n - 1);
            return Ok(out);
        }
        1 => {}
        _ => {
            out.conclusion = CONSISTENT.into();
            out.reason = "top rank above one: K need not be global, no constraint on p(M,K)".into();
            return Ok(out);
        }
    }
    let r = 1;
    out.r_forced = Some(r);
    let chi_k: i64 = c.iter().enumerate().map(|(k, &x)| if k % 2 == 0 { x as i64 } else { -(x as i64) }).sum();
    let mut cands: BTreeSet<Vec<usize>> = BTreeSet::new();
    match m {
        ManifoldData::Cohomology(mr) => {
            if at(mr, 0) != 1 {
                return Err(Error::Inconsistent("M must be connected".into()));
            }
            if mr.iter().skip(n + 1).any(|&x| x != 0) {
                return Err(Error::Inconsistent(format!("M has cohomology above dimension {n}")));
            }
            // rho_k = rank of the restriction H^k(M) -> H^k(K); exactness gives
            // a_k = (c_{k-1} - rho_{k-1}) + (m_k - rho_k)
            let bounds: Vec<usize> = (0..=n).map(|k| at(mr, k).min(at(c, k))).collect();
            let mut rho = vec![0usize; n + 1];
            rho[0] = 1;
            loop {
                let a: Vec<usize> = (0..=n)
                    .map(|k| if k == 0 { at(mr, 0) - rho[0] } else { (at(c, k - 1) - rho[k - 1]) + (at(mr, k) - rho[k]) })
                    .collect();
                if at(&a, n) == r && at(c, n) == rho[n] {
                    cands.insert(a);
                }
                // odometer over rho_1..rho_n
                let mut i = 1;
                while i <= n && rho[i] == bounds[i] {
                    rho[i] = 0;
                    i += 1;
                }
                if i > n {
                    break;
                }
                rho[i] += 1;
            }
        }
        ManifoldData::Euler(chi_m) => {
            // a_0 = 0, a_1 = a_n = r, the rest paired by symmetry
            let free: Vec<usize> = (2..=n / 2 + usize::from(n % 2 == 1)).filter(|&k| k < n && k <= n + 1 - k).collect();
            let mut vals = vec![0usize; free.len()];
            loop {
                let mut a = vec![0usize; n + 1];
                a[n] = r;
                a[1] = r;
                for (i, &k) in free.iter().enumerate() {
                    a[k] = vals[i];
                    a[n + 1 - k] = vals[i];
                }
                let p_at = a.iter().enumerate().map(|(k, &x)| if k % 2 == 0 { x as i64 } else { -(x as i64) }).sum::<i64>();
                if p_at == chi_m - chi_k {
                    cands.insert(a);
                }
                let mut i = 0;
                while i < vals.len() && vals[i] == FREE_COEFF_BOUND {
                    vals[i] = 0;
                    i += 1;
                }
                if i == vals.len() {
                    break;
                }
                vals[i] += 1;
            }
        }
    }
    out.candidates = cands.into_iter().map(trim).collect();
    out.symmetric = out.candidates.iter().filter(|a| symmetric_ok(a, n)).cloned().collect();
    out.nminus = out.symmetric.iter().map(|a| a.iter().skip(1).copied().collect()).collect();
    if out.candidates.is_empty() {
        out.reason = "no coefficients compatible with the exact sequence and leading coefficient r".into();
    } else if out.symmetric.is_empty() {
        out.reason = "every compatible p(M,K) is asymmetric".into();
    } else {
        out.conclusion = CONSISTENT.into();
        out.reason = "a symmetric p(M,K) survives".into();
    }
    Ok(out)
}

/// Runs the bookkeeping on `hk` (cohomology of `K`) and the manifold data.
pub fn shape_obstruction(hk: &HomologyResult, hm: &ManifoldData, n: usize) -> Result<TheoremVerdict> {
    shape_verdict("shape", hk, hm, n, json!({}), "")
}

fn shape_verdict(id: &str, hk: &HomologyResult, hm: &ManifoldData, n: usize, expect: Value, notes: &str) -> Result<TheoremVerdict> {
    let c = trim(hk.ranks.clone());
    let ledger = shape_ledger(&c, hm, n)?;
    let a1: Option<Vec<usize>> = {
        let firsts: BTreeSet<usize> = ledger.candidates.iter().map(|a| at(a, 1)).collect();
        (!firsts.is_empty()).then(|| firsts.into_iter().collect())
    };
    let mut ev = json!({
        "k_ranks": c,
        "manifold": hm,
        "n": n,
        "ring": hk.ring,
        "ledger": ledger,
        "degree1": a1,
        "display": ledger.symmetric.iter().chain(if ledger.symmetric.is_empty() { ledger.candidates.iter() } else { [].iter() }).map(|a| show(a)).collect::<Vec<_>>(),
    });
    if let (Some(obj), Some(extra)) = (ev.as_object_mut(), expect.as_object()) {
        for (k, v) in extra {
            obj.insert(k.clone(), v.clone());
        }
    }
    let inputs = format!("H(K) = {:?} over {}, n = {n}", c, hk.ring);
    let notes = if notes.is_empty() { format!("{}: {}", ledger.conclusion, ledger.reason) } else { format!("{}: {}; {notes}", ledger.conclusion, ledger.reason) };
    verdict(id, inputs, ev, notes)
}

fn decide_shape(ev: &Value) -> Result<bool> {
    let c = list(ev, "k_ranks")?;
    let m: ManifoldData = serde_json::from_value(field(ev, "manifold")?.clone()).map_err(|e| Error::Parse(e.to_string()))?;
    let n = int(ev, "n")? as usize;
    let stored: ShapeLedger = serde_json::from_value(field(ev, "ledger")?.clone()).map_err(|e| Error::Parse(e.to_string()))?;
    let ledger = shape_ledger(&c, &m, n)?;
    if ledger != stored {
        return Ok(false);
    }
    if let Some(want) = ev.get("expected_conclusion").and_then(|v| v.as_str()) {
        if ledger.conclusion != want {
            return Ok(false);
        }
    }
    if let Some(v) = ev.get("expected_p") {
        if ledger.symmetric != vec![nums(v)?] {
            return Ok(false);
        }
    }
    if let Some(v) = ev.get("expected_nminus") {
        if ledger.nminus != vec![nums(v)?] {
            return Ok(false);
        }
    }
    if let Some(v) = ev.get("expected_degree1") {
        if ledger.candidates.iter().any(|a| Some(at(a, 1) as u64) != v.as_u64()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `S^2 v S^1`: a sphere with a loop attached at a vertex.
pub fn sphere_with_loop() -> Result<CellComplex> {
    let s = complex::sphere(2)?;
    let mut raw: RawComplex = s.to_raw();
    let v = raw.add(0, vec![], None);
    let base = s.cells_of_dim(0)[0];
    raw.add(1, vec![(v, 1), (base, -1)], None);
    raw.add(1, vec![(base, 1), (v, -1)], None);
    CellComplex::from_raw("s2-wedge-s1", raw, complex::Orientability::Unknown)
}

// ---------------------------------------------------------------------------
// sphere shape

fn is_homology_sphere(ranks: &[usize], n: usize) -> bool {
    let r = trim(ranks.to_vec());
    r.len() == n + 1 && r[0] == 1 && r[n] == 1 && r[1..n].iter().all(|&x| x == 0)
}

/// Homology fingerprint of `S^n x S^1` ("orientable") or the twisted product
/// ("nonorientable"), with integer coefficients.
fn fingerprint_branch(n: usize, ranks: &[usize], torsion: &[Vec<usize>]) -> Option<String> {
    let ranks = trim(ranks.to_vec());
    let tor = |k: usize| -> Vec<usize> { torsion.get(k).cloned().unwrap_or_default() };
    let no_torsion = (0..=n + 1).all(|k| tor(k).is_empty());
    let mut straight = vec![0usize; n + 2];
    straight[0] += 1;
    straight[1] += 1;
    straight[n] += 1;
    straight[n + 1] += 1;
    if ranks == straight && no_torsion {
        return Some("orientable".into());
    }
    // the reflection has degree -1 on H_n(S^n): H_n picks up Z/2 and the top class dies
    let mut twisted = vec![0usize; n + 1];
    twisted[0] = 1;
    twisted[1] += 1;
    let twisted_torsion = (0..=n + 1).all(|k| if k == n { tor(k) == vec![2] } else { tor(k).is_empty() });
    if ranks == trim(twisted) && twisted_torsion {
        return Some("nonorientable".into());
    }
    None
}

/// Homology fingerprint for an attractor with the shape of `S^n`.
pub fn verify_sphere_shape(f: &CombinatorialFlow, k: &CellSet) -> Result<TheoremVerdict> {
    let cx = &f.complex;
    let report = analyze(k, f)?;
    if report.classification != Classification::NoExternalExplosions {
        return Err(Error::Precondition(format!("{} is {}, not NoExternalExplosions", f.name, report.classification)));
    }
    let block = build_block(k, f, 1)?;
    let hk = trim(subcomplex_homology(cx, &block.n, Ring::Z)?.ranks);
    let n = hk.len().saturating_sub(1);
    if !(1..=2).contains(&n) || !is_homology_sphere(&hk, n) {
        return Err(Error::Precondition(format!("block of {} is not a homology sphere of dimension 1 or 2", f.name)));
    }
    let hm = homology(cx, Ring::Z);
    let torsion: Vec<Vec<usize>> = hm.torsion.iter().map(|t| t.iter().map(|&x| x as usize).collect()).collect();
    let branch = fingerprint_branch(n, &hm.ranks, &torsion).unwrap_or_else(|| "none".into());
    let ev = json!({
        "n": n,
        "m_ranks": trim(hm.ranks.clone()),
        "m_torsion": torsion,
        "k_ranks": hk,
        "nminus_ranks": trim(subcomplex_homology(cx, &block.nminus_sec, Ring::Z)?.ranks),
        "nplus_ranks": trim(subcomplex_homology(cx, &block.nplus_sec, Ring::Z)?.ranks),
        "global": report.global,
        "branch": branch,
    });
    verdict("thm6.1", f.name.clone(), ev, format!("{branch} branch, homology level only"))
}

// ---------------------------------------------------------------------------
// dualities

/// Lefschetz duality for the block and Poincare duality for `n-` over Z2.
pub fn verify_block_duality(f: &CombinatorialFlow, block: &IsolatingBlock) -> Result<TheoremVerdict> {
    let cx = &f.complex;
    if !block.regular {
        return Err(Error::NonRegular(format!("block of {} is not regular", f.name)));
    }
    let ring = Ring::Z2;
    let rel = trim(pair_cohomology(cx, &block.n, &block.boundary, ring)?.ranks);
    let hn = trim(subcomplex_homology(cx, &block.n, ring)?.ranks);
    let sec = trim(subcomplex_homology(cx, &block.nminus_sec, ring)?.ranks);
    let ev = json!({
        "n": cx.top_dim(),
        "rel_cohomology": rel,
        "block_homology": hn,
        "nminus_homology": sec,
    });
    verdict("lem3.1", format!("{} over z2", f.name), ev, "")
}

/// Pairs with cell-isomorphic complements have equal Poincare polynomials.
pub fn verify_complement_invariance(
    label: &str,
    (c1, a1): (&CellComplex, &CellSet),
    (c2, a2): (&CellComplex, &CellSet),
    ring: Ring,
) -> Result<TheoremVerdict> {
    let p1 = poincare_polynomial(c1, &c1.all(), a1, ring)?;
    let p2 = poincare_polynomial(c2, &c2.all(), a2, ring)?;
    let ev = json!({
        "complements_isomorphic": complements_isomorphic(c1, a1, c2, a2),
        "p1": p1.coeffs,
        "p2": p2.coeffs,
        "display": [p1.to_string(), p2.to_string()],
    });
    verdict("lem7.1", format!("{label} over {ring}"), ev, "")
}

/// `H_k(X x [-1,1], X x {-1,1}) = H_{k-1}(X)`.
pub fn verify_suspension(x: &CellComplex, ring: Ring) -> Result<TheoremVerdict> {
    let hx = trim(homology(x, ring).ranks);
    let pair: Vec<usize> = (0..=hx.len() + 1).map(|k| suspension_pair_homology(x, ring, k).rank).collect();
    let ev = json!({ "x_ranks": hx, "pair_ranks": trim(pair) });
    verdict("lem7.2", format!("{} over {ring}", x.name), ev, "")
}

/// `chi(N) - chi(exit)` against `chi(K) - chi(n-)`; on surfaces `chi(n-)`
/// vanishes and the index equals `chi(K)`.
pub fn verify_conley_euler(f: &CombinatorialFlow, k: &CellSet, block: &IsolatingBlock) -> Result<TheoremVerdict> {
    let cx = &f.complex;
    let ev = json!({
        "n": cx.top_dim(),
        "chi_n": cx.euler_of(&block.n),
        "chi_exit": cx.euler_of(&block.exit),
        "chi_k": cx.euler_of(k),
        "chi_nminus": cx.euler_of(&block.nminus_sec),
    });
    verdict("conley-euler", f.name.clone(), ev, "")
}

// ---------------------------------------------------------------------------
// harness

/// A catalog flow with its analysis and block.
pub struct Analyzed {
    pub cf: CatalogFlow,
    pub report: AttractorReport,
    pub block: Result<IsolatingBlock>,
}

pub fn analyze_catalog(name: &str, resolution: usize) -> Result<Analyzed> {
    let cf = catalog_flow(name, resolution)?;
    let report = analyze(&cf.k, &cf.flow)?;
    let block = build_block(&cf.k, &cf.flow, 1);
    Ok(Analyzed { cf, report, block })
}

fn block_of(a: &Analyzed) -> Result<&IsolatingBlock> {
    a.block.as_ref().map_err(|e| e.clone())
}

/// Surface flows used by the Euler characteristic checks.
pub const SURFACE_FLOWS: [&str; 7] = [
    "example22-torus",
    "example22-klein",
    "hypersurface-torus",
    "hypersurface-genus2",
    "hypersurface-genus2-two",
    "north-south",
    "homoclinic-sphere",
];

/// NoExternalExplosions and stable catalog flows on closed manifolds.
fn bound_flows() -> Vec<&'static str> {
    crate::constructions::FLOW_CATALOG.iter().copied().filter(|n| *n != "example22-annulus" && *n != "homoclinic-sphere").collect()
}

fn run_id(id: &str, res: usize) -> Result<Vec<TheoremVerdict>> {
    let flows = |names: &[&str]| -> Result<Vec<Analyzed>> { names.iter().map(|n| analyze_catalog(n, res)).collect() };
    let mut out = vec![];
    match id {
        "thm3.4" => {
            for a in flows(&["example22-torus", "hypersurface-genus2", "hypersurface-genus2-two"])? {
                out.push(verify_symmetry(&a.cf.flow, &a.report, block_of(&a)?, Ring::Z2)?);
            }
        }
        "prop3.2" => {
            for a in flows(&bound_flows())? {
                out.push(verify_bounds(&a.cf.flow, &a.report, block_of(&a)?, Ring::Z2)?);
            }
        }
        "cor3.3" => {
            for a in flows(&bound_flows())? {
                out.push(verify_global(&a.cf.flow, &a.report, block_of(&a)?, Ring::Z2)?);
            }
        }
        "thm4.1" => {
            for name in SURFACE_FLOWS {
                let cf = catalog_flow(name, res)?;
                out.push(verify_chi_criterion(&cf.flow, &cf.k)?);
            }
        }
        "cor5.8" => {
            for name in crate::constructions::FLOW_CATALOG {
                let cf = catalog_flow(name, res)?;
                if cf.planar {
                    out.push(verify_planar_chi(&cf.flow, &cf.k)?);
                }
            }
        }
        "thm4.2" => {
            for name in ["example22-torus", "example22-klein", "hypersurface-torus", "hypersurface-genus2", "hypersurface-genus2-two"] {
                let cf = catalog_flow(name, res)?;
                out.push(verify_bouquet(&cf.flow, &cf.k)?);
            }
        }
        "obstruction" => {
            let observed = |flows: &[&str]| -> Result<Vec<usize>> {
                flows
                    .iter()
                    .map(|n| analyze_catalog(n, res))
                    .filter_map(|a| match a {
                        Ok(a) if a.report.classification == Classification::NoExternalExplosions => Some(Ok(a.report.r)),
                        Ok(_) => None,
                        Err(e) => Some(Err(e)),
                    })
                    .collect()
            };
            let cases: [(&str, Ring, Vec<&str>); 5] = [
                ("sphere", Ring::Z, vec!["north-south", "homoclinic-sphere"]),
                ("rp2", Ring::Z2, vec![]),
                ("torus", Ring::Z, vec!["example22-torus", "hypersurface-torus"]),
                ("genus2", Ring::Z2, vec!["hypersurface-genus2", "hypersurface-genus2-two"]),
                ("klein", Ring::Z2, vec!["example22-klein"]),
            ];
            for (space, ring, on) in cases {
                let m = complex::catalog(space, res.max(4))?;
                out.push(obstruction_report(&m, ring, &observed(&on)?)?);
            }
        }
        "ex3.5" => {
            let hk = cohomology(&complex::catalog("sphere", 2)?, Ring::Z);
            let hm = cohomology(&complex::catalog("t3", 3)?, Ring::Z);
            let expect = json!({ "expected_conclusion": FORCED, "expected_degree1": 3 });
            out.push(shape_verdict("ex3.5", &hk, &ManifoldData::Cohomology(hm.ranks), 3, expect, "K with the shape of S^2 in T^3")?);
        }
        "ex3.7" => {
            let hk = cohomology(&sphere_with_loop()?, Ring::Z2);
            let expect = json!({
                "expected_p": [0, 1, 1, 1],
                "expected_nminus": [1, 1, 1],
                "recorded_fact": "boundary-parity contradiction recorded: n- would be RP^2 and a component of N - U would have boundary S^2 + RP^2 with odd Euler characteristic 3",
            });
            out.push(shape_verdict(
                "ex3.7",
                &hk,
                &ManifoldData::Euler(0),
                3,
                expect,
                "closed 3-manifold; boundary-parity contradiction recorded, forcing external explosions",
            )?);
        }
        "shape" => {
            let hk = cohomology(&complex::circle(4)?, Ring::Z);
            let hm = cohomology(&complex::catalog("torus", 4)?, Ring::Z);
            let expect = json!({ "expected_conclusion": CONSISTENT, "expected_p": [0, 1, 1] });
            out.push(shape_verdict("shape", &hk, &ManifoldData::Cohomology(hm.ranks), 2, expect, "K with the shape of S^1 in T^2")?);
        }
        "thm6.1" => {
            for name in ["example22-torus", "example22-klein", "example22-s2", "example22-s2-twisted"] {
                let cf = catalog_flow(name, res)?;
                out.push(verify_sphere_shape(&cf.flow, &cf.k)?);
            }
        }
        "lem3.1" => {
            for name in SURFACE_FLOWS {
                let a = analyze_catalog(name, res)?;
                if let Ok(b) = &a.block {
                    if b.regular {
                        out.push(verify_block_duality(&a.cf.flow, b)?);
                    }
                }
            }
        }
        "lem7.1" => {
            let n = res.max(3);
            let iv = complex::interval(n)?;
            let ends: CellSet = [0, n].into_iter().collect();
            let c = complex::circle(n)?;
            let base: CellSet = [0].into_iter().collect();
            out.push(verify_complement_invariance("(interval, ends) ~ (circle, point)", (&iv, &ends), (&c, &base), Ring::Z)?);
            let ann = complex::product(&c, &iv);
            let tor = complex::product(&c, &c);
            let rim = rim_of(&ann, &c, &[0, n]);
            let slice = rim_of(&tor, &c, &[0]);
            out.push(verify_complement_invariance("(annulus, rim) ~ (torus, circle)", (&ann, &rim), (&tor, &slice), Ring::Z2)?);
        }
        "lem7.2" => {
            for x in [complex::point(), complex::circle(4)?, complex::torus(4)?] {
                out.push(verify_suspension(&x, Ring::Z)?);
            }
        }
        "conley-euler" => {
            for a in flows(&bound_flows())? {
                if a.report.classification == Classification::NoExternalExplosions {
                    out.push(verify_conley_euler(&a.cf.flow, &a.cf.k, block_of(&a)?)?);
                }
            }
        }
        other => return Err(Error::UnknownTheorem(other.to_string())),
    }
    Ok(out)
}

/// Cells `s x t` of a product with `t` in the closure of the given vertices
/// of the second factor.
fn rim_of(p: &CellComplex, a: &CellComplex, verts: &[usize]) -> CellSet {
    let nb = p.len() / a.len();
    let cells: Vec<usize> = (0..a.len()).flat_map(|s| verts.iter().map(move |&t| s * nb + t)).collect();
    p.closure_of_cells(&cells)
}

/// Runs every checker (or the one named by `only`) at the given catalog
/// resolution. Checkers run on separate threads; results come back in
/// [`THEOREM_IDS`] order.
pub fn run_all(only: Option<&str>, resolution: usize) -> Result<Vec<TheoremVerdict>> {
    let ids: Vec<&str> = match only {
        Some(id) if THEOREM_IDS.contains(&id) => vec![id],
        Some(id) => return Err(Error::UnknownTheorem(id.to_string())),
        None => THEOREM_IDS.to_vec(),
    };
    let results: Vec<Result<Vec<TheoremVerdict>>> = std::thread::scope(|s| {
        let handles: Vec<_> = ids.iter().map(|id| s.spawn(move || run_id(id, resolution))).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Error::Inconsistent("checker panicked".into())))).collect()
    });
    let mut out = vec![];
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

