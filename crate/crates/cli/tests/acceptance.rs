//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances are the constants below.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use conleylab::algebra::{cup_form_h1, pair_cohomology};
use conleylab::attractor::analyze;
use conleylab::blocks::build_block;
use conleylab::complex::{self, CellComplex, CellSet, DEFAULT_RESOLUTION};
use conleylab::constructions::{catalog_flow, FLOW_CATALOG};
use conleylab::theorems::{basin_euler, obstruction_report, run_all, ShapeLedger, TheoremVerdict, FORCED, SURFACE_FLOWS};
use conleylab::{Classification, Ring};
use serde_json::Value;

/// Wall-clock budget for the resolution-16 torus pipeline.
const TORUS_BUDGET: Duration = Duration::from_secs(5);
/// Wall-clock budget for the exhaustive duality sweep.
const DUALITY_BUDGET: Duration = Duration::from_secs(60);
/// Largest flow the duality sweep must cover.
const DUALITY_MAX_TOPS: usize = 2000;
/// Resolution of the duality sweep.
const DUALITY_RESOLUTION: usize = 16;
/// Everything else is integer-exact at the default catalog resolution.
const RES: usize = DEFAULT_RESOLUTION;

type Outcome = Result<(bool, String), String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn records(id: &str) -> Result<Vec<TheoremVerdict>, String> {
    run_all(Some(id), RES).map_err(err)
}

fn nums(v: &Value, key: &str) -> Vec<usize> {
    v[key].as_array().map(|a| a.iter().filter_map(|x| x.as_u64()).map(|x| x as usize).collect()).unwrap_or_default()
}

fn rank(v: &[usize], k: usize) -> usize {
    v.get(k).copied().unwrap_or(0)
}

fn closed_manifold(cx: &CellComplex) -> bool {
    let d = cx.top_dim();
    d >= 1 && cx.cells_of_dim(d - 1).iter().all(|&g| cx.coboundary(g).len() == 2)
}

fn c1_torus_pipeline() -> Outcome {
    let t0 = Instant::now();
    let cf = catalog_flow("example22-torus", 16).map_err(err)?;
    let rep = analyze(&cf.k, &cf.flow).map_err(err)?;
    let dt = t0.elapsed();
    let ok = rep.classification == Classification::NoExternalExplosions && rep.r == 1 && rep.s == 1 && rep.global && dt < TORUS_BUDGET;
    Ok((ok, format!("{} r={} s={} global={} in {:.2?}", rep.classification, rep.r, rep.s, rep.global, dt)))
}

fn c2_symmetry() -> Outcome {
    let recs = records("thm3.4")?;
    let want = [("example22-torus", vec![0, 1, 1]), ("hypersurface-genus2-two", vec![0, 2, 2])];
    let mut ok = true;
    let mut detail = vec![];
    for (name, p) in want {
        let rec = recs.iter().find(|v| v.inputs.starts_with(name)).ok_or(format!("no record for {name}"))?;
        let got = nums(&rec.evidence, "p");
        let r = rec.evidence["r"].as_u64().unwrap_or(0) as usize;
        let n = rec.evidence["n"].as_u64().unwrap_or(0) as usize;
        ok &= got == p && rank(&got, n) == r && rec.pass;
        detail.push(format!("{name}: {} (r={r})", rec.evidence["p_display"].as_str().unwrap_or("?")));
    }
    Ok((ok, detail.join("; ")))
}

fn c3_bounds() -> Outcome {
    let mut checked = vec![];
    let mut skipped = vec![];
    let mut ok = true;
    for name in FLOW_CATALOG {
        let cf = catalog_flow(name, RES).map_err(err)?;
        let rep = analyze(&cf.k, &cf.flow).map_err(err)?;
        if rep.classification != Classification::NoExternalExplosions {
            continue;
        }
        let cx = &cf.flow.complex;
        // the bound is stated for manifolds without boundary
        if !closed_manifold(cx) {
            skipped.push(name);
            continue;
        }
        let b = build_block(&cf.k, &cf.flow, 1).map_err(err)?;
        let h = pair_cohomology(cx, &b.n, &CellSet::new(), Ring::Z2).map_err(err)?.ranks;
        let n = cx.top_dim();
        let good = rep.r <= rep.s && rep.s <= rank(&h, n - 1) && (n..h.len()).all(|k| h[k] == 0);
        if !good {
            ok = false;
        }
        checked.push(format!("{name}{}", if good { "" } else { "(!)" }));
    }
    ok &= !checked.is_empty();
    Ok((ok, format!("{} flows [{}]; outside hypothesis (boundary): {:?}", checked.len(), checked.join(", "), skipped)))
}

fn c4_chi_criterion() -> Outcome {
    let mut mismatches = vec![];
    for name in SURFACE_FLOWS {
        let cf = catalog_flow(name, RES).map_err(err)?;
        let rep = analyze(&cf.k, &cf.flow).map_err(err)?;
        let cx = &cf.flow.complex;
        let equal = cx.euler_of(&cf.k) == basin_euler(cx, &rep.basin);
        let internal = matches!(rep.classification, Classification::Stable | Classification::NoExternalExplosions);
        if equal != internal {
            mismatches.push(name);
        }
    }
    Ok((SURFACE_FLOWS.len() >= 6 && mismatches.is_empty(), format!("{} surface flows, mismatches {:?}", SURFACE_FLOWS.len(), mismatches)))
}

fn c5_bouquet() -> Outcome {
    let mut ok = true;
    let mut detail = vec![];
    for (name, ring, want) in [("example22-torus", Ring::Z, 1), ("hypersurface-genus2", Ring::Z, 3), ("example22-klein", Ring::Z2, 1)] {
        let cf = catalog_flow(name, RES).map_err(err)?;
        let cx = &cf.flow.complex;
        let b = build_block(&cf.k, &cf.flow, 1).map_err(err)?;
        let h1 = rank(&pair_cohomology(cx, &b.n, &CellSet::new(), ring).map_err(err)?.ranks, 1);
        ok &= h1 == want && h1 as i64 == 1 - cx.euler();
        detail.push(format!("{name} rk H1 = {h1}"));
    }
    let mut surfaces = 0;
    for name in FLOW_CATALOG {
        let cf = catalog_flow(name, RES).map_err(err)?;
        let cx = &cf.flow.complex;
        if cx.top_dim() != 2 || !closed_manifold(cx) {
            continue;
        }
        let rep = analyze(&cf.k, &cf.flow).map_err(err)?;
        if rep.classification == Classification::NoExternalExplosions && rep.global {
            surfaces += 1;
            ok &= cx.euler() <= 0;
        }
    }
    detail.push(format!("chi(M) <= 0 on {surfaces} global surface flows"));
    Ok((ok, detail.join("; ")))
}

/// Largest set of independent classes with all pairwise (and square) cup
/// products zero, by depth-first search over `F2^n` in increasing order.
fn brute_null_system(m: &CellComplex) -> Result<usize, String> {
    let form = cup_form_h1(m, Ring::Z2).map_err(err)?;
    let n = form.rank();
    let vec_of = |x: u32| -> Vec<i64> { (0..n).map(|i| ((x >> i) & 1) as i64).collect() };
    let zero = |x: u32, y: u32| form.product(&vec_of(x), &vec_of(y)).iter().all(|v| v.rem_euclid(2) == 0);
    fn dfs(start: u32, top: u32, chosen: &mut Vec<u32>, span: &mut Vec<u32>, zero: &dyn Fn(u32, u32) -> bool, best: &mut usize) {
        *best = (*best).max(chosen.len());
        for v in start..top {
            if span.contains(&v) || !zero(v, v) || !chosen.iter().all(|&c| zero(c, v)) {
                continue;
            }
            let old = span.len();
            for i in 0..old {
                span.push(span[i] ^ v);
            }
            chosen.push(v);
            dfs(v + 1, top, chosen, span, zero, best);
            chosen.pop();
            span.truncate(old);
        }
    }
    let mut best = 0;
    dfs(1, 1 << n, &mut vec![], &mut vec![0], &zero, &mut best);
    Ok(best)
}

fn c6_obstruction() -> Outcome {
    let mut ok = true;
    let mut detail = vec![];
    for (space, ring, want) in [("sphere", Ring::Z, 0), ("rp2", Ring::Z2, 0), ("torus", Ring::Z, 1), ("genus2", Ring::Z2, 2)] {
        let m = complex::catalog(space, RES).map_err(err)?;
        let rec = obstruction_report(&m, ring, &[]).map_err(err)?;
        let r_max = rec.evidence["r_max"].as_u64().ok_or("r_max missing")? as usize;
        ok &= r_max == want;
        let mut line = format!("{space}/{ring} r_max={r_max}");
        if ring == Ring::Z2 {
            let oracle = brute_null_system(&m)?;
            ok &= oracle == r_max;
            line += &format!(" (oracle {oracle})");
        }
        detail.push(line);
    }
    Ok((ok, detail.join("; ")))
}

fn ledger(rec: &TheoremVerdict) -> Result<ShapeLedger, String> {
    serde_json::from_value(rec.evidence["ledger"].clone()).map_err(err)
}

fn c7_shape_examples() -> Outcome {
    let r35 = records("ex3.5")?.pop().ok_or("no ex3.5 record")?;
    let l35 = ledger(&r35)?;
    let degree1: Vec<usize> = l35.candidates.iter().map(|a| rank(a, 1)).collect();
    let ok35 = l35.conclusion == FORCED && l35.r_forced == Some(1) && !degree1.is_empty() && degree1.iter().all(|&d| d == 3);
    let r37 = records("ex3.7")?.pop().ok_or("no ex3.7 record")?;
    let l37 = ledger(&r37)?;
    let ok37 = l37.symmetric == vec![vec![0, 1, 1, 1]] && l37.nminus == vec![vec![1, 1, 1]];
    Ok((
        ok35 && ok37,
        format!("ex3.5 {} with degree-1 {:?} vs r={:?}; ex3.7 p(M,K) {:?} p(n-) {:?}", l35.conclusion, degree1, l35.r_forced, l37.symmetric, l37.nminus),
    ))
}

fn c8_conley_euler() -> Outcome {
    let mut ok = true;
    let mut surface = vec![];
    let mut other = vec![];
    for name in FLOW_CATALOG {
        let cf = catalog_flow(name, RES).map_err(err)?;
        let rep = analyze(&cf.k, &cf.flow).map_err(err)?;
        if rep.classification != Classification::NoExternalExplosions {
            continue;
        }
        let cx = &cf.flow.complex;
        let b = build_block(&cf.k, &cf.flow, 1).map_err(err)?;
        let index = cx.euler_of(&b.n) - cx.euler_of(&b.exit);
        let chi_k = cx.euler_of(&cf.k);
        if cx.top_dim() == 2 && closed_manifold(cx) {
            // the identity belongs to the characterization on closed surfaces
            ok &= index == chi_k;
            surface.push(format!("{name} {index}={chi_k}"));
        } else {
            let general = index == chi_k - cx.euler_of(&b.nminus_sec);
            ok &= general;
            other.push(format!("{name} {index}=chi(K)-chi(n-)"));
        }
    }
    ok &= !surface.is_empty();
    Ok((ok, format!("surfaces [{}]; general identity [{}]", surface.join(", "), other.join(", "))))
}

fn c9_dualities() -> Outcome {
    let l31 = records("lem3.1")?;
    let regular = SURFACE_FLOWS
        .iter()
        .filter(|n| {
            let cf = catalog_flow(n, RES).expect("catalog flow");
            build_block(&cf.k, &cf.flow, 1).map(|b| b.regular).unwrap_or(false)
        })
        .count();
    let ok31 = l31.len() == regular && l31.iter().all(|v| v.pass);
    let l72 = records("lem7.2")?;
    let shifted = l72.iter().all(|v| {
        let x = nums(&v.evidence, "x_ranks");
        let pair = nums(&v.evidence, "pair_ranks");
        rank(&pair, 0) == 0 && (0..x.len()).all(|k| rank(&pair, k + 1) == x[k]) && pair.len() == x.len() + 1
    });
    let ok72 = l72.len() == 3 && shifted && l72.iter().all(|v| v.pass);
    let l71 = records("lem7.1")?;
    let ok71 = l71.len() == 2
        && l71.iter().all(|v| v.pass && v.evidence["complements_isomorphic"] == Value::Bool(true) && v.evidence["p1"] == v.evidence["p2"]);
    Ok((ok31 && ok72 && ok71, format!("lem3.1 {}/{regular} blocks, lem7.2 {} spaces, lem7.1 {} pairs", l31.len(), l72.len(), l71.len())))
}

fn c10_j_duality() -> Outcome {
    let t0 = Instant::now();
    let mut violations = 0usize;
    let mut covered = vec![];
    for name in FLOW_CATALOG {
        let f = catalog_flow(name, DUALITY_RESOLUTION).map_err(err)?.flow;
        let tops = f.top_cells();
        if tops.len() > DUALITY_MAX_TOPS {
            continue;
        }
        let all = f.complex.all();
        let plus: Vec<CellSet> = tops.iter().map(|&x| f.j_plus(x, &all).map(|j| j.cells)).collect::<Result<_, _>>().map_err(err)?;
        let minus: Vec<CellSet> = tops.iter().map(|&x| f.j_minus(x, &all).map(|j| j.cells)).collect::<Result<_, _>>().map_err(err)?;
        for (i, &x) in tops.iter().enumerate() {
            for (j, &y) in tops.iter().enumerate() {
                if minus[i].contains(y) != plus[j].contains(x) {
                    violations += 1;
                }
            }
        }
        covered.push(tops.len());
    }
    let dt = t0.elapsed();
    Ok((
        violations == 0 && covered.len() == FLOW_CATALOG.len() && dt < DUALITY_BUDGET,
        format!("{} flows ({} tops max), {violations} violations in {:.2?}", covered.len(), covered.iter().max().unwrap_or(&0), dt),
    ))
}

fn c11_sphere_shape() -> Outcome {
    let recs = records("thm6.1")?;
    let find = |name: &str| recs.iter().find(|v| v.inputs == name).ok_or(format!("no record for {name}"));
    let branch = |v: &TheoremVerdict| v.evidence["branch"].as_str().unwrap_or("").to_string();
    let torus = find("example22-torus")?;
    let klein = find("example22-klein")?;
    let s2 = find("example22-s2")?;
    let twisted = find("example22-s2-twisted")?;
    let klein_torsion = klein.evidence["m_torsion"] == serde_json::json!([[], [2], []]);
    let ok = branch(torus) == "orientable"
        && nums(&torus.evidence, "m_ranks") == [1, 2, 1]
        && branch(klein) == "nonorientable"
        && nums(&klein.evidence, "m_ranks") == [1, 1]
        && klein_torsion
        && branch(s2) == "orientable"
        && nums(&s2.evidence, "m_ranks") == [1, 1, 1, 1]
        && branch(twisted) == "nonorientable"
        && recs.iter().all(|v| v.pass);
    Ok((
        ok,
        format!(
            "untwisted n=1 {} {:?}; twisted n=1 {} {:?}; n=2 {} {:?}",
            branch(torus),
            nums(&torus.evidence, "m_ranks"),
            branch(klein),
            nums(&klein.evidence, "m_ranks"),
            branch(s2),
            nums(&s2.evidence, "m_ranks")
        ),
    ))
}

fn c12_determinism() -> Outcome {
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_conleylab")).arg("verify").output().map_err(err)?;
        if out.stdout.is_empty() {
            return Err(format!("verify wrote nothing: {}", String::from_utf8_lossy(&out.stderr)));
        }
        Ok(out.stdout)
    };
    let (a, b) = (run()?, run()?);
    let parsed: Value = serde_json::from_slice(&a).map_err(err)?;
    let n = parsed.as_array().map(|v| v.len()).unwrap_or(0);
    Ok((a == b && n > 0, format!("{} bytes, {n} records, identical: {}", a.len(), a == b)))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("torus flow pipeline", c1_torus_pipeline),
        ("symmetric Poincare polynomial", c2_symmetry),
        ("r <= s <= rk H^{n-1}(K)", c3_bounds),
        ("Euler characteristic criterion", c4_chi_criterion),
        ("bouquet ranks on surfaces", c5_bouquet),
        ("cup product obstruction", c6_obstruction),
        ("shape bookkeeping examples", c7_shape_examples),
        ("Conley-Euler identity", c8_conley_euler),
        ("duality suites", c9_dualities),
        ("combinatorial J-duality", c10_j_duality),
        ("sphere shape fingerprints", c11_sphere_shape),
        ("verify determinism", c12_determinism),
    ];
    let t0 = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!("{} {:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria pass in {:.2?}", criteria.len() - failed, criteria.len(), t0.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
