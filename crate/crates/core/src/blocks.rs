//! Isolating blocks, their entrance/exit split and asymptotic sets.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::attractor::{maximal_invariant, viable};
use crate::complex::CellSet;
use crate::error::{Error, Result};
use crate::flow::CombinatorialFlow;

/// `n`, `entrance`, `exit`, `nplus_sec`, `nminus_sec` and `boundary` are closed
/// cell sets; `n_plus`/`n_minus` and `tops` are top cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolatingBlock {
    #[serde(rename = "N")]
    pub n: CellSet,
    pub tops: CellSet,
    pub boundary: CellSet,
    pub entrance_faces: CellSet,
    pub exit_faces: CellSet,
    pub entrance: CellSet,
    pub exit: CellSet,
    #[serde(rename = "Nplus")]
    pub n_plus: CellSet,
    #[serde(rename = "Nminus")]
    pub n_minus: CellSet,
    #[serde(rename = "nplus")]
    pub nplus_sec: CellSet,
    #[serde(rename = "nminus")]
    pub nminus_sec: CellSet,
    pub regular: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Crossing {
    Exit,
    Entrance,
    Both,
    Tangent,
}

fn crossing(f: &CombinatorialFlow, inside: usize, outside: usize) -> Crossing {
    let out = f.successors(inside).contains(&outside);
    let inn = f.successors(outside).contains(&inside);
    match (out, inn) {
        (true, true) => Crossing::Both,
        (true, false) => Crossing::Exit,
        (false, true) => Crossing::Entrance,
        (false, false) => Crossing::Tangent,
    }
}

/// Codimension-one faces between `tops` and the rest, with the adjacent
/// (inside, outside) top cells.
fn frontier(f: &CombinatorialFlow, tops: &BTreeSet<usize>) -> Vec<(usize, usize, usize)> {
    let cx = &f.complex;
    let mut out = vec![];
    for &a in tops {
        for &(g, _) in cx.boundary(a) {
            for &(b, _) in cx.coboundary(g) {
                if b != a && !tops.contains(&b) {
                    out.push((g, a, b));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Grows the `seed_radius`-fold closed star of `k` across tangential faces
/// until every frontier face is crossed by the flow, then checks isolation.
pub fn build_block(k: &CellSet, f: &CombinatorialFlow, seed_radius: usize) -> Result<IsolatingBlock> {
    let cx = &f.complex;
    let ktops: BTreeSet<usize> = cx.top_of(k).into_iter().collect();
    if ktops.is_empty() {
        return Err(Error::NoBlock("attractor has no top cells".into()));
    }
    let mut n = cx.closure(k);
    for _ in 0..seed_radius.max(1) {
        n = cx.closed_star(&n);
    }
    let mut tops: BTreeSet<usize> = cx.top_of(&n).into_iter().collect();
    let budget = cx.top_cells().len();
    let mut sweeps = 0;
    loop {
        let grow: BTreeSet<usize> = frontier(f, &tops)
            .into_iter()
            .filter(|&(_, a, b)| crossing(f, a, b) == Crossing::Tangent)
            .map(|(_, _, b)| b)
            .collect();
        if grow.is_empty() {
            break;
        }
        tops.extend(grow);
        sweeps += 1;
        if sweeps > budget {
            return Err(Error::NoBlock("tangency growth did not terminate".into()));
        }
    }
    let n = cx.closure_of_cells(&tops.iter().copied().collect::<Vec<_>>());
    let inv = maximal_invariant(&n, f);
    if inv.0 != ktops {
        return Err(Error::NoBlock(format!(
            "candidate block of {} top cells has an invariant set of {} cells, attractor has {}",
            tops.len(),
            inv.len(),
            ktops.len()
        )));
    }
    let mut entrance_faces = CellSet::new();
    let mut exit_faces = CellSet::new();
    for (g, a, b) in frontier(f, &tops) {
        match crossing(f, a, b) {
            Crossing::Exit => {
                exit_faces.insert(g);
            }
            Crossing::Entrance => {
                entrance_faces.insert(g);
            }
            Crossing::Both => {
                exit_faces.insert(g);
                entrance_faces.insert(g);
            }
            Crossing::Tangent => unreachable!("growth removed tangencies"),
        }
    }
    let boundary = cx.boundary_of(&n);
    let entrance = cx.closure(&entrance_faces);
    let exit = cx.closure(&exit_faces);
    let (n_plus, n_minus) = asymptotic_sets_of(&tops, f);
    let cl = |s: &BTreeSet<usize>| cx.closure_of_cells(&s.iter().copied().collect::<Vec<_>>());
    let nplus_sec = boundary.intersection(&cl(&n_plus));
    let nminus_sec = boundary.intersection(&cl(&n_minus));
    let mut block = IsolatingBlock {
        n,
        tops: CellSet(tops.clone()),
        boundary,
        entrance_faces,
        exit_faces,
        entrance,
        exit,
        n_plus: CellSet(n_plus.clone()),
        n_minus: CellSet(n_minus.clone()),
        nplus_sec,
        nminus_sec,
        regular: false,
    };
    let covered = n_plus.union(&n_minus).copied().collect::<BTreeSet<_>>() == tops;
    block.regular = covered && sections_ok(&block, k, f)?;
    Ok(block)
}

fn asymptotic_sets_of(tops: &BTreeSet<usize>, f: &CombinatorialFlow) -> (BTreeSet<usize>, BTreeSet<usize>) {
    (viable(tops, f, true), viable(tops, f, false))
}

/// Top cells of the block with a forward (resp. backward) path that never
/// leaves it.
pub fn asymptotic_sets(b: &IsolatingBlock, f: &CombinatorialFlow) -> (CellSet, CellSet) {
    let (p, m) = asymptotic_sets_of(&b.tops.0, f);
    (CellSet(p), CellSet(m))
}

/// Every component of `basin - k` must be entered through the block, and if
/// it is left through the exit set then the exit flow must sweep all of the
/// component outside the block.
fn sections_ok(b: &IsolatingBlock, k: &CellSet, f: &CombinatorialFlow) -> Result<bool> {
    let cx = &f.complex;
    let basin = match crate::attractor::basin(k, f) {
        Ok(b) => b,
        Err(_) => return Ok(false),
    };
    let ktops: BTreeSet<usize> = cx.top_of(k).into_iter().collect();
    let rest: BTreeSet<usize> = basin.iter().filter(|c| !ktops.contains(c)).collect();
    for comp in cx.top_components(&rest, &BTreeSet::new()) {
        let faces_of = |faces: &CellSet| -> Vec<(usize, usize)> {
            comp.iter()
                .flat_map(|&c| cx.boundary(c).iter().map(move |&(g, _)| (g, c)))
                .filter(|(g, _)| faces.contains(*g))
                .collect()
        };
        if faces_of(&b.entrance_faces).is_empty() {
            return Ok(false);
        }
        let exits = faces_of(&b.exit_faces);
        if exits.is_empty() {
            continue;
        }
        // cells just outside the exit faces
        let mut start = BTreeSet::new();
        for (g, _) in exits {
            for &(c, _) in cx.coboundary(g) {
                if !b.tops.contains(c) {
                    start.insert(c);
                }
            }
        }
        let reached = f.reach(&start, true);
        if comp.iter().any(|c| !b.tops.contains(*c) && !reached.contains(c)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Numbers of connected components of the exit and entrance sections.
pub fn section_components(b: &IsolatingBlock, f: &CombinatorialFlow) -> Result<(usize, usize)> {
    if !b.regular {
        return Err(Error::NonRegular("section counts need a regular block".into()));
    }
    let cx = &f.complex;
    Ok((cx.components_of(&b.nminus_sec).len(), cx.components_of(&b.nplus_sec).len()))
}

/// `chi(N) - chi(exit set)`, with the empty set counted as zero.
pub fn conley_euler(b: &IsolatingBlock, f: &CombinatorialFlow) -> i64 {
    f.complex.euler_of(&b.n) - f.complex.euler_of(&b.exit)
}
