//! Attractors of combinatorial flows: basins, stabilizations, components of
//! the basin and the stability verdict.
//!
//! `k` and the stabilization are closed cell sets; basins, collars and
//! components are sets of top cells.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::complex::CellSet;
use crate::error::{Error, Result};
use crate::flow::CombinatorialFlow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Classification {
    Stable,
    NoExternalExplosions,
    ExternalExplosions,
    Unknown,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Stable => "Stable",
            Classification::NoExternalExplosions => "NoExternalExplosions",
            Classification::ExternalExplosions => "ExternalExplosions",
            Classification::Unknown => "Unknown",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentLabel {
    Homoclinic,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub cells: CellSet,
    pub label: ComponentLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttractorReport {
    pub k: CellSet,
    pub collar: CellSet,
    pub basin: CellSet,
    pub stabilization: CellSet,
    pub unstable_manifold: CellSet,
    pub components: Vec<Component>,
    pub r: usize,
    pub s: usize,
    pub classification: Classification,
    pub global: bool,
    pub witness: Option<usize>,
}

fn tops_of(f: &CombinatorialFlow, s: &CellSet) -> BTreeSet<usize> {
    s.iter().filter(|&c| f.complex.is_top(c)).collect()
}

/// Top cells sharing a vertex with `k`.
pub fn collar(k: &CellSet, f: &CombinatorialFlow) -> CellSet {
    let cx = &f.complex;
    let star = cx.closed_star(k);
    star.iter().filter(|&c| cx.is_top(c)).collect()
}

/// Top cells of `n` lying on a path inside `n` that extends infinitely in
/// both directions.
pub fn maximal_invariant(n: &CellSet, f: &CombinatorialFlow) -> CellSet {
    let mut s = tops_of(f, n);
    loop {
        let keep: BTreeSet<usize> = s
            .iter()
            .copied()
            .filter(|&c| f.successors(c).iter().any(|d| s.contains(d)) && f.predecessors(c).iter().any(|d| s.contains(d)))
            .collect();
        if keep.len() == s.len() {
            return CellSet(s);
        }
        s = keep;
    }
}

/// Top cells of `n` with some forward (or backward) path staying in `n`.
pub fn viable(n: &BTreeSet<usize>, f: &CombinatorialFlow, forward: bool) -> BTreeSet<usize> {
    let mut s = n.clone();
    loop {
        let keep: BTreeSet<usize> = s
            .iter()
            .copied()
            .filter(|&c| {
                let next = if forward { f.successors(c) } else { f.predecessors(c) };
                next.iter().any(|d| s.contains(d))
            })
            .collect();
        if keep.len() == s.len() {
            return s;
        }
        s = keep;
    }
}

fn check_isolated(k: &CellSet, f: &CombinatorialFlow) -> Result<BTreeSet<usize>> {
    let ktops = tops_of(f, k);
    if ktops.is_empty() {
        return Err(Error::NotIsolated("attractor has no top cells".into()));
    }
    let col = collar(k, f);
    let inv = maximal_invariant(&col, f);
    if inv.0 != ktops {
        return Err(Error::NotIsolated(format!(
            "largest invariant set in the collar has {} top cells, attractor has {}",
            inv.len(),
            ktops.len()
        )));
    }
    Ok(ktops)
}

/// Top cells whose omega-limit enclosure lies in the collar of `k`.
pub fn basin(k: &CellSet, f: &CombinatorialFlow) -> Result<CellSet> {
    let ktops = check_isolated(k, f)?;
    let col = collar(k, f);
    let mut out: CellSet = ktops.iter().copied().collect();
    for x in f.top_cells() {
        if ktops.contains(&x) {
            continue;
        }
        if f.omega_limit(x)?.core.is_subset(&col) {
            out.insert(x);
        }
    }
    Ok(out)
}

/// `k` together with the top cells whose alpha-limit enclosure is nonempty
/// and lies in the collar.
pub fn unstable_manifold(k: &CellSet, f: &CombinatorialFlow) -> Result<CellSet> {
    let ktops = tops_of(f, k);
    let col = collar(k, f);
    let mut out: CellSet = ktops.iter().copied().collect();
    for x in f.top_cells() {
        if ktops.contains(&x) {
            continue;
        }
        let a = f.alpha_limit(x)?;
        if !a.core.is_empty() && a.core.is_subset(&col) {
            out.insert(x);
        }
    }
    Ok(out)
}

fn stabilization_in(k: &CellSet, f: &CombinatorialFlow, basin: &CellSet) -> Result<CellSet> {
    let mut hat = tops_of(f, k);
    let mut queue: Vec<usize> = hat.iter().copied().collect();
    while let Some(x) = queue.pop() {
        let e = f.j_plus(x, basin)?;
        for c in e.core.iter() {
            if hat.insert(c) {
                queue.push(c);
            }
        }
    }
    let cells: Vec<usize> = hat.into_iter().collect();
    Ok(f.complex.closure_of_cells(&cells).union(k))
}

/// Smallest set containing `k` that is closed under the prolongational limit
/// cores of its top cells, taken relative to the basin.
pub fn stabilization(k: &CellSet, f: &CombinatorialFlow) -> Result<CellSet> {
    let b = basin(k, f)?;
    stabilization_in(k, f, &b)
}

/// Components of `basin - k` under codimension-one adjacency, each labelled
/// homoclinic when it lies in the stabilization.
pub fn components(k: &CellSet, basin: &CellSet, stabilization: &CellSet, f: &CombinatorialFlow) -> (Vec<Component>, usize, usize) {
    let ktops = tops_of(f, k);
    let rest: BTreeSet<usize> = basin.iter().filter(|c| !ktops.contains(c)).collect();
    let comps = f.complex.top_components(&rest, &BTreeSet::new());
    let mut out = vec![];
    let mut r = 0;
    for comp in comps {
        let homoclinic = comp.iter().all(|&c| stabilization.contains(c));
        if homoclinic {
            r += 1;
        }
        let label = if homoclinic { ComponentLabel::Homoclinic } else { ComponentLabel::Uniform };
        out.push(Component { cells: CellSet(comp), label });
    }
    let s = out.len();
    (out, r, s)
}

/// Verdict and optional witness. Stable when the stabilization adds no top
/// cells. Otherwise every basin cell must have its forward prolongation
/// relative to `basin - k` inside the collar, and every cell of the
/// stabilization its backward one. A failure is certified when the failing
/// enclosure's core holds a cell outside the collar that lies on a cycle.
pub fn classify(k: &CellSet, basin: &CellSet, stabilization: &CellSet, f: &CombinatorialFlow) -> Result<(Classification, Option<usize>)> {
    let ktops = tops_of(f, k);
    let hat = tops_of(f, stabilization);
    if hat == ktops {
        return Ok((Classification::Stable, None));
    }
    let col = collar(k, f);
    let a: CellSet = basin.iter().filter(|c| !ktops.contains(c)).collect();
    let mut failures = vec![];
    for x in a.iter() {
        let e = f.j_plus(x, &a)?;
        if !e.cells.is_subset(&col) {
            failures.push((x, e));
        }
    }
    for &x in hat.difference(&ktops) {
        let e = f.j_minus(x, &a)?;
        if !e.cells.is_subset(&col) {
            failures.push((x, e));
        }
    }
    if failures.is_empty() {
        return Ok((Classification::NoExternalExplosions, None));
    }
    let certified: Vec<usize> = failures
        .iter()
        .filter(|(_, e)| e.core.iter().any(|c| !col.contains(c) && f.is_cyclic(c)))
        .map(|(x, _)| *x)
        .collect();
    if certified.is_empty() {
        return Ok((Classification::Unknown, None));
    }
    let all = f.complex.all();
    let mut candidates: Vec<usize> = certified.clone();
    candidates.sort_unstable();
    candidates.dedup();
    for &x in &candidates {
        if !f.j_plus(x, &all)?.cells.is_subset(&col) {
            return Ok((Classification::ExternalExplosions, Some(x)));
        }
    }
    Ok((Classification::ExternalExplosions, Some(candidates[0])))
}

/// Full pipeline for a seed attractor.
pub fn analyze(k: &CellSet, f: &CombinatorialFlow) -> Result<AttractorReport> {
    if !f.complex.is_closed(k) {
        return Err(Error::NotClosed);
    }
    let b = basin(k, f)?;
    let hat = stabilization_in(k, f, &b)?;
    let wu = unstable_manifold(k, f)?;
    let (components, r, s) = components(k, &b, &hat, f);
    let (classification, witness) = classify(k, &b, &hat, f)?;
    let global = b.len() == f.top_cells().len();
    Ok(AttractorReport {
        k: k.clone(),
        collar: collar(k, f),
        basin: b,
        stabilization: hat,
        unstable_manifold: wu,
        components,
        r,
        s,
        classification,
        global,
        witness,
    })
}
