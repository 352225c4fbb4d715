//! Catalog flows and flow surgery.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::attractor::Classification;
use crate::complex::{self, interval, CellComplex, CellMap, CellSet, RawComplex, DEFAULT_RESOLUTION};
use crate::error::{Error, Result};
use crate::flow::{CombinatorialFlow, FlowRecipe};

/// Verdict a catalog flow is expected to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub classification: Classification,
    pub r: usize,
    pub s: usize,
}

/// A flow together with its seed attractor.
#[derive(Debug, Clone)]
pub struct CatalogFlow {
    pub flow: CombinatorialFlow,
    pub k: CellSet,
    pub expected: Option<Expected>,
    /// Sphere flows standing in for planar flows with a frozen point at infinity.
    pub planar: bool,
}

pub const FLOW_CATALOG: [&str; 12] = [
    "example22-torus",
    "example22-klein",
    "example22-annulus",
    "example22-circle",
    "example22-s2",
    "example22-s2-twisted",
    "north-south",
    "north-south-circle",
    "homoclinic-sphere",
    "hypersurface-torus",
    "hypersurface-genus2",
    "hypersurface-genus2-two",
];

fn expect(classification: Classification, r: usize, s: usize) -> Option<Expected> {
    Some(Expected { classification, r, s })
}

/// Builds a catalog flow at the given resolution.
pub fn catalog_flow(name: &str, resolution: usize) -> Result<CatalogFlow> {
    if resolution == 0 {
        return Err(Error::ZeroResolution);
    }
    use Classification::*;
    let res = resolution;
    let (flow, k, expected, planar) = match name {
        "example22-torus" => {
            let (f, k) = example22_on(complex::torus(res)?)?;
            (f, k, expect(NoExternalExplosions, 1, 1), false)
        }
        "example22-klein" => {
            let (f, k) = example22_on(complex::klein(res)?)?;
            (f, k, expect(NoExternalExplosions, 1, 1), false)
        }
        "example22-annulus" => {
            let (_, f, k) = example_general_with(&interval(res)?, None, res)?;
            (f, k, expect(NoExternalExplosions, 1, 1), false)
        }
        "example22-circle" => {
            let (_, f, k) = example_general_with(&complex::point(), None, res)?;
            (f, k, expect(NoExternalExplosions, 1, 1), false)
        }
        "example22-s2" => {
            let (_, f, k) = example_general_with(&complex::sphere(2)?, None, res)?;
            (f, k, expect(NoExternalExplosions, 1, 1), false)
        }
        "example22-s2-twisted" => {
            let glue = complex::sphere_reflection(2)?;
            let (_, f, k) = example_general_with(&complex::sphere(2)?, Some(&glue), res)?;
            (f, k, expect(NoExternalExplosions, 1, 1), false)
        }
        "north-south" => {
            let (f, k) = north_south_on(complex::sphere(res)?)?;
            (f, k, expect(Stable, 0, 1), true)
        }
        "north-south-circle" => {
            let (f, k) = north_south_circle(res)?;
            (f, k, expect(Stable, 0, 2), false)
        }
        "homoclinic-sphere" => {
            let (_, f, k) = homoclinic_sphere_flow_with(res)?;
            (f, k, expect(ExternalExplosions, 0, 1), true)
        }
        "hypersurface-torus" => {
            let m = complex::torus(res.max(6))?;
            let z = meridian(&m, 0, 1)?;
            let (f, k) = hypersurface_flow(Arc::new(m), &z)?;
            (f, k, expect(NoExternalExplosions, 1, 1), false)
        }
        "hypersurface-genus2" => {
            let m = complex::build_surface(2, true, res.max(8))?;
            let z = meridian(&m, 0, 1)?;
            let (f, k) = hypersurface_flow(Arc::new(m), &z)?;
            (f, k, expect(NoExternalExplosions, 1, 1), false)
        }
        "hypersurface-genus2-two" => {
            let m = complex::build_surface(2, true, res.max(8))?;
            let z = meridian(&m, 0, 1)?.union(&meridian(&m, 1, 1)?);
            let (f, k) = hypersurface_flow(Arc::new(m), &z)?;
            (f, k, expect(NoExternalExplosions, 2, 2), false)
        }
        other => return Err(Error::UnknownFlow(other.to_string())),
    };
    let mut flow = flow.with_recipe(FlowRecipe::Catalog { name: name.to_string(), resolution });
    flow.name = name.to_string();
    Ok(CatalogFlow { flow, k, expected, planar })
}

/// Default-resolution catalog flow.
pub fn catalog_flow_default(name: &str) -> Result<CatalogFlow> {
    catalog_flow(name, DEFAULT_RESOLUTION)
}

fn grid_of(cx: &CellComplex) -> Result<&complex::Grid> {
    cx.grid.as_ref().ok_or_else(|| Error::Precondition(format!("{} has no grid structure", cx.name)))
}

/// Mapping torus of `z` (identity glue when `glue` is `None`) with the flow
/// that fixes a band around the distinguished fiber and pushes every other
/// cell one row up.
pub fn example_general(z: &CellComplex, glue: &CellMap) -> Result<(CellComplex, CombinatorialFlow, CellSet)> {
    example_general_with(z, Some(glue), DEFAULT_RESOLUTION)
}

pub fn example_general_with(z: &CellComplex, glue: Option<&CellMap>, rows: usize) -> Result<(CellComplex, CombinatorialFlow, CellSet)> {
    let id = CellMap::identity(z);
    let glue = glue.unwrap_or(&id);
    let mut cx = complex::mapping_torus_with(z, glue, rows)?;
    if glue != &id {
        cx.orientable = complex::Orientability::Unknown;
    }
    let (f, k) = example22_on(cx.clone())?;
    Ok((cx, f, k))
}

/// The mapping-torus flow on a complex built by [`complex::mapping_torus_with`].
/// Rows `R-1` and `0` (the band around the distinguished fiber) are fixed;
/// row `0` also feeds row `1`, and every other row moves one row up.
pub fn example22_on(cx: CellComplex) -> Result<(CombinatorialFlow, CellSet)> {
    let grid = grid_of(&cx)?.clone();
    if cx.distinguished.is_none() || grid.sheets != 1 {
        return Err(Error::Precondition(format!("{} is not a mapping torus", cx.name)));
    }
    let rows = grid.rows;
    if rows < 5 {
        return Err(Error::Precondition("mapping torus flow needs at least 5 rows".into()));
    }
    let mut succ = vec![vec![]; cx.len()];
    let mut fixed = CellSet::new();
    let mut k_tops = vec![];
    for col in 0..grid.cols {
        for r in 0..rows {
            let c = grid.at(0, col, r).unwrap();
            let up = grid.at(0, col, (r + 1) % rows).unwrap();
            if r == 0 {
                succ[c] = vec![c, up];
            } else if r == rows - 1 {
                succ[c] = vec![c];
            } else {
                succ[c] = vec![up];
            }
            if r == 0 || r == rows - 1 {
                fixed.insert(c);
                k_tops.push(c);
            }
        }
    }
    let k = cx.closure_of_cells(&k_tops);
    let name = format!("example22({})", cx.name);
    let f = CombinatorialFlow::new(&name, Arc::new(cx), succ, fixed)?;
    Ok((f, k))
}

/// North-south flow on [`complex::sphere`]: the north cap is a source, the
/// south cap an attracting fixed cell.
pub fn north_south_on(cx: CellComplex) -> Result<(CombinatorialFlow, CellSet)> {
    let grid = grid_of(&cx)?.clone();
    if grid.caps.len() != 2 {
        return Err(Error::Precondition(format!("{} is not a capped cylinder", cx.name)));
    }
    let (south, north) = (grid.caps[0], grid.caps[1]);
    let mut succ = vec![vec![]; cx.len()];
    for col in 0..grid.cols {
        for r in 0..grid.rows {
            let c = grid.at(0, col, r).unwrap();
            succ[c] = vec![if r == 0 { south } else { grid.at(0, col, r - 1).unwrap() }];
        }
    }
    succ[south] = vec![south];
    succ[north] = std::iter::once(north).chain((0..grid.cols).map(|col| grid.at(0, col, grid.rows - 1).unwrap())).collect();
    let k = cx.closure_of_cells(&[south]);
    let fixed = CellSet::from_iter([south, north]);
    let f = CombinatorialFlow::new("north-south", Arc::new(cx), succ, fixed)?;
    Ok((f, k))
}

/// Circle flow with a fixed arc attracting from both sides and a source
/// cell opposite to it.
pub fn north_south_circle(rows: usize) -> Result<(CombinatorialFlow, CellSet)> {
    let p = complex::point();
    let cx = complex::mapping_torus_with(&p, &CellMap::identity(&p), rows)?.renamed("circle");
    let grid = grid_of(&cx)?.clone();
    if rows < 6 {
        return Err(Error::Precondition("north-south circle needs at least 6 rows".into()));
    }
    let h = rows / 2;
    let at = |r: usize| grid.at(0, 0, r).unwrap();
    let mut succ = vec![vec![]; cx.len()];
    let mut fixed = CellSet::new();
    for r in 0..rows {
        let c = at(r);
        succ[c] = if r == 0 || r == rows - 1 {
            fixed.insert(c);
            vec![c]
        } else if r == h {
            fixed.insert(c);
            vec![c, at(r - 1), at(r + 1)]
        } else if r < h {
            vec![at(r - 1)]
        } else {
            vec![at(r + 1)]
        };
    }
    let k = cx.closure_of_cells(&[at(0), at(rows - 1)]);
    let f = CombinatorialFlow::new("north-south-circle", Arc::new(cx), succ, fixed)?;
    Ok((f, k))
}

/// Sphere flow whose attracting fixed cell carries a homoclinic loop that
/// encircles a repelling cell. Uses [`DEFAULT_RESOLUTION`].
pub fn homoclinic_sphere_flow() -> Result<(CellComplex, CombinatorialFlow, CellSet)> {
    homoclinic_sphere_flow_with(DEFAULT_RESOLUTION)
}

/// Layout on the capped cylinder with `cols x rows` squares (both at least 8):
/// column 0 rises from the attractor to row `m`, row `m` runs right to
/// column 4, column 4 falls back to the south cap. Inside the loop everything
/// falls to the south cap except the repeller `(2, m-1)`. Row `m+1` above the
/// loop is swept right past column 4 before falling; the north cap is a
/// source.
pub fn homoclinic_sphere_flow_with(resolution: usize) -> Result<(CellComplex, CombinatorialFlow, CellSet)> {
    let n = resolution.max(8);
    let cx = complex::sphere(n)?;
    let grid = grid_of(&cx)?.clone();
    let (south, north) = (grid.caps[0], grid.caps[1]);
    let m = n / 2;
    let w = 4;
    let at = |c: usize, r: usize| grid.at(0, c, r).unwrap();
    let down = |c: usize, r: usize| if r == 0 { south } else { at(c, r - 1) };
    let mut succ = vec![vec![]; cx.len()];
    for c in 0..n {
        for r in 0..n {
            let x = at(c, r);
            succ[x] = if c == 0 && r == 0 {
                vec![x, at(0, 1)]
            } else if c == 0 && r < m {
                vec![at(0, r + 1)]
            } else if r == m && c < w {
                vec![at(c + 1, m)]
            } else if c == w && r <= m {
                vec![down(c, r)]
            } else if (c, r) == (2, m - 1) {
                vec![x, at(1, r), at(3, r), at(2, r - 1)]
            } else if r == m + 1 && c <= w {
                vec![at(c + 1, r)]
            } else {
                vec![down(c, r)]
            };
        }
    }
    succ[south] = vec![south];
    succ[north] = std::iter::once(north).chain((0..n).map(|c| at(c, n - 1))).collect();
    let attractor = at(0, 0);
    let q = at(2, m - 1);
    let fixed = CellSet::from_iter([south, north, attractor, q]);
    let k = cx.closure_of_cells(&[south, attractor]);
    let f = CombinatorialFlow::new("homoclinic-sphere", Arc::new(cx.clone()), succ, fixed)?;
    Ok((cx, f, k))
}

/// Edges along the left side of grid column `col` on one sheet: a closed
/// curve running around the row direction.
pub fn meridian(m: &CellComplex, sheet: usize, col: usize) -> Result<CellSet> {
    let grid = grid_of(m)?;
    let mut out = CellSet::new();
    for r in 0..grid.rows {
        let c = grid
            .at(sheet, col, r)
            .ok_or_else(|| Error::InvalidCycle(format!("no grid cell at sheet {sheet}, column {col}, row {r}")))?;
        let fr = m.frame(c).ok_or_else(|| Error::InvalidCycle("grid cell has no frame".into()))?;
        out.insert(fr[3].0);
    }
    Ok(out)
}

/// Components of a union of simple closed edge cycles.
fn cycle_components(m: &CellComplex, z: &CellSet) -> Result<Vec<BTreeSet<usize>>> {
    let mut degree = std::collections::BTreeMap::new();
    for e in z.iter() {
        if m.dim(e) != 1 {
            return Err(Error::InvalidCycle(format!("cell {e} is not an edge")));
        }
        let b = m.boundary(e);
        if b.len() != 2 {
            return Err(Error::InvalidCycle(format!("edge {e} is a loop")));
        }
        for &(v, _) in b {
            *degree.entry(v).or_insert(0) += 1;
        }
    }
    if degree.values().any(|&d| d != 2) {
        return Err(Error::InvalidCycle("edges do not form disjoint simple closed curves".into()));
    }
    let comps = m.components_of(&m.closure(z));
    Ok(comps.into_iter().map(|c| c.iter().filter(|&e| m.dim(e) == 1).collect()).collect())
}

/// Flow across a collar of the nonseparating cycle(s) `z` on a closed surface.
/// The two cell layers on each side of every curve form the collar; cells
/// move across it in four steps and everything else is fixed.
pub fn hypersurface_flow(m: Arc<CellComplex>, z: &CellSet) -> Result<(CombinatorialFlow, CellSet)> {
    if m.top_dim() != 2 || !m.cells_of_dim(1).iter().all(|&e| m.coboundary(e).len() == 2) {
        return Err(Error::Precondition(format!("{} is not a closed surface", m.name)));
    }
    if z.is_empty() {
        return Err(Error::InvalidCycle("empty cycle".into()));
    }
    let curves = cycle_components(&m, z)?;
    let tops: BTreeSet<usize> = m.top_cells().into_iter().collect();
    let walls: BTreeSet<usize> = z.0.clone();
    if m.top_components(&tops, &walls).len() != 1 {
        return Err(Error::SeparatingCycle(format!("the cycle separates {}", m.name)));
    }
    let no_walls = BTreeSet::new();
    let adjacent = |c: usize, set: &BTreeSet<usize>| -> Vec<usize> { m.adjacent_top(c).into_iter().filter(|d| set.contains(d)).collect() };
    let mut succ = vec![vec![]; m.len()];
    let mut layers: BTreeSet<usize> = BTreeSet::new();
    let mut l2a_all = BTreeSet::new();
    let mut pending: Vec<(BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>)> = vec![];
    for curve in &curves {
        let verts: BTreeSet<usize> = curve.iter().flat_map(|&e| m.vertices_of(e).to_vec()).collect();
        let l1: BTreeSet<usize> = tops.iter().copied().filter(|&c| m.vertices_of(c).iter().any(|v| verts.contains(v))).collect();
        let sides = m.top_components(&l1, &walls);
        if sides.len() != 2 {
            return Err(Error::NoCollar(format!("curve neighbourhood has {} sides", sides.len())));
        }
        let (l1a, l1b) = (sides[0].clone(), sides[1].clone());
        let l2 = |side: &BTreeSet<usize>| -> BTreeSet<usize> {
            side.iter().flat_map(|&c| m.adjacent_top(c)).filter(|d| !l1.contains(d)).collect()
        };
        let (l2a, l2b) = (l2(&l1a), l2(&l1b));
        if !l2a.is_disjoint(&l2b) || m.top_components(&l1.union(&l2a).copied().chain(l2b.iter().copied()).collect(), &no_walls).len() != 1 {
            return Err(Error::NoCollar("collar layers overlap".into()));
        }
        for s in [&l1a, &l1b, &l2a, &l2b] {
            if !layers.is_disjoint(s) {
                return Err(Error::NoCollar("collars of different curves meet".into()));
            }
            layers.extend(s.iter().copied());
        }
        l2a_all.extend(l2a.iter().copied());
        pending.push((l2a, l1a, l1b, l2b));
    }
    let k_tops: BTreeSet<usize> = tops.difference(&layers).copied().collect();
    if k_tops.is_empty() {
        return Err(Error::NoCollar("collar covers the whole surface".into()));
    }
    for (l2a, l1a, l1b, l2b) in &pending {
        for (from, to) in [(l2a, l1a), (l1a, l1b), (l1b, l2b), (l2b, &k_tops)] {
            for &c in from.iter() {
                let next = adjacent(c, to);
                if next.is_empty() {
                    return Err(Error::NoCollar(format!("collar cell {c} has no cell ahead of it")));
                }
                succ[c] = next;
            }
        }
    }
    for &c in &k_tops {
        let mut s = vec![c];
        s.extend(adjacent(c, &l2a_all));
        succ[c] = s;
    }
    let k = m.closure_of_cells(&k_tops.iter().copied().collect::<Vec<_>>());
    let fixed: CellSet = k_tops.iter().copied().collect();
    let f = CombinatorialFlow::new(&format!("hypersurface({})", m.name), m, succ, fixed)?;
    Ok((f, k))
}

/// Makes every top cell outside `p` a fixed cell. `p` must be closed and
/// positively invariant.
pub fn freeze_outside(f: &CombinatorialFlow, p: &CellSet) -> Result<CombinatorialFlow> {
    let cx = &f.complex;
    if !cx.is_closed(p) {
        return Err(Error::NotClosed);
    }
    let inside: BTreeSet<usize> = cx.top_of(p).into_iter().collect();
    for &c in &inside {
        if let Some(&d) = f.successors(c).iter().find(|d| !inside.contains(d)) {
            return Err(Error::NotPositivelyInvariant(format!("cell {c} flows to {d} outside the set")));
        }
    }
    let mut succ = f.successor_table().to_vec();
    let mut fixed: CellSet = f.fixed.iter().filter(|c| inside.contains(c)).collect();
    for c in cx.top_cells() {
        if !inside.contains(&c) {
            succ[c] = vec![c];
            fixed.insert(c);
        }
    }
    CombinatorialFlow::new(&format!("frozen({})", f.name), cx.clone(), succ, fixed)
}

/// Glues a fin `face x [0,1]` (three cells deep) onto a codimension-one face
/// of `k` whose vertex stars lie in `k`. The far cell is a source and the
/// fin drains into a cell of `k` whose forward orbit stays in the collar,
/// adding one component of uniform attraction.
pub fn add_uniform_component(f: &CombinatorialFlow, k: &CellSet) -> Result<(CombinatorialFlow, CellSet)> {
    let cx = &f.complex;
    let d = cx.top_dim();
    if d == 0 {
        return Err(Error::NoRoom("complex has no codimension-one faces".into()));
    }
    // the fin drains into a cell of k whose forward orbit stays near k
    let col = crate::attractor::collar(k, f);
    let settles = |t: usize| f.omega_limit(t).map(|e| e.core.is_subset(&col)).unwrap_or(false);
    let (face, target) = cx
        .cells_of_dim(d - 1)
        .into_iter()
        .filter(|&g| k.contains(g) && !cx.coboundary(g).is_empty() && cx.one_ring(g).iter().all(|&t| k.contains(t)))
        .find_map(|g| cx.coboundary(g).iter().map(|&(t, _)| t).find(|&t| settles(t)).map(|t| (g, t)))
        .ok_or_else(|| Error::NoRoom("no face of the attractor away from its basin leads to a settling cell".into()))?;
    let iv = interval(3)?;
    let cl: Vec<usize> = cx.closure_of_cells(&[face]).to_vec();
    let mut raw: RawComplex = cx.to_raw();
    // new cells (s, t) for s in the closure of the face, t in the interval;
    // t = vertex 0 is the face itself
    let mut id = std::collections::BTreeMap::new();
    for &s in &cl {
        id.insert((s, 0usize), s);
    }
    let mut order: Vec<(usize, usize)> = vec![];
    for t in 1..iv.len() {
        for &s in &cl {
            order.push((s, t));
        }
    }
    order.sort_by_key(|&(s, t)| cx.dim(s) + iv.dim(t));
    for (s, t) in order {
        let mut bd = vec![];
        for &(g, c) in cx.boundary(s) {
            bd.push((id[&(g, t)], c));
        }
        let sign = if cx.dim(s) % 2 == 0 { 1 } else { -1 };
        for &(u, c) in iv.boundary(t) {
            bd.push((id[&(s, u)], sign * c));
        }
        let new = raw.add(cx.dim(s) + iv.dim(t), bd, None);
        id.insert((s, t), new);
    }
    let mut big = CellComplex::from_raw(&format!("{}+fin", cx.name), raw, complex::Orientability::Unknown)?;
    big.grid = cx.grid.clone();
    big.distinguished = cx.distinguished.clone();
    let big = Arc::new(big);
    // interval edges 0..3 are cells 4, 5, 6
    let near = id[&(face, 4)];
    let mid = id[&(face, 5)];
    let far = id[&(face, 6)];
    let mut succ = f.successor_table().to_vec();
    succ.resize(big.len(), vec![]);
    succ[near] = vec![target];
    succ[mid] = vec![near];
    succ[far] = vec![far, mid];
    let mut fixed = f.fixed.clone();
    fixed.insert(far);
    let g = CombinatorialFlow::new(&format!("{}+fin", f.name), big, succ, fixed)?;
    Ok((g, k.clone()))
}
