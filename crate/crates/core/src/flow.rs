//! Flows as multivalued successor maps on the top cells of a complex.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::complex::{self, CellComplex, CellSet, ComplexFile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitKind {
    Omega,
    Alpha,
    Jplus,
    Jminus,
}

impl LimitKind {
    pub fn forward(self) -> bool {
        matches!(self, LimitKind::Omega | LimitKind::Jplus)
    }
}

/// Outer enclosure of a limit set. `core` is the eventual image itself and is
/// invariant in the direction of `kind`; `cells` adds the grid-scale
/// neighbourhood for the prolongational kinds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitEnclosure {
    pub kind: LimitKind,
    pub cells: CellSet,
    pub core: CellSet,
    pub certified: bool,
}

/// How to rebuild a flow at another resolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowRecipe {
    /// A named catalog flow.
    Catalog { name: String, resolution: usize },
    /// The identity flow on a catalog complex.
    Rest { complex: String, resolution: usize },
}

#[derive(Debug, Clone)]
pub struct CombinatorialFlow {
    pub name: String,
    pub complex: Arc<CellComplex>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
    cyclic: Vec<bool>,
    pub fixed: CellSet,
    pub recipe: Option<FlowRecipe>,
}

impl CombinatorialFlow {
    /// Validates totality, locality and the self-loop rule for `fixed`.
    /// `successors` is indexed by cell id; non-top cells must map to nothing.
    pub fn new(name: &str, complex: Arc<CellComplex>, successors: Vec<Vec<usize>>, fixed: CellSet) -> Result<Self> {
        let n = complex.len();
        if successors.len() != n {
            return Err(Error::InvalidFlow(format!("successor table has {} rows for {n} cells", successors.len())));
        }
        let mut succ = vec![vec![]; n];
        for (c, s) in successors.into_iter().enumerate() {
            let set: BTreeSet<usize> = s.into_iter().collect();
            if complex.is_top(c) {
                if set.is_empty() {
                    return Err(Error::InvalidFlow(format!("cell {c} has no successor")));
                }
                let ring: BTreeSet<usize> = complex.one_ring(c).into_iter().collect();
                if let Some(&bad) = set.iter().find(|d| !ring.contains(d)) {
                    return Err(Error::InvalidFlow(format!("cell {c} jumps to non-neighbour {bad}")));
                }
            } else if !set.is_empty() {
                return Err(Error::InvalidFlow(format!("cell {c} is not a top cell but has successors")));
            }
            succ[c] = set.into_iter().collect();
        }
        for c in fixed.iter() {
            if !complex.is_top(c) || !succ[c].contains(&c) {
                return Err(Error::InvalidFlow(format!("fixed cell {c} must be a top cell with a self-loop")));
            }
        }
        let mut pred = vec![vec![]; n];
        for (c, s) in succ.iter().enumerate() {
            for &d in s {
                pred[d].push(c);
            }
        }
        let cyclic = cyclic_cells(&succ);
        Ok(CombinatorialFlow { name: name.to_string(), complex, succ, pred, cyclic, fixed, recipe: None })
    }

    /// Every top cell fixed.
    pub fn rest(complex: Arc<CellComplex>) -> Self {
        let succ = (0..complex.len()).map(|c| if complex.is_top(c) { vec![c] } else { vec![] }).collect();
        let fixed = complex.top_cells().into_iter().collect();
        let mut f = Self::new("rest", complex, succ, fixed).expect("rest flow is valid");
        f.recipe = None;
        f
    }

    pub fn with_recipe(mut self, recipe: FlowRecipe) -> Self {
        self.recipe = Some(recipe);
        self
    }

    pub fn successors(&self, c: usize) -> &[usize] {
        &self.succ[c]
    }
    pub fn predecessors(&self, c: usize) -> &[usize] {
        &self.pred[c]
    }
    pub fn successor_table(&self) -> &[Vec<usize>] {
        &self.succ
    }
    pub fn top_cells(&self) -> Vec<usize> {
        self.complex.top_cells()
    }
    /// Whether `c` lies on a cycle of the successor graph (self-loops count).
    pub fn is_cyclic(&self, c: usize) -> bool {
        self.cyclic[c]
    }

    fn step(&self, forward: bool) -> &[Vec<usize>] {
        if forward {
            &self.succ
        } else {
            &self.pred
        }
    }

    /// Cells reachable from `u` in zero or more steps.
    pub fn reach(&self, u: &BTreeSet<usize>, forward: bool) -> BTreeSet<usize> {
        let adj = self.step(forward);
        let mut out = u.clone();
        let mut stack: Vec<usize> = u.iter().copied().collect();
        while let Some(c) = stack.pop() {
            for &d in &adj[c] {
                if out.insert(d) {
                    stack.push(d);
                }
            }
        }
        out
    }

    /// One-step image of a set.
    pub fn image(&self, u: &BTreeSet<usize>, forward: bool) -> BTreeSet<usize> {
        let adj = self.step(forward);
        u.iter().flat_map(|&c| adj[c].iter().copied()).collect()
    }

    /// Cells hit at arbitrarily late times by paths from `u`: everything
    /// reachable from a cycle that is reachable from `u`.
    pub fn eventual_image(&self, u: &BTreeSet<usize>, forward: bool) -> BTreeSet<usize> {
        let r = self.reach(u, forward);
        let on_cycles: BTreeSet<usize> = r.into_iter().filter(|&c| self.cyclic[c]).collect();
        self.reach(&on_cycles, forward)
    }

    /// The same set by iterating images until the sequence repeats.
    pub fn eventual_image_by_iteration(&self, u: &BTreeSet<usize>, forward: bool) -> BTreeSet<usize> {
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut history: Vec<BTreeSet<usize>> = vec![];
        let mut cur = u.clone();
        loop {
            let key: Vec<usize> = cur.iter().copied().collect();
            if let Some(&start) = seen.get(&key) {
                return history[start..].iter().flatten().copied().collect();
            }
            seen.insert(key, history.len());
            history.push(cur.clone());
            cur = self.image(&cur, forward);
        }
    }

    /// Top cells within one ring of some member.
    pub fn ring(&self, cells: &BTreeSet<usize>) -> BTreeSet<usize> {
        cells.iter().flat_map(|&c| self.complex.one_ring(c)).collect()
    }

    fn check_top(&self, x: usize) -> Result<()> {
        if self.complex.is_top(x) {
            Ok(())
        } else {
            Err(Error::NotTopCell(x))
        }
    }

    pub fn omega_limit(&self, x: usize) -> Result<LimitEnclosure> {
        self.check_top(x)?;
        let core: CellSet = CellSet(self.eventual_image(&BTreeSet::from([x]), true));
        Ok(LimitEnclosure { kind: LimitKind::Omega, cells: core.clone(), core, certified: true })
    }

    pub fn alpha_limit(&self, x: usize) -> Result<LimitEnclosure> {
        self.check_top(x)?;
        let core: CellSet = CellSet(self.eventual_image(&BTreeSet::from([x]), false));
        Ok(LimitEnclosure { kind: LimitKind::Alpha, cells: core.clone(), core, certified: true })
    }

    fn prolongation(&self, x: usize, a: &CellSet, forward: bool) -> Result<LimitEnclosure> {
        self.check_top(x)?;
        if !a.contains(x) {
            return Err(Error::NotInSet { cell: x });
        }
        let u: BTreeSet<usize> = self.complex.one_ring(x).into_iter().filter(|&c| a.contains(c)).collect();
        let core = self.eventual_image(&u, forward);
        let cells = self.ring(&core);
        let kind = if forward { LimitKind::Jplus } else { LimitKind::Jminus };
        Ok(LimitEnclosure { kind, cells: CellSet(cells), core: CellSet(core), certified: true })
    }

    /// Prolongational limit set of `x` relative to `a`, seeded by the one-ring
    /// of `x` inside `a`.
    pub fn j_plus(&self, x: usize, a: &CellSet) -> Result<LimitEnclosure> {
        self.prolongation(x, a, true)
    }

    pub fn j_minus(&self, x: usize, a: &CellSet) -> Result<LimitEnclosure> {
        self.prolongation(x, a, false)
    }

    /// Rebuild at `factor` times the resolution.
    pub fn refine(&self, factor: usize) -> Result<CombinatorialFlow> {
        if factor == 0 {
            return Err(Error::ZeroResolution);
        }
        match &self.recipe {
            Some(FlowRecipe::Catalog { name, resolution }) => {
                Ok(crate::constructions::catalog_flow(name, resolution * factor)?.flow)
            }
            Some(FlowRecipe::Rest { complex, resolution }) => {
                let cx = complex::catalog(complex, resolution * factor)?;
                Ok(CombinatorialFlow::rest(Arc::new(cx)).with_recipe(FlowRecipe::Rest {
                    complex: complex.clone(),
                    resolution: resolution * factor,
                }))
            }
            None => Err(Error::NoRefinement(self.name.clone())),
        }
    }

    /// Flow file: `{complex, successors, fixed}`.
    pub fn to_file(&self) -> FlowFile {
        let complex = match &self.recipe {
            Some(FlowRecipe::Catalog { resolution, .. }) | Some(FlowRecipe::Rest { resolution, .. })
                if complex::CATALOG.contains(&self.complex.name.as_str()) =>
            {
                ComplexRef::Named(format!("{}@{}", self.complex.name, resolution))
            }
            _ => ComplexRef::Inline(ComplexFile::from_complex(&self.complex)),
        };
        let successors = self
            .top_cells()
            .into_iter()
            .map(|c| (c.to_string(), self.succ[c].iter().map(|&d| d as u64).collect()))
            .collect();
        FlowFile { complex, successors, fixed: self.fixed.iter().map(|c| c as u64).collect(), attractor: None }
    }
}

/// Marks cells on a cycle: members of a strongly connected component with
/// more than one cell, or with a self-loop.
fn cyclic_cells(succ: &[Vec<usize>]) -> Vec<bool> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = vec![];
    let mut out = vec![false; n];
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // iterative Tarjan: frames of (node, next child position)
        let mut frames: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(u, _)) = frames.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = vec![];
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    let cyc = comp.len() > 1 || succ[v].contains(&v);
                    for w in comp {
                        out[w] = cyc;
                    }
                }
            }
        }
    }
    out
}

/// Where a flow file finds its complex.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexRef {
    /// Catalog name, optionally with `@resolution`.
    Named(String),
    Inline(ComplexFile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowFile {
    pub complex: ComplexRef,
    pub successors: BTreeMap<String, Vec<u64>>,
    #[serde(default)]
    pub fixed: Vec<u64>,
    /// Optional seed set for the attractor, as top cell ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attractor: Option<Vec<u64>>,
}

impl FlowFile {
    pub fn build(&self, name: &str) -> Result<CombinatorialFlow> {
        let cx = match &self.complex {
            ComplexRef::Named(s) => {
                let (n, res) = match s.split_once('@') {
                    Some((n, r)) => (n, r.parse().map_err(|_| Error::Parse(format!("bad resolution in '{s}'")))?),
                    None => (s.as_str(), complex::DEFAULT_RESOLUTION),
                };
                complex::catalog(n, res)?
            }
            ComplexRef::Inline(f) => f.build()?,
        };
        let n = cx.len();
        let idx = |id: u64| -> Result<usize> {
            let c = id as usize;
            if c < n {
                Ok(c)
            } else {
                Err(Error::InvalidFlow(format!("unknown cell {id}")))
            }
        };
        let mut succ = vec![vec![]; n];
        for (k, v) in &self.successors {
            let c = idx(k.parse().map_err(|_| Error::Parse(format!("bad cell key '{k}'")))?)?;
            succ[c] = v.iter().map(|&d| idx(d)).collect::<Result<Vec<_>>>()?;
        }
        let fixed = self.fixed.iter().map(|&d| idx(d)).collect::<Result<CellSet>>()?;
        CombinatorialFlow::new(name, Arc::new(cx), succ, fixed)
    }
}

pub fn flow_from_json(name: &str, text: &str) -> Result<CombinatorialFlow> {
    let f: FlowFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    f.build(name)
}

pub fn flow_to_json(f: &CombinatorialFlow) -> String {
    serde_json::to_string_pretty(&f.to_file()).expect("flow serializes")
}

/// Builds a named flow on a given complex: `rest`, `example22` (on a mapping
/// torus with grid data) or `north-south` (on a [`complex::sphere`]).
pub fn from_vector_field(name: &str, cx: CellComplex) -> Result<CombinatorialFlow> {
    match name {
        "rest" => Ok(CombinatorialFlow::rest(Arc::new(cx))),
        "example22" => Ok(crate::constructions::example22_on(cx)?.0),
        "north-south" => Ok(crate::constructions::north_south_on(cx)?.0),
        other => Err(Error::UnknownFlow(other.to_string())),
    }
}

/// Centroid of a cell's stored geometry.
pub fn centroid(cx: &CellComplex, c: usize) -> Option<[f64; 2]> {
    let g = cx.geometry(c)?;
    let n = g.len() as f64;
    Some([g.iter().map(|p| p[0]).sum::<f64>() / n, g.iter().map(|p| p[1]).sum::<f64>() / n])
}

fn inside(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let (xs, ys): (Vec<f64>, Vec<f64>) = poly.iter().map(|q| (q[0], q[1])).unzip();
    let (x0, x1) = (xs.iter().cloned().fold(f64::MAX, f64::min), xs.iter().cloned().fold(f64::MIN, f64::max));
    let (y0, y1) = (ys.iter().cloned().fold(f64::MAX, f64::min), ys.iter().cloned().fold(f64::MIN, f64::max));
    // all stored top-cell polygons are axis-aligned rectangles
    p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1
}

/// Maps top cells of a refinement to the coarse top cells containing their
/// centroids.
pub fn project_cells(fine: &CellComplex, coarse: &CellComplex, cells: &CellSet) -> Result<CellSet> {
    let tops = coarse.top_cells();
    let mut out = CellSet::new();
    for c in cells.iter() {
        let p = centroid(fine, c).ok_or_else(|| Error::NoRefinement(format!("{} has no geometry", fine.name)))?;
        let hit = tops
            .iter()
            .copied()
            .find(|&t| coarse.geometry(t).map(|g| inside(g, p)).unwrap_or(false))
            .ok_or_else(|| Error::NoRefinement(format!("cell {c} has no coarse parent")))?;
        out.insert(hit);
    }
    Ok(out)
}
