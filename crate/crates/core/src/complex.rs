//! Finite regular cell complexes with integer incidences.
//!
//! Cells are addressed by dense ids `0..n`. Builders go through [`RawComplex`],
//! which supports gluing cells pairwise with a sign before the final complex
//! is frozen.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fibers and grids default to this many subdivisions.
pub const DEFAULT_RESOLUTION: usize = 8;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientability {
    Yes,
    No,
    Unknown,
}

/// Stored cohomology ring presentations for spaces where cup products are
/// known in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RingPresentation {
    /// Exterior algebra on `n` degree-one generators.
    Torus(usize),
    /// Truncated polynomial algebra `Z2[a]/(a^{n+1})`.
    ProjectiveSpace(usize),
}

/// A set of cells of one complex, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellSet(pub BTreeSet<usize>);

impl CellSet {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn contains(&self, c: usize) -> bool {
        self.0.contains(&c)
    }
    pub fn insert(&mut self, c: usize) -> bool {
        self.0.insert(c)
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.0.is_subset(&other.0)
    }
    pub fn union(&self, other: &CellSet) -> CellSet {
        CellSet(self.0.union(&other.0).copied().collect())
    }
    pub fn intersection(&self, other: &CellSet) -> CellSet {
        CellSet(self.0.intersection(&other.0).copied().collect())
    }
    pub fn difference(&self, other: &CellSet) -> CellSet {
        CellSet(self.0.difference(&other.0).copied().collect())
    }
    pub fn to_vec(&self) -> Vec<usize> {
        self.0.iter().copied().collect()
    }
}

impl FromIterator<usize> for CellSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        CellSet(iter.into_iter().collect())
    }
}

/// Grid bookkeeping for complexes assembled from square grids. `at` is indexed
/// by sheet, column and row; holes are `None`. Cells outside the grid (sphere
/// caps) are listed in `caps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub sheets: usize,
    pub cols: usize,
    pub rows: usize,
    pub cells: Vec<Option<usize>>,
    pub caps: Vec<usize>,
}

impl Grid {
    pub fn at(&self, sheet: usize, col: usize, row: usize) -> Option<usize> {
        if sheet >= self.sheets || col >= self.cols || row >= self.rows {
            return None;
        }
        self.cells[(sheet * self.rows + row) * self.cols + col]
    }

    /// Inverse lookup: (sheet, col, row) of a grid cell.
    pub fn position(&self, cell: usize) -> Option<(usize, usize, usize)> {
        let i = self.cells.iter().position(|c| *c == Some(cell))?;
        let col = i % self.cols;
        let row = (i / self.cols) % self.rows;
        let sheet = i / (self.cols * self.rows);
        Some((sheet, col, row))
    }
}

/// Local frame of a square 2-cell: bottom, right, top and left edges, each
/// oriented along +x or +y, given as (cell, sign) with `local = sign * cell`.
pub type Frame = [(usize, i64); 4];

/// Mutable pre-complex used by builders. Boundaries may reference any cell
/// with a smaller dimension; validation happens on [`CellComplex::from_raw`].
#[derive(Debug, Clone, Default)]
pub struct RawComplex {
    pub dims: Vec<usize>,
    pub boundary: Vec<Vec<(usize, i64)>>,
    pub geometry: Vec<Option<Vec<Point>>>,
    pub frames: Vec<Option<Frame>>,
}

impl RawComplex {
    pub fn add(&mut self, dim: usize, boundary: Vec<(usize, i64)>, geometry: Option<Vec<Point>>) -> usize {
        self.dims.push(dim);
        self.boundary.push(normalize_chain(boundary));
        self.geometry.push(geometry);
        self.frames.push(None);
        self.dims.len() - 1
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Glue cells pairwise: `(a, b, s)` means `a = s * b`. Returns the quotient
    /// and, for every old cell, its image `(new id, sign)`.
    pub fn quotient(&self, idents: &[(usize, usize, i64)]) -> Result<(RawComplex, Vec<(usize, i64)>)> {
        let n = self.len();
        // union-find with the sign of each cell relative to its parent
        let mut parent: Vec<usize> = (0..n).collect();
        let mut rel: Vec<i64> = vec![1; n];
        fn find(parent: &mut [usize], rel: &mut [i64], x: usize) -> (usize, i64) {
            let mut path = vec![];
            let mut cur = x;
            while parent[cur] != cur {
                path.push(cur);
                cur = parent[cur];
            }
            let root = cur;
            // recompute signs from the top of the path down
            let mut acc = 1;
            for &p in path.iter().rev() {
                acc *= rel[p];
                rel[p] = acc;
                parent[p] = root;
            }
            (root, if x == root { 1 } else { rel[x] })
        }
        for &(a, b, s) in idents {
            if a >= n || b >= n {
                return Err(Error::InvalidComplex(format!("identification ({a},{b}) out of range")));
            }
            if s != 1 && s != -1 {
                return Err(Error::InvalidComplex(format!("identification sign {s} must be +-1")));
            }
            if self.dims[a] != self.dims[b] {
                return Err(Error::InvalidComplex(format!("identified cells {a} and {b} differ in dimension")));
            }
            let (ra, sa) = find(&mut parent, &mut rel, a);
            let (rb, sb) = find(&mut parent, &mut rel, b);
            // a = sa*ra, b = sb*rb, a = s*b  =>  ra = sa*s*sb*rb
            let want = sa * s * sb;
            if ra == rb {
                if want != 1 {
                    return Err(Error::InvalidComplex(format!("identification of {a} with {b} forces a cell to equal its negative")));
                }
                continue;
            }
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
            rel[hi] = want;
        }
        let mut new_id: BTreeMap<usize, usize> = BTreeMap::new();
        let mut image = vec![(0usize, 1i64); n];
        let mut out = RawComplex::default();
        let mut reps = vec![];
        for c in 0..n {
            let (root, sign) = find(&mut parent, &mut rel, c);
            let id = match new_id.get(&root) {
                Some(&id) => id,
                None => {
                    let id = reps.len();
                    new_id.insert(root, id);
                    reps.push(c);
                    id
                }
            };
            // c = sign * root for now
            image[c] = (id, sign);
        }
        // re-express every sign relative to the class representative
        let root_sign = image.clone();
        for c in 0..n {
            let (id, s) = root_sign[c];
            image[c] = (id, s * root_sign[reps[id]].1);
        }
        for &rep in &reps {
            let bd: Vec<(usize, i64)> = self.boundary[rep].iter().map(|&(f, k)| (image[f].0, k * image[f].1)).collect();
            out.dims.push(self.dims[rep]);
            out.boundary.push(normalize_chain(bd));
            out.geometry.push(self.geometry[rep].clone());
            out.frames.push(self.frames[rep].map(|fr| fr.map(|(e, s)| (image[e].0, s * image[e].1))));
        }
        // class members must agree on their boundary up to the class sign
        for c in 0..n {
            let (id, s) = image[c];
            let mapped = normalize_chain(self.boundary[c].iter().map(|&(f, k)| (image[f].0, k * image[f].1 * s)).collect());
            if mapped != out.boundary[id] {
                return Err(Error::InvalidComplex(format!("identified cell {c} has an incompatible boundary")));
            }
        }
        Ok((out, image))
    }
}

fn normalize_chain(chain: Vec<(usize, i64)>) -> Vec<(usize, i64)> {
    let mut m: BTreeMap<usize, i64> = BTreeMap::new();
    for (c, k) in chain {
        *m.entry(c).or_insert(0) += k;
    }
    m.into_iter().filter(|&(_, k)| k != 0).collect()
}

/// An immutable finite cell complex.
#[derive(Debug, Clone)]
pub struct CellComplex {
    pub name: String,
    pub orientable: Orientability,
    dims: Vec<usize>,
    boundary: Vec<Vec<(usize, i64)>>,
    coboundary: Vec<Vec<(usize, i64)>>,
    top_dim: usize,
    vertices: Vec<Vec<usize>>,
    vertex_star: Vec<Vec<usize>>,
    geometry: Vec<Option<Vec<Point>>>,
    frames: Vec<Option<Frame>>,
    pub grid: Option<Grid>,
    pub distinguished: Option<CellSet>,
    pub ring: Option<RingPresentation>,
    /// Set by the closed-surface builders.
    pub closed_surface: bool,
}

impl CellComplex {
    pub fn from_raw(name: &str, raw: RawComplex, orientable: Orientability) -> Result<Self> {
        let n = raw.len();
        for c in 0..n {
            for &(f, _) in &raw.boundary[c] {
                if f >= n {
                    return Err(Error::InvalidComplex(format!("cell {c} references missing cell {f}")));
                }
                if raw.dims[f] + 1 != raw.dims[c] {
                    return Err(Error::InvalidComplex(format!(
                        "cell {c} of dim {} has face {f} of dim {}",
                        raw.dims[c], raw.dims[f]
                    )));
                }
            }
        }
        let mut coboundary = vec![vec![]; n];
        for c in 0..n {
            for &(f, k) in &raw.boundary[c] {
                coboundary[f].push((c, k));
            }
        }
        let top_dim = raw.dims.iter().copied().max().unwrap_or(0);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&c| (raw.dims[c], c));
        let mut vertices: Vec<Vec<usize>> = vec![vec![]; n];
        for &c in &order {
            if raw.dims[c] == 0 {
                vertices[c] = vec![c];
            } else {
                let mut vs = BTreeSet::new();
                for &(f, _) in &raw.boundary[c] {
                    vs.extend(vertices[f].iter().copied());
                }
                vertices[c] = vs.into_iter().collect();
            }
        }
        let mut vertex_star = vec![vec![]; n];
        for c in 0..n {
            if raw.dims[c] == top_dim {
                for &v in &vertices[c] {
                    vertex_star[v].push(c);
                }
            }
        }
        let cx = CellComplex {
            name: name.to_string(),
            orientable,
            dims: raw.dims,
            boundary: raw.boundary,
            coboundary,
            top_dim,
            vertices,
            vertex_star,
            geometry: raw.geometry,
            frames: raw.frames,
            grid: None,
            distinguished: None,
            ring: None,
            closed_surface: false,
        };
        cx.check_boundary_squared()?;
        Ok(cx)
    }

    fn check_boundary_squared(&self) -> Result<()> {
        for c in 0..self.len() {
            let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
            for &(f, k) in &self.boundary[c] {
                for &(g, l) in &self.boundary[f] {
                    *acc.entry(g).or_insert(0) += k * l;
                }
            }
            if acc.values().any(|&v| v != 0) {
                return Err(Error::InvalidComplex(format!("boundary of boundary of cell {c} is nonzero")));
            }
        }
        Ok(())
    }

    /// Back to a raw complex (for further gluing).
    pub fn to_raw(&self) -> RawComplex {
        RawComplex {
            dims: self.dims.clone(),
            boundary: self.boundary.clone(),
            geometry: self.geometry.clone(),
            frames: self.frames.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }
    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }
    pub fn dim(&self, c: usize) -> usize {
        self.dims[c]
    }
    pub fn top_dim(&self) -> usize {
        self.top_dim
    }
    pub fn boundary(&self, c: usize) -> &[(usize, i64)] {
        &self.boundary[c]
    }
    pub fn coboundary(&self, c: usize) -> &[(usize, i64)] {
        &self.coboundary[c]
    }
    pub fn geometry(&self, c: usize) -> Option<&[Point]> {
        self.geometry[c].as_deref()
    }
    pub fn frame(&self, c: usize) -> Option<Frame> {
        self.frames[c]
    }
    pub fn vertices_of(&self, c: usize) -> &[usize] {
        &self.vertices[c]
    }
    pub fn is_top(&self, c: usize) -> bool {
        c < self.len() && self.dims[c] == self.top_dim
    }
    pub fn cells_of_dim(&self, d: usize) -> Vec<usize> {
        (0..self.len()).filter(|&c| self.dims[c] == d).collect()
    }
    pub fn top_cells(&self) -> Vec<usize> {
        self.cells_of_dim(self.top_dim)
    }
    pub fn all(&self) -> CellSet {
        (0..self.len()).collect()
    }
    pub fn count_by_dim(&self) -> Vec<usize> {
        let mut v = vec![0; self.top_dim + 1];
        for &d in &self.dims {
            v[d] += 1;
        }
        v
    }

    /// Alternating cell count.
    pub fn euler(&self) -> i64 {
        self.euler_of(&self.all())
    }

    /// Alternating count of the cells in `s` (not necessarily closed).
    pub fn euler_of(&self, s: &CellSet) -> i64 {
        s.iter().map(|c| if self.dims[c] % 2 == 0 { 1 } else { -1 }).sum()
    }

    pub fn top_of(&self, s: &CellSet) -> Vec<usize> {
        s.iter().filter(|&c| self.is_top(c)).collect()
    }

    /// Add every face of every member.
    pub fn closure(&self, s: &CellSet) -> CellSet {
        let mut out = s.clone();
        let mut stack: Vec<usize> = s.to_vec();
        while let Some(c) = stack.pop() {
            for &(f, _) in &self.boundary[c] {
                if out.insert(f) {
                    stack.push(f);
                }
            }
        }
        out
    }

    pub fn closure_of_cells(&self, cells: &[usize]) -> CellSet {
        self.closure(&cells.iter().copied().collect())
    }

    pub fn is_closed(&self, s: &CellSet) -> bool {
        s.iter().all(|c| self.boundary[c].iter().all(|&(f, _)| s.contains(f)))
    }

    /// Top cells whose closure meets the closure of `c`.
    pub fn one_ring(&self, c: usize) -> Vec<usize> {
        let mut out = BTreeSet::new();
        for &v in &self.vertices[c] {
            out.extend(self.vertex_star[v].iter().copied());
        }
        out.into_iter().collect()
    }

    /// Top cells sharing a codimension-one face with `c`.
    pub fn adjacent_top(&self, c: usize) -> Vec<usize> {
        let mut out = BTreeSet::new();
        for &(f, _) in &self.boundary[c] {
            for &(g, _) in &self.coboundary[f] {
                if g != c {
                    out.insert(g);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Codimension-one faces shared by two top cells.
    pub fn shared_faces(&self, a: usize, b: usize) -> Vec<usize> {
        let fb: BTreeSet<usize> = self.boundary[b].iter().map(|&(f, _)| f).collect();
        self.boundary[a].iter().map(|&(f, _)| f).filter(|f| fb.contains(f)).collect()
    }

    /// Top cells whose closure meets `s`, together with all their faces.
    pub fn closed_star(&self, s: &CellSet) -> CellSet {
        let cl = self.closure(s);
        let mut tops = BTreeSet::new();
        for c in cl.iter() {
            if self.dims[c] == 0 {
                tops.extend(self.vertex_star[c].iter().copied());
            }
        }
        for c in s.iter() {
            if self.is_top(c) {
                tops.insert(c);
            }
        }
        self.closure(&CellSet(tops)).union(&cl)
    }

    /// Cells not in `s`; open when `s` is closed.
    pub fn open_complement(&self, s: &CellSet) -> CellSet {
        (0..self.len()).filter(|&c| !s.contains(c)).collect()
    }

    /// Cells in the closure of both `s` and its complement.
    pub fn boundary_of(&self, s: &CellSet) -> CellSet {
        let a = self.closure(s);
        let b = self.closure(&self.open_complement(s));
        a.intersection(&b)
    }

    /// Connected components of a cell set, two cells being adjacent when one
    /// is a face of the other.
    pub fn components_of(&self, s: &CellSet) -> Vec<CellSet> {
        let mut seen = BTreeSet::new();
        let mut out = vec![];
        for start in s.iter() {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = CellSet::new();
            let mut stack = vec![start];
            seen.insert(start);
            while let Some(c) = stack.pop() {
                comp.insert(c);
                let nb = self.boundary[c].iter().chain(self.coboundary[c].iter()).map(|&(x, _)| x);
                for x in nb {
                    if s.contains(x) && seen.insert(x) {
                        stack.push(x);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Connected components of a set of top cells under codimension-one
    /// adjacency, optionally forbidding crossings through `walls`.
    pub fn top_components(&self, tops: &BTreeSet<usize>, walls: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
        let mut seen = BTreeSet::new();
        let mut out = vec![];
        for &start in tops {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![start];
            seen.insert(start);
            while let Some(c) = stack.pop() {
                comp.insert(c);
                for &(f, _) in &self.boundary[c] {
                    if walls.contains(&f) {
                        continue;
                    }
                    for &(g, _) in &self.coboundary[f] {
                        if tops.contains(&g) && seen.insert(g) {
                            stack.push(g);
                        }
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn renamed(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}

// ---------------------------------------------------------------------------
// cell maps

/// Dimension-preserving assignment `cell -> sign * image`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellMap {
    pub images: Vec<(usize, i64)>,
}

impl CellMap {
    pub fn identity(z: &CellComplex) -> Self {
        CellMap { images: (0..z.len()).map(|c| (c, 1)).collect() }
    }

    pub fn apply(&self, c: usize) -> (usize, i64) {
        self.images[c]
    }

    /// A cellular isomorphism `z -> z` commuting with the boundary.
    pub fn check_isomorphism(&self, z: &CellComplex) -> Result<()> {
        if self.images.len() != z.len() {
            return Err(Error::NotIsomorphism(format!("map has {} entries, complex has {} cells", self.images.len(), z.len())));
        }
        let mut hit = vec![false; z.len()];
        for (c, &(img, s)) in self.images.iter().enumerate() {
            if img >= z.len() || (s != 1 && s != -1) {
                return Err(Error::NotIsomorphism(format!("bad image for cell {c}")));
            }
            if z.dim(img) != z.dim(c) {
                return Err(Error::NotIsomorphism(format!("cell {c} changes dimension")));
            }
            if hit[img] {
                return Err(Error::NotIsomorphism(format!("cell {img} is hit twice")));
            }
            hit[img] = true;
        }
        for c in 0..z.len() {
            let (img, s) = self.images[c];
            let lhs = normalize_chain(z.boundary(img).iter().map(|&(f, k)| (f, k * s)).collect());
            let rhs = normalize_chain(
                z.boundary(c).iter().map(|&(f, k)| {
                    let (g, t) = self.images[f];
                    (g, k * t)
                }).collect(),
            );
            if lhs != rhs {
                return Err(Error::NotIsomorphism(format!("map does not commute with the boundary at cell {c}")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// elementary complexes

pub fn point() -> CellComplex {
    let mut raw = RawComplex::default();
    raw.add(0, vec![], Some(vec![[0.0, 0.0]]));
    CellComplex::from_raw("point", raw, Orientability::Yes).expect("point is valid")
}

/// `n` edges on `[0,1]`. Vertices are ids `0..=n`, edge `k` is `n+1+k`.
pub fn interval(n: usize) -> Result<CellComplex> {
    if n == 0 {
        return Err(Error::ZeroResolution);
    }
    let mut raw = RawComplex::default();
    for k in 0..=n {
        raw.add(0, vec![], Some(vec![[k as f64 / n as f64, 0.0]]));
    }
    for k in 0..n {
        let g = vec![[k as f64 / n as f64, 0.0], [(k + 1) as f64 / n as f64, 0.0]];
        raw.add(1, vec![(k, -1), (k + 1, 1)], Some(g));
    }
    CellComplex::from_raw("interval", raw, Orientability::Yes)
}

/// `n` edges around a circle. Vertices are ids `0..n`, edge `k` (from vertex
/// `k` to `k+1 mod n`) is `n+k`.
pub fn circle(n: usize) -> Result<CellComplex> {
    if n == 0 {
        return Err(Error::ZeroResolution);
    }
    let mut raw = RawComplex::default();
    for k in 0..n {
        raw.add(0, vec![], Some(vec![[k as f64 / n as f64, 0.0]]));
    }
    for k in 0..n {
        let g = vec![[k as f64 / n as f64, 0.0], [(k + 1) as f64 / n as f64, 0.0]];
        raw.add(1, vec![(k, -1), ((k + 1) % n, 1)], Some(g));
    }
    CellComplex::from_raw("circle", raw, Orientability::Yes)
}

/// Reflection `k -> -k` of [`circle`].
pub fn circle_reflection(n: usize) -> CellMap {
    let mut images = vec![(0, 1); 2 * n];
    for k in 0..n {
        images[k] = ((n - k) % n, 1);
        images[n + k] = (n + (2 * n - k - 1) % n, -1);
    }
    CellMap { images }
}

fn edge_ends(cx: &CellComplex, e: usize) -> Option<(usize, usize)> {
    let bd = cx.boundary(e);
    match bd {
        [(a, -1), (b, 1)] => Some((*a, *b)),
        [(a, 1), (b, -1)] => Some((*b, *a)),
        _ => None,
    }
}

fn is_line_geometry(cx: &CellComplex) -> bool {
    cx.top_dim() <= 1 && (0..cx.len()).all(|c| cx.geometry(c).map(|g| g.iter().all(|p| p[1] == 0.0)).unwrap_or(false))
}

/// Product complex with the Leibniz boundary. Cell `(s, t)` gets id
/// `s * b.len() + t`.
pub fn product(a: &CellComplex, b: &CellComplex) -> CellComplex {
    let nb = b.len();
    let geo = is_line_geometry(a) && is_line_geometry(b);
    let mut raw = RawComplex::default();
    for s in 0..a.len() {
        for t in 0..nb {
            let mut bd = vec![];
            for &(f, k) in a.boundary(s) {
                bd.push((f * nb + t, k));
            }
            let sign = if a.dim(s) % 2 == 0 { 1 } else { -1 };
            for &(f, k) in b.boundary(t) {
                bd.push((s * nb + f, sign * k));
            }
            let g = if geo {
                let xs: Vec<f64> = a.geometry(s).unwrap().iter().map(|p| p[0]).collect();
                let ys: Vec<f64> = b.geometry(t).unwrap().iter().map(|p| p[0]).collect();
                Some(match (xs.len(), ys.len()) {
                    (1, 1) => vec![[xs[0], ys[0]]],
                    (2, 1) => vec![[xs[0], ys[0]], [xs[1], ys[0]]],
                    (1, 2) => vec![[xs[0], ys[0]], [xs[0], ys[1]]],
                    _ => vec![[xs[0], ys[0]], [xs[1], ys[0]], [xs[1], ys[1]], [xs[0], ys[1]]],
                })
            } else {
                None
            };
            raw.add(a.dim(s) + b.dim(t), bd, g);
        }
    }
    // square frames for products of two one-dimensional complexes
    for s in 0..a.len() {
        for t in 0..nb {
            if a.dim(s) == 1 && b.dim(t) == 1 {
                if let (Some((s0, s1)), Some((t0, t1))) = (edge_ends(a, s), edge_ends(b, t)) {
                    raw.frames[s * nb + t] = Some([
                        (s * nb + t0, 1),
                        (s1 * nb + t, 1),
                        (s * nb + t1, 1),
                        (s0 * nb + t, 1),
                    ]);
                }
            }
        }
    }
    let orient = match (a.orientable, b.orientable) {
        (Orientability::Yes, Orientability::Yes) => Orientability::Yes,
        (Orientability::No, _) | (_, Orientability::No) => Orientability::No,
        _ => Orientability::Unknown,
    };
    let name = format!("{}x{}", a.name, b.name);
    CellComplex::from_raw(&name, raw, orient).expect("product of valid complexes is valid")
}

/// Quotient of `z x [-1,1]` (with `DEFAULT_RESOLUTION` rows) identifying
/// `(s, 1)` with `(glue(s), -1)`.
pub fn mapping_torus(z: &CellComplex, glue: &CellMap) -> Result<CellComplex> {
    mapping_torus_with(z, glue, DEFAULT_RESOLUTION)
}

/// [`mapping_torus`] with `rows` subdivisions of the interval factor. The
/// grid columns are the top cells of `z` in id order.
pub fn mapping_torus_with(z: &CellComplex, glue: &CellMap, rows: usize) -> Result<CellComplex> {
    glue.check_isomorphism(z)?;
    let iv = interval(rows)?;
    let p = product(z, &iv);
    let nb = iv.len();
    let mut idents = vec![];
    for s in 0..z.len() {
        let (g, sign) = glue.apply(s);
        idents.push((s * nb + rows, g * nb, sign));
    }
    let (raw, image) = p.to_raw().quotient(&idents)?;
    let twisted = glue != &CellMap::identity(z);
    let orient = if !twisted { z.orientable } else { Orientability::Unknown };
    let mut cx = CellComplex::from_raw(&format!("mt({})", z.name), raw, orient)?;
    let ztops = z.top_cells();
    let mut cells = vec![None; ztops.len() * rows];
    for (col, &s) in ztops.iter().enumerate() {
        for r in 0..rows {
            cells[r * ztops.len() + col] = Some(image[s * nb + rows + 1 + r].0);
        }
    }
    cx.grid = Some(Grid { sheets: 1, cols: ztops.len(), rows, cells, caps: vec![] });
    let dist: Vec<usize> = (0..z.len()).map(|s| image[s * nb].0).collect();
    cx.distinguished = Some(cx.closure_of_cells(&dist));
    Ok(cx)
}

/// Sphere as a cylinder `circle(n) x interval(n)` capped by two discs. The
/// grid caps are `[south, north]`.
pub fn sphere(n: usize) -> Result<CellComplex> {
    let c = circle(n)?;
    let iv = interval(n)?;
    let cyl = product(&c, &iv);
    let nb = iv.len();
    let mut raw = cyl.to_raw();
    let bottom: Vec<(usize, i64)> = (0..n).map(|k| ((n + k) * nb, -1)).collect();
    let top: Vec<(usize, i64)> = (0..n).map(|k| ((n + k) * nb + n, 1)).collect();
    let south = raw.add(2, bottom, Some(vec![[0.0, -0.15], [1.0, -0.15], [1.0, 0.0], [0.0, 0.0]]));
    let north = raw.add(2, top, Some(vec![[0.0, 1.0], [1.0, 1.0], [1.0, 1.15], [0.0, 1.15]]));
    let mut cx = CellComplex::from_raw("sphere", raw, Orientability::Yes)?;
    let mut cells = vec![None; n * n];
    for col in 0..n {
        for r in 0..n {
            cells[r * n + col] = Some((n + col) * nb + (n + 1 + r));
        }
    }
    cx.grid = Some(Grid { sheets: 1, cols: n, rows: n, cells, caps: vec![south, north] });
    cx.closed_surface = true;
    Ok(cx)
}

/// Reflection of [`sphere`] through the equator; reverses orientation.
pub fn sphere_reflection(n: usize) -> Result<CellMap> {
    let cx = sphere(n)?;
    let nb = 2 * n + 1;
    let caps = cx.grid.as_ref().unwrap().caps.clone();
    let mut images = vec![(0, 1); cx.len()];
    for s in 0..2 * n {
        for t in 0..nb {
            let (rt, sign) = if t <= n { (n - t, 1) } else { (n + 1 + (2 * n - t), -1) };
            images[s * nb + t] = (s * nb + rt, sign);
        }
    }
    images[caps[0]] = (caps[1], -1);
    images[caps[1]] = (caps[0], -1);
    Ok(CellMap { images })
}

/// Torus as the mapping torus of the identity on `circle(n)`.
pub fn torus(n: usize) -> Result<CellComplex> {
    let c = circle(n)?;
    let mut cx = mapping_torus_with(&c, &CellMap::identity(&c), n)?;
    cx.name = "torus".into();
    cx.orientable = Orientability::Yes;
    cx.closed_surface = true;
    cx.ring = Some(RingPresentation::Torus(2));
    Ok(cx)
}

/// Klein bottle as the mapping torus of a reflection of `circle(n)`.
pub fn klein(n: usize) -> Result<CellComplex> {
    let c = circle(n)?;
    let mut cx = mapping_torus_with(&c, &circle_reflection(n), n)?;
    cx.name = "klein".into();
    cx.orientable = Orientability::No;
    cx.closed_surface = true;
    Ok(cx)
}

/// Projective plane: the square grid with antipodal boundary gluing.
pub fn rp2(n: usize) -> Result<CellComplex> {
    if n == 0 {
        return Err(Error::ZeroResolution);
    }
    let iv = interval(n)?;
    let sq = product(&iv, &iv);
    let nb = iv.len();
    let v = |k: usize| k;
    let e = |k: usize| n + 1 + k;
    let id = |s: usize, t: usize| s * nb + t;
    let mut idents = vec![];
    for x in 0..=n {
        idents.push((id(v(x), v(0)), id(v(n - x), v(n)), 1));
        idents.push((id(v(0), v(x)), id(v(n), v(n - x)), 1));
    }
    for x in 0..n {
        idents.push((id(e(x), v(0)), id(e(n - 1 - x), v(n)), -1));
        idents.push((id(v(0), e(x)), id(v(n), e(n - 1 - x)), -1));
    }
    let (raw, image) = sq.to_raw().quotient(&idents)?;
    let mut cx = CellComplex::from_raw("rp2", raw, Orientability::No)?;
    let mut cells = vec![None; n * n];
    for col in 0..n {
        for r in 0..n {
            cells[r * n + col] = Some(image[id(e(col), e(r))].0);
        }
    }
    cx.grid = Some(Grid { sheets: 1, cols: n, rows: n, cells, caps: vec![] });
    cx.closed_surface = true;
    cx.ring = Some(RingPresentation::ProjectiveSpace(2));
    Ok(cx)
}

/// Hole positions (col, row) used when summing grid surfaces: left and right.
fn hole_positions(n: usize) -> [(usize, usize); 2] {
    [(n / 2, n / 4), (n / 2, (3 * n) / 4)]
}

/// Connected sum of copies of a square-grid surface along removed squares.
fn grid_sum(pieces: Vec<CellComplex>, name: &str, orient: Orientability) -> Result<CellComplex> {
    let k = pieces.len();
    let n = pieces[0].grid.as_ref().unwrap().cols;
    let holes = hole_positions(n);
    let mut raw = RawComplex::default();
    let mut maps: Vec<Vec<Option<usize>>> = vec![];
    let mut hole_frames: Vec<[Option<Frame>; 2]> = vec![];
    for (i, piece) in pieces.iter().enumerate() {
        let grid = piece.grid.as_ref().unwrap();
        let mut removed = BTreeSet::new();
        let mut frames = [None, None];
        for (side, &(c, r)) in holes.iter().enumerate() {
            let used = (side == 0 && i > 0) || (side == 1 && i + 1 < k);
            if used {
                let cell = grid.at(0, c, r).unwrap();
                removed.insert(cell);
                frames[side] = Some(piece.frame(cell).ok_or_else(|| Error::InvalidComplex("grid cell without frame".into()))?);
            }
        }
        let off = i as f64 * 1.25;
        let mut map = vec![None; piece.len()];
        for c in 0..piece.len() {
            if removed.contains(&c) {
                continue;
            }
            let bd: Vec<(usize, i64)> = piece.boundary(c).iter().map(|&(f, s)| (map[f].unwrap(), s)).collect();
            let g = piece.geometry(c).map(|g| g.iter().map(|p| [p[0] + off, p[1]]).collect());
            let id = raw.add(piece.dim(c), bd, g);
            map[c] = Some(id);
        }
        for c in 0..piece.len() {
            if let (Some(id), Some(fr)) = (map[c], piece.frame(c)) {
                raw.frames[id] = Some(fr.map(|(e, s)| (map[e].unwrap(), s)));
            }
        }
        let frames = frames.map(|f| f.map(|fr: Frame| fr.map(|(e, s)| (map[e].unwrap(), s))));
        maps.push(map);
        hole_frames.push(frames);
    }
    // glue the right hole of piece i to the left hole of piece i+1 by a mirror
    let mut idents = vec![];
    for i in 0..k.saturating_sub(1) {
        let a = hole_frames[i][1].unwrap();
        let b = hole_frames[i + 1][0].unwrap();
        let corners = |fr: &Frame, raw: &RawComplex| -> Result<[usize; 4]> {
            let ends = |(e, s): (usize, i64)| -> Result<(usize, usize)> {
                let bd = &raw.boundary[e];
                let (start, end) = match bd.as_slice() {
                    [(x, -1), (y, 1)] => (*x, *y),
                    [(x, 1), (y, -1)] => (*y, *x),
                    _ => return Err(Error::InvalidComplex("hole edge is not an arc".into())),
                };
                Ok(if s == 1 { (start, end) } else { (end, start) })
            };
            let (v00, v10) = ends(fr[0])?;
            let (_, v11) = ends(fr[1])?;
            let (_, v01) = ends(fr[3])?;
            Ok([v00, v10, v11, v01])
        };
        let ca = corners(&a, &raw)?;
        let cb = corners(&b, &raw)?;
        // (x, y) -> (1 - x, y)
        idents.push((ca[0], cb[1], 1));
        idents.push((ca[1], cb[0], 1));
        idents.push((ca[2], cb[3], 1));
        idents.push((ca[3], cb[2], 1));
        idents.push((a[0].0, b[0].0, -a[0].1 * b[0].1));
        idents.push((a[2].0, b[2].0, -a[2].1 * b[2].1));
        idents.push((a[1].0, b[3].0, a[1].1 * b[3].1));
        idents.push((a[3].0, b[1].0, a[3].1 * b[1].1));
    }
    let (raw, image) = raw.quotient(&idents)?;
    let mut cx = CellComplex::from_raw(name, raw, orient)?;
    let mut cells = vec![None; k * n * n];
    for (i, piece) in pieces.iter().enumerate() {
        let grid = piece.grid.as_ref().unwrap();
        for c in 0..n {
            for r in 0..n {
                let old = grid.at(0, c, r).unwrap();
                cells[(i * n + r) * n + c] = maps[i][old].map(|id| image[id].0);
            }
        }
    }
    cx.grid = Some(Grid { sheets: k, cols: n, rows: n, cells, caps: vec![] });
    cx.closed_surface = true;
    Ok(cx)
}

/// Closed surface of the given genus (crosscap number when nonorientable).
pub fn build_surface(genus: usize, orientable: bool, resolution: usize) -> Result<CellComplex> {
    if resolution == 0 {
        return Err(Error::ZeroResolution);
    }
    match (genus, orientable) {
        (0, _) => sphere(resolution),
        (1, true) => torus(resolution),
        (1, false) => rp2(resolution),
        (g, true) => {
            let n = resolution.max(4);
            let pieces = (0..g).map(|_| torus(n)).collect::<Result<Vec<_>>>()?;
            grid_sum(pieces, &format!("genus{g}"), Orientability::Yes)
        }
        (g, false) => {
            let n = resolution.max(4);
            let pieces = (0..g).map(|_| rp2(n)).collect::<Result<Vec<_>>>()?;
            grid_sum(pieces, &format!("crosscap{g}"), Orientability::No)
        }
    }
}

/// Closed annulus `circle(n) x [0,1]` with `n` rows, cells ordered as in the
/// unglued product underlying [`torus`].
pub fn annulus(n: usize) -> Result<CellComplex> {
    let c = circle(n)?;
    let iv = interval(n)?;
    let mut cx = product(&c, &iv).renamed("annulus");
    let nb = iv.len();
    let mut cells = vec![None; n * n];
    for col in 0..n {
        for r in 0..n {
            cells[r * n + col] = Some((n + col) * nb + (n + 1 + r));
        }
    }
    cx.grid = Some(Grid { sheets: 1, cols: n, rows: n, cells, caps: vec![] });
    let rim: Vec<usize> = (0..2 * n).flat_map(|s| [s * nb, s * nb + n]).collect();
    cx.distinguished = Some(rim.into_iter().collect());
    Ok(cx)
}

/// Names accepted by [`catalog`].
pub const CATALOG: [&str; 9] = ["torus", "klein", "genus2", "sphere", "rp2", "annulus", "s2xs1", "s2xts1", "t3"];

/// Fiber resolution used for the sphere factor of the three-dimensional
/// catalog spaces.
const SPHERE_FIBER: usize = 2;

/// Catalog phase spaces by name.
pub fn catalog(name: &str, resolution: usize) -> Result<CellComplex> {
    if resolution == 0 {
        return Err(Error::ZeroResolution);
    }
    let cx = match name {
        "torus" => torus(resolution)?,
        "klein" => klein(resolution)?,
        "genus2" => build_surface(2, true, resolution)?,
        "sphere" => sphere(resolution)?,
        "rp2" => rp2(resolution)?,
        "annulus" => annulus(resolution)?,
        "s2xs1" => {
            let s = sphere(SPHERE_FIBER)?;
            let mut cx = mapping_torus_with(&s, &CellMap::identity(&s), resolution)?;
            cx.orientable = Orientability::Yes;
            cx.renamed("s2xs1")
        }
        "s2xts1" => {
            let s = sphere(SPHERE_FIBER)?;
            let mut cx = mapping_torus_with(&s, &sphere_reflection(SPHERE_FIBER)?, resolution)?;
            cx.orientable = Orientability::No;
            cx.renamed("s2xts1")
        }
        "t3" => {
            let c = circle(resolution)?;
            let mut cx = product(&product(&c, &c), &c);
            cx.ring = Some(RingPresentation::Torus(3));
            cx.renamed("t3")
        }
        other => return Err(Error::UnknownCatalog(other.to_string())),
    };
    Ok(cx.renamed(name))
}

// ---------------------------------------------------------------------------
// file format

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRecord {
    pub id: u64,
    pub dim: usize,
}

/// On-disk complex description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexFile {
    pub name: String,
    pub cells: Vec<CellRecord>,
    #[serde(default)]
    pub boundary: BTreeMap<String, Vec<(u64, i64)>>,
    #[serde(default)]
    pub identifications: Vec<(u64, u64, i64)>,
}

impl ComplexFile {
    pub fn from_complex(cx: &CellComplex) -> Self {
        let cells = (0..cx.len()).map(|c| CellRecord { id: c as u64, dim: cx.dim(c) }).collect();
        let boundary = (0..cx.len())
            .filter(|&c| !cx.boundary(c).is_empty())
            .map(|c| (c.to_string(), cx.boundary(c).iter().map(|&(f, k)| (f as u64, k)).collect()))
            .collect();
        ComplexFile { name: cx.name.clone(), cells, boundary, identifications: vec![] }
    }

    pub fn build(&self) -> Result<CellComplex> {
        let mut ids: Vec<u64> = self.cells.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        let n = ids.len();
        ids.dedup();
        if ids.len() != n {
            return Err(Error::InvalidComplex("duplicate cell id".into()));
        }
        let dense: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut dims = vec![0; n];
        for c in &self.cells {
            dims[dense[&c.id]] = c.dim;
        }
        let look = |id: u64| dense.get(&id).copied().ok_or_else(|| Error::InvalidComplex(format!("unknown cell id {id}")));
        let mut raw = RawComplex::default();
        for &d in &dims {
            raw.add(d, vec![], None);
        }
        for (key, faces) in &self.boundary {
            let id: u64 = key.parse().map_err(|_| Error::Parse(format!("bad cell key '{key}'")))?;
            let c = look(id)?;
            let mut bd = vec![];
            for &(f, k) in faces {
                bd.push((look(f)?, k));
            }
            raw.boundary[c] = normalize_chain(bd);
        }
        let mut idents = vec![];
        for &(a, b, s) in &self.identifications {
            idents.push((look(a)?, look(b)?, s));
        }
        // validate before quotienting so errors name the input cells
        CellComplex::from_raw(&self.name, raw.clone(), Orientability::Unknown)?;
        let (raw, _) = raw.quotient(&idents)?;
        CellComplex::from_raw(&self.name, raw, Orientability::Unknown)
    }
}

pub fn complex_from_json(text: &str) -> Result<CellComplex> {
    let f: ComplexFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    f.build()
}

pub fn complex_to_json(cx: &CellComplex) -> String {
    serde_json::to_string_pretty(&ComplexFile::from_complex(cx)).expect("complex serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surface_euler_characteristics() {
        assert_eq!(build_surface(1, true, 8).unwrap().euler(), 0);
        assert_eq!(build_surface(0, true, 8).unwrap().euler(), 2);
        let rp = build_surface(1, false, 8).unwrap();
        assert_eq!(rp.euler(), 1);
        assert_eq!(rp.orientable, Orientability::No);
        assert_eq!(build_surface(2, true, 8).unwrap().euler(), -2);
        assert_eq!(build_surface(3, true, 6).unwrap().euler(), -4);
        assert_eq!(build_surface(2, false, 6).unwrap().euler(), 0);
        assert_eq!(build_surface(3, false, 6).unwrap().euler(), -1);
        assert_eq!(klein(8).unwrap().euler(), 0);
    }

    #[test]
    fn zero_resolution_is_rejected() {
        assert_eq!(build_surface(1, true, 0).unwrap_err(), Error::ZeroResolution);
    }

    #[test]
    fn products_multiply_euler() {
        let c = circle(5).unwrap();
        let i = interval(3).unwrap();
        assert_eq!(product(&c, &c).euler(), 0);
        let ann = product(&c, &i);
        assert_eq!(ann.euler(), 0);
        let p = point();
        let pc = product(&p, &c);
        assert_eq!(pc.len(), c.len());
        for x in 0..c.len() {
            assert_eq!(pc.boundary(x), c.boundary(x));
        }
    }

    #[test]
    fn annulus_has_two_boundary_circles() {
        let c = circle(5).unwrap();
        let i = interval(3).unwrap();
        let ann = product(&c, &i);
        let tops: CellSet = ann.top_cells().into_iter().collect();
        let n = ann.closure(&tops);
        // frontier of the closed annulus inside itself is empty; its manifold
        // boundary consists of the edges with a single coface
        assert!(ann.boundary_of(&n).is_empty());
        let rim: CellSet = (0..ann.len())
            .filter(|&e| ann.dim(e) == 1 && ann.coboundary(e).len() == 1)
            .collect();
        assert_eq!(ann.components_of(&ann.closure(&rim)).len(), 2);
    }

    #[test]
    fn reflection_glue_is_isomorphism() {
        let c = circle(6).unwrap();
        circle_reflection(6).check_isomorphism(&c).unwrap();
        let s = sphere(2).unwrap();
        sphere_reflection(2).unwrap().check_isomorphism(&s).unwrap();
        let mut bad = CellMap::identity(&c);
        bad.images[6] = (7, 1);
        assert!(matches!(mapping_torus(&c, &bad), Err(Error::NotIsomorphism(_))));
    }

    #[test]
    fn mapping_torus_of_point_is_circle() {
        let p = point();
        let m = mapping_torus_with(&p, &CellMap::identity(&p), 5).unwrap();
        assert_eq!(m.count_by_dim(), vec![5, 5]);
        assert_eq!(m.euler(), 0);
        assert_eq!(m.distinguished.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn boundary_of_everything_is_empty() {
        let t = torus(8).unwrap();
        assert!(t.boundary_of(&t.all()).is_empty());
    }

    #[test]
    fn boundary_of_single_square() {
        let t = torus(8).unwrap();
        let x = t.grid.as_ref().unwrap().at(0, 3, 3).unwrap();
        let b = t.boundary_of(&CellSet::from_iter([x]));
        // four edges and four vertices
        assert_eq!(b.len(), 8);
        assert!(!b.contains(x));
    }

    #[test]
    fn boundary_of_band_is_two_circles() {
        let t = torus(8).unwrap();
        let g = t.grid.as_ref().unwrap();
        let band: Vec<usize> = (0..8).flat_map(|c| (2..5).map(move |r| (c, r))).map(|(c, r)| g.at(0, c, r).unwrap()).collect();
        let n = t.closure_of_cells(&band);
        let b = t.boundary_of(&n);
        let comps = t.components_of(&b);
        assert_eq!(comps.len(), 2);
        for comp in comps {
            // 8 edges and 8 vertices each
            assert_eq!(comp.len(), 16);
            assert_eq!(t.euler_of(&comp), 0);
        }
    }

    #[test]
    fn json_round_trip() {
        let k = klein(4).unwrap();
        let text = complex_to_json(&k);
        let back = complex_from_json(&text).unwrap();
        assert_eq!(back.len(), k.len());
        for c in 0..k.len() {
            assert_eq!(back.boundary(c), k.boundary(c));
        }
    }

    #[test]
    fn json_identifications_build_a_circle() {
        let text = r#"{"name":"loop","cells":[{"id":10,"dim":0},{"id":11,"dim":0},{"id":20,"dim":1}],
            "boundary":{"20":[[10,-1],[11,1]]},"identifications":[[10,11,1]]}"#;
        let c = complex_from_json(text).unwrap();
        assert_eq!(c.count_by_dim(), vec![1, 1]);
        assert!(c.boundary(1).is_empty());
    }

    #[test]
    fn catalog_names_resolve() {
        for name in CATALOG {
            let cx = catalog(name, 3).unwrap();
            assert_eq!(cx.name, name);
        }
        assert!(matches!(catalog("nope", 3), Err(Error::UnknownCatalog(_))));
    }
}
