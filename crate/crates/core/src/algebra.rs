//! Homology and cohomology of cellular pairs over Z and Z2, plus the degree-one
//! cup product form of closed surfaces and of spaces with a stored ring.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::complex::{interval, product, CellComplex, CellSet, RingPresentation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ring {
    Z,
    Z2,
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ring::Z => "z",
            Ring::Z2 => "z2",
        })
    }
}

impl std::str::FromStr for Ring {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "z" => Ok(Ring::Z),
            "z2" => Ok(Ring::Z2),
            other => Err(Error::UnsupportedRing(other.to_string())),
        }
    }
}

/// Ranks and (over Z) invariant factors per degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyResult {
    pub ring: Ring,
    pub ranks: Vec<usize>,
    pub torsion: Vec<Vec<u64>>,
}

impl HomologyResult {
    pub fn rank(&self, k: usize) -> usize {
        self.ranks.get(k).copied().unwrap_or(0)
    }

    pub fn torsion_at(&self, k: usize) -> &[u64] {
        self.torsion.get(k).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn euler(&self) -> i64 {
        self.ranks.iter().enumerate().map(|(k, &r)| if k % 2 == 0 { r as i64 } else { -(r as i64) }).sum()
    }
}

/// One degree of a homology computation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyEntry {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoincarePolynomial {
    pub ring: Ring,
    /// Coefficient of `t^k` at index `k`; no trailing zeros.
    pub coeffs: Vec<usize>,
}

impl PoincarePolynomial {
    pub fn new(ring: Ring, mut coeffs: Vec<usize>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        PoincarePolynomial { ring, coeffs }
    }

    pub fn coeff(&self, k: usize) -> usize {
        self.coeffs.get(k).copied().unwrap_or(0)
    }

    pub fn eval(&self, t: i64) -> i64 {
        self.coeffs.iter().rev().fold(0i64, |acc, &c| acc * t + c as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

impl fmt::Display for PoincarePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let mut terms = vec![];
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let t = match k {
                0 => format!("{c}"),
                1 if c == 1 => "t".to_string(),
                1 => format!("{c}t"),
                _ if c == 1 => format!("t^{k}"),
                _ => format!("{c}t^{k}"),
            };
            terms.push(t);
        }
        f.write_str(&terms.join(" + "))
    }
}

// ---------------------------------------------------------------------------
// linear algebra

/// Pivot choice used by [`smith_invariants`]. Both must give the same answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotStrategy {
    /// Prefer unit entries, otherwise the entry of least absolute value.
    MinAbs,
    /// The first nonzero entry in column-major order.
    ColumnMajor,
}

/// Sparse integer matrix given by its columns: `cols[j]` lists `(row, value)`.
#[derive(Debug, Clone, Default)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: Vec<Vec<(usize, i64)>>,
}

/// Rank over Z2 by column reduction.
pub fn rank_z2(m: &SparseMatrix) -> usize {
    let mut pivots: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut rank = 0;
    for col in &m.cols {
        let mut v: BTreeSet<usize> = col.iter().filter(|&&(_, k)| k % 2 != 0).map(|&(r, _)| r).collect();
        while let Some(&low) = v.iter().next_back() {
            match pivots.get(&low) {
                Some(p) => {
                    for r in p {
                        if !v.remove(r) {
                            v.insert(*r);
                        }
                    }
                }
                None => {
                    pivots.insert(low, v.iter().copied().collect());
                    rank += 1;
                    break;
                }
            }
        }
    }
    rank
}

/// Nonzero invariant factors (in divisibility order) of an integer matrix.
pub fn smith_invariants(m: &SparseMatrix, strategy: PivotStrategy) -> Vec<BigInt> {
    let mut rows: Vec<BTreeMap<usize, BigInt>> = vec![BTreeMap::new(); m.rows];
    let mut cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m.cols.len()];
    for (j, col) in m.cols.iter().enumerate() {
        for &(i, v) in col {
            if v != 0 {
                let e = rows[i].entry(j).or_insert_with(BigInt::zero);
                *e += v;
                if e.is_zero() {
                    rows[i].remove(&j);
                }
            }
        }
    }
    for (i, row) in rows.iter().enumerate() {
        for &j in row.keys() {
            cols[j].insert(i);
        }
    }
    let mut diag: Vec<BigInt> = vec![];
    let mut live_cols: BTreeSet<usize> = (0..cols.len()).filter(|&j| !cols[j].is_empty()).collect();

    // row_a -= q * row_b
    fn row_axpy(rows: &mut [BTreeMap<usize, BigInt>], cols: &mut [BTreeSet<usize>], a: usize, b: usize, q: &BigInt) {
        let src: Vec<(usize, BigInt)> = rows[b].iter().map(|(j, v)| (*j, v.clone())).collect();
        for (j, v) in src {
            let e = rows[a].entry(j).or_insert_with(BigInt::zero);
            *e -= q * v;
            if e.is_zero() {
                rows[a].remove(&j);
                cols[j].remove(&a);
            } else {
                cols[j].insert(a);
            }
        }
    }
    // col_a -= q * col_b
    fn col_axpy(rows: &mut [BTreeMap<usize, BigInt>], cols: &mut [BTreeSet<usize>], a: usize, b: usize, q: &BigInt) {
        let src: Vec<usize> = cols[b].iter().copied().collect();
        for i in src {
            let v = rows[i][&b].clone();
            let e = rows[i].entry(a).or_insert_with(BigInt::zero);
            *e -= q * v;
            if e.is_zero() {
                rows[i].remove(&a);
                cols[a].remove(&i);
            } else {
                cols[a].insert(i);
            }
        }
    }

    loop {
        live_cols.retain(|&j| !cols[j].is_empty());
        let Some(&first) = live_cols.iter().next() else { break };
        let (mut pr, mut pc) = match strategy {
            PivotStrategy::ColumnMajor => (*cols[first].iter().next().unwrap(), first),
            PivotStrategy::MinAbs => {
                let mut best: Option<(BigInt, usize, usize, usize)> = None;
                'scan: for &j in &live_cols {
                    for &i in &cols[j] {
                        let a = rows[i][&j].abs();
                        let weight = rows[i].len() + cols[j].len();
                        let better = match &best {
                            None => true,
                            Some((b, _, _, w)) => a < *b || (a == *b && weight < *w),
                        };
                        if better {
                            best = Some((a.clone(), i, j, weight));
                        }
                        if a.is_one() && weight <= 2 {
                            break 'scan;
                        }
                    }
                    if best.as_ref().map(|b| b.0.is_one()).unwrap_or(false) {
                        break;
                    }
                }
                let b = best.unwrap();
                (b.1, b.2)
            }
        };
        // Euclid: shrink the pivot until it divides its row and column
        loop {
            let p = rows[pr][&pc].clone();
            let mut moved = false;
            let col_rows: Vec<usize> = cols[pc].iter().copied().filter(|&i| i != pr).collect();
            for i in col_rows {
                let a = rows[i][&pc].clone();
                let q = a.div_floor(&p);
                row_axpy(&mut rows, &mut cols, i, pr, &q);
                if let Some(rem) = rows[i].get(&pc) {
                    if rem.abs() < p.abs() {
                        pr = i;
                        moved = true;
                        break;
                    }
                }
            }
            if moved {
                continue;
            }
            let row_cols: Vec<usize> = rows[pr].keys().copied().filter(|&j| j != pc).collect();
            for j in row_cols {
                let a = rows[pr][&j].clone();
                let q = a.div_floor(&p);
                col_axpy(&mut rows, &mut cols, j, pc, &q);
                if let Some(rem) = rows[pr].get(&j) {
                    if rem.abs() < p.abs() {
                        pc = j;
                        moved = true;
                        break;
                    }
                }
            }
            if !moved {
                break;
            }
        }
        let p = rows[pr].remove(&pc).unwrap();
        debug_assert!(rows[pr].is_empty() && cols[pc].len() == 1);
        cols[pc].clear();
        diag.push(p.abs());
    }
    normalize_diagonal(diag)
}

/// Turn a diagonal into invariant factors `d1 | d2 | ...`.
fn normalize_diagonal(mut d: Vec<BigInt>) -> Vec<BigInt> {
    d.sort();
    let n = d.len();
    for i in 0..n {
        for j in i + 1..n {
            let g = d[i].gcd(&d[j]);
            let l = d[i].lcm(&d[j]);
            d[i] = g;
            d[j] = l;
        }
    }
    d
}

// ---------------------------------------------------------------------------
// chain complexes of pairs

/// Boundary matrices of the cellular chain complex of `x / a`.
fn pair_boundaries(cx: &CellComplex, x: &CellSet, a: &CellSet) -> (Vec<usize>, Vec<SparseMatrix>) {
    let top = cx.top_dim();
    let mut index: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); top + 1];
    for c in x.iter() {
        if a.contains(c) {
            continue;
        }
        let d = cx.dim(c);
        let k = index[d].len();
        index[d].insert(c, k);
    }
    let sizes: Vec<usize> = index.iter().map(|m| m.len()).collect();
    let mut mats = vec![SparseMatrix::default()];
    for d in 1..=top {
        let mut m = SparseMatrix { rows: sizes[d - 1], cols: vec![] };
        for &c in index[d].keys() {
            let col = cx.boundary(c).iter().filter_map(|&(f, k)| index[d - 1].get(&f).map(|&r| (r, k))).collect();
            m.cols.push(col);
        }
        mats.push(m);
    }
    (sizes, mats)
}

fn homology_of_chains(sizes: &[usize], mats: &[SparseMatrix], ring: Ring) -> HomologyResult {
    let n = sizes.len();
    let mut ranks_d = vec![0usize; n + 1];
    let mut factors: Vec<Vec<BigInt>> = vec![vec![]; n + 1];
    for d in 1..n {
        match ring {
            Ring::Z2 => ranks_d[d] = rank_z2(&mats[d]),
            Ring::Z => {
                let inv = smith_invariants(&mats[d], PivotStrategy::MinAbs);
                ranks_d[d] = inv.len();
                factors[d] = inv;
            }
        }
    }
    let mut ranks = vec![];
    let mut torsion = vec![];
    for k in 0..n {
        ranks.push(sizes[k] - ranks_d[k] - ranks_d[k + 1]);
        let t: Vec<u64> = factors[k + 1]
            .iter()
            .filter(|f| !f.is_one())
            .map(|f| f.to_u64().expect("torsion coefficient fits in u64"))
            .collect();
        torsion.push(t);
    }
    HomologyResult { ring, ranks, torsion }
}

/// Homology of the pair `(x, a)` of closed subcomplexes of `cx`.
pub fn pair_homology(cx: &CellComplex, x: &CellSet, a: &CellSet, ring: Ring) -> Result<HomologyResult> {
    if !cx.is_closed(x) || !cx.is_closed(a) {
        return Err(Error::NotClosed);
    }
    if !a.is_subset(x) {
        return Err(Error::Precondition("subcomplex is not contained in the space".into()));
    }
    let (sizes, mats) = pair_boundaries(cx, x, a);
    Ok(homology_of_chains(&sizes, &mats, ring))
}

pub fn homology(cx: &CellComplex, ring: Ring) -> HomologyResult {
    let (sizes, mats) = pair_boundaries(cx, &cx.all(), &CellSet::new());
    homology_of_chains(&sizes, &mats, ring)
}

pub fn relative_homology(cx: &CellComplex, a: &CellSet, ring: Ring) -> Result<HomologyResult> {
    pair_homology(cx, &cx.all(), a, ring)
}

/// Homology of a closed subcomplex taken on its own.
pub fn subcomplex_homology(cx: &CellComplex, k: &CellSet, ring: Ring) -> Result<HomologyResult> {
    pair_homology(cx, k, &CellSet::new(), ring)
}

/// Cohomology of the pair `(x, a)`. Ranks agree with homology; over Z the
/// torsion moves up one degree.
pub fn pair_cohomology(cx: &CellComplex, x: &CellSet, a: &CellSet, ring: Ring) -> Result<HomologyResult> {
    let h = pair_homology(cx, x, a, ring)?;
    Ok(dualize(h))
}

fn dualize(h: HomologyResult) -> HomologyResult {
    let n = h.ranks.len();
    let mut torsion = vec![vec![]; n];
    for k in 1..n {
        torsion[k] = h.torsion[k - 1].clone();
    }
    HomologyResult { ring: h.ring, ranks: h.ranks, torsion }
}

pub fn cohomology(cx: &CellComplex, ring: Ring) -> HomologyResult {
    dualize(homology(cx, ring))
}

/// Alternating count of the cells of `x` outside `a`.
pub fn euler_pair(cx: &CellComplex, x: &CellSet, a: &CellSet) -> i64 {
    cx.euler_of(&x.difference(a))
}

pub fn poincare_polynomial(cx: &CellComplex, x: &CellSet, a: &CellSet, ring: Ring) -> Result<PoincarePolynomial> {
    let h = pair_cohomology(cx, x, a, ring)?;
    Ok(PoincarePolynomial::new(ring, h.ranks))
}

/// Degree `k` homology of `(x * [-1,1], x * {-1,1})`.
pub fn suspension_pair_homology(x: &CellComplex, ring: Ring, k: usize) -> HomologyEntry {
    let iv = interval(1).expect("one edge");
    let p = product(x, &iv);
    let nb = iv.len();
    let ends: Vec<usize> = (0..x.len()).flat_map(|s| [s * nb, s * nb + 1]).collect();
    let a: CellSet = ends.into_iter().collect();
    let h = relative_homology(&p, &a, ring).expect("ends form a subcomplex");
    HomologyEntry { rank: h.rank(k), torsion: h.torsion_at(k).to_vec() }
}

/// Whether the open complements of two pairs are cell-isomorphic: the cells
/// outside `a1` and `a2`, matched in id order, agree in dimension and in the
/// relative boundary.
pub fn complements_isomorphic(c1: &CellComplex, a1: &CellSet, c2: &CellComplex, a2: &CellSet) -> bool {
    let o1: Vec<usize> = (0..c1.len()).filter(|&c| !a1.contains(c)).collect();
    let o2: Vec<usize> = (0..c2.len()).filter(|&c| !a2.contains(c)).collect();
    if o1.len() != o2.len() {
        return false;
    }
    let m: BTreeMap<usize, usize> = o1.iter().copied().zip(o2.iter().copied()).collect();
    o1.iter().zip(&o2).all(|(&x, &y)| {
        if c1.dim(x) != c2.dim(y) {
            return false;
        }
        let b1: BTreeMap<usize, i64> = c1.boundary(x).iter().filter(|(f, _)| !a1.contains(*f)).map(|&(f, k)| (m[&f], k)).collect();
        let b2: BTreeMap<usize, i64> = c2.boundary(y).iter().filter(|(f, _)| !a2.contains(*f)).map(|&(f, k)| (f, k)).collect();
        b1 == b2
    })
}

// ---------------------------------------------------------------------------
// cup products

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    /// Cup pairing of a closed surface into its top class.
    Surface,
    /// Exterior algebra on degree-one generators.
    Exterior,
    /// Truncated polynomial algebra over Z2.
    Truncated,
}

/// Products of a basis of H^1 with values in H^2 coordinates. For surfaces
/// H^2 is one-dimensional and every entry has length one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CupForm {
    pub ring: Ring,
    pub kind: FormKind,
    /// Basis cocycles as sparse edge values; empty for stored presentations.
    pub basis: Vec<Vec<(usize, i64)>>,
    pub h2_rank: usize,
    pub products: Vec<Vec<Vec<i64>>>,
}

impl CupForm {
    pub fn rank(&self) -> usize {
        self.products.len()
    }

    /// Scalar matrix of a form with one-dimensional H^2.
    pub fn matrix(&self) -> Vec<Vec<i64>> {
        self.products.iter().map(|row| row.iter().map(|v| v.first().copied().unwrap_or(0)).collect()).collect()
    }

    pub fn product(&self, x: &[i64], y: &[i64]) -> Vec<i64> {
        let mut out = vec![0; self.h2_rank];
        for (i, &a) in x.iter().enumerate() {
            for (j, &b) in y.iter().enumerate() {
                if a == 0 || b == 0 {
                    continue;
                }
                for (k, &v) in self.products[i][j].iter().enumerate() {
                    out[k] += a * b * v;
                }
            }
        }
        if self.ring == Ring::Z2 {
            for v in &mut out {
                *v = v.rem_euclid(2);
            }
        }
        out
    }
}

fn edge_ends(cx: &CellComplex, e: usize) -> Option<(usize, usize)> {
    match cx.boundary(e) {
        [(a, -1), (b, 1)] => Some((*a, *b)),
        [(a, 1), (b, -1)] => Some((*b, *a)),
        _ => None,
    }
}

fn reduce(v: i64, ring: Ring) -> i64 {
    match ring {
        Ring::Z => v,
        Ring::Z2 => v.rem_euclid(2),
    }
}

struct TreeCotree {
    leftover: Vec<usize>,
    cotree_order: Vec<usize>,
    cotree_parent_edge: BTreeMap<usize, usize>,
}

fn tree_cotree(cx: &CellComplex) -> Result<TreeCotree> {
    let unsupported = |m: &str| Error::UnsupportedRing(m.to_string());
    let verts = cx.cells_of_dim(0);
    let edges = cx.cells_of_dim(1);
    let faces = cx.cells_of_dim(2);
    let mut in_tree: BTreeSet<usize> = BTreeSet::new();
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    if let Some(&v0) = verts.first() {
        seen.insert(v0);
        let mut q = VecDeque::from([v0]);
        while let Some(v) = q.pop_front() {
            for &(e, _) in cx.coboundary(v) {
                if let Some((a, b)) = edge_ends(cx, e) {
                    let w = if a == v { b } else { a };
                    if seen.insert(w) {
                        in_tree.insert(e);
                        q.push_back(w);
                    }
                }
            }
        }
    }
    if seen.len() != verts.len() {
        return Err(unsupported("surface is not connected"));
    }
    for &e in &edges {
        if cx.coboundary(e).len() != 2 || cx.coboundary(e).iter().any(|&(_, k)| k.abs() != 1) {
            return Err(unsupported("not a closed surface"));
        }
    }
    let mut cotree_parent_edge = BTreeMap::new();
    let mut order = vec![];
    let mut in_cotree: BTreeSet<usize> = BTreeSet::new();
    if let Some(&f0) = faces.first() {
        let mut seen_f = BTreeSet::from([f0]);
        let mut q = VecDeque::from([f0]);
        while let Some(f) = q.pop_front() {
            order.push(f);
            for &(e, _) in cx.boundary(f) {
                if in_tree.contains(&e) {
                    continue;
                }
                for &(g, _) in cx.coboundary(e) {
                    if g != f && seen_f.insert(g) {
                        cotree_parent_edge.insert(g, e);
                        in_cotree.insert(e);
                        q.push_back(g);
                    }
                }
            }
        }
        if seen_f.len() != faces.len() {
            return Err(unsupported("surface is not connected"));
        }
    }
    let leftover = edges.into_iter().filter(|e| !in_tree.contains(e) && !in_cotree.contains(e)).collect();
    Ok(TreeCotree { leftover, cotree_order: order, cotree_parent_edge })
}

/// Coefficients of a fundamental cycle on the 2-cells, if one exists over the ring.
fn fundamental_class(cx: &CellComplex, ring: Ring) -> Option<BTreeMap<usize, i64>> {
    let faces = cx.cells_of_dim(2);
    let mut eps: BTreeMap<usize, i64> = BTreeMap::new();
    if ring == Ring::Z2 {
        return Some(faces.into_iter().map(|f| (f, 1)).collect());
    }
    let f0 = *faces.first()?;
    eps.insert(f0, 1);
    let mut q = VecDeque::from([f0]);
    while let Some(f) = q.pop_front() {
        for &(e, k) in cx.boundary(f) {
            for &(g, l) in cx.coboundary(e) {
                if g == f {
                    continue;
                }
                // eps_f * k + eps_g * l = 0
                let want = -eps[&f] * k * l;
                match eps.get(&g) {
                    Some(&v) if v != want => return None,
                    Some(_) => {}
                    None => {
                        eps.insert(g, want);
                        q.push_back(g);
                    }
                }
            }
        }
    }
    Some(eps)
}

/// Sign of the permutation sorting three distinct values.
fn sort3_sign(v: [usize; 3]) -> (i64, [usize; 3]) {
    let mut a = v;
    let mut sign = 1;
    for i in 0..3 {
        for j in 0..2 - i {
            if a[j] > a[j + 1] {
                a.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    (sign, a)
}

fn surface_cup_form(cx: &CellComplex, ring: Ring) -> Result<CupForm> {
    let tc = tree_cotree(cx)?;
    let m = tc.leftover.len();
    if m == 0 {
        return Ok(CupForm { ring, kind: FormKind::Surface, basis: vec![], h2_rank: 1, products: vec![] });
    }
    let eps = fundamental_class(cx, ring)
        .ok_or_else(|| Error::UnsupportedRing(format!("{} is not orientable over {ring}", cx.name)))?;
    // dual cocycles: peel the cotree from its leaves
    let mut basis: Vec<BTreeMap<usize, i64>> = vec![];
    for &l in &tc.leftover {
        let mut phi: BTreeMap<usize, i64> = BTreeMap::from([(l, 1)]);
        for &f in tc.cotree_order.iter().rev() {
            let Some(&u) = tc.cotree_parent_edge.get(&f) else { continue };
            let mut ku = 0;
            let mut rest = 0;
            for &(e, k) in cx.boundary(f) {
                if e == u {
                    ku = k;
                } else {
                    rest += k * phi.get(&e).copied().unwrap_or(0);
                }
            }
            let v = reduce(-rest * ku, ring);
            if v != 0 {
                phi.insert(u, v);
            }
        }
        // every face must now be closed, including the cotree root
        for f in cx.cells_of_dim(2) {
            let s: i64 = cx.boundary(f).iter().map(|&(e, k)| k * phi.get(&e).copied().unwrap_or(0)).sum();
            if reduce(s, ring) != 0 {
                return Err(Error::UnsupportedRing(format!("{} has no integral dual basis", cx.name)));
            }
        }
        basis.push(phi);
    }
    // split every square along its diagonal and use the Alexander-Whitney
    // product with vertices ordered by id
    let mut products = vec![vec![vec![0i64]; m]; m];
    for f in cx.cells_of_dim(2) {
        let fr = cx.frame(f).ok_or_else(|| Error::UnsupportedRing(format!("{} has a non-square 2-cell", cx.name)))?;
        let local = |(e, s): (usize, i64)| -> Result<(usize, usize)> {
            let (a, b) = edge_ends(cx, e).ok_or_else(|| Error::UnsupportedRing("degenerate edge".into()))?;
            Ok(if s == 1 { (a, b) } else { (b, a) })
        };
        let (v00, v10) = local(fr[0])?;
        let (r0, v11) = local(fr[1])?;
        let (t0, t1) = local(fr[2])?;
        let (l0, v01) = local(fr[3])?;
        let corners = BTreeSet::from([v00, v10, v11, v01]);
        if r0 != v10 || t0 != v01 || t1 != v11 || l0 != v00 || corners.len() != 4 {
            return Err(Error::UnsupportedRing(format!("{} has a degenerate square", cx.name)));
        }
        let kb = cx.boundary(f).iter().find(|&&(e, _)| e == fr[0].0).map(|&(_, k)| k).unwrap_or(0);
        let kappa = kb * fr[0].1;
        let weight = eps[&f] * kappa;
        let val = |phi: &BTreeMap<usize, i64>, (e, s): (usize, i64)| s * phi.get(&e).copied().unwrap_or(0);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let mut total = 0;
                for tri in [[v00, v10, v11], [v00, v11, v01]] {
                    let directed = |phi: &BTreeMap<usize, i64>, x: usize, y: usize| -> i64 {
                        let fwd = |p: usize, q: usize| -> Option<i64> {
                            let bb = val(phi, fr[0]);
                            let rr = val(phi, fr[1]);
                            let tt = val(phi, fr[2]);
                            let ll = val(phi, fr[3]);
                            match (p, q) {
                                _ if (p, q) == (v00, v10) => Some(bb),
                                _ if (p, q) == (v10, v11) => Some(rr),
                                _ if (p, q) == (v01, v11) => Some(tt),
                                _ if (p, q) == (v00, v01) => Some(ll),
                                _ if (p, q) == (v00, v11) => Some(bb + rr),
                                _ => None,
                            }
                        };
                        fwd(x, y).or_else(|| fwd(y, x).map(|v| -v)).expect("triangle edge")
                    };
                    let (o, s) = sort3_sign(tri);
                    total += o * directed(a, s[0], s[1]) * directed(b, s[1], s[2]);
                }
                products[i][j][0] += weight * total;
            }
        }
    }
    for row in &mut products {
        for v in row {
            v[0] = reduce(v[0], ring);
        }
    }
    if ring == Ring::Z {
        let first = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).map(|(i, j)| products[i][j][0]).find(|&v| v != 0);
        if first.map(|v| v < 0).unwrap_or(false) {
            for row in &mut products {
                for v in row {
                    v[0] = -v[0];
                }
            }
        }
    }
    let basis = basis.into_iter().map(|phi| phi.into_iter().collect()).collect();
    Ok(CupForm { ring, kind: FormKind::Surface, basis, h2_rank: 1, products })
}

fn presentation_form(p: RingPresentation, ring: Ring) -> Result<CupForm> {
    match p {
        RingPresentation::Torus(n) => {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let mut products = vec![vec![vec![0i64; pairs.len()]; n]; n];
            for (k, &(i, j)) in pairs.iter().enumerate() {
                products[i][j][k] = 1;
                products[j][i][k] = reduce(-1, ring);
            }
            Ok(CupForm { ring, kind: FormKind::Exterior, basis: vec![], h2_rank: pairs.len(), products })
        }
        RingPresentation::ProjectiveSpace(n) => {
            if ring != Ring::Z2 {
                return Err(Error::UnsupportedRing("projective space ring is stored over z2 only".into()));
            }
            let sq = if n >= 2 { 1 } else { 0 };
            Ok(CupForm { ring, kind: FormKind::Truncated, basis: vec![], h2_rank: 1, products: vec![vec![vec![sq]]] })
        }
    }
}

/// Cup product form on H^1. Closed surfaces built from squares are computed
/// directly; otherwise the stored ring presentation is used.
pub fn cup_form_h1(cx: &CellComplex, ring: Ring) -> Result<CupForm> {
    let is_surface = cx.top_dim() == 2
        && cx.cells_of_dim(1).iter().all(|&e| cx.coboundary(e).len() == 2);
    if is_surface {
        match surface_cup_form(cx, ring) {
            Ok(f) => return Ok(f),
            Err(e) => {
                if cx.ring.is_none() {
                    return Err(e);
                }
            }
        }
    }
    match cx.ring {
        Some(p) => presentation_form(p, ring),
        None => Err(Error::UnsupportedRing(format!("no cup product available for {}", cx.name))),
    }
}

/// Rank of an integer matrix over Q.
fn rational_rank(m: &[Vec<i64>]) -> usize {
    let cols: Vec<Vec<(usize, i64)>> = (0..m.first().map(|r| r.len()).unwrap_or(0))
        .map(|j| m.iter().enumerate().filter(|(_, r)| r[j] != 0).map(|(i, r)| (i, r[j])).collect())
        .collect();
    smith_invariants(&SparseMatrix { rows: m.len(), cols }, PivotStrategy::MinAbs).len()
}

/// Largest number of independent classes with all pairwise products zero.
pub fn max_null_system(form: &CupForm) -> usize {
    let m = form.rank();
    match (form.ring, form.kind) {
        (_, FormKind::Exterior) if form.ring == Ring::Z => m.min(1),
        (Ring::Z, _) => m - rational_rank(&form.matrix()) / 2,
        (Ring::Z2, _) => max_isotropic_z2(form),
    }
}

/// Exhaustive search over subspaces of Z2^m.
fn max_isotropic_z2(form: &CupForm) -> usize {
    let m = form.rank();
    let vec_of = |bits: u64| -> Vec<i64> { (0..m).map(|i| ((bits >> i) & 1) as i64).collect() };
    let null = |x: u64, y: u64| form.product(&vec_of(x), &vec_of(y)).iter().all(|&v| v == 0);
    let candidates: Vec<u64> = (1u64..(1u64 << m)).filter(|&x| null(x, x)).collect();

    fn insert(echelon: &[u64], mut v: u64) -> Option<u64> {
        for &p in echelon {
            let hi = 63 - p.leading_zeros();
            if (v >> hi) & 1 == 1 {
                v ^= p;
            }
        }
        (v != 0).then_some(v)
    }
    fn dfs(
        start: usize,
        cands: &[u64],
        chosen: &mut Vec<u64>,
        echelon: &mut Vec<u64>,
        best: &mut usize,
        m: usize,
        null: &dyn Fn(u64, u64) -> bool,
    ) {
        *best = (*best).max(chosen.len());
        if *best == m {
            return;
        }
        for i in start..cands.len() {
            if chosen.len() + (cands.len() - i) <= *best {
                return;
            }
            let v = cands[i];
            if !chosen.iter().all(|&c| null(c, v)) {
                continue;
            }
            let Some(red) = insert(echelon, v) else { continue };
            let mut next = echelon.clone();
            next.push(red);
            next.sort_by(|a, b| b.cmp(a));
            chosen.push(v);
            dfs(i + 1, cands, chosen, &mut next, best, m, null);
            chosen.pop();
        }
    }
    let mut best = 0;
    dfs(0, &candidates, &mut vec![], &mut vec![], &mut best, m, &null);
    best
}
