use std::collections::BTreeSet;
use std::sync::Arc;

use conleylab::complex::{self, CellSet};
use conleylab::constructions::{catalog_flow, FLOW_CATALOG};
use conleylab::flow::{flow_from_json, flow_to_json, from_vector_field, project_cells};
use conleylab::{CombinatorialFlow, Error};
use proptest::prelude::*;

/// Random flow on a 4x4 torus: each top cell keeps the members of its
/// one-ring selected by the bits of its mask (at least one).
fn random_flow(masks: &[u32]) -> CombinatorialFlow {
    let cx = Arc::new(complex::torus(4).unwrap());
    let mut succ = vec![vec![]; cx.len()];
    for (i, c) in cx.top_cells().into_iter().enumerate() {
        let ring = cx.one_ring(c);
        let m = masks[i % masks.len()];
        let mut s: Vec<usize> = ring.iter().enumerate().filter(|(j, _)| (m >> j) & 1 == 1).map(|(_, &d)| d).collect();
        if s.is_empty() {
            s.push(ring[m as usize % ring.len()]);
        }
        succ[c] = s;
    }
    CombinatorialFlow::new("random", cx, succ, CellSet::new()).unwrap()
}

fn masks() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(any::<u32>().prop_map(|m| m & 0x1ff & (m >> 9)), 16)
}

#[test]
fn rejects_bad_successor_tables() {
    let cx = Arc::new(complex::torus(4).unwrap());
    let tops = cx.top_cells();
    let mut succ: Vec<Vec<usize>> = (0..cx.len()).map(|c| if cx.is_top(c) { vec![c] } else { vec![] }).collect();
    succ[tops[0]] = vec![];
    assert!(matches!(CombinatorialFlow::new("x", cx.clone(), succ.clone(), CellSet::new()), Err(Error::InvalidFlow(_))));

    // opposite cell of the 4x4 torus shares no vertex
    succ[tops[0]] = vec![tops[0]];
    let far = tops.iter().copied().find(|&d| !cx.one_ring(tops[0]).contains(&d)).unwrap();
    succ[tops[0]] = vec![far];
    assert!(matches!(CombinatorialFlow::new("x", cx.clone(), succ.clone(), CellSet::new()), Err(Error::InvalidFlow(_))));

    succ[tops[0]] = vec![tops[1]];
    let fixed: CellSet = [tops[0]].into_iter().collect();
    assert!(matches!(CombinatorialFlow::new("x", cx, succ, fixed), Err(Error::InvalidFlow(_))));
}

#[test]
fn limits_of_the_mapping_torus_flow() {
    let cf = catalog_flow("example22-torus", 8).unwrap();
    let f = &cf.flow;
    let grid = f.complex.grid.clone().unwrap();
    // a middle-row cell climbs its column to the fixed top row
    let x = grid.at(0, 3, 4).unwrap();
    let top = grid.at(0, 3, 7).unwrap();
    assert_eq!(f.omega_limit(x).unwrap().core.to_vec(), vec![top]);
    // backwards it comes from the bottom row, which also feeds itself
    let bottom = grid.at(0, 3, 0).unwrap();
    assert_eq!(f.alpha_limit(x).unwrap().core.to_vec(), vec![bottom]);
    assert!(matches!(f.omega_limit(0), Err(Error::NotTopCell(0))));
    let a: CellSet = [top].into_iter().collect();
    assert!(matches!(f.j_plus(x, &a), Err(Error::NotInSet { .. })));
}

#[test]
fn json_round_trip_keeps_the_successor_table() {
    for name in ["example22-torus", "homoclinic-sphere", "hypersurface-genus2"] {
        let f = catalog_flow(name, 8).unwrap().flow;
        let g = flow_from_json(name, &flow_to_json(&f)).unwrap();
        assert_eq!(f.successor_table(), g.successor_table(), "{name}");
        assert_eq!(f.fixed, g.fixed);
    }
}

#[test]
fn flow_file_errors() {
    assert!(matches!(flow_from_json("x", "{"), Err(Error::Parse(_))));
    let bad = r#"{"complex":"torus@4","successors":{"100000":[0]},"fixed":[]}"#;
    assert!(matches!(flow_from_json("x", bad), Err(Error::InvalidFlow(_))));
    let unknown = r#"{"complex":"moebius@4","successors":{},"fixed":[]}"#;
    assert!(matches!(flow_from_json("x", unknown), Err(Error::UnknownCatalog(_))));
}

#[test]
fn vector_field_names() {
    let f = from_vector_field("rest", complex::torus(4).unwrap()).unwrap();
    assert_eq!(f.fixed.len(), 16);
    assert!(from_vector_field("north-south", complex::sphere(4).unwrap()).is_ok());
    assert!(matches!(from_vector_field("spiral", complex::torus(4).unwrap()), Err(Error::UnknownFlow(_))));
    assert!(matches!(from_vector_field("example22", complex::sphere(4).unwrap()), Err(Error::Precondition(_))));
}

#[test]
fn refinement_projects_onto_the_coarse_attractor() {
    let coarse = catalog_flow("example22-torus", 8).unwrap();
    let fine = coarse.flow.refine(2).unwrap();
    assert_eq!(fine.top_cells().len(), 4 * coarse.flow.top_cells().len());
    let fine_k = catalog_flow("example22-torus", 16).unwrap().k;
    let tops: CellSet = fine.complex.top_of(&fine_k).into_iter().collect();
    let projected = project_cells(&fine.complex, &coarse.flow.complex, &tops).unwrap();
    let coarse_tops: CellSet = coarse.flow.complex.top_of(&coarse.k).into_iter().collect();
    assert!(projected.is_subset(&coarse_tops));
    assert!(matches!(coarse.flow.refine(0), Err(Error::ZeroResolution)));
    let rest = from_vector_field("rest", complex::torus(4).unwrap()).unwrap();
    assert!(matches!(rest.refine(2), Err(Error::NoRefinement(_))));
}

#[test]
fn combinatorial_duality_on_the_catalog() {
    for name in FLOW_CATALOG {
        let f = catalog_flow(name, 6).unwrap().flow;
        let all = f.complex.all();
        let tops = f.top_cells();
        let plus: Vec<CellSet> = tops.iter().map(|&x| f.j_plus(x, &all).unwrap().cells).collect();
        let minus: Vec<CellSet> = tops.iter().map(|&x| f.j_minus(x, &all).unwrap().cells).collect();
        for (i, &x) in tops.iter().enumerate() {
            for (j, &y) in tops.iter().enumerate() {
                assert_eq!(minus[i].contains(y), plus[j].contains(x), "{name}: {x} {y}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eventual_image_matches_iteration(m in masks(), pick in any::<u16>(), forward in any::<bool>()) {
        let f = random_flow(&m);
        let tops = f.top_cells();
        let u: BTreeSet<usize> = tops.iter().enumerate().filter(|(i, _)| (pick >> i) & 1 == 1).map(|(_, &c)| c).collect();
        prop_assert_eq!(f.eventual_image(&u, forward), f.eventual_image_by_iteration(&u, forward));
    }

    #[test]
    fn eventual_image_is_invariant_and_monotone(m in masks(), a in any::<u16>(), b in any::<u16>()) {
        let f = random_flow(&m);
        let tops = f.top_cells();
        let set = |bits: u16| -> BTreeSet<usize> { tops.iter().enumerate().filter(|(i, _)| (bits >> i) & 1 == 1).map(|(_, &c)| c).collect() };
        let (u, v) = (set(a), set(a | b));
        let eu = f.eventual_image(&u, true);
        prop_assert_eq!(f.image(&eu, true), eu.clone());
        prop_assert!(eu.is_subset(&f.eventual_image(&v, true)));
    }

    #[test]
    fn prolongations_are_dual(m in masks()) {
        let f = random_flow(&m);
        let all = f.complex.all();
        let tops = f.top_cells();
        for &x in &tops {
            let jp = f.j_plus(x, &all).unwrap();
            for &y in &tops {
                let jm = f.j_minus(y, &all).unwrap();
                prop_assert_eq!(jp.cells.contains(y), jm.cells.contains(x));
            }
        }
    }
}
