use std::sync::Arc;

use conleylab::attractor::{analyze, basin, collar, stabilization, ComponentLabel};
use conleylab::blocks::{asymptotic_sets, build_block, conley_euler, section_components};
use conleylab::complex::{self, CellSet};
use conleylab::constructions::{
    add_uniform_component, catalog_flow, freeze_outside, hypersurface_flow, meridian, FLOW_CATALOG,
};
use conleylab::{Classification, CombinatorialFlow, Error, IsolatingBlock};

#[test]
fn catalog_verdicts_match_their_recipes() {
    for name in FLOW_CATALOG {
        let cf = catalog_flow(name, 8).unwrap();
        let rep = analyze(&cf.k, &cf.flow).unwrap();
        let exp = cf.expected.unwrap();
        assert_eq!((rep.classification, rep.r, rep.s), (exp.classification, exp.r, exp.s), "{name}");
        assert!(cf.k.iter().filter(|&c| cf.flow.complex.is_top(c)).all(|c| rep.basin.contains(c)));
        assert!(cf.k.is_subset(&rep.stabilization));
        assert_eq!(rep.witness.is_some(), rep.classification == Classification::ExternalExplosions, "{name}");
    }
}

#[test]
fn verdicts_are_stable_under_refinement() {
    for name in ["example22-torus", "north-south", "homoclinic-sphere", "hypersurface-genus2-two"] {
        let cf = catalog_flow(name, 12).unwrap();
        let rep = analyze(&cf.k, &cf.flow).unwrap();
        let exp = cf.expected.unwrap();
        assert_eq!((rep.classification, rep.r, rep.s), (exp.classification, exp.r, exp.s), "{name}");
    }
}

#[test]
fn global_attractors() {
    for name in ["example22-torus", "example22-klein", "hypersurface-torus", "hypersurface-genus2"] {
        let cf = catalog_flow(name, 8).unwrap();
        assert!(analyze(&cf.k, &cf.flow).unwrap().global, "{name}");
    }
    let cf = catalog_flow("north-south", 8).unwrap();
    let rep = analyze(&cf.k, &cf.flow).unwrap();
    assert!(!rep.global);
    // the north cap is the only cell outside the basin
    assert_eq!(rep.basin.len() + 1, cf.flow.top_cells().len());
}

#[test]
fn homoclinic_components_are_labelled() {
    let cf = catalog_flow("hypersurface-genus2-two", 8).unwrap();
    let rep = analyze(&cf.k, &cf.flow).unwrap();
    assert_eq!(rep.components.len(), 2);
    assert!(rep.components.iter().all(|c| c.label == ComponentLabel::Homoclinic));
    let cf = catalog_flow("north-south", 8).unwrap();
    let rep = analyze(&cf.k, &cf.flow).unwrap();
    assert_eq!(rep.components.iter().map(|c| c.label).collect::<Vec<_>>(), vec![ComponentLabel::Uniform]);
}

#[test]
fn isolation_errors() {
    let cx = Arc::new(complex::torus(6).unwrap());
    let rest = CombinatorialFlow::rest(cx.clone());
    let k = cx.closure_of_cells(&[cx.top_cells()[0]]);
    assert!(matches!(basin(&k, &rest), Err(Error::NotIsolated(_))));
    assert!(matches!(analyze(&CellSet::from_iter([cx.top_cells()[0]]), &rest), Err(Error::NotClosed)));
    assert!(matches!(analyze(&CellSet::new(), &rest), Err(Error::NotIsolated(_))));
    assert!(matches!(build_block(&k, &rest, 1), Err(Error::NoBlock(_))));
}

#[test]
fn stabilization_of_a_stable_attractor_adds_nothing() {
    let cf = catalog_flow("north-south", 8).unwrap();
    let hat = stabilization(&cf.k, &cf.flow).unwrap();
    assert_eq!(cf.flow.complex.top_of(&hat), cf.flow.complex.top_of(&cf.k));
    assert!(collar(&cf.k, &cf.flow).len() > 1);
}

#[test]
fn freezing_outside_a_trapping_region() {
    let cf = catalog_flow("example22-torus", 8).unwrap();
    let f = &cf.flow;
    let cx = &f.complex;
    let grid = cx.grid.clone().unwrap();
    let hole = grid.at(0, 3, 4).unwrap();
    let all_but_one: Vec<usize> = cx.top_cells().into_iter().filter(|&c| c != hole).collect();
    let p = cx.closure_of_cells(&all_but_one);
    assert!(matches!(freeze_outside(f, &p), Err(Error::NotPositivelyInvariant(_))));

    let ns = catalog_flow("north-south", 8).unwrap();
    let grid = ns.flow.complex.grid.clone().unwrap();
    let north = grid.caps[1];
    let inside: Vec<usize> = ns.flow.top_cells().into_iter().filter(|&c| c != north).collect();
    let p = ns.flow.complex.closure_of_cells(&inside);
    let g = freeze_outside(&ns.flow, &p).unwrap();
    assert!(g.fixed.contains(north));
    assert_eq!(g.successors(north), &[north]);
    assert_eq!(analyze(&ns.k, &g).unwrap().classification, Classification::Stable);
    assert!(matches!(freeze_outside(&ns.flow, &CellSet::from_iter([north])), Err(Error::NotClosed)));
}

#[test]
fn a_fin_adds_one_uniform_component() {
    let cf = catalog_flow("example22-torus", 8).unwrap();
    let before = analyze(&cf.k, &cf.flow).unwrap();
    let (g, k) = add_uniform_component(&cf.flow, &cf.k).unwrap();
    let after = analyze(&k, &g).unwrap();
    assert_eq!(after.s, before.s + 1);
    assert_eq!(after.r, before.r);
    assert_eq!(after.classification, Classification::NoExternalExplosions);
    assert_eq!(after.components.iter().filter(|c| c.label == ComponentLabel::Uniform).count(), 1);
    assert_eq!(g.complex.euler(), cf.flow.complex.euler());
}

#[test]
fn hypersurface_errors() {
    let m = complex::torus(8).unwrap();
    let two = meridian(&m, 0, 1).unwrap().union(&meridian(&m, 0, 5).unwrap());
    assert!(matches!(hypersurface_flow(Arc::new(m.clone()), &two), Err(Error::SeparatingCycle(_))));
    let half: CellSet = meridian(&m, 0, 1).unwrap().iter().take(3).collect();
    assert!(matches!(hypersurface_flow(Arc::new(m), &half), Err(Error::InvalidCycle(_))));
    let s = complex::sphere(8).unwrap();
    assert!(hypersurface_flow(Arc::new(s), &CellSet::new()).is_err());
}

fn block(name: &str) -> (conleylab::constructions::CatalogFlow, IsolatingBlock) {
    let cf = catalog_flow(name, 8).unwrap();
    let b = build_block(&cf.k, &cf.flow, 1).unwrap();
    (cf, b)
}

#[test]
fn blocks_of_the_mapping_torus_flow() {
    let (cf, b) = block("example22-torus");
    assert!(b.regular);
    assert_eq!(section_components(&b, &cf.flow).unwrap(), (1, 1));
    assert_eq!(conley_euler(&b, &cf.flow), 0);
    let (plus, minus) = asymptotic_sets(&b, &cf.flow);
    assert_eq!(plus.union(&minus), b.tops);
    assert!(cf.k.is_subset(&b.n));
    assert!(b.entrance.is_subset(&b.boundary) && b.exit.is_subset(&b.boundary));
}

#[test]
fn block_counts_across_the_catalog() {
    // (flow, regular, exit/entrance section components, Conley-Euler)
    let table = [
        ("north-south", true, Some((0, 1)), 1),
        ("north-south-circle", true, Some((0, 2)), 1),
        ("hypersurface-genus2", true, Some((1, 1)), -2),
        ("hypersurface-genus2-two", true, Some((2, 2)), -2),
        ("homoclinic-sphere", false, None, 0),
    ];
    for (name, regular, sections, ce) in table {
        let (cf, b) = block(name);
        assert_eq!(b.regular, regular, "{name}");
        assert_eq!(section_components(&b, &cf.flow).ok(), sections, "{name}");
        assert_eq!(conley_euler(&b, &cf.flow), ce, "{name}");
    }
    let (cf, b) = block("homoclinic-sphere");
    assert!(matches!(section_components(&b, &cf.flow), Err(Error::NonRegular(_))));
}

#[test]
fn block_serializes_with_short_field_names() {
    let (_, b) = block("example22-klein");
    let text = serde_json::to_string(&b).unwrap();
    for key in ["\"N\"", "\"Nplus\"", "\"Nminus\"", "\"nplus\"", "\"nminus\"", "\"regular\""] {
        assert!(text.contains(key), "{key}");
    }
    let back: IsolatingBlock = serde_json::from_str(&text).unwrap();
    assert_eq!(back, b);
}

#[test]
fn report_round_trips_through_json() {
    for name in ["homoclinic-sphere", "hypersurface-genus2-two"] {
        let cf = catalog_flow(name, 8).unwrap();
        let rep = analyze(&cf.k, &cf.flow).unwrap();
        let back: conleylab::AttractorReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
        assert_eq!(back, rep);
    }
}
