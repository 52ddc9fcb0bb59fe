use pclass_core::datum::SubfieldIndex;
use pclass_core::decompose::{corollary3_check, decompose, verify};
use pclass_core::local_fields::{
    build_datum, make_tower, root_norm_crosscheck, sample_normcond_instance, LocalTower, TowerKind, TowerSpec,
};

use TowerKind::{Cyclotomic, Unramified};

fn tower(p: u32, kind: TowerKind, n: u32, precision: Option<u32>) -> LocalTower {
    make_tower(p, kind, n, precision).unwrap()
}

#[test]
fn unramified_cubic() {
    let t = tower(3, Unramified, 1, Some(40));
    assert_eq!(t.class_dim(1).unwrap(), 4);
    let d = build_datum(&t).unwrap();
    assert!(!d.xi_in_f);
    assert_eq!(d.e_ranks().unwrap(), vec![1, 1]);
    let dec = decompose(&d).unwrap();
    assert_eq!(dec.m, None);
    assert_eq!(dec.block_sizes(3), vec![3, 1]);
    assert!(verify(&dec, &d).passed());
}

#[test]
fn zeta9_over_zeta3() {
    let t = tower(3, Cyclotomic, 1, Some(60));
    assert_eq!(t.class_dim(1).unwrap(), 8);
    let d = build_datum(&t).unwrap();
    assert!(d.validate().is_empty());
    let r = d.exceptional_search().unwrap();
    assert_eq!(d.i_via_theorem3().unwrap(), r.m);
    let dec = decompose(&d).unwrap();
    assert_eq!(dec.m, Some(r.m));
    assert_eq!(d.module.length(dec.x_generator.as_ref().unwrap()) as u64, r.m.ppow(3) + 1);
    let report = verify(&dec, &d);
    assert!(report.passed(), "{report}");
}

#[test]
fn dimension_formula_on_every_level() {
    for (p, kind, n) in [(3, Unramified, 2), (5, Unramified, 1), (3, Cyclotomic, 2), (5, Cyclotomic, 1), (2, Cyclotomic, 1), (2, Cyclotomic, 2)] {
        let t = tower(p, kind, n, None);
        for s in t.summary() {
            assert_eq!(s.class_dim, s.formula_dim, "p={p} {kind} n={n}: {s:?}");
        }
    }
}

#[test]
fn extracted_data_decompose() {
    for (p, kind, n) in [(3, Unramified, 2), (5, Unramified, 1), (3, Cyclotomic, 2), (5, Cyclotomic, 1), (2, Cyclotomic, 1), (2, Cyclotomic, 2)] {
        let t = tower(p, kind, n, None);
        let d = build_datum(&t).unwrap();
        let dec = decompose(&d).unwrap();
        let report = verify(&dec, &d);
        assert!(report.passed(), "p={p} {kind} n={n}\n{report}");
        if d.has_exceptional_hypothesis().unwrap() {
            assert_eq!(d.exceptional_search().unwrap().m, d.i_via_theorem3().unwrap());
        }
    }
}

#[test]
fn precision_stability() {
    for (p, kind, n) in [(3, Unramified, 1), (3, Cyclotomic, 1), (3, Cyclotomic, 2)] {
        let base = tower(p, kind, n, None);
        let more = tower(p, kind, n, Some(base.precision() + 5));
        assert_eq!(build_datum(&base).unwrap().to_json(), build_datum(&more).unwrap().to_json());
    }
}

#[test]
fn kummer_chain() {
    let t = tower(3, Cyclotomic, 2, None);
    let gens = t.kummer_generators().unwrap();
    assert_eq!(gens.len(), 2);
    let down = t.norm(&gens[0], 1, 0).unwrap();
    assert_eq!(t.class_of(0, &down).unwrap(), t.class_of(0, &gens[1]).unwrap());
    assert!(t.class_of(2, &gens[0]).unwrap().iter().all(|&c| c == 0));
}

#[test]
fn subtower_has_no_exceptional_level() {
    let full = build_datum(&tower(3, Cyclotomic, 2, None)).unwrap();
    let sub = build_datum(&tower(3, Cyclotomic, 1, None)).unwrap();
    let rep = corollary3_check(&full, &[sub]).unwrap();
    assert!(rep.passed(), "{rep:?}");
    assert_eq!(rep.subtowers[0].actual, SubfieldIndex::NegInfinity.to_string());
}

#[test]
fn root_norm_identity() {
    for n in [1, 2] {
        let t = tower(3, Cyclotomic, n, None);
        // α ∈ F: both sides are 1.
        let a = t.norm(&t.element(n, &[2, 1, 1]), n, 0).unwrap();
        assert!(root_norm_crosscheck(&t, &a, &t.one(), &t.one(), 0).unwrap());
        for seed in 0..20 {
            let i = (seed % n as u64) as u32;
            let (alpha, gamma, k) = sample_normcond_instance(&t, i, seed).unwrap();
            assert!(root_norm_crosscheck(&t, &alpha, &gamma, &k, i).unwrap(), "n={n} seed={seed}");
        }
    }
}

#[test]
fn kummer_root_instance() {
    // α = ζ_9: α^{σ−1} = ζ_9^3 ∈ F.
    let t = tower(3, Cyclotomic, 1, Some(60));
    let z = t.zeta().unwrap();
    let gamma = t.pow(&z, 3);
    assert!(root_norm_crosscheck(&t, &z, &gamma, &t.one(), 0).unwrap());
}

#[test]
fn spec_json() {
    let spec: TowerSpec = serde_json::from_str(r#"{"p":3,"kind":"cyclotomic","n":1,"precision":60}"#).unwrap();
    assert_eq!(spec.build().unwrap().class_dim(1).unwrap(), 8);
    assert!(serde_json::from_str::<TowerSpec>(r#"{"p":3,"kind":"ramified","n":1}"#).is_err());
}
