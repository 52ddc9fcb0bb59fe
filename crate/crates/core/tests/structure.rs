use pclass_core::datum::{DatumError, GaloisDatum, SubfieldIndex};
use pclass_core::decompose::{corollary3_check, decompose, verify, Decomposition, Outcome};
use pclass_core::fp_linalg::FpMatrix;
use pclass_core::gmod::ppow;
use pclass_core::lemmas::{lemma_suite, SuiteOptions};
use pclass_core::synth::{random_params, shuffle, sweep_params, synthesize, SynthParams};
use proptest::prelude::*;

use SubfieldIndex::{Finite, NegInfinity};

fn params(p: u32, n: u32, m: Option<SubfieldIndex>, e: &[usize]) -> SynthParams {
    SynthParams { p, n, m, e: e.to_vec(), xi_in_f: m.is_some(), minus_one_is_norm: None, shuffle_seed: None }
}

fn build(p: u32, n: u32, seed: u64) -> (SynthParams, GaloisDatum) {
    let sp = random_params(p, n, seed).unwrap();
    let d = synthesize(&sp).unwrap();
    (sp, d)
}

fn pn_strategy() -> impl Strategy<Value = (u32, u32, u64)> {
    (prop::sample::select(vec![2u32, 3, 5]), 1u32..=3, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn synthetic_data_validate((p, n, seed) in pn_strategy()) {
        let (sp, d) = build(p, n, seed);
        let v = d.validate();
        prop_assert!(v.is_empty(), "{sp:?}: {v:?}");
        prop_assert_eq!(d.e_ranks().unwrap(), sp.e.clone());
    }

    #[test]
    fn decomposition_recovers_parameters((p, n, seed) in pn_strategy()) {
        let (sp, d) = build(p, n, seed);
        let dec = decompose(&d).unwrap();
        prop_assert_eq!(dec.m, sp.m);
        prop_assert_eq!(dec.y_ranks(n), sp.y_ranks());
        prop_assert_eq!(dec.block_sizes(p), sp.expected().blocks);
        let report = verify(&dec, &d);
        prop_assert!(report.passed(), "{sp:?}\n{report}");
    }

    #[test]
    fn search_agrees_with_class_characterization((p, n, seed) in pn_strategy()) {
        let (sp, d) = build(p, n, seed);
        if d.has_exceptional_hypothesis().unwrap() {
            let r = d.exceptional_search().unwrap();
            prop_assert_eq!(Some(r.m), sp.m);
            prop_assert_eq!(d.i_via_theorem3().unwrap(), r.m);
            prop_assert_eq!(d.module.length(&r.delta) as u64, r.m.ppow(p) + 1);
        } else {
            prop_assert!(sp.m.is_none());
        }
    }

    #[test]
    fn restriction_table_holds((p, n, seed) in pn_strategy()) {
        let (sp, d) = build(p, n, seed);
        if sp.m.is_some() {
            let rep = corollary3_check(&d, &[]).unwrap();
            prop_assert!(rep.passed(), "{sp:?}: {rep:?}");
            for row in &rep.restrictions {
                if row.outcome == Outcome::NotApplicable {
                    prop_assert!(p == 2 && row.j + 1 == n);
                }
            }
        }
    }

    #[test]
    fn lemma_suite_holds((p, n, seed) in pn_strategy()) {
        let (sp, d) = build(p, n, seed);
        let opts = SuiteOptions { seed, free_modules: 5, norm_samples: 24 };
        let report = lemma_suite(&d, opts).unwrap();
        prop_assert!(report.passed(), "{sp:?}\n{report}");
    }

    #[test]
    fn json_round_trip((p, n, seed) in pn_strategy()) {
        let (_, d) = build(p, n, seed);
        let back = GaloisDatum::from_json(&d.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), d.to_json());
        let dec = decompose(&d).unwrap();
        prop_assert_eq!(Decomposition::from_json(&dec.to_json()).unwrap(), dec);
    }
}

#[test]
fn shuffled_data_decompose_identically() {
    for (p, n) in [(2, 2), (3, 2), (5, 1), (2, 3)] {
        for seed in 0..6 {
            let (sp, d) = build(p, n, seed);
            let s = shuffle(&d, seed + 100);
            assert!(s.validate().is_empty());
            let dec = decompose(&s).unwrap();
            assert_eq!(dec.m, sp.m);
            assert_eq!(dec.block_sizes(p), sp.expected().blocks);
            assert!(verify(&dec, &s).passed());
        }
    }
}

#[test]
fn zeroed_inclusion_is_rejected() {
    let mut d = synthesize(&params(3, 2, Some(Finite(1)), &[1, 2, 1])).unwrap();
    let lvl = &mut d.levels[1];
    lvl.eps = FpMatrix::zero(3, lvl.eps.rows(), lvl.eps.cols());
    assert!(!d.validate().is_empty());
}

#[test]
fn shortened_generator_fails_verification() {
    let d = synthesize(&params(3, 2, Some(Finite(0)), &[2, 1, 1])).unwrap();
    let mut dec = decompose(&d).unwrap();
    let g = dec.y_generators.iter_mut().find(|g| g.level == 2).unwrap();
    g.coords = d.module.apply_nil_pow(1, &g.coords);
    let report = verify(&dec, &d);
    assert!(!report.passed());
    assert!(report.failures().any(|c| c.id == "T2.2" || c.id == "T2.decomposition"));
}

#[test]
fn exceptional_lengths() {
    let d = synthesize(&params(3, 2, Some(NegInfinity), &[1, 1, 1])).unwrap();
    let r = d.exceptional_search().unwrap();
    assert_eq!((r.m, d.module.length(&r.delta)), (NegInfinity, 1));

    let d = synthesize(&params(3, 2, Some(Finite(1)), &[1, 1, 1])).unwrap();
    let r = d.exceptional_search().unwrap();
    assert_eq!((r.m, d.module.length(&r.delta)), (Finite(1), 4));

    let d = synthesize(&params(3, 2, None, &[1, 1, 1])).unwrap();
    assert!(matches!(d.exceptional_search(), Err(DatumError::HypothesisNotMet(_))));
}

#[test]
fn restriction_examples() {
    // m = 1 in a degree-27 tower: i(K/K_1) = 0, i(K/K_2) = −∞.
    let d = synthesize(&params(3, 3, Some(Finite(1)), &[1, 1, 1, 1])).unwrap();
    let rep = corollary3_check(&d, &[]).unwrap();
    let got: Vec<(u32, String)> = rep.restrictions.iter().map(|r| (r.j, r.actual.clone())).collect();
    assert_eq!(got, vec![(0, "1".into()), (1, "0".into()), (2, "-inf".into())]);
    assert!(d.restrict(3).is_err());
}

#[test]
fn quadratic_top_step_is_outside_the_table() {
    // p = 2, m = n − 1: K/K_{n−1} has −1 outside its norm group.
    let d = synthesize(&params(2, 2, Some(Finite(1)), &[1, 1, 1])).unwrap();
    let r = d.restrict(1).unwrap();
    assert_eq!(r.minus_one_is_norm, Some(false));
    assert!(!r.has_exceptional_hypothesis().unwrap());
    let rep = corollary3_check(&d, &[]).unwrap();
    assert_eq!(rep.restrictions[1].outcome, Outcome::NotApplicable);
}

#[test]
fn norm_equation_on_fixed_points() {
    let d = synthesize(&params(3, 1, Some(Finite(0)), &[1, 2])).unwrap();
    let top = ppow(3, 1);
    for g in d.module.nil_kernel(1).basis() {
        if let Some(a) = d.solve_norm_equation(g).unwrap() {
            assert_eq!(d.module.apply_nil_pow(top - 1, &a), *g);
        }
    }
    assert_eq!(d.solve_norm_equation(&vec![0; d.dim()]).unwrap(), None);
}

#[test]
fn regular_representation_is_one_free_block() {
    for (p, n) in [(2, 3), (3, 2), (5, 1)] {
        let mut e = vec![0; n as usize + 1];
        e[n as usize] = 1;
        let d = synthesize(&params(p, n, None, &e)).unwrap();
        let dec = decompose(&d).unwrap();
        assert_eq!(dec.block_sizes(p), vec![ppow(p, n) as usize]);
        assert!(verify(&dec, &d).passed());
    }
}

#[test]
fn sweep_enumeration_is_legal_and_capped() {
    let all = sweep_params(3, 2, 2, 120);
    assert!(!all.is_empty());
    for sp in &all {
        assert!(sp.check().is_ok());
        assert!((1..=120).contains(&sp.dim()));
        assert!(sp.e.iter().all(|&r| r <= 2));
    }
    // 27 rank vectors, each with up to four legal cases.
    assert!(all.len() <= 27 * 4);
}
