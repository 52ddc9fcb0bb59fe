use pclass_core::fp_linalg::{FpMatrix, FpSubspace};
use pclass_core::gmod::{jordan_sigma, ppow, GModule};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// σ with the given block sizes, conjugated by a random change of basis.
fn conjugated(p: u32, n: u32, sizes: &[usize], seed: u64) -> GModule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d: usize = sizes.iter().sum();
    let base = jordan_sigma(p, sizes);
    let change = FpMatrix::random_invertible(p, d, &mut rng);
    let sigma = change.mul(&base).unwrap().mul(&change.inverse().unwrap()).unwrap();
    GModule::new(p, n, sigma).unwrap()
}

fn random_sizes(p: u32, n: u32, seed: u64, max_dim: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let top = ppow(p, n) as usize;
    let mut sizes = Vec::new();
    let mut total = 0;
    for _ in 0..rng.gen_range(1..=4) {
        let s = rng.gen_range(1..=top.min(max_dim));
        if total + s > max_dim {
            break;
        }
        total += s;
        sizes.push(s);
    }
    if sizes.is_empty() {
        sizes.push(1);
    }
    sizes
}

fn module_strategy() -> impl Strategy<Value = (GModule, Vec<usize>)> {
    (prop::sample::select(vec![2u32, 3, 5]), 1u32..=2, any::<u64>()).prop_map(|(p, n, seed)| {
        let sizes = random_sizes(p, n, seed, 24);
        (conjugated(p, n, &sizes, seed), sizes)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn length_is_cyclic_dimension((m, _) in module_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<u32> = (0..m.dim()).map(|_| rng.gen_range(0..m.p())).collect();
        prop_assert_eq!(m.length(&u), m.cyclic_submodule(&u).dim());
    }

    #[test]
    fn socle_series_strictly_increases((m, _) in module_strategy()) {
        let series = m.socle_series();
        for w in series.windows(2) {
            prop_assert!(w[0].dim() < w[1].dim());
            prop_assert!(w[0].is_subspace_of(&w[1]));
        }
        prop_assert_eq!(series.last().unwrap().dim(), m.dim());
        for i in 0..=m.n() {
            let k = ppow(m.p(), i) as usize;
            let expect = if k <= series.len() { series[k - 1].clone() } else { m.full() };
            prop_assert_eq!(m.fixed_points(i).unwrap(), expect);
        }
    }

    #[test]
    fn jordan_type_recovers_blocks((m, mut sizes) in module_strategy()) {
        let jt = m.jordan_type();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        prop_assert_eq!(jt.iter().sum::<usize>(), m.dim());
        prop_assert_eq!(jt.len(), m.nil_kernel(1).dim());
        prop_assert_eq!(jt, sizes);
    }

    #[test]
    fn free_complement_splits(p in prop::sample::select(vec![2u32, 3]), rank in 1usize..=3, keep in 0usize..=3, seed in any::<u64>()) {
        let n = 1;
        let block = ppow(p, n) as usize;
        let m = conjugated(p, n, &vec![block; rank], seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        // V generated by random elements of full length.
        let mut gens = Vec::new();
        let mut v = m.zero_space();
        while gens.len() < keep.min(rank) {
            let u: Vec<u32> = (0..m.dim()).map(|_| rng.gen_range(0..p)).collect();
            let c = m.cyclic_submodule(&u);
            if m.length(&u) == block && c.intersect(&v).unwrap().is_zero() {
                v = v.sum(&c).unwrap();
                gens.push(u);
            }
        }
        let u = m.full();
        let w = m.free_complement(&u, &v).unwrap();
        prop_assert!(w.intersect(&v).unwrap().is_zero());
        prop_assert_eq!(w.sum(&v).unwrap(), u);
        let jt = m.restricted_jordan_type(&w);
        prop_assert!(jt.iter().all(|&b| b == block));
    }
}

/// Fixed points of H_i in a free module are the image of (σ−1)^{p^n − p^i}.
fn free_module_identity(p: u32, n: u32) {
    let block = ppow(p, n) as usize;
    let max_rank = (125 / block).clamp(1, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(1000 * p as u64 + n as u64);
    for _ in 0..200 {
        let rank = rng.gen_range(1..=max_rank);
        let m = conjugated(p, n, &vec![block; rank], rng.gen());
        for i in 0..=n {
            let img: FpSubspace = m.nil_image(ppow(p, n) - ppow(p, i));
            assert_eq!(m.fixed_points(i).unwrap(), img, "p={p} n={n} i={i}");
        }
    }
}

#[test]
fn free_module_identity_p2() {
    for n in 1..=3 {
        free_module_identity(2, n);
    }
}

#[test]
fn free_module_identity_p3() {
    for n in 1..=3 {
        free_module_identity(3, n);
    }
}

#[test]
fn free_module_identity_p5() {
    for n in 1..=3 {
        free_module_identity(5, n);
    }
}
