//! Synthetic data with a known answer: given (p, n, m, e) build a datum
//! whose decomposition is fixed by construction.
//!
//! In canonical coordinates J is a sum of Jordan blocks (X first, then
//! Y_n down to Y_0), every subfield image [K_i×] is spanned by coordinate
//! vectors, and the norm from K to K_i is (σ−1)^{p^n−p^i} lifted through ε_i
//! plus the X-generator coordinate times a_i.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datum::{GaloisDatum, LevelData, SubfieldIndex};
use crate::fp_linalg::{self, FpMatrix};
use crate::gmod::{jordan_sigma, ppow, GModule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, SynthError>;

/// Target parameters. `m = None` selects the no-exceptional-element case;
/// `e` is the vector of norm ranks e_0..e_n, so the Y_m rank is e_m − 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthParams {
    pub p: u32,
    pub n: u32,
    #[serde(with = "m_field")]
    pub m: Option<SubfieldIndex>,
    pub e: Vec<usize>,
    #[serde(rename = "xi_in_F")]
    pub xi_in_f: bool,
    pub minus_one_is_norm: Option<bool>,
    pub shuffle_seed: Option<u64>,
}

/// `m` as an integer, "-inf", or "n/a".
pub mod m_field {
    use super::SubfieldIndex;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<SubfieldIndex>, s: S) -> Result<S::Ok, S::Error> {
        match m {
            None => s.serialize_str("n/a"),
            Some(i) => i.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<SubfieldIndex>, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        if v.as_str() == Some("n/a") {
            return Ok(None);
        }
        SubfieldIndex::deserialize(v).map(Some).map_err(serde::de::Error::custom)
    }

    pub fn parse(s: &str) -> Option<Option<SubfieldIndex>> {
        if s.trim() == "n/a" {
            return Some(None);
        }
        SubfieldIndex::parse(s).map(Some)
    }
}

/// The answer a synthesized datum is built to have.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    #[serde(with = "m_field")]
    pub m: Option<SubfieldIndex>,
    pub e: Vec<usize>,
    pub y_ranks: Vec<usize>,
    pub x_dim: Option<u64>,
    pub blocks: Vec<usize>,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub params: SynthParams,
    pub expected: Expected,
}

impl SynthParams {
    /// Check legality; returns the effective −1-is-a-norm flag.
    pub fn check(&self) -> Result<Option<bool>> {
        let bad = |s: String| Err(SynthError::Infeasible(s));
        if fp_linalg::check_modulus(self.p).is_err() {
            return bad(format!("p = {} is not a supported prime", self.p));
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.e.len() != self.n as usize + 1 {
            return bad(format!("e needs {} entries", self.n + 1));
        }
        let low_case = self.p == 2 && self.n == 1;
        match self.m {
            None => {
                if self.xi_in_f && !(low_case && self.minus_one_is_norm == Some(false)) {
                    return bad("no exceptional element requires xi_p not in F, or p=2, n=1 with -1 not a norm".into());
                }
                Ok(if low_case && self.xi_in_f { Some(false) } else { None })
            }
            Some(m) => {
                if !self.xi_in_f {
                    return bad("an exceptional index requires xi_p in F".into());
                }
                if let SubfieldIndex::Finite(i) = m {
                    if i >= self.n {
                        return bad(format!("m = {i} must be below n = {}", self.n));
                    }
                    if self.e[i as usize] == 0 {
                        return bad(format!("m = {i} requires e_{i} >= 1"));
                    }
                }
                if low_case {
                    if self.minus_one_is_norm == Some(false) {
                        return bad("p=2, n=1 with -1 not a norm has no exceptional element".into());
                    }
                    if m != SubfieldIndex::NegInfinity {
                        return bad("p=2, n=1 forces m = -inf".into());
                    }
                    return Ok(Some(true));
                }
                Ok(None)
            }
        }
    }

    pub fn y_ranks(&self) -> Vec<usize> {
        let mut r = self.e.clone();
        if let Some(SubfieldIndex::Finite(i)) = self.m {
            r[i as usize] -= 1;
        }
        r
    }

    pub fn x_dim(&self) -> Option<u64> {
        self.m.map(|m| m.ppow(self.p) + 1)
    }

    pub fn dim(&self) -> u64 {
        let y: u64 = self.y_ranks().iter().enumerate().map(|(i, &r)| r as u64 * ppow(self.p, i as u32)).sum();
        y + self.x_dim().unwrap_or(0)
    }

    /// Block sizes in canonical order: X, then Y_n … Y_0.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        if let Some(x) = self.x_dim() {
            sizes.push(x as usize);
        }
        for (i, &r) in self.y_ranks().iter().enumerate().rev() {
            sizes.extend(std::iter::repeat_n(ppow(self.p, i as u32) as usize, r));
        }
        sizes
    }

    pub fn expected(&self) -> Expected {
        let mut blocks = self.block_sizes();
        blocks.sort_unstable_by(|a, b| b.cmp(a));
        Expected {
            m: self.m,
            e: self.e.clone(),
            y_ranks: self.y_ranks(),
            x_dim: self.x_dim(),
            blocks,
            dim: self.dim() as usize,
        }
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar { params: self.clone(), expected: self.expected() }
    }
}

/// Coordinates spanning [K_i×] for i < n: a tail of each block.
fn subfield_coords(params: &SynthParams, sizes: &[usize], i: u32) -> Vec<usize> {
    let keep = ppow(params.p, i);
    let has_x = params.m.is_some();
    let mut coords = Vec::new();
    let mut off = 0;
    for (b, &s) in sizes.iter().enumerate() {
        // The X block loses its generator: its part is the last min(s−1, p^i).
        let avail = if has_x && b == 0 { s - 1 } else { s };
        let take = (keep.min(avail as u64)) as usize;
        coords.extend(off + s - take..off + s);
        off += s;
    }
    coords
}

/// Build the datum for legal parameters.
pub fn synthesize(params: &SynthParams) -> Result<GaloisDatum> {
    let flag = params.check()?;
    let (p, n) = (params.p, params.n);
    let sizes = params.block_sizes();
    let d: usize = sizes.iter().sum();
    let sigma = jordan_sigma(p, &sizes);
    let module = GModule::new(p, n, sigma.clone()).expect("Jordan blocks of size at most p^n");
    let with_a = params.xi_in_f;
    // Coordinate of the X generator, read by every norm functional.
    let x_gen = params.m.is_some().then_some(0usize);

    let coords: Vec<Vec<usize>> = (0..n).map(|i| subfield_coords(params, &sizes, i)).collect();
    let level_dim = |i: usize| coords[i].len() + usize::from(with_a);

    // Restriction of a J-vector lying in the span of `cs` to those coordinates.
    let restrict_rows = |m: &FpMatrix, cs: &[usize]| -> FpMatrix {
        let rows: Vec<Vec<u32>> = cs.iter().map(|&c| m.row(c).to_vec()).collect();
        if rows.is_empty() {
            return FpMatrix::zero(p, 0, m.cols());
        }
        FpMatrix::from_rows(p, m.cols(), &rows).unwrap()
    };

    let mut norms: Vec<FpMatrix> = Vec::new();
    let mut levels: Vec<LevelData> = Vec::new();
    for i in 0..n as usize {
        let cs = &coords[i];
        let di = level_dim(i);
        let mut eps = FpMatrix::zero(p, d, di);
        for (k, &c) in cs.iter().enumerate() {
            eps.set(c, k, 1);
        }
        let mut sigma_i = FpMatrix::identity(p, di);
        for (k, &c) in cs.iter().enumerate() {
            for (l, &c2) in cs.iter().enumerate() {
                sigma_i.set(l, k, sigma.get(c2, c));
            }
        }
        let power = module.nil_pow(ppow(p, n) - ppow(p, i as u32));
        let mut norm = FpMatrix::zero(p, di, d);
        let lifted = restrict_rows(&power, cs);
        for r in 0..cs.len() {
            for c in 0..d {
                norm.set(r, c, lifted.get(r, c));
            }
        }
        if let (true, Some(g)) = (with_a, x_gen) {
            norm.set(di - 1, g, 1);
        }
        let mut inter_norm = BTreeMap::new();
        for (j, cj) in coords.iter().enumerate().take(i) {
            let dj = level_dim(j);
            let step = module.nil_pow(ppow(p, i as u32) - ppow(p, j as u32));
            let mut m = FpMatrix::zero(p, dj, di);
            for (k, &c) in cs.iter().enumerate() {
                for (l, &c2) in cj.iter().enumerate() {
                    m.set(l, k, step.get(c2, c));
                }
            }
            if with_a {
                m.set(dj - 1, di - 1, 1);
            }
            inter_norm.insert(j as u32, m);
        }
        let a_class = with_a.then(|| {
            let mut a = vec![0u32; di];
            a[di - 1] = 1;
            a
        });
        let space = GModule::new(p, i as u32, sigma_i).expect("restriction of sigma to a fixed space");
        norms.push(norm.clone());
        levels.push(LevelData { space, eps, norm, inter_norm, a_class });
    }
    let top_inter = (0..n).map(|j| (j, norms[j as usize].clone())).collect();
    levels.push(LevelData {
        space: module.clone(),
        eps: FpMatrix::identity(p, d),
        norm: FpMatrix::identity(p, d),
        inter_norm: top_inter,
        a_class: None,
    });

    let mut datum = GaloisDatum {
        p,
        n,
        module,
        levels,
        xi_in_f: params.xi_in_f,
        minus_one_is_norm: flag.or(params.minus_one_is_norm),
    };
    if let Some(seed) = params.shuffle_seed {
        datum = shuffle(&datum, seed);
    }
    Ok(datum)
}

/// Conjugate every space by a seeded random change of basis.
pub fn shuffle(d: &GaloisDatum, seed: u64) -> GaloisDatum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = d.p;
    let n = d.n as usize;
    let bases: Vec<(FpMatrix, FpMatrix)> = d
        .levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if i == n {
                return (FpMatrix::identity(p, 0), FpMatrix::identity(p, 0));
            }
            let q = FpMatrix::random_invertible(p, l.dim(), &mut rng);
            let qi = q.inverse().expect("invertible");
            (q, qi)
        })
        .collect();
    let top = FpMatrix::random_invertible(p, d.dim(), &mut rng);
    let top_inv = top.inverse().expect("invertible");
    // Change of basis on level i (the top level shares J's).
    let fwd = |i: usize| if i == n { &top } else { &bases[i].0 };
    let back = |i: usize| if i == n { &top_inv } else { &bases[i].1 };

    let sigma = top.mul(d.module.sigma()).unwrap().mul(&top_inv).unwrap();
    let module = GModule::new(p, d.n, sigma).expect("conjugate of a valid action");
    let levels = d
        .levels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let space = if i == n {
                module.clone()
            } else {
                let s = fwd(i).mul(l.space.sigma()).unwrap().mul(back(i)).unwrap();
                GModule::new(p, i as u32, s).expect("conjugate of a valid action")
            };
            let eps = top.mul(&l.eps).unwrap().mul(back(i)).unwrap();
            let norm = fwd(i).mul(&l.norm).unwrap().mul(&top_inv).unwrap();
            let inter_norm = l
                .inter_norm
                .iter()
                .map(|(&j, m)| (j, fwd(j as usize).mul(m).unwrap().mul(back(i)).unwrap()))
                .collect();
            let a_class = l.a_class.as_ref().map(|a| fwd(i).mul_vec(a).unwrap());
            LevelData { space, eps, norm, inter_norm, a_class }
        })
        .collect();
    GaloisDatum { p, n: d.n, module, levels, xi_in_f: d.xi_in_f, minus_one_is_norm: d.minus_one_is_norm }
}

/// Every legal (m, ξ_p ∈ F, −1-flag) combination for (p, n).
pub fn legal_cases(p: u32, n: u32) -> Vec<(Option<SubfieldIndex>, bool, Option<bool>)> {
    let mut out = vec![(None, false, None)];
    if p == 2 && n == 1 {
        out.push((None, true, Some(false)));
        out.push((Some(SubfieldIndex::NegInfinity), true, Some(true)));
        return out;
    }
    for m in SubfieldIndex::candidates(n) {
        out.push((Some(m), true, None));
    }
    out
}

/// Every legal parameter set with all ranks ≤ `rank_cap` and
/// 1 ≤ dim J ≤ `dim_cap`, in a fixed order.
pub fn sweep_params(p: u32, n: u32, rank_cap: usize, dim_cap: u64) -> Vec<SynthParams> {
    let mut out = Vec::new();
    let mut e = vec![0usize; n as usize + 1];
    loop {
        for &(m, xi, flag) in &legal_cases(p, n) {
            let params = SynthParams { p, n, m, e: e.clone(), xi_in_f: xi, minus_one_is_norm: flag, shuffle_seed: None };
            if params.check().is_ok() && (1..=dim_cap).contains(&params.dim()) {
                out.push(params);
            }
        }
        let Some(k) = e.iter().position(|&r| r < rank_cap) else { break };
        e[k] += 1;
        e[..k].iter_mut().for_each(|r| *r = 0);
    }
    out
}

pub const RANDOM_RANK_CAP: usize = 3;
pub const RANDOM_DIM_CAP: u64 = 120;

/// Seeded legal parameters with ranks ≤ 3 and 1 ≤ dim J ≤ 120.
pub fn random_params(p: u32, n: u32, seed: u64) -> Result<SynthParams> {
    if fp_linalg::check_modulus(p).is_err() || n == 0 {
        return Err(SynthError::Infeasible(format!("p = {p}, n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = legal_cases(p, n);
    for _ in 0..10_000 {
        let (m, xi, flag) = cases[rng.gen_range(0..cases.len())];
        let e: Vec<usize> = (0..=n).map(|_| rng.gen_range(0..=RANDOM_RANK_CAP)).collect();
        let params = SynthParams { p, n, m, e, xi_in_f: xi, minus_one_is_norm: flag, shuffle_seed: Some(rng.gen()) };
        if params.check().is_ok() && (1..=RANDOM_DIM_CAP).contains(&params.dim()) {
            return Ok(params);
        }
    }
    Err(SynthError::Infeasible(format!("no legal parameters found for p = {p}, n = {n}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: u32, n: u32, m: Option<SubfieldIndex>, e: &[usize]) -> SynthParams {
        SynthParams {
            p,
            n,
            m,
            e: e.to_vec(),
            xi_in_f: m.is_some(),
            minus_one_is_norm: None,
            shuffle_seed: None,
        }
    }

    #[test]
    fn single_free_block() {
        let d = synthesize(&params(2, 1, None, &[0, 1])).unwrap();
        assert_eq!(d.dim(), 2);
        assert_eq!(d.module.jordan_type(), vec![2]);
        assert!(d.validate().is_empty());
    }

    #[test]
    fn rank_shift_at_m() {
        // p=3, n=1, m=0, e=(1,1): X of dim 2, Y_0 rank 0, Y_1 rank 1.
        let sp = params(3, 1, Some(SubfieldIndex::Finite(0)), &[1, 1]);
        assert_eq!(sp.y_ranks(), vec![0, 1]);
        assert_eq!(sp.dim(), 5);
        let d = synthesize(&sp).unwrap();
        assert_eq!(d.module.jordan_type(), vec![3, 2]);
        assert!(d.validate().is_empty(), "{:?}", d.validate());
    }

    #[test]
    fn infeasible_params() {
        let mut sp = params(3, 2, Some(SubfieldIndex::Finite(1)), &[1, 0, 1]);
        assert!(sp.check().is_err());
        sp.e = vec![1, 1, 1];
        assert!(sp.check().is_ok());
        sp.m = Some(SubfieldIndex::Finite(2));
        assert!(sp.check().is_err());
        assert!(params(2, 1, Some(SubfieldIndex::Finite(0)), &[1, 1]).check().is_err());
        let mut t1 = params(3, 1, None, &[1, 1]);
        t1.xi_in_f = true;
        assert!(t1.check().is_err());
        assert!(params(3, 1, None, &[1]).check().is_err());
    }

    #[test]
    fn random_params_are_deterministic_and_legal() {
        assert_eq!(random_params(3, 2, 11).unwrap(), random_params(3, 2, 11).unwrap());
        for seed in 0..200 {
            let sp = random_params(2, 3, seed).unwrap();
            assert!(sp.check().is_ok());
            assert!(sp.dim() <= RANDOM_DIM_CAP);
            if let Some(SubfieldIndex::Finite(i)) = sp.m {
                assert!(sp.e[i as usize] >= 1);
            }
        }
    }

    #[test]
    fn sidecar_round_trips_through_json() {
        let sc = params(3, 2, Some(SubfieldIndex::NegInfinity), &[1, 0, 1]).sidecar();
        let text = serde_json::to_string(&sc).unwrap();
        assert!(text.contains("\"m\":\"-inf\""));
        assert_eq!(serde_json::from_str::<Sidecar>(&text).unwrap(), sc);
        let t1 = params(3, 2, None, &[1, 0, 1]).sidecar();
        assert!(serde_json::to_string(&t1).unwrap().contains("\"m\":\"n/a\""));
    }
}
