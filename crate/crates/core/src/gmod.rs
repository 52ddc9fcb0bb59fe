//! Modules over F_p[G] for G = ⟨σ⟩ cyclic of order p^n.
//!
//! A module is an ambient F_p-space with one matrix σ; submodules are
//! σ-invariant subspaces of it. Most questions reduce to the nilpotent
//! operator σ − 1, whose powers are cached and shared between a module
//! and its restrictions to subgroups.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::fp_linalg::{self, FpMatrix, FpSubspace, LinalgError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GModError {
    #[error("not an order-p^n action: sigma^(p^n) != identity")]
    NotOrderPn,
    #[error("sigma must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("level {level} out of range 0..={n}")]
    LevelOutOfRange { level: u32, n: u32 },
    #[error("part {0} is not sigma-invariant")]
    NotInvariant(usize),
    #[error("freeness precondition violated: {0}")]
    NotFree(String),
    #[error("V is not contained in U")]
    NotContained,
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, GModError>;

/// Coordinates of a module element in the ambient basis.
pub type Element = Vec<u32>;

/// p^k with saturation, for exponents that only bound nilpotent powers.
pub fn ppow(p: u32, k: u32) -> u64 {
    (p as u64).saturating_pow(k)
}

/// Cached powers of one nilpotent operator.
#[derive(Debug)]
struct NilPowers {
    base: FpMatrix,
    /// Smallest power of two annihilating `base`.
    zero_from: u64,
    cache: Mutex<HashMap<u64, Arc<FpMatrix>>>,
}

impl NilPowers {
    fn new(base: FpMatrix) -> Self {
        let d = base.rows();
        let mut cache = HashMap::new();
        cache.insert(1u64, Arc::new(base.clone()));
        let mut cur = Arc::new(base.clone());
        let mut e = 1u64;
        while !cur.is_zero() && (e as usize) < 2 * d.max(1) {
            let next = Arc::new(cur.mul(&cur).expect("square"));
            e *= 2;
            cache.insert(e, next.clone());
            cur = next;
        }
        let zero_from = if cur.is_zero() { e } else { u64::MAX };
        NilPowers { base, zero_from, cache: Mutex::new(cache) }
    }

    fn get(&self, k: u64) -> Arc<FpMatrix> {
        let d = self.base.rows();
        let p = self.base.p();
        if k == 0 {
            return Arc::new(FpMatrix::identity(p, d));
        }
        if k >= self.zero_from {
            return Arc::new(FpMatrix::zero(p, d, d));
        }
        if let Some(m) = self.cache.lock().unwrap().get(&k) {
            return m.clone();
        }
        // Highest power of two not exceeding k, then the remainder.
        let top = 1u64 << (63 - k.leading_zeros());
        let rest = k - top;
        let hi = self.get(top);
        let out = if rest == 0 { hi } else { Arc::new(hi.mul(&self.get(rest)).expect("square")) };
        self.cache.lock().unwrap().insert(k, out.clone());
        out
    }
}

/// A finite-dimensional F_p[G]-module, G = ⟨σ⟩ of order p^n.
#[derive(Debug, Clone)]
pub struct GModule {
    p: u32,
    n: u32,
    sigma: FpMatrix,
    powers: Arc<NilPowers>,
    /// (σ − 1) of this module equals `powers.base ^ stride`.
    stride: u64,
    ranks: Arc<OnceLock<Vec<usize>>>,
}

impl PartialEq for GModule {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.n == other.n && self.sigma == other.sigma
    }
}

/// Validate σ and wrap it as a module.
pub fn make_module(p: u32, n: u32, sigma: FpMatrix) -> Result<GModule> {
    GModule::new(p, n, sigma)
}

impl GModule {
    pub fn new(p: u32, n: u32, sigma: FpMatrix) -> Result<Self> {
        fp_linalg::check_modulus(p)?;
        if sigma.p() != p {
            return Err(LinalgError::ModulusMismatch(p, sigma.p()).into());
        }
        if !sigma.is_square() {
            return Err(GModError::NotSquare(sigma.rows(), sigma.cols()));
        }
        let d = sigma.rows();
        let nil = sigma.sub(&FpMatrix::identity(p, d))?;
        let powers = Arc::new(NilPowers::new(nil));
        let module = GModule { p, n, sigma, powers, stride: 1, ranks: Arc::new(OnceLock::new()) };
        // Over F_p, σ^(p^n) − 1 = (σ − 1)^(p^n); a nilpotent d×d matrix dies by power d.
        let order = ppow(p, n);
        if !module.nil_pow(order.min(d as u64 + 1)).is_zero() {
            return Err(GModError::NotOrderPn);
        }
        Ok(module)
    }

    /// The trivial module of dimension `dim`.
    pub fn trivial(p: u32, n: u32, dim: usize) -> Result<Self> {
        Self::new(p, n, FpMatrix::identity(p, dim))
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }
    pub fn sigma(&self) -> &FpMatrix {
        &self.sigma
    }
    /// |G| = p^n.
    pub fn order(&self) -> u64 {
        ppow(self.p, self.n)
    }

    /// (σ − 1)^k.
    pub fn nil_pow(&self, k: u64) -> Arc<FpMatrix> {
        self.powers.get(k.saturating_mul(self.stride))
    }

    pub fn nil(&self) -> Arc<FpMatrix> {
        self.nil_pow(1)
    }

    pub fn apply_nil_pow(&self, k: u64, v: &[u32]) -> Element {
        self.nil_pow(k).mul_vec(v).expect("element length matches module dimension")
    }

    pub fn apply_sigma(&self, v: &[u32]) -> Element {
        self.sigma.mul_vec(v).expect("element length matches module dimension")
    }

    /// im (σ − 1)^k.
    pub fn nil_image(&self, k: u64) -> FpSubspace {
        self.nil_pow(k).image()
    }

    /// ker (σ − 1)^k.
    pub fn nil_kernel(&self, k: u64) -> FpSubspace {
        self.nil_pow(k).kernel()
    }

    /// Image of a subspace under (σ − 1)^k.
    pub fn map_nil_pow(&self, k: u64, s: &FpSubspace) -> FpSubspace {
        map_rows(s, &self.nil_pow(k))
    }

    pub fn full(&self) -> FpSubspace {
        FpSubspace::full(self.p, self.dim())
    }

    pub fn zero_space(&self) -> FpSubspace {
        FpSubspace::zero(self.p, self.dim())
    }

    /// Least k ≥ 0 with (σ − 1)^k u = 0.
    pub fn length(&self, u: &[u32]) -> usize {
        let nil = self.nil();
        let mut v = u.to_vec();
        let mut k = 0;
        while v.iter().any(|&x| x != 0) {
            v = nil.mul_vec(&v).expect("element length");
            k += 1;
        }
        k
    }

    /// Span of u, (σ−1)u, (σ−1)^2 u, …
    pub fn cyclic_submodule(&self, u: &[u32]) -> FpSubspace {
        let nil = self.nil();
        let mut gens = Vec::new();
        let mut v = u.to_vec();
        while v.iter().any(|&x| x != 0) {
            let next = nil.mul_vec(&v).expect("element length");
            gens.push(v);
            v = next;
        }
        FpSubspace::span(self.p, self.dim(), &gens)
    }

    /// Submodule generated by several elements.
    pub fn generated_submodule(&self, gens: &[Element]) -> FpSubspace {
        let mut all = Vec::new();
        let nil = self.nil();
        for g in gens {
            let mut v = g.clone();
            while v.iter().any(|&x| x != 0) {
                let next = nil.mul_vec(&v).expect("element length");
                all.push(v);
                v = next;
            }
        }
        FpSubspace::span(self.p, self.dim(), &all)
    }

    /// T_k = ker (σ − 1)^k for k = 1, 2, … up to the whole module.
    pub fn socle_series(&self) -> Vec<FpSubspace> {
        let mut out = Vec::new();
        if self.dim() == 0 {
            return out;
        }
        let mut k = 1u64;
        loop {
            let t = self.nil_kernel(k);
            let done = t.dim() == self.dim();
            out.push(t);
            if done {
                return out;
            }
            k += 1;
        }
    }

    /// M^{H_i} = ker(σ^{p^i} − 1) = ker (σ − 1)^{p^i}.
    pub fn fixed_points(&self, level: u32) -> Result<FpSubspace> {
        if level > self.n {
            return Err(GModError::LevelOutOfRange { level, n: self.n });
        }
        Ok(self.nil_kernel(ppow(self.p, level)))
    }

    /// r_k = rank (σ − 1)^k for k = 0, 1, … until it reaches zero.
    pub fn rank_sequence(&self) -> Vec<usize> {
        self.ranks
            .get_or_init(|| subspace_rank_sequence(&self.full(), &self.nil()))
            .clone()
    }

    /// Jordan block sizes of σ, largest first.
    pub fn jordan_type(&self) -> Vec<usize> {
        jordan_type_from_ranks(&self.rank_sequence())
    }

    /// Jordan type of σ restricted to an invariant subspace.
    pub fn restricted_jordan_type(&self, s: &FpSubspace) -> Vec<usize> {
        jordan_type_from_ranks(&subspace_rank_sequence(s, &self.nil()))
    }

    pub fn is_invariant(&self, s: &FpSubspace) -> bool {
        let nil = self.nil();
        s.basis().iter().all(|b| s.contains(&nil.mul_vec(b).expect("element length")))
    }

    /// Fixed vectors inside a subspace.
    pub fn fixed_part(&self, s: &FpSubspace) -> FpSubspace {
        s.intersect(&self.nil_kernel(1)).expect("same ambient space")
    }

    /// True iff the fixed parts of the invariant subspaces are in direct
    /// sum, which forces the parts themselves to be in direct sum.
    pub fn independent_sum_check(&self, parts: &[FpSubspace]) -> Result<bool> {
        for (i, part) in parts.iter().enumerate() {
            if part.ambient_dim() != self.dim() || part.p() != self.p {
                return Err(LinalgError::DimensionMismatch(format!("part {i}")).into());
            }
            if !self.is_invariant(part) {
                return Err(GModError::NotInvariant(i));
            }
        }
        let fixed: Vec<FpSubspace> = parts.iter().map(|s| self.fixed_part(s)).collect();
        let fixed_sum = sum_all(self.p, self.dim(), &fixed);
        let fixed_direct = fixed_sum.dim() == fixed.iter().map(FpSubspace::dim).sum::<usize>();
        let total = sum_all(self.p, self.dim(), parts);
        let parts_direct = total.dim() == parts.iter().map(FpSubspace::dim).sum::<usize>();
        if fixed_direct && !parts_direct {
            return Err(GModError::Internal(
                "fixed parts independent but parts overlap".into(),
            ));
        }
        Ok(fixed_direct)
    }

    /// Given free V ⊆ U with a common block size, a free Ṽ with U = V ⊕ Ṽ.
    pub fn free_complement(&self, u: &FpSubspace, v: &FpSubspace) -> Result<FpSubspace> {
        if !v.is_subspace_of(u) {
            return Err(GModError::NotContained);
        }
        if !self.is_invariant(u) {
            return Err(GModError::NotInvariant(0));
        }
        if !self.is_invariant(v) {
            return Err(GModError::NotInvariant(1));
        }
        if u.dim() == v.dim() {
            return Ok(self.zero_space());
        }
        let ju = self.restricted_jordan_type(u);
        let jv = self.restricted_jordan_type(v);
        let block = ju[0];
        if ju.iter().chain(jv.iter()).any(|&b| b != block) {
            return Err(GModError::NotFree(format!(
                "block sizes {ju:?} and {jv:?} are not all equal"
            )));
        }
        let z = self.fixed_part(u).complement(&self.fixed_part(v))?;
        let lift_map = self.nil_pow(block as u64 - 1);
        let ubasis = u.basis();
        let cols: Vec<Vec<u32>> =
            ubasis.iter().map(|b| lift_map.mul_vec(b).expect("element length")).collect();
        let a = FpMatrix::from_cols(self.p, self.dim(), &cols)?;
        let mut lifts = Vec::new();
        for zb in z.basis() {
            let c = fp_linalg::solve(&a, zb)?
                .ok_or_else(|| GModError::Internal("fixed vector of a free module is not a norm".into()))?;
            lifts.push(combine(self.p, ubasis, &c));
        }
        let tilde = self.generated_submodule(&lifts);
        let meet = tilde.intersect(v)?;
        if !meet.is_zero() || tilde.dim() + v.dim() != u.dim() {
            return Err(GModError::Internal("lifted complement does not split U".into()));
        }
        Ok(tilde)
    }

    /// The module for the subgroup H_j = ⟨σ^{p^j}⟩, of height n − j.
    pub fn restrict_to_subgroup(&self, j: u32) -> Result<GModule> {
        if j > self.n {
            return Err(GModError::LevelOutOfRange { level: j, n: self.n });
        }
        let step = ppow(self.p, j);
        let d = self.dim();
        let sigma = FpMatrix::identity(self.p, d).add(&self.nil_pow(step))?;
        Ok(GModule {
            p: self.p,
            n: self.n - j,
            sigma,
            powers: self.powers.clone(),
            stride: self.stride * step,
            ranks: Arc::new(OnceLock::new()),
        })
    }
}

/// Linear combination Σ c_k b_k.
pub fn combine(p: u32, basis: &[Vec<u32>], coeffs: &[u32]) -> Element {
    let d = basis.first().map(Vec::len).unwrap_or(0);
    let p64 = p as u64;
    let mut out = vec![0u64; d];
    for (b, &c) in basis.iter().zip(coeffs) {
        if c == 0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(b) {
            *o = (*o + c as u64 * x as u64) % p64;
        }
    }
    out.into_iter().map(|x| x as u32).collect()
}

pub fn sum_all(p: u32, ambient: usize, parts: &[FpSubspace]) -> FpSubspace {
    let gens: Vec<Vec<u32>> = parts.iter().flat_map(|s| s.basis().iter().cloned()).collect();
    FpSubspace::span(p, ambient, &gens)
}

/// Image of a subspace under a matrix, through one matrix product.
pub fn map_rows(s: &FpSubspace, a: &FpMatrix) -> FpSubspace {
    if s.is_zero() {
        return FpSubspace::zero(a.p(), a.rows());
    }
    let rows = FpMatrix::from_rows(s.p(), s.ambient_dim(), s.basis()).expect("basis rows");
    let img = rows.mul(&a.transpose()).expect("dimensions");
    FpSubspace::span(a.p(), a.rows(), &img.to_rows())
}

/// dim of N^k(S) for k = 0, 1, … while nonzero (the trailing zero included).
fn subspace_rank_sequence(s: &FpSubspace, nil: &FpMatrix) -> Vec<usize> {
    let mut out = vec![s.dim()];
    let mut cur = s.clone();
    let nt = nil.transpose();
    while !cur.is_zero() {
        let rows = FpMatrix::from_rows(cur.p(), cur.ambient_dim(), cur.basis()).expect("basis rows");
        let img = rows.mul(&nt).expect("dimensions");
        cur = FpSubspace::span(cur.p(), cur.ambient_dim(), &img.to_rows());
        out.push(cur.dim());
    }
    out
}

/// Block sizes from r_0 ≥ r_1 ≥ … ≥ 0: the number of blocks of size at
/// least k is r_{k-1} − r_k.
pub fn jordan_type_from_ranks(ranks: &[usize]) -> Vec<usize> {
    let at_least = |k: usize| -> usize {
        if k == 0 || k >= ranks.len() {
            return 0;
        }
        ranks[k - 1] - ranks[k]
    };
    let mut sizes = Vec::new();
    for k in (1..ranks.len()).rev() {
        let exactly = at_least(k) - at_least(k + 1);
        sizes.extend(std::iter::repeat_n(k, exactly));
    }
    sizes
}

/// Block-diagonal σ made of unit upper-triangular Jordan blocks.
/// Within a block the basis runs from the generator (first) down to the
/// socle vector (last): σ b_k = b_k + b_{k+1}.
pub fn jordan_sigma(p: u32, sizes: &[usize]) -> FpMatrix {
    let d: usize = sizes.iter().sum();
    let mut m = FpMatrix::identity(p, d);
    let mut off = 0;
    for &s in sizes {
        for k in 1..s {
            m.set(off + k, off + k - 1, 1);
        }
        off += s;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_module(p: u32, n: u32, sizes: &[usize]) -> GModule {
        GModule::new(p, n, jordan_sigma(p, sizes)).unwrap()
    }

    fn unit(d: usize, i: usize) -> Vec<u32> {
        let mut v = vec![0; d];
        v[i] = 1;
        v
    }

    #[test]
    fn trivial_module() {
        let m = make_module(2, 1, FpMatrix::identity(2, 3)).unwrap();
        assert_eq!(m.dim(), 3);
        assert_eq!(m.jordan_type(), vec![1, 1, 1]);
    }

    #[test]
    fn jordan_block_of_size_two_over_f2() {
        assert!(make_module(2, 1, jordan_sigma(2, &[2])).is_ok());
    }

    #[test]
    fn block_of_size_three_is_not_an_involution_over_f2() {
        // Oracle: (I+N)^2 = I + N^2 over F_2 and N^2 ≠ 0 for a 3-block.
        let s = jordan_sigma(2, &[3]);
        assert_ne!(s.mul(&s).unwrap(), FpMatrix::identity(2, 3));
        assert_eq!(make_module(2, 1, s).unwrap_err(), GModError::NotOrderPn);
    }

    #[test]
    fn non_square_sigma() {
        let s = FpMatrix::zero(3, 2, 3);
        assert!(matches!(make_module(3, 1, s), Err(GModError::NotSquare(2, 3))));
    }

    #[test]
    fn lengths() {
        let m = block_module(3, 1, &[3]);
        assert_eq!(m.length(&[0, 0, 0]), 0);
        assert_eq!(m.length(&[1, 0, 0]), 3);
    }

    #[test]
    fn regular_representation_of_z4_length() {
        // Regular rep of Z/4 over F_2 is a single 4-block in the Jordan basis.
        let m = block_module(2, 2, &[4]);
        let u = vec![0, 0, 1, 0];
        // Oracle: (σ−1)u = e_3, then (σ−1)e_3 = 0.
        let n1 = m.apply_nil_pow(1, &u);
        assert_eq!(n1, vec![0, 0, 0, 1]);
        assert!(m.apply_nil_pow(1, &n1).iter().all(|&x| x == 0));
        assert_eq!(m.length(&u), 2);
    }

    #[test]
    fn socle_series_examples() {
        let dims = |m: &GModule| m.socle_series().iter().map(FpSubspace::dim).collect::<Vec<_>>();
        assert_eq!(dims(&GModule::trivial(3, 1, 2).unwrap()), vec![2]);
        assert_eq!(dims(&block_module(2, 2, &[4])), vec![1, 2, 3, 4]);
        // Oracle: blocks {2,1} have ker N of dim 2 and ker N^2 of dim 3.
        assert_eq!(dims(&block_module(3, 1, &[2, 1])), vec![2, 3]);
    }

    #[test]
    fn fixed_points_examples() {
        let m = block_module(3, 2, &[9]);
        assert_eq!(m.fixed_points(2).unwrap().dim(), 9);
        assert_eq!(m.fixed_points(1).unwrap().dim(), 3);
        assert_eq!(m.fixed_points(0).unwrap().dim(), 1);
        assert!(matches!(m.fixed_points(3), Err(GModError::LevelOutOfRange { .. })));
        let t = GModule::trivial(3, 2, 4).unwrap();
        for i in 0..=2 {
            assert_eq!(t.fixed_points(i).unwrap().dim(), 4);
        }
    }

    #[test]
    fn jordan_type_examples() {
        assert_eq!(GModule::trivial(5, 1, 4).unwrap().jordan_type(), vec![1; 4]);
        assert_eq!(block_module(3, 2, &[9]).jordan_type(), vec![9]);
        assert_eq!(block_module(2, 2, &[1, 3, 1, 2]).jordan_type(), vec![3, 2, 1, 1]);
    }

    #[test]
    fn jordan_type_from_rank_sequence() {
        // Oracle: with r = (7,4,2,1,0) the counts of blocks of size ≥ k are
        // 3,2,1,1, i.e. one each of sizes 4, 2 and 1.
        assert_eq!(jordan_type_from_ranks(&[7, 4, 2, 1, 0]), vec![4, 2, 1]);
        // {3,2,1,1} has rank sequence (7,3,1,0).
        assert_eq!(jordan_type_from_ranks(&[7, 3, 1, 0]), vec![3, 2, 1, 1]);
        let m = block_module(2, 2, &[4, 2, 1]);
        assert_eq!(m.rank_sequence(), vec![7, 4, 2, 1, 0]);
    }

    #[test]
    fn cyclic_submodules() {
        let m = block_module(2, 1, &[2, 2]);
        assert!(m.cyclic_submodule(&[0, 0, 0, 0]).is_zero());
        let fixed = vec![0, 1, 0, 0];
        assert_eq!(m.cyclic_submodule(&fixed), FpSubspace::span(2, 4, std::slice::from_ref(&fixed)));
        // Oracle: u = e0 + e2 (both generators); (σ−1)u = e1 + e3.
        let u = vec![1, 0, 1, 0];
        let c = m.cyclic_submodule(&u);
        assert_eq!(c.dim(), 2);
        assert!(c.contains(&[0, 1, 0, 1]));
    }

    #[test]
    fn independent_sums() {
        let t = GModule::trivial(3, 1, 2).unwrap();
        let a = FpSubspace::span(3, 2, &[unit(2, 0)]);
        let b = FpSubspace::span(3, 2, &[unit(2, 1)]);
        assert!(t.independent_sum_check(&[a.clone(), b]).unwrap());
        assert!(!t.independent_sum_check(&[a.clone(), a]).unwrap());

        let m = block_module(2, 1, &[2, 2]);
        let b1 = FpSubspace::span(2, 4, &[unit(4, 0), unit(4, 1)]);
        let b2 = FpSubspace::span(2, 4, &[unit(4, 2), unit(4, 3)]);
        assert!(m.independent_sum_check(&[b1, b2]).unwrap());
        let bad = FpSubspace::span(2, 4, &[unit(4, 0)]);
        assert_eq!(m.independent_sum_check(&[bad]), Err(GModError::NotInvariant(0)));
    }

    #[test]
    fn free_complement_examples() {
        let m = block_module(2, 1, &[2, 2]);
        let u = m.full();
        assert!(m.free_complement(&u, &u).unwrap().is_zero());

        let v = FpSubspace::span(2, 4, &[unit(4, 0), unit(4, 1)]);
        let w = m.free_complement(&u, &v).unwrap();
        assert_eq!(w.dim(), 2);
        assert!(w.intersect(&v).unwrap().is_zero());

        // Diagonal free rank-1 submodule generated by e0 + e2.
        let diag = m.cyclic_submodule(&[1, 0, 1, 0]);
        let w = m.free_complement(&u, &diag).unwrap();
        assert!(m.independent_sum_check(&[diag.clone(), w.clone()]).unwrap());
        assert_eq!(w.dim() + diag.dim(), 4);
        assert_eq!(m.restricted_jordan_type(&w), vec![2]);
    }

    #[test]
    fn free_complement_rejects_mixed_blocks() {
        let m = block_module(3, 1, &[3, 1]);
        let u = m.full();
        let v = m.zero_space();
        assert!(matches!(m.free_complement(&u, &v), Err(GModError::NotFree(_))));
        let w = FpSubspace::span(3, 4, &[unit(4, 3)]);
        let x = FpSubspace::span(3, 4, &[unit(4, 2)]);
        assert_eq!(m.free_complement(&w, &x), Err(GModError::NotContained));
    }

    #[test]
    fn subgroup_restriction() {
        let m = block_module(3, 2, &[9]);
        let r = m.restrict_to_subgroup(1).unwrap();
        assert_eq!(r.n(), 1);
        // σ^3 on one 9-block: (σ−1)^3 has three chains of length 3.
        assert_eq!(r.jordan_type(), vec![3, 3, 3]);
        assert_eq!(r.fixed_points(0).unwrap(), m.fixed_points(1).unwrap());
    }
}
