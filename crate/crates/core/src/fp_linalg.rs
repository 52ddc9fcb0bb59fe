//! Dense exact linear algebra over the prime field F_p.
//!
//! Matrices act on column vectors. Subspaces are stored through a
//! canonical reduced row echelon basis, so two equal subspaces compare
//! equal structurally.

use std::fmt;

use thiserror::Error;

/// Largest modulus accepted. Keeps every dot product inside a `u64`.
pub const MAX_MODULUS: u32 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("modulus {0} is not a prime below {MAX_MODULUS}")]
    NotPrime(u32),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("complement requested but V is not contained in U")]
    NotContained,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

pub fn is_prime(p: u32) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn check_modulus(p: u32) -> Result<()> {
    if p < MAX_MODULUS && is_prime(p) {
        Ok(())
    } else {
        Err(LinalgError::NotPrime(p))
    }
}

/// Multiplicative inverse of a nonzero residue.
pub fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a, (p - 2) as u64, p)
}

pub fn pow_mod(a: u32, mut e: u64, p: u32) -> u32 {
    let p64 = p as u64;
    let mut base = a as u64 % p64;
    let mut acc = 1u64 % p64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p64;
        }
        base = base * base % p64;
        e >>= 1;
    }
    acc as u32
}

/// Reduce an arbitrary integer into `[0, p)`.
pub fn reduce(x: i64, p: u32) -> u32 {
    x.rem_euclid(p as i64) as u32
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FpMatrix {
    p: u32,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl fmt::Debug for FpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FpMatrix over F_{} ({}x{})", self.p, self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl FpMatrix {
    /// Build from row-major integer entries, reducing each mod p.
    pub fn new(p: u32, rows: usize, cols: usize, entries: &[i64]) -> Result<Self> {
        check_modulus(p)?;
        if entries.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                entries.len(),
                rows,
                cols
            )));
        }
        Ok(FpMatrix {
            p,
            rows,
            cols,
            data: entries.iter().map(|&x| reduce(x, p)).collect(),
        })
    }

    pub fn from_rows(p: u32, cols: usize, rows: &[Vec<u32>]) -> Result<Self> {
        check_modulus(p)?;
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "row of length {} in a matrix with {} columns",
                    r.len(),
                    cols
                )));
            }
            data.extend(r.iter().map(|&x| x % p));
        }
        Ok(FpMatrix { p, rows: rows.len(), cols, data })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_cols(p: u32, rows: usize, cols: &[Vec<u32>]) -> Result<Self> {
        Ok(Self::from_rows(p, rows, cols)?.transpose())
    }

    pub fn zero(p: u32, rows: usize, cols: usize) -> Self {
        FpMatrix { p, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(p: u32, n: usize) -> Self {
        let mut m = Self::zero(p, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % p;
        }
        m
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v % self.p;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero(self.p, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    fn same_modulus(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            return Err(LinalgError::ModulusMismatch(self.p, other.p));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_modulus(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch("matrix sum".into()));
        }
        let p = self.p;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| (a + b) % p).collect();
        Ok(FpMatrix { p, rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_modulus(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch("matrix difference".into()));
        }
        let p = self.p;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| (a + p - b) % p).collect();
        Ok(FpMatrix { p, rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, c: u32) -> Self {
        let p = self.p as u64;
        let c = c as u64 % p;
        FpMatrix {
            p: self.p,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| (x as u64 * c % p) as u32).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_modulus(other)?;
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let p = self.p as u64;
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![0u32; n * m];
        let mut acc = vec![0u64; m];
        for i in 0..n {
            acc.iter_mut().for_each(|a| *a = 0);
            let arow = &self.data[i * k..(i + 1) * k];
            for (t, &a) in arow.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let a = a as u64;
                let brow = &other.data[t * m..(t + 1) * m];
                for (slot, &b) in acc.iter_mut().zip(brow) {
                    *slot += a * b as u64;
                }
            }
            for (o, a) in out[i * m..(i + 1) * m].iter_mut().zip(&acc) {
                *o = (a % p) as u32;
            }
        }
        Ok(FpMatrix { p: self.p, rows: n, cols: m, data: out })
    }

    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        let p = self.p as u64;
        Ok((0..self.rows)
            .map(|r| {
                let s: u64 = self.row(r).iter().zip(v).map(|(&a, &b)| a as u64 * b as u64).sum();
                (s % p) as u32
            })
            .collect())
    }

    /// Square-matrix power by repeated squaring.
    pub fn pow(&self, mut e: u64) -> Result<Self> {
        if !self.is_square() {
            return Err(LinalgError::DimensionMismatch("power of a non-square matrix".into()));
        }
        let mut base = self.clone();
        let mut acc = Self::identity(self.p, self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Inverse of a square matrix, `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let d = self.rows;
        let aug = self.hstack(&Self::identity(self.p, d)).expect("same shape");
        let (r, pivots) = aug.rref();
        if !pivots.iter().copied().take(d).eq(0..d) {
            return None;
        }
        let mut out = Self::zero(self.p, d, d);
        for i in 0..d {
            out.data[i * d..(i + 1) * d].copy_from_slice(&r.row(i)[d..]);
        }
        Some(out)
    }

    /// Uniformly random invertible matrix, by rejection.
    pub fn random_invertible<R: rand::Rng + ?Sized>(p: u32, d: usize, rng: &mut R) -> Self {
        loop {
            let data: Vec<u32> = (0..d * d).map(|_| rng.gen_range(0..p)).collect();
            let m = FpMatrix { p, rows: d, cols: d, data };
            if m.rank() == d {
                return m;
            }
        }
    }

    /// Block matrix `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        self.same_modulus(other)?;
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch("hstack row counts".into()));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(FpMatrix { p: self.p, rows: self.rows, cols, data })
    }

    /// Block matrix with `other` below `self`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        self.same_modulus(other)?;
        if self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch("vstack column counts".into()));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(FpMatrix { p: self.p, rows: self.rows + other.rows, cols: self.cols, data })
    }

    /// Reduced row echelon form together with the pivot columns.
    pub fn rref(&self) -> (FpMatrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = rref_in_place(m.p, m.cols, &mut m.data);
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Null space {x : A x = 0}.
    pub fn kernel(&self) -> FpSubspace {
        let (r, pivots) = self.rref();
        let p = self.p;
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut gens = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0u32; self.cols];
            v[free] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                let x = r.get(i, free);
                v[pc] = (p - x) % p;
            }
            gens.push(v);
        }
        FpSubspace::span(p, self.cols, &gens)
    }

    /// Column space.
    pub fn image(&self) -> FpSubspace {
        let t = self.transpose();
        FpSubspace::span(self.p, self.rows, &t.to_rows())
    }
}

/// Reduction of u32 values modulo a fixed p by one multiply-high
/// (Lemire's fastmod), avoiding a hardware division per entry.
#[derive(Clone, Copy)]
struct FastMod {
    p: u32,
    magic: u64,
}

impl FastMod {
    fn new(p: u32) -> Self {
        FastMod { p, magic: (u64::MAX / p as u64).wrapping_add(1) }
    }

    #[inline(always)]
    fn reduce(self, a: u32) -> u32 {
        let low = self.magic.wrapping_mul(a as u64);
        ((low as u128 * self.p as u128) >> 64) as u32
    }
}

/// Row-reduce a row-major buffer in place; returns the pivot columns.
fn rref_in_place(p: u32, cols: usize, data: &mut [u32]) -> Vec<usize> {
    if cols == 0 {
        return Vec::new();
    }
    let rows = data.len() / cols;
    let p64 = p as u64;
    let fm = FastMod::new(p);
    let mut pivots = Vec::new();
    let mut lead = 0usize;
    for c in 0..cols {
        if lead == rows {
            break;
        }
        let Some(pr) = (lead..rows).find(|&r| data[r * cols + c] != 0) else {
            continue;
        };
        if pr != lead {
            for j in 0..cols {
                data.swap(pr * cols + j, lead * cols + j);
            }
        }
        let inv = inv_mod(data[lead * cols + c], p) as u64;
        for j in c..cols {
            let x = &mut data[lead * cols + j];
            *x = (*x as u64 * inv % p64) as u32;
        }
        let (before, rest) = data.split_at_mut(lead * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        let eliminate = |row: &mut [u32]| {
            let f = row[c];
            if f == 0 {
                return;
            }
            // row[j] + nf * pivot[j] ≤ (p−1) + (p−1)^2 < 2^32 since p < 2^16.
            let nf = p - f;
            for (x, &y) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                *x = fm.reduce(*x + nf * y);
            }
        };
        before.chunks_mut(cols).for_each(eliminate);
        after.chunks_mut(cols).for_each(eliminate);
        pivots.push(c);
        lead += 1;
    }
    pivots
}

/// Solve `A x = b`. Free variables are set to zero, so the answer is
/// deterministic; `None` when the system is inconsistent.
pub fn solve(a: &FpMatrix, b: &[u32]) -> Result<Option<Vec<u32>>> {
    if b.len() != a.rows {
        return Err(LinalgError::DimensionMismatch(format!(
            "right-hand side of length {} for {} equations",
            b.len(),
            a.rows
        )));
    }
    let p = a.p;
    let bcol = FpMatrix { p, rows: a.rows, cols: 1, data: b.iter().map(|x| x % p).collect() };
    let aug = a.hstack(&bcol)?;
    let (r, pivots) = aug.rref();
    if pivots.last() == Some(&a.cols) {
        return Ok(None);
    }
    let mut x = vec![0u32; a.cols];
    for (i, &pc) in pivots.iter().enumerate() {
        x[pc] = r.get(i, a.cols);
    }
    Ok(Some(x))
}

/// Solve and also check the vector has the right modulus tag.
pub fn solve_checked(a: &FpMatrix, b: &[u32], b_modulus: u32) -> Result<Option<Vec<u32>>> {
    if b_modulus != a.p {
        return Err(LinalgError::ModulusMismatch(a.p, b_modulus));
    }
    solve(a, b)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FpSubspace {
    p: u32,
    ambient_dim: usize,
    basis: Vec<Vec<u32>>,
}

impl fmt::Debug for FpSubspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FpSubspace(F_{}^{}, dim {}, {:?})", self.p, self.ambient_dim, self.dim(), self.basis)
    }
}

impl FpSubspace {
    pub fn span(p: u32, ambient_dim: usize, gens: &[Vec<u32>]) -> Self {
        let mut data: Vec<u32> = Vec::with_capacity(gens.len() * ambient_dim);
        for g in gens {
            assert_eq!(g.len(), ambient_dim, "generator length must match the ambient dimension");
            data.extend(g.iter().map(|x| x % p));
        }
        let pivots = rref_in_place(p, ambient_dim, &mut data);
        let basis = (0..pivots.len())
            .map(|i| data[i * ambient_dim..(i + 1) * ambient_dim].to_vec())
            .collect();
        FpSubspace { p, ambient_dim, basis }
    }

    pub fn zero(p: u32, ambient_dim: usize) -> Self {
        FpSubspace { p, ambient_dim, basis: Vec::new() }
    }

    pub fn full(p: u32, ambient_dim: usize) -> Self {
        Self::span(p, ambient_dim, &FpMatrix::identity(p, ambient_dim).to_rows())
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }
    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.basis.iter().map(|r| r.iter().position(|&x| x != 0).unwrap()).collect()
    }

    /// Coordinates of `v` against the canonical basis, if `v` lies in the space.
    pub fn coordinates(&self, v: &[u32]) -> Option<Vec<u32>> {
        assert_eq!(v.len(), self.ambient_dim);
        let p = self.p as u64;
        let mut rest: Vec<u32> = v.iter().map(|x| x % self.p).collect();
        let mut coords = Vec::with_capacity(self.basis.len());
        for (row, pc) in self.basis.iter().zip(self.pivots()) {
            let c = rest[pc];
            coords.push(c);
            if c != 0 {
                let nc = (self.p - c) as u64;
                for (x, &b) in rest.iter_mut().zip(row) {
                    *x = ((*x as u64 + nc * b as u64) % p) as u32;
                }
            }
        }
        if rest.iter().all(|&x| x == 0) {
            Some(coords)
        } else {
            None
        }
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        self.coordinates(v).is_some()
    }

    pub fn is_subspace_of(&self, other: &FpSubspace) -> bool {
        self.p == other.p
            && self.ambient_dim == other.ambient_dim
            && self.basis.iter().all(|b| other.contains(b))
    }

    /// Basis vectors as the columns of a matrix.
    pub fn basis_matrix(&self) -> FpMatrix {
        FpMatrix::from_cols(self.p, self.ambient_dim, &self.basis)
            .expect("basis rows have the ambient length")
    }

    /// Image of the subspace under `a`.
    pub fn map(&self, a: &FpMatrix) -> Result<FpSubspace> {
        if a.cols != self.ambient_dim {
            return Err(LinalgError::DimensionMismatch("map: matrix columns vs ambient".into()));
        }
        if a.p != self.p {
            return Err(LinalgError::ModulusMismatch(a.p, self.p));
        }
        let imgs: Vec<Vec<u32>> =
            self.basis.iter().map(|b| a.mul_vec(b)).collect::<Result<_>>()?;
        Ok(FpSubspace::span(self.p, a.rows, &imgs))
    }

    fn compatible(&self, other: &FpSubspace) -> Result<()> {
        if self.p != other.p {
            return Err(LinalgError::ModulusMismatch(self.p, other.p));
        }
        if self.ambient_dim != other.ambient_dim {
            return Err(LinalgError::DimensionMismatch(format!(
                "ambient dimensions {} and {}",
                self.ambient_dim, other.ambient_dim
            )));
        }
        Ok(())
    }

    pub fn sum(&self, other: &FpSubspace) -> Result<FpSubspace> {
        self.compatible(other)?;
        let mut gens = self.basis.clone();
        gens.extend(other.basis.iter().cloned());
        Ok(FpSubspace::span(self.p, self.ambient_dim, &gens))
    }

    /// Intersection through the kernel of the stacked system `[U^T | -V^T]`.
    pub fn intersect(&self, other: &FpSubspace) -> Result<FpSubspace> {
        self.compatible(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(FpSubspace::zero(self.p, self.ambient_dim));
        }
        let p = self.p;
        let u = self.basis_matrix();
        let v = other.basis_matrix().scale(p - 1);
        let k = u.hstack(&v)?.kernel();
        let r = self.dim();
        let gens: Vec<Vec<u32>> = k
            .basis()
            .iter()
            .map(|coef| u.mul_vec(&coef[..r]).expect("coefficient length"))
            .collect();
        Ok(FpSubspace::span(p, self.ambient_dim, &gens))
    }

    /// Deterministic complement of `other` inside `self`: the canonical
    /// basis rows of `self` are taken greedily when they are independent
    /// of `other` and the rows already chosen.
    pub fn complement(&self, other: &FpSubspace) -> Result<FpSubspace> {
        self.compatible(other)?;
        if !other.is_subspace_of(self) {
            return Err(LinalgError::NotContained);
        }
        Ok(self.greedy_extension(other))
    }

    /// Coset representatives for `self / (self ∩ other)`.
    pub fn quotient_basis(&self, other: &FpSubspace) -> Result<FpSubspace> {
        let meet = self.intersect(other)?;
        Ok(self.greedy_extension(&meet))
    }

    fn greedy_extension(&self, base: &FpSubspace) -> FpSubspace {
        let mut acc = base.clone();
        let mut chosen = Vec::new();
        for b in &self.basis {
            if acc.dim() == self.dim() {
                break;
            }
            if !acc.contains(b) {
                chosen.push(b.clone());
                let mut gens = acc.basis.clone();
                gens.push(b.clone());
                acc = FpSubspace::span(self.p, self.ambient_dim, &gens);
            }
        }
        FpSubspace::span(self.p, self.ambient_dim, &chosen)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceOp {
    Sum,
    Intersect,
    Complement,
    QuotientBasis,
}

pub fn subspace_calc(op: SubspaceOp, u: &FpSubspace, v: &FpSubspace) -> Result<FpSubspace> {
    match op {
        SubspaceOp::Sum => u.sum(v),
        SubspaceOp::Intersect => u.intersect(v),
        SubspaceOp::Complement => u.complement(v),
        SubspaceOp::QuotientBasis => u.quotient_basis(v),
    }
}

/// `{x : A x ∈ W}`.
pub fn preimage(a: &FpMatrix, w: &FpSubspace) -> Result<FpSubspace> {
    if a.p != w.p {
        return Err(LinalgError::ModulusMismatch(a.p, w.p));
    }
    if a.rows != w.ambient_dim {
        return Err(LinalgError::DimensionMismatch(format!(
            "preimage: {} rows against ambient {}",
            a.rows, w.ambient_dim
        )));
    }
    // x ↦ A x modulo W: compose A with a projection killing W, take the kernel.
    let p = a.p;
    if w.is_zero() {
        return Ok(a.kernel());
    }
    let wm = w.basis_matrix();
    let k = a.hstack(&wm.scale(p - 1))?.kernel();
    let gens: Vec<Vec<u32>> = k.basis().iter().map(|c| c[..a.cols].to_vec()).collect();
    Ok(FpSubspace::span(p, a.cols, &gens))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(p: u32, rows: usize, cols: usize, e: &[i64]) -> FpMatrix {
        FpMatrix::new(p, rows, cols, e).unwrap()
    }

    fn sp(p: u32, d: usize, gens: &[&[u32]]) -> FpSubspace {
        FpSubspace::span(p, d, &gens.iter().map(|g| g.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn rejects_composite_modulus() {
        assert_eq!(FpMatrix::new(4, 1, 1, &[1]), Err(LinalgError::NotPrime(4)));
        assert!(FpMatrix::new(1, 1, 1, &[1]).is_err());
    }

    #[test]
    fn entries_are_reduced() {
        let a = m(3, 1, 3, &[4, -1, 9]);
        assert_eq!(a.row(0), &[1, 2, 0]);
    }

    #[test]
    fn solve_identity() {
        let a = FpMatrix::identity(3, 2);
        assert_eq!(solve(&a, &[2, 1]).unwrap(), Some(vec![2, 1]));
    }

    #[test]
    fn solve_upper_triangular() {
        let a = m(3, 2, 2, &[1, 1, 0, 1]);
        let x = solve(&a, &[2, 1]).unwrap().unwrap();
        assert_eq!(x, vec![1, 1]);
        assert_eq!(a.mul_vec(&x).unwrap(), vec![2, 1]);
    }

    #[test]
    fn solve_inconsistent() {
        let a = FpMatrix::zero(2, 2, 2);
        assert_eq!(solve(&a, &[1, 0]).unwrap(), None);
    }

    #[test]
    fn inverses() {
        let a = m(5, 2, 2, &[1, 2, 3, 4]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv).unwrap(), FpMatrix::identity(5, 2));
        assert!(m(5, 2, 2, &[1, 2, 2, 4]).inverse().is_none());
        assert_eq!(FpMatrix::identity(3, 0).inverse(), Some(FpMatrix::identity(3, 0)));
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(7);
        let r = FpMatrix::random_invertible(3, 6, &mut rng);
        assert_eq!(r.inverse().unwrap().mul(&r).unwrap(), FpMatrix::identity(3, 6));
    }

    #[test]
    fn solve_errors() {
        let a = FpMatrix::identity(3, 2);
        assert!(matches!(solve(&a, &[1]), Err(LinalgError::DimensionMismatch(_))));
        assert_eq!(solve_checked(&a, &[1, 1], 5), Err(LinalgError::ModulusMismatch(3, 5)));
    }

    #[test]
    fn solve_free_variables_are_zero() {
        let a = m(5, 1, 3, &[0, 2, 1]);
        assert_eq!(solve(&a, &[4]).unwrap(), Some(vec![0, 2, 0]));
    }

    #[test]
    fn transverse_lines_meet_in_zero() {
        let u = sp(2, 2, &[&[1, 0]]);
        let v = sp(2, 2, &[&[0, 1]]);
        assert!(subspace_calc(SubspaceOp::Intersect, &u, &v).unwrap().is_zero());
    }

    #[test]
    fn coordinate_complement() {
        let full = FpSubspace::full(3, 2);
        let v = sp(3, 2, &[&[1, 0]]);
        let w = subspace_calc(SubspaceOp::Complement, &full, &v).unwrap();
        assert_eq!(w, sp(3, 2, &[&[0, 1]]));
    }

    #[test]
    fn complement_requires_containment() {
        let u = sp(3, 2, &[&[1, 0]]);
        let v = sp(3, 2, &[&[0, 1]]);
        assert_eq!(u.complement(&v), Err(LinalgError::NotContained));
    }

    #[test]
    fn two_lines_span_the_plane_over_f3() {
        // Oracle: det [[1,1],[1,2]] = 2 - 1 = 1 ≠ 0 mod 3.
        let u = sp(3, 2, &[&[1, 1]]);
        let v = sp(3, 2, &[&[1, 2]]);
        let s = subspace_calc(SubspaceOp::Sum, &u, &v).unwrap();
        assert_eq!(s, FpSubspace::full(3, 2));
    }

    #[test]
    fn ambient_mismatch_is_an_error() {
        let u = FpSubspace::full(3, 2);
        let v = FpSubspace::full(3, 3);
        assert!(u.sum(&v).is_err());
        assert!(u.intersect(&FpSubspace::full(5, 2)).is_err());
    }

    #[test]
    fn preimage_identity_and_zero() {
        let w = sp(5, 3, &[&[1, 2, 3]]);
        assert_eq!(preimage(&FpMatrix::identity(5, 3), &w).unwrap(), w);
        assert_eq!(preimage(&FpMatrix::zero(5, 3, 2), &w).unwrap(), FpSubspace::full(5, 2));
    }

    #[test]
    fn preimage_enumerated_over_f2() {
        let a = m(2, 2, 2, &[1, 1, 0, 0]);
        let w = sp(2, 2, &[&[1, 0]]);
        // Oracle: enumerate F_2^2; A x = (x0 + x1, 0) always has a zero
        // second coordinate, so every x lands in W.
        let second_row = [0u32, 0];
        let mut members = Vec::new();
        for x0 in 0..2u32 {
            for x1 in 0..2u32 {
                let second_coord = second_row[0] * x0 + second_row[1] * x1;
                if second_coord.is_multiple_of(2) {
                    members.push(vec![x0, x1]);
                }
            }
        }
        assert_eq!(members.len(), 4);
        let got = preimage(&a, &w).unwrap();
        assert_eq!(got, FpSubspace::full(2, 2));
        for v in members {
            assert!(got.contains(&v));
        }
    }

    #[test]
    fn preimage_dimension_mismatch() {
        let w = FpSubspace::full(3, 2);
        assert!(preimage(&FpMatrix::identity(3, 3), &w).is_err());
    }

    #[test]
    fn quotient_basis_representatives() {
        let u = FpSubspace::full(3, 3);
        let v = sp(3, 3, &[&[1, 1, 0]]);
        let q = u.quotient_basis(&v).unwrap();
        assert_eq!(q.dim(), 2);
        assert!(q.intersect(&v).unwrap().is_zero());
    }

    #[test]
    fn kernel_and_image_ranks() {
        let a = m(5, 3, 3, &[1, 2, 3, 2, 4, 1, 3, 1, 4]);
        assert_eq!(a.kernel().dim() + a.image().dim(), 3);
        for k in a.kernel().basis() {
            assert!(a.mul_vec(k).unwrap().iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn pow_matches_repeated_product() {
        let a = m(3, 2, 2, &[1, 1, 0, 1]);
        let a3 = a.mul(&a).unwrap().mul(&a).unwrap();
        assert_eq!(a.pow(3).unwrap(), a3);
        assert_eq!(a3, FpMatrix::identity(3, 2));
    }
}
