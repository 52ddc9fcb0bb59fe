//! Cyclic towers over the p-adics with truncated arithmetic: p-th power
//! classes K_i^×/K_i^×p, the Galois action, norm maps, and extraction of a
//! [`GaloisDatum`].
//!
//! Every field of a tower lives inside the top field K = K_n, stored as
//! Z/p^k[X]/(h). For cyclotomic towers X = ζ − 1 is the uniformizer and h is
//! Eisenstein; for unramified towers X generates the residue extension and
//! the uniformizer is p. The subfield K_i is the fixed ring of σ^{p^i}.
//! Precisions and valuations are counted in π-adic digits of K.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datum::{DatumError, GaloisDatum, LevelData};
use crate::fp_linalg::{self, FpMatrix, FpSubspace, LinalgError};
use crate::gmod::{ppow, Element, GModError, GModule};

#[derive(Debug, Error)]
pub enum LocalError {
    #[error("unsupported tower: {0}")]
    Unsupported(String),
    #[error("non-cyclic configuration: {0}")]
    NonCyclic(String),
    #[error("precision {given} is below the minimum {min}")]
    PrecisionTooLow { given: u32, min: u32 },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("division by an element that is zero or not a unit")]
    DivisionByZero,
    #[error("element does not lie in K_{0}")]
    NotInLevel(u32),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("internal check failed: {0}")]
    Internal(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Module(#[from] GModError),
    #[error(transparent)]
    Datum(#[from] DatumError),
}

pub type Result<T> = std::result::Result<T, LocalError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TowerKind {
    Unramified,
    Cyclotomic,
}

impl fmt::Display for TowerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TowerKind::Unramified => "unramified",
            TowerKind::Cyclotomic => "cyclotomic",
        })
    }
}

impl std::str::FromStr for TowerKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "unramified" => Ok(TowerKind::Unramified),
            "cyclotomic" => Ok(TowerKind::Cyclotomic),
            _ => Err(format!("unknown tower kind {s:?}")),
        }
    }
}

/// Tower spec JSON: `{ "p", "kind", "n", "precision" }`; a missing
/// precision means the minimum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowerSpec {
    pub p: u32,
    pub kind: TowerKind,
    pub n: u32,
    #[serde(default)]
    pub precision: Option<u32>,
}

impl TowerSpec {
    pub fn build(&self) -> Result<LocalTower> {
        make_tower(self.p, self.kind, self.n, self.precision)
    }
}

/// Element of the tower. `level` is the smallest K_i the element was
/// created in; arithmetic takes the larger level of its operands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LFElement {
    pub level: u32,
    coeffs: Vec<u64>,
    /// Absolute precision in π-adic digits of K.
    prec: u32,
}

impl LFElement {
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn addmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

fn submod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

/// Z/p^k[X]/(h) with h monic.
#[derive(Debug, Clone)]
struct Ring {
    p: u64,
    modulus: u64,
    /// Lower coefficients of h.
    poly: Vec<u64>,
    /// Ramification index of K over Q_p: 1 or deg h.
    ram: u32,
    /// Absolute precision of the ring in π-adic digits.
    cap: u32,
    /// p/X, ramified case only.
    p_over_x: Option<Vec<u64>>,
}

impl Ring {
    fn deg(&self) -> usize {
        self.poly.len()
    }

    fn residue_size(&self) -> u64 {
        if self.ram == 1 {
            ppow(self.p as u32, self.deg() as u32)
        } else {
            self.p
        }
    }

    fn elem(&self, level: u32, coeffs: Vec<u64>) -> LFElement {
        LFElement { level, coeffs, prec: self.cap }
    }

    fn constant(&self, level: u32, c: i64) -> LFElement {
        let mut v = vec![0; self.deg()];
        let m = self.modulus as i128;
        v[0] = ((c as i128 % m + m) % m) as u64;
        self.elem(level, v)
    }

    fn gen(&self) -> LFElement {
        let mut v = vec![0; self.deg()];
        v[1] = 1;
        self.elem(0, v)
    }

    fn vp(&self, c: u64) -> u32 {
        let mut c = c;
        let mut k = 0;
        while c.is_multiple_of(self.p) {
            c /= self.p;
            k += 1;
        }
        k
    }

    /// Valuation in π-adic digits; `None` for the zero vector.
    fn val_raw(&self, c: &[u64]) -> Option<u32> {
        let mut best: Option<u32> = None;
        for (j, &x) in c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let v = if self.ram == 1 { self.vp(x) } else { self.ram * self.vp(x) + j as u32 };
            best = Some(best.map_or(v, |b| b.min(v)));
        }
        best
    }

    /// Valuation, capped at the element's precision.
    fn val(&self, x: &LFElement) -> u32 {
        self.val_raw(&x.coeffs).map_or(x.prec, |v| v.min(x.prec))
    }

    fn is_zero(&self, x: &LFElement) -> bool {
        self.val(x) >= x.prec
    }

    /// Leading residue digit at valuation `v`, relative to p^a X^j.
    fn digit(&self, x: &LFElement, v: u32) -> Vec<u32> {
        let p = self.p;
        if self.ram == 1 {
            let scale = p.pow(v);
            x.coeffs.iter().map(|&c| ((c / scale) % p) as u32).collect()
        } else {
            let (a, j) = (v / self.ram, (v % self.ram) as usize);
            vec![((x.coeffs[j] / p.pow(a)) % p) as u32]
        }
    }

    fn add(&self, a: &LFElement, b: &LFElement) -> LFElement {
        let m = self.modulus;
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| addmod(x, y, m)).collect();
        LFElement { level: a.level.max(b.level), coeffs, prec: a.prec.min(b.prec) }
    }

    fn sub(&self, a: &LFElement, b: &LFElement) -> LFElement {
        let m = self.modulus;
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| submod(x, y, m)).collect();
        LFElement { level: a.level.max(b.level), coeffs, prec: a.prec.min(b.prec) }
    }

    fn mul_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let (d, m) = (self.deg(), self.modulus);
        let mut prod = vec![0u64; 2 * d - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y != 0 {
                    prod[i + j] = addmod(prod[i + j], mulmod(x, y, m), m);
                }
            }
        }
        for t in (d..2 * d - 1).rev() {
            let c = prod[t];
            if c == 0 {
                continue;
            }
            for (j, &h) in self.poly.iter().enumerate() {
                prod[t - d + j] = submod(prod[t - d + j], mulmod(c, h, m), m);
            }
        }
        prod.truncate(d);
        prod
    }

    fn mul(&self, a: &LFElement, b: &LFElement) -> LFElement {
        let (va, vb) = (self.val(a), self.val(b));
        let prec = (a.prec + vb).min(b.prec + va).min(self.cap);
        LFElement { level: a.level.max(b.level), coeffs: self.mul_raw(&a.coeffs, &b.coeffs), prec }
    }

    fn pow(&self, x: &LFElement, mut e: u64) -> LFElement {
        let mut acc = self.constant(x.level, 1);
        let mut base = x.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// Inverse of a unit by Newton iteration from the residue inverse.
    fn unit_inv(&self, x: &LFElement) -> Result<LFElement> {
        if self.val(x) != 0 {
            return Err(LocalError::DivisionByZero);
        }
        let one = self.constant(x.level, 1);
        let mut y = self.pow(x, self.residue_size() - 2);
        for _ in 0..128 {
            let err = self.sub(&one, &self.mul(x, &y));
            if err.coeffs.iter().all(|&c| c == 0) {
                y.prec = x.prec;
                y.level = x.level;
                return Ok(y);
            }
            y = self.mul(&y, &self.add(&one, &err));
        }
        Err(LocalError::Internal("unit inverse did not converge".into()))
    }

    /// x/π for x of positive valuation; costs one digit of precision.
    fn div_uniformizer(&self, x: &LFElement) -> Result<LFElement> {
        if self.val(x) == 0 {
            return Err(LocalError::DivisionByZero);
        }
        let (p, m) = (self.p, self.modulus);
        let coeffs = match &self.p_over_x {
            None => x.coeffs.iter().map(|&c| c / p).collect(),
            Some(pox) => {
                let mut out: Vec<u64> = x.coeffs[1..].to_vec();
                out.push(0);
                let c0 = x.coeffs[0] / p;
                for (o, &t) in out.iter_mut().zip(pox) {
                    *o = addmod(*o, mulmod(c0, t, m), m);
                }
                out
            }
        };
        Ok(LFElement { level: x.level, coeffs, prec: x.prec.saturating_sub(1) })
    }

    /// x/p for v(x) ≥ e: every coefficient is then divisible by p.
    fn div_p(&self, x: &LFElement) -> Result<LFElement> {
        if x.coeffs.iter().any(|&c| c % self.p != 0) {
            return Err(LocalError::DivisionByZero);
        }
        let coeffs = x.coeffs.iter().map(|&c| c / self.p).collect();
        Ok(LFElement { level: x.level, coeffs, prec: x.prec.saturating_sub(self.ram) })
    }

    /// Evaluate `x` as a polynomial in X at `img`; used for σ^k.
    fn subst(&self, x: &LFElement, img: &LFElement) -> LFElement {
        let d = self.deg();
        let mut acc = vec![0u64; d];
        for j in (0..d).rev() {
            acc = self.mul_raw(&acc, &img.coeffs);
            acc[0] = addmod(acc[0], x.coeffs[j], self.modulus);
        }
        LFElement { level: x.level, coeffs: acc, prec: x.prec }
    }
}

/// Dense polynomials over F_p, low degree first.
mod fpoly {
    pub fn trim(mut a: Vec<u32>) -> Vec<u32> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    pub fn rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let b = trim(b.to_vec());
        let mut r = trim(a.to_vec());
        let lead_inv = crate::fp_linalg::inv_mod(*b.last().expect("nonzero divisor"), p);
        while r.len() >= b.len() {
            let shift = r.len() - b.len();
            let c = (*r.last().unwrap() as u64 * lead_inv as u64 % p as u64) as u32;
            for (j, &bj) in b.iter().enumerate() {
                r[shift + j] = (r[shift + j] + p - (c as u64 * bj as u64 % p as u64) as u32) % p;
            }
            r = trim(r);
        }
        r
    }

    pub fn mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut prod = vec![0u32; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = ((prod[i + j] as u64 + x as u64 * y as u64) % p as u64) as u32;
            }
        }
        rem(&prod, m, p)
    }

    pub fn powmod(a: &[u32], mut e: u64, m: &[u32], p: u32) -> Vec<u32> {
        let mut acc = vec![1u32];
        let mut base = rem(a, m, p);
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(&acc, &base, m, p);
            }
            base = mulmod(&base, &base, m, p);
            e >>= 1;
        }
        acc
    }

    pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        a
    }

    pub fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let n = a.len().max(b.len());
        let get = |v: &[u32], i: usize| v.get(i).copied().unwrap_or(0);
        trim((0..n).map(|i| (get(a, i) + p - get(b, i)) % p).collect())
    }

    /// x^{p^k} mod m.
    pub fn frobenius_power(k: u32, m: &[u32], p: u32) -> Vec<u32> {
        let mut x = vec![0, 1];
        for _ in 0..k {
            x = powmod(&x, p as u64, m, p);
        }
        x
    }

    /// Rabin's test for degree f = p^k.
    pub fn irreducible_ppower(m: &[u32], p: u32) -> bool {
        let f = m.len() as u32 - 1;
        let x = vec![0, 1];
        if !sub(&frobenius_power(f, m, p), &x, p).is_empty() {
            return false;
        }
        if f == 1 {
            return true;
        }
        let partial = frobenius_power(f / p, m, p);
        gcd(&sub(&partial, &x, p), m, p).len() == 1
    }

    /// First monic irreducible polynomial of degree p^k in lexicographic
    /// order of its lower coefficients.
    pub fn first_irreducible(f: u32, p: u32) -> Vec<u32> {
        let mut lower = vec![0u32; f as usize];
        loop {
            let mut cand = lower.clone();
            cand.push(1);
            if cand[0] != 0 && irreducible_ppower(&cand, p) {
                return cand;
            }
            let mut i = 0;
            loop {
                lower[i] += 1;
                if lower[i] < p {
                    break;
                }
                lower[i] = 0;
                i += 1;
            }
        }
    }
}

struct Pivot {
    digit: Vec<u32>,
    inv: LFElement,
    root: LFElement,
}

struct UnitBasis {
    at: u32,
    digit: Vec<u32>,
    elem: LFElement,
    inv: LFElement,
}

/// Class structure of one level K_i.
struct LevelClasses {
    /// e(K/K_i).
    ram_ratio: u32,
    e: u32,
    f: u32,
    /// Last K_i-level of the unit filtration that carries classes.
    top: u32,
    uniformizer: LFElement,
    /// (π_i / π^{ram_ratio})^{-1}.
    w_inv: LFElement,
    lifts: Vec<LFElement>,
    /// Filtered echelon of U_1^p, keyed by valuation of x − 1.
    pivots: BTreeMap<u32, Vec<Pivot>>,
    basis: Vec<UnitBasis>,
    zeta_p: bool,
}

impl LevelClasses {
    fn dim(&self) -> usize {
        1 + self.basis.len()
    }

    fn bound(&self) -> u32 {
        self.ram_ratio * self.top
    }
}

/// Per-level facts for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelSummary {
    pub level: u32,
    pub degree_over_qp: u64,
    pub ramification: u32,
    pub residue_degree: u32,
    pub zeta_p: bool,
    pub class_dim: usize,
    /// [K_i : Q_p] + 1 + [ζ_p ∈ K_i].
    pub formula_dim: usize,
}

pub struct LocalTower {
    p: u32,
    kind: TowerKind,
    n: u32,
    precision: u32,
    ring: Ring,
    /// h over Z/p^k, low degree first, monic.
    defining_poly: Vec<u64>,
    /// σ^{p^j}(X) for j = 0..=n.
    sigma_pows: Vec<LFElement>,
    levels: Vec<LevelClasses>,
}

impl fmt::Debug for LocalTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalTower")
            .field("p", &self.p)
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("precision", &self.precision)
            .finish()
    }
}

/// Least precision accepted for a top field with ramification index `e`.
pub fn min_precision(p: u32, e: u32) -> u32 {
    e * p.div_ceil(p - 1) + e + 8
}

fn euler_phi_ppow(c: u64, p: u64) -> u64 {
    c / p * (p - 1)
}

/// Polynomial (X+1)^e over Z/m, full degree.
fn shifted_power(e: u64, m: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for _ in 0..e {
        let mut next = vec![0u64; out.len() + 1];
        for (j, &c) in out.iter().enumerate() {
            next[j] = addmod(next[j], c, m);
            next[j + 1] = addmod(next[j + 1], c, m);
        }
        out = next;
    }
    out
}

fn poly_mul_full(a: &[u64], b: &[u64], m: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = addmod(out[i + j], mulmod(x, y, m), m);
        }
    }
    out
}

pub fn make_tower(p: u32, kind: TowerKind, n: u32, precision: Option<u32>) -> Result<LocalTower> {
    fp_linalg::check_modulus(p)?;
    if n == 0 {
        return Err(LocalError::Unsupported("a tower needs n ≥ 1".into()));
    }
    let pu = p as u64;
    let (ram, res_deg) = match kind {
        TowerKind::Unramified => {
            if p == 2 {
                return Err(LocalError::Unsupported("unramified towers need p odd".into()));
            }
            (1u32, u32::try_from(ppow(p, n)).map_err(|_| LocalError::Unsupported("degree too large".into()))?)
        }
        TowerKind::Cyclotomic => {
            let base = if p == 2 { 4 } else { pu };
            let conductor = base * ppow(p, n);
            let gen = base + 1;
            // Gal(K/F) = {a ≡ 1 mod base}; it is cyclic iff σ has full order.
            let mut order = 1u64;
            let mut a = gen % conductor;
            while a != 1 {
                a = a * gen % conductor;
                order += 1;
            }
            if order != ppow(p, n) {
                return Err(LocalError::NonCyclic(format!(
                    "ζ ↦ ζ^{gen} has order {order}, the group has order {}",
                    ppow(p, n)
                )));
            }
            (euler_phi_ppow(conductor, pu) as u32, 1)
        }
    };
    let min = min_precision(p, ram);
    let precision = precision.unwrap_or(min);
    if precision < min {
        return Err(LocalError::PrecisionTooLow { given: precision, min });
    }
    let digits = precision.div_ceil(ram);
    let modulus = pu
        .checked_pow(digits)
        .ok_or_else(|| LocalError::Unsupported(format!("p^{digits} exceeds 64-bit arithmetic; lower the precision")))?;

    let (poly, p_over_x) = match kind {
        TowerKind::Unramified => {
            let f = fpoly::first_irreducible(res_deg, p);
            (f[..f.len() - 1].iter().map(|&c| c as u64).collect::<Vec<u64>>(), None)
        }
        TowerKind::Cyclotomic => {
            let base = if p == 2 { 4 } else { pu };
            let inner = shifted_power(base * ppow(p, n) / pu, modulus);
            let mut phi = vec![1u64];
            let mut power = vec![1u64];
            for _ in 1..p {
                power = poly_mul_full(&power, &inner, modulus);
                let len = phi.len().max(power.len());
                phi.resize(len, 0);
                for (j, &c) in power.iter().enumerate() {
                    phi[j] = addmod(phi[j], c, modulus);
                }
            }
            debug_assert_eq!(phi.len() as u32, ram + 1);
            (phi[..ram as usize].to_vec(), Some(()))
        }
    };
    let mut ring = Ring { p: pu, modulus, poly: poly.clone(), ram, cap: ram * digits, p_over_x: None };
    if p_over_x.is_some() {
        // p = −X^E h^{-1} with h = (lower part of the Eisenstein polynomial)/p.
        let h: Vec<u64> = poly.iter().map(|&c| c / pu).collect();
        let h_inv = ring.unit_inv(&ring.elem(0, h))?;
        let mut x_top = vec![0u64; ram as usize];
        x_top[ram as usize - 1] = 1;
        let t = ring.mul_raw(&x_top, &h_inv.coeffs);
        ring.p_over_x = Some(t.iter().map(|&c| submod(0, c, modulus)).collect());
    }
    let mut defining_poly = poly;
    defining_poly.push(1);

    let x = ring.gen();
    let sigma_x = match kind {
        TowerKind::Unramified => frobenius_root(&ring, &defining_poly)?,
        TowerKind::Cyclotomic => {
            let one = ring.constant(0, 1);
            let gen = if p == 2 { 5 } else { pu + 1 };
            ring.sub(&ring.pow(&ring.add(&one, &x), gen), &one)
        }
    };
    let mut sigma_pows = vec![sigma_x];
    for j in 0..n as usize {
        let mut y = x.clone();
        for _ in 0..p {
            y = ring.subst(&y, &sigma_pows[j]);
        }
        sigma_pows.push(y);
    }
    if sigma_pows[n as usize] != x || (n >= 1 && sigma_pows[n as usize - 1] == x) {
        return Err(LocalError::NonCyclic("σ does not have order p^n on K".into()));
    }

    let mut tower = LocalTower { p, kind, n, precision, ring, defining_poly, sigma_pows, levels: Vec::new() };
    for i in 0..=n {
        let lvl = tower.build_level(i)?;
        tower.levels.push(lvl);
        tower.check_level_order(i)?;
    }
    Ok(tower)
}

/// The root of h congruent to X^p: Frobenius on the unramified field.
fn frobenius_root(ring: &Ring, h: &[u64]) -> Result<LFElement> {
    let eval = |coeffs: &[u64], r: &LFElement| {
        let mut acc = ring.constant(0, 0);
        for &c in coeffs.iter().rev() {
            acc = ring.mul(&acc, r);
            acc = ring.add(&acc, &ring.constant(0, c as i64));
        }
        acc
    };
    let deriv: Vec<u64> = h.iter().enumerate().skip(1).map(|(j, &c)| mulmod(c, j as u64, ring.modulus)).collect();
    let mut r = ring.pow(&ring.gen(), ring.p);
    for _ in 0..128 {
        let fr = eval(h, &r);
        if fr.coeffs.iter().all(|&c| c == 0) {
            r.prec = ring.cap;
            return Ok(r);
        }
        let step = ring.mul(&fr, &ring.unit_inv(&eval(&deriv, &r))?);
        r = ring.sub(&r, &step);
    }
    Err(LocalError::Internal("Frobenius lift did not converge".into()))
}

impl LocalTower {
    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn kind(&self) -> TowerKind {
        self.kind
    }
    pub fn precision(&self) -> u32 {
        self.precision
    }
    pub fn spec(&self) -> TowerSpec {
        TowerSpec { p: self.p, kind: self.kind, n: self.n, precision: Some(self.precision) }
    }
    pub fn defining_poly(&self) -> &[u64] {
        &self.defining_poly
    }
    pub fn xi_in_base(&self) -> bool {
        self.levels[0].zeta_p
    }

    fn check_levelno(&self, i: u32) -> Result<&LevelClasses> {
        self.levels.get(i as usize).ok_or(LocalError::NotInLevel(i))
    }

    // ---- arithmetic -------------------------------------------------

    pub fn one(&self) -> LFElement {
        self.ring.constant(0, 1)
    }

    pub fn from_int(&self, c: i64) -> LFElement {
        self.ring.constant(0, c)
    }

    /// Element with the given coefficients on 1, X, X², …
    pub fn element(&self, level: u32, coeffs: &[i64]) -> LFElement {
        let m = self.ring.modulus as i128;
        let mut v = vec![0u64; self.ring.deg()];
        for (o, &c) in v.iter_mut().zip(coeffs) {
            *o = ((c as i128 % m + m) % m) as u64;
        }
        self.ring.elem(level, v)
    }

    /// The primitive root of unity generating K (cyclotomic kind).
    pub fn zeta(&self) -> Result<LFElement> {
        match self.kind {
            TowerKind::Cyclotomic => {
                let mut z = self.ring.add(&self.one(), &self.ring.gen());
                z.level = self.n;
                Ok(z)
            }
            TowerKind::Unramified => Err(LocalError::Unsupported("no p-power roots of unity".into())),
        }
    }

    pub fn uniformizer(&self, level: u32) -> Result<LFElement> {
        Ok(self.check_levelno(level)?.uniformizer.clone())
    }

    pub fn add(&self, x: &LFElement, y: &LFElement) -> LFElement {
        self.ring.add(x, y)
    }
    pub fn sub(&self, x: &LFElement, y: &LFElement) -> LFElement {
        self.ring.sub(x, y)
    }
    pub fn mul(&self, x: &LFElement, y: &LFElement) -> LFElement {
        self.ring.mul(x, y)
    }
    pub fn pow(&self, x: &LFElement, e: u64) -> LFElement {
        self.ring.pow(x, e)
    }

    /// Inverse of a unit.
    pub fn inv(&self, x: &LFElement) -> Result<LFElement> {
        if self.ring.is_zero(x) {
            return Err(LocalError::DivisionByZero);
        }
        self.ring.unit_inv(x)
    }

    /// x / y when v(x) ≥ v(y).
    pub fn div(&self, x: &LFElement, y: &LFElement) -> Result<LFElement> {
        if self.ring.is_zero(y) {
            return Err(LocalError::DivisionByZero);
        }
        let vy = self.ring.val(y);
        if self.ring.val(x) < vy {
            return Err(LocalError::Precondition("quotient would leave the integer ring".into()));
        }
        let (mut a, mut b) = (x.clone(), y.clone());
        for _ in 0..vy {
            a = self.ring.div_uniformizer(&a)?;
            b = self.ring.div_uniformizer(&b)?;
        }
        Ok(self.ring.mul(&a, &self.ring.unit_inv(&b)?))
    }

    /// Valuation in digits of K_level.
    pub fn valuation(&self, x: &LFElement, level: u32) -> Result<u32> {
        let r = self.check_levelno(level)?.ram_ratio;
        let v = self.ring.val(x);
        if v >= x.prec {
            return Err(LocalError::PrecisionExhausted("element is zero to working precision".into()));
        }
        if !v.is_multiple_of(r) {
            return Err(LocalError::NotInLevel(level));
        }
        Ok(v / r)
    }

    /// Equality to the common precision of both sides.
    pub fn eq_to_precision(&self, x: &LFElement, y: &LFElement) -> bool {
        self.ring.is_zero(&self.ring.sub(x, y))
    }

    /// σ^k(x).
    pub fn galois(&self, x: &LFElement, k: u64) -> LFElement {
        let p = self.p as u64;
        let mut k = k % ppow(self.p, self.n);
        let mut y = x.clone();
        let mut j = 0;
        while k > 0 {
            for _ in 0..k % p {
                y = self.ring.subst(&y, &self.sigma_pows[j]);
            }
            k /= p;
            j += 1;
        }
        y
    }

    /// N_{K_from/K_to}(x) for x ∈ K_from.
    pub fn norm(&self, x: &LFElement, from: u32, to: u32) -> Result<LFElement> {
        if to > from || from > self.n {
            return Err(LocalError::Precondition(format!("no norm from K_{from} to K_{to}")));
        }
        let step = &self.sigma_pows[to as usize];
        let mut conj = x.clone();
        let mut acc = x.clone();
        for _ in 1..ppow(self.p, from - to) {
            conj = self.ring.subst(&conj, step);
            acc = self.ring.mul(&acc, &conj);
        }
        acc.level = to;
        Ok(acc)
    }

    // ---- class structure -------------------------------------------

    fn build_level(&self, i: u32) -> Result<LevelClasses> {
        let ring = &self.ring;
        let (p, n) = (self.p, self.n);
        let (ram_ratio, f, uniformizer, lifts, zeta_p) = match self.kind {
            TowerKind::Unramified => {
                let f = ppow(p, i) as u32;
                let mut pi = ring.constant(i, p as i64);
                pi.level = i;
                (1, f, pi, self.residue_lifts(i)?, false)
            }
            TowerKind::Cyclotomic => {
                let r = ppow(p, n - i) as u32;
                let one = self.one();
                let mut pi = ring.sub(&ring.pow(&ring.add(&one, &ring.gen()), r as u64), &one);
                pi.level = i;
                (r, 1, pi, vec![self.one()], true)
            }
        };
        let e = ring.ram / ram_ratio;
        let mut w = uniformizer.clone();
        for _ in 0..ram_ratio {
            w = ring.div_uniformizer(&w)?;
        }
        let w_inv = ring.unit_inv(&w)?;
        let top = p * e / (p - 1);
        let mut lvl = LevelClasses {
            ram_ratio,
            e,
            f,
            top,
            uniformizer,
            w_inv,
            lifts,
            pivots: BTreeMap::new(),
            basis: Vec::new(),
            zeta_p,
        };
        if ring.cap <= lvl.bound() + ram_ratio {
            return Err(LocalError::PrecisionExhausted(format!("level {i} needs more than {} digits", ring.cap)));
        }
        self.build_echelon(&mut lvl)?;
        self.build_unit_basis(&mut lvl, i)?;
        Ok(lvl)
    }

    /// Teichmüller lifts of an F_p-basis of the residue field of K_i.
    fn residue_lifts(&self, i: u32) -> Result<Vec<LFElement>> {
        let ring = &self.ring;
        let p = self.p;
        let d = ring.deg();
        // Frobenius on F_p[X]/(h̄): column j is the residue of σ(X)^j.
        let sx = &self.sigma_pows[0];
        let mut cols = Vec::with_capacity(d);
        let mut power = self.one();
        for _ in 0..d {
            cols.push(power.coeffs.iter().map(|&c| (c % ring.p) as u32).collect::<Vec<u32>>());
            power = ring.mul(&power, sx);
        }
        let frob = FpMatrix::from_cols(p, d, &cols)?;
        let fixed = frob.pow(ppow(p, i))?.sub(&FpMatrix::identity(p, d))?.kernel();
        let q = ring.residue_size();
        let mut lifts = Vec::new();
        for b in fixed.basis() {
            let mut y = ring.elem(i, b.iter().map(|&c| c as u64).collect());
            for _ in 0..=ring.cap {
                let next = ring.pow(&y, q);
                if next.coeffs == y.coeffs {
                    break;
                }
                y = next;
            }
            y.level = i;
            y.prec = ring.cap;
            lifts.push(y);
        }
        Ok(lifts)
    }

    /// Filtered echelon of U_1(K_i)^p modulo the deep units, closed under
    /// p-th powers so that every element of the subgroup reduces to 1.
    fn build_echelon(&self, lvl: &mut LevelClasses) -> Result<()> {
        let ring = &self.ring;
        let p = self.p as u64;
        let mut queue: VecDeque<(LFElement, LFElement)> = VecDeque::new();
        let mut pi_s = self.one();
        for _ in 1..=lvl.top {
            pi_s = ring.mul(&pi_s, &lvl.uniformizer);
            for b in &lvl.lifts {
                let y = ring.add(&self.one(), &ring.mul(b, &pi_s));
                queue.push_back((ring.pow(&y, p), y));
            }
        }
        while let Some((mut g, mut root)) = queue.pop_front() {
            loop {
                let d = ring.sub(&g, &self.one());
                let w = ring.val(&d);
                if w >= d.prec || w > lvl.bound() {
                    break;
                }
                let digit = ring.digit(&d, w);
                let piv = lvl.pivots.entry(w).or_default();
                let coeffs = if piv.is_empty() {
                    None
                } else {
                    let cols: Vec<Vec<u32>> = piv.iter().map(|q| q.digit.clone()).collect();
                    fp_linalg::solve(&FpMatrix::from_cols(self.p, digit.len(), &cols)?, &digit)?
                };
                match coeffs {
                    Some(c) => {
                        for (q, &a) in piv.iter().zip(&c) {
                            if a != 0 {
                                g = ring.mul(&g, &ring.pow(&q.inv, a as u64));
                                let root_inv = ring.unit_inv(&q.root)?;
                                root = ring.mul(&root, &ring.pow(&root_inv, a as u64));
                            }
                        }
                        if ring.val(&ring.sub(&g, &self.one())) <= w {
                            return Err(LocalError::Internal("echelon reduction did not advance".into()));
                        }
                    }
                    None => {
                        let inv = ring.unit_inv(&g)?;
                        piv.push(Pivot { digit, inv, root: root.clone() });
                        queue.push_back((ring.pow(&g, p), g));
                        break;
                    }
                }
            }
        }
        lvl.pivots.retain(|_, v| !v.is_empty());
        Ok(())
    }

    /// Complements of the p-th power digits inside each filtration step.
    fn build_unit_basis(&self, lvl: &mut LevelClasses, i: u32) -> Result<()> {
        let ring = &self.ring;
        let p = self.p;
        let f_n = if ring.ram == 1 { ring.deg() } else { 1 };
        let mut pi_s = self.one();
        for s in 1..=lvl.top {
            pi_s = ring.mul(&pi_s, &lvl.uniformizer);
            let at = s * lvl.ram_ratio;
            let lift_digits: Vec<Vec<u32>> = lvl
                .lifts
                .iter()
                .map(|b| {
                    let t = ring.mul(b, &pi_s);
                    debug_assert_eq!(ring.val(&t), at);
                    ring.digit(&t, at)
                })
                .collect();
            let available = FpSubspace::span(p, f_n, &lift_digits);
            let powers: Vec<Vec<u32>> =
                lvl.pivots.get(&at).map(|v| v.iter().map(|q| q.digit.clone()).collect()).unwrap_or_default();
            let taken = FpSubspace::span(p, f_n, &powers);
            if !taken.is_subspace_of(&available) {
                return Err(LocalError::Internal(format!("p-th power digits leave K_{i} at level {s}")));
            }
            let fresh = available.complement(&taken)?;
            let lift_matrix = FpMatrix::from_cols(p, f_n, &lift_digits)?;
            for c in fresh.basis() {
                let lam = fp_linalg::solve(&lift_matrix, c)?
                    .ok_or_else(|| LocalError::Internal("complement digit outside the residue span".into()))?;
                let mut unit = ring.constant(i, 0);
                for (b, &l) in lvl.lifts.iter().zip(&lam) {
                    unit = ring.add(&unit, &ring.mul(b, &ring.constant(i, l as i64)));
                }
                let mut elem = ring.add(&self.one(), &ring.mul(&unit, &pi_s));
                elem.level = i;
                let inv = ring.unit_inv(&elem)?;
                lvl.basis.push(UnitBasis { at, digit: c.clone(), elem, inv });
            }
        }
        Ok(())
    }

    fn check_level_order(&self, i: u32) -> Result<()> {
        let lvl = &self.levels[i as usize];
        let gens: Vec<&LFElement> = std::iter::once(&lvl.uniformizer).chain(&lvl.lifts).collect();
        let fixed_by = |k: u64| gens.iter().all(|g| self.galois(g, k) == **g);
        if !fixed_by(ppow(self.p, i)) {
            return Err(LocalError::Internal(format!("K_{i} is not fixed by σ^(p^{i})")));
        }
        if i > 0 && fixed_by(ppow(self.p, i - 1)) {
            return Err(LocalError::NonCyclic(format!("σ has order below p^{i} on K_{i}")));
        }
        Ok(())
    }

    /// Reduce a 1-unit of K_i through the echelon: class coordinates on the
    /// unit basis, the p-th root of the p-th power part, and the deep
    /// remainder.
    fn reduce(&self, i: u32, u: &LFElement) -> Result<(Vec<u32>, LFElement, LFElement)> {
        let ring = &self.ring;
        let lvl = &self.levels[i as usize];
        let p = self.p;
        if u.prec <= lvl.bound() {
            return Err(LocalError::PrecisionExhausted(format!(
                "unit known to {} digits, level {i} needs more than {}",
                u.prec,
                lvl.bound()
            )));
        }
        let mut u = u.clone();
        let mut coords = vec![0u32; lvl.basis.len()];
        let mut root = self.one();
        loop {
            let d = ring.sub(&u, &self.one());
            let w = ring.val(&d);
            if w >= d.prec || w > lvl.bound() {
                break;
            }
            if !w.is_multiple_of(lvl.ram_ratio) {
                return Err(LocalError::NotInLevel(i));
            }
            let digit = ring.digit(&d, w);
            let piv: &[Pivot] = lvl.pivots.get(&w).map(Vec::as_slice).unwrap_or(&[]);
            let basis_idx: Vec<usize> = (0..lvl.basis.len()).filter(|&k| lvl.basis[k].at == w).collect();
            let cols: Vec<Vec<u32>> = piv
                .iter()
                .map(|q| q.digit.clone())
                .chain(basis_idx.iter().map(|&k| lvl.basis[k].digit.clone()))
                .collect();
            let sol = if cols.is_empty() {
                None
            } else {
                fp_linalg::solve(&FpMatrix::from_cols(p, digit.len(), &cols)?, &digit)?
            };
            let sol = sol.ok_or(LocalError::NotInLevel(i))?;
            for (q, &a) in piv.iter().zip(&sol) {
                if a != 0 {
                    u = ring.mul(&u, &ring.pow(&q.inv, a as u64));
                    root = ring.mul(&root, &ring.pow(&q.root, a as u64));
                }
            }
            for (&k, &b) in basis_idx.iter().zip(&sol[piv.len()..]) {
                if b != 0 {
                    u = ring.mul(&u, &ring.pow(&lvl.basis[k].inv, b as u64));
                    coords[k] = (coords[k] + b) % p;
                }
            }
            if ring.val(&ring.sub(&u, &self.one())) <= w {
                return Err(LocalError::Internal("class reduction did not advance".into()));
            }
        }
        Ok((coords, root, u))
    }

    /// dim_Fp J(K_i).
    pub fn class_dim(&self, i: u32) -> Result<usize> {
        Ok(self.check_levelno(i)?.dim())
    }

    pub fn summary(&self) -> Vec<LevelSummary> {
        self.levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let degree = l.e as u64 * l.f as u64;
                LevelSummary {
                    level: i as u32,
                    degree_over_qp: degree,
                    ramification: l.e,
                    residue_degree: l.f,
                    zeta_p: l.zeta_p,
                    class_dim: l.dim(),
                    formula_dim: degree as usize + 1 + usize::from(l.zeta_p),
                }
            })
            .collect()
    }

    /// Representatives of the class basis of J(K_i): π_i, then the unit
    /// basis in filtration order.
    pub fn class_basis(&self, i: u32) -> Result<Vec<LFElement>> {
        let lvl = self.check_levelno(i)?;
        Ok(std::iter::once(lvl.uniformizer.clone()).chain(lvl.basis.iter().map(|b| b.elem.clone())).collect())
    }

    /// Coordinates of [x] in J(K_i) for x ∈ K_i^×.
    pub fn class_of(&self, i: u32, x: &LFElement) -> Result<Element> {
        let lvl = self.check_levelno(i)?;
        let ring = &self.ring;
        let p = self.p;
        let v = ring.val(x);
        if v >= x.prec {
            return Err(LocalError::PrecisionExhausted("class of an element that is zero to working precision".into()));
        }
        if !v.is_multiple_of(lvl.ram_ratio) {
            return Err(LocalError::NotInLevel(i));
        }
        let vi = v / lvl.ram_ratio;
        let mut y = x.clone();
        for _ in 0..v {
            y = ring.div_uniformizer(&y)?;
        }
        y = ring.mul(&y, &ring.pow(&lvl.w_inv, vi as u64));
        // The Teichmüller part is a p-th power and (q−1) ≡ −1 mod p.
        let q = ppow(p, lvl.f);
        let u1 = ring.pow(&y, q - 1);
        let (coords, _, _) = self.reduce(i, &u1)?;
        let mut out = Vec::with_capacity(lvl.dim());
        out.push(vi % p);
        out.extend(coords.iter().map(|&c| (p - c) % p));
        Ok(out)
    }

    /// Element representing a class vector of J(K_i).
    pub fn class_representative(&self, i: u32, class: &[u32]) -> Result<LFElement> {
        let basis = self.class_basis(i)?;
        if class.len() != basis.len() {
            return Err(LocalError::Precondition("class vector has the wrong length".into()));
        }
        let mut acc = self.one();
        for (b, &c) in basis.iter().zip(class) {
            acc = self.ring.mul(&acc, &self.ring.pow(b, c as u64));
        }
        acc.level = i;
        Ok(acc)
    }

    /// A p-th root of x in K, or `None` if x is not a p-th power.
    pub fn pth_root(&self, x: &LFElement) -> Result<Option<LFElement>> {
        let ring = &self.ring;
        let p = self.p as u64;
        let v = ring.val(x);
        if v >= x.prec {
            return Err(LocalError::PrecisionExhausted("p-th root of zero to working precision".into()));
        }
        if !(v as u64).is_multiple_of(p) {
            return Ok(None);
        }
        let mut y = x.clone();
        for _ in 0..v {
            y = ring.div_uniformizer(&y)?;
        }
        let t0 = ring.pow(&y, ring.residue_size() / p);
        let u1 = ring.mul(&y, &ring.unit_inv(&ring.pow(&t0, p))?);
        let (coords, root, rem) = self.reduce(self.n, &u1)?;
        if coords.iter().any(|&c| c != 0) {
            return Ok(None);
        }
        let deep = self.deep_root(&rem)?;
        let pi_root = ring.pow(&self.levels[self.n as usize].uniformizer, v as u64 / p);
        let out = ring.mul(&ring.mul(&pi_root, &t0), &ring.mul(&root, &deep));
        if !self.eq_to_precision(&ring.pow(&out, p), x) {
            return Err(LocalError::Internal("p-th root does not reproduce its input".into()));
        }
        Ok(Some(LFElement { level: self.n, ..out }))
    }

    /// p-th root of a unit beyond the p-th power threshold: r ← r(1 + w/p)
    /// with w = z/r^p − 1. The iterate r is an exact ring element, so w is
    /// known to the precision of z; the root loses e digits.
    fn deep_root(&self, z: &LFElement) -> Result<LFElement> {
        let ring = &self.ring;
        let p = self.p as u64;
        let target = z.prec;
        let mut r = self.one();
        for _ in 0..4 * ring.cap {
            let mut w = ring.sub(&ring.mul(z, &ring.unit_inv(&ring.pow(&r, p))?), &self.one());
            w.prec = target;
            if ring.is_zero(&w) {
                r.prec = target.saturating_sub(ring.ram);
                return Ok(r);
            }
            let u = ring.div_p(&w)?;
            r = ring.mul(&r, &ring.add(&self.one(), &u));
            r.prec = ring.cap;
        }
        Err(LocalError::Internal("deep p-th root did not converge".into()))
    }

    // ---- Kummer generators and the datum ---------------------------

    /// a_{n−1}, …, a_0 with K_{i+1} = K_i(a_i^{1/p}) and N_{K_{i+1}/K_i}
    /// a_{i+1} = a_i.
    pub fn kummer_generators(&self) -> Result<Vec<LFElement>> {
        if self.kind != TowerKind::Cyclotomic {
            return Err(LocalError::Unsupported("Kummer generators need ξ_p in the base".into()));
        }
        let mut a = self.pow(&self.zeta()?, self.p as u64);
        a.level = self.n - 1;
        let mut out = vec![a.clone()];
        for i in (0..self.n - 1).rev() {
            a = self.norm(&a, i + 1, i)?;
            out.push(a.clone());
        }
        for (k, a) in out.iter().enumerate() {
            let i = self.n - 1 - k as u32;
            let below = self.class_of(i, a)?;
            let above = self.class_of(i + 1, a)?;
            if below.iter().all(|&c| c == 0) || above.iter().any(|&c| c != 0) {
                return Err(LocalError::Internal(format!("a_{i} does not generate K_{} over K_{i}", i + 1)));
            }
        }
        Ok(out)
    }

    fn matrix_of<F>(&self, src: u32, dst: u32, map: F) -> Result<FpMatrix>
    where
        F: Fn(&LFElement) -> Result<LFElement>,
    {
        let cols = self
            .class_basis(src)?
            .iter()
            .map(|b| self.class_of(dst, &map(b)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(FpMatrix::from_cols(self.p, self.class_dim(dst)?, &cols)?)
    }

    /// σ on J(K_i).
    pub fn sigma_matrix(&self, i: u32) -> Result<FpMatrix> {
        self.matrix_of(i, i, |b| Ok(self.galois(b, 1)))
    }

    /// J(K_i) → J(K).
    pub fn eps_matrix(&self, i: u32) -> Result<FpMatrix> {
        self.matrix_of(i, self.n, |b| Ok(b.clone()))
    }

    /// J(K_from) → J(K_to) induced by the norm.
    pub fn norm_matrix(&self, from: u32, to: u32) -> Result<FpMatrix> {
        self.matrix_of(from, to, |b| self.norm(b, from, to))
    }

    /// Whether ξ_p is a norm from K, decided on classes.
    pub fn xi_is_norm(&self) -> Result<bool> {
        let xi = self.pow(&self.zeta()?, ppow(self.p, self.n));
        let class = self.class_of(0, &xi)?;
        Ok(self.norm_matrix(self.n, 0)?.image().contains(&class))
    }
}

/// Extract the datum of the tower; errors if it fails validation.
pub fn build_datum(t: &LocalTower) -> Result<GaloisDatum> {
    let (p, n) = (t.p, t.n);
    let xi_in_f = t.xi_in_base();
    let kummer = if xi_in_f { Some(t.kummer_generators()?) } else { None };
    let sigma = t.sigma_matrix(n)?;
    let module = GModule::new(p, n, sigma.clone())?;
    let mut levels = Vec::new();
    let mut norms = Vec::new();
    for i in 0..n {
        let space = GModule::new(p, i, t.sigma_matrix(i)?)?;
        let eps = t.eps_matrix(i)?;
        let norm = t.norm_matrix(n, i)?;
        let inter_norm = (0..i).map(|j| Ok((j, t.norm_matrix(i, j)?))).collect::<Result<BTreeMap<_, _>>>()?;
        let a_class = match &kummer {
            Some(gens) => Some(t.class_of(i, &gens[(n - 1 - i) as usize])?),
            None => None,
        };
        norms.push(norm.clone());
        levels.push(LevelData { space, eps, norm, inter_norm, a_class });
    }
    let d = module.dim();
    levels.push(LevelData {
        space: module.clone(),
        eps: FpMatrix::identity(p, d),
        norm: FpMatrix::identity(p, d),
        inter_norm: norms.into_iter().enumerate().map(|(j, m)| (j as u32, m)).collect(),
        a_class: None,
    });
    let minus_one_is_norm = if p == 2 && n == 1 { Some(t.xi_is_norm()?) } else { None };
    let datum = GaloisDatum { p, n, module, levels, xi_in_f, minus_one_is_norm };
    let violations = datum.validate();
    if !violations.is_empty() {
        let codes: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(LocalError::Internal(format!("extracted datum fails validation: {}", codes.join("; "))));
    }
    Ok(datum)
}

/// α, γ ∈ K_i^× (a unit) and k with α^{σ−1} = γ k^p, sampled from random
/// classes plus a random p-th power.
pub fn sample_normcond_instance(t: &LocalTower, i: u32, seed: u64) -> Result<(LFElement, LFElement, LFElement)> {
    if i >= t.n {
        return Err(LocalError::Precondition(format!("level {i} must be below n = {}", t.n)));
    }
    let p = t.p;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dn = t.class_dim(t.n)?;
    let nil = t.sigma_matrix(t.n)?.sub(&FpMatrix::identity(p, dn))?;
    let eps = t.eps_matrix(i)?;
    let di = t.class_dim(i)?;
    // Unit classes of K_i only, so that γ and k are units.
    let unit_cols: Vec<Vec<u32>> = (1..di).map(|c| eps.col(c)).collect();
    let unit_image = FpSubspace::span(p, dn, &unit_cols);
    let admissible = fp_linalg::preimage(&nil, &unit_image)?;
    let mut c = vec![0u32; dn];
    for b in admissible.basis() {
        let coef = rng.gen_range(0..p);
        for (x, &y) in c.iter_mut().zip(b) {
            *x = (*x + coef * y) % p;
        }
    }
    let mut beta_coeffs: Vec<i64> = (0..t.ring.deg()).map(|_| rng.gen_range(0..t.ring.modulus as i64)).collect();
    beta_coeffs[0] = rng.gen_range(1..p as i64);
    let beta = t.element(t.n, &beta_coeffs);
    let alpha = t.mul(&t.class_representative(t.n, &c)?, &t.pow(&beta, p as u64));

    let target = nil.mul_vec(&c)?;
    let unit_eps = FpMatrix::from_cols(p, dn, &unit_cols)?;
    let g = fp_linalg::solve(&unit_eps, &target)?
        .ok_or_else(|| LocalError::Internal("sampled class has no unit preimage".into()))?;
    let mut gamma_class = vec![0u32];
    gamma_class.extend(g);
    let gamma = t.class_representative(i, &gamma_class)?;
    let ratio = t.div(&t.galois(&alpha, 1), &alpha)?;
    let kp = t.mul(&ratio, &t.inv(&gamma)?);
    let k = t.pth_root(&kp)?.ok_or_else(|| LocalError::Internal("α^{σ−1}/γ is not a p-th power".into()))?;
    Ok((alpha, gamma, k))
}

/// Both sides of (ᵖ√N(α))^{σ−1} = N(k)·(N_{K_i/F} γ)^{p^{n−i−1}}, compared
/// to working precision, with the p-th root chosen as k^S α^{p^{n−1}} ᵖ√(γ^S).
pub fn root_norm_crosscheck(t: &LocalTower, alpha: &LFElement, gamma: &LFElement, k: &LFElement, i: u32) -> Result<bool> {
    let (p, n) = (t.p, t.n);
    if i >= n {
        return Err(LocalError::Precondition(format!("level {i} must be below n = {n}")));
    }
    if p == 2 && n == 1 {
        return Err(LocalError::Precondition("p = 2 needs n > 1".into()));
    }
    if t.galois(gamma, ppow(p, i)) != *gamma && !t.eq_to_precision(&t.galois(gamma, ppow(p, i)), gamma) {
        return Err(LocalError::Precondition(format!("γ is not in K_{i}")));
    }
    let lhs_rel = t.div(&t.galois(alpha, 1), alpha)?;
    let rhs_rel = t.mul(gamma, &t.pow(k, p as u64));
    if !t.eq_to_precision(&lhs_rel, &rhs_rel) {
        return Err(LocalError::Precondition("α^{σ−1} ≠ γ k^p".into()));
    }
    let top = ppow(p, n);
    // x^S with S = Σ_{j < p^n − 1} (p^n − 1 − j) σ^j.
    let s_power = |x: &LFElement| {
        let mut acc = t.one();
        let mut conj = x.clone();
        for j in 0..top - 1 {
            acc = t.mul(&acc, &t.pow(&conj, top - 1 - j));
            conj = t.galois(&conj, 1);
        }
        acc
    };
    let gamma_s = s_power(gamma);
    let root_gamma_s =
        t.pth_root(&gamma_s)?.ok_or_else(|| LocalError::PrecisionExhausted("γ^S has no p-th root to precision".into()))?;
    let rho = t.mul(&t.mul(&s_power(k), &t.pow(alpha, ppow(p, n - 1))), &root_gamma_s);
    let lhs = t.div(&t.galois(&rho, 1), &rho)?;
    let rhs = t.mul(&t.norm(k, n, 0)?, &t.pow(&t.norm(gamma, i, 0)?, ppow(p, n - i - 1)));
    let diff = t.sub(&lhs, &rhs);
    let agree = t.ring.val(&diff) >= diff.prec;
    if diff.prec < t.ring.ram {
        return Err(LocalError::PrecisionExhausted("comparison left with less than one unit of precision".into()));
    }
    Ok(agree)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn irreducible_search() {
        let f = fpoly::first_irreducible(3, 3);
        assert_eq!(f.len(), 4);
        assert!(fpoly::irreducible_ppower(&f, 3));
        // x^3 + x + 1 = (x − 1)(x² + x − 1) over F_3.
        assert!(!fpoly::irreducible_ppower(&[1, 1, 0, 1], 3));
    }

    #[test]
    fn inverse_round_trip() {
        let t = make_tower(3, TowerKind::Cyclotomic, 1, Some(60)).unwrap();
        let x = t.element(1, &[2, 5, 7, 1, 0, 3]);
        let y = t.inv(&x).unwrap();
        assert!(t.eq_to_precision(&t.mul(&x, &y), &t.one()));
    }

    #[test]
    fn cyclotomic_action() {
        let t = make_tower(3, TowerKind::Cyclotomic, 1, Some(60)).unwrap();
        let z = t.zeta().unwrap();
        assert_eq!(t.galois(&z, 1), t.pow(&z, 4));
        assert_eq!(t.galois(&z, 3), z);
        assert!(t.eq_to_precision(&t.pow(&z, 9), &t.one()));
    }

    #[test]
    fn frobenius_on_teichmuller_digits() {
        let t = make_tower(3, TowerKind::Unramified, 1, Some(40)).unwrap();
        for b in &t.levels[1].lifts {
            assert_eq!(t.galois(b, 1), t.pow(b, 3));
        }
        assert_eq!(t.galois(&t.element(1, &[0, 1]), 3), t.element(1, &[0, 1]));
    }

    #[test]
    fn binomial_cube_in_zeta9_field() {
        // (1+π)^3 = 1 + 3π + 3π² + π³: v(3π) = 7, v(π³) = 3, so the
        // leading term after 1 is π³.
        let t = make_tower(3, TowerKind::Cyclotomic, 1, Some(60)).unwrap();
        let pi = t.uniformizer(1).unwrap();
        let c = t.sub(&t.pow(&t.add(&t.one(), &pi), 3), &t.one());
        assert_eq!(t.valuation(&c, 1).unwrap(), 3);
    }

    #[test]
    fn norms_land_in_the_base() {
        let t = make_tower(3, TowerKind::Cyclotomic, 1, Some(60)).unwrap();
        let x = t.element(1, &[1, 2, 0, 4, 1, 1]);
        let nx = t.norm(&x, 1, 0).unwrap();
        assert_eq!(t.galois(&nx, 1), nx);
    }

    #[test]
    fn pth_powers_have_zero_class() {
        let t = make_tower(3, TowerKind::Cyclotomic, 1, Some(60)).unwrap();
        let v = t.element(1, &[4, 1, 0, 2, 5, 1]);
        let c = t.class_of(1, &t.pow(&v, 3)).unwrap();
        assert!(c.iter().all(|&x| x == 0));
        let r = t.pth_root(&t.pow(&v, 3)).unwrap().unwrap();
        assert!(t.eq_to_precision(&t.pow(&r, 3), &t.pow(&v, 3)));
        assert!(t.class_of(1, &t.zeta().unwrap()).unwrap().iter().any(|&x| x != 0));
    }

    #[test]
    fn rejects_low_precision_and_bad_kinds() {
        assert!(matches!(make_tower(3, TowerKind::Cyclotomic, 1, Some(5)), Err(LocalError::PrecisionTooLow { .. })));
        assert!(make_tower(2, TowerKind::Unramified, 1, None).is_err());
    }
}
