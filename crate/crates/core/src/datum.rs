//! The Galois datum: the top module J = K×/K×^p with its subfield levels
//! J(K_i), the inclusion maps ε_i, the norm maps, and the Kummer classes
//! a_i. Everything downstream (decomposition, invariants) reads only this.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fp_linalg::{self, FpMatrix, FpSubspace, LinalgError};
use crate::gmod::{self, map_rows, ppow, Element, GModError, GModule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatumError {
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("no exceptional element found; the datum contradicts the existence of exceptional elements")]
    NoExceptional,
    #[error("filtration not nested at level {0}")]
    NotNested(u32),
    #[error("level {level} out of range 0..{bound}")]
    LevelOutOfRange { level: u32, bound: u32 },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Module(#[from] GModError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, DatumError>;

/// A subfield index in {−∞, 0, 1, …}. −∞ sorts below every level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubfieldIndex {
    NegInfinity,
    Finite(u32),
}

impl SubfieldIndex {
    /// The shifted successor with −∞ ∔ 1 = 0.
    pub fn succ(self) -> u32 {
        match self {
            SubfieldIndex::NegInfinity => 0,
            SubfieldIndex::Finite(i) => i + 1,
        }
    }

    /// p^m with p^{−∞} = 0.
    pub fn ppow(self, p: u32) -> u64 {
        match self {
            SubfieldIndex::NegInfinity => 0,
            SubfieldIndex::Finite(i) => ppow(p, i),
        }
    }

    /// −∞, 0, 1, …, n−1.
    pub fn candidates(n: u32) -> impl Iterator<Item = SubfieldIndex> {
        std::iter::once(SubfieldIndex::NegInfinity).chain((0..n).map(SubfieldIndex::Finite))
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "-inf" | "-infinity" | "neg_inf" => Some(SubfieldIndex::NegInfinity),
            t => t.parse().ok().map(SubfieldIndex::Finite),
        }
    }
}

impl fmt::Display for SubfieldIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubfieldIndex::NegInfinity => write!(f, "-inf"),
            SubfieldIndex::Finite(i) => write!(f, "{i}"),
        }
    }
}

impl Serialize for SubfieldIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SubfieldIndex::NegInfinity => s.serialize_str("-inf"),
            SubfieldIndex::Finite(i) => s.serialize_u32(*i),
        }
    }
}

impl<'de> Deserialize<'de> for SubfieldIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(i) => Ok(SubfieldIndex::Finite(i)),
            Raw::Str(s) => SubfieldIndex::parse(&s)
                .ok_or_else(|| serde::de::Error::custom(format!("bad subfield index {s:?}"))),
        }
    }
}

/// Data attached to one intermediate field K_i.
#[derive(Debug, Clone)]
pub struct LevelData {
    /// J(K_i) with its G/H_i action.
    pub space: GModule,
    /// ε_i : J(K_i) → J.
    pub eps: FpMatrix,
    /// J → J(K_i), induced by the norm from K.
    pub norm: FpMatrix,
    /// j ↦ (J(K_i) → J(K_j)) for j < i.
    pub inter_norm: BTreeMap<u32, FpMatrix>,
    /// [a_i] in J(K_i), present when ξ_p ∈ F and i < n.
    pub a_class: Option<Element>,
}

impl LevelData {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }
}

#[derive(Debug, Clone)]
pub struct GaloisDatum {
    pub p: u32,
    pub n: u32,
    pub module: GModule,
    pub levels: Vec<LevelData>,
    pub xi_in_f: bool,
    pub minus_one_is_norm: Option<bool>,
}

/// One failed axiom, with a stable code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: &'static str,
    pub level: Option<u32>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            Some(i) => write!(f, "[{}] level {}: {}", self.code, i, self.detail),
            None => write!(f, "[{}] {}", self.code, self.detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExceptionalReport {
    pub m: SubfieldIndex,
    /// Length-minimized exceptional element.
    pub delta: Element,
    /// Its norm class in J(F).
    pub norm_class: Element,
}

fn is_zero(v: &[u32]) -> bool {
    v.iter().all(|&x| x == 0)
}

impl GaloisDatum {
    pub fn dim(&self) -> usize {
        self.module.dim()
    }

    pub fn level(&self, i: u32) -> Result<&LevelData> {
        self.levels
            .get(i as usize)
            .ok_or(DatumError::LevelOutOfRange { level: i, bound: self.levels.len() as u32 })
    }

    /// im ε_i = [K_i×] inside J.
    pub fn subfield_image(&self, i: u32) -> Result<FpSubspace> {
        Ok(self.level(i)?.eps.image())
    }

    pub fn apply_norm(&self, i: u32, v: &[u32]) -> Result<Element> {
        Ok(self.level(i)?.norm.mul_vec(v)?)
    }

    /// Image of a subspace of J under norm_i.
    pub fn norm_of_subspace(&self, i: u32, s: &FpSubspace) -> Result<FpSubspace> {
        Ok(map_rows(s, &self.level(i)?.norm))
    }

    /// ⟨a_i⟩, or zero when no Kummer class is recorded.
    pub fn a_line(&self, i: u32) -> Result<FpSubspace> {
        let lvl = self.level(i)?;
        Ok(match &lvl.a_class {
            Some(a) => FpSubspace::span(self.p, lvl.dim(), std::slice::from_ref(a)),
            None => FpSubspace::zero(self.p, lvl.dim()),
        })
    }

    /// ξ_p ∈ N_{K/F}(K×), decided on classes: it holds exactly when some
    /// G-fixed class has a nontrivial norm class.
    pub fn xi_is_norm_from_classes(&self) -> Result<bool> {
        let fixed = self.module.fixed_points(0)?;
        Ok(!self.norm_of_subspace(0, &fixed)?.is_zero())
    }

    /// The −1-is-a-norm flag, recorded or derived from classes.
    pub fn minus_one_is_norm_effective(&self) -> Result<bool> {
        match self.minus_one_is_norm {
            Some(b) => Ok(b),
            None => self.xi_is_norm_from_classes(),
        }
    }

    /// True when the exceptional-element hypotheses hold, false when the
    /// no-exceptional-element theorem applies instead.
    pub fn has_exceptional_hypothesis(&self) -> Result<bool> {
        if !self.xi_in_f {
            return Ok(false);
        }
        if self.p == 2 && self.n == 1 {
            return self.minus_one_is_norm_effective();
        }
        Ok(true)
    }

    fn require_exceptional_hypothesis(&self) -> Result<()> {
        if !self.xi_in_f {
            return Err(DatumError::HypothesisNotMet("xi_p is not in F".into()));
        }
        if !self.has_exceptional_hypothesis()? {
            return Err(DatumError::HypothesisNotMet("p = 2, n = 1 and -1 is not a norm".into()));
        }
        Ok(())
    }

    /// Axiom check; an empty list means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |code: &'static str, level: Option<u32>, detail: String| {
            out.push(Violation { code, level, detail })
        };
        let (p, n, d) = (self.p, self.n, self.dim());
        if self.module.n() != n || self.module.p() != p {
            bad("module.shape", None, "module height or modulus differs from the datum".into());
            return out;
        }
        if self.levels.len() != n as usize + 1 {
            bad("levels.count", None, format!("{} levels for n = {}", self.levels.len(), n));
            return out;
        }
        // Shapes first; later checks assume them.
        for (i, lvl) in self.levels.iter().enumerate() {
            let i = i as u32;
            let di = lvl.dim();
            let shapes_ok = lvl.space.p() == p
                && lvl.space.n() == i
                && (lvl.eps.rows(), lvl.eps.cols()) == (d, di)
                && (lvl.norm.rows(), lvl.norm.cols()) == (di, d)
                && lvl.a_class.as_ref().is_none_or(|a| a.len() == di)
                && lvl.inter_norm.iter().all(|(&j, m)| {
                    j < i && (m.rows(), m.cols()) == (self.levels[j as usize].dim(), di)
                });
            if !shapes_ok {
                bad("shape", Some(i), "matrix shapes do not match the level dimensions".into());
                return out;
            }
            for j in 0..i {
                if !lvl.inter_norm.contains_key(&j) {
                    bad("shape", Some(i), format!("missing inter_norm to level {j}"));
                    return out;
                }
            }
        }

        let top = &self.levels[n as usize];
        if top.space.sigma() != self.module.sigma()
            || top.eps != FpMatrix::identity(p, d)
            || top.norm != FpMatrix::identity(p, d)
        {
            bad("top.identity", Some(n), "level n must be J itself with identity maps".into());
        }
        if top.a_class.is_some() {
            bad("a_class.presence", Some(n), "no Kummer class lives at the top level".into());
        }

        let sigma = self.module.sigma();
        let fixed_j: Vec<FpSubspace> =
            (0..=n).map(|i| self.module.fixed_points(i).expect("level in range")).collect();
        for (i, lvl) in self.levels.iter().enumerate() {
            let i = i as u32;
            let si = lvl.space.sigma();
            if lvl.eps.mul(si).unwrap() != sigma.mul(&lvl.eps).unwrap() {
                bad("eps.equivariant", Some(i), "eps does not commute with sigma".into());
            }
            if lvl.norm.mul(sigma).unwrap() != si.mul(&lvl.norm).unwrap() {
                bad("norm.equivariant", Some(i), "norm does not commute with sigma".into());
            }
            let img = lvl.eps.image();
            if !img.is_subspace_of(&fixed_j[i as usize]) {
                bad("eps.fixed", Some(i), "image of eps is not fixed by H_i".into());
            }
            let expected = self.module.nil_pow(ppow(p, n) - ppow(p, i));
            if lvl.eps.mul(&lvl.norm).unwrap() != *expected {
                bad("eps_norm.identity", Some(i), "eps . norm != (sigma-1)^(p^n-p^i)".into());
            }

            // Kummer class and kernel of eps.
            let has_a = lvl.a_class.as_ref().is_some_and(|a| !is_zero(a));
            if i < n && has_a != self.xi_in_f {
                bad("a_class.presence", Some(i), format!("a_class presence must equal xi_in_F ({})", self.xi_in_f));
            }
            let ker = lvl.eps.kernel();
            let a_line = self.a_line(i).unwrap();
            if ker != a_line {
                bad("eps.kernel", Some(i), format!("ker eps has dim {}, expected <a_i> of dim {}", ker.dim(), a_line.dim()));
            }
            if has_a && !is_zero(&lvl.space.apply_nil_pow(1, lvl.a_class.as_ref().unwrap())) {
                bad("a_class.fixed", Some(i), "a_i is not fixed by sigma_i".into());
            }

            for (&j, inter) in &lvl.inter_norm {
                let low = &self.levels[j as usize];
                if low.norm != inter.mul(&lvl.norm).unwrap() {
                    bad("norm.coherence", Some(i), format!("norm_{j} != inter_norm[{i}->{j}] . norm_{i}"));
                }
                let lhs = low.eps.mul(inter).unwrap();
                let rhs = self.module.nil_pow(ppow(p, i) - ppow(p, j)).mul(&lvl.eps).unwrap();
                if lhs != rhs {
                    bad("inter.identity", Some(i), format!("eps_{j} . inter_norm[{i}->{j}] != (sigma-1)^(p^{i}-p^{j}) . eps_{i}"));
                }
                if inter.mul(lvl.space.sigma()).unwrap() != low.space.sigma().mul(inter).unwrap() {
                    bad("inter.equivariant", Some(i), format!("inter_norm[{i}->{j}] is not equivariant"));
                }
                if let (Some(ai), Some(aj)) = (&lvl.a_class, &low.a_class) {
                    if inter.mul_vec(ai).unwrap() != *aj {
                        bad("a_class.chain", Some(i), format!("inter_norm[{i}->{j}](a_{i}) != a_{j}"));
                    }
                }
            }

            // Exactness at J^{H_i} for the extension K/K_i.
            if i < n {
                let fixed = &fixed_j[i as usize];
                let restricted = map_rows(fixed, &lvl.norm);
                if !restricted.is_subspace_of(&a_line) {
                    bad("exact.norm_range", Some(i), "norm_i(J^{H_i}) is not inside <a_i>".into());
                }
                let kernel_in_fixed = fixed.intersect(&lvl.norm.kernel()).unwrap();
                if kernel_in_fixed != img {
                    bad("exact.fixed", Some(i), format!(
                        "kernel of norm_i on J^H_i has dim {}, image of eps_i has dim {}",
                        kernel_in_fixed.dim(),
                        img.dim()
                    ));
                }
            }
        }

        // Fixed Submodule shape.
        let w0 = self.levels[0].eps.image();
        let gap = fixed_j[0].dim() as isize - w0.dim() as isize;
        if gap > 1 {
            bad("fixed.submodule", Some(0), format!("dim J^G / [F^x] = {gap} > 1"));
        } else if gap == 1 && !self.xi_in_f {
            bad("fixed.submodule", Some(0), "J^G larger than [F^x] although xi_p is not in F".into());
        }

        if self.p == 2 && self.n == 1 && self.xi_in_f {
            if let Some(flag) = self.minus_one_is_norm {
                let derived = self.xi_is_norm_from_classes().unwrap();
                if flag != derived {
                    bad("minus_one.flag", None, format!("recorded {flag}, classes say {derived}"));
                }
            }
        }
        out
    }

    /// V_0 ⊇ V_1 ⊇ … ⊇ V_n: the norm groups [N_{K_i/F}(K_i×)] inside J.
    pub fn norm_filtration(&self) -> Result<Vec<FpSubspace>> {
        let (p, n) = (self.p, self.n);
        let mut out = Vec::with_capacity(n as usize + 1);
        for i in 0..=n {
            let v = if i == n {
                self.module.nil_image(ppow(p, n) - 1)
            } else {
                self.module.map_nil_pow(ppow(p, i) - 1, &self.subfield_image(i)?)
            };
            if let Some(prev) = out.last() {
                if !v.is_subspace_of(prev) {
                    return Err(DatumError::NotNested(i));
                }
            }
            out.push(v);
        }
        Ok(out)
    }

    /// (e_0, …, e_n) with e_i = dim V_i/V_{i+1} and e_n = dim V_n.
    pub fn e_ranks(&self) -> Result<Vec<usize>> {
        let v = self.norm_filtration()?;
        Ok((0..v.len())
            .map(|i| if i + 1 < v.len() { v[i].dim() - v[i + 1].dim() } else { v[i].dim() })
            .collect())
    }

    /// S_s: classes whose (σ−1)-image lies in [K_s×]; S_{−∞} = J^G.
    pub fn exceptional_candidates(&self, s: SubfieldIndex) -> Result<FpSubspace> {
        Ok(match s {
            SubfieldIndex::NegInfinity => self.module.nil_kernel(1),
            SubfieldIndex::Finite(i) => fp_linalg::preimage(&self.module.nil(), &self.subfield_image(i)?)?,
        })
    }

    /// i(K/F) and a length-minimized exceptional element.
    pub fn exceptional_search(&self) -> Result<ExceptionalReport> {
        self.require_exceptional_hypothesis()?;
        let norm0 = &self.level(0)?.norm;
        for s in SubfieldIndex::candidates(self.n) {
            let cands = self.exceptional_candidates(s)?;
            let Some(first) = cands
                .basis()
                .iter()
                .find(|b| !is_zero(&norm0.mul_vec(b).expect("dims")))
            else {
                continue;
            };
            let zero_norm = cands.intersect(&norm0.kernel())?;
            let delta = self.minimize_length(first, &zero_norm)?;
            let len = self.module.length(&delta) as u64;
            if len != s.ppow(self.p) + 1 {
                return Err(DatumError::Inconsistent(format!(
                    "minimized exceptional element has length {len}, expected p^{s}+1"
                )));
            }
            let norm_class = norm0.mul_vec(&delta)?;
            return Ok(ExceptionalReport { m: s, delta, norm_class });
        }
        Err(DatumError::NoExceptional)
    }

    /// Shortest element of the coset v + Z, found by bisection on the
    /// length bound L (feasible iff N^L v ∈ N^L Z).
    fn minimize_length(&self, v: &[u32], z: &FpSubspace) -> Result<Element> {
        let feasible = |l: u64| -> Result<Option<Element>> {
            let op = self.module.nil_pow(l);
            let target = op.mul_vec(v)?;
            if is_zero(&target) {
                return Ok(Some(vec![0; v.len()]));
            }
            if z.is_zero() {
                return Ok(None);
            }
            let cols: Vec<Vec<u32>> = z.basis().iter().map(|b| op.mul_vec(b).expect("dims")).collect();
            let a = FpMatrix::from_cols(self.p, v.len(), &cols)?;
            Ok(fp_linalg::solve(&a, &target)?.map(|c| gmod::combine(self.p, z.basis(), &c)))
        };
        let (mut lo, mut hi) = (0u64, self.module.length(v) as u64);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if feasible(mid)?.is_some() {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let shift = feasible(lo)?.expect("upper bound is always feasible");
        let p = self.p;
        Ok(v.iter().zip(&shift).map(|(&a, &b)| (a + p - b) % p).collect())
    }

    /// i(K/F) from the class-level characterization: the least s with
    /// norm_{s∔1} nonzero on J^{H_{s∔1}}.
    pub fn i_via_theorem3(&self) -> Result<SubfieldIndex> {
        self.require_exceptional_hypothesis()?;
        for s in SubfieldIndex::candidates(self.n) {
            let t = s.succ();
            let fixed = self.module.fixed_points(t)?;
            if !self.norm_of_subspace(t, &fixed)?.is_zero() {
                return Ok(s);
            }
        }
        if self.dim() == 0 {
            return Err(DatumError::NoExceptional);
        }
        Err(DatumError::Inconsistent("identity norm at the top level vanished".into()))
    }

    /// The datum of K/K_j: generator σ^{p^j}, levels j..n relabeled.
    pub fn restrict(&self, j: u32) -> Result<GaloisDatum> {
        if j >= self.n {
            return Err(DatumError::LevelOutOfRange { level: j, bound: self.n });
        }
        if j == 0 {
            return Ok(self.clone());
        }
        let module = self.module.restrict_to_subgroup(j)?;
        let mut levels = Vec::new();
        for lvl in &self.levels[j as usize..] {
            let inter_norm = lvl
                .inter_norm
                .iter()
                .filter(|(&k, _)| k >= j)
                .map(|(&k, m)| (k - j, m.clone()))
                .collect();
            levels.push(LevelData {
                space: lvl.space.restrict_to_subgroup(j)?,
                eps: lvl.eps.clone(),
                norm: lvl.norm.clone(),
                inter_norm,
                a_class: lvl.a_class.clone(),
            });
        }
        let mut out = GaloisDatum {
            p: self.p,
            n: self.n - j,
            module,
            levels,
            xi_in_f: self.xi_in_f,
            minus_one_is_norm: None,
        };
        if out.p == 2 && out.n == 1 && out.xi_in_f {
            out.minus_one_is_norm = Some(out.xi_is_norm_from_classes()?);
        }
        Ok(out)
    }

    /// α with (σ−1)^{p^n−1} α spanning the fixed line of the cyclic
    /// module of γ; `None` for γ = 0 or when no such α exists.
    pub fn solve_norm_equation(&self, gamma: &[u32]) -> Result<Option<Element>> {
        let len = self.module.length(gamma) as u64;
        if len == 0 {
            return Ok(None);
        }
        let top = ppow(self.p, self.n);
        if len == top {
            return Ok(Some(gamma.to_vec()));
        }
        let line = self.module.apply_nil_pow(len - 1, gamma);
        Ok(fp_linalg::solve(&self.module.nil_pow(top - 1), &line)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DatumJson::from(self)).expect("datum serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&DatumJson::from(self)).expect("datum serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DatumJson = serde_json::from_str(text).map_err(|e| DatumError::Schema(e.to_string()))?;
        raw.into_datum()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatumJson {
    p: u32,
    n: u32,
    #[serde(rename = "xi_in_F")]
    xi_in_f: bool,
    minus_one_is_norm: Option<bool>,
    sigma: Vec<Vec<u32>>,
    levels: Vec<LevelJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelJson {
    dim: usize,
    sigma_i: Vec<Vec<u32>>,
    eps: Vec<Vec<u32>>,
    norm: Vec<Vec<u32>>,
    inter_norm: BTreeMap<String, Vec<Vec<u32>>>,
    a_class: Option<Vec<u32>>,
}

impl From<&GaloisDatum> for DatumJson {
    fn from(d: &GaloisDatum) -> Self {
        DatumJson {
            p: d.p,
            n: d.n,
            xi_in_f: d.xi_in_f,
            minus_one_is_norm: d.minus_one_is_norm,
            sigma: d.module.sigma().to_rows(),
            levels: d
                .levels
                .iter()
                .map(|l| LevelJson {
                    dim: l.dim(),
                    sigma_i: l.space.sigma().to_rows(),
                    eps: l.eps.to_rows(),
                    norm: l.norm.to_rows(),
                    inter_norm: l.inter_norm.iter().map(|(k, m)| (k.to_string(), m.to_rows())).collect(),
                    a_class: l.a_class.clone(),
                })
                .collect(),
        }
    }
}

/// Rows → matrix of a known shape, with entry and shape checks.
fn matrix_from_json(p: u32, rows: usize, cols: usize, data: &[Vec<u32>], what: &str) -> Result<FpMatrix> {
    if data.len() != rows || data.iter().any(|r| r.len() != cols) {
        return Err(DatumError::Schema(format!("{what}: expected a {rows}x{cols} matrix")));
    }
    if data.iter().flatten().any(|&x| x >= p) {
        return Err(DatumError::Schema(format!("{what}: entries must lie in [0, {p})")));
    }
    if rows == 0 {
        return Ok(FpMatrix::zero(p, 0, cols));
    }
    Ok(FpMatrix::from_rows(p, cols, data)?)
}

impl DatumJson {
    fn into_datum(self) -> Result<GaloisDatum> {
        let p = self.p;
        fp_linalg::check_modulus(p).map_err(|_| DatumError::Schema(format!("p: {p} is not a supported prime")))?;
        if self.n == 0 {
            return Err(DatumError::Schema("n: must be at least 1".into()));
        }
        if self.levels.len() != self.n as usize + 1 {
            return Err(DatumError::Schema(format!("levels: expected {} entries", self.n + 1)));
        }
        let d = self.sigma.len();
        let sigma = matrix_from_json(p, d, d, &self.sigma, "sigma")?;
        let module = GModule::new(p, self.n, sigma).map_err(|e| DatumError::Schema(format!("sigma: {e}")))?;
        let dims: Vec<usize> = self.levels.iter().map(|l| l.dim).collect();
        let mut levels = Vec::new();
        for (i, l) in self.levels.into_iter().enumerate() {
            let di = l.dim;
            let tag = |f: &str| format!("levels[{i}].{f}");
            let sigma_i = matrix_from_json(p, di, di, &l.sigma_i, &tag("sigma_i"))?;
            let space = GModule::new(p, i as u32, sigma_i)
                .map_err(|e| DatumError::Schema(format!("{}: {e}", tag("sigma_i"))))?;
            let eps = matrix_from_json(p, d, di, &l.eps, &tag("eps"))?;
            let norm = matrix_from_json(p, di, d, &l.norm, &tag("norm"))?;
            let mut inter_norm = BTreeMap::new();
            for (k, m) in &l.inter_norm {
                let j: u32 = k
                    .parse()
                    .ok()
                    .filter(|&j: &u32| (j as usize) < i)
                    .ok_or_else(|| DatumError::Schema(format!("{}: bad key {k:?}", tag("inter_norm"))))?;
                let mat = matrix_from_json(p, dims[j as usize], di, m, &tag(&format!("inter_norm.{k}")))?;
                inter_norm.insert(j, mat);
            }
            if let Some(a) = &l.a_class {
                if a.len() != di || a.iter().any(|&x| x >= p) {
                    return Err(DatumError::Schema(format!("{}: expected {di} entries in [0, {p})", tag("a_class"))));
                }
            }
            levels.push(LevelData { space, eps, norm, inter_norm, a_class: l.a_class });
        }
        Ok(GaloisDatum {
            p,
            n: self.n,
            module,
            levels,
            xi_in_f: self.xi_in_f,
            minus_one_is_norm: self.minus_one_is_norm,
        })
    }
}
