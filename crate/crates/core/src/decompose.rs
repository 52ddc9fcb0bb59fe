//! Constructive decomposition J = X ⊕ Y_n ⊕ … ⊕ Y_0 from a datum, with a
//! clause-by-clause verifier and the restriction table for i(K/K_j).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::datum::{DatumError, GaloisDatum, Result, SubfieldIndex};
use crate::fp_linalg::{self, FpMatrix, FpSubspace};
use crate::gmod::{self, map_rows, ppow, sum_all, Element};
use crate::synth::m_field;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YGenerator {
    pub level: u32,
    pub coords: Element,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    /// `None` when no exceptional element exists (the Y-only case).
    #[serde(with = "m_field")]
    pub m: Option<SubfieldIndex>,
    pub x_generator: Option<Element>,
    pub y_generators: Vec<YGenerator>,
}

impl Decomposition {
    /// Number of Y generators per level 0..=n.
    pub fn y_ranks(&self, n: u32) -> Vec<usize> {
        let mut r = vec![0; n as usize + 1];
        for g in &self.y_generators {
            if let Some(slot) = r.get_mut(g.level as usize) {
                *slot += 1;
            }
        }
        r
    }

    /// Summand dimensions, largest first.
    pub fn block_sizes(&self, p: u32) -> Vec<usize> {
        let mut sizes: Vec<usize> =
            self.y_generators.iter().map(|g| ppow(p, g.level) as usize).collect();
        if let Some(m) = self.m {
            sizes.push(m.ppow(p) as usize + 1);
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("decomposition serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| DatumError::Schema(e.to_string()))
    }
}

/// Lift every vector of `targets` through `op`, using preimages inside
/// `source` only.
fn lift_through(p: u32, op: &FpMatrix, source: &FpSubspace, targets: &[Element]) -> Result<Vec<Element>> {
    let cols: Vec<Element> = source.basis().iter().map(|b| op.mul_vec(b).expect("dims")).collect();
    let a = FpMatrix::from_cols(p, op.rows(), &cols)?;
    targets
        .iter()
        .map(|t| {
            let c = fp_linalg::solve(&a, t)?
                .ok_or_else(|| DatumError::Inconsistent("norm class has no preimage in the subfield image".into()))?;
            Ok(gmod::combine(p, source.basis(), &c))
        })
        .collect()
}

/// Build the decomposition. Fails with `Inconsistent` if the datum does not
/// behave like one coming from a field extension.
pub fn decompose(d: &GaloisDatum) -> Result<Decomposition> {
    let (p, n) = (d.p, d.n);
    let exceptional = if d.has_exceptional_hypothesis()? { Some(d.exceptional_search()?) } else { None };
    let m = exceptional.as_ref().map(|r| r.m);
    let x_gen = exceptional.map(|r| r.delta);
    let x_fixed: Option<Element> = x_gen.as_ref().map(|g| {
        let len = d.module.length(g) as u64;
        d.module.apply_nil_pow(len - 1, g)
    });

    let filtration = d.norm_filtration()?;
    let mut covered = d.module.zero_space();
    let mut y_generators = Vec::new();
    for i in (0..=n).rev() {
        if let (Some(SubfieldIndex::Finite(mi)), Some(xf)) = (m, &x_fixed) {
            if mi == i {
                let grown = covered.sum(&FpSubspace::span(p, d.dim(), std::slice::from_ref(xf)))?;
                if grown.dim() == covered.dim() {
                    return Err(DatumError::Inconsistent(format!(
                        "the fixed line of X already lies in the norm group of level {}",
                        i + 1
                    )));
                }
                covered = grown;
            }
        }
        let v = &filtration[i as usize];
        if !covered.is_subspace_of(v) {
            return Err(DatumError::Inconsistent(format!("norm group of level {i} misses covered classes")));
        }
        let fresh = v.complement(&covered)?;
        let source = if i == n { d.module.full() } else { d.subfield_image(i)? };
        let op = d.module.nil_pow(ppow(p, i) - 1);
        for g in lift_through(p, &op, &source, fresh.basis())? {
            y_generators.push(YGenerator { level: i, coords: g });
        }
        covered = covered.sum(&fresh)?;
    }

    let dec = Decomposition { m, x_generator: x_gen, y_generators };
    certify(d, &dec)?;
    Ok(dec)
}

/// Direct sum of all summands spanning J.
fn certify(d: &GaloisDatum, dec: &Decomposition) -> Result<()> {
    let parts = summands(d, dec);
    let direct = d.module.independent_sum_check(&parts)?;
    let total: usize = parts.iter().map(FpSubspace::dim).sum();
    if !direct || total != d.dim() {
        return Err(DatumError::Inconsistent(format!(
            "summands are {} with total dimension {} in a module of dimension {}",
            if direct { "independent" } else { "dependent" },
            total,
            d.dim()
        )));
    }
    Ok(())
}

fn summands(d: &GaloisDatum, dec: &Decomposition) -> Vec<FpSubspace> {
    let mut parts = Vec::new();
    if let Some(x) = &dec.x_generator {
        parts.push(d.module.cyclic_submodule(x));
    }
    for g in &dec.y_generators {
        parts.push(d.module.cyclic_submodule(&g.coords));
    }
    parts
}

fn y_sum(d: &GaloisDatum, dec: &Decomposition, from_level: u32) -> FpSubspace {
    let gens: Vec<Element> =
        dec.y_generators.iter().filter(|g| g.level >= from_level).map(|g| g.coords.clone()).collect();
    d.module.generated_submodule(&gens)
}

/// The right-hand side of the subfield-image clause, assembled from the
/// computed summands.
pub fn predicted_subfield_image(dec: &Decomposition, d: &GaloisDatum, i: u32) -> Result<FpSubspace> {
    if i >= d.n {
        return Err(DatumError::LevelOutOfRange { level: i, bound: d.n });
    }
    check_shapes(dec, d)?;
    let Some(m) = dec.m else {
        return Ok(d.module.fixed_points(i)?);
    };
    let y = y_sum(d, dec, 0);
    let y_fixed = y.intersect(&d.module.fixed_points(i)?)?;
    let x = match &dec.x_generator {
        Some(g) => d.module.cyclic_submodule(g),
        None => return Err(DatumError::Schema("x_generator missing for an exceptional decomposition".into())),
    };
    let x_term = match m {
        SubfieldIndex::Finite(mi) if i < mi => {
            // (σ−1)·(σ^{p^i}−1)^{p^{m−i}−1} with σ^{p^i}−1 = (σ−1)^{p^i}.
            let inner = d.module.nil_pow(ppow(d.p, i)).pow(ppow(d.p, mi - i) - 1)?;
            let op = d.module.nil().mul(&inner)?;
            map_rows(&x, &op)
        }
        _ => d.module.map_nil_pow(1, &x),
    };
    Ok(x_term.sum(&y_fixed)?)
}

fn check_shapes(dec: &Decomposition, d: &GaloisDatum) -> Result<()> {
    let dim = d.dim();
    let bad_len = dec.x_generator.as_ref().is_some_and(|x| x.len() != dim)
        || dec.y_generators.iter().any(|g| g.coords.len() != dim || g.level > d.n);
    let bad_entry = dec
        .x_generator
        .iter()
        .chain(dec.y_generators.iter().map(|g| &g.coords))
        .flatten()
        .any(|&c| c >= d.p);
    if bad_len || bad_entry || dec.m.is_some() != dec.x_generator.is_some() {
        return Err(DatumError::Schema("decomposition does not match the datum".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Clause {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub clauses: Vec<Clause>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.detail)?;
        }
        Ok(())
    }
}

/// Re-check every clause of the structure theorems against the datum.
pub fn verify(dec: &Decomposition, d: &GaloisDatum) -> VerifyReport {
    let mut clauses = Vec::new();
    let mut push = |id: String, passed: bool, detail: String| clauses.push(Clause { id, passed, detail });
    if let Err(e) = check_shapes(dec, d) {
        push("input.shape".into(), false, e.to_string());
        return VerifyReport { clauses };
    }
    let (p, n) = (d.p, d.n);
    let tag = if dec.m.is_some() { "T2" } else { "T1" };
    let cor = if dec.m.is_some() { "C2" } else { "C1" };

    // Which theorem applies, and the value of m.
    match d.has_exceptional_hypothesis() {
        Ok(expect_x) => {
            push("case.split".into(), expect_x == dec.m.is_some(), format!("exceptional hypothesis {expect_x}"));
            if expect_x {
                match (d.exceptional_search(), d.i_via_theorem3()) {
                    (Ok(r), Ok(t3)) => {
                        push("T2.m".into(), dec.m == Some(r.m), format!("datum gives m = {}, decomposition says {}", r.m, dec.m.map_or("n/a".to_string(), |m| m.to_string())));
                        push("T3.agreement".into(), r.m == t3, format!("search {} vs class-level {}", r.m, t3));
                    }
                    (Err(e), _) | (_, Err(e)) => push("T2.m".into(), false, e.to_string()),
                }
            }
        }
        Err(e) => push("case.split".into(), false, e.to_string()),
    }

    // Direct sum and span.
    let parts = summands(d, dec);
    let total: usize = parts.iter().map(FpSubspace::dim).sum();
    let direct = d.module.independent_sum_check(&parts);
    let span = sum_all(p, d.dim(), &parts);
    push(
        format!("{tag}.decomposition"),
        direct == Ok(true) && total == d.dim() && span.dim() == d.dim(),
        format!("{} summands, total dim {total}, span dim {}, J dim {}", parts.len(), span.dim(), d.dim()),
    );

    // X: cyclic of dimension p^m + 1 and exceptional.
    if let (Some(m), Some(x)) = (dec.m, &dec.x_generator) {
        let len = d.module.length(x) as u64;
        push("T2.1".into(), len == m.ppow(p) + 1, format!("dim X = {len}, p^m+1 = {}", m.ppow(p) + 1));
        let norm_ok = d.apply_norm(0, x).map(|v| v.iter().any(|&c| c != 0)).unwrap_or(false);
        let shifted = d.module.apply_nil_pow(1, x);
        let lands = match m {
            SubfieldIndex::NegInfinity => shifted.iter().all(|&c| c == 0),
            SubfieldIndex::Finite(mi) => d.subfield_image(mi).map(|w| w.contains(&shifted)).unwrap_or(false),
        };
        push("T2.1.exceptional".into(), norm_ok && lands, format!("nontrivial norm {norm_ok}, (sigma-1)X in [K_m] {lands}"));
    }

    // Y_i generators have length p^i.
    let short: Vec<String> = dec
        .y_generators
        .iter()
        .filter(|g| d.module.length(&g.coords) as u64 != ppow(p, g.level))
        .map(|g| format!("level {}", g.level))
        .collect();
    let block_id = if dec.m.is_some() { "T2.2" } else { "T1.blocks" };
    push(block_id.into(), short.is_empty(), if short.is_empty() { "all Y summands have dimension p^i".into() } else { format!("wrong length at {}", short.join(", ")) });

    // Subfield images.
    for i in 0..n {
        let id = if dec.m.is_some() { format!("T2.3[{i}]") } else { format!("T1.subfield[{i}]") };
        match (predicted_subfield_image(dec, d, i), d.subfield_image(i)) {
            (Ok(pred), Ok(actual)) => push(id, pred == actual, format!("predicted dim {}, [K_{i}^x] dim {}", pred.dim(), actual.dim())),
            (Err(e), _) | (_, Err(e)) => push(id, false, e.to_string()),
        }
    }

    // Ranks against e_i and the norm-group filtration.
    match (d.e_ranks(), d.norm_filtration()) {
        (Ok(e), Ok(filtration)) => {
            let ranks = dec.y_ranks(n);
            let x_fixed = dec.x_generator.as_ref().map(|x| {
                let len = d.module.length(x) as u64;
                d.module.apply_nil_pow(len.max(1) - 1, x)
            });
            for i in 0..=n {
                let at_m = dec.m == Some(SubfieldIndex::Finite(i));
                let (id, want) = if at_m {
                    ("C2.rank-shift".to_string(), e[i as usize])
                } else {
                    (format!("{cor}.rank[{i}]"), e[i as usize])
                };
                let have = ranks[i as usize] + usize::from(at_m);
                push(id, have == want, format!("level {i}: rank Y = {}, e = {want}", ranks[i as usize]));

                let mut expected = y_sum(d, dec, i).intersect(&d.module.fixed_points(0).unwrap()).unwrap();
                let x_in = matches!(dec.m, Some(SubfieldIndex::Finite(mi)) if i <= mi);
                if let (true, Some(xf)) = (x_in, &x_fixed) {
                    expected = expected.sum(&FpSubspace::span(p, d.dim(), std::slice::from_ref(xf))).unwrap();
                }
                let actual = &filtration[i as usize];
                push(format!("{cor}.norm[{i}]"), expected == *actual, format!("V_{i} dim {}, summand fixed part dim {}", actual.dim(), expected.dim()));
            }
        }
        (Err(e), _) | (_, Err(e)) => push(format!("{cor}.rank"), false, e.to_string()),
    }

    // Block multiset against the rank-sequence Jordan type.
    let jt = d.module.jordan_type();
    let blocks = dec.block_sizes(p);
    push("KS.blocks".into(), jt == blocks, format!("summands {blocks:?}, jordan type {jt:?}"));

    VerifyReport { clauses }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Pass,
    Fail,
    /// The table entry lies outside the hypotheses that define i(K/K_j).
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RestrictionRow {
    pub j: u32,
    pub expected: String,
    pub actual: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Corollary3Report {
    pub m: SubfieldIndex,
    pub restrictions: Vec<RestrictionRow>,
    /// i(K_j/F) for supplied subtower data, j = 1, 2, …
    pub subtowers: Vec<RestrictionRow>,
}

impl Corollary3Report {
    pub fn passed(&self) -> bool {
        self.restrictions.iter().chain(&self.subtowers).all(|r| r.outcome != Outcome::Fail)
    }
}

/// The restriction table for i(K/K_j), and i(K_j/F) = −∞ on supplied
/// subtower data.
pub fn corollary3_check(d: &GaloisDatum, subtowers: &[GaloisDatum]) -> Result<Corollary3Report> {
    let m = d.exceptional_search()?.m;
    let mut restrictions = Vec::new();
    for j in 0..d.n {
        let expected = match m {
            SubfieldIndex::Finite(mi) if j <= mi => SubfieldIndex::Finite(mi - j),
            _ => SubfieldIndex::NegInfinity,
        };
        let r = d.restrict(j)?;
        let row = if r.has_exceptional_hypothesis()? {
            let got = r.exceptional_search()?.m;
            let t3 = r.i_via_theorem3()?;
            let ok = got == expected && t3 == expected;
            RestrictionRow {
                j,
                expected: expected.to_string(),
                actual: got.to_string(),
                outcome: if ok { Outcome::Pass } else { Outcome::Fail },
            }
        } else {
            RestrictionRow { j, expected: expected.to_string(), actual: "n/a".into(), outcome: Outcome::NotApplicable }
        };
        restrictions.push(row);
    }
    let mut sub = Vec::new();
    for (k, t) in subtowers.iter().enumerate() {
        let got = t.exceptional_search()?.m;
        sub.push(RestrictionRow {
            j: k as u32 + 1,
            expected: SubfieldIndex::NegInfinity.to_string(),
            actual: got.to_string(),
            outcome: if got == SubfieldIndex::NegInfinity { Outcome::Pass } else { Outcome::Fail },
        });
    }
    Ok(Corollary3Report { m, restrictions, subtowers: sub })
}
