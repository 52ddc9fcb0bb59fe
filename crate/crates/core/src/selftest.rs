//! The acceptance sweep: synthetic round trips, oracles, lemma checks and
//! the local-field instances, one result per criterion.

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::datum::{GaloisDatum, SubfieldIndex};
use crate::decompose::{corollary3_check, decompose, verify, Decomposition, Outcome};
use crate::lemmas::{self, SuiteOptions};
use crate::local_fields::{build_datum, make_tower, root_norm_crosscheck, sample_normcond_instance, TowerKind};
use crate::synth::{sweep_params, synthesize, SynthParams};

pub const SWEEP_PRIMES: [u32; 3] = [2, 3, 5];
pub const SWEEP_HEIGHTS: [u32; 3] = [1, 2, 3];
pub const SWEEP_RANK_CAP: usize = 2;
pub const SWEEP_DIM_CAP: u64 = 120;
pub const FREE_MODULES_PER_CASE: usize = 200;
pub const NORMCOND_SAMPLES: u64 = 20;

#[derive(Debug, Clone, Copy)]
pub struct SelftestOptions {
    pub dim_cap: u64,
    pub seed: u64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions { dim_cap: SWEEP_DIM_CAP, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} criterion {} {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// One synthesized sweep instance with its decomposition.
pub struct Instance {
    pub params: SynthParams,
    pub datum: GaloisDatum,
    pub decomposition: Result<Decomposition, String>,
}

/// Every sweep parameter set, unshuffled then shuffled, keyed by order.
pub fn sweep(dim_cap: u64) -> Vec<SynthParams> {
    let mut out = Vec::new();
    for p in SWEEP_PRIMES {
        for n in SWEEP_HEIGHTS {
            let base = sweep_params(p, n, SWEEP_RANK_CAP, dim_cap);
            for (k, sp) in base.iter().enumerate() {
                out.push(sp.clone());
                let mut shuffled = sp.clone();
                shuffled.shuffle_seed = Some(((p as u64) << 40) ^ ((n as u64) << 32) ^ k as u64);
                out.push(shuffled);
            }
        }
    }
    out
}

pub fn build_instances(params: Vec<SynthParams>) -> Result<Vec<Instance>, String> {
    params
        .into_par_iter()
        .map(|sp| {
            let datum = synthesize(&sp).map_err(|e| format!("{sp:?}: {e}"))?;
            let decomposition = decompose(&datum).map_err(|e| e.to_string());
            Ok(Instance { params: sp, datum, decomposition })
        })
        .collect()
}

fn timed(id: u32, name: &'static str, body: impl FnOnce() -> (bool, String)) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = body();
    CriterionResult { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn first_failure(fails: Vec<String>, total: usize, what: &str) -> (bool, String) {
    match fails.first() {
        None => (true, format!("{total} {what}, 0 failures")),
        Some(f) => (false, format!("{} of {total} {what} failed; first: {f}", fails.len())),
    }
}

fn round_trip(instances: &[Instance]) -> Vec<String> {
    instances
        .par_iter()
        .filter_map(|inst| {
            let sp = &inst.params;
            let dec = match &inst.decomposition {
                Ok(d) => d,
                Err(e) => return Some(format!("{sp:?}: {e}")),
            };
            let ranks = inst.datum.e_ranks().map_err(|e| e.to_string());
            if dec.m != sp.m || dec.y_ranks(sp.n) != sp.y_ranks() || ranks.as_ref() != Ok(&sp.e) {
                return Some(format!("{sp:?}: got m {:?}, ranks {:?}", dec.m, dec.y_ranks(sp.n)));
            }
            let report = verify(dec, &inst.datum);
            (!report.passed()).then(|| format!("{sp:?}: {}", report.failures().next().map(|c| c.id.as_str()).unwrap_or("")))
        })
        .collect()
}

fn krull_schmidt(instances: &[Instance]) -> Vec<String> {
    instances
        .par_iter()
        .filter_map(|inst| {
            let dec = inst.decomposition.as_ref().ok()?;
            let mut blocks = dec.block_sizes(inst.params.p);
            blocks.sort_unstable_by(|a, b| b.cmp(a));
            let jordan = inst.datum.module.jordan_type();
            (blocks != jordan).then(|| format!("{:?}: blocks {blocks:?} vs {jordan:?}", inst.params))
        })
        .collect()
}

fn index_agreement(d: &GaloisDatum) -> Result<bool, String> {
    if !d.has_exceptional_hypothesis().map_err(|e| e.to_string())? {
        return Ok(true);
    }
    let search = d.exceptional_search().map_err(|e| e.to_string())?;
    let classes = d.i_via_theorem3().map_err(|e| e.to_string())?;
    Ok(search.m == classes)
}

fn rank_identities(inst: &Instance) -> Option<String> {
    let dec = inst.decomposition.as_ref().ok()?;
    let sp = &inst.params;
    let e = inst.datum.e_ranks().ok()?;
    let y = dec.y_ranks(sp.n);
    for i in 0..=sp.n as usize {
        let shift = usize::from(dec.m == Some(SubfieldIndex::Finite(i as u32)));
        if e[i] != y[i] + shift {
            return Some(format!("{sp:?}: e_{i} = {}, rank Y_{i} = {}", e[i], y[i]));
        }
    }
    let report = verify(dec, &inst.datum);
    let clauses: Vec<_> = report.clauses.iter().filter(|c| c.id.starts_with("C1.") || c.id.starts_with("C2.")).collect();
    if clauses.is_empty() {
        return Some(format!("{sp:?}: no corollary clauses"));
    }
    clauses.iter().find(|c| !c.passed).map(|c| format!("{sp:?}: {} {}", c.id, c.detail))
}

fn restriction_table(inst: &Instance) -> Option<String> {
    inst.params.m?;
    match corollary3_check(&inst.datum, &[]) {
        Err(e) => Some(format!("{:?}: {e}", inst.params)),
        Ok(rep) if !rep.passed() => Some(format!("{:?}: {:?}", inst.params, rep.restrictions)),
        Ok(rep) => rep
            .restrictions
            .iter()
            .find(|r| r.outcome == Outcome::NotApplicable && !(inst.params.p == 2 && r.j + 1 == inst.params.n))
            .map(|r| format!("{:?}: unexpected n/a at j = {}", inst.params, r.j)),
    }
}

fn local_instances() -> (bool, String) {
    let run = || -> Result<String, String> {
        let err = |e: crate::local_fields::LocalError| e.to_string();
        let mut notes = Vec::new();

        let t = make_tower(3, TowerKind::Unramified, 1, Some(40)).map_err(err)?;
        let d = build_datum(&t).map_err(err)?;
        let dec = decompose(&d).map_err(|e| e.to_string())?;
        let mut blocks = dec.block_sizes(3);
        blocks.sort_unstable_by(|a, b| b.cmp(a));
        let e = d.e_ranks().map_err(|e| e.to_string())?;
        let dim_formula = t.summary().iter().all(|s| s.class_dim == s.formula_dim);
        if d.dim() != 4 || dec.m.is_some() || blocks != [3, 1] || e != [1, 1] || !verify(&dec, &d).passed() || !dim_formula {
            return Err(format!("(a) dim {}, m {:?}, blocks {blocks:?}, e {e:?}", d.dim(), dec.m));
        }
        notes.push("(a) dim 4, blocks {3,1}, e (1,1)".to_string());

        let t = make_tower(3, TowerKind::Cyclotomic, 1, Some(60)).map_err(err)?;
        let d = build_datum(&t).map_err(err)?;
        let dec = decompose(&d).map_err(|e| e.to_string())?;
        let m = dec.m.ok_or("(b) expected an exceptional summand")?;
        let x_len = dec.x_generator.as_ref().map(|x| d.module.length(x) as u64);
        let dim_formula = t.summary().iter().all(|s| s.class_dim == s.formula_dim);
        if d.dim() != 8
            || !d.validate().is_empty()
            || x_len != Some(m.ppow(3) + 1)
            || !verify(&dec, &d).passed()
            || index_agreement(&d) != Ok(true)
            || !dim_formula
        {
            return Err(format!("(b) dim {}, m {m}, dim X {x_len:?}", d.dim()));
        }
        notes.push(format!("(b) dim 8, m = {m}, dim X = {}", m.ppow(3) + 1));

        for (p, kind, n) in [(3, TowerKind::Unramified, 1), (3, TowerKind::Cyclotomic, 1), (3, TowerKind::Cyclotomic, 2)] {
            let base = make_tower(p, kind, n, None).map_err(err)?;
            let more = make_tower(p, kind, n, Some(base.precision() + 5)).map_err(err)?;
            if build_datum(&base).map_err(err)?.to_json() != build_datum(&more).map_err(err)?.to_json() {
                return Err(format!("(c) p={p} {kind} n={n} changes with precision"));
            }
        }
        notes.push("(c) 3 towers stable at +5 digits".to_string());
        Ok(notes.join("; "))
    };
    match run() {
        Ok(s) => (true, s),
        Err(s) => (false, s),
    }
}

/// Local towers used for the exceptional-index agreement check.
pub const LOCAL_TOWERS: [(u32, TowerKind, u32); 6] = [
    (3, TowerKind::Unramified, 1),
    (3, TowerKind::Unramified, 2),
    (3, TowerKind::Cyclotomic, 1),
    (3, TowerKind::Cyclotomic, 2),
    (5, TowerKind::Cyclotomic, 1),
    (2, TowerKind::Cyclotomic, 2),
];

fn lemma_sweep(instances: &[Instance], seed: u64) -> (bool, String) {
    let outcomes: Vec<Result<Vec<String>, String>> = instances
        .par_iter()
        .enumerate()
        .map(|(k, inst)| {
            let opts = SuiteOptions { seed: seed ^ k as u64, free_modules: 0, norm_samples: 48 };
            match lemmas::lemma_suite(&inst.datum, opts) {
                Err(e) => Err(format!("{:?}: {e}", inst.params)),
                Ok(r) => {
                    if let Some(c) = r.failures().next() {
                        return Err(format!("{:?}: {} {}", inst.params, c.id, c.detail));
                    }
                    Ok(r.clauses.into_iter().map(|c| c.id).filter(|id| id.starts_with("NE.")).collect())
                }
            }
        })
        .collect();
    let fails: Vec<&String> = outcomes.iter().filter_map(|o| o.as_ref().err()).collect();
    if let Some(f) = fails.first() {
        return (false, format!("{} instances failed; first: {f}", fails.len()));
    }
    // Each norm-equation family must have met its hypotheses somewhere.
    let exercised: BTreeSet<&str> = outcomes.iter().flatten().flatten().map(String::as_str).collect();
    if let Some(f) = lemmas::NormFamily::ALL.iter().find(|f| !exercised.contains(f.id())) {
        return (false, format!("{} never had its hypotheses met", f.id()));
    }

    // Free submodules: cycle through each case's instances until enough
    // have been drawn.
    let mut free_notes = Vec::new();
    for p in SWEEP_PRIMES {
        for n in SWEEP_HEIGHTS {
            let mut pool: Vec<&Instance> = instances
                .iter()
                .filter(|i| i.params.p == p && i.params.n == n && i.params.e[n as usize] > 0)
                .collect();
            // A free summand of dimension p^n may not fit under the sweep cap.
            let extra;
            if pool.is_empty() {
                extra = match free_instance(p, n) {
                    Ok(inst) => inst,
                    Err(e) => return (false, e),
                };
                pool.push(&extra);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((p as u64) << 8) ^ n as u64);
            let mut drawn = 0;
            let mut stalls = 0;
            'outer: while drawn < FREE_MODULES_PER_CASE && stalls < pool.len() {
                for inst in &pool {
                    match lemmas::submodule_subfield(&inst.datum, &mut rng, 1) {
                        Err(e) => return (false, format!("{:?}: {e}", inst.params)),
                        Ok((0, _)) => stalls += 1,
                        Ok((_, clauses)) => {
                            stalls = 0;
                            drawn += 1;
                            if clauses.iter().any(|c| !c.passed) {
                                return (false, format!("{:?}: free submodule breaks SS.free", inst.params));
                            }
                        }
                    }
                    if drawn == FREE_MODULES_PER_CASE {
                        break 'outer;
                    }
                }
            }
            if drawn < FREE_MODULES_PER_CASE {
                return (false, format!("p={p} n={n}: only {drawn} free submodules found"));
            }
            free_notes.push(format!("{p}/{n}"));
        }
    }
    (
        true,
        format!(
            "{} instances, {} norm-equation families exercised, {FREE_MODULES_PER_CASE} free submodules for each of {} (p,n) cases",
            instances.len(),
            exercised.len(),
            free_notes.len()
        ),
    )
}

/// Shuffled instance J = Y_0 ⊕ Y_n with one block each.
fn free_instance(p: u32, n: u32) -> Result<Instance, String> {
    let mut e = vec![0; n as usize + 1];
    e[0] = 1;
    e[n as usize] = 1;
    let sp = SynthParams { p, n, m: None, e, xi_in_f: false, minus_one_is_norm: None, shuffle_seed: Some(p as u64 * 1000 + n as u64) };
    let mut built = build_instances(vec![sp])?;
    Ok(built.remove(0))
}

fn normcond() -> (bool, String) {
    let mut total = 0;
    for n in [1u32, 2] {
        let t = match make_tower(3, TowerKind::Cyclotomic, n, None) {
            Ok(t) => t,
            Err(e) => return (false, e.to_string()),
        };
        for seed in 0..NORMCOND_SAMPLES {
            let i = (seed % n as u64) as u32;
            let ok = sample_normcond_instance(&t, i, seed).and_then(|(a, g, k)| root_norm_crosscheck(&t, &a, &g, &k, i));
            match ok {
                Ok(true) => total += 1,
                Ok(false) => return (false, format!("n={n} seed={seed}: sides differ")),
                Err(e) => return (false, format!("n={n} seed={seed}: {e}")),
            }
        }
    }
    (true, format!("{total} samples over p=3, n=1,2"))
}

/// Runs every criterion in order.
pub fn run(opts: SelftestOptions) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    let mut instances = Vec::new();
    out.push(timed(1, "round-trip sweep", || match build_instances(sweep(opts.dim_cap)) {
        Err(e) => (false, e),
        Ok(built) => {
            instances = built;
            let fails = round_trip(&instances);
            let (ok, detail) = first_failure(fails, instances.len(), "instances");
            (ok && instances.len() >= 500, detail)
        }
    }));

    out.push(timed(2, "Krull-Schmidt oracle", || first_failure(krull_schmidt(&instances), instances.len(), "instances")));

    out.push(timed(3, "exceptional index agreement", || {
        let mut fails: Vec<String> = instances
            .par_iter()
            .filter_map(|inst| match index_agreement(&inst.datum) {
                Ok(true) => None,
                Ok(false) => Some(format!("{:?}: search and class test differ", inst.params)),
                Err(e) => Some(format!("{:?}: {e}", inst.params)),
            })
            .collect();
        for (p, kind, n) in LOCAL_TOWERS {
            let verdict = make_tower(p, kind, n, None)
                .and_then(|t| build_datum(&t))
                .map_err(|e| e.to_string())
                .and_then(|d| index_agreement(&d));
            if verdict != Ok(true) {
                fails.push(format!("local p={p} {kind} n={n}: {verdict:?}"));
            }
        }
        first_failure(fails, instances.len() + LOCAL_TOWERS.len(), "instances")
    }));

    out.push(timed(4, "rank and norm-image identities", || {
        let fails = instances.par_iter().filter_map(rank_identities).collect();
        first_failure(fails, instances.len(), "instances")
    }));

    out.push(timed(5, "restriction table", || {
        let fails: Vec<String> = instances.par_iter().filter_map(restriction_table).collect();
        let with_x = instances.iter().filter(|i| i.params.m.is_some()).count();
        let (mut ok, mut detail) = first_failure(fails, with_x, "exceptional instances");
        let sub = make_tower(3, TowerKind::Cyclotomic, 2, None)
            .and_then(|t| build_datum(&t))
            .and_then(|full| Ok((full, build_datum(&make_tower(3, TowerKind::Cyclotomic, 1, None)?)?)));
        match sub.map_err(|e| e.to_string()).and_then(|(full, sub)| corollary3_check(&full, &[sub]).map_err(|e| e.to_string())) {
            Ok(rep) if rep.passed() && rep.subtowers.iter().all(|r| r.actual == "-inf") => {
                detail.push_str("; cyclotomic 3-adic n=2 subtower has i = -inf");
            }
            other => {
                ok = false;
                detail.push_str(&format!("; subtower check failed: {other:?}"));
            }
        }
        (ok, detail)
    }));

    out.push(timed(6, "local-field instances", local_instances));
    out.push(timed(7, "lemma property suite", || lemma_sweep(&instances, opts.seed)));
    out.push(timed(8, "root-norm identity", normcond));
    out
}
