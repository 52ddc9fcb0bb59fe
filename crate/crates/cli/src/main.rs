use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use pclass_core::datum::{DatumError, GaloisDatum};
use pclass_core::decompose::{corollary3_check, decompose, verify, Decomposition, VerifyReport};
use pclass_core::fp_linalg::FpMatrix;
use pclass_core::gmod::GModule;
use pclass_core::lemmas::{lemma_suite, SuiteOptions};
use pclass_core::local_fields::{build_datum, LocalError, TowerKind, TowerSpec};
use pclass_core::selftest::{self, SelftestOptions};
use pclass_core::synth::{m_field, random_params, synthesize, SynthParams};

#[derive(Parser)]
#[command(name = "pclass", version, about = "Galois-module structure of p-th power classes")]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Build a synthetic datum and its expected-answer sidecar.
    Synth(SynthArgs),
    /// Decompose a datum into X and the Y_i summands.
    Decompose(DecomposeArgs),
    /// Re-check a decomposition against its datum.
    Verify(VerifyArgs),
    /// Run the lemma property suite on a datum.
    Invariants(InvariantsArgs),
    /// Build a p-adic tower and emit its datum.
    Local(LocalArgs),
    /// Print the Jordan block multiset of a raw sigma.
    Jordan(JordanArgs),
    /// Run the full acceptance sweep.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    p: u32,
    #[arg(long)]
    n: u32,
    /// Exceptional index: an integer, "-inf", or "n/a". Omit together
    /// with --e to draw random parameters from --seed.
    #[arg(long)]
    m: Option<String>,
    /// Norm ranks e_0,…,e_n.
    #[arg(long, value_delimiter = ',')]
    e: Option<Vec<usize>>,
    /// Mark ξ_p ∈ F even when m is "n/a" (only legal for p = 2, n = 1).
    #[arg(long)]
    xi: bool,
    /// Whether −1 is a norm; only meaningful for p = 2, n = 1.
    #[arg(long)]
    minus_one_norm: Option<bool>,
    /// Shuffle seed, or the parameter seed when --m/--e are omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Datum path; the sidecar goes next to it as <stem>.sidecar.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// Datum JSON.
    #[arg(long = "in")]
    input: PathBuf,
    /// Decomposition JSON; recomputed from the datum when omitted.
    #[arg(long)]
    dec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct InvariantsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct LocalArgs {
    #[arg(long, required_unless_present = "input")]
    p: Option<u32>,
    #[arg(long, required_unless_present = "input")]
    kind: Option<TowerKind>,
    #[arg(long, required_unless_present = "input")]
    n: Option<u32>,
    #[arg(long)]
    precision: Option<u32>,
    /// Tower spec JSON instead of the flags above.
    #[arg(long = "in", conflicts_with_all = ["p", "kind", "n", "precision"])]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct JordanArgs {
    /// JSON object {"p", "n", "sigma": rows}.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = selftest::SWEEP_DIM_CAP)]
    dim_cap: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

enum Failure {
    Verification(String),
    Invalid(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(s) | Failure::Invalid(s) | Failure::Internal(s) => s,
        }
    }
}

impl From<DatumError> for Failure {
    fn from(e: DatumError) -> Self {
        match e {
            DatumError::Inconsistent(_) | DatumError::NoExceptional => Failure::Internal(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<LocalError> for Failure {
    fn from(e: LocalError) -> Self {
        match e {
            LocalError::Internal(_) | LocalError::Datum(DatumError::Inconsistent(_)) => Failure::Internal(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => fs::write(path, format!("{text}\n")).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_datum(path: &Path) -> Result<GaloisDatum, Failure> {
    let d = GaloisDatum::from_json(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let violations = d.validate();
    if let Some(v) = violations.first() {
        return Err(Failure::Invalid(format!("{}: invalid datum: {v} ({} violations)", path.display(), violations.len())));
    }
    Ok(d)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.sidecar.json"))
}

fn cmd_synth(a: SynthArgs) -> Outcome {
    let params = match (&a.m, &a.e) {
        (None, None) => random_params(a.p, a.n, a.seed.unwrap_or(0)).map_err(|e| Failure::Invalid(e.to_string()))?,
        (Some(m), Some(e)) => {
            let m = m_field::parse(m).ok_or_else(|| Failure::Invalid(format!("--m: cannot parse {m:?}")))?;
            SynthParams {
                p: a.p,
                n: a.n,
                m,
                e: e.clone(),
                xi_in_f: m.is_some() || a.xi,
                minus_one_is_norm: a.minus_one_norm,
                shuffle_seed: a.seed,
            }
        }
        _ => return Err(Failure::Invalid("--m and --e must be given together".into())),
    };
    let d = synthesize(&params).map_err(|e| Failure::Invalid(e.to_string()))?;
    let sidecar = serde_json::to_string_pretty(&params.sidecar()).expect("sidecar serializes");
    match &a.out {
        Some(out) => {
            write_or_print(Some(out), &d.to_json_pretty())?;
            write_or_print(Some(&sidecar_path(out)), &sidecar)
        }
        None => write_or_print(None, &d.to_json_pretty()),
    }
}

fn block_multiset(blocks: &[usize]) -> String {
    let mut sorted = blocks.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let parts: Vec<String> = sorted.iter().map(usize::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

fn cmd_decompose(a: DecomposeArgs) -> Outcome {
    let d = load_datum(&a.input)?;
    let dec = decompose(&d)?;
    if let Some(out) = &a.out {
        write_or_print(Some(out), &dec.to_json())?;
    }
    match a.format {
        Format::Json => {
            if a.out.is_none() {
                println!("{}", dec.to_json());
            }
        }
        Format::Table => {
            let e = d.e_ranks()?;
            let m = dec.m.map_or("n/a".to_string(), |m| m.to_string());
            println!("case       {}", if dec.m.is_some() { "X + Y" } else { "Y only" });
            println!("m          {m}");
            println!("e          {e:?}");
            println!("rank Y     {:?}", dec.y_ranks(d.n));
            if let Some(x) = &dec.x_generator {
                println!("dim X      {}", d.module.length(x));
            }
            println!("blocks     {}", block_multiset(&dec.block_sizes(d.p)));
            if dec.m.is_some() {
                let rep = corollary3_check(&d, &[])?;
                for r in &rep.restrictions {
                    println!("i(K/K_{})   {} (expected {}, {:?})", r.j, r.actual, r.expected, r.outcome);
                }
            }
        }
    }
    Ok(())
}

fn emit_report(report: &VerifyReport, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(report).expect("report serializes")),
        Format::Table => print!("{report}"),
    }
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    let d = load_datum(&a.input)?;
    let dec = match &a.dec {
        Some(path) => {
            Decomposition::from_json(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?
        }
        None => decompose(&d)?,
    };
    let report = verify(&dec, &d);
    emit_report(&report, a.format);
    if report.passed() {
        Ok(())
    } else {
        let ids: Vec<&str> = report.failures().map(|c| c.id.as_str()).collect();
        Err(Failure::Verification(format!("failed clauses: {}", ids.join(", "))))
    }
}

fn cmd_invariants(a: InvariantsArgs) -> Outcome {
    let d = load_datum(&a.input)?;
    let report = lemma_suite(&d, SuiteOptions { seed: a.seed, ..SuiteOptions::default() })?;
    emit_report(&report, a.format);
    if report.passed() {
        Ok(())
    } else {
        let ids: Vec<&str> = report.failures().map(|c| c.id.as_str()).collect();
        Err(Failure::Internal(format!("lemma clauses fail: {}", ids.join(", "))))
    }
}

fn cmd_local(a: LocalArgs) -> Outcome {
    let spec = match &a.input {
        Some(path) => serde_json::from_str::<TowerSpec>(&read(path)?)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?,
        None => match (a.p, a.kind, a.n) {
            (Some(p), Some(kind), Some(n)) => TowerSpec { p, kind, n, precision: a.precision },
            _ => return Err(Failure::Invalid("--p, --kind and --n are required without --in".into())),
        },
    };
    let tower = spec.build()?;
    let d = build_datum(&tower)?;
    write_or_print(a.out.as_deref(), &d.to_json_pretty())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSigma {
    p: u32,
    n: u32,
    sigma: Vec<Vec<u32>>,
}

fn cmd_jordan(a: JordanArgs) -> Outcome {
    let raw: RawSigma =
        serde_json::from_str(&read(&a.input)?).map_err(|e| Failure::Invalid(format!("{}: {e}", a.input.display())))?;
    let dim = raw.sigma.len();
    let sigma = FpMatrix::from_rows(raw.p, dim, &raw.sigma).map_err(|e| Failure::Invalid(format!("sigma: {e}")))?;
    let module = GModule::new(raw.p, raw.n, sigma).map_err(|e| Failure::Invalid(format!("sigma: {e}")))?;
    println!("{}", block_multiset(&module.jordan_type()));
    Ok(())
}

fn cmd_selftest(a: SelftestArgs) -> Outcome {
    let results = selftest::run(SelftestOptions { dim_cap: a.dim_cap, seed: a.seed });
    for r in &results {
        match a.format {
            Format::Table => println!("{r}"),
            Format::Json => println!(
                "{}",
                serde_json::json!({ "criterion": r.id, "name": r.name, "passed": r.passed, "detail": r.detail })
            ),
        }
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{failed} criteria failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Invariants(a) => cmd_invariants(a),
        Command::Local(a) => cmd_local(a),
        Command::Jordan(a) => cmd_jordan(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
