use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use treeindisc::feq::{build_counterexample, subtree_h, FeqConfig};
use treeindisc::gen::Gen;
use treeindisc::indisc::{check_based_on, check_indiscernible};
use treeindisc::modeling::extract;
use treeindisc::prelude::*;
use treeindisc::qftype::similarity_code;
use treeindisc::ramsey_appendix::{polarized_extract, tree_homogeneous_extract};
use treeindisc::tp_props::{
    check_ktp, check_ktp1, check_ktp2, check_strong_ntp, check_strong_phi_consistency, check_weak_ktp1,
    consistency_delta,
};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "treeindisc", version, about = "Tree-indexed indiscernibles over finite structures")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Report format; only JSON is supported.
    #[arg(long, global = true, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Similarity classes of index tuples of one arity.
    Classify(ClassifyArgs),
    /// Check indiscernibility, and optionally basedness, of a parameter map.
    CheckIndisc(CheckArgs),
    /// Extract indiscernible parameters based on a source.
    Extract(ExtractArgs),
    /// Check a tree property on a formula and parameter map.
    TpCheck(TpArgs),
    /// The function-model 2-TP counterexample and its certificates.
    FeqDemo(FeqArgs),
    /// Homogeneous selections for an explicit coloring.
    Ramsey(RamseyArgs),
    /// A seeded random structure, parameter map and Δ.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Lang {
    S,
    Str,
    Ar,
}

impl From<Lang> for IndexLanguage {
    fn from(l: Lang) -> Self {
        match l {
            Lang::S => IndexLanguage::S,
            Lang::Str => IndexLanguage::Str,
            Lang::Ar => IndexLanguage::Ar,
        }
    }
}

#[derive(Args)]
struct ClassifyArgs {
    /// Tree `H,B` (^{H>}B), or array `ROWS,COLS` under `--lang ar`.
    #[arg(long, value_parser = pair)]
    domain: (u32, u32),
    #[arg(long, value_enum, default_value = "s")]
    lang: Lang,
    #[arg(long, default_value_t = 2)]
    arity: usize,
    /// Use ^{H≥}B.
    #[arg(long)]
    closed: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// JSON with `structure` and `params`, and optionally `delta`.
    #[arg(long)]
    source: PathBuf,
    /// JSON list of Δ-formulas; overrides the source's `delta`.
    #[arg(long)]
    delta: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "s")]
    lang: Lang,
    #[arg(long, default_value_t = 2)]
    arity: usize,
    /// Also check basedness of the source on these parameters (same structure).
    #[arg(long)]
    based_on: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Order,
    S,
    StrFromS,
    Array,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    delta: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    arity: usize,
    /// Tree `H,B` (^{H>}B), or `ROWS,COLS` for array and order modes.
    #[arg(long, value_parser = pair)]
    target: (u32, u32),
    /// JSON list of node tuples for str-from-s; default `[[[], [0]]]`.
    #[arg(long)]
    anchors: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Prop {
    Tp,
    Tp1,
    Wtp1,
    Tp2,
    Strongtp,
    Strongcons,
}

#[derive(Args)]
struct TpArgs {
    #[arg(long, value_enum)]
    property: Prop,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Truncate tree parameters to levels 0..=DEPTH.
    #[arg(long)]
    depth: Option<usize>,
    /// JSON with `structure`, `formula` and `params`.
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Args)]
struct FeqArgs {
    #[arg(long, default_value_t = 4)]
    q: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    branching: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum RamseyMode {
    Polarized,
    Tree,
}

#[derive(Args)]
struct RamseyArgs {
    #[arg(long, value_enum)]
    mode: RamseyMode,
    /// JSON with `arity`, `table` and either `chains` or `domain`.
    #[arg(long)]
    coloring: PathBuf,
    /// Chosen elements per chain, or children per node.
    #[arg(long)]
    target: usize,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    elements: usize,
    /// Comma-separated relation arities.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    arities: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Tree `H,B` (^{H>}B) for the parameter map.
    #[arg(long, value_parser = pair, default_value = "3,3")]
    domain: (u32, u32),
    #[arg(long, default_value_t = 1)]
    tuple_len: usize,
    #[arg(long, default_value_t = 2)]
    delta_size: usize,
}

fn pair(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or("expected two numbers as A,B")?;
    let p = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("{x:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

/// Why a command produced no verdict.
enum Failure {
    Usage(String),
    Insufficient(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InsufficientSource { required_estimate, ref detail } => Failure::Insufficient(json!({
                "error": e.to_string(),
                "kind": "insufficient_source",
                "detail": detail,
                "required_estimate": required_estimate,
            })),
            Error::SearchBudgetExceeded(n) => Failure::Insufficient(json!({
                "error": e.to_string(),
                "kind": "search_budget_exceeded",
                "budget": n,
            })),
            e => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<(bool, Value), Failure>;

/// A file's JSON; reports written by this tool are unwrapped to their body.
fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut v: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if v.get("version").is_some() {
        if let Some(r) = v.get_mut("report") {
            v = r.take();
        }
    }
    Ok(v)
}

fn field<T: for<'de> Deserialize<'de>>(v: &Value, key: &str) -> Result<T, Failure> {
    let x = v.get(key).ok_or_else(|| Failure::Usage(format!("missing field {key:?}")))?;
    serde_json::from_value(x.clone()).map_err(|e| Failure::Usage(format!("{key}: {e}")))
}

struct Source {
    m: RelStructure,
    params: ParameterMap,
    delta: Option<Vec<DeltaFormula>>,
}

fn load_source(path: &Path) -> Result<Source, Failure> {
    let v = read_json(path)?;
    let m: RelStructure = field(&v, "structure")?;
    let params = ParameterMap::from_json(&m, v.get("params").unwrap_or(&Value::Null))?;
    let delta = if v.get("delta").is_some() { Some(field(&v, "delta")?) } else { None };
    Ok(Source { m, params, delta })
}

fn load_delta(src: &Source, path: Option<&Path>) -> Result<Vec<DeltaFormula>, Failure> {
    match path {
        Some(p) => serde_json::from_value(read_json(p)?).map_err(|e| Failure::Usage(format!("delta: {e}"))),
        None => src.delta.clone().ok_or_else(|| Failure::Usage("no Δ: pass --delta or add `delta`".into())),
    }
}

fn tree(h: u32, b: u32, closed: bool) -> Result<TreeDomain, Failure> {
    Ok(TreeDomain::new(h as usize, b, closed)?)
}

fn classify(a: &ClassifyArgs) -> Outcome {
    let lang = IndexLanguage::from(a.lang);
    let shape = match a.lang {
        Lang::Ar => IndexShape::Array { rows: a.domain.0, cols: a.domain.1 },
        _ => IndexShape::Tree(tree(a.domain.0, a.domain.1, a.closed)?),
    };
    shape.validate()?;
    if a.arity == 0 {
        return Err(Failure::Usage("arity must be at least 1".into()));
    }
    let points = shape.points();
    let mut classes: BTreeMap<SimilarityCode, (Vec<IndexPoint>, usize)> = BTreeMap::new();
    let mut err = None;
    treeindisc::indisc::for_each_tuple_of_len(points.len(), a.arity, &mut |idx: &[usize]| {
        let t: Vec<IndexPoint> = idx.iter().map(|&i| points[i].clone()).collect();
        match similarity_code(&t, lang) {
            Ok(c) => classes.entry(c).or_insert((t, 0)).1 += 1,
            Err(e) => {
                err = Some(e);
                return false;
            }
        }
        true
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    let list: Vec<Value> = classes
        .into_iter()
        .map(|(code, (rep, count))| json!({ "representative": rep, "count": count, "code": code }))
        .collect();
    Ok((true, json!({ "index": shape, "lang": lang, "arity": a.arity, "class_count": list.len(), "classes": list })))
}

fn check_indisc(a: &CheckArgs) -> Outcome {
    let src = load_source(&a.source)?;
    let delta = load_delta(&src, a.delta.as_deref())?;
    let lang = IndexLanguage::from(a.lang);
    let r = check_indiscernible(&src.m, &src.params, lang, &delta, a.arity)?;
    let mut verdict = r.verdict;
    let mut out = json!({ "indiscernibility": r });
    if let Some(p) = &a.based_on {
        let other = load_source(p)?;
        let base = ParameterMap::from_json(&src.m, &other.params.to_json(&other.m))?;
        let b = check_based_on(&src.m, &src.params, &base, lang, &delta, a.arity)?;
        verdict &= b.verdict;
        out["basedness"] = serde_json::to_value(&b).expect("serializable");
    }
    Ok((verdict, out))
}

fn run_extract(a: &ExtractArgs) -> Outcome {
    let src = load_source(&a.source)?;
    let delta = load_delta(&src, a.delta.as_deref())?;
    let (mode, target) = match a.mode {
        Mode::S => (ExtractionMode::S, IndexShape::Tree(tree(a.target.0, a.target.1, false)?)),
        Mode::StrFromS => (ExtractionMode::StrFromS, IndexShape::Tree(tree(a.target.0, a.target.1, false)?)),
        Mode::Array => (ExtractionMode::Array, IndexShape::Array { rows: a.target.0, cols: a.target.1 }),
        Mode::Order => (ExtractionMode::Order, IndexShape::Array { rows: a.target.0, cols: a.target.1 }),
    };
    let anchors: Vec<Vec<TreeNode>> = match &a.anchors {
        Some(p) => serde_json::from_value(read_json(p)?).map_err(|e| Failure::Usage(format!("anchors: {e}")))?,
        None => vec![vec![TreeNode::root(), TreeNode::from([0])]],
    };
    let req = ExtractionRequest { mode, source: src.params, delta, max_arity: a.arity, target, anchors };
    let r = extract(&src.m, &req)?;
    // shaped like a source file, so the output can be checked or extracted from again
    Ok((
        r.certified(),
        json!({
            "structure": src.m,
            "delta": req.delta,
            "params": r.output.to_json(&src.m),
            "strategy": r.strategy,
            "embedding_trace": r.embedding_trace,
            "certificates": r.certificates,
        }),
    ))
}

fn truncate(m: &RelStructure, p: ParameterMap, depth: Option<usize>) -> Result<ParameterMap, Failure> {
    let (Some(depth), Some(d)) = (depth, p.shape().tree().copied()) else { return Ok(p) };
    if depth > d.max_level() {
        return Err(Failure::Usage(format!("depth {depth} is beyond the parameters' level {}", d.max_level())));
    }
    let horizon = IndexShape::Tree(TreeDomain::closed(depth, d.branching)?);
    Ok(p.pull_back(m, horizon, |q| q.clone())?)
}

fn tp_check(a: &TpArgs) -> Outcome {
    let v = read_json(&a.spec)?;
    let m: RelStructure = field(&v, "structure")?;
    let formula: SplitFormula = field(&v, "formula")?;
    let params = ParameterMap::from_json(&m, v.get("params").unwrap_or(&Value::Null))?;
    let params = truncate(&m, params, a.depth)?;
    let spec = WitnessSpec { formula, params, k: a.k };
    let r = match a.property {
        Prop::Tp => check_ktp(&m, &spec)?,
        Prop::Tp1 => check_ktp1(&m, &spec)?,
        Prop::Wtp1 => check_weak_ktp1(&m, &spec)?,
        Prop::Tp2 => check_ktp2(&m, &spec)?,
        Prop::Strongtp => check_strong_ntp(&m, &spec, a.k)?,
        Prop::Strongcons => check_strong_phi_consistency(&m, &spec.formula, &spec.params, a.k)?,
    };
    Ok((r.verdict, serde_json::to_value(&r).expect("serializable")))
}

fn feq_demo(a: &FeqArgs) -> Outcome {
    let cfg = FeqConfig::new(a.q, a.classes)?;
    let (m, phi, p) = build_counterexample(&cfg, a.depth, a.branching)?;
    let tp = check_ktp(&m, &WitnessSpec { formula: phi.clone(), params: p.clone(), k: 2 })?;
    let half = a.depth / 2;
    if half == 0 {
        return Err(Failure::Usage("depth must be at least 2 for the stretched copy".into()));
    }
    let q = subtree_h(&m, &p, half)?;
    let based = check_based_on(&m, &q, &p, IndexLanguage::Str, &consistency_delta(&phi, 2), 3)?;
    let strong = check_strong_phi_consistency(&m, &phi, &q, 4)?;
    let tp_copy = check_ktp(&m, &WitnessSpec { formula: phi.clone(), params: q.clone(), k: 2 })?;
    let verdict = tp.verdict && based.verdict && strong.verdict && !tp_copy.verdict;
    Ok((
        verdict,
        json!({
            "config": cfg,
            "structure": m,
            "formula": phi,
            "params": p.to_json(&m),
            "stretched": q.to_json(&m),
            "certificates": {
                "two_tp": tp,
                "stretched_str_based": based,
                "stretched_strongly_consistent": strong,
                "stretched_two_tp": tp_copy,
            },
        }),
    ))
}

fn coloring(v: &Value, ground: usize) -> Result<Coloring, Failure> {
    let arity: usize = field(v, "arity")?;
    let table: Vec<u32> = field(v, "table")?;
    let want = ground.checked_pow(arity as u32).unwrap_or(usize::MAX);
    if table.len() != want {
        return Err(Failure::Usage(format!("table has {} entries, {ground}^{arity} = {want} expected", table.len())));
    }
    let mut it = table.into_iter();
    Ok(Coloring::from_fn(ground, arity, |_| it.next().expect("length checked"))?)
}

fn ramsey(a: &RamseyArgs) -> Outcome {
    let v = read_json(&a.coloring)?;
    let cert = match a.mode {
        RamseyMode::Polarized => {
            let chains = LeveledChains::new(field(&v, "chains")?)?;
            polarized_extract(&chains, &coloring(&v, chains.total())?, a.target)?
        }
        RamseyMode::Tree => {
            let d: TreeDomain = field(&v, "domain")?;
            d.validate()?;
            let target = u32::try_from(a.target).map_err(|_| Failure::Usage("target too large".into()))?;
            tree_homogeneous_extract(&d, &coloring(&v, d.node_count())?, target)?
        }
    };
    Ok((cert.verified, serde_json::to_value(&cert).expect("serializable")))
}

fn generate(a: &GenArgs) -> Outcome {
    if !(0.0..=1.0).contains(&a.density) {
        return Err(Failure::Usage("density must lie in [0, 1]".into()));
    }
    let mut g = Gen::new(a.seed);
    let m = g.structure(a.elements, &a.arities, a.density)?;
    let delta = g.delta(&m, a.delta_size);
    let shape = IndexShape::Tree(tree(a.domain.0, a.domain.1, false)?);
    let p = g.parameter_map(&m, shape, a.tuple_len)?;
    Ok((true, json!({ "seed": a.seed, "structure": m, "params": p.to_json(&m), "delta": delta })))
}

fn emit(out: Option<&Path>, v: &Value) -> bool {
    let text = serde_json::to_string_pretty(v).expect("serializable") + "\n";
    match out {
        Some(p) => fs::write(p, text).map_err(|e| eprintln!("{}: {e}", p.display())).is_ok(),
        None => {
            print!("{text}");
            true
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Format::Json = cli.format;
    let (name, outcome) = match &cli.command {
        Command::Classify(a) => ("classify", classify(a)),
        Command::CheckIndisc(a) => ("check-indisc", check_indisc(a)),
        Command::Extract(a) => ("extract", run_extract(a)),
        Command::TpCheck(a) => ("tp-check", tp_check(a)),
        Command::FeqDemo(a) => ("feq-demo", feq_demo(a)),
        Command::Ramsey(a) => ("ramsey", ramsey(a)),
        Command::Gen(a) => ("gen", generate(a)),
    };
    let (code, body) = match outcome {
        Ok((verdict, report)) => (u8::from(!verdict), json!({ "verdict": verdict, "report": report })),
        Err(Failure::Usage(e)) => (2, json!({ "error": e })),
        Err(Failure::Insufficient(v)) => (3, v),
    };
    let mut doc = json!({ "version": VERSION, "command": name });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    if !emit(cli.output.as_deref(), &doc) {
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
