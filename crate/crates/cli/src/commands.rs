//! Command execution and artifact emission.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use caplab::bounds::{
    deep_elementwise_bound, deep_general_bound, exp_class_sample_bound, shatter_lower_bound, sgd_sample_bound,
    smooth_one_layer_bound, BoundReport, DeepElementwise, FormulaId, SmoothOneLayer,
};
use caplab::complexity::{
    cover_bound, dudley_bound, rademacher_linear_closed_form, rademacher_mc, random_unit_points, CoverFormula,
    CoverKind, DudleyGrid, FunctionClass, RademacherEstimate, SupStrategy, DUDLEY_GRID_POINTS,
};
use caplab::constructions::{
    convex_instance, verify_shattering, ConstructionParams, InstanceManifest, DEFAULT_MAX_RESAMPLES,
};
use caplab::learner::{excess_risk_experiment, uc_gap_experiment};
use caplab::real_string::format as real;
use caplab::rng::derive_seed;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig, UsageError};

/// Exit code for a run whose artifacts disprove the property it checks.
pub const EXIT_DISPROVED: i32 = 2;
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug)]
pub enum DispatchError {
    Usage(UsageError),
    Lib(caplab::Error),
    Io(String),
}

impl std::fmt::Display for DispatchError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DispatchError::Usage(e) => write!(f, "{e}"),
            DispatchError::Lib(e) => write!(f, "{e}"),
            DispatchError::Io(e) => f.write_str(e),
        }
    }
}

impl std::error::Error for DispatchError {}

impl From<caplab::Error> for DispatchError {
    fn from(e: caplab::Error) -> Self {
        DispatchError::Lib(e)
    }
}

impl From<UsageError> for DispatchError {
    fn from(e: UsageError) -> Self {
        DispatchError::Usage(e)
    }
}

type Res<T> = Result<T, DispatchError>;

fn usage(msg: impl Into<String>) -> DispatchError {
    DispatchError::Usage(UsageError(msg.into()))
}

/// Rows of a CSV table, every cell already formatted.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_bytes(&self) -> Res<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| DispatchError::Io(format!("csv encoding failed: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| DispatchError::Io(format!("csv encoding failed: {e}")))
    }
}

struct Outcome {
    table: Table,
    results: Value,
    disproved: bool,
    extra: Vec<(&'static str, Value)>,
}

/// Runs the command and writes `manifest.json` and `results.csv`; returns
/// the process exit code. `CAPLAB_THREADS` sizes the worker pool (0 or unset
/// means one worker per core).
pub fn dispatch(cfg: &RunConfig) -> Res<i32> {
    let threads = match std::env::var("CAPLAB_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| usage(format!("CAPLAB_THREADS must be an integer, got {v:?}")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| DispatchError::Io(format!("cannot start worker pool: {e}")))?;
    let outcome = pool.install(|| run(cfg))?;

    let mut manifest = serde_json::Map::new();
    manifest.insert("tool".into(), json!(concat!("caplab ", env!("CARGO_PKG_VERSION"))));
    manifest.insert("config".into(), cfg.to_json());
    for (k, v) in outcome.extra {
        manifest.insert(k.into(), v);
    }
    manifest.insert("results".into(), outcome.results);
    manifest.insert("disproved".into(), json!(outcome.disproved));
    let text = serde_json::to_string_pretty(&Value::Object(manifest)).expect("JSON values serialize");

    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| DispatchError::Io(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
    write_atomic(&cfg.output_dir.join("results.csv"), &outcome.table.to_bytes()?)?;
    write_atomic(&cfg.output_dir.join("manifest.json"), format!("{text}\n").as_bytes())?;
    Ok(if outcome.disproved { EXIT_DISPROVED } else { 0 })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Res<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let err = |e: std::io::Error| DispatchError::Io(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

fn run(cfg: &RunConfig) -> Res<Outcome> {
    match cfg.command {
        Command::Construct => construct(cfg),
        Command::Verify => verify(cfg),
        Command::Rademacher => rademacher(cfg),
        Command::Cover => cover(cfg),
        Command::Dudley => dudley(cfg),
        Command::Sgd => sgd(cfg),
        Command::UcGap => uc_gap(cfg),
        Command::Bounds => bounds(cfg),
    }
}

fn get_u64(cfg: &RunConfig, k: &str) -> u64 {
    cfg.u64(k).expect("defaulted key")
}

fn get_usize(cfg: &RunConfig, k: &str) -> Res<usize> {
    usize::try_from(get_u64(cfg, k)).map_err(|_| usage(format!("key `{k}` is too large")))
}

fn get_f64(cfg: &RunConfig, k: &str) -> f64 {
    cfg.f64(k).expect("defaulted key")
}

fn construct(cfg: &RunConfig) -> Res<Outcome> {
    let m = get_usize(cfg, "m")?;
    let eps = get_f64(cfg, "eps");
    let params = match cfg.str("kind").expect("required key") {
        "zero-init" => ConstructionParams::ZeroInit {
            b: get_f64(cfg, "B"),
            l: get_f64(cfg, "L"),
            eps,
            m,
            seed: cfg.seed,
            max_resamples: cfg.u64("max_resamples").map_or(DEFAULT_MAX_RESAMPLES, |v| v as usize),
        },
        "nonzero-init" => ConstructionParams::NonzeroInit { m, eps },
        "convex" => ConstructionParams::Convex { m, eps, kappa: get_f64(cfg, "kappa") },
        other => return Err(usage(format!("unknown instance kind {other:?}; expected zero-init, nonzero-init or convex"))),
    };
    let (man, _) = InstanceManifest::create(params, cfg.bool("rescale").unwrap_or(false))?;
    let mut table = Table::new(&["kind", "m", "eps", "d", "n", "B", "W0_norm", "domain_radius", "witness_size"]);
    table.push(vec![
        man.kind.name().into(),
        man.m.to_string(),
        real(man.eps),
        man.d.to_string(),
        man.n.to_string(),
        real(man.radius),
        real(man.w0_norm),
        real(man.domain_radius),
        man.witness_fn.size.to_string(),
    ]);
    Ok(Outcome {
        table,
        results: json!({ "built": true }),
        disproved: false,
        extra: vec![("instance", serde_json::to_value(&man).expect("manifest serializes"))],
    })
}

/// Reads an instance manifest, either bare or nested under `instance`.
fn load_instance(path: &str) -> Res<InstanceManifest> {
    let text = fs::read_to_string(path).map_err(|e| DispatchError::Io(format!("cannot read {path}: {e}")))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{path} is not valid JSON: {e}")))?;
    let inner = v.get("instance").cloned().unwrap_or(v);
    serde_json::from_value(inner).map_err(|e| usage(format!("{path} is not an instance manifest: {e}")))
}

fn verify(cfg: &RunConfig) -> Res<Outcome> {
    let man = load_instance(cfg.str("instance").expect("required key"))?;
    let inst = man.regenerate()?;
    let r = verify_shattering(&inst)?;
    let mut table = Table::new(&[
        "pass",
        "worst_slack",
        "labelings",
        "checks",
        "failure_count",
        "max_offset_norm",
        "radius_ok",
        "W0_norm_measured",
        "W0_norm_ok",
    ]);
    table.push(vec![
        r.pass.to_string(),
        real(r.worst_slack),
        r.labelings.to_string(),
        r.checks.to_string(),
        r.failure_count.to_string(),
        real(r.max_offset_norm),
        r.radius_ok.to_string(),
        real(r.w0_norm_measured),
        r.w0_norm_ok.to_string(),
    ]);
    Ok(Outcome {
        table,
        results: serde_json::to_value(&r).expect("report serializes"),
        disproved: !r.pass,
        extra: vec![("instance", serde_json::to_value(&man).expect("manifest serializes"))],
    })
}

fn estimate_table(id: &str, est: &RademacherEstimate) -> Table {
    let mut t = Table::new(&["id", "m", "draws", "mean", "stderr", "strategy"]);
    t.push(vec![
        id.into(),
        est.m.to_string(),
        est.draws.to_string(),
        real(est.mean),
        real(est.stderr),
        est.sup_strategy.name().into(),
    ]);
    t
}

fn rademacher(cfg: &RunConfig) -> Res<Outcome> {
    let draws = get_usize(cfg, "draws")?;
    let strategy: Option<SupStrategy> = cfg.str("strategy").map(str::parse).transpose()?;
    let id = cfg.str("id").unwrap_or("run");
    let est = if let Some(path) = cfg.str("instance") {
        let inst = load_instance(path)?.regenerate()?;
        let class = FunctionClass::Instance(&inst);
        let s = strategy.unwrap_or(class.default_strategy());
        rademacher_mc(&class, draws, cfg.seed, s)?
    } else {
        let (m, dim) = (get_usize(cfg, "m")?, get_usize(cfg, "dim")?);
        let points = match cfg.str("points").unwrap_or("orthonormal") {
            "orthonormal" => {
                if m > dim {
                    return Err(usage(format!("{m} orthonormal points do not fit in dimension {dim}")));
                }
                (0..m).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
            }
            "random" => random_unit_points(m, dim, derive_seed(cfg.seed, 1))?,
            other => return Err(usage(format!("unknown point set {other:?}; expected orthonormal or random"))),
        };
        let radius = get_f64(cfg, "B");
        match strategy.unwrap_or(SupStrategy::LinearClosedForm) {
            SupStrategy::LinearClosedForm => rademacher_linear_closed_form(&points, radius, draws, cfg.seed)?,
            s => rademacher_mc(&FunctionClass::LinearBall { points: &points, radius }, draws, cfg.seed, s)?,
        }
    };
    Ok(Outcome {
        table: estimate_table(id, &est),
        results: serde_json::to_value(&est).expect("estimate serializes"),
        disproved: false,
        extra: Vec::new(),
    })
}

fn formula(cfg: &RunConfig) -> Res<CoverFormula> {
    let kind: CoverKind = cfg.str("formula").expect("required key").parse()?;
    let mut params = BTreeMap::new();
    for k in ["B", "b_x", "r", "L", "k", "c"] {
        if let Some(v) = cfg.f64(k) {
            params.insert(k.to_string(), v);
        }
    }
    Ok(CoverFormula { kind, params })
}

fn cover(cfg: &RunConfig) -> Res<Outcome> {
    let f = formula(cfg)?;
    let mut table = Table::new(&["formula", "eps", "log_cover", "envelope"]);
    let mut results = Vec::new();
    for eps in cfg.f64_list("eps").expect("defaulted key") {
        let at = f.at_scale(eps);
        let v = cover_bound(&at)?;
        let env = at.envelope()?;
        table.push(vec![f.kind.name().into(), real(eps), real(v), env.map(real).unwrap_or_default()]);
        results.push(json!({ "eps": eps, "log_cover": v, "envelope": env }));
    }
    Ok(Outcome { table, results: json!({ "formula": f, "rows": results }), disproved: false, extra: Vec::new() })
}

fn dudley(cfg: &RunConfig) -> Res<Outcome> {
    let f = formula(cfg)?;
    let range = match cfg.f64("range") {
        Some(r) => r,
        None => {
            let b = f.params.get("B").copied().ok_or_else(|| usage("dudley needs `range` or `B`"))?;
            b * f.params.get("L").copied().unwrap_or(1.0)
        }
    };
    let grid = match cfg.f64_list("grid") {
        Some(g) => DudleyGrid::Explicit(g),
        None => DudleyGrid::LogSpaced {
            points: cfg.u64("grid_points").map_or(DUDLEY_GRID_POINTS, |v| v as usize),
            floor: 1e-4,
        },
    };
    // Scales where the formula is undefined count as infinite entropy.
    let log_cover = |tau: f64| cover_bound(&f.at_scale(tau)).unwrap_or(f64::INFINITY);
    let mut table = Table::new(&["formula", "m", "value", "argmin", "panels", "grid_points"]);
    let mut results = Vec::new();
    for m in cfg.u64_list("m").expect("defaulted key") {
        let r = dudley_bound(&log_cover, range, m as f64, &grid)?;
        table.push(vec![
            f.kind.name().into(),
            m.to_string(),
            real(r.value),
            real(r.argmin),
            r.panels.to_string(),
            r.grid_points.to_string(),
        ]);
        results.push(json!({ "m": m, "result": r }));
    }
    Ok(Outcome {
        table,
        results: json!({ "formula": f, "range": range, "grid": grid, "rows": results }),
        disproved: false,
        extra: Vec::new(),
    })
}

fn seed_list(cfg: &RunConfig) -> Vec<u64> {
    (0..get_u64(cfg, "seeds")).map(|i| derive_seed(cfg.seed, i)).collect()
}

fn sgd(cfg: &RunConfig) -> Res<Outcome> {
    let inst = convex_instance(get_usize(cfg, "m")?, get_f64(cfg, "eps"), get_f64(cfg, "kappa"))?;
    let t_grid: Vec<usize> = cfg.u64_list("T").expect("defaulted key").into_iter().map(|t| t as usize).collect();
    let seeds = seed_list(cfg);
    if seeds.is_empty() {
        return Err(usage("key `seeds` must be at least 1"));
    }
    let table_data = excess_risk_experiment(&inst, &t_grid, &seeds)?;
    let mut table = Table::new(&["T", "seed", "excess", "bound", "pass"]);
    for r in &table_data.rows {
        table.push(vec![r.steps.to_string(), r.seed.to_string(), real(r.excess), real(r.bound), r.pass.to_string()]);
    }
    let disproved = table_data.summary.iter().any(|s| !s.pass);
    Ok(Outcome {
        table,
        results: serde_json::to_value(&table_data).expect("table serializes"),
        disproved,
        extra: Vec::new(),
    })
}

fn uc_gap(cfg: &RunConfig) -> Res<Outcome> {
    let inst = convex_instance(get_usize(cfg, "m")?, get_f64(cfg, "eps"), get_f64(cfg, "kappa"))?;
    let rows = uc_gap_experiment(&inst, get_usize(cfg, "sample_size")?, &seed_list(cfg))?;
    let mut table = Table::new(&["m", "seed", "support", "empirical", "population", "gap", "bound", "pass"]);
    for r in &rows {
        table.push(vec![
            r.m.to_string(),
            r.seed.to_string(),
            r.support.to_string(),
            real(r.empirical),
            real(r.population),
            real(r.gap),
            real(r.bound),
            r.pass.to_string(),
        ]);
    }
    let disproved = rows.iter().any(|r| !r.pass);
    Ok(Outcome { table, results: json!({ "rows": rows }), disproved, extra: Vec::new() })
}

const SET_KEYS: [&str; 13] = ["id", "B", "L", "eps", "c", "b", "b_x", "B0", "mu", "k", "S", "B_list", "m"];

struct ParamSet {
    id: String,
    reals: BTreeMap<String, f64>,
    lists: BTreeMap<String, Vec<f64>>,
}

impl ParamSet {
    fn parse(index: usize, v: &Value) -> Res<ParamSet> {
        let obj = v.as_object().ok_or_else(|| usage(format!("parameter set {index} must be a JSON object")))?;
        let mut set = ParamSet { id: index.to_string(), reals: BTreeMap::new(), lists: BTreeMap::new() };
        for (k, val) in obj {
            match k.as_str() {
                "id" => {
                    set.id = match val {
                        Value::String(s) => s.clone(),
                        Value::Number(n) => n.to_string(),
                        _ => return Err(usage(format!("set {index}: key `id`: expected a string, got {val}"))),
                    }
                }
                "S" | "B_list" => {
                    let list = val
                        .as_array()
                        .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
                        .ok_or_else(|| usage(format!("set {index}: key `{k}`: expected a list of numbers, got {val}")))?;
                    set.lists.insert(k.clone(), list);
                }
                _ if SET_KEYS.contains(&k.as_str()) => {
                    let x = val
                        .as_f64()
                        .ok_or_else(|| usage(format!("set {index}: key `{k}`: expected a number, got {val}")))?;
                    set.reals.insert(k.clone(), x);
                }
                _ => {
                    return Err(usage(format!(
                        "set {index}: unknown key `{k}`; valid keys: {}",
                        SET_KEYS.join(", ")
                    )))
                }
            }
        }
        Ok(set)
    }

    fn real(&self, k: &str) -> Result<f64, String> {
        self.reals.get(k).copied().ok_or_else(|| format!("missing input {k}"))
    }

    fn list(&self, k: &str) -> Result<&[f64], String> {
        self.lists.get(k).map(Vec::as_slice).ok_or_else(|| format!("missing input {k}"))
    }

    fn c(&self) -> f64 {
        self.reals.get("c").copied().unwrap_or(1.0)
    }

    fn evaluate(&self, id: FormulaId) -> Result<BoundReport, String> {
        let lib = |r: caplab::Result<BoundReport>| r.map_err(|e| e.to_string());
        match id {
            FormulaId::ShatterLower => {
                lib(shatter_lower_bound(self.real("B")?, self.real("L")?, self.real("eps")?, self.c()))
            }
            FormulaId::ExpClass => {
                lib(exp_class_sample_bound(self.real("B")?, self.real("L")?, self.real("eps")?, self.c()))
            }
            FormulaId::DeepGeneral => lib(deep_general_bound(self.real("B")?, self.list("S")?, self.real("eps")?, self.c())),
            FormulaId::SgdSample => lib(sgd_sample_bound(self.real("B")?, self.real("L")?, self.real("eps")?)),
            FormulaId::SmoothOneLayer => lib(smooth_one_layer_bound(&SmoothOneLayer {
                b: self.real("b")?,
                b_x: self.real("b_x")?,
                big_b: self.real("B")?,
                b0: self.real("B0")?,
                l: self.real("L")?,
                mu: self.real("mu")?,
                eps: self.real("eps")?,
                c: self.c(),
            })),
            FormulaId::DeepElementwise => {
                let k = self.real("k")?;
                if !(k >= 0.0 && k.fract() == 0.0) {
                    return Err(format!("k must be a nonnegative integer, got {k}"));
                }
                lib(deep_elementwise_bound(&DeepElementwise {
                    k: k as usize,
                    b: self.real("b")?,
                    b_x: self.real("b_x")?,
                    l: self.real("L")?,
                    s: self.list("S")?.to_vec(),
                    b_list: self.list("B_list")?.to_vec(),
                    eps: self.real("eps")?,
                    m: self.real("m")?,
                    c: self.c(),
                }))
            }
        }
    }
}

fn bounds(cfg: &RunConfig) -> Res<Outcome> {
    let path = cfg.str("params").expect("required key");
    let text = fs::read_to_string(path).map_err(|e| DispatchError::Io(format!("cannot read {path}: {e}")))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{path} is not valid JSON: {e}")))?;
    let sets = match &v {
        Value::Array(a) => a.clone(),
        Value::Object(o) if o.len() == 1 && o.get("sets").is_some_and(Value::is_array) => {
            o["sets"].as_array().expect("checked").clone()
        }
        Value::Object(_) => vec![v.clone()],
        _ => return Err(usage(format!("{path} must hold a parameter set, a list of sets, or {{\"sets\": [...]}}"))),
    };
    let sets: Vec<ParamSet> = sets.iter().enumerate().map(|(i, s)| ParamSet::parse(i, s)).collect::<Res<_>>()?;

    let mut table = Table::new(&["set", "formula_id", "value", "log_value", "status"]);
    let mut results = Vec::new();
    for set in &sets {
        for id in FormulaId::ALL {
            match set.evaluate(id) {
                Ok(r) => {
                    table.push(vec![set.id.clone(), id.name().into(), real(r.value), real(r.log_value), "ok".into()]);
                    results.push(json!({ "set": set.id, "report": r }));
                }
                Err(e) => {
                    table.push(vec![set.id.clone(), id.name().into(), String::new(), String::new(), e.clone()]);
                    results.push(json!({ "set": set.id, "formula_id": id, "error": e }));
                }
            }
        }
    }
    Ok(Outcome { table, results: Value::Array(results), disproved: false, extra: Vec::new() })
}
