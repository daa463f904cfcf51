//! Config resolution: JSON file, then flags, then defaults, all checked
//! against one schema per command.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Arg, ArgAction, ArgMatches, Command as ClapCommand};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    Construct,
    Verify,
    Rademacher,
    Cover,
    Dudley,
    Sgd,
    UcGap,
    Bounds,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Construct,
        Command::Verify,
        Command::Rademacher,
        Command::Cover,
        Command::Dudley,
        Command::Sgd,
        Command::UcGap,
        Command::Bounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Construct => "construct",
            Command::Verify => "verify",
            Command::Rademacher => "rademacher",
            Command::Cover => "cover",
            Command::Dudley => "dudley",
            Command::Sgd => "sgd",
            Command::UcGap => "uc-gap",
            Command::Bounds => "bounds",
        }
    }

    fn about(self) -> &'static str {
        match self {
            Command::Construct => "Build a shattering instance and write its manifest",
            Command::Verify => "Check every labeling of an instance",
            Command::Rademacher => "Monte Carlo Rademacher estimate",
            Command::Cover => "Evaluate a cover-size formula over a scale grid",
            Command::Dudley => "Evaluate the entropy-integral bound from a cover formula",
            Command::Sgd => "Excess-risk table of projected SGD on the convex instance",
            Command::UcGap => "Empirical-minus-population gap of the adversarial witness",
            Command::Bounds => "Evaluate all sample-complexity formulas on parameter sets",
        }
    }

    pub fn schema(self) -> &'static [Key] {
        match self {
            Command::Construct => CONSTRUCT,
            Command::Verify => VERIFY,
            Command::Rademacher => RADEMACHER,
            Command::Cover => COVER,
            Command::Dudley => DUDLEY,
            Command::Sgd => SGD,
            Command::UcGap => UC_GAP,
            Command::Bounds => BOUNDS,
        }
    }
}

impl FromStr for Command {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| UsageError(format!("unknown command {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty {
    Int,
    Float,
    Bool,
    Str,
    Path,
    FloatList,
    IntList,
}

impl Ty {
    fn expected(self) -> &'static str {
        match self {
            Ty::Int => "a nonnegative integer",
            Ty::Float => "a number",
            Ty::Bool => "a boolean",
            Ty::Str => "a string",
            Ty::Path => "a path string",
            Ty::FloatList => "a list of numbers",
            Ty::IntList => "a list of nonnegative integers",
        }
    }
}

#[derive(Debug)]
pub struct Key {
    pub name: &'static str,
    pub flag: &'static str,
    pub ty: Ty,
    /// Default in flag syntax; `None` makes the key optional with no value.
    pub default: Option<&'static str>,
    pub required: bool,
    pub help: &'static str,
}

const fn key(name: &'static str, flag: &'static str, ty: Ty, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, flag, ty, default, required: false, help }
}

const fn required(name: &'static str, flag: &'static str, ty: Ty, help: &'static str) -> Key {
    Key { name, flag, ty, default: None, required: true, help }
}

static CONSTRUCT: &[Key] = &[
    required("kind", "kind", Ty::Str, "zero-init, nonzero-init or convex"),
    key("m", "m", Ty::Int, Some("8"), "number of shattered points"),
    key("eps", "eps", Ty::Float, Some("0.25"), "margin"),
    key("B", "B", Ty::Float, Some("16"), "Frobenius radius (zero-init)"),
    key("L", "L", Ty::Float, Some("1"), "Lipschitz constant (zero-init)"),
    key("kappa", "kappa", Ty::Float, Some("0.5"), "constant piece of the convex witness"),
    key("rescale", "rescale", Ty::Bool, Some("false"), "rescale points into the unit ball"),
    key("max_resamples", "max-resamples", Ty::Int, Some("16"), "family redraws (zero-init)"),
];

static VERIFY: &[Key] = &[required("instance", "instance", Ty::Path, "manifest.json written by construct")];

static RADEMACHER: &[Key] = &[
    key("instance", "instance", Ty::Path, None, "instance manifest; omit for the linear class"),
    key("id", "id", Ty::Str, Some("run"), "row label"),
    key("draws", "draws", Ty::Int, Some("1000"), "sign draws"),
    key("strategy", "strategy", Ty::Str, None, "enumerate-witnesses, linear-closed-form or projected-ascent"),
    key("m", "m", Ty::Int, Some("4"), "points of the linear class"),
    key("dim", "dim", Ty::Int, Some("4"), "dimension of the linear class"),
    key("B", "B", Ty::Float, Some("1"), "radius of the linear class"),
    key("points", "points", Ty::Str, Some("orthonormal"), "orthonormal or random (linear class)"),
];

static COVER: &[Key] = &[
    required("formula", "formula", Ty::Str, "scalar-linear, matrix-linear, constants, lipschitz-composition or contraction"),
    key("eps", "eps", Ty::FloatList, Some("0.1,0.2,0.5,1"), "scales"),
    key("B", "B", Ty::Float, None, "norm bound"),
    key("b_x", "b-x", Ty::Float, None, "input norm bound"),
    key("r", "r", Ty::Float, None, "output dimension"),
    key("L", "L", Ty::Float, None, "Lipschitz constant"),
    key("k", "k", Ty::Float, None, "number of combined classes"),
    key("c", "c", Ty::Float, None, "universal constant"),
];

static DUDLEY: &[Key] = &[
    required("formula", "formula", Ty::Str, "cover formula feeding the integral"),
    key("m", "m", Ty::IntList, Some("100,1000,10000"), "sample sizes"),
    key("range", "range", Ty::Float, None, "upper integration limit (default L·B)"),
    key("grid", "grid", Ty::FloatList, None, "explicit lower limits"),
    key("grid_points", "grid-points", Ty::Int, Some("64"), "log-spaced lower limits"),
    key("B", "B", Ty::Float, None, "norm bound"),
    key("b_x", "b-x", Ty::Float, None, "input norm bound"),
    key("r", "r", Ty::Float, None, "output dimension"),
    key("L", "L", Ty::Float, None, "Lipschitz constant"),
    key("k", "k", Ty::Float, None, "number of combined classes"),
    key("c", "c", Ty::Float, None, "universal constant"),
];

static SGD: &[Key] = &[
    key("m", "m", Ty::Int, Some("6"), "points of the convex instance"),
    key("eps", "eps", Ty::Float, Some("0.2"), "margin"),
    key("kappa", "kappa", Ty::Float, Some("0.5"), "constant piece"),
    key("T", "T", Ty::IntList, Some("100,1000,10000"), "iteration counts"),
    key("seeds", "seeds", Ty::Int, Some("20"), "runs per iteration count"),
];

static UC_GAP: &[Key] = &[
    key("m", "m", Ty::Int, Some("16"), "points of the convex instance"),
    key("eps", "eps", Ty::Float, Some("0.2"), "margin"),
    key("kappa", "kappa", Ty::Float, Some("0.5"), "constant piece"),
    key("sample_size", "sample-size", Ty::Int, Some("8"), "sample size"),
    key("seeds", "seeds", Ty::Int, Some("20"), "number of samples"),
];

static BOUNDS: &[Key] = &[required("params", "params", Ty::Path, "JSON file with parameter sets")];

/// Keys accepted by every command besides its own.
const GLOBAL_KEYS: [&str; 2] = ["seed", "out"];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Every schema key with a value, typed as JSON.
    pub params: Map<String, Value>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Full resolved config as JSON, embedded in manifests.
    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "command": self.command.name(),
            "params": self.params,
            "seed": self.seed,
            "out": self.output_dir.display().to_string(),
        })
    }

    pub fn f64(&self, k: &str) -> Option<f64> {
        self.params.get(k).and_then(Value::as_f64)
    }

    pub fn u64(&self, k: &str) -> Option<u64> {
        self.params.get(k).and_then(Value::as_u64)
    }

    pub fn str(&self, k: &str) -> Option<&str> {
        self.params.get(k).and_then(Value::as_str)
    }

    pub fn bool(&self, k: &str) -> Option<bool> {
        self.params.get(k).and_then(Value::as_bool)
    }

    pub fn f64_list(&self, k: &str) -> Option<Vec<f64>> {
        self.params.get(k).and_then(Value::as_array).map(|a| a.iter().filter_map(Value::as_f64).collect())
    }

    pub fn u64_list(&self, k: &str) -> Option<Vec<u64>> {
        self.params.get(k).and_then(Value::as_array).map(|a| a.iter().filter_map(Value::as_u64).collect())
    }
}

/// Bad flags, bad config files, or values of the wrong type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// What argument parsing produced: a config to run, or text clap wants
/// printed (help, version).
#[derive(Debug)]
pub enum Parsed {
    Run(RunConfig),
    Display(String),
}

pub fn cli() -> ClapCommand {
    let mut app = ClapCommand::new("caplab")
        .about("Shattering instances, complexity estimates and sample-complexity bounds")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for c in Command::ALL {
        let mut sub = ClapCommand::new(c.name())
            .about(c.about())
            .arg(Arg::new("config").long("config").value_name("FILE").help("JSON config file"))
            .arg(Arg::new("seed").long("seed").value_name("N").help("master seed [default: 0]"))
            .arg(Arg::new("out").long("out").value_name("DIR").help("output directory"));
        for k in c.schema() {
            let mut help = k.help.to_string();
            if let Some(d) = k.default {
                help.push_str(&format!(" [default: {d}]"));
            }
            sub = sub.arg(Arg::new(k.name).long(k.flag).value_name("VALUE").action(ArgAction::Set).help(help));
        }
        app = app.subcommand(sub);
    }
    app
}

/// Parses `argv` (program name first) into a resolved config.
pub fn parse_config<I, T>(argv: I) -> Result<Parsed, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Parsed::Display(e.to_string())),
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Err(UsageError(e.to_string())),
                _ => Err(UsageError(e.render().to_string())),
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let command: Command = name.parse()?;
    resolve(command, sub).map(Parsed::Run)
}

fn resolve(command: Command, m: &ArgMatches) -> Result<RunConfig, UsageError> {
    let schema = command.schema();
    let mut file = Map::new();
    if let Some(path) = m.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {path}: {e}")))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| UsageError(format!("config {path} is not valid JSON: {e}")))?;
        file = match v {
            Value::Object(o) => o,
            _ => return Err(UsageError(format!("config {path} must hold a JSON object"))),
        };
    }

    let mut seed = None;
    let mut out = None;
    let mut params = Map::new();
    for (k, v) in file {
        match k.as_str() {
            "seed" => seed = Some(v.as_u64().ok_or_else(|| type_error("seed", "a nonnegative integer", &v))?),
            "out" => out = Some(v.as_str().ok_or_else(|| type_error("out", "a path string", &v))?.to_string()),
            "command" if v.as_str() == Some(command.name()) => {}
            "command" => return Err(UsageError(format!("config is for command {v}, not {}", command.name()))),
            _ => {
                let spec = schema.iter().find(|s| s.name == k).ok_or_else(|| unknown_key(command, &k))?;
                params.insert(k.clone(), check_json(spec, v)?);
            }
        }
    }

    if let Some(s) = m.get_one::<String>("seed") {
        seed = Some(s.parse().map_err(|_| type_error("seed", "a nonnegative integer", &Value::String(s.clone())))?);
    }
    if let Some(o) = m.get_one::<String>("out") {
        out = Some(o.clone());
    }
    for spec in schema {
        if let Some(raw) = m.get_one::<String>(spec.name) {
            params.insert(spec.name.to_string(), parse_flag(spec, raw)?);
        }
    }
    for spec in schema {
        if params.contains_key(spec.name) {
            continue;
        }
        if let Some(d) = spec.default {
            params.insert(spec.name.to_string(), parse_flag(spec, d).expect("schema defaults parse"));
        } else if spec.required {
            return Err(UsageError(format!("missing required key `{}` (flag --{})", spec.name, spec.flag)));
        }
    }
    let out = out.ok_or_else(|| UsageError("missing output directory: pass --out DIR or set \"out\" in the config".into()))?;
    Ok(RunConfig { command, params, seed: seed.unwrap_or(0), output_dir: PathBuf::from(out) })
}

fn unknown_key(command: Command, k: &str) -> UsageError {
    let mut valid: Vec<&str> = command.schema().iter().map(|s| s.name).collect();
    valid.extend(GLOBAL_KEYS);
    UsageError(format!("unknown key `{k}` for {}; valid keys: {}", command.name(), valid.join(", ")))
}

fn type_error(key: &str, expected: &str, got: &Value) -> UsageError {
    UsageError(format!("key `{key}`: expected {expected}, got {got}"))
}

fn check_json(spec: &Key, v: Value) -> Result<Value, UsageError> {
    let ok = match spec.ty {
        Ty::Int => v.as_u64().is_some(),
        Ty::Float => v.as_f64().is_some(),
        Ty::Bool => v.is_boolean(),
        Ty::Str | Ty::Path => v.is_string(),
        Ty::FloatList => v.as_array().is_some_and(|a| !a.is_empty() && a.iter().all(|x| x.as_f64().is_some())),
        Ty::IntList => v.as_array().is_some_and(|a| !a.is_empty() && a.iter().all(|x| x.as_u64().is_some())),
    };
    if !ok {
        return Err(type_error(spec.name, spec.ty.expected(), &v));
    }
    Ok(match (spec.ty, &v) {
        (Ty::Float, Value::Number(n)) => Value::from(n.as_f64().expect("checked")),
        (Ty::FloatList, Value::Array(a)) => Value::Array(a.iter().map(|x| Value::from(x.as_f64().expect("checked"))).collect()),
        _ => v,
    })
}

fn parse_flag(spec: &Key, raw: &str) -> Result<Value, UsageError> {
    let bad = || type_error(spec.name, spec.ty.expected(), &Value::String(raw.to_string()));
    let float = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    Ok(match spec.ty {
        Ty::Int => Value::from(raw.trim().parse::<u64>().map_err(|_| bad())?),
        Ty::Float => Value::from(float(raw).ok_or_else(bad)?),
        Ty::Bool => Value::from(raw.trim().parse::<bool>().map_err(|_| bad())?),
        Ty::Str | Ty::Path => Value::from(raw),
        Ty::FloatList => Value::Array(
            raw.split(',').map(|s| float(s).map(Value::from).ok_or_else(bad)).collect::<Result<_, _>>()?,
        ),
        Ty::IntList => Value::Array(
            raw.split(',').map(|s| s.trim().parse::<u64>().map(Value::from).map_err(|_| bad())).collect::<Result<_, _>>()?,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<RunConfig, UsageError> {
        match parse_config(std::iter::once("caplab").chain(args.iter().copied()))? {
            Parsed::Run(c) => Ok(c),
            Parsed::Display(t) => panic!("unexpected display: {t}"),
        }
    }

    #[test]
    fn construct_flags() {
        let c = run(&["construct", "--kind", "nonzero-init", "--m", "8", "--eps", "0.25", "--out", "runs/a"]).unwrap();
        assert_eq!(c.command, Command::Construct);
        assert_eq!(c.u64("m"), Some(8));
        assert_eq!(c.f64("eps"), Some(0.25));
        assert_eq!(c.str("kind"), Some("nonzero-init"));
        assert_eq!(c.seed, 0);
        assert_eq!(c.output_dir, PathBuf::from("runs/a"));
    }

    #[test]
    fn flag_type_error_names_key() {
        let e = run(&["construct", "--kind", "convex", "--m", "eight", "--out", "x"]).unwrap_err();
        assert!(e.0.contains("`m`"), "{e}");
    }

    #[test]
    fn missing_required_key() {
        let e = run(&["verify", "--out", "x"]).unwrap_err();
        assert!(e.0.contains("instance"), "{e}");
    }
}
