//! `key = value` run configuration. Lines starting with `#` and trailing
//! `# ...` are comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use exdyn::models::ModelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    VerifyAlgebra,
    VerifyDuality,
    VerifyReversibility,
    VerifyAll,
    Thermalize,
    Simulate,
    DualCheck,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::VerifyAlgebra,
        Command::VerifyDuality,
        Command::VerifyReversibility,
        Command::VerifyAll,
        Command::Thermalize,
        Command::Simulate,
        Command::DualCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyAlgebra => "verify-algebra",
            Command::VerifyDuality => "verify-duality",
            Command::VerifyReversibility => "verify-reversibility",
            Command::VerifyAll => "verify-all",
            Command::Thermalize => "thermalize",
            Command::Simulate => "simulate",
            Command::DualCheck => "dual-check",
        }
    }

    fn needs_model(self) -> bool {
        self != Command::VerifyAlgebra
    }

    fn needs_graph(self) -> bool {
        matches!(self, Command::Simulate | Command::DualCheck)
    }

    fn checks_duality(self) -> bool {
        matches!(self, Command::VerifyDuality | Command::VerifyAll)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
                format!("unknown command '{s}'; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArithmeticMode {
    Exact,
    Float { tolerance: f64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphSource {
    /// Edge-list file; relative paths resolve against the config file.
    File(PathBuf),
    Path(usize),
    Complete(usize),
}

impl FromStr for GraphSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let builtin = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_suffix(')'))
                .map(|n| n.trim().parse::<usize>().map_err(|_| format!("'{n}' is not a vertex count")))
        };
        if let Some(n) = builtin("path(") {
            return n.map(GraphSource::Path);
        }
        if let Some(n) = builtin("complete(") {
            return n.map(GraphSource::Complete);
        }
        if s.is_empty() {
            return Err("empty graph path".into());
        }
        Ok(GraphSource::File(PathBuf::from(s)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<ModelSpec>,
    pub nmax: u32,
    pub graph: Option<GraphSource>,
    pub init: Option<Vec<u32>>,
    pub seed: u64,
    pub samples: u64,
    pub burn_in: u64,
    pub thin: f64,
    pub tmax: f64,
    pub time: f64,
    pub replicas: u64,
    pub max_relative_error: f64,
    pub arithmetic: ArithmeticMode,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            model: None,
            nmax: 8,
            graph: None,
            init: None,
            seed: 0,
            samples: 10_000,
            burn_in: 1_000,
            thin: 1.0,
            tmax: 10.0,
            time: 1.0,
            replicas: 10_000,
            max_relative_error: 0.02,
            arithmetic: ArithmeticMode::Exact,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: key '{key}': {message}")]
    Value { key: String, line: usize, column: usize, message: String },
    #[error("key '{key}' is required by command '{command}'")]
    Missing { key: String, command: String },
}

const KEYS: [&str; 16] = [
    "command",
    "model",
    "nmax",
    "graph",
    "init",
    "seed",
    "samples",
    "burn_in",
    "thin",
    "tmax",
    "time",
    "replicas",
    "max_relative_error",
    "arithmetic",
    "tolerance",
    "out",
];

/// A value with the position of its first character.
#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
    column: usize,
}

fn entries(text: &str) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let Some(eq) = content.find('=') else {
            return Err(ConfigError::Syntax {
                line,
                column: indent + 1,
                message: "expected 'key = value'".into(),
            });
        };
        let key = content[..eq].trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::Syntax {
                line,
                column: indent + 1,
                message: format!("'{key}' is not a key"),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::Syntax {
                line,
                column: indent + 1,
                message: format!("unknown key '{key}'"),
            });
        }
        let after = &content[eq + 1..];
        let value = after.trim();
        let column = eq + 2 + (after.len() - after.trim_start().len());
        if value.is_empty() {
            return Err(ConfigError::Syntax { line, column, message: format!("key '{key}' has no value") });
        }
        if out.contains_key(key) {
            return Err(ConfigError::Syntax {
                line,
                column: indent + 1,
                message: format!("key '{key}' given twice"),
            });
        }
        out.insert(key.to_string(), Entry { value: value.to_string(), line, column });
    }
    Ok(out)
}

fn value_error(key: &str, e: &Entry, message: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.into(), line: e.line, column: e.column, message: message.into() }
}

fn field<T: FromStr>(map: &BTreeMap<String, Entry>, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
    map.get(key)
        .map(|e| e.value.parse::<T>().map_err(|_| value_error(key, e, format!("expected {what}, got '{}'", e.value))))
        .transpose()
}

fn positive(map: &BTreeMap<String, Entry>, key: &str) -> Result<Option<f64>, ConfigError> {
    let v: Option<f64> = field(map, key, "a number")?;
    if let Some(x) = v {
        if !(x > 0.0 && x.is_finite()) {
            return Err(value_error(key, &map[key], "must be positive"));
        }
    }
    Ok(v)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let map = entries(text)?;
    let command_entry = map
        .get("command")
        .ok_or_else(|| ConfigError::Missing { key: "command".into(), command: "any".into() })?;
    let command: Command = command_entry
        .value
        .parse()
        .map_err(|m: String| value_error("command", command_entry, m))?;
    let mut cfg = RunConfig::new(command);

    if let Some(e) = map.get("model") {
        let spec: ModelSpec = e.value.parse().map_err(|err: exdyn::Error| value_error("model", e, err.to_string()))?;
        if let ModelSpec::Riem { gamma1, gamma2, .. } = &spec {
            if command.checks_duality() && gamma1 != gamma2 {
                return Err(value_error(
                    "model",
                    e,
                    format!("{spec} has gamma1 = {gamma1} and gamma2 = {gamma2}; self-duality needs equal top capacities"),
                ));
            }
        }
        cfg.model = Some(spec);
    }
    if let Some(n) = field::<u32>(&map, "nmax", "a positive integer")? {
        if n == 0 {
            return Err(value_error("nmax", &map["nmax"], "must be at least 1"));
        }
        cfg.nmax = n;
    }
    cfg.graph = field(&map, "graph", "a file path, path(n) or complete(n)")?;
    if let Some(e) = map.get("init") {
        let parsed: Result<Vec<u32>, _> = e
            .value
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse::<u32>)
            .collect();
        cfg.init = Some(parsed.map_err(|_| value_error("init", e, "expected wealths like '4 0 0 2'"))?);
    }
    cfg.seed = field(&map, "seed", "an unsigned integer")?.unwrap_or(cfg.seed);
    cfg.samples = field(&map, "samples", "an unsigned integer")?.unwrap_or(cfg.samples);
    cfg.burn_in = field(&map, "burn_in", "an unsigned integer")?.unwrap_or(cfg.burn_in);
    cfg.replicas = field(&map, "replicas", "an unsigned integer")?.unwrap_or(cfg.replicas);
    cfg.thin = positive(&map, "thin")?.unwrap_or(cfg.thin);
    cfg.tmax = positive(&map, "tmax")?.unwrap_or(cfg.tmax);
    cfg.max_relative_error = positive(&map, "max_relative_error")?.unwrap_or(cfg.max_relative_error);
    if let Some(e) = map.get("time") {
        let t: f64 = e.value.parse().map_err(|_| value_error("time", e, "expected a number"))?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(value_error("time", e, "must be non-negative"));
        }
        cfg.time = t;
    }
    let tolerance = positive(&map, "tolerance")?;
    cfg.arithmetic = match map.get("arithmetic").map(|e| (e.value.as_str(), e)) {
        None | Some(("exact", _)) => {
            if let Some(e) = map.get("tolerance") {
                return Err(value_error("tolerance", e, "only applies to arithmetic = float"));
            }
            ArithmeticMode::Exact
        }
        Some(("float", _)) => ArithmeticMode::Float { tolerance: tolerance.unwrap_or(1e-12) },
        Some((other, e)) => return Err(value_error("arithmetic", e, format!("expected exact or float, got '{other}'"))),
    };
    if let Some(e) = map.get("out") {
        cfg.out = PathBuf::from(&e.value);
    }

    let missing = |key: &str| ConfigError::Missing { key: key.into(), command: command.name().into() };
    if command.needs_model() && cfg.model.is_none() {
        return Err(missing("model"));
    }
    if command.needs_graph() {
        if cfg.graph.is_none() {
            return Err(missing("graph"));
        }
        if cfg.init.is_none() {
            return Err(missing("init"));
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use exdyn::scalar::{int, ratio};

    #[test]
    fn minimal_config() {
        let c = parse_config("command = verify-all\nmodel = IEM(1,1;1,1)\n").unwrap();
        assert_eq!(c.command, Command::VerifyAll);
        assert_eq!(c.model, Some(ModelSpec::iem(int(1), int(1), int(1), int(1)).unwrap()));
        assert_eq!(c.nmax, 8);
        assert_eq!(c.arithmetic, ArithmeticMode::Exact);
    }

    #[test]
    fn exact_parameters() {
        let c = parse_config("command = verify-duality\nmodel = IEM(3/2,1/2;3/2,2)\nnmax = 4 # small\n").unwrap();
        assert_eq!(c.model, Some(ModelSpec::iem(ratio(3, 2), ratio(1, 2), ratio(3, 2), int(2)).unwrap()));
        assert_eq!(c.nmax, 4);
    }

    #[test]
    fn riem_capacity_mismatch_rejected_for_duality() {
        let text = "command = verify-duality\nmodel = RIEM(2,3;1,4)\n";
        match parse_config(text) {
            Err(ConfigError::Value { key, line, column, .. }) => {
                assert_eq!((key.as_str(), line, column), ("model", 2, 9));
            }
            other => panic!("{other:?}"),
        }
        // fine when duality is not claimed
        assert!(parse_config("command = verify-reversibility\nmodel = RIEM(2,3;1,4)\n").is_ok());
    }

    #[test]
    fn positions_in_errors() {
        assert_eq!(
            parse_config("command = verify-all\n  colour = red\n"),
            Err(ConfigError::Syntax { line: 2, column: 3, message: "unknown key 'colour'".into() })
        );
        assert!(matches!(
            parse_config("command = verify-all\nmodel IEM(1,1)\n"),
            Err(ConfigError::Syntax { line: 2, column: 1, .. })
        ));
        assert!(matches!(
            parse_config("command = verify-all\nmodel = IEM(1,1)\nnmax = 0\n"),
            Err(ConfigError::Value { line: 3, column: 8, .. })
        ));
        assert!(matches!(
            parse_config("command = verify-all\nmodel = IEM(1,1)\nmodel = RW\n"),
            Err(ConfigError::Syntax { line: 3, .. })
        ));
    }

    #[test]
    fn required_fields() {
        assert!(matches!(parse_config("model = RW\n"), Err(ConfigError::Missing { .. })));
        assert!(matches!(parse_config("command = thermalize\n"), Err(ConfigError::Missing { .. })));
        assert!(parse_config("command = verify-algebra\n").is_ok());
        assert!(matches!(
            parse_config("command = simulate\nmodel = RW\ninit = 1 2\n"),
            Err(ConfigError::Missing { key, .. }) if key == "graph"
        ));
        let c = parse_config("command = simulate\nmodel = RW\ngraph = path(2)\ninit = 1, 2\n").unwrap();
        assert_eq!(c.graph, Some(GraphSource::Path(2)));
        assert_eq!(c.init, Some(vec![1, 2]));
    }

    #[test]
    fn float_mode() {
        let c = parse_config("command = verify-algebra\narithmetic = float\ntolerance = 1e-9\n").unwrap();
        assert_eq!(c.arithmetic, ArithmeticMode::Float { tolerance: 1e-9 });
        assert!(parse_config("command = verify-algebra\narithmetic = exact\ntolerance = 1e-9\n").is_err());
        assert!(parse_config("command = verify-algebra\narithmetic = fuzzy\n").is_err());
    }
}
