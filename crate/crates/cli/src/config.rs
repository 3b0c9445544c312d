//! Flat `key = value` run configuration.
//!
//! ```text
//! # two-level shorthand
//! pump_2 = 1.0
//! decay_1 = 1.0
//! ...
//! init_rho = zero
//!
//! # explicit N-level input
//! levels = 3
//! matrix.h.re = [
//!   0 1 0
//!   1 0 1
//!   0 1 0
//! ]
//! matrix.decay = [1 0.5 0.2]
//! ```
//!
//! Matrix blocks hold one row per line, entries separated by whitespace or
//! commas. A block may also sit on a single line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use pumped_core::linalg::{ComplexMatrix, C64};
use pumped_core::model::{validate, DensityMatrix, ModelSpec, PumpMatrix, RelaxationSpec};
use pumped_core::twolevel::{InitialState, TwoLevelParams, PARAM_NAMES};

pub const DEFAULT_T_END: f64 = 20.0;
pub const DEFAULT_SAMPLES: usize = 2001;
pub const DEFAULT_DT: f64 = 1e-3;

const RUN_KEYS: [&str; 6] = ["t_end", "samples", "dt", "init_rho", "output_dir", "levels"];
const MATRIX_KEYS: [&str; 10] = [
    "matrix.h.re",
    "matrix.h.im",
    "matrix.r.re",
    "matrix.r.im",
    "matrix.decay",
    "matrix.coherence_decay",
    "matrix.pump.re",
    "matrix.pump.im",
    "matrix.init.re",
    "matrix.init.im",
];
const TWO_LEVEL_REQUIRED: [&str; 7] = [
    "pump_1",
    "pump_2",
    "decay_1",
    "decay_2",
    "coherence_decay",
    "detuning",
    "coupling_v",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Syntax { line: usize, message: String },
    UnknownKeys(Vec<String>),
    MissingKeys(Vec<String>),
    Value { key: String, line: usize, message: String },
    Validation(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Syntax { line, message } => write!(f, "line {line}: {message}"),
            Self::UnknownKeys(keys) => write!(f, "unknown keys: {}", keys.join(", ")),
            Self::MissingKeys(keys) => write!(f, "missing required keys: {}", keys.join(", ")),
            Self::Value { key, line, message } => write!(f, "line {line}: `{key}`: {message}"),
            Self::Validation(problems) => {
                write!(f, "model validation failed: {}", problems.join("; "))
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Zero,
    Excited,
    Custom,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelSpec,
    /// Present when the model was given with the two-level shorthand.
    pub two_level: Option<TwoLevelParams>,
    pub t_end: f64,
    pub samples: usize,
    pub dt: f64,
    pub init: DensityMatrix,
    pub init_spec: InitSpec,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn levels(&self) -> usize {
        self.model.dim()
    }

    /// `samples` equally spaced times on `[0, t_end]`.
    pub fn times(&self) -> Vec<f64> {
        let last = (self.samples - 1) as f64;
        (0..self.samples)
            .map(|k| self.t_end * k as f64 / last)
            .collect()
    }

    /// Rebuilds the model after changing one two-level parameter.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<RunConfig, ConfigError> {
        let mut p = self.two_level.ok_or_else(|| ConfigError::Value {
            key: name.to_string(),
            line: 0,
            message: "parameter sweeps need the two-level shorthand".into(),
        })?;
        p.set(name, value).map_err(|e| ConfigError::Value {
            key: name.to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        let model = two_level_model(&p)?;
        Ok(RunConfig {
            model,
            two_level: Some(p),
            ..self.clone()
        })
    }
}

fn two_level_model(p: &TwoLevelParams) -> Result<ModelSpec, ConfigError> {
    let violations = p.violations();
    if !violations.is_empty() {
        return Err(ConfigError::Validation(violations));
    }
    ModelSpec::new(p.hamiltonian(), p.relaxation(), p.pump_matrix())
        .map_err(|e| ConfigError::Validation(vec![e.to_string()]))
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_row(text: &str, line: usize) -> Result<Vec<f64>, ConfigError> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| ConfigError::Syntax {
                line,
                message: format!("`{t}` is not a number"),
            })
        })
        .collect()
}

fn parse_entries(text: &str) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut entries = BTreeMap::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, strip_comment(l)));
    while let Some((line, raw)) = lines.next() {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, got `{trimmed}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("invalid key `{key}`"),
            });
        }
        let parsed = if let Some(rest) = value.strip_prefix('[') {
            let mut rows = Vec::new();
            let mut pending = rest.to_string();
            let mut at = line;
            loop {
                if let Some(end) = pending.find(']') {
                    if !pending[end + 1..].trim().is_empty() {
                        return Err(ConfigError::Syntax {
                            line: at,
                            message: "unexpected text after `]`".into(),
                        });
                    }
                    let row = parse_row(&pending[..end], at)?;
                    if !row.is_empty() {
                        rows.push(row);
                    }
                    break;
                }
                let row = parse_row(&pending, at)?;
                if !row.is_empty() {
                    rows.push(row);
                }
                match lines.next() {
                    Some((next, text)) => {
                        at = next;
                        pending = text.to_string();
                    }
                    None => {
                        return Err(ConfigError::Syntax {
                            line,
                            message: format!("matrix block `{key}` is not closed with `]`"),
                        })
                    }
                }
            }
            if rows.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("matrix block `{key}` is empty"),
                });
            }
            Value::Matrix(rows)
        } else {
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("`{key}` has no value"),
                });
            }
            Value::Scalar(value.to_string())
        };
        if entries.contains_key(key) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.insert(key.to_string(), Entry { line, value: parsed });
    }
    Ok(entries)
}

struct Reader {
    entries: BTreeMap<String, Entry>,
}

impl Reader {
    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn value_error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Value {
            key: key.to_string(),
            line: self.entries.get(key).map_or(0, |e| e.line),
            message: message.into(),
        }
    }

    fn scalar(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Entry {
                value: Value::Scalar(s),
                ..
            }) => Ok(Some(s)),
            Some(_) => Err(self.value_error(key, "expected a scalar, got a matrix block")),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.scalar(key)? {
            None => Ok(None),
            Some(s) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(self.value_error(key, format!("`{s}` is not a finite number"))),
            },
        }
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn matrix(&self, key: &str, rows: usize, cols: usize) -> Result<Option<Vec<Vec<f64>>>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(Entry {
                value: Value::Matrix(m),
                ..
            }) => {
                if m.len() != rows || m.iter().any(|r| r.len() != cols) {
                    let shape: Vec<String> = m.iter().map(|r| r.len().to_string()).collect();
                    return Err(self.value_error(
                        key,
                        format!(
                            "expected {rows} rows of {cols} entries, got {} rows of [{}]",
                            m.len(),
                            shape.join(", ")
                        ),
                    ));
                }
                Ok(Some(m.clone()))
            }
            Some(_) => Err(self.value_error(key, "expected a `[ ... ]` matrix block")),
        }
    }

    fn complex_matrix(&self, base: &str, n: usize) -> Result<Option<ComplexMatrix>, ConfigError> {
        let re_key = format!("{base}.re");
        let im_key = format!("{base}.im");
        let re = self.matrix(&re_key, n, n)?;
        let im = self.matrix(&im_key, n, n)?;
        if re.is_none() && im.is_none() {
            return Ok(None);
        }
        if re.is_none() {
            return Err(ConfigError::MissingKeys(vec![re_key]));
        }
        let re = re.unwrap();
        Ok(Some(ComplexMatrix::from_fn(n, n, |i, j| {
            C64::new(re[i][j], im.as_ref().map_or(0.0, |m| m[i][j]))
        })))
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let reader = Reader {
        entries: parse_entries(text)?,
    };
    let unknown: Vec<String> = reader
        .entries
        .keys()
        .filter(|k| {
            let k = k.as_str();
            !PARAM_NAMES.contains(&k) && !RUN_KEYS.contains(&k) && !MATRIX_KEYS.contains(&k)
        })
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(ConfigError::UnknownKeys(unknown));
    }

    let explicit = reader.has("levels");
    let shorthand: Vec<&str> = PARAM_NAMES.iter().copied().filter(|k| reader.has(k)).collect();
    if explicit && !shorthand.is_empty() {
        return Err(reader.value_error(
            "levels",
            format!(
                "explicit matrices cannot be combined with two-level keys ({})",
                shorthand.join(", ")
            ),
        ));
    }

    let (model, two_level) = if explicit {
        (explicit_model(&reader)?, None)
    } else {
        let model_matrices: Vec<&str> = MATRIX_KEYS
            .iter()
            .copied()
            .filter(|k| reader.has(k) && !k.starts_with("matrix.init"))
            .collect();
        if !model_matrices.is_empty() {
            return Err(ConfigError::MissingKeys(vec![format!(
                "levels (needed by {})",
                model_matrices.join(", ")
            )]));
        }
        let missing: Vec<String> = TWO_LEVEL_REQUIRED
            .iter()
            .filter(|k| !reader.has(k))
            .map(|k| k.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(ConfigError::MissingKeys(missing));
        }
        let mut p = TwoLevelParams {
            pump_1: 0.0,
            pump_2: 0.0,
            pump_21: C64::new(0.0, 0.0),
            decay_1: 0.0,
            decay_2: 0.0,
            coherence_decay: 0.0,
            detuning: 0.0,
            coupling: 0.0,
        };
        for name in PARAM_NAMES {
            if let Some(v) = reader.number(name)? {
                p.set(name, v).expect("name taken from the parameter list");
            }
        }
        (two_level_model(&p)?, Some(p))
    };

    let report = validate(&model);
    if !report.all_passed() {
        return Err(ConfigError::Validation(report.failures()));
    }

    let t_end = reader.number_or("t_end", DEFAULT_T_END)?;
    if t_end <= 0.0 {
        return Err(reader.value_error("t_end", "must be positive"));
    }
    let samples = match reader.scalar("samples")? {
        None => DEFAULT_SAMPLES,
        Some(s) => s
            .parse::<usize>()
            .map_err(|_| reader.value_error("samples", format!("`{s}` is not a count")))?,
    };
    if samples < 2 {
        return Err(reader.value_error("samples", "need at least 2 samples"));
    }
    let dt = reader.number_or("dt", DEFAULT_DT)?;
    if dt <= 0.0 {
        return Err(reader.value_error("dt", "must be positive"));
    }

    let n = model.dim();
    let init_spec = match reader.scalar("init_rho")? {
        None | Some("zero") => InitSpec::Zero,
        Some("excited") => InitSpec::Excited,
        Some("custom") => InitSpec::Custom,
        Some(other) => {
            return Err(reader.value_error(
                "init_rho",
                format!("`{other}` is not one of zero, excited, custom"),
            ))
        }
    };
    let custom = reader.complex_matrix("matrix.init", n)?;
    let init = match (&init_spec, custom) {
        (InitSpec::Custom, Some(m)) => DensityMatrix::new(m)
            .map_err(|e| reader.value_error("matrix.init.re", e.to_string()))?,
        (InitSpec::Custom, None) => {
            return Err(ConfigError::MissingKeys(vec!["matrix.init.re".into()]))
        }
        (_, Some(_)) => {
            return Err(reader.value_error("matrix.init.re", "only used with init_rho = custom"))
        }
        (InitSpec::Zero, None) => InitialState::Zero.density_matrix(n),
        (InitSpec::Excited, None) => InitialState::Excited.density_matrix(n),
    };

    let output_dir = reader.scalar("output_dir")?.map(PathBuf::from);

    Ok(RunConfig {
        model,
        two_level,
        t_end,
        samples,
        dt,
        init,
        init_spec,
        output_dir,
    })
}

fn explicit_model(reader: &Reader) -> Result<ModelSpec, ConfigError> {
    let n = match reader.scalar("levels")? {
        Some(s) => s
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| reader.value_error("levels", format!("`{s}` is not a positive count")))?,
        None => unreachable!("explicit mode is keyed on `levels`"),
    };
    let h = reader
        .complex_matrix("matrix.h", n)?
        .ok_or_else(|| ConfigError::MissingKeys(vec!["matrix.h.re".into()]))?;
    let superop = {
        let re = reader.matrix("matrix.r.re", n * n, n * n)?;
        let im = reader.matrix("matrix.r.im", n * n, n * n)?;
        match (re, im) {
            (None, None) => None,
            (None, Some(_)) => return Err(ConfigError::MissingKeys(vec!["matrix.r.re".into()])),
            (Some(re), im) => Some(ComplexMatrix::from_fn(n * n, n * n, |i, j| {
                C64::new(re[i][j], im.as_ref().map_or(0.0, |m| m[i][j]))
            })),
        }
    };
    let decay = reader.matrix("matrix.decay", 1, n)?;
    let coherence = reader.matrix("matrix.coherence_decay", n, n)?;
    let relaxation = match (superop, decay, coherence) {
        (Some(r), None, None) => RelaxationSpec::Superoperator(r),
        (Some(_), _, _) => {
            return Err(reader.value_error(
                "matrix.r.re",
                "give either matrix.r or matrix.decay, not both",
            ))
        }
        (None, Some(d), None) => RelaxationSpec::lifetime_broadened(d[0].clone()),
        (None, Some(d), Some(c)) => RelaxationSpec::decay(d[0].clone(), c)
            .map_err(|e| reader.value_error("matrix.coherence_decay", e.to_string()))?,
        (None, None, Some(_)) => {
            return Err(ConfigError::MissingKeys(vec!["matrix.decay".into()]))
        }
        (None, None, None) => {
            return Err(ConfigError::MissingKeys(vec![
                "matrix.decay or matrix.r.re".into(),
            ]))
        }
    };
    let pump = reader
        .complex_matrix("matrix.pump", n)?
        .unwrap_or_else(|| ComplexMatrix::zeros(n, n));
    let pump = PumpMatrix::new(pump).map_err(|e| reader.value_error("matrix.pump.re", e.to_string()))?;
    ModelSpec::new(h, relaxation, pump).map_err(|e| ConfigError::Validation(vec![e.to_string()]))
}
