//! Flat `key = value` configuration files and their validation.
//!
//! A config file is a sequence of lines; `#` starts a comment (full-line or
//! trailing), blank lines are skipped, and every other line must read
//! `key = value`. Later assignments override earlier ones, and command-line
//! `--set key=value` overrides are applied on top of the file. Unknown keys
//! are rejected by name; each subcommand then extracts and validates the
//! keys it uses (keys meant for other subcommands are allowed so one file
//! can drive a whole study).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use ssp_core::experiments::Scheme;

use crate::CliError;

/// Every key any subcommand understands. Anything else is an error.
const KNOWN_KEYS: &[&str] = &[
    "test", "scheme", "schemes", "family", "levels", "reference", "mesh", "mesh_dir", "r",
    "nf", "seed", "paths", "path", "plateau", "t_final", "steps", "out", "plot", "cache",
];

/// Parsed key/value pairs, prior to typed validation.
#[derive(Debug, Default, Clone)]
pub struct KeyMap {
    entries: BTreeMap<String, String>,
}

impl KeyMap {
    /// Parses config text, checking syntax and key names only.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected `key = value`, got `{}`",
                    idx + 1,
                    line
                )));
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "line {}: unknown key `{key}`",
                    idx + 1
                )));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    /// Loads and parses a config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Applies one `key=value` override (command line wins over the file).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a list of `key=value` strings from `--set`.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for item in overrides {
            let Some((key, value)) = item.split_once('=') else {
                return Err(CliError::Config(format!(
                    "override `{item}` is not of the form key=value"
                )));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn parse_with<T>(
        &self,
        key: &str,
        what: &str,
        f: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => f(v).map(Some).ok_or_else(|| {
                CliError::Config(format!("key `{key}`: `{v}` is not {what}"))
            }),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.parse_with(key, "an unsigned integer", |v| v.parse().ok())
    }

    pub fn get_u32(&self, key: &str) -> Result<Option<u32>, CliError> {
        self.parse_with(key, "an unsigned integer", |v| v.parse().ok())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.parse_with(key, "a number", |v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>, CliError> {
        self.parse_with(key, "`true` or `false`", |v| v.parse().ok())
    }

    pub fn get_path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(PathBuf::from)
    }

    pub fn get_string(&self, key: &str) -> Option<String> {
        self.raw(key).map(str::to_string)
    }

    /// Comma-separated list of finite numbers; rejects empty lists.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => {
                let mut list = Vec::new();
                for item in v.split(',') {
                    let item = item.trim();
                    let x: f64 = item.parse().map_err(|_| {
                        CliError::Config(format!("key `{key}`: `{item}` is not a number"))
                    })?;
                    if !x.is_finite() {
                        return Err(CliError::Config(format!(
                            "key `{key}`: `{item}` is not finite"
                        )));
                    }
                    list.push(x);
                }
                if list.is_empty() {
                    return Err(CliError::Config(format!("key `{key}`: empty list")));
                }
                Ok(Some(list))
            }
        }
    }
}

/// Which scheme/mesh pairing a table column describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    Mlp1,
    Hmm,
}

impl SchemeChoice {
    pub fn to_scheme(self) -> Scheme {
        match self {
            SchemeChoice::Mlp1 => Scheme::Mlp1,
            SchemeChoice::Hmm => Scheme::Hmm,
        }
    }

    pub fn parse(v: &str) -> Result<Self, CliError> {
        match v {
            "mlp1" => Ok(SchemeChoice::Mlp1),
            "hmm" => Ok(SchemeChoice::Hmm),
            other => Err(CliError::Config(format!(
                "scheme must be `mlp1` or `hmm`, got `{other}`"
            ))),
        }
    }

    /// Column prefix used by the output tables: `PT` for the vertex scheme,
    /// `HT`/`HH` for the hybrid scheme on triangular/polygonal meshes.
    pub fn column_tag(self, triangulation: bool) -> &'static str {
        match (self, triangulation) {
            (SchemeChoice::Mlp1, _) => "PT",
            (SchemeChoice::Hmm, true) => "HT",
            (SchemeChoice::Hmm, false) => "HH",
        }
    }
}

impl fmt::Display for SchemeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeChoice::Mlp1 => "mlp1",
            SchemeChoice::Hmm => "hmm",
        })
    }
}

/// The reference the convergence study compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceChoice {
    /// A finer level of the same family, by level number.
    Level(u32),
    /// The model's closed-form solution.
    Exact,
}

/// Shared typed fields most subcommands need.
#[derive(Debug)]
pub struct Common {
    pub test: u32,
    pub r: f64,
    pub seed: u64,
    pub t_final: f64,
    pub out: PathBuf,
    pub plot: bool,
    pub plateau: Option<(f64, f64)>,
    pub steps: Option<usize>,
}

impl Common {
    pub fn from_map(map: &KeyMap) -> Result<Self, CliError> {
        let test = map.get_u32("test")?.unwrap_or(1);
        if !(test == 1 || test == 2) {
            return Err(CliError::Config(format!("test must be 1 or 2, got {test}")));
        }
        let r = map.get_f64("r")?.unwrap_or(0.5);
        if !(0.0..=1.0).contains(&r) {
            return Err(CliError::Config(format!("r must lie in [0, 1], got {r}")));
        }
        let t_final = map.get_f64("t_final")?.unwrap_or(1.0);
        if t_final <= 0.0 {
            return Err(CliError::Config(format!(
                "t_final must be positive, got {t_final}"
            )));
        }
        let steps = match map.get_u64("steps")? {
            None => None,
            Some(n) => {
                if n == 0 || !n.is_power_of_two() {
                    return Err(CliError::Config(format!(
                        "steps must be a power of two, got {n}"
                    )));
                }
                Some(n as usize)
            }
        };
        let plateau = match map.get_f64_list("plateau")? {
            None => None,
            Some(list) => {
                if list.len() != 2 || list[0] >= list[1] {
                    return Err(CliError::Config(format!(
                        "plateau must be `lo, hi` with lo < hi, got `{}`",
                        map.get_string("plateau").unwrap_or_default()
                    )));
                }
                Some((list[0], list[1]))
            }
        };
        Ok(Self {
            test,
            r,
            seed: map.get_u64("seed")?.unwrap_or(0),
            t_final,
            out: map.get_path("out").unwrap_or_else(|| PathBuf::from("out")),
            plot: map.get_bool("plot")?.unwrap_or(true),
            plateau,
            steps,
        })
    }
}

/// Single scheme (`scheme =`), defaulting to the vertex scheme.
pub fn single_scheme(map: &KeyMap) -> Result<SchemeChoice, CliError> {
    match map.get_string("scheme") {
        None => Ok(SchemeChoice::Mlp1),
        Some(v) => SchemeChoice::parse(&v),
    }
}

/// Scheme list (`schemes =`), defaulting to both.
pub fn scheme_list(map: &KeyMap) -> Result<Vec<SchemeChoice>, CliError> {
    match map.get_string("schemes") {
        None => Ok(vec![SchemeChoice::Mlp1, SchemeChoice::Hmm]),
        Some(v) => {
            let mut list = Vec::new();
            for item in v.split(',') {
                let choice = SchemeChoice::parse(item.trim())?;
                if list.contains(&choice) {
                    return Err(CliError::Config(format!("schemes repeats `{choice}`")));
                }
                list.push(choice);
            }
            if list.is_empty() {
                return Err(CliError::Config("schemes: empty list".into()));
            }
            Ok(list)
        }
    }
}

/// `levels = a-b` ranges or `levels = a, b, c` lists, strictly increasing.
pub fn level_list(map: &KeyMap) -> Result<Vec<u32>, CliError> {
    let Some(v) = map.get_string("levels") else {
        return Err(CliError::Config("missing key `levels`".into()));
    };
    let bad = |why: &str| CliError::Config(format!("key `levels`: {why} in `{v}`"));
    let levels: Vec<u32> = if let Some((a, b)) = v.split_once('-') {
        let lo: u32 = a.trim().parse().map_err(|_| bad("bad range start"))?;
        let hi: u32 = b.trim().parse().map_err(|_| bad("bad range end"))?;
        if lo == 0 || lo > hi {
            return Err(bad("range must be `lo-hi` with 1 <= lo <= hi"));
        }
        (lo..=hi).collect()
    } else {
        let mut list = Vec::new();
        for item in v.split(',') {
            list.push(item.trim().parse().map_err(|_| bad("bad level number"))?);
        }
        list
    };
    if levels.is_empty() || levels.contains(&0) {
        return Err(bad("levels must be positive"));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("levels must be strictly increasing"));
    }
    Ok(levels)
}

/// `reference = <level>` or `reference = exact`.
pub fn reference_choice(map: &KeyMap) -> Result<ReferenceChoice, CliError> {
    let Some(v) = map.get_string("reference") else {
        return Err(CliError::Config("missing key `reference`".into()));
    };
    if v == "exact" {
        return Ok(ReferenceChoice::Exact);
    }
    let level: u32 = v.parse().map_err(|_| {
        CliError::Config(format!(
            "reference must be a level number or `exact`, got `{v}`"
        ))
    })?;
    if level == 0 {
        return Err(CliError::Config("reference level must be positive".into()));
    }
    Ok(ReferenceChoice::Level(level))
}

/// Resolves `family` + level number to `mesh_dir/family-NN.msh` and checks
/// the file exists.
pub fn family_mesh(map: &KeyMap, level: u32) -> Result<PathBuf, CliError> {
    let Some(family) = map.get_string("family") else {
        return Err(CliError::Config("missing key `family`".into()));
    };
    let dir = map.get_path("mesh_dir").unwrap_or_else(|| PathBuf::from("meshes"));
    let path = dir.join(format!("{family}-{level:02}.msh"));
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "mesh file not found: {}",
            path.display()
        )));
    }
    Ok(path)
}

/// Single mesh path (`mesh =`), checked for existence.
pub fn single_mesh(map: &KeyMap) -> Result<PathBuf, CliError> {
    let Some(path) = map.get_path("mesh") else {
        return Err(CliError::Config("missing key `mesh`".into()));
    };
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "mesh file not found: {}",
            path.display()
        )));
    }
    Ok(path)
}

/// Formats an `nf` value the way file names and column names spell it:
/// integers without a decimal point, anything else via the shortest
/// round-tripping float form.
pub fn nf_token(nf: f64) -> String {
    if nf >= 0.0 && nf == nf.trunc() && nf < 1e15 {
        format!("{}", nf as u64)
    } else {
        format!("{nf}")
    }
}
