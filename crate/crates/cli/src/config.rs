//! Flat `key = value` configuration with typed keys.
//!
//! Values are resolved from, lowest priority first: key defaults, an optional
//! preset layer supplied by the command, the config file, then command-line
//! flags. Every problem is collected before failing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ty {
    Uint,
    Float,
    Bool,
    Path,
    Text,
    Choice(&'static [&'static str]),
    UintList,
    FloatList,
    /// Comma-separated list, each item from the given set.
    ChoiceList(&'static [&'static str]),
    /// Unsigned integer or `inf`.
    UintOrInf,
    /// Unsigned integer or `full`.
    UintOrFull,
}

impl Ty {
    pub fn describe(self) -> String {
        match self {
            Ty::Uint => "unsigned integer".into(),
            Ty::Float => "float".into(),
            Ty::Bool => "true or false".into(),
            Ty::Path => "path".into(),
            Ty::Text => "text".into(),
            Ty::Choice(c) => format!("one of {}", c.join("|")),
            Ty::UintList => "comma-separated unsigned integers".into(),
            Ty::FloatList => "comma-separated floats".into(),
            Ty::ChoiceList(c) => format!("comma-separated items from {}", c.join("|")),
            Ty::UintOrInf => "unsigned integer or inf".into(),
            Ty::UintOrFull => "unsigned integer or full".into(),
        }
    }

    fn accepts(self, v: &str) -> bool {
        let v = v.trim();
        let items = || v.split(',').map(str::trim);
        match self {
            Ty::Uint => v.parse::<u64>().is_ok(),
            Ty::Float => v.parse::<f64>().is_ok(),
            Ty::Bool => parse_bool(v).is_some(),
            Ty::Path | Ty::Text => !v.is_empty(),
            Ty::Choice(c) => c.contains(&v),
            Ty::UintList => items().all(|s| s.parse::<u64>().is_ok()),
            Ty::FloatList => items().all(|s| s.parse::<f64>().is_ok()),
            Ty::ChoiceList(c) => items().all(|s| c.contains(&s)),
            Ty::UintOrInf => v == "inf" || v.parse::<u64>().is_ok(),
            Ty::UintOrFull => v == "full" || v.parse::<u64>().is_ok(),
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Need {
    Required,
    Optional,
    Default(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Key {
    pub name: &'static str,
    pub ty: Ty,
    pub need: Need,
    pub help: &'static str,
    /// Written to `resolved-config.txt`.
    pub echo: bool,
}

impl Key {
    pub const fn req(name: &'static str, ty: Ty, help: &'static str) -> Self {
        Key { name, ty, need: Need::Required, help, echo: true }
    }

    pub const fn opt(name: &'static str, ty: Ty, help: &'static str) -> Self {
        Key { name, ty, need: Need::Optional, help, echo: true }
    }

    pub const fn def(name: &'static str, ty: Ty, default: &'static str, help: &'static str) -> Self {
        Key { name, ty, need: Need::Default(default), help, echo: true }
    }

    pub const fn quiet(self) -> Self {
        Key { echo: false, ..self }
    }

    pub fn flag(&self) -> String {
        self.name.replace('_', "-")
    }
}

/// Keys shared by every command.
pub const GLOBAL_KEYS: [Key; 3] = [
    Key::req("out", Ty::Path, "output directory").quiet(),
    Key::req("seed", Ty::Uint, "master seed"),
    Key::def("threads", Ty::Uint, "1", "worker threads where a command can use them"),
];

/// One source of raw values.
#[derive(Debug, Clone, Default)]
pub struct Layer {
    pub origin: String,
    pub values: BTreeMap<String, String>,
}

impl Layer {
    pub fn new(origin: impl Into<String>) -> Self {
        Layer { origin: origin.into(), values: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.values.insert(key.to_owned(), value.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Parse config text: one `key = value` per line, `#` starts a comment.
pub fn parse_config(text: &str, origin: &str) -> Result<Layer> {
    let mut layer = Layer::new(origin);
    let mut problems = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            problems.push(format!("{origin} line {}: expected `key = value`", n + 1));
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            problems.push(format!("{origin} line {}: empty key", n + 1));
        } else if layer.values.insert(k.to_owned(), v.to_owned()).is_some() {
            problems.push(format!("key `{k}`: set twice in {origin}"));
        }
    }
    if problems.is_empty() {
        Ok(layer)
    } else {
        Err(CliError::Config(problems))
    }
}

pub fn load_config(path: &Path) -> Result<Layer> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

/// Fully resolved values in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    keys: Vec<Key>,
    values: Vec<Option<String>>,
}

/// Merge `layers` (lowest priority first) over the schema defaults.
pub fn resolve(keys: &[Key], layers: &[Layer]) -> Result<Params> {
    let mut problems = Vec::new();
    for layer in layers {
        for k in layer.values.keys() {
            if !keys.iter().any(|s| s.name == k) {
                problems.push(format!("unknown key `{k}` in {}", layer.origin));
            }
        }
    }
    let mut values = Vec::with_capacity(keys.len());
    for key in keys {
        let picked = layers.iter().rev().find_map(|l| l.get(key.name).map(|v| (v.to_owned(), l.origin.as_str())));
        let value = match (picked, key.need) {
            (Some((v, origin)), _) => {
                if !key.ty.accepts(&v) {
                    problems.push(format!("key `{}`: expected {}, got {v:?} from {origin}", key.name, key.ty.describe()));
                }
                Some(v.trim().to_owned())
            }
            (None, Need::Default(d)) => Some(d.to_owned()),
            (None, Need::Optional) => None,
            (None, Need::Required) => {
                problems.push(format!("missing required key `{}`", key.name));
                None
            }
        };
        values.push(value);
    }
    if problems.is_empty() {
        Ok(Params { keys: keys.to_vec(), values })
    } else {
        Err(CliError::Config(problems))
    }
}

impl Params {
    fn slot(&self, name: &str) -> usize {
        self.keys.iter().position(|k| k.name == name).unwrap_or_else(|| panic!("key `{name}` is not in the schema"))
    }

    pub fn raw(&self, name: &str) -> Option<&str> {
        self.values[self.slot(name)].as_deref()
    }

    /// Fill an optional key that is still unset.
    pub fn set_default(&mut self, name: &str, value: impl Into<String>) {
        let i = self.slot(name);
        if self.values[i].is_none() {
            self.values[i] = Some(value.into());
        }
    }

    fn parsed<T: FromStr>(&self, name: &str) -> Result<Option<T>> {
        self.raw(name)
            .map(|v| {
                v.parse::<T>().map_err(|_| {
                    CliError::config(format!("key `{name}`: expected {}, got {v:?}", self.keys[self.slot(name)].ty.describe()))
                })
            })
            .transpose()
    }

    fn required<T: FromStr>(&self, name: &str) -> Result<T> {
        self.parsed(name)?.ok_or_else(|| CliError::config(format!("missing required key `{name}`")))
    }

    pub fn uint(&self, name: &str) -> Result<u64> {
        self.required(name)
    }

    pub fn usize(&self, name: &str) -> Result<usize> {
        self.required(name)
    }

    pub fn opt_usize(&self, name: &str) -> Result<Option<usize>> {
        self.parsed(name)
    }

    pub fn float(&self, name: &str) -> Result<f64> {
        self.required(name)
    }

    pub fn text(&self, name: &str) -> Result<String> {
        self.required(name)
    }

    pub fn opt_text(&self, name: &str) -> Option<String> {
        self.raw(name).map(str::to_owned)
    }

    pub fn path(&self, name: &str) -> Result<PathBuf> {
        self.required(name)
    }

    pub fn opt_path(&self, name: &str) -> Option<PathBuf> {
        self.raw(name).map(PathBuf::from)
    }

    pub fn flag(&self, name: &str) -> Result<bool> {
        let v = self.raw(name).unwrap_or("false");
        parse_bool(v).ok_or_else(|| CliError::config(format!("key `{name}`: expected true or false, got {v:?}")))
    }

    pub fn list<T: FromStr>(&self, name: &str) -> Result<Vec<T>> {
        let raw = self.text(name)?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<T>()
                    .map_err(|_| CliError::config(format!("key `{name}`: cannot parse item {:?}", s.trim())))
            })
            .collect()
    }

    /// `key = value` lines in schema order, unset optional keys omitted.
    pub fn to_text(&self, command: &str) -> String {
        let mut out = format!("# ganlab {command}\n");
        for (k, v) in self.keys.iter().zip(&self.values) {
            if let (true, Some(v)) = (k.echo, v) {
                let _ = writeln!(out, "{} = {v}", k.name);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYS: [Key; 4] = [
        Key::req("seed", Ty::Uint, ""),
        Key::req("dt", Ty::Float, ""),
        Key::def("schedule", Ty::Choice(&["constant", "vanishing"]), "constant", ""),
        Key::opt("m", Ty::UintList, ""),
    ];

    #[test]
    fn empty_file_and_flags_only() {
        let file = parse_config("", "f").unwrap();
        let flags = Layer::new("flags").with("seed", "3").with("dt", "0.01");
        let p = resolve(&KEYS, &[file, flags]).unwrap();
        assert_eq!(p.uint("seed").unwrap(), 3);
        assert_eq!(p.text("schedule").unwrap(), "constant");
        assert_eq!(p.raw("m"), None);
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config("seed = 1\ndt = 0.5 # trailing comment\n# full comment\n", "f").unwrap();
        let flags = Layer::new("flags").with("seed", "2");
        let p = resolve(&KEYS, &[file, flags]).unwrap();
        assert_eq!(p.uint("seed").unwrap(), 2);
        assert_eq!(p.float("dt").unwrap(), 0.5);
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let file = parse_config("seed = 1\ndt = banana\n", "f").unwrap();
        let err = resolve(&KEYS, &[file]).unwrap_err().to_string();
        assert!(err.contains("`dt`"), "{err}");
    }

    #[test]
    fn every_problem_is_listed() {
        let file = parse_config("bogus = 1\nm = 1,x\nschedule = linear\n", "f").unwrap();
        let CliError::Config(problems) = resolve(&KEYS, &[file]).unwrap_err() else { panic!() };
        let all = problems.join("\n");
        for key in ["`bogus`", "`seed`", "`dt`", "`m`", "`schedule`"] {
            assert!(all.contains(key), "{key} missing from {all}");
        }
        assert_eq!(problems.len(), 5);
    }

    #[test]
    fn malformed_lines_and_duplicates_are_rejected() {
        assert!(parse_config("seed 1\n", "f").is_err());
        assert!(parse_config("seed = 1\nseed = 2\n", "f").is_err());
        assert!(parse_config(" = 2\n", "f").is_err());
    }

    #[test]
    fn resolved_text_round_trips() {
        let flags = Layer::new("flags").with("seed", "9").with("dt", "1e-3").with("m", "1, 2,4");
        let p = resolve(&KEYS, &[flags]).unwrap();
        let text = p.to_text("demo");
        let again = resolve(&KEYS, &[parse_config(&text, "resolved").unwrap()]).unwrap();
        assert_eq!(again, p);
        assert_eq!(p.list::<u64>("m").unwrap(), vec![1, 2, 4]);
    }
}
