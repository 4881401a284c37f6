//! Flat `key = value` settings merged from a config file and flags, and the
//! typed run configuration parsed from them.

use std::collections::BTreeMap;
use std::path::Path;

use cachecoder::analysis::formulas::Q;
use cachecoder::library::DemandVector;
use cachecoder::schemes::{PlacementMode, SchemeKind};

use crate::error::CliError;
use crate::render::parse_rational;

pub const KEYS: &[&str] = &[
    "scheme",
    "K",
    "L",
    "N",
    "t",
    "M",
    "q",
    "f",
    "field-bits",
    "seed",
    "demand",
    "placement-mode",
    "trials",
    "jobs",
    "out",
    "ablate-keys",
    "inject-key-reuse",
    "p-threshold",
];

const CACHE_KEYS: [&str; 3] = ["t", "M", "q"];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Settings {
    pub values: BTreeMap<String, String>,
    pub axes: Vec<String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Settings, CliError> {
        let mut settings = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Invalid(format!("config line {}: expected key = value", i + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "axis" {
                settings.axes.push(value.to_string());
            } else {
                settings.set(key, value)?;
            }
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Invalid(format!("cannot read config {}: {e}", path.display()))
        })?;
        Settings::parse(&text)
    }

    /// Sets one key; a cache parameter displaces the other two.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::Invalid(format!("unknown setting {key:?}")));
        }
        if CACHE_KEYS.contains(&key) {
            for other in CACHE_KEYS {
                self.values.remove(other);
            }
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Everything in `over` wins; its axes replace ours when present.
    pub fn overlay(&mut self, over: Settings) -> Result<(), CliError> {
        for (k, v) in over.values {
            self.set(&k, &v)?;
        }
        if !over.axes.is_empty() {
            self.axes = over.axes;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeChoice {
    Kind(SchemeKind),
    FormulasOnly,
}

impl SchemeChoice {
    pub fn kinds(self) -> Vec<SchemeKind> {
        match self {
            SchemeChoice::Kind(k) => vec![k],
            SchemeChoice::FormulasOnly => SchemeKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CacheSpec {
    T(Q),
    M(Q),
    Prob(Q),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FileLen {
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DemandSpec {
    Worst,
    Random,
    /// 1-based file labels.
    List(Vec<usize>),
}

impl DemandSpec {
    pub fn build(&self, users: usize, files: usize, seed: u64) -> Result<DemandVector, CliError> {
        Ok(match self {
            DemandSpec::Worst => DemandVector::worst(users, files),
            DemandSpec::Random => DemandVector::random(users, files, seed),
            DemandSpec::List(labels) => {
                if labels.contains(&0) {
                    return Err(CliError::Invalid("demand labels start at 1".into()));
                }
                DemandVector::explicit(labels.iter().map(|l| l - 1).collect(), users, files)?
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scheme: SchemeChoice,
    pub users: usize,
    pub streams: usize,
    pub files: usize,
    pub cache: CacheSpec,
    pub file_len: FileLen,
    pub field_bits: u32,
    pub seed: u64,
    pub demand: DemandSpec,
    pub placement: PlacementMode,
    pub trials: Option<usize>,
    pub ablate_keys: bool,
    pub inject_key_reuse: bool,
    pub p_threshold: f64,
}

fn parse_num<T: std::str::FromStr>(s: &Settings, key: &str) -> Result<Option<T>, CliError> {
    s.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| CliError::Invalid(format!("{key}={v:?} is not a valid number")))
        })
        .transpose()
}

fn required<T: std::str::FromStr>(s: &Settings, key: &str) -> Result<T, CliError> {
    parse_num(s, key)?.ok_or_else(|| CliError::Invalid(format!("missing required setting {key}")))
}

fn parse_bool(s: &Settings, key: &str) -> Result<bool, CliError> {
    match s.get(key) {
        None | Some("false") | Some("0") | Some("no") => Ok(false),
        Some("true") | Some("1") | Some("yes") => Ok(true),
        Some(v) => Err(CliError::Invalid(format!("{key}={v:?} is not a boolean"))),
    }
}

fn rational(s: &Settings, key: &str) -> Result<Option<Q>, CliError> {
    s.get(key)
        .map(|v| {
            parse_rational(v)
                .ok_or_else(|| CliError::Invalid(format!("{key}={v:?} is not a number")))
        })
        .transpose()
}

impl RunConfig {
    /// `env_seed` is used only when neither flags nor the file give a seed.
    pub fn from_settings(s: &Settings, env_seed: Option<&str>) -> Result<RunConfig, CliError> {
        let scheme = match s.get("scheme") {
            None => return Err(CliError::Invalid("missing required setting scheme".into())),
            Some("formulas-only") => SchemeChoice::FormulasOnly,
            Some(name) => SchemeChoice::Kind(name.parse()?),
        };
        let users: usize = required(s, "K")?;
        let streams: usize = required(s, "L")?;
        let files: usize = parse_num(s, "N")?.unwrap_or(users);
        let cache = match (rational(s, "t")?, rational(s, "M")?, rational(s, "q")?) {
            (Some(t), None, None) => CacheSpec::T(t),
            (None, Some(m), None) => CacheSpec::M(m),
            (None, None, Some(p)) => CacheSpec::Prob(p),
            (None, None, None) => {
                return Err(CliError::Invalid("one of t, M or q is required".into()))
            }
            _ => {
                return Err(CliError::Invalid(
                    "t, M and q are mutually exclusive".into(),
                ))
            }
        };
        let file_len = match s.get("f") {
            None | Some("auto") => FileLen::Auto,
            Some(_) => FileLen::Fixed(required(s, "f")?),
        };
        let seed = match s.get("seed").or(env_seed) {
            None => 0,
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Invalid(format!("seed={v:?} is not an unsigned integer")))?,
        };
        let demand = match s.get("demand") {
            None | Some("worst") => DemandSpec::Worst,
            Some("random") => DemandSpec::Random,
            Some(list) => DemandSpec::List(
                list.split(',')
                    .map(|x| x.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| {
                        CliError::Invalid(format!(
                            "demand={list:?}: expected worst, random or a list like 1,2,3"
                        ))
                    })?,
            ),
        };
        let placement = match s.get("placement-mode") {
            None => PlacementMode::Ideal,
            Some(v) => v.parse()?,
        };
        let p_threshold = parse_num(s, "p-threshold")?.unwrap_or(0.01);
        if !(0.0..1.0).contains(&p_threshold) {
            return Err(CliError::Invalid(format!(
                "p-threshold={p_threshold} outside [0, 1)"
            )));
        }
        Ok(RunConfig {
            scheme,
            users,
            streams,
            files,
            cache,
            file_len,
            field_bits: parse_num(s, "field-bits")?.unwrap_or(8),
            seed,
            demand,
            placement,
            trials: parse_num(s, "trials")?,
            ablate_keys: parse_bool(s, "ablate-keys")?,
            inject_key_reuse: parse_bool(s, "inject-key-reuse")?,
            p_threshold,
        })
    }
}

/// One sweep dimension: a setting name and the values it takes, in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<String>,
}

impl Axis {
    pub fn parse(spec: &str) -> Result<Axis, CliError> {
        let (name, list) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("axis {spec:?}: expected NAME=v1,v2,...")))?;
        let name = name.trim().to_string();
        if !KEYS.contains(&name.as_str()) {
            return Err(CliError::Invalid(format!("unknown axis {name:?}")));
        }
        let values = list
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(String::from)
            .collect();
        Ok(Axis { name, values })
    }
}

/// The cartesian product of the axes over the base settings, first axis outermost.
pub fn grid(base: &Settings, axes: &[Axis]) -> Result<Vec<Settings>, CliError> {
    let mut points = vec![base.clone()];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for p in &points {
            for v in &axis.values {
                let mut q = p.clone();
                q.set(&axis.name, v)?;
                next.push(q);
            }
        }
        points = next;
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_with_comments() {
        let s =
            Settings::parse("# example\nscheme = mt\nK=4 # users\nL = 2\n\nt = 2\naxis = M=1,2\n")
                .unwrap();
        assert_eq!(s.get("K"), Some("4"));
        assert_eq!(s.axes, ["M=1,2"]);
        assert!(Settings::parse("K 4").is_err());
        assert!(Settings::parse("colour = red").is_err());
    }

    #[test]
    fn flags_override_and_cache_keys_exclude_each_other() {
        let mut base = Settings::parse("scheme=mt\nK=4\nL=2\nt=2\nseed=5").unwrap();
        let mut flags = Settings::default();
        flags.set("M", "5/2").unwrap();
        flags.set("seed", "9").unwrap();
        base.overlay(flags).unwrap();
        let c = RunConfig::from_settings(&base, Some("1")).unwrap();
        assert_eq!(c.seed, 9);
        assert!(matches!(c.cache, CacheSpec::M(_)));
        assert_eq!(c.files, 4);
    }

    #[test]
    fn env_seed_is_a_fallback() {
        let s = Settings::parse("scheme=mt\nK=4\nL=2\nt=2").unwrap();
        assert_eq!(RunConfig::from_settings(&s, Some("42")).unwrap().seed, 42);
        assert_eq!(RunConfig::from_settings(&s, None).unwrap().seed, 0);
    }

    #[test]
    fn grid_order_is_row_major() {
        let base = Settings::parse("scheme=mt\nK=4\nL=2\nt=1").unwrap();
        let axes = [Axis::parse("L=1,2").unwrap(), Axis::parse("M=2,3").unwrap()];
        let pts = grid(&base, &axes).unwrap();
        let got: Vec<(String, String)> = pts
            .iter()
            .map(|p| (p.get("L").unwrap().into(), p.get("M").unwrap().into()))
            .collect();
        assert_eq!(
            got,
            [("1", "2"), ("1", "3"), ("2", "2"), ("2", "3")].map(|(a, b)| (a.into(), b.into()))
        );
        assert!(pts.iter().all(|p| p.get("t").is_none()));
        assert!(grid(&base, &[Axis::parse("M=").unwrap()])
            .unwrap()
            .is_empty());
    }
}
