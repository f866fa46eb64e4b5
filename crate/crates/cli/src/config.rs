//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may appear
//! at most once and unknown keys are errors, so a misspelled key cannot
//! silently fall back to a default.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cylcover::coverage::{DilationKind, MAX_DIM};
use cylcover::processes::{DirectionalLaw, DEFAULT_BROWNIAN_STEPS};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key {0:?}")]
    Missing(&'static str),
    #[error("bad value for {key:?}: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, reason: reason.into() }
}

/// Key/value pairs with their line numbers, restricted to `allowed` keys.
fn parse_pairs(text: &str, allowed: &[&'static str]) -> Result<BTreeMap<&'static str, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: raw.to_string() });
        };
        let (k, v) = (k.trim(), v.trim());
        let Some(&key) = allowed.iter().find(|&&a| a == k) else {
            return Err(ConfigError::UnknownKey { line, key: k.to_string() });
        };
        if out.insert(key, v.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey { line, key: k.to_string() });
        }
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &'static str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| invalid(key, format!("{v:?}: {e}")))
}

fn parse_dim(v: &str) -> Result<usize, ConfigError> {
    let d: usize = parse_value("d", v)?;
    if !(2..=MAX_DIM).contains(&d) {
        return Err(invalid("d", format!("must lie in 2..={MAX_DIM}, got {d}")));
    }
    Ok(d)
}

fn parse_rho(key: &'static str, v: &str) -> Result<f64, ConfigError> {
    let rho: f64 = parse_value(key, v)?;
    // The normalization divides by log(rho).
    if !(rho > 1.0 && rho.is_finite()) {
        return Err(invalid(key, format!("intensities must be finite and greater than 1, got {rho}")));
    }
    Ok(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    LinesBall,
    LinesDisk,
    Brownian,
}

impl Model {
    pub fn dilation(self) -> DilationKind {
        match self {
            Model::LinesBall => DilationKind::FullBall,
            Model::LinesDisk | Model::Brownian => DilationKind::BaseDisk,
        }
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lines-ball" => Ok(Model::LinesBall),
            "lines-disk" => Ok(Model::LinesDisk),
            "brownian" => Ok(Model::Brownian),
            _ => Err("expected lines-ball, lines-disk or brownian".into()),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::LinesBall => "lines-ball",
            Model::LinesDisk => "lines-disk",
            Model::Brownian => "brownian",
        })
    }
}

/// Settings of an intensity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub model: Model,
    /// Directional law of the line models; `None` for Brownian sweeps.
    pub law: Option<DirectionalLaw>,
    pub rho_list: Vec<f64>,
    pub replications: usize,
    pub tol: f64,
    /// Time steps of the Brownian paths; `None` for line models.
    pub n_steps: Option<usize>,
    pub master_seed: u64,
    pub output_path: PathBuf,
}

const EXPERIMENT_KEYS: &[&str] =
    &["d", "model", "law", "rho_list", "replications", "tol", "n_steps", "master_seed", "output_path"];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with(text, None, None)
    }

    /// Parses `text`; `seed` and `out`, when given, replace `master_seed` and
    /// `output_path` (which may then be absent from the file).
    pub fn parse_with(text: &str, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self, ConfigError> {
        let mut kv = parse_pairs(text, EXPERIMENT_KEYS)?;
        let mut take = |k: &'static str| kv.remove(k);

        let d = parse_dim(&take("d").ok_or(ConfigError::Missing("d"))?)?;
        let model: Model = parse_value("model", &take("model").ok_or(ConfigError::Missing("model"))?)?;
        let law = match (model, take("law")) {
            (Model::Brownian, Some(_)) => return Err(invalid("law", "not allowed for brownian sweeps")),
            (Model::Brownian, None) => None,
            (_, None) => Some(DirectionalLaw::UniformHemisphere),
            (_, Some(v)) => Some(parse_value::<DirectionalLaw>("law", &v)?),
        };
        if let Some(law) = &law {
            let found = match law {
                DirectionalLaw::UniformHemisphere => d,
                DirectionalLaw::ConeRestricted(z) => z.ambient_dim(),
                DirectionalLaw::Fixed(s) => s.dim(),
            };
            if found != d {
                return Err(invalid("law", format!("law is for dimension {found}, not {d}")));
            }
        }
        let n_steps = match (model, take("n_steps")) {
            (Model::Brownian, None) => Some(DEFAULT_BROWNIAN_STEPS),
            (Model::Brownian, Some(v)) => {
                let n: usize = parse_value("n_steps", &v)?;
                if n < 1 {
                    return Err(invalid("n_steps", "must be at least 1"));
                }
                Some(n)
            }
            (_, Some(_)) => return Err(invalid("n_steps", "only allowed for brownian sweeps")),
            (_, None) => None,
        };

        let rho_text = take("rho_list").ok_or(ConfigError::Missing("rho_list"))?;
        let rho_list =
            rho_text.split(',').map(|t| parse_rho("rho_list", t.trim())).collect::<Result<Vec<f64>, _>>()?;
        if rho_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("rho_list", "must be strictly increasing"));
        }

        let replications: usize =
            parse_value("replications", &take("replications").ok_or(ConfigError::Missing("replications"))?)?;
        if replications < 1 {
            return Err(invalid("replications", "must be at least 1"));
        }
        let tol: f64 = parse_value("tol", &take("tol").ok_or(ConfigError::Missing("tol"))?)?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(invalid("tol", format!("must be positive and finite, got {tol}")));
        }
        let master_seed = match (seed, take("master_seed")) {
            (Some(s), _) => s,
            (None, Some(v)) => parse_value("master_seed", &v)?,
            (None, None) => return Err(ConfigError::Missing("master_seed")),
        };
        let output_path = match (out, take("output_path")) {
            (Some(p), _) => p,
            (None, Some(v)) if !v.is_empty() => PathBuf::from(v),
            (None, Some(_)) => return Err(invalid("output_path", "must not be empty")),
            (None, None) => return Err(ConfigError::Missing("output_path")),
        };

        Ok(ExperimentConfig { d, model, law, rho_list, replications, tol, n_steps, master_seed, output_path })
    }

    /// Path of the JSON summary: the results path with extension `json`.
    pub fn summary_path(&self) -> PathBuf {
        self.output_path.with_extension("json")
    }
}

/// Writes the config back in the file format; `parse` reads it unchanged.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d = {}", self.d)?;
        writeln!(f, "model = {}", self.model)?;
        if let Some(law) = &self.law {
            writeln!(f, "law = {law}")?;
        }
        let rhos: Vec<String> = self.rho_list.iter().map(|r| r.to_string()).collect();
        writeln!(f, "rho_list = {}", rhos.join(", "))?;
        writeln!(f, "replications = {}", self.replications)?;
        writeln!(f, "tol = {}", self.tol)?;
        if let Some(n) = self.n_steps {
            writeln!(f, "n_steps = {n}")?;
        }
        writeln!(f, "master_seed = {}", self.master_seed)?;
        writeln!(f, "output_path = {}", self.output_path.display())
    }
}

/// Settings of the `verify` cross-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub d: usize,
    pub rho: f64,
    /// Radius constant: `r = (c log rho / rho)^{1/(d-1)}`.
    pub c: f64,
    pub n_reps: usize,
    pub master_seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { d: 2, rho: 1e4, c: 1.0, n_reps: 200, master_seed: 0 }
    }
}

const VERIFY_KEYS: &[&str] = &["d", "rho", "c", "n_reps", "master_seed"];

impl VerifyConfig {
    /// Parses a file holding any of `d`, `rho`, `c`, `n_reps`, `master_seed`;
    /// missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let kv = parse_pairs(text, VERIFY_KEYS)?;
        let mut cfg = VerifyConfig::default();
        for (k, v) in kv {
            match k {
                "d" => cfg.d = parse_dim(&v)?,
                "rho" => cfg.rho = parse_value("rho", &v)?,
                "c" => cfg.c = parse_value("c", &v)?,
                "n_reps" => cfg.n_reps = parse_value("n_reps", &v)?,
                "master_seed" => cfg.master_seed = parse_value("master_seed", &v)?,
                _ => unreachable!(),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(2..=MAX_DIM).contains(&self.d) {
            return Err(invalid("d", format!("must lie in 2..={MAX_DIM}, got {}", self.d)));
        }
        parse_rho("rho", &self.rho.to_string())?;
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(invalid("c", format!("must be finite and nonnegative, got {}", self.c)));
        }
        if self.n_reps < 2 {
            return Err(invalid("n_reps", "need at least 2 replications for a variance"));
        }
        Ok(())
    }

    /// Dilation radius `(c log rho / rho)^{1/(d-1)}`.
    pub fn radius(&self) -> f64 {
        (self.c * self.rho.ln() / self.rho).powf(1.0 / (self.d - 1) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "\
# sweep
d = 2
model = lines-ball
rho_list = 100, 1000
replications = 3
tol = 1e-6
master_seed = 7
output_path = out.csv
";

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::parse(BASIC).unwrap();
        assert_eq!(cfg.rho_list, vec![100.0, 1000.0]);
        assert_eq!(cfg.law, Some(DirectionalLaw::UniformHemisphere));
        assert_eq!(cfg.n_steps, None);
        assert_eq!(ExperimentConfig::parse(&cfg.to_string()).unwrap(), cfg);
        assert_eq!(cfg.summary_path(), PathBuf::from("out.json"));
    }

    #[test]
    fn unknown_and_duplicate_keys_fail() {
        let e = ExperimentConfig::parse(&format!("{BASIC}rho_lst = 5\n")).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { line: 9, .. }), "{e}");
        let e = ExperimentConfig::parse(&format!("{BASIC}d = 3\n")).unwrap_err();
        assert!(matches!(e, ConfigError::DuplicateKey { .. }), "{e}");
        assert!(matches!(ExperimentConfig::parse("d 2"), Err(ConfigError::Syntax { .. })));
    }

    #[test]
    fn rho_list_must_increase() {
        let bad = BASIC.replace("100, 1000", "1000, 100");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(ConfigError::Invalid { key: "rho_list", .. })));
        let bad = BASIC.replace("100, 1000", "100, 100");
        assert!(ExperimentConfig::parse(&bad).is_err());
        let bad = BASIC.replace("100, 1000", "0.5");
        assert!(ExperimentConfig::parse(&bad).is_err());
    }

    #[test]
    fn brownian_rules() {
        let b = BASIC.replace("lines-ball", "brownian");
        let cfg = ExperimentConfig::parse(&b).unwrap();
        assert_eq!(cfg.n_steps, Some(DEFAULT_BROWNIAN_STEPS));
        assert_eq!(cfg.law, None);
        assert!(ExperimentConfig::parse(&format!("{b}law = uniform\n")).is_err());
        assert_eq!(ExperimentConfig::parse(&format!("{b}n_steps = 64\n")).unwrap().n_steps, Some(64));
        assert!(ExperimentConfig::parse(&format!("{BASIC}n_steps = 64\n")).is_err());
    }

    #[test]
    fn overrides_replace_file_values() {
        let cfg = ExperimentConfig::parse_with(BASIC, Some(99), Some("x.csv".into())).unwrap();
        assert_eq!((cfg.master_seed, cfg.output_path), (99, PathBuf::from("x.csv")));
        let text = BASIC.replace("master_seed = 7\n", "");
        assert_eq!(ExperimentConfig::parse(&text), Err(ConfigError::Missing("master_seed")));
        assert_eq!(ExperimentConfig::parse_with(&text, Some(1), None).unwrap().master_seed, 1);
    }

    #[test]
    fn law_dimension_must_match() {
        let bad = format!("{BASIC}law = cone:+1,-1\n");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(ConfigError::Invalid { key: "law", .. })));
        let ok = format!("{BASIC}law = cone:-1\n");
        assert!(ExperimentConfig::parse(&ok).is_ok());
    }

    #[test]
    fn verify_config_defaults_and_errors() {
        let cfg = VerifyConfig::parse("rho = 1000\nc = 0\n").unwrap();
        assert_eq!((cfg.d, cfg.rho, cfg.c, cfg.n_reps), (2, 1000.0, 0.0, 200));
        assert!(VerifyConfig::parse("rho = -1\n").is_err());
        assert!(VerifyConfig::parse("rho = 0\n").is_err());
        assert!(VerifyConfig::parse("tol = 1\n").is_err());
    }
}
