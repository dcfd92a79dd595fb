//! Flat `key = value` configuration.

use thiserror::Error;

use crate::microstructure::Kind;
use crate::spectral::SpectralConfig;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("`{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Config {
    pub theta: f64,
    #[serde(rename = "M_loc2")]
    pub m_loc2: f64,
    pub mollifier_width: f64,
    pub mu0: f64,
    #[serde(rename = "grid_N")]
    pub grid_n: usize,
    pub eps_list: Vec<f64>,
    pub kind: Kind,
}

pub const KEYS: [&str; 7] = ["theta", "M_loc2", "mollifier_width", "mu0", "grid_N", "eps_list", "kind"];

/// Eight log-spaced values in [1e-5, 1e-2].
pub fn default_eps_list() -> Vec<f64> {
    (0..8).map(|i| 10f64.powf(-5.0 + 3.0 * i as f64 / 7.0)).collect()
}

impl Default for Config {
    fn default() -> Self {
        let s = SpectralConfig::default();
        Config {
            theta: 0.4,
            m_loc2: s.m_loc2,
            mollifier_width: s.mollifier_width,
            mu0: s.mu0,
            grid_n: 64,
            eps_list: default_eps_list(),
            kind: Kind::FullSecondOrder,
        }
    }
}

fn value_err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.into(), msg: msg.into() }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.parse().map_err(|_| value_err(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(value_err(key, "must be finite"));
    }
    Ok(x)
}

fn open_unit(key: &str, x: f64) -> Result<f64, ConfigError> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(value_err(key, format!("{x} must lie in (0, 1)")))
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        let mut seen: Vec<&str> = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = no + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, val) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, val) = (key.trim(), val.trim());
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError::UnknownKey { line, key: key.into() });
            };
            if seen.contains(&known) {
                return Err(ConfigError::Duplicate { line, key: key.into() });
            }
            seen.push(known);
            match known {
                "theta" => cfg.theta = parse_f64(key, val)?,
                "M_loc2" => cfg.m_loc2 = parse_f64(key, val)?,
                "mollifier_width" => cfg.mollifier_width = open_unit(key, parse_f64(key, val)?)?,
                "mu0" => cfg.mu0 = open_unit(key, parse_f64(key, val)?)?,
                "grid_N" => {
                    cfg.grid_n = val.parse().map_err(|_| value_err(key, format!("`{val}` is not an integer")))?
                }
                "eps_list" => {
                    cfg.eps_list = val
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_f64(key, s))
                        .collect::<Result<_, _>>()?
                }
                _ => cfg.kind = Kind::parse(val).ok_or_else(|| value_err(key, format!("unknown kind `{val}`")))?,
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &str) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.into(), msg: e.to_string() })?;
        Config::parse(&text)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if !(self.theta > 0.25 && self.theta < 0.5) {
            return Err(value_err("theta", format!("{} must lie in (1/4, 1/2)", self.theta)));
        }
        if self.m_loc2 <= 4.0 {
            return Err(value_err("M_loc2", format!("{} must exceed 4", self.m_loc2)));
        }
        if self.grid_n < 64 || !self.grid_n.is_power_of_two() {
            return Err(value_err("grid_N", format!("{} must be a power of two, at least 64", self.grid_n)));
        }
        if let Some(e) = self.eps_list.iter().find(|e| **e <= 0.0) {
            return Err(value_err("eps_list", format!("{e} must be positive")));
        }
        Ok(())
    }

    pub fn spectral(&self) -> SpectralConfig {
        SpectralConfig { mollifier_width: self.mollifier_width, mu0: self.mu0, m_loc2: self.m_loc2, ..SpectralConfig::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "# sweep\ntheta = 0.35\nM_loc2 = 6\nmollifier_width=0.1\nmu0 = 0.12\ngrid_N = 128\n\
                    eps_list = 1e-4, 1e-3 1e-2\nkind = dirichlet\n";
        let c = Config::parse(text).unwrap();
        assert_eq!(c.theta, 0.35);
        assert_eq!(c.grid_n, 128);
        assert_eq!(c.eps_list, vec![1e-4, 1e-3, 1e-2]);
        assert_eq!(c.kind, Kind::FullDirichletCutoff);
        assert_eq!(c.spectral().m_loc2, 6.0);
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert_eq!(Config::parse("foo = 1").unwrap_err(), ConfigError::UnknownKey { line: 1, key: "foo".into() });
        assert!(matches!(Config::parse("theta 0.4"), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(Config::parse("theta = 0.6"), Err(ConfigError::Value { .. })));
        assert!(matches!(Config::parse("grid_N = 100"), Err(ConfigError::Value { .. })));
        assert!(matches!(Config::parse("kind = x"), Err(ConfigError::Value { .. })));
        assert!(matches!(Config::parse("mu0 = 0.1\nmu0 = 0.2"), Err(ConfigError::Duplicate { line: 2, .. })));
    }

    #[test]
    fn empty_text_gives_defaults() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.eps_list.len(), 8);
        assert!((c.eps_list[7] - 1e-2).abs() < 1e-15);
    }
}
