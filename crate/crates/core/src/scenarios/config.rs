//! Flat `key=value` configuration with section-prefixed keys
//! (`model.sigma=0.3`). Later assignments win, so a file can override the
//! scenario defaults and `--set` pairs can override the file.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Config {
            entries: pairs
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    /// Parses `key=value` lines; `#` starts a comment, blank lines are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::new();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line).map_err(|e| {
                Error::Config(format!("line {}: {e}", lineno + 1))
            })?;
        }
        Ok(())
    }

    /// Applies one `key=value` assignment.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair.split_once('=').ok_or_else(|| {
            Error::Config(format!("expected key=value, got `{pair}`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("empty key in `{pair}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Canonical text: sorted `key=value` lines, one per line. Stable
    /// input for config hashing.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    /// Rejects keys outside the scenario's accepted set, so typos in
    /// `--set` fail loudly instead of being ignored.
    pub fn validate_keys(&self, allowed: &[&str]) -> Result<()> {
        for key in self.entries.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "unknown config key `{key}`; accepted keys: {}",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing config key `{key}`")))?;
        raw.parse::<f64>()
            .map_err(|_| Error::Config(format!("config key `{key}`: `{raw}` is not a number")))
    }

    pub fn positive_f64(&self, key: &str) -> Result<f64> {
        let v = self.f64(key)?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Config(format!(
                "config key `{key}`: must be positive, got {v}"
            )));
        }
        Ok(v)
    }

    pub fn nonnegative_f64(&self, key: &str) -> Result<f64> {
        let v = self.f64(key)?;
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::Config(format!(
                "config key `{key}`: must be nonnegative, got {v}"
            )));
        }
        Ok(v)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing config key `{key}`")))?;
        raw.parse::<usize>().map_err(|_| {
            Error::Config(format!(
                "config key `{key}`: `{raw}` is not a nonnegative integer"
            ))
        })
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing config key `{key}`")))?;
        raw.parse::<u64>().map_err(|_| {
            Error::Config(format!(
                "config key `{key}`: `{raw}` is not a nonnegative integer"
            ))
        })
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing config key `{key}`")))?;
        match raw {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(Error::Config(format!(
                "config key `{key}`: `{raw}` is not a boolean"
            ))),
        }
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Config(format!("missing config key `{key}`")))?;
        raw.split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::Config(format!("config key `{key}`: `{s}` is not a number"))
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut cfg = Config::parse("model.sigma = 0.3\n# comment\ntime.dt=1e-4\n").unwrap();
        assert_eq!(cfg.f64("model.sigma").unwrap(), 0.3);
        cfg.set_pair("model.sigma=0.5").unwrap();
        assert_eq!(cfg.f64("model.sigma").unwrap(), 0.5);
        assert!(cfg.set_pair("nonsense").is_err());
    }

    #[test]
    fn canonical_text_is_sorted_and_stable() {
        let a = Config::parse("b=2\na=1\n").unwrap();
        let b = Config::parse("a=1\nb=2\n").unwrap();
        assert_eq!(a.canonical_text(), b.canonical_text());
        assert_eq!(a.canonical_text(), "a=1\nb=2\n");
    }

    #[test]
    fn typed_getters_validate() {
        let cfg = Config::parse("x=-1\nflag=yes\nlist=0.1, 0.5,1.0\n").unwrap();
        assert!(cfg.positive_f64("x").is_err());
        assert!(cfg.bool("flag").unwrap());
        assert_eq!(cfg.f64_list("list").unwrap(), vec![0.1, 0.5, 1.0]);
        assert!(cfg.f64("missing").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg = Config::parse("model.sigma=1\n").unwrap();
        assert!(cfg.validate_keys(&["model.sigma"]).is_ok());
        assert!(cfg.validate_keys(&["time.dt"]).is_err());
    }
}
