//! Flat `key = value` configuration with a fixed key set, and the value
//! syntaxes shared by the harness and the command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Parses `key = value` lines; `#` starts a comment. Later lines override
/// earlier ones.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key = value, got {raw:?}", lineno + 1))
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("{key}: {v:?} is not a finite number")))
}

pub fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("{key}: {v:?} is not a non-negative integer")))
}

/// Comma-separated numbers.
pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let items: Vec<f64> = v
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_f64(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

/// Comma-separated `lo:hi` pairs.
pub fn parse_pairs(key: &str, v: &str) -> Result<Vec<(f64, f64)>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("{key}: {p:?} is not lo:hi")))?;
            Ok((parse_f64(key, a)?, parse_f64(key, b)?))
        })
        .collect()
}

/// `start:stop:step`, inclusive of `stop` when it lies on the grid (up to
/// rounding). An empty or malformed grid is an error.
pub fn parse_grid(key: &str, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("{key}: grid must be start:stop:step, got {v:?}")));
    }
    let (a, b, h) = (
        parse_f64(key, parts[0])?,
        parse_f64(key, parts[1])?,
        parse_f64(key, parts[2])?,
    );
    grid(a, b, h).map_err(|e| Error::Config(format!("{key}: {e}")))
}

pub fn grid(a: f64, b: f64, h: f64) -> std::result::Result<Vec<f64>, String> {
    if !(h > 0.0) {
        return Err(format!("step {h} must be positive"));
    }
    if b < a {
        return Err(format!("empty grid {a}:{b}:{h}"));
    }
    let n = ((b - a) / h + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| a + i as f64 * h).collect())
}

/// Hex SHA-256 of `text`.
pub fn digest_text(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Key set with defaults and documentation; values are kept as text.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyValueConfig {
    known: &'static [(&'static str, &'static str, &'static str)],
    values: BTreeMap<String, String>,
}

impl KeyValueConfig {
    pub fn with_defaults(known: &'static [(&'static str, &'static str, &'static str)]) -> Self {
        Self {
            known,
            values: known
                .iter()
                .map(|(k, v, _)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !self.known.iter().any(|(k, _, _)| *k == key) {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        self.values.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_key_values(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("key {key:?} has no default"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.raw(key))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        parse_usize(key, self.raw(key))
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        parse_list(key, self.raw(key))
    }

    pub fn grid(&self, key: &str) -> Result<Vec<f64>> {
        parse_grid(key, self.raw(key))
    }

    pub fn pairs(&self, key: &str) -> Result<Vec<(f64, f64)>> {
        parse_pairs(key, self.raw(key))
    }

    /// Sorted `key = value` lines of every effective value.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// SHA-256 of [`Self::canonical`], hex encoded.
    pub fn digest(&self) -> String {
        digest_text(&self.canonical())
    }

    pub fn documentation(&self) -> impl Iterator<Item = (&'static str, &'static str, &'static str)> + '_ {
        self.known.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYS: &[(&str, &str, &str)] = &[("a", "1", "first"), ("b.c", "x", "second")];

    #[test]
    fn comments_overrides_and_unknown_keys() {
        let mut c = KeyValueConfig::with_defaults(KEYS);
        c.apply_text("# header\n a = 2 # inline\n\na=3\n").unwrap();
        assert_eq!(c.usize("a").unwrap(), 3);
        assert!(matches!(c.apply_text("zzz = 1"), Err(Error::Config(_))));
        assert!(matches!(c.apply_text("novalue"), Err(Error::Config(_))));
    }

    #[test]
    fn digest_depends_on_values_only() {
        let mut a = KeyValueConfig::with_defaults(KEYS);
        let b = KeyValueConfig::with_defaults(KEYS);
        assert_eq!(a.digest(), b.digest());
        a.set("b.c", "y").unwrap();
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn grids() {
        let g = parse_grid("g", "0.15:1.45:0.05").unwrap();
        assert_eq!(g.len(), 27);
        assert!((g[26] - 1.45).abs() < 1e-12);
        assert_eq!(parse_grid("g", "0.2:1.4:0.1").unwrap().len(), 13);
        assert!(parse_grid("g", "1:0:0.1").is_err());
        assert!(parse_grid("g", "0:1:0").is_err());
        assert!(parse_grid("g", "0:1").is_err());
    }
}
