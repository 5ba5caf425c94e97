//! Run configuration: the harness keys plus what a single command needs to
//! pick a domain and place its outputs.

use std::path::PathBuf;

use extremal_core::config::{digest_text, parse_f64, parse_key_values, KeyValueConfig};
use extremal_core::harness::HarnessConfig;
use extremal_core::{Error, RadialDomain, Result, WarpedSurface};

pub const RUN_KEYS: &[(&str, &str, &str)] = &[
    ("surface", "sphere-band", "sphere-band, sphere-polar or flat"),
    ("band", "", "band r1:r2 in radians"),
    ("disk", "", "geodesic disk radius r0 in radians"),
    ("out_dir", "out", "directory for JSON and CSV outputs"),
    ("formats", "json,csv", "output formats to write, any of json, csv"),
];

#[derive(Clone, Debug)]
pub struct RunConfig {
    run: KeyValueConfig,
    pub harness: HarnessConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run: KeyValueConfig::with_defaults(RUN_KEYS),
            harness: HarnessConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if RUN_KEYS.iter().any(|(k, _, _)| *k == key) {
            self.run.set(key, value)
        } else if HarnessConfig::is_key(key) {
            self.harness.set(key, value)
        } else {
            Err(Error::Config(format!("unknown key {key:?}")))
        }
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_key_values(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    /// `k=v` override from the command line.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got {kv:?}")))?;
        self.set(k.trim(), v)
    }

    pub fn digest(&self) -> String {
        digest_text(&format!("{}{}", self.run.canonical(), self.harness.canonical()))
    }

    pub fn surface(&self) -> Result<WarpedSurface> {
        WarpedSurface::from_name(self.run.raw("surface"))
    }

    pub fn nodes(&self) -> Result<usize> {
        self.harness.values().usize("nodes")
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.run.raw("out_dir"))
    }

    pub fn writes(&self, format: &str) -> Result<bool> {
        let mut hit = false;
        for f in self.run.raw("formats").split(',').map(str::trim).filter(|f| !f.is_empty()) {
            if f != "json" && f != "csv" {
                return Err(Error::Config(format!("formats: unknown format {f:?}")));
            }
            hit |= f == format;
        }
        Ok(hit)
    }

    /// The domain selected by `band` or `disk`; exactly one must be set.
    /// Bounds are validated by the domain constructors.
    pub fn domain(&self) -> Result<RadialDomain> {
        let s = self.surface()?;
        match (self.run.raw("band"), self.run.raw("disk")) {
            ("", "") => Err(Error::Config("one of band or disk is required".into())),
            (b, "") => {
                let (lo, hi) = b
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("band: {b:?} is not r1:r2")))?;
                RadialDomain::band(s, parse_f64("band", lo)?, parse_f64("band", hi)?)
            }
            ("", d) => RadialDomain::disk(s, parse_f64("disk", d)?),
            _ => Err(Error::Config("band and disk are mutually exclusive".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_route_and_unknown_keys_fail() {
        let mut c = RunConfig::default();
        c.apply_text("surface = flat\nband = -0.5:0.5\nnodes = 256\n").unwrap();
        assert_eq!(c.nodes().unwrap(), 256);
        assert!(c.domain().is_ok());
        assert!(matches!(c.set("bogus", "1"), Err(Error::Config(_))));
        assert!(c.apply_override("nodes").is_err());
    }

    #[test]
    fn digest_tracks_every_value() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        b.set("out_dir", "elsewhere").unwrap();
        assert_ne!(a.digest(), b.digest());
        let mut c = RunConfig::default();
        c.set("k_max", "10").unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn domain_selection() {
        let mut c = RunConfig::default();
        assert!(c.domain().is_err());
        c.set("disk", "0.5").unwrap();
        c.set("band", "-0.5:0.5").unwrap();
        assert!(matches!(c.domain(), Err(Error::Config(_))));
        c.set("disk", "").unwrap();
        c.set("band", "0.5:-0.5").unwrap();
        assert!(c.domain().is_err());
    }
}
