//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # two descriptions on the square lattice
//! lattice = Z2
//! source = gaussian
//! variance = 1
//! loss = 0.05, 0.05
//! rstar = 6
//! vectors = 200000
//! seed = 1
//! ```
//!
//! Keys: `lattice` (Z1, Z2, A2), `dim` (optional check), `descriptions`
//! (optional check against `loss`), `source` (`gaussian` or `custom`),
//! `variance` (gaussian, default 1), `entropy` and `mean_power` (custom),
//! `loss`, `rstar`, `rate_split`, `psi`, `indices`, `vectors` (default
//! 200000), `seed` (default 1), `cap` (default 10000), `output`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::experiment::Experiment;
use crate::hr::SourceModel;
use crate::labeling::DEFAULT_N_PI_CAP;
use crate::lattice::LatticeKind;
use crate::loss::ChannelModel;

const KEYS: &[&str] = &[
    "lattice",
    "dim",
    "descriptions",
    "source",
    "variance",
    "entropy",
    "mean_power",
    "loss",
    "rstar",
    "rate_split",
    "psi",
    "indices",
    "vectors",
    "seed",
    "cap",
    "output",
];

/// Parsed configuration file; values keep the line they came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    entries: BTreeMap<String, (usize, String)>,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected 'key = value', found '{body}'")))?;
            let key = k.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(err(line, format!("unknown key '{key}'")));
            }
            let value = v.trim().to_string();
            if value.is_empty() {
                return Err(err(line, format!("empty value for '{key}'")));
            }
            if let Some((prev, _)) = entries.insert(key.clone(), (line, value)) {
                return Err(err(line, format!("duplicate key '{key}' (first set on line {prev})")));
            }
        }
        Ok(ExperimentConfig { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Overrides or adds a value; used for command-line flags.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    /// Normalized text: sorted keys, one per line. Its hash identifies a run.
    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .map(|(k, (_, v))| format!("{k} = {v}\n"))
            .collect()
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(l, _)| *l)
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| err(0, format!("missing required key '{key}'")))
    }

    fn scalar<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| err(self.line(key), format!("bad value for '{key}': '{v}'"))))
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<T>()
                            .map_err(|_| err(self.line(key), format!("bad entry '{}' in '{key}'", s.trim())))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn output(&self) -> Option<&str> {
        self.get("output")
    }

    pub fn to_experiment(&self) -> Result<Experiment> {
        let name = self.required("lattice")?;
        let lattice = LatticeKind::parse(name).ok_or_else(|| err(self.line("lattice"), format!("unknown lattice '{name}'")))?;
        let dim = lattice.dim();
        if let Some(d) = self.scalar::<usize>("dim")? {
            if d != dim {
                return Err(err(self.line("dim"), format!("dim = {d} but {lattice} has dimension {dim}")));
            }
        }

        let source = match self.get("source").unwrap_or("gaussian") {
            "gaussian" => {
                let var = self.scalar::<f64>("variance")?.unwrap_or(1.0);
                SourceModel::gaussian(dim, var).map_err(|e| err(self.line("variance"), e.to_string()))?
            }
            "custom" => {
                let h = self.scalar::<f64>("entropy")?.ok_or_else(|| err(self.line("source"), "custom source needs 'entropy'"))?;
                let m = self.scalar::<f64>("mean_power")?.ok_or_else(|| err(self.line("source"), "custom source needs 'mean_power'"))?;
                SourceModel::custom(dim, h, m).map_err(|e| err(self.line("entropy"), e.to_string()))?
            }
            other => return Err(err(self.line("source"), format!("unknown source '{other}'"))),
        };

        self.required("loss")?;
        let loss = self.list::<f64>("loss")?.unwrap_or_default();
        let channel = ChannelModel::new(loss).map_err(|e| err(self.line("loss"), e.to_string()))?;
        if let Some(k) = self.scalar::<usize>("descriptions")? {
            if k != channel.k() {
                return Err(err(
                    self.line("descriptions"),
                    format!("descriptions = {k} but 'loss' has {} entries", channel.k()),
                ));
            }
        }

        self.required("rstar")?;
        let rstar = self.scalar::<f64>("rstar")?.unwrap_or_default();
        if !(rstar > 0.0) {
            return Err(err(self.line("rstar"), "rstar must be positive"));
        }
        let rate_split = self.list::<f64>("rate_split")?;
        if let Some(a) = &rate_split {
            if a.len() != channel.k() {
                return Err(err(self.line("rate_split"), format!("{} fractions for {} descriptions", a.len(), channel.k())));
            }
        }
        let psi = self.scalar::<f64>("psi")?;
        if matches!(psi, Some(p) if !(p >= 1.0)) {
            return Err(err(self.line("psi"), "psi must be at least 1"));
        }
        let indices = self.list::<u64>("indices")?;
        if let Some(n) = &indices {
            if n.len() != channel.k() || n.contains(&0) {
                return Err(err(self.line("indices"), "need one positive index per description"));
            }
        }
        let vector_count = self.scalar::<usize>("vectors")?.unwrap_or(200_000);
        if vector_count == 0 {
            return Err(err(self.line("vectors"), "vectors must be at least 1"));
        }
        let seed = self.scalar::<u64>("seed")?.unwrap_or(1);
        let n_pi_cap = self.scalar::<u64>("cap")?.unwrap_or(DEFAULT_N_PI_CAP);

        Ok(Experiment {
            rate_split,
            psi,
            indices,
            vector_count,
            seed,
            n_pi_cap,
            ..Experiment::new(lattice, source, channel, rstar)
        })
    }
}
