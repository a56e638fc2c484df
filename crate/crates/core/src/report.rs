//! CSV output with a `#`-prefixed metadata header, and a reader for it.

use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiment::SweepPoint;
use crate::hr::{DesignParams, DistortionPrediction, SourceModel};
use crate::labeling::IndexAssignment;
use crate::sim::{predicted_conditional, SimReport, GAUSSIAN_METHOD, RNG_SCHEME};

/// Provenance written at the top of every report.
#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub config_hash: String,
    pub seed: u64,
}

impl Metadata {
    /// Hashes the canonical configuration text.
    pub fn new(canonical_config: &str, seed: u64) -> Self {
        let digest = Sha256::digest(canonical_config.as_bytes());
        Metadata {
            config_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed,
        }
    }

    fn write<W: Write>(&self, w: &mut W, kind: &str) -> Result<()> {
        writeln!(w, "# report = {kind}")?;
        writeln!(w, "# version = mdlvq {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# config_sha256 = {}", self.config_hash)?;
        writeln!(w, "# seed = {}", self.seed)?;
        writeln!(w, "# gaussian = {GAUSSIAN_METHOD}")?;
        writeln!(w, "# rng = {RNG_SCHEME}")?;
        Ok(())
    }
}

fn join_u64(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(";")
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

/// Design record: one `field,value` row per quantity.
pub fn write_design<W: Write>(mut w: W, meta: &Metadata, d: &DesignParams, pred: &DistortionPrediction) -> Result<()> {
    meta.write(&mut w, "design")?;
    writeln!(w, "field,value")?;
    let rows: [(&str, String); 15] = [
        ("rstar", d.rstar.to_string()),
        ("rate_split", join_f64(&d.a)),
        ("psi", d.psi.to_string()),
        ("tau_star", d.tau_star.to_string()),
        ("nu_opt", d.nu_opt.to_string()),
        ("n_opt", join_f64(&d.ni_opt)),
        ("n_snapped", join_u64(&d.ni_snapped)),
        ("nu_rescaled", d.nu_rescaled.to_string()),
        ("rc_opt", d.rc_opt.to_string()),
        ("rc_snapped", d.rc_snapped.to_string()),
        ("ri_snapped", join_f64(&d.ri_snapped)),
        ("central_term", pred.central_term.to_string()),
        ("zero_term", pred.zero_term.to_string()),
        ("side_term", pred.side_term.to_string()),
        ("predicted_total", pred.total.to_string()),
    ];
    for (k, v) in rows {
        writeln!(w, "{k},{v}")?;
    }
    Ok(())
}

pub const RUN_COLUMNS: &str = "record,subset,hits,empirical,std_error,predicted";

/// Simulation record: a `total` row, one `subset` row per observed subset and
/// one `entropy` row per description.
pub fn write_run<W: Write>(mut w: W, meta: &Metadata, r: &SimReport, asg: &IndexAssignment, src: &SourceModel) -> Result<()> {
    meta.write(&mut w, "simulate")?;
    writeln!(w, "{RUN_COLUMNS}")?;
    writeln!(
        w,
        "total,all,{},{},{},{}",
        r.vector_count, r.empirical_total, r.standard_error, r.predicted.total
    )?;
    for s in &r.per_subset {
        writeln!(
            w,
            "subset,{},{},{},{},{}",
            s.subset,
            s.hits,
            s.conditional,
            s.std_error,
            predicted_conditional(asg, src, s.subset)?
        )?;
    }
    let lat = asg.setup().central();
    let n: Vec<f64> = asg.setup().indices().iter().map(|&x| x as f64).collect();
    let (_, ri) = crate::hr::rates(lat.cell_volume(), &n, src)?;
    for (i, (h, r_i)) in r.empirical_side_entropy.iter().zip(&ri).enumerate() {
        writeln!(w, "entropy,{i},{},{h},0,{r_i}", r.vector_count)?;
    }
    Ok(())
}

pub const SWEEP_COLUMNS: &str = "param,value,indices,nu,predicted_total,central_term,zero_term,side_term,empirical_total,std_error";

/// One row per swept value.
pub fn write_sweep<W: Write>(mut w: W, meta: &Metadata, param: usize, points: &[SweepPoint]) -> Result<()> {
    meta.write(&mut w, "sweep")?;
    writeln!(w, "{SWEEP_COLUMNS}")?;
    for p in points {
        let pr = &p.report.predicted;
        writeln!(
            w,
            "p{param},{},{},{},{},{},{},{},{},{}",
            p.value,
            join_u64(&p.design.ni_snapped),
            p.design.nu_rescaled,
            pr.total,
            pr.central_term,
            pr.zero_term,
            pr.side_term,
            p.report.empirical_total,
            p.report.standard_error
        )?;
    }
    Ok(())
}

/// A report read back from disk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric value of column `name` in row `r`.
    pub fn number(&self, r: usize, name: &str) -> Result<f64> {
        let c = self
            .column(name)
            .ok_or_else(|| Error::Mismatch(format!("no column '{name}'")))?;
        self.rows[r][c].parse().map_err(|_| Error::Parse {
            line: r + 1,
            msg: format!("'{}' in column {name} is not a number", self.rows[r][c]),
        })
    }
}

pub fn read_csv<R: BufRead>(r: R) -> Result<CsvTable> {
    let mut t = CsvTable::default();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if let Some(m) = line.strip_prefix('#') {
            if let Some((k, v)) = m.split_once('=') {
                t.meta.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if t.columns.is_empty() {
            t.columns = fields;
        } else if fields.len() != t.columns.len() {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("{} fields, header has {}", fields.len(), t.columns.len()),
            });
        } else {
            t.rows.push(fields);
        }
    }
    if t.columns.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no header row".into(),
        });
    }
    Ok(t)
}
