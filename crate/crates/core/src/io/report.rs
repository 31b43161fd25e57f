//! CSV and JSON report formats.
//!
//! CSV reports start with a single `#` comment line carrying the tool
//! version, seed and configuration, followed by a header row.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = concat!("laplacian-apost ", env!("CARGO_PKG_VERSION"));

/// One experiment: `label,n,m,true_error,psi,eff,sweeps,seconds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub label: String,
    pub n: usize,
    pub m: usize,
    pub true_error: Option<f64>,
    pub psi: f64,
    pub eff: Option<f64>,
    pub sweeps: usize,
    pub seconds: f64,
}

/// One edge of a localized dump, in canonical edge order (1-based labels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerEdgeRow {
    pub i: usize,
    pub j: usize,
    pub w: f64,
    pub psi_e: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_e: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub seed: u64,
    pub config: String,
    pub rows: Vec<ExperimentRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_edge: Option<PerEdgeDump>,
}

/// Per-edge estimates with the localization sum check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerEdgeDump {
    pub psi: f64,
    pub sum_psi_e_sq: f64,
    pub edges: Vec<PerEdgeRow>,
}

/// Comparator row: `method,psi_or_sqrtE,true_error,eff,seconds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorRow {
    pub method: String,
    #[serde(rename = "psi_or_sqrtE")]
    pub psi_or_sqrt_e: f64,
    pub true_error: f64,
    pub eff: f64,
    pub seconds: f64,
}

impl ExperimentReport {
    pub fn new(seed: u64, config: impl Into<String>) -> Self {
        ExperimentReport {
            version: TOOL_VERSION.to_string(),
            seed,
            config: config.into(),
            rows: Vec::new(),
            per_edge: None,
        }
    }

    fn comment(&self) -> String {
        format!("# {} seed={} {}", self.version, self.seed, self.config)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.comment())?;
        write_rows(&mut w, &self.rows)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        serde_json::from_reader(r).map_err(|e| Error::Io(e.to_string()))
    }
}

impl PerEdgeDump {
    /// Writes `i,j,w,psi_e[,true_e]` with the sum check in a leading comment.
    pub fn write_csv<W: Write>(&self, mut w: W, header_comment: &str) -> Result<()> {
        writeln!(
            w,
            "# {header_comment} psi_sq={:e} sum_psi_e_sq={:e}",
            self.psi * self.psi,
            self.sum_psi_e_sq
        )?;
        let with_true = self.edges.iter().any(|e| e.true_e.is_some());
        let mut out = csv::Writer::from_writer(&mut w);
        if with_true {
            out.write_record(["i", "j", "w", "psi_e", "true_e"])
        } else {
            out.write_record(["i", "j", "w", "psi_e"])
        }
        .map_err(csv_err)?;
        for e in &self.edges {
            let mut rec = vec![
                e.i.to_string(),
                e.j.to_string(),
                e.w.to_string(),
                e.psi_e.to_string(),
            ];
            if with_true {
                rec.push(e.true_e.map(|t| t.to_string()).unwrap_or_default());
            }
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        serde_json::from_reader(r).map_err(|e| Error::Io(e.to_string()))
    }
}

pub fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads back rows written by [`ExperimentReport::write_csv`].
pub fn read_experiment_csv<R: Read>(r: R) -> Result<Vec<ExperimentRow>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    reader
        .deserialize()
        .map(|row| row.map_err(csv_err))
        .collect()
}

/// `sweep,objective`.
pub fn write_trace_csv<W: Write>(mut w: W, trace: &[f64]) -> Result<()> {
    writeln!(w, "sweep,objective")?;
    for (k, obj) in trace.iter().enumerate() {
        writeln!(w, "{k},{obj:e}")?;
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
