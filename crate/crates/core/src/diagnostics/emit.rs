//! JSONL (canonical) and CSV (flat) diagnostics files.
//!
//! JSONL: the first line is `{"schema":"gkrf.diagnostics","version":1}`, then one record
//! object per line with fields in declaration order. CSV: one header row, then one row
//! per record; the first column repeats the schema version and absent potential-path
//! values are empty cells. Floats are written in shortest round-trip form, so both
//! formats read back bit-exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DiagnosticsRecord, PotentialRecord};
use crate::error::{GkError, Result};

pub const SCHEMA_NAME: &str = "gkrf.diagnostics";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
    version: u32,
}

fn header_line() -> String {
    serde_json::to_string(&Header {
        schema: SCHEMA_NAME.into(),
        version: SCHEMA_VERSION,
    })
    .expect("header serializes")
}

/// Streaming JSONL writer that flushes after every record.
pub struct JsonlWriter {
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header_line())?;
        out.flush()?;
        Ok(JsonlWriter { out })
    }

    pub fn write(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        let line = serde_json::to_string(rec).map_err(|e| GkError::Format(e.to_string()))?;
        writeln!(self.out, "{line}")?;
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_jsonl(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = JsonlWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = lines
        .next()
        .ok_or_else(|| GkError::Format("diagnostics file has no header".into()))??;
    let header: Header = serde_json::from_str(&first).map_err(|e| GkError::Format(e.to_string()))?;
    check_version(&header.schema, header.version)?;
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| GkError::Format(e.to_string()))?);
    }
    Ok(out)
}

fn check_version(schema: &str, version: u32) -> Result<()> {
    if schema != SCHEMA_NAME || version != SCHEMA_VERSION {
        return Err(GkError::Format(format!(
            "unsupported diagnostics schema {schema} v{version}"
        )));
    }
    Ok(())
}

const POTENTIAL_COLUMNS: [&str; 3] = ["sup_beta_sq", "df_dt_sup", "trace_bound_slack"];

/// Flat `(name, value)` list in file order; `None` marks an absent potential value.
pub(super) fn columns(r: &DiagnosticsRecord) -> Vec<(&'static str, Option<f64>)> {
    let mut c = vec![
        ("step", Some(r.step as f64)),
        ("t", Some(r.t)),
        ("dt", Some(r.dt)),
        ("p_min", Some(r.p_min)),
        ("p_max", Some(r.p_max)),
        ("sup_grad_mu_sq", Some(r.sup_grad_mu_sq)),
        ("decay_bound_value", Some(r.decay_bound_value)),
        ("decay_bound_slack", Some(r.decay_bound_slack)),
        ("mu_heat_residual", Some(r.mu_heat_residual)),
        ("theta_identity_residual", Some(r.theta_identity_residual)),
        ("sup_theta", Some(r.sup_theta)),
        ("sup_h", Some(r.sup_h)),
        ("sup_dp", Some(r.sup_dp)),
        ("det_ratio_min", Some(r.det_ratio_min)),
        ("det_ratio_max", Some(r.det_ratio_max)),
        ("gk_constraint_residual", Some(r.gk_constraint_residual)),
        ("torsion_i_residual", Some(r.torsion_i_residual)),
        ("torsion_j_residual", Some(r.torsion_j_residual)),
        ("dh_residual", Some(r.dh_residual)),
        ("integral_dp", Some(r.integral_dp)),
        ("h_identity_residual", Some(r.h_identity_residual)),
        ("hk_closedness_0", Some(r.hk_closedness[0])),
        ("hk_closedness_1", Some(r.hk_closedness[1])),
        ("hk_closedness_2", Some(r.hk_closedness[2])),
    ];
    let p = r.potential;
    c.push((POTENTIAL_COLUMNS[0], p.map(|p| p.sup_beta_sq)));
    c.push((POTENTIAL_COLUMNS[1], p.map(|p| p.df_dt_sup)));
    c.push((POTENTIAL_COLUMNS[2], p.map(|p| p.trace_bound_slack)));
    c
}

fn column_names() -> Vec<&'static str> {
    columns(&DiagnosticsRecord::default()).into_iter().map(|(n, _)| n).collect()
}

pub fn write_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["schema_version"];
    header.extend(column_names());
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![SCHEMA_VERSION.to_string()];
        for (name, v) in columns(r) {
            row.push(match (name, v) {
                ("step", _) => r.step.to_string(),
                (_, Some(x)) => format!("{x:?}"),
                (_, None) => String::new(),
            });
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut expected = vec!["schema_version"];
    expected.extend(column_names());
    if header != expected {
        return Err(GkError::Format("unexpected CSV columns".into()));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(csv_err)?;
        let version: u32 = row[0]
            .parse()
            .map_err(|_| GkError::Format("bad schema_version cell".into()))?;
        check_version(SCHEMA_NAME, version)?;
        let cell = |k: usize| -> Result<Option<f64>> {
            let s = &row[k + 1];
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .map(Some)
                .map_err(|_| GkError::Format(format!("bad number `{s}` in column {}", expected[k + 1])))
        };
        let req = |k: usize| -> Result<f64> {
            cell(k)?.ok_or_else(|| GkError::Format(format!("missing value in column {}", expected[k + 1])))
        };
        let pot = [cell(24)?, cell(25)?, cell(26)?];
        let potential = match pot {
            [Some(a), Some(b), Some(c)] => Some(PotentialRecord {
                sup_beta_sq: a,
                df_dt_sup: b,
                trace_bound_slack: c,
            }),
            [None, None, None] => None,
            _ => return Err(GkError::Format("partial potential-path columns".into())),
        };
        out.push(DiagnosticsRecord {
            step: row[1]
                .parse()
                .map_err(|_| GkError::Format("bad step cell".into()))?,
            t: req(1)?,
            dt: req(2)?,
            p_min: req(3)?,
            p_max: req(4)?,
            sup_grad_mu_sq: req(5)?,
            decay_bound_value: req(6)?,
            decay_bound_slack: req(7)?,
            mu_heat_residual: req(8)?,
            theta_identity_residual: req(9)?,
            sup_theta: req(10)?,
            sup_h: req(11)?,
            sup_dp: req(12)?,
            det_ratio_min: req(13)?,
            det_ratio_max: req(14)?,
            gk_constraint_residual: req(15)?,
            torsion_i_residual: req(16)?,
            torsion_j_residual: req(17)?,
            dh_residual: req(18)?,
            integral_dp: req(19)?,
            h_identity_residual: req(20)?,
            hk_closedness: [req(21)?, req(22)?, req(23)?],
            potential,
        });
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> GkError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => GkError::Io(io),
        other => GkError::Format(format!("{other:?}")),
    }
}
