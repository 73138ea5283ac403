//! Per-segment speaker-embedding tables, CSV: `segment_id,v0,...,v{d-1}`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::SegmentId;

/// Read an embedding table, validating every row against `dim`.
/// Rows with the wrong dimension are all reported in a single error.
pub fn read_embeddings(path: &Path, dim: usize) -> Result<BTreeMap<SegmentId, Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    let mut bad_rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id: u32 = fields
            .next()
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad segment id in {line:?}"),
            })?;
        let values: Vec<f64> = fields
            .map(|f| {
                f.trim().parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad float {f:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            bad_rows.push(lineno + 1);
            continue;
        }
        map.insert(SegmentId(id), values);
    }
    if !bad_rows.is_empty() {
        return Err(Error::Format(format!(
            "embedding rows with wrong dimension (expected {dim}) at lines {bad_rows:?}"
        )));
    }
    Ok(map)
}

/// Write an embedding table. Floats use the shortest exact representation,
/// so a read-back reproduces the values bit for bit.
pub fn write_embeddings(path: &Path, table: &BTreeMap<SegmentId, Vec<f64>>) -> Result<()> {
    let mut out = String::new();
    for (id, values) in table {
        out.push_str(&id.0.to_string());
        for v in values {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    super::write_atomic(path, out.as_bytes())
}
