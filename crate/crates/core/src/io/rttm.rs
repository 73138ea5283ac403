//! RTTM speaker lines: `SPEAKER <episode> 1 <onset_s> <duration_s> <NA> <NA>
//! <speaker> <NA> <NA>`, onset and duration in seconds with six decimals.

use crate::error::{Error, Result};
use crate::model::TimeSpan;

#[derive(Debug, Clone, PartialEq)]
pub struct RttmEntry {
    pub episode: String,
    pub time_span: TimeSpan,
    pub speaker: String,
}

/// Render entries sorted by onset, then speaker.
pub fn write_rttm(entries: &[RttmEntry]) -> String {
    let mut sorted: Vec<&RttmEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| {
        (a.time_span.start_ms, &a.speaker).cmp(&(b.time_span.start_ms, &b.speaker))
    });
    let mut out = String::new();
    for e in sorted {
        out.push_str(&format!(
            "SPEAKER {} 1 {:.6} {:.6} <NA> <NA> {} <NA> <NA>\n",
            e.episode,
            e.time_span.start_ms as f64 / 1000.0,
            e.time_span.len_ms() as f64 / 1000.0,
            e.speaker,
        ));
    }
    out
}

pub fn parse_rttm(text: &str) -> Result<Vec<RttmEntry>> {
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 10 || fields[0] != "SPEAKER" {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected a 10-field SPEAKER line, got {line:?}"),
            });
        }
        let parse_seconds = |s: &str| -> Result<i64> {
            let v: f64 = s.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad seconds value {s:?}"),
            })?;
            Ok((v * 1000.0).round() as i64)
        };
        let onset = parse_seconds(fields[3])?;
        let duration = parse_seconds(fields[4])?;
        entries.push(RttmEntry {
            episode: fields[1].to_string(),
            time_span: TimeSpan::new(onset, onset + duration),
            speaker: fields[7].to_string(),
        });
    }
    Ok(entries)
}
