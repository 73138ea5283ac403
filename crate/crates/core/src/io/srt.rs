//! SRT subtitle parsing and emission.
//!
//! One speech segment per cue, except cues whose every text line starts with
//! a dash: those transcribe several speaker turns and split into one segment
//! per line, the cue span divided proportionally to line character counts.

use crate::error::{Error, Result};
use crate::model::{SegmentId, SpeechSegment, TimeSpan};

/// Parsed subtitle file: segments in cue order plus non-fatal warnings
/// (overlapping cues are accepted but reported).
#[derive(Debug, Clone, PartialEq)]
pub struct SrtDocument {
    pub segments: Vec<SpeechSegment>,
    pub warnings: Vec<String>,
}

fn parse_timestamp(s: &str, line: usize) -> Result<i64> {
    let bad = || Error::Parse {
        line,
        message: format!("malformed timestamp {s:?}"),
    };
    let (hms, millis) = s.split_once(',').ok_or_else(bad)?;
    let mut parts = hms.split(':');
    let (h, m, sec) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
        (Some(h), Some(m), Some(s), None) => (h, m, s),
        _ => return Err(bad()),
    };
    if h.len() < 2 || m.len() != 2 || sec.len() != 2 || millis.len() != 3 {
        return Err(bad());
    }
    let h: i64 = h.parse().map_err(|_| bad())?;
    let m: i64 = m.parse().map_err(|_| bad())?;
    let sec: i64 = sec.parse().map_err(|_| bad())?;
    let millis: i64 = millis.parse().map_err(|_| bad())?;
    if m >= 60 || sec >= 60 {
        return Err(bad());
    }
    Ok(((h * 60 + m) * 60 + sec) * 1000 + millis)
}

fn format_timestamp(ms: i64) -> String {
    let h = ms / 3_600_000;
    let m = ms / 60_000 % 60;
    let s = ms / 1000 % 60;
    let millis = ms % 1000;
    format!("{h:02}:{m:02}:{s:02},{millis:03}")
}

/// Parse an UTF-8 SRT document into speech segments.
///
/// Segment ids are assigned sequentially in emission order. Cue text is kept
/// verbatim except for dash-split cues, where each segment receives its own
/// line with the leading dash removed and surrounding whitespace trimmed.
pub fn parse_srt(bytes: &[u8]) -> Result<SrtDocument> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: format!("not valid UTF-8: {e}"),
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let lines: Vec<&str> = text.lines().collect();

    let mut segments = Vec::new();
    let mut warnings = Vec::new();
    let mut previous_end: Option<i64> = None;
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let index_line = i;
        if lines[i].trim().parse::<u64>().is_err() {
            return Err(Error::Parse {
                line: index_line + 1,
                message: format!("expected cue index, got {:?}", lines[i]),
            });
        }
        i += 1;
        let Some(&time_line) = lines.get(i) else {
            return Err(Error::Parse {
                line: i,
                message: "cue truncated before timestamps".into(),
            });
        };
        let (start_txt, end_txt) = time_line.split_once("-->").ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected \"start --> end\", got {time_line:?}"),
        })?;
        let start = parse_timestamp(start_txt.trim(), i + 1)?;
        let end = parse_timestamp(end_txt.trim(), i + 1)?;
        if end <= start {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("cue span is empty: {time_line:?}"),
            });
        }
        i += 1;
        let mut cue_lines: Vec<&str> = Vec::new();
        while i < lines.len() && !lines[i].trim().is_empty() {
            cue_lines.push(lines[i]);
            i += 1;
        }

        if let Some(prev) = previous_end {
            if start < prev {
                warnings.push(format!(
                    "cue at line {} starts before the previous cue ends ({start} < {prev})",
                    index_line + 1
                ));
            }
        }
        previous_end = Some(end);

        let all_dashed = cue_lines.len() >= 2 && cue_lines.iter().all(|l| l.starts_with('-'));
        if all_dashed {
            // Multiple speaker turns in one cue: split the span by character
            // share of each dash-stripped line.
            let stripped: Vec<&str> = cue_lines
                .iter()
                .map(|l| l.strip_prefix('-').unwrap_or(l))
                .collect();
            let weights: Vec<i64> = stripped.iter().map(|l| l.chars().count() as i64).collect();
            let total: i64 = weights.iter().sum::<i64>().max(1);
            let span = end - start;
            let mut cum = 0i64;
            let mut cursor = start;
            for (text_part, &w) in stripped.iter().zip(&weights) {
                cum += w;
                let boundary = if cum == total {
                    end
                } else {
                    start + (span * cum + total / 2) / total
                };
                segments.push(SpeechSegment {
                    id: SegmentId(segments.len() as u32),
                    time_span: TimeSpan::new(cursor, boundary),
                    text: Some(text_part.trim().to_string()),
                    embedding: None,
                    ref_speaker: None,
                });
                cursor = boundary;
            }
        } else {
            segments.push(SpeechSegment {
                id: SegmentId(segments.len() as u32),
                time_span: TimeSpan::new(start, end),
                text: Some(cue_lines.join("\n")),
                embedding: None,
                ref_speaker: None,
            });
        }
    }
    Ok(SrtDocument { segments, warnings })
}

/// Emit segments as an SRT document, one cue per segment, indices from 1.
pub fn write_srt(segments: &[SpeechSegment]) -> String {
    let mut out = String::new();
    for (i, seg) in segments.iter().enumerate() {
        out.push_str(&format!(
            "{}\n{} --> {}\n{}\n\n",
            i + 1,
            format_timestamp(seg.time_span.start_ms),
            format_timestamp(seg.time_span.end_ms),
            seg.text.as_deref().unwrap_or(""),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cue() {
        let doc = parse_srt(b"1\n00:00:01,000 --> 00:00:03,500\nHello\n").unwrap();
        assert_eq!(doc.segments.len(), 1);
        let seg = &doc.segments[0];
        assert_eq!(seg.time_span, TimeSpan::new(1000, 3500));
        assert_eq!(seg.text.as_deref(), Some("Hello"));
        assert!(doc.warnings.is_empty());
    }

    #[test]
    fn dashed_cue_splits_proportionally() {
        let doc = parse_srt(b"1\n00:00:00,000 --> 00:00:03,000\n- Yes.\n- No way.\n").unwrap();
        assert_eq!(doc.segments.len(), 2);
        // Weights are the dash-stripped character counts: " Yes." = 5 and
        // " No way." = 8, so the boundary falls at round(3000 * 5 / 13).
        let boundary = (3000 * 5 + 6) / 13;
        assert_eq!(doc.segments[0].time_span, TimeSpan::new(0, boundary));
        assert_eq!(doc.segments[1].time_span, TimeSpan::new(boundary, 3000));
        assert_eq!(doc.segments[0].text.as_deref(), Some("Yes."));
        assert_eq!(doc.segments[1].text.as_deref(), Some("No way."));
    }

    #[test]
    fn split_preserves_total_speech_time() {
        let srt = b"1\n00:00:00,000 --> 00:00:02,777\n- a\n- bb\n- ccc\n";
        let doc = parse_srt(srt).unwrap();
        assert_eq!(doc.segments.len(), 3);
        let total: i64 = doc.segments.iter().map(|s| s.duration_ms()).sum();
        assert_eq!(total, 2777);
        for w in doc.segments.windows(2) {
            assert_eq!(w[0].time_span.end_ms, w[1].time_span.start_ms);
        }
    }

    #[test]
    fn single_dashed_line_is_not_split() {
        let doc = parse_srt(b"1\n00:00:00,000 --> 00:00:01,000\n- Hello there.\n").unwrap();
        assert_eq!(doc.segments.len(), 1);
        assert_eq!(doc.segments[0].text.as_deref(), Some("- Hello there."));
    }

    #[test]
    fn malformed_timestamp_reports_line() {
        let err = parse_srt(b"1\n00:00:01.000 --> 00:00:03,500\nHi\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_cue_span_is_rejected() {
        let err = parse_srt(b"1\n00:00:03,000 --> 00:00:03,000\nHi\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn overlapping_cues_warn_but_parse() {
        let srt = b"1\n00:00:00,000 --> 00:00:05,000\nA\n\n2\n00:00:04,000 --> 00:00:06,000\nB\n";
        let doc = parse_srt(srt).unwrap();
        assert_eq!(doc.segments.len(), 2);
        assert_eq!(doc.warnings.len(), 1);
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let err = parse_srt(b"1\n00:00:00,000 --> 00:00:01,000\nA\n\nnot a cue\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn bom_is_tolerated() {
        let mut bytes = vec![0xEF, 0xBB, 0xBF];
        bytes.extend_from_slice(b"1\n00:00:00,000 --> 00:00:01,000\nA\n");
        assert!(parse_srt(&bytes).is_ok());
    }

    #[test]
    fn round_trip_identity() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(7);
        let mut t = 0i64;
        let segments: Vec<SpeechSegment> = (0..20)
            .map(|i| {
                let start = t + rng.gen_range(0..3000);
                let end = start + rng.gen_range(500..4000);
                t = end;
                SpeechSegment {
                    id: SegmentId(i),
                    time_span: TimeSpan::new(start, end),
                    text: Some(format!("Line number {i}.")),
                    embedding: None,
                    ref_speaker: None,
                }
            })
            .collect();
        let emitted = write_srt(&segments);
        let parsed = parse_srt(emitted.as_bytes()).unwrap();
        assert_eq!(parsed.segments, segments);
        assert!(parsed.warnings.is_empty());
    }
}
