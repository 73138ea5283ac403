//! Frame-histogram files: a compact binary layout and a CSV variant.
//!
//! Binary layout (all integers little-endian u32):
//! magic "FHIS", version, frame_count, blocks (always 30), bins,
//! fps_numerator, fps_denominator, then frame-major `blocks * bins` counts
//! per frame. Frame timestamps derive from the frame rate.
//!
//! CSV rows are `index,timestamp_ms,<30*bins counts>` with explicit
//! timestamps; both encodings of the same stream parse to identical
//! descriptors.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{FrameDescriptor, BLOCK_COUNT};

const MAGIC: &[u8; 4] = b"FHIS";
const VERSION: u32 = 1;

/// Frame rate as an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRate {
    pub numerator: u32,
    pub denominator: u32,
}

impl FrameRate {
    pub const PAL: FrameRate = FrameRate {
        numerator: 25,
        denominator: 1,
    };

    pub fn timestamp_ms(&self, frame_index: usize) -> i64 {
        frame_index as i64 * 1000 * self.denominator as i64 / self.numerator as i64
    }
}

/// Read a frame-histogram file, auto-detecting binary vs CSV.
pub fn read_frame_histograms(path: &Path) -> Result<Vec<FrameDescriptor>> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        parse_binary(&bytes)
    } else {
        parse_csv(&bytes)
    }
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<FrameDescriptor>> {
    let mut cursor = 0usize;
    let mut read_u32 = |ctx: &str| -> Result<u32> {
        let end = cursor + 4;
        let chunk = bytes
            .get(cursor..end)
            .ok_or_else(|| Error::Format(format!("truncated header: {ctx}")))?;
        cursor = end;
        Ok(u32::from_le_bytes(chunk.try_into().unwrap()))
    };
    let magic = read_u32("magic")?;
    if magic.to_le_bytes() != *MAGIC {
        return Err(Error::Format("bad magic, expected FHIS".into()));
    }
    let version = read_u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let frame_count = read_u32("frame count")? as usize;
    let blocks = read_u32("block count")? as usize;
    if blocks != BLOCK_COUNT {
        return Err(Error::Format(format!(
            "block count must be {BLOCK_COUNT}, got {blocks}"
        )));
    }
    let bins = read_u32("bin count")? as usize;
    if bins == 0 && frame_count > 0 {
        return Err(Error::Format("bin count must be positive".into()));
    }
    let fps_num = read_u32("fps numerator")?;
    let fps_den = read_u32("fps denominator")?;
    if fps_num == 0 || fps_den == 0 {
        return Err(Error::Format("frame rate must be positive".into()));
    }
    let rate = FrameRate {
        numerator: fps_num,
        denominator: fps_den,
    };

    let header = cursor;
    let expected = header + frame_count * blocks * bins * 4;
    if bytes.len() < expected {
        return Err(Error::Format(format!(
            "truncated payload: expected {expected} bytes, got {}",
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(Error::Format(format!(
            "trailing garbage: {} bytes past the payload",
            bytes.len() - expected
        )));
    }

    let mut frames = Vec::with_capacity(frame_count);
    let mut offset = header;
    for frame_index in 0..frame_count {
        let mut block_vec = Vec::with_capacity(blocks);
        for _ in 0..blocks {
            let mut histogram = Vec::with_capacity(bins);
            for _ in 0..bins {
                let chunk: [u8; 4] = bytes[offset..offset + 4].try_into().unwrap();
                histogram.push(u32::from_le_bytes(chunk));
                offset += 4;
            }
            block_vec.push(histogram);
        }
        frames.push(FrameDescriptor::new(
            frame_index,
            rate.timestamp_ms(frame_index),
            block_vec,
        )?);
    }
    Ok(frames)
}

fn parse_csv(bytes: &[u8]) -> Result<Vec<FrameDescriptor>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Format(format!("not valid UTF-8: {e}")))?;
    let mut frames = Vec::new();
    let mut bins: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 + BLOCK_COUNT {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected at least {} fields", 2 + BLOCK_COUNT),
            });
        }
        let counts_len = fields.len() - 2;
        if !counts_len.is_multiple_of(BLOCK_COUNT) {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("count columns ({counts_len}) not divisible by {BLOCK_COUNT}"),
            });
        }
        let line_bins = counts_len / BLOCK_COUNT;
        if *bins.get_or_insert(line_bins) != line_bins {
            return Err(Error::Parse {
                line: lineno + 1,
                message: "inconsistent bin count across rows".into(),
            });
        }
        let parse_field = |idx: usize| -> Result<i64> {
            fields[idx].trim().parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad integer field {:?}", fields[idx]),
            })
        };
        let frame_index = parse_field(0)? as usize;
        if frame_index != frames.len() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("frame index {frame_index} out of order"),
            });
        }
        let timestamp_ms = parse_field(1)?;
        let mut block_vec = Vec::with_capacity(BLOCK_COUNT);
        for b in 0..BLOCK_COUNT {
            let mut histogram = Vec::with_capacity(line_bins);
            for k in 0..line_bins {
                let v = parse_field(2 + b * line_bins + k)?;
                if v < 0 {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        message: "negative histogram count".into(),
                    });
                }
                histogram.push(v as u32);
            }
            block_vec.push(histogram);
        }
        frames.push(FrameDescriptor::new(frame_index, timestamp_ms, block_vec)?);
    }
    Ok(frames)
}

/// Write the binary encoding.
pub fn write_binary(path: &Path, frames: &[FrameDescriptor], rate: FrameRate) -> Result<()> {
    let bins = frames.first().map_or(0, |f| f.bins());
    let mut out = Vec::with_capacity(28 + frames.len() * BLOCK_COUNT * bins * 4);
    out.extend_from_slice(MAGIC);
    for v in [
        VERSION,
        frames.len() as u32,
        BLOCK_COUNT as u32,
        bins as u32,
        rate.numerator,
        rate.denominator,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for f in frames {
        f.validate()?;
        if f.bins() != bins {
            return Err(Error::DimensionMismatch {
                context: "frame histogram bins",
                expected: bins,
                actual: f.bins(),
            });
        }
        for block in &f.blocks {
            for &count in block {
                out.extend_from_slice(&count.to_le_bytes());
            }
        }
    }
    super::write_atomic(path, &out)
}

/// Write the CSV encoding with explicit timestamps.
pub fn write_csv(path: &Path, frames: &[FrameDescriptor]) -> Result<()> {
    let mut out = String::new();
    for f in frames {
        f.validate()?;
        out.push_str(&format!("{},{}", f.frame_index, f.timestamp_ms));
        for block in &f.blocks {
            for &count in block {
                out.push_str(&format!(",{count}"));
            }
        }
        out.push('\n');
    }
    super::write_atomic(path, out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use tempfile::tempdir;

    fn random_frames(seed: u64, n: usize, bins: usize) -> Vec<FrameDescriptor> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let blocks = (0..BLOCK_COUNT)
                    .map(|_| (0..bins).map(|_| rng.gen_range(0..1000)).collect())
                    .collect();
                FrameDescriptor::new(i, FrameRate::PAL.timestamp_ms(i), blocks).unwrap()
            })
            .collect()
    }

    #[test]
    fn empty_file_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.fhis");
        write_binary(&path, &[], FrameRate::PAL).unwrap();
        assert!(read_frame_histograms(&path).unwrap().is_empty());
    }

    #[test]
    fn binary_round_trip_is_identity() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("frames.fhis");
        let frames = random_frames(3, 17, 24);
        write_binary(&path, &frames, FrameRate::PAL).unwrap();
        assert_eq!(read_frame_histograms(&path).unwrap(), frames);
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("frames.csv");
        let frames = random_frames(5, 9, 8);
        write_csv(&path, &frames).unwrap();
        assert_eq!(read_frame_histograms(&path).unwrap(), frames);
    }

    #[test]
    fn csv_and_binary_agree() {
        let dir = tempdir().unwrap();
        let frames = random_frames(8, 12, 24);
        let bin_path = dir.path().join("frames.fhis");
        let csv_path = dir.path().join("frames.csv");
        write_binary(&bin_path, &frames, FrameRate::PAL).unwrap();
        write_csv(&csv_path, &frames).unwrap();
        assert_eq!(
            read_frame_histograms(&bin_path).unwrap(),
            read_frame_histograms(&csv_path).unwrap()
        );
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.fhis");
        // Starts like binary but with wrong magic and no CSV structure.
        std::fs::write(&path, b"FHIX\x01\x00\x00\x00").unwrap();
        assert!(read_frame_histograms(&path).is_err());
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("frames.fhis");
        let frames = random_frames(4, 3, 4);
        write_binary(&path, &frames, FrameRate::PAL).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 5);
        std::fs::write(&path, &bytes).unwrap();
        let err = read_frame_histograms(&path).unwrap_err();
        assert!(err.to_string().contains("truncated"));
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("frames.fhis");
        let frames = random_frames(4, 3, 4);
        write_binary(&path, &frames, FrameRate::PAL).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(b"xx");
        std::fs::write(&path, &bytes).unwrap();
        let err = read_frame_histograms(&path).unwrap_err();
        assert!(err.to_string().contains("trailing"));
    }

    #[test]
    fn wrong_block_count_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.fhis");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        for v in [VERSION, 0u32, 29, 4, 25, 1] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(&path, &out).unwrap();
        let err = read_frame_histograms(&path).unwrap_err();
        assert!(err.to_string().contains("block count"));
    }

    #[test]
    fn pal_timestamps_are_40ms_apart() {
        assert_eq!(FrameRate::PAL.timestamp_ms(0), 0);
        assert_eq!(FrameRate::PAL.timestamp_ms(1), 40);
        assert_eq!(FrameRate::PAL.timestamp_ms(25), 1000);
    }
}
