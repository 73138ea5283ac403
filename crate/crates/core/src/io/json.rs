//! JSON serialization with fixed-precision floats.
//!
//! All result documents serialize every floating-point value with exactly
//! six decimal places so that repeated runs produce byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

struct SixDecimalFormatter;

impl serde_json::ser::Formatter for SixDecimalFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.6}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.6}")
    }
}

/// Serialize with six-decimal floats and a trailing newline.
pub fn to_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SixDecimalFormatter);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Format(format!("json serialization: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    super::write_atomic(path, &to_bytes(value)?)
}

pub fn read_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
