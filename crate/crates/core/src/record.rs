//! Campaign records and their JSON-lines encoding.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::aes::Block;

/// Glitch timing in cycles, held exactly in quarter-cycle units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlitchTime(i64);

impl GlitchTime {
    pub const ZERO: GlitchTime = GlitchTime(0);

    pub const fn from_quarters(q: i64) -> Self {
        GlitchTime(q)
    }

    pub const fn quarters(self) -> i64 {
        self.0
    }

    pub fn from_cycles(cycles: f64) -> Option<Self> {
        let q = cycles * 4.0;
        (q.is_finite() && q.fract() == 0.0 && q.abs() < 1e15).then_some(GlitchTime(q as i64))
    }

    pub fn cycles(self) -> f64 {
        self.0 as f64 / 4.0
    }
}

impl fmt::Display for GlitchTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let whole = self.0.abs() / 4;
        match self.0.abs() % 4 {
            0 => write!(f, "{sign}{whole}"),
            1 => write!(f, "{sign}{whole}.25"),
            2 => write!(f, "{sign}{whole}.5"),
            _ => write!(f, "{sign}{whole}.75"),
        }
    }
}

impl FromStr for GlitchTime {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| format!("not a number: {s:?}"))?;
        GlitchTime::from_cycles(v).ok_or_else(|| format!("{s} is not a multiple of 0.25 cycles"))
    }
}

impl Serialize for GlitchTime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.cycles())
    }
}

impl<'de> Deserialize<'de> for GlitchTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        GlitchTime::from_cycles(v)
            .ok_or_else(|| serde::de::Error::custom(format!("{v} is not a multiple of 0.25")))
    }
}

/// Serde adapter for 16-byte blocks as lowercase hex.
pub mod hex_block {
    use super::*;

    pub fn serialize<S: Serializer>(b: &Block, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Block, D::Error> {
        let s = String::deserialize(d)?;
        crate::aes::parse_block(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for variable-length byte strings as lowercase hex.
pub mod hex_bytes {
    use super::*;

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s.trim()).map_err(serde::de::Error::custom)
    }
}

/// One engine run of a glitch campaign.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CiphertextRecord {
    #[serde(with = "hex_block")]
    pub plaintext: Block,
    #[serde(with = "hex_block")]
    pub ciphertext: Block,
    /// Glitch offset from the trigger.
    pub n: GlitchTime,
    /// Glitch width.
    pub m: GlitchTime,
    pub slot: u32,
    pub faulted: bool,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_jsonl<W: Write>(mut out: W, records: &[CiphertextRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse JSON lines, skipping blank lines. Line numbers in errors are 1-based.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<CiphertextRecord>, RecordError> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| RecordError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
