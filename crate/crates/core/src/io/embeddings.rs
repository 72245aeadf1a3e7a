//! Embedding files.
//!
//! Text: a header line `#emb v1 dim=<d>`, then one record per line:
//! `<recording-id> <onset-seconds> <offset-seconds> <d floats>`.
//!
//! Binary (same field order, little-endian): `"EMBB"` | version `u32` = 1 |
//! d `u32` | record count `u64` | per record: id length `u32`, UTF-8 id
//! bytes, onset `f64`, offset `f64`, `d x f64`.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::plda::Embedding;

pub const EMBEDDING_BINARY_MAGIC: &[u8; 4] = b"EMBB";

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub recording_id: String,
    pub onset: f64,
    pub offset: f64,
    pub embedding: Embedding<f64>,
}

pub fn write_embeddings_text(records: &[EmbeddingRecord], dim: usize) -> String {
    let mut s = format!("#emb v1 dim={dim}\n");
    for r in records {
        let _ = write!(s, "{} {} {}", r.recording_id, r.onset, r.offset);
        for v in r.embedding.as_slice() {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s
}

pub fn parse_embeddings_text(text: &str, source: &str) -> Result<(usize, Vec<EmbeddingRecord>)> {
    let mut lines = text.lines().enumerate();
    let dim = loop {
        let (i, line) = lines
            .next()
            .ok_or_else(|| Error::parse(source, 1, "missing '#emb v1 dim=<d>' header"))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "#emb" {
            return Err(Error::parse(source, i + 1, "expected '#emb v1 dim=<d>' header"));
        }
        if fields[1] != "v1" {
            return Err(Error::parse(source, i + 1, format!("unsupported version '{}'", fields[1])));
        }
        break fields[2]
            .strip_prefix("dim=")
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::parse(source, i + 1, "bad dim field"))?;
    };
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 + dim {
            return Err(Error::parse(
                source,
                i + 1,
                format!("expected {} fields, got {}", 3 + dim, fields.len()),
            ));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::parse(source, i + 1, format!("bad number '{s}'")))
        };
        let values = fields[3..].iter().map(|s| num(s)).collect::<Result<Vec<f64>>>()?;
        out.push(EmbeddingRecord {
            recording_id: fields[0].to_string(),
            onset: num(fields[1])?,
            offset: num(fields[2])?,
            embedding: Embedding::new(values).map_err(|e| Error::parse(source, i + 1, e.to_string()))?,
        });
    }
    Ok((dim, out))
}

pub fn write_embeddings_binary<W: Write>(w: &mut W, records: &[EmbeddingRecord], dim: usize) -> Result<()> {
    w.write_all(EMBEDDING_BINARY_MAGIC)?;
    w.write_all(&1u32.to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in records {
        if r.embedding.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.embedding.dim(),
            });
        }
        w.write_all(&(r.recording_id.len() as u32).to_le_bytes())?;
        w.write_all(r.recording_id.as_bytes())?;
        w.write_all(&r.onset.to_le_bytes())?;
        w.write_all(&r.offset.to_le_bytes())?;
        for v in r.embedding.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_embeddings_binary<R: Read>(r: &mut R) -> Result<(usize, Vec<EmbeddingRecord>)> {
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    if &b4 != EMBEDDING_BINARY_MAGIC {
        return Err(Error::BadMagic("binary embedding file".into()));
    }
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != 1 {
        return Err(Error::UnsupportedVersion(version));
    }
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8);
    let mut out = Vec::new();
    let mut f64_of = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut b8)?;
        Ok(f64::from_le_bytes(b8))
    };
    for _ in 0..count {
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut id = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut id)?;
        let recording_id =
            String::from_utf8(id).map_err(|_| Error::InvalidConfig("recording id is not UTF-8".into()))?;
        let onset = f64_of(r)?;
        let offset = f64_of(r)?;
        let values = (0..dim).map(|_| f64_of(r)).collect::<Result<Vec<_>>>()?;
        out.push(EmbeddingRecord {
            recording_id,
            onset,
            offset,
            embedding: Embedding::new(values)?,
        });
    }
    Ok((dim, out))
}
