//! Model persistence.
//!
//! Binary `CEMB` layout, little-endian:
//!
//! ```text
//! magic      4 bytes  "CEMB"
//! version    u16      1; bit 15 set when the vectors are aligned
//! period     i32
//! dim        u32
//! vocab_len  u64
//! frame      i32      only when the aligned bit is set
//! vocab_len × { kind u8 (0 word, 1 citation), len u32, UTF-8 surface, count u64, dim × f32 }
//! ```
//!
//! Context vectors are not persisted. A word2vec-style text export
//! (`|V| d` header, then `surface v1 … vd`) is also provided.

use std::io::{self, BufRead, Read, Write};

use thiserror::Error;

use crate::linalg::Matrix;
use crate::preprocess::TokenKind;
use crate::sgns::{EmbeddingModel, VectorTable};
use crate::vocab::{VocabEntry, VocabError, Vocabulary};

pub const MAGIC: &[u8; 4] = b"CEMB";
pub const VERSION: u16 = 1;
pub const ALIGNED_FLAG: u16 = 0x8000;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a CEMB file")]
    BadMagic,
    #[error("unsupported CEMB version {0}")]
    UnsupportedVersion(u16),
    #[error("token {0}: invalid kind byte {1}")]
    BadKind(u64, u8),
    #[error("token {0}: surface is not UTF-8")]
    BadSurface(u64),
    #[error("dimension must be positive")]
    ZeroDim,
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("line {0}: {1}")]
    Text(usize, String),
}

pub fn write_cemb<W: Write>(model: &EmbeddingModel, mut w: W) -> Result<(), FormatError> {
    let mut version = VERSION;
    if model.aligned_frame.is_some() {
        version |= ALIGNED_FLAG;
    }
    w.write_all(MAGIC)?;
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&model.period.to_le_bytes())?;
    w.write_all(&(model.dim() as u32).to_le_bytes())?;
    w.write_all(&(model.vocab.len() as u64).to_le_bytes())?;
    if let Some(frame) = model.aligned_frame {
        w.write_all(&frame.to_le_bytes())?;
    }
    for (i, e) in model.vocab.entries().iter().enumerate() {
        let kind: u8 = match e.kind {
            TokenKind::Word => 0,
            TokenKind::Citation => 1,
        };
        w.write_all(&[kind])?;
        w.write_all(&(e.surface.len() as u32).to_le_bytes())?;
        w.write_all(e.surface.as_bytes())?;
        w.write_all(&e.count.to_le_bytes())?;
        for v in model.input_vectors.row(i) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_cemb<R: Read>(mut r: R) -> Result<EmbeddingModel, FormatError> {
    if &read_array::<4, _>(&mut r)? != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = u16::from_le_bytes(read_array(&mut r)?);
    if version & !ALIGNED_FLAG != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let period = i32::from_le_bytes(read_array(&mut r)?);
    let dim = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let n = u64::from_le_bytes(read_array(&mut r)?);
    if dim == 0 {
        return Err(FormatError::ZeroDim);
    }
    let aligned_frame = if version & ALIGNED_FLAG != 0 {
        Some(i32::from_le_bytes(read_array(&mut r)?))
    } else {
        None
    };
    let mut entries = Vec::new();
    let mut data = Vec::new();
    for i in 0..n {
        let kind = match read_array::<1, _>(&mut r)?[0] {
            0 => TokenKind::Word,
            1 => TokenKind::Citation,
            b => return Err(FormatError::BadKind(i, b)),
        };
        let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let mut surface = vec![0u8; len];
        r.read_exact(&mut surface)?;
        let surface = String::from_utf8(surface).map_err(|_| FormatError::BadSurface(i))?;
        let count = u64::from_le_bytes(read_array(&mut r)?);
        for _ in 0..dim {
            data.push(f32::from_le_bytes(read_array(&mut r)?));
        }
        entries.push(VocabEntry { surface, kind, count });
    }
    Ok(EmbeddingModel {
        period,
        vocab: Vocabulary::from_entries(entries)?,
        input_vectors: VectorTable::from_vec(dim, data),
        output_vectors: None,
        aligned_frame,
    })
}

/// `|V| d` header then one `surface v1 … vd` line per token.
pub fn write_text<W: Write>(model: &EmbeddingModel, mut w: W) -> io::Result<()> {
    writeln!(w, "{} {}", model.vocab.len(), model.dim())?;
    for (i, e) in model.vocab.entries().iter().enumerate() {
        write!(w, "{}", e.surface)?;
        for v in model.input_vectors.row(i) {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Reads the text export back as surfaces and vectors.
pub fn read_text<R: BufRead>(r: R) -> Result<(Vec<String>, VectorTable), FormatError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| FormatError::Text(1, "missing header".into()))??;
    let mut parts = header.split_whitespace().map(str::parse::<usize>);
    let (Some(Ok(n)), Some(Ok(dim))) = (parts.next(), parts.next()) else {
        return Err(FormatError::Text(1, "header must be `|V| d`".into()));
    };
    if dim == 0 {
        return Err(FormatError::ZeroDim);
    }
    let mut surfaces = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * dim);
    for (i, line) in lines.enumerate().take(n) {
        let line = line?;
        let mut fields = line.split(' ');
        let surface = fields.next().unwrap_or_default().to_string();
        let values: Vec<f32> = fields
            .map(|f| f.parse::<f32>().map_err(|e| FormatError::Text(i + 2, e.to_string())))
            .collect::<Result<_, _>>()?;
        if values.len() != dim {
            return Err(FormatError::Text(i + 2, format!("expected {dim} values, got {}", values.len())));
        }
        surfaces.push(surface);
        data.extend(values);
    }
    if surfaces.len() != n {
        return Err(FormatError::Text(surfaces.len() + 2, "fewer rows than the header states".into()));
    }
    Ok((surfaces, VectorTable::from_vec(dim, data)))
}

/// Rotation audit dump: `d`, then `d` lines of `d` values.
pub fn write_matrix<W: Write>(m: &Matrix, mut w: W) -> io::Result<()> {
    writeln!(w, "{}", m.rows())?;
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<Matrix, FormatError> {
    let mut lines = r.lines();
    let d: usize = lines
        .next()
        .ok_or_else(|| FormatError::Text(1, "missing dimension".into()))??
        .trim()
        .parse()
        .map_err(|_| FormatError::Text(1, "bad dimension".into()))?;
    let mut data = Vec::with_capacity(d * d);
    for i in 0..d {
        let line = lines.next().ok_or_else(|| FormatError::Text(i + 2, "missing row".into()))??;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>().map_err(|e| FormatError::Text(i + 2, e.to_string())))
            .collect::<Result<_, _>>()?;
        if row.len() != d {
            return Err(FormatError::Text(i + 2, format!("expected {d} values")));
        }
        data.extend(row);
    }
    Ok(Matrix::from_vec(d, d, data))
}
