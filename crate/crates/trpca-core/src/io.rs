//! Bit-exact tensor container, PPM image ingestion, and trace emission.
//!
//! The TNS3 container is the wire contract between tools:
//!
//! ```text
//! magic   "TNS3"                      4 bytes
//! version u16 little-endian = 1       2 bytes
//! dims    n1, n2, n3 as u32 LE        12 bytes
//! payload n1*n2*n3 f64 LE             8 per value, i fastest, then j, then k
//! ```
//!
//! The payload ordering equals [`Tensor3`]'s memory layout, so round trips
//! are bitwise.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor_algebra::Tensor3;
use crate::vbi_solver::TraceRecord;

const MAGIC: [u8; 4] = *b"TNS3";
const VERSION: u16 = 1;

/// Write a tensor in the TNS3 container.
pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor3) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&MAGIC)?;
    f.write_all(&VERSION.to_le_bytes())?;
    let (n1, n2, n3) = t.dims();
    for d in [n1, n2, n3] {
        f.write_all(&(d as u32).to_le_bytes())?;
    }
    for v in t.values() {
        f.write_all(&v.to_le_bytes())?;
    }
    f.flush()?;
    Ok(())
}

/// Read a TNS3 file, validating magic, version, payload length and
/// finiteness.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor3> {
    let mut f = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    f.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let mut v16 = [0u8; 2];
    f.read_exact(&mut v16)?;
    let version = u16::from_le_bytes(v16);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let mut b = [0u8; 4];
        f.read_exact(&mut b)?;
        *d = u32::from_le_bytes(b) as usize;
    }
    let count = dims[0]
        .checked_mul(dims[1])
        .and_then(|p| p.checked_mul(dims[2]))
        .ok_or_else(|| Error::CorruptHeader("dimension product overflows".into()))?;
    let mut payload = Vec::new();
    f.read_to_end(&mut payload)?;
    if payload.len() != 8 * count {
        return Err(Error::TruncatedPayload {
            expected: 8 * count,
            found: payload.len(),
        });
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor3::from_vec((dims[0], dims[1], dims[2]), values)
}

fn skip_ppm_whitespace(data: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < data.len() && data[pos] == b'#' {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_ppm_int(data: &[u8], pos: usize) -> Result<(usize, usize)> {
    let start = skip_ppm_whitespace(data, pos);
    let mut end = start;
    while end < data.len() && data[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(Error::CorruptHeader("expected integer in PPM header".into()));
    }
    let text = std::str::from_utf8(&data[start..end])
        .map_err(|_| Error::CorruptHeader("non-ASCII PPM header".into()))?;
    let value = text
        .parse()
        .map_err(|_| Error::CorruptHeader(format!("bad integer {text:?}")))?;
    Ok((value, end))
}

/// Load a binary PPM (P6) as a `height x width x 3` tensor of values in
/// `[0, 255]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<Tensor3> {
    let data = std::fs::read(path)?;
    if data.len() < 2 || &data[..2] != b"P6" {
        return Err(Error::UnsupportedFormat(
            "expected binary PPM (P6)".into(),
        ));
    }
    let (width, pos) = read_ppm_int(&data, 2)?;
    let (height, pos) = read_ppm_int(&data, pos)?;
    let (maxval, pos) = read_ppm_int(&data, pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PPM maxval {maxval} not in 1..=255"
        )));
    }
    // exactly one whitespace byte separates header and payload
    let payload = pos + 1;
    let need = height * width * 3;
    if data.len() < payload + need {
        return Err(Error::TruncatedPayload {
            expected: need,
            found: data.len().saturating_sub(payload),
        });
    }
    let px = &data[payload..payload + need];
    Ok(Tensor3::from_fn((height, width, 3), |i, j, k| {
        px[(i * width + j) * 3 + k] as f64
    }))
}

/// Write a `height x width x 3` tensor as binary PPM, clamping to `[0, 255]`
/// and rounding.
pub fn save_image(path: impl AsRef<Path>, t: &Tensor3) -> Result<()> {
    let (h, w, c) = t.dims();
    if c != 3 {
        return Err(Error::UnsupportedFormat(format!(
            "PPM output needs 3 channels, tensor has {c}"
        )));
    }
    let mut f = BufWriter::new(File::create(path)?);
    write!(f, "P6\n{w} {h}\n255\n")?;
    let mut row = Vec::with_capacity(w * 3);
    for i in 0..h {
        row.clear();
        for j in 0..w {
            for k in 0..3 {
                row.push(t.at(i, j, k).clamp(0.0, 255.0).round() as u8);
            }
        }
        f.write_all(&row)?;
    }
    f.flush()?;
    Ok(())
}

/// Trace output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Json,
}

impl TraceFormat {
    /// Pick by file extension: `.json` is JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => TraceFormat::Json,
            _ => TraceFormat::Csv,
        }
    }
}

/// Emit per-iteration diagnostics as plottable columns. CSV prints 17
/// significant digits so a parse-back reproduces every value.
pub fn write_trace(path: impl AsRef<Path>, trace: &[TraceRecord], format: TraceFormat) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    match format {
        TraceFormat::Csv => {
            writeln!(
                f,
                "iter,objective,rmse_l,rmse_s,theta1,theta2,theta3,tnn_of_l,l1_of_s,residual_fro"
            )?;
            for r in trace {
                writeln!(
                    f,
                    "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                    r.iter,
                    r.objective,
                    r.rmse_l,
                    r.rmse_s,
                    r.theta[0],
                    r.theta[1],
                    r.theta[2],
                    r.tnn_of_l,
                    r.l1_of_s,
                    r.residual_fro
                )?;
            }
        }
        TraceFormat::Json => {
            serde_json::to_writer_pretty(&mut f, trace)
                .map_err(|e| Error::UnsupportedFormat(format!("trace JSON: {e}")))?;
            writeln!(f)?;
        }
    }
    f.flush()?;
    Ok(())
}
