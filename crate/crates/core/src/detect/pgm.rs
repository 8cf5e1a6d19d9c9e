//! Binary (P5) 8-bit portable graymap reading and writing.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::mask::PredictionMask;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a binary PGM: {0}")]
    Format(String),
}

pub fn write_pgm<W: Write>(mut w: W, m: &PredictionMask) -> io::Result<()> {
    write!(w, "P5\n{} {}\n255\n", m.width(), m.height())?;
    w.write_all(m.pixels())
}

pub fn save_pgm(path: impl AsRef<Path>, m: &PredictionMask) -> io::Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = io::BufWriter::new(f);
    write_pgm(&mut w, m)?;
    w.flush()
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<PredictionMask, PgmError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_pgm(&bytes)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<PredictionMask, PgmError> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(PgmError::Format(format!("bad magic `{}`", String::from_utf8_lossy(magic))));
    }
    let width = parse_num(next_token(bytes, &mut pos)?, "width")?;
    let height = parse_num(next_token(bytes, &mut pos)?, "height")?;
    let maxval = parse_num(next_token(bytes, &mut pos)?, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(PgmError::Format(format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(PgmError::Format("missing raster".into()));
    }
    pos += 1;
    let need = width.checked_mul(height).ok_or_else(|| PgmError::Format("dimensions overflow".into()))?;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err(PgmError::Format(format!("truncated raster: {} of {need} bytes", raster.len())));
    }
    let mut pixels = raster[..need].to_vec();
    if maxval != 255 {
        for p in pixels.iter_mut() {
            *p = ((*p as u32 * 255 + maxval as u32 / 2) / maxval as u32).min(255) as u8;
        }
    }
    PredictionMask::from_pixels(width, height, pixels).map_err(|e| PgmError::Format(e.to_string()))
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], PgmError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(PgmError::Format("truncated header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_num(tok: &[u8], what: &str) -> Result<usize, PgmError> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| PgmError::Format(format!("bad {what} `{}`", String::from_utf8_lossy(tok))))
}
