//! Binary PPM (P6) and PGM (P5) read/write for dataset I/O.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::ImageU8;
use crate::error::{Error, Result};

/// Read an 8-bit binary PPM (P6, 3 channels) or PGM (P5, 1 channel).
pub fn read_ppm(path: &Path) -> Result<ImageU8> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse(&bytes).map_err(|reason| Error::Format {
        kind: "ppm",
        path: path.to_path_buf(),
        reason,
    })
}

/// Write as P6 (3 channels) or P5 (1 channel).
pub fn write_ppm(path: &Path, img: &ImageU8) -> Result<()> {
    let mut out = Vec::with_capacity(img.data().len() + 32);
    let magic = if img.channels() == 3 { "P6" } else { "P5" };
    write!(out, "{}\n{} {}\n255\n", magic, img.width(), img.height()).expect("vec write");
    out.extend_from_slice(img.data());
    fs::write(path, out).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn parse(bytes: &[u8]) -> std::result::Result<ImageU8, String> {
    let mut pos = 0usize;
    let magic = token(bytes, &mut pos).ok_or("missing magic")?;
    let channels = match magic {
        b"P6" => 3,
        b"P5" => 1,
        _ => return Err("magic is not P6 or P5".into()),
    };
    let width: usize = ascii_usize(token(bytes, &mut pos).ok_or("missing width")?)?;
    let height: usize = ascii_usize(token(bytes, &mut pos).ok_or("missing height")?)?;
    let maxval: usize = ascii_usize(token(bytes, &mut pos).ok_or("missing maxval")?)?;
    if maxval != 255 {
        return Err(format!("maxval {maxval} unsupported (need 255)"));
    }
    // single whitespace byte after maxval, then raster
    pos += 1;
    let need = width * height * channels;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| format!("truncated raster: need {need} bytes"))?;
    ImageU8::new(height, width, channels, raster.to_vec()).map_err(|e| e.to_string())
}

/// Next whitespace-delimited token, skipping `#` comments.
fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
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
    (*pos > start).then(|| &bytes[start..*pos])
}

fn ascii_usize(tok: &[u8]) -> std::result::Result<usize, String> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| "bad integer in header".into())
}
