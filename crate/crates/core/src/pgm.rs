//! Binary PGM (P5, maxval 255) reading and writing for square images.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::problems::Image;

/// Decode a P5 byte buffer.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::Pgm(format!(
            "unsupported magic {:?}, only binary P5 is accepted",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parse_number(next_token(bytes, &mut pos)?)?;
    let height = parse_number(next_token(bytes, &mut pos)?)?;
    let maxval = parse_number(next_token(bytes, &mut pos)?)?;
    if maxval != 255 {
        return Err(Error::Pgm(format!("maxval must be 255, got {maxval}")));
    }
    if width != height {
        return Err(Error::Pgm(format!("image must be square, got {width}x{height}")));
    }
    if width == 0 {
        return Err(Error::Pgm("empty image".into()));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Pgm("missing whitespace after maxval".into())),
    }
    let n = width;
    let data = &bytes[pos..];
    if data.len() != n * n {
        return Err(Error::Pgm(format!(
            "expected {} pixel bytes, found {}",
            n * n,
            data.len()
        )));
    }
    let mut pixels = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            pixels[i + n * j] = f64::from(data[i * n + j]) / 255.0;
        }
    }
    Image::new(n, pixels)
}

/// Encode as P5, rounding `255 p` half up.
pub fn encode_pgm(img: &Image) -> Vec<u8> {
    let n = img.side();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.reserve(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push((img.get(i, j) * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pgm(&fs::read(path)?)
}

pub fn write_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

/// Next whitespace-delimited header token, skipping `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
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
        return Err(Error::Pgm("truncated header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_number(token: &[u8]) -> Result<usize> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            Error::Pgm(format!(
                "bad header field {:?}",
                String::from_utf8_lossy(token)
            ))
        })
}
