//! Binary portable anymap: P6 (RGB) and P5 (gray), maxval 255.

use std::fs;
use std::path::Path;

use dbloc_core::Raster;

use super::write_atomic;
use crate::error::{io_err, Error, Result};

struct Header {
    magic: [u8; 2],
    width: u32,
    height: u32,
    data_offset: usize,
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    let fail = |offset: usize, msg: &str| Error::Format {
        path: path.to_path_buf(),
        offset: offset as u64,
        msg: msg.to_string(),
    };
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(fail(0, "not a PNM file"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fail(start, "expected a decimal header field"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(fail(pos, "missing whitespace after header"));
    }
    if fields[2] != 255 {
        return Err(fail(pos, "only maxval 255 is supported"));
    }
    Ok(Header {
        magic,
        width: fields[0],
        height: fields[1],
        data_offset: pos + 1,
    })
}

/// Reads a P6 or P5 file into an RGB raster.
pub fn read_image(path: &Path) -> Result<Raster> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let h = parse_header(&bytes, path)?;
    let channels = match &h.magic {
        b"P6" => 3,
        b"P5" => 1,
        _ => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                offset: 0,
                msg: "expected P5 or P6".into(),
            })
        }
    };
    let n = h.width as usize * h.height as usize * channels;
    let data = bytes.get(h.data_offset..h.data_offset + n).ok_or_else(|| Error::Format {
        path: path.to_path_buf(),
        offset: bytes.len() as u64,
        msg: format!("truncated pixel data, need {n} bytes"),
    })?;
    let raster = if channels == 3 {
        Raster::from_rgb(h.width, h.height, data.to_vec())?
    } else {
        Raster::from_gray(h.width, h.height, data)?
    };
    Ok(raster)
}

pub fn encode_ppm(img: &Raster) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.as_bytes());
    out
}

pub fn write_ppm(path: &Path, img: &Raster) -> Result<()> {
    write_atomic(path, &encode_ppm(img))
}

pub fn encode_pgm(width: u32, height: u32, gray: &[u8]) -> Vec<u8> {
    assert_eq!(gray.len(), width as usize * height as usize);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(gray);
    out
}

pub fn write_pgm(path: &Path, width: u32, height: u32, gray: &[u8]) -> Result<()> {
    write_atomic(path, &encode_pgm(width, height, gray))
}
