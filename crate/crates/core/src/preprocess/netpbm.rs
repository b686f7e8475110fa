//! Binary netpbm I/O: PGM (P5) grayscale frames in, PBM (P4) binary frames in and out.

use std::path::Path;

use super::{BinaryFrame, GrayImage};
use crate::error::{Error, Result};

/// Splits a netpbm header into `fields` numeric tokens and returns them with the body offset.
fn header(bytes: &[u8], magic: &[u8; 2], fields: usize) -> Result<(Vec<usize>, usize)> {
    if bytes.get(..2) != Some(magic.as_slice()) {
        return Err(Error::Data(format!(
            "expected netpbm magic {}",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2;
    let mut values = Vec::with_capacity(fields);
    while values.len() < fields {
        match bytes.get(pos) {
            None => return Err(Error::Data("truncated netpbm header".into())),
            Some(b'#') => {
                while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                    pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => pos += 1,
            Some(b) if b.is_ascii_digit() => {
                let start = pos;
                while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
                    pos += 1;
                }
                let text = std::str::from_utf8(&bytes[start..pos]).unwrap_or_default();
                values.push(
                    text.parse()
                        .map_err(|_| Error::Data(format!("bad netpbm field {text:?}")))?,
                );
            }
            Some(&b) => return Err(Error::Data(format!("unexpected byte {b:#04x} in header"))),
        }
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Data("missing separator after netpbm header".into()));
    }
    Ok((values, pos + 1))
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (h, off) = header(&bytes, b"P5", 3)?;
    let (width, height, maxval) = (h[0], h[1], h[2]);
    if maxval == 0 || maxval > 255 {
        return Err(Error::Data(format!("unsupported PGM maxval {maxval}")));
    }
    let body = &bytes[off..];
    if body.len() < width * height {
        return Err(Error::Data("truncated PGM raster".into()));
    }
    let pixels = body[..width * height]
        .iter()
        .map(|&p| ((u32::from(p) * 255) / maxval as u32) as u8)
        .collect();
    GrayImage::new(width, height, pixels)
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(&img.pixels);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// PBM rasters pack 8 pixels per byte, MSB first, rows padded to whole bytes; 1 = black = set.
pub fn encode_pbm(frame: &BinaryFrame) -> Vec<u8> {
    let mut out = format!("P4\n{} {}\n", frame.width, frame.height).into_bytes();
    let row_bytes = frame.width.div_ceil(8);
    for y in 0..frame.height {
        let mut row = vec![0u8; row_bytes];
        for x in 0..frame.width {
            if frame.get(x, y) {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend(row);
    }
    out
}

pub fn decode_pbm(bytes: &[u8]) -> Result<BinaryFrame> {
    let (h, off) = header(bytes, b"P4", 2)?;
    let (width, height) = (h[0], h[1]);
    let row_bytes = width.div_ceil(8);
    let body = &bytes[off..];
    if body.len() < row_bytes * height {
        return Err(Error::Data("truncated PBM raster".into()));
    }
    let mut frame = BinaryFrame::blank(width, height);
    for y in 0..height {
        for x in 0..width {
            let byte = body[y * row_bytes + x / 8];
            frame.set(x, y, byte & (0x80 >> (x % 8)) != 0);
        }
    }
    Ok(frame)
}

pub fn write_pbm(path: &Path, frame: &BinaryFrame) -> Result<()> {
    std::fs::write(path, encode_pbm(frame)).map_err(|e| Error::io(path, e))
}

pub fn read_pbm(path: &Path) -> Result<BinaryFrame> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pbm(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pbm_layout_is_msb_first_with_padded_rows() {
        let f = BinaryFrame::from_ascii(&["#........#", ".#........"]);
        let bytes = encode_pbm(&f);
        assert_eq!(&bytes[..8], b"P4\n10 2\n");
        assert_eq!(&bytes[8..], &[0x80, 0x40, 0x40, 0x00]);
        assert_eq!(decode_pbm(&bytes).unwrap(), f);
    }

    #[test]
    fn pgm_header_accepts_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.pgm");
        std::fs::write(&path, b"P5\n# made by hand\n2 1\n255\n\x00\xff").unwrap();
        let img = read_pgm(&path).unwrap();
        assert_eq!(img.pixels, vec![0, 255]);
        write_pgm(&path, &img).unwrap();
        assert_eq!(read_pgm(&path).unwrap(), img);
    }

    #[test]
    fn rejects_wrong_magic_and_truncation() {
        assert!(decode_pbm(b"P5\n1 1\n\x00").is_err());
        assert!(decode_pbm(b"P4\n9 2\n\x00").is_err());
        assert!(decode_pbm(b"P4\n9").is_err());
    }
}
