//! IDX file reading (the MNIST distribution format). Gzipped files are detected by their
//! magic bytes and inflated transparently.

use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;

use super::GrayImage;
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Images and labels from a matching pair of IDX files.
#[derive(Debug, Clone)]
pub struct MnistSet {
    pub images: Vec<GrayImage>,
    pub labels: Vec<u8>,
}

impl MnistSet {
    pub fn load(images: &Path, labels: &Path) -> Result<Self> {
        let images = read_idx_images(&read_maybe_gz(images)?)?;
        let labels = read_idx_labels(&read_maybe_gz(labels)?)?;
        if images.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Data("truncated IDX header".into()))
}

pub fn read_idx_images(bytes: &[u8]) -> Result<Vec<GrayImage>> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Data(format!("bad IDX image magic {magic:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if body.len() != count * size {
        return Err(Error::Data(format!(
            "IDX image body holds {} bytes, header implies {}",
            body.len(),
            count * size
        )));
    }
    body.chunks_exact(size.max(1))
        .take(count)
        .map(|px| GrayImage::new(cols, rows, px.to_vec()))
        .collect()
}

pub fn read_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::Data(format!("bad IDX label magic {magic:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::Data(format!(
            "IDX label body holds {} bytes, header implies {count}",
            body.len()
        )));
    }
    Ok(body.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_file(count: u32, rows: u32, cols: u32, body: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        for x in [IMAGE_MAGIC, count, rows, cols] {
            v.extend(x.to_be_bytes());
        }
        v.extend(body);
        v
    }

    #[test]
    fn parses_images_and_labels() {
        let imgs = read_idx_images(&image_file(
            2,
            2,
            3,
            &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12],
        ))
        .unwrap();
        assert_eq!(imgs.len(), 2);
        assert_eq!((imgs[1].width, imgs[1].height), (3, 2));
        assert_eq!(imgs[1].get(2, 1), 12);

        let mut labels = LABEL_MAGIC.to_be_bytes().to_vec();
        labels.extend(3u32.to_be_bytes());
        labels.extend([7, 0, 9]);
        assert_eq!(read_idx_labels(&labels).unwrap(), vec![7, 0, 9]);
    }

    #[test]
    fn rejects_corrupt_files() {
        assert!(read_idx_images(&image_file(2, 2, 2, &[0; 7])).is_err());
        assert!(read_idx_images(&[0, 0, 8, 1, 0, 0, 0, 0]).is_err());
        assert!(read_idx_labels(&[0, 0, 8, 3]).is_err());
        assert!(read_idx_labels(&[]).is_err());
    }
}
