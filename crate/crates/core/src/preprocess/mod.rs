//! Conversion of grayscale images and video frames into sparse binary inputs.

mod edge;
mod idx;
mod mnist;
mod netpbm;
mod noise;
mod skeleton;
mod video;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use edge::{edge_filter, DEFAULT_EDGE_THRESHOLD};
pub use idx::{read_idx_images, read_idx_labels, MnistSet};
pub use mnist::{preprocess_mnist, preprocess_mnist_with, Preprocessed, MNIST_HEIGHT, MNIST_WIDTH};
pub use netpbm::{decode_pbm, encode_pbm, read_pbm, read_pgm, write_pbm, write_pgm};
pub use noise::{add_pixel_noise, augment_dataset, NoiseStats, NOISE_RADIUS};
pub use skeleton::skeletonize;
pub use video::{decimation_step, preprocess_video, BoundingBox, VIDEO_HEIGHT, VIDEO_WIDTH};

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Binary pixel grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryFrame {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryFrame {
    pub fn blank(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Shape(format!(
                "{} bits for a {width}x{height} frame",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// Parses rows of `#`/`1` (set) and `.`/`0` (clear); whitespace is ignored.
    pub fn from_ascii(rows: &[&str]) -> Self {
        let parsed: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| {
                r.chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| c == '#' || c == '1')
                    .collect()
            })
            .collect();
        let width = parsed.first().map_or(0, Vec::len);
        assert!(
            parsed.iter().all(|r| r.len() == width),
            "ragged ascii frame"
        );
        Self {
            width,
            height: parsed.len(),
            bits: parsed.concat(),
        }
    }

    pub fn to_ascii(&self) -> Vec<String> {
        self.bits
            .chunks(self.width.max(1))
            .map(|r| r.iter().map(|&b| if b { '#' } else { '.' }).collect())
            .collect()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Out-of-range coordinates read as clear.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_blank(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Indices (`y * width + x`) of set pixels in row-major order.
    pub fn active_indices(&self) -> Vec<u32> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// True when every set bit here is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryFrame) -> bool {
        self.bits.len() == other.bits.len()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Number of pixels set in both frames.
    pub fn overlap(&self, other: &BinaryFrame) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "index")]
pub enum Variant {
    Original,
    Noisy(u32),
}

/// A labeled sequence of binary frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snippet {
    pub frames: Vec<BinaryFrame>,
    pub class_label: usize,
    pub actor_id: usize,
    pub variant: Variant,
}

impl Snippet {
    pub fn new(
        frames: Vec<BinaryFrame>,
        class_label: usize,
        actor_id: usize,
        variant: Variant,
    ) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptySequence)?;
        if frames
            .iter()
            .any(|f| f.width != first.width || f.height != first.height)
        {
            return Err(Error::Shape("snippet frames differ in size".into()));
        }
        Ok(Self {
            frames,
            class_label,
            actor_id,
            variant,
        })
    }

    pub fn is_original(&self) -> bool {
        self.variant == Variant::Original
    }
}
