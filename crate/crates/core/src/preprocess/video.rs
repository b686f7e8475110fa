use serde::{Deserialize, Serialize};

use super::{edge_filter, skeletonize, BinaryFrame, GrayImage, DEFAULT_EDGE_THRESHOLD};
use crate::error::{Error, Result};

pub const VIDEO_WIDTH: usize = 42;
pub const VIDEO_HEIGHT: usize = 60;
const CROP_WIDTH: usize = 2 * VIDEO_WIDTH;
const CROP_HEIGHT: usize = 2 * VIDEO_HEIGHT;

/// Actor bounding box in source-frame pixels, serialized as `[x, y, width, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 4]", into = "[usize; 4]")]
pub struct BoundingBox {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl From<[usize; 4]> for BoundingBox {
    fn from([x, y, width, height]: [usize; 4]) -> Self {
        Self {
            x,
            y,
            width,
            height,
        }
    }
}

impl From<BoundingBox> for [usize; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x, b.y, b.width, b.height]
    }
}

/// Frame step `k` whose output length `ceil(n / k)` lands nearest `target` while keeping
/// at least two frames (or all of them when fewer exist). Ties prefer the smaller step.
pub fn decimation_step(n: usize, target: usize) -> usize {
    let floor = n.min(2);
    (1..=n.max(1))
        .filter(|&k| n.div_ceil(k) >= floor)
        .min_by_key(|&k| (n.div_ceil(k).abs_diff(target), k))
        .unwrap_or(1)
}

/// Crop to the 84x120 actor box, halve to 42x60 by 2x2 averaging, edge filter and thin
/// each frame, then keep every k-th frame.
pub fn preprocess_video(
    frames: &[GrayImage],
    bbox: BoundingBox,
    target_len: usize,
) -> Result<Vec<BinaryFrame>> {
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    if (bbox.width, bbox.height) != (CROP_WIDTH, CROP_HEIGHT) {
        return Err(Error::Config(format!(
            "bounding box must be {CROP_WIDTH}x{CROP_HEIGHT}, got {}x{}",
            bbox.width, bbox.height
        )));
    }
    let step = decimation_step(frames.len(), target_len);
    frames
        .iter()
        .step_by(step)
        .map(|img| {
            if bbox.x + bbox.width > img.width || bbox.y + bbox.height > img.height {
                return Err(Error::Data(format!(
                    "bounding box {:?} exceeds {}x{} frame",
                    <[usize; 4]>::from(bbox),
                    img.width,
                    img.height
                )));
            }
            let small = downsample_crop(img, bbox);
            Ok(skeletonize(&edge_filter(&small, DEFAULT_EDGE_THRESHOLD)?))
        })
        .collect()
}

fn downsample_crop(img: &GrayImage, bbox: BoundingBox) -> GrayImage {
    let mut pixels = Vec::with_capacity(VIDEO_WIDTH * VIDEO_HEIGHT);
    for y in 0..VIDEO_HEIGHT {
        for x in 0..VIDEO_WIDTH {
            let (sx, sy) = (bbox.x + 2 * x, bbox.y + 2 * y);
            let sum: u32 = [(0, 0), (1, 0), (0, 1), (1, 1)]
                .iter()
                .map(|(dx, dy)| u32::from(img.get(sx + dx, sy + dy)))
                .sum();
            pixels.push(((sum + 2) / 4) as u8);
        }
    }
    GrayImage {
        width: VIDEO_WIDTH,
        height: VIDEO_HEIGHT,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimation_targets_ten_frames() {
        assert_eq!(decimation_step(120, 10), 12);
        assert_eq!(120usize.div_ceil(12), 10);
        assert_eq!(decimation_step(2, 10), 1);
        assert_eq!(decimation_step(1, 10), 1);
        assert_eq!(decimation_step(9, 10), 1);
        // 30 frames: k=3 gives exactly 10
        assert_eq!(decimation_step(30, 10), 3);
        // never collapse to a single frame
        assert_eq!(decimation_step(5, 1), 3);
    }

    fn striped(width: usize, height: usize, phase: usize) -> GrayImage {
        let pixels = (0..width * height)
            .map(|i| {
                if (i % width + phase) % 20 < 10 {
                    0
                } else {
                    255
                }
            })
            .collect();
        GrayImage::new(width, height, pixels).unwrap()
    }

    #[test]
    fn output_frames_are_42_by_60() {
        let frames: Vec<_> = (0..120).map(|p| striped(180, 144, p)).collect();
        let bbox = BoundingBox::from([40, 10, 84, 120]);
        let out = preprocess_video(&frames, bbox, 10).unwrap();
        assert_eq!(out.len(), 10);
        assert!(out.iter().all(|f| (f.width, f.height) == (42, 60)));
        assert!(out.iter().all(|f| !f.is_blank()));

        let two = preprocess_video(&frames[..2], bbox, 10).unwrap();
        assert_eq!(two.len(), 2);
    }

    #[test]
    fn rejects_bad_boxes_and_empty_input() {
        let frames = vec![striped(100, 100, 0)];
        assert!(preprocess_video(&frames, BoundingBox::from([20, 0, 84, 120]), 10).is_err());
        assert!(preprocess_video(&frames, BoundingBox::from([0, 0, 80, 120]), 10).is_err());
        assert!(preprocess_video(&[], BoundingBox::from([0, 0, 84, 120]), 10).is_err());
    }
}
