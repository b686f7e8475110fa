use super::{edge_filter, skeletonize, BinaryFrame, GrayImage, DEFAULT_EDGE_THRESHOLD};
use crate::error::Result;

pub const MNIST_WIDTH: usize = 16;
pub const MNIST_HEIGHT: usize = 24;

/// A preprocessed frame; `empty` marks inputs with no surviving pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preprocessed {
    pub frame: BinaryFrame,
    pub empty: bool,
}

/// Edge filter, thin, crop to the bounding box of the skeleton, then fit it into a
/// 16-wide by 24-tall frame with aspect-preserving nearest-neighbour scaling, centred.
pub fn preprocess_mnist(raw: &GrayImage) -> Result<Preprocessed> {
    preprocess_mnist_with(raw, DEFAULT_EDGE_THRESHOLD)
}

pub fn preprocess_mnist_with(raw: &GrayImage, edge_threshold: f64) -> Result<Preprocessed> {
    let skeleton = skeletonize(&edge_filter(raw, edge_threshold)?);
    Ok(match bounding_box(&skeleton) {
        None => Preprocessed {
            frame: BinaryFrame::blank(MNIST_WIDTH, MNIST_HEIGHT),
            empty: true,
        },
        Some(bbox) => Preprocessed {
            frame: fit_into(&skeleton, bbox, MNIST_WIDTH, MNIST_HEIGHT),
            empty: false,
        },
    })
}

/// Inclusive `(x0, y0, x1, y1)` of the set pixels.
pub(crate) fn bounding_box(f: &BinaryFrame) -> Option<(usize, usize, usize, usize)> {
    let mut bbox: Option<(usize, usize, usize, usize)> = None;
    for y in 0..f.height {
        for x in 0..f.width {
            if f.get(x, y) {
                bbox = Some(match bbox {
                    None => (x, y, x, y),
                    Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                });
            }
        }
    }
    bbox
}

fn fit_into(
    src: &BinaryFrame,
    (x0, y0, x1, y1): (usize, usize, usize, usize),
    width: usize,
    height: usize,
) -> BinaryFrame {
    let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);
    let scale = (width as f64 / bw as f64).min(height as f64 / bh as f64);
    let ow = ((bw as f64 * scale).round() as usize).clamp(1, width);
    let oh = ((bh as f64 * scale).round() as usize).clamp(1, height);
    let (ox, oy) = ((width - ow) / 2, (height - oh) / 2);

    let mut out = BinaryFrame::blank(width, height);
    for y in 0..oh {
        let sy = y0 + ((y * bh * 2 + bh) / (oh * 2)).min(bh - 1);
        for x in 0..ow {
            let sx = x0 + ((x * bw * 2 + bw) / (ow * 2)).min(bw - 1);
            if src.get(sx, sy) {
                out.set(ox + x, oy + y, true);
            }
        }
    }
    out
}
