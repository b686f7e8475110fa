use super::{BinaryFrame, GrayImage};
use crate::error::{Error, Result};

pub const DEFAULT_EDGE_THRESHOLD: f64 = 0.25;

/// Sobel gradient magnitude, thresholded relative to the image's strongest gradient.
///
/// Borders are handled by clamping coordinates into the image. A pixel is set iff its
/// magnitude is at least `threshold * max_magnitude`; an image with no gradient at all
/// yields a blank frame.
pub fn edge_filter(img: &GrayImage, threshold: f64) -> Result<BinaryFrame> {
    if img.width == 0 || img.height == 0 {
        return Err(Error::Shape("empty image".into()));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!(
            "edge threshold must lie in (0, 1], got {threshold}"
        )));
    }
    let (w, h) = (img.width as isize, img.height as isize);
    let px = |x: isize, y: isize| -> i32 {
        i32::from(img.get(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize))
    };

    // squared magnitudes stay integral, so the threshold comparison is exact
    let mut mag2 = vec![0i64; img.width * img.height];
    for y in 0..h {
        for x in 0..w {
            let gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
            let gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
            mag2[(y * w + x) as usize] =
                i64::from(gx) * i64::from(gx) + i64::from(gy) * i64::from(gy);
        }
    }

    let max = mag2.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Ok(BinaryFrame::blank(img.width, img.height));
    }
    let cut = threshold * threshold * max as f64;
    let bits = mag2.iter().map(|&m| m > 0 && m as f64 >= cut).collect();
    BinaryFrame::from_bits(img.width, img.height, bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_edges() {
        let f = edge_filter(&GrayImage::filled(6, 6, 200), 0.25).unwrap();
        assert!(f.is_blank());
    }

    #[test]
    fn vertical_step_marks_the_boundary_columns() {
        // columns 0..3 dark, 3..6 bright. By hand: gx = 4*255 at x=2 and x=3 on every
        // row (border rows clamp onto themselves), gx = 0 elsewhere, gy = 0 everywhere.
        let pixels = (0..36).map(|i| if i % 6 >= 3 { 255 } else { 0 }).collect();
        let img = GrayImage::new(6, 6, pixels).unwrap();
        let f = edge_filter(&img, 0.25).unwrap();
        let expected = vec!["..##.."; 6];
        assert_eq!(f.to_ascii(), expected);
    }

    #[test]
    fn unit_threshold_keeps_only_the_maximum() {
        // a single bright pixel: its 4-neighbours get |g| = 2*255, diagonals get
        // sqrt(2)*255, the pixel itself 0
        let mut pixels = vec![0u8; 25];
        pixels[12] = 255;
        let img = GrayImage::new(5, 5, pixels).unwrap();
        let f = edge_filter(&img, 1.0).unwrap();
        assert_eq!(
            f.to_ascii(),
            vec![".....", "..#..", ".#.#.", "..#..", "....."]
        );
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(edge_filter(&GrayImage::filled(0, 0, 0), 0.5).is_err());
        assert!(edge_filter(&GrayImage::filled(2, 2, 0), 0.0).is_err());
        assert!(edge_filter(&GrayImage::filled(2, 2, 0), 1.5).is_err());
    }
}
