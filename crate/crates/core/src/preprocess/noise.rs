use rand::seq::index::sample;
use rand::Rng;

use super::{BinaryFrame, Snippet, Variant};

/// Chebyshev radius around a moved pixel within which its new location is drawn.
pub const NOISE_RADIUS: isize = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NoiseStats {
    pub moved: usize,
    /// Pixels selected for moving that had no admissible destination and stayed put.
    pub stuck: usize,
}

/// Moves `floor(fraction * n)` of the `n` set pixels to nearby clear locations.
///
/// Each selected pixel is cleared and a new pixel is set at a location that was clear in
/// the input, lies within [`NOISE_RADIUS`] of the old one, and is 8-adjacent to a set pixel
/// that was not selected. Anchoring on unselected pixels keeps every moved pixel touching
/// the stroke in the output. The set-pixel count is preserved exactly.
pub fn add_pixel_noise<R: Rng + ?Sized>(
    frame: &BinaryFrame,
    fraction: f64,
    rng: &mut R,
) -> (BinaryFrame, NoiseStats) {
    let fraction = fraction.clamp(0.0, 1.0);
    let on = frame.active_indices();
    let n_move = (fraction * on.len() as f64).floor() as usize;
    let mut stats = NoiseStats::default();
    if n_move == 0 {
        return (frame.clone(), stats);
    }

    let mut selected = vec![false; frame.bits.len()];
    let mut picks: Vec<usize> = sample(rng, on.len(), n_move)
        .into_iter()
        .map(|i| on[i] as usize)
        .collect();
    // the index sampler's order is an implementation detail; process in raster order
    picks.sort_unstable();
    for &p in &picks {
        selected[p] = true;
    }
    let anchored = |x: isize, y: isize| {
        (-1..=1).any(|dy| {
            (-1..=1).any(|dx| {
                (dx, dy) != (0, 0)
                    && frame.get_signed(x + dx, y + dy)
                    && !selected[((y + dy) as usize) * frame.width + (x + dx) as usize]
            })
        })
    };

    let mut out = frame.clone();
    let mut candidates = Vec::new();
    for p in picks {
        let (px, py) = ((p % frame.width) as isize, (p / frame.width) as isize);
        candidates.clear();
        for y in py - NOISE_RADIUS..=py + NOISE_RADIUS {
            for x in px - NOISE_RADIUS..=px + NOISE_RADIUS {
                let inside =
                    x >= 0 && y >= 0 && (x as usize) < frame.width && (y as usize) < frame.height;
                if inside
                    && !frame.get(x as usize, y as usize)
                    && !out.get(x as usize, y as usize)
                    && anchored(x, y)
                {
                    candidates.push((x as usize, y as usize));
                }
            }
        }
        if candidates.is_empty() {
            stats.stuck += 1;
            continue;
        }
        let (nx, ny) = candidates[rng.gen_range(0..candidates.len())];
        out.bits[p] = false;
        out.set(nx, ny, true);
        stats.moved += 1;
    }
    (out, stats)
}

/// Originals plus `variants` noisy copies of each, grouped per original. Noisy copies
/// move 20% of the set pixels on every frame.
pub fn augment_dataset<R: Rng + ?Sized>(
    snippets: &[Snippet],
    variants: usize,
    rng: &mut R,
) -> Vec<Snippet> {
    let mut out = Vec::with_capacity(snippets.len() * (1 + variants));
    for s in snippets {
        out.push(s.clone());
        for v in 0..variants {
            let frames = s
                .frames
                .iter()
                .map(|f| add_pixel_noise(f, 0.2, rng).0)
                .collect();
            out.push(Snippet {
                frames,
                class_label: s.class_label,
                actor_id: s.actor_id,
                variant: Variant::Noisy(v as u32 + 1),
            });
        }
    }
    out
}
