use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::video::SnippetMeta;
use crate::error::{Error, Result};
use crate::preprocess::{write_pbm, BinaryFrame, Snippet, Variant};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub classes: usize,
    pub actors: usize,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            classes: 10,
            actors: 9,
            frames: 10,
            width: 42,
            height: 60,
        }
    }
}

type Poly = &'static [(f64, f64)];

/// Outline polylines per shape, in units of the actor's size.
const SHAPES: [&[Poly]; 10] = [
    &[&[(0.0, -1.0), (0.0, 1.0)]],
    &[&[(-1.0, 0.0), (1.0, 0.0)]],
    &[&[(0.0, -1.0), (0.0, 1.0)], &[(-1.0, 0.0), (1.0, 0.0)]],
    &[&[(-0.7, -0.7), (0.7, 0.7)], &[(-0.7, 0.7), (0.7, -0.7)]],
    &[&[
        (-0.7, -0.7),
        (0.7, -0.7),
        (0.7, 0.7),
        (-0.7, 0.7),
        (-0.7, -0.7),
    ]],
    &[&[(0.0, -0.9), (0.8, 0.6), (-0.8, 0.6), (0.0, -0.9)]],
    &[&[]],
    &[&[(-0.5, -1.0), (-0.5, 0.8), (0.6, 0.8)]],
    &[&[(-0.8, -0.8), (0.8, -0.8)], &[(0.0, -0.8), (0.0, 1.0)]],
    &[&[(-0.9, -0.8), (0.9, -0.3), (-0.9, 0.3), (0.9, 0.8)]],
];

/// Per-class motion: velocity in pixels per frame and spin in radians per frame.
const MOTIONS: [(f64, f64, f64); 10] = [
    (1.6, 0.0, 0.0),
    (0.0, 2.2, 0.0),
    (0.0, 0.0, 0.3),
    (-1.6, 0.0, 0.0),
    (0.0, -2.2, 0.0),
    (1.2, 1.6, 0.15),
    (-1.2, 1.6, -0.15),
    (1.2, -1.6, 0.2),
    (0.0, 0.0, -0.35),
    (-1.2, -1.6, 0.1),
];

fn circle() -> Vec<(f64, f64)> {
    (0..=12)
        .map(|i| {
            let a = TAU * i as f64 / 12.0;
            (0.8 * a.cos(), 0.8 * a.sin())
        })
        .collect()
}

fn draw_line(frame: &mut BinaryFrame, (x0, y0): (i64, i64), (x1, y1): (i64, i64)) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if (0..frame.width as i64).contains(&x) && (0..frame.height as i64).contains(&y) {
            frame.set(x as usize, y as usize, true);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Moving, spinning line-drawn shapes: each class pairs one shape with one motion, and
/// each actor perturbs size, speed, orientation and starting point. Classes beyond ten
/// reuse shapes with shifted motions.
pub fn generate_synthetic(params: &SynthParams, run_seed: u64) -> Result<Vec<Snippet>> {
    let p = params;
    if p.classes == 0 || p.actors == 0 || p.frames == 0 || p.width < 8 || p.height < 8 {
        return Err(Error::Config(format!(
            "synthetic data needs >= 1 class, actor and frame and frames of at least 8x8, got {p:?}"
        )));
    }
    let round = circle();
    let unit = p.width.min(p.height) as f64 * 0.22;
    let mut out = Vec::with_capacity(p.classes * p.actors);
    for c in 0..p.classes {
        let polys: Vec<&[(f64, f64)]> = if c % 10 == 6 {
            vec![&round]
        } else {
            SHAPES[c % 10].to_vec()
        };
        let (vx, vy, spin) = MOTIONS[c % 10];
        let twist = (c / 10) as f64 * 0.1;
        for a in 0..p.actors {
            let mut rng = seed::stream(run_seed, &[0x5e7, c as u64, a as u64]);
            let size = unit * rng.gen_range(0.85..1.15);
            let speed = rng.gen_range(0.85..1.15);
            let tilt = rng.gen_range(-0.25..0.25);
            let jitter = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let half = (p.frames - 1) as f64 / 2.0;
            let (cx, cy) = (p.width as f64 / 2.0, p.height as f64 / 2.0);
            let frames = (0..p.frames)
                .map(|t| {
                    let s = t as f64 - half;
                    let x = cx + jitter.0 + vx * speed * s;
                    let y = cy + jitter.1 + vy * speed * s;
                    let angle = tilt + (spin + twist) * speed * t as f64;
                    let (sin, cos) = angle.sin_cos();
                    let place = |&(u, v): &(f64, f64)| {
                        let (u, v) = (u * size, v * size);
                        (
                            (x + u * cos - v * sin).round() as i64,
                            (y + u * sin + v * cos).round() as i64,
                        )
                    };
                    let mut frame = BinaryFrame::blank(p.width, p.height);
                    for poly in &polys {
                        for pair in poly.windows(2) {
                            draw_line(&mut frame, place(&pair[0]), place(&pair[1]));
                        }
                    }
                    frame
                })
                .collect();
            out.push(Snippet::new(frames, c, a, Variant::Original)?);
        }
    }
    Ok(out)
}

/// Writes one directory per snippet (`c{class}-a{actor}`) holding `f{t}.pbm` frames and
/// a `meta.json` sidecar.
pub fn write_synthetic(dir: &Path, snippets: &[Snippet]) -> Result<()> {
    for s in snippets {
        let sub = dir.join(format!("c{:02}-a{:02}", s.class_label, s.actor_id));
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        for (t, frame) in s.frames.iter().enumerate() {
            write_pbm(&sub.join(format!("f{t:03}.pbm")), frame)?;
        }
        let meta = SnippetMeta {
            label: s.class_label,
            actor: s.actor_id,
            bbox: None,
        };
        let path = sub.join("meta.json");
        let mut text = serde_json::to_string(&meta)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_and_shape_contract() {
        let data = generate_synthetic(&SynthParams::default(), 1).unwrap();
        assert_eq!(data.len(), 90);
        for s in &data {
            assert_eq!(s.frames.len(), 10);
            assert!(s.frames.iter().all(|f| f.width == 42 && f.height == 60));
            assert!(s.frames.iter().all(|f| !f.is_blank()));
        }
        assert_eq!(
            data,
            generate_synthetic(&SynthParams::default(), 1).unwrap()
        );
        assert_ne!(
            data,
            generate_synthetic(&SynthParams::default(), 2).unwrap()
        );
    }

    #[test]
    fn degenerate_dims_are_rejected() {
        let p = SynthParams {
            width: 3,
            ..SynthParams::default()
        };
        assert!(generate_synthetic(&p, 0).is_err());
    }

    #[test]
    fn bresenham_endpoints_and_clipping() {
        let mut f = BinaryFrame::blank(5, 5);
        draw_line(&mut f, (0, 0), (4, 2));
        assert!(f.get(0, 0) && f.get(4, 2));
        assert_eq!(f.count_ones(), 5);
        let mut g = BinaryFrame::blank(5, 5);
        draw_line(&mut g, (-3, 2), (7, 2));
        assert_eq!(g.count_ones(), 5);
    }
}
