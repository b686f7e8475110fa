use super::BinaryFrame;

// P2..P9 clockwise from north, as (dx, dy)
const NEIGHBOURS: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// Zhang-Suen thinning, iterated until a full pass deletes nothing. Pixels outside the
/// frame count as background.
pub fn skeletonize(frame: &BinaryFrame) -> BinaryFrame {
    let mut out = frame.clone();
    let mut doomed = Vec::new();
    loop {
        let mut changed = false;
        for first in [true, false] {
            doomed.clear();
            for y in 0..out.height {
                for x in 0..out.width {
                    if out.get(x, y) && deletable(&out, x as isize, y as isize, first) {
                        doomed.push((x, y));
                    }
                }
            }
            changed |= !doomed.is_empty();
            for &(x, y) in &doomed {
                out.set(x, y, false);
            }
        }
        if !changed {
            return out;
        }
    }
}

fn deletable(f: &BinaryFrame, x: isize, y: isize, first: bool) -> bool {
    let mut p = [false; 8];
    for (slot, (dx, dy)) in p.iter_mut().zip(NEIGHBOURS) {
        *slot = f.get_signed(x + dx, y + dy);
    }
    let b = p.iter().filter(|&&v| v).count();
    if !(2..=6).contains(&b) {
        return false;
    }
    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
    if a != 1 {
        return false;
    }
    let [p2, _, p4, _, p6, _, p8, _] = p;
    if first {
        !(p2 && p4 && p6) && !(p4 && p6 && p8)
    } else {
        !(p2 && p4 && p8) && !(p2 && p6 && p8)
    }
}
