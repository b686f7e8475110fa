use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mac::Code;

/// A mac active on one step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveMac {
    /// 1-based level number.
    pub level: usize,
    /// `[row, col]` in the level's grid.
    pub mac: [usize; 2],
    pub code: Code,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub t: usize,
    /// Sorted by level, then grid position.
    pub active: Vec<ActiveMac>,
    #[serde(skip)]
    pub active_pixels: usize,
}

impl TraceStep {
    pub fn unit_count(&self) -> usize {
        self.active.iter().map(|a| a.code.q()).sum()
    }
}

/// The per-step record of which macs were active with which codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    /// `[rows, cols, Q, K]` per level, used to refuse comparisons across models.
    pub shape: Vec<[usize; 4]>,
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn new(shape: Vec<[usize; 4]>) -> Self {
        Self {
            shape,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Total unit activations over all steps.
    pub fn unit_count(&self) -> usize {
        self.steps.iter().map(TraceStep::unit_count).sum()
    }

    /// One JSON object per step: `{"t": n, "active": [{"level": l, "mac": [r, c], "code": [...]}]}`.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for step in &self.steps {
            serde_json::to_writer(&mut out, step)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R, shape: Vec<[usize; 4]>) -> Result<Self> {
        let mut trace = Trace::new(shape);
        for line in input.lines() {
            let line = line.map_err(|e| Error::Data(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            trace.steps.push(serde_json::from_str(&line)?);
        }
        Ok(trace)
    }
}

/// Fraction of `a`'s unit activations (step, level, mac, unit) that also occur in `b`.
///
/// Two traces with no activations at all match perfectly.
pub fn recognition_match(a: &Trace, b: &Trace) -> Result<f64> {
    if a.shape != b.shape {
        return Err(Error::Shape("traces come from different models".into()));
    }
    let mut total = 0usize;
    let mut shared = 0usize;
    for (i, step) in a.steps.iter().enumerate() {
        total += step.unit_count();
        let Some(other) = b.steps.get(i) else {
            continue;
        };
        // both lists are sorted by (level, mac)
        let mut j = 0;
        for act in &step.active {
            let key = (act.level, act.mac);
            while j < other.active.len() && (other.active[j].level, other.active[j].mac) < key {
                j += 1;
            }
            if let Some(o) = other.active.get(j) {
                if (o.level, o.mac) == key {
                    shared += act
                        .code
                        .winners
                        .iter()
                        .zip(&o.code.winners)
                        .filter(|(x, y)| x == y)
                        .count();
                }
            }
        }
    }
    if total == 0 {
        return Ok(if b.unit_count() == 0 { 1.0 } else { 0.0 });
    }
    Ok(shared as f64 / total as f64)
}

/// A fixed-length binary vector stored as its sorted set-bit indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryVector {
    pub len: usize,
    pub ones: Vec<u32>,
}

impl BinaryVector {
    pub fn count_ones(&self) -> usize {
        self.ones.len()
    }

    pub fn to_dense(&self) -> Vec<bool> {
        let mut v = vec![false; self.len];
        for &i in &self.ones {
            v[i as usize] = true;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(t: usize, active: &[(usize, [usize; 2], &[u32])]) -> TraceStep {
        TraceStep {
            t,
            active: active
                .iter()
                .map(|(level, mac, code)| ActiveMac {
                    level: *level,
                    mac: *mac,
                    code: Code::new(code.to_vec()),
                })
                .collect(),
            active_pixels: 0,
        }
    }

    fn trace(steps: Vec<TraceStep>) -> Trace {
        Trace {
            shape: vec![[2, 2, 3, 4]],
            steps,
        }
    }

    #[test]
    fn identical_traces_match_fully() {
        let a = trace(vec![step(
            0,
            &[(1, [0, 1], &[0, 1, 2]), (1, [1, 1], &[3, 3, 3])],
        )]);
        assert_eq!(recognition_match(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_traces_do_not_match() {
        let a = trace(vec![step(0, &[(1, [0, 1], &[0, 1, 2])])]);
        let b = trace(vec![step(0, &[(1, [0, 0], &[0, 1, 2])])]);
        let c = trace(vec![step(0, &[(1, [0, 1], &[1, 2, 3])])]);
        assert_eq!(recognition_match(&a, &b).unwrap(), 0.0);
        assert_eq!(recognition_match(&a, &c).unwrap(), 0.0);
    }

    #[test]
    fn partial_overlap_is_per_unit() {
        let a = trace(vec![
            step(0, &[(1, [0, 0], &[0, 1, 2]), (1, [1, 0], &[1, 1, 1])]),
            step(1, &[(1, [0, 0], &[0, 0, 0])]),
        ]);
        let b = trace(vec![
            step(0, &[(1, [0, 0], &[0, 1, 3]), (1, [1, 1], &[1, 1, 1])]),
            step(1, &[(1, [0, 0], &[0, 0, 0])]),
        ]);
        // step 0: 2 of 6, step 1: 3 of 3
        assert!((recognition_match(&a, &b).unwrap() - 5.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn empty_traces_and_shape_mismatch() {
        let empty = trace(vec![step(0, &[])]);
        assert_eq!(recognition_match(&empty, &empty).unwrap(), 1.0);
        let mut other = empty.clone();
        other.shape = vec![[1, 1, 3, 4]];
        assert!(recognition_match(&empty, &other).is_err());
    }

    #[test]
    fn jsonl_lines_have_the_documented_shape() {
        let a = trace(vec![step(0, &[(1, [0, 1], &[0, 1, 2])]), step(1, &[])]);
        let mut out = Vec::new();
        a.write_jsonl(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            r#"{"t":0,"active":[{"level":1,"mac":[0,1],"code":[0,1,2]}]}"#
        );
        assert_eq!(lines[1], r#"{"t":1,"active":[]}"#);
        let back = Trace::read_jsonl(text.as_bytes(), a.shape.clone()).unwrap();
        assert_eq!(back, a);
    }
}
