//! Snippet-vector export and import: dense CSV (`label,actor,b0,b1,...`) and sparse
//! JSON lines.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::BinaryVector;
use crate::preprocess::Variant;

/// A snippet's top-level code vector with its labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetVector {
    pub label: usize,
    pub actor: usize,
    pub variant: Variant,
    #[serde(flatten)]
    pub bits: BinaryVector,
}

impl SnippetVector {
    pub fn is_original(&self) -> bool {
        self.variant == Variant::Original
    }
}

pub fn write_vectors_csv<W: Write>(vectors: &[SnippetVector], mut out: W) -> std::io::Result<()> {
    let mut line = String::new();
    for v in vectors {
        line.clear();
        line.push_str(&format!("{},{}", v.label, v.actor));
        for bit in v.bits.to_dense() {
            line.push_str(if bit { ",1" } else { ",0" });
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Reads dense CSV rows. The CSV form carries no variant column, so every row is
/// treated as an original.
pub fn read_vectors_csv<R: BufRead>(input: R) -> Result<Vec<SnippetVector>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Data(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Data(format!("line {}: {what}", n + 1));
        let mut fields = line.split(',').map(str::trim);
        let label = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| bad("bad label"))?;
        let actor = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| bad("bad actor"))?;
        let mut ones = Vec::new();
        let mut len = 0usize;
        for f in fields {
            match f {
                "0" => {}
                "1" => ones.push(len as u32),
                _ => return Err(bad("dimensions must be 0 or 1")),
            }
            len += 1;
        }
        out.push(SnippetVector {
            label,
            actor,
            variant: Variant::Original,
            bits: BinaryVector { len, ones },
        });
    }
    Ok(out)
}

pub fn write_vectors_jsonl<W: Write>(vectors: &[SnippetVector], mut out: W) -> std::io::Result<()> {
    for v in vectors {
        serde_json::to_writer(&mut out, v)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_vectors_jsonl<R: BufRead>(input: R) -> Result<Vec<SnippetVector>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::Data(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: SnippetVector = serde_json::from_str(&line)?;
        if v.bits.ones.iter().any(|&i| i as usize >= v.bits.len) {
            return Err(Error::Data("sparse index past the vector length".into()));
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<SnippetVector> {
        vec![
            SnippetVector {
                label: 3,
                actor: 1,
                variant: Variant::Original,
                bits: BinaryVector {
                    len: 5,
                    ones: vec![0, 4],
                },
            },
            SnippetVector {
                label: 0,
                actor: 2,
                variant: Variant::Noisy(2),
                bits: BinaryVector {
                    len: 5,
                    ones: vec![],
                },
            },
        ]
    }

    #[test]
    fn csv_rows() {
        let mut out = Vec::new();
        write_vectors_csv(&sample(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "3,1,1,0,0,0,1\n0,2,0,0,0,0,0\n");
        let back = read_vectors_csv(text.as_bytes()).unwrap();
        assert_eq!(back[0], sample()[0]);
        assert!(back[1].is_original());
        assert!(read_vectors_csv("1,2,0,2\n".as_bytes()).is_err());
    }

    #[test]
    fn jsonl_keeps_variants() {
        let mut out = Vec::new();
        write_vectors_jsonl(&sample(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with(
            r#"{"label":3,"actor":1,"variant":{"kind":"original"},"len":5,"ones":[0,4]}"#
        ));
        assert_eq!(read_vectors_jsonl(text.as_bytes()).unwrap(), sample());
        let bad = r#"{"label":0,"actor":0,"variant":{"kind":"original"},"len":2,"ones":[2]}"#;
        assert!(read_vectors_jsonl(bad.as_bytes()).is_err());
    }
}
