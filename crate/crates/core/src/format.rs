//! The "SPRS" binary container for macs and whole models.
//!
//! A mac block is the magic `SPRS`, a little-endian `u16` format version, `Q K nU nH nD` as
//! little-endian `u32`, then the U, H and D matrices as row-major bit-packed bytes (one row
//! per unit, bit `j` in byte `j / 8`, least-significant bit first).
//!
//! A model file is `SPRS`, the version, a `u32`-length-prefixed JSON header echoing the
//! model configuration, a `u32` mac count, then per mac its block followed by a presence
//! byte and the optional reconstruction matrix, and finally an optional class field.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits::BitMatrix;
use crate::classify::ClassField;
use crate::error::{Error, Result};
use crate::hierarchy::{Model, ModelConfig};
use crate::mac::{CsaParams, Mac, MacConfig};

pub const MAGIC: &[u8; 4] = b"SPRS";
pub const VERSION: u16 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("unexpected end of data".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn header(&mut self) -> Result<()> {
        if self.take(4)? != MAGIC {
            return Err(Error::Format("missing SPRS magic".into()));
        }
        let version = self.u16()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {version}"
            )));
        }
        Ok(())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<BitMatrix> {
        let len = rows * cols.div_ceil(8);
        BitMatrix::read_packed(rows, cols, self.take(len)?)
            .ok_or_else(|| Error::Format("weight bits set past the last column".into()))
    }
}

fn dim(x: usize) -> Result<[u8; 4]> {
    u32::try_from(x)
        .map(u32::to_le_bytes)
        .map_err(|_| Error::Format(format!("dimension {x} does not fit in u32")))
}

pub fn encode_mac(mac: &Mac, out: &mut Vec<u8>) -> Result<()> {
    let c = mac.config();
    out.extend(MAGIC);
    out.extend(VERSION.to_le_bytes());
    for x in [c.q, c.k, c.n_u, c.n_h, c.n_d] {
        out.extend(dim(x)?);
    }
    mac.weights_u().write_packed(out);
    mac.weights_h().write_packed(out);
    mac.weights_d().write_packed(out);
    Ok(())
}

/// Decodes one mac block; CSA parameters are not part of the block and are supplied.
/// Returns the mac and the number of bytes consumed.
pub fn decode_mac(bytes: &[u8], csa: CsaParams) -> Result<(Mac, usize)> {
    let mut r = Reader { bytes, pos: 0 };
    let mac = read_mac(&mut r, csa, 0)?;
    Ok((mac, r.pos))
}

fn read_mac(r: &mut Reader<'_>, csa: CsaParams, stored: u64) -> Result<Mac> {
    r.header()?;
    let mut d = [0usize; 5];
    for x in &mut d {
        *x = r.u32()? as usize;
    }
    let [q, k, n_u, n_h, n_d] = d;
    let config = MacConfig {
        q,
        k,
        n_u,
        n_h,
        n_d,
        csa,
    };
    config
        .validate()
        .map_err(|e| Error::Format(format!("mac header: {e}")))?;
    let units = q * k;
    let w_u = r.matrix(units, n_u)?;
    let w_h = r.matrix(units, n_h)?;
    let w_d = r.matrix(units, n_d)?;
    Mac::from_parts(config, w_u, w_h, w_d, stored)
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    config: ModelConfig,
    clock: u64,
    stored: Vec<Vec<u64>>,
}

pub fn encode_model(model: &Model) -> Result<Vec<u8>> {
    let header = ModelHeader {
        config: model.config().clone(),
        clock: model.clock(),
        stored: model
            .levels
            .iter()
            .map(|l| l.macs.iter().map(Mac::stored_count).collect())
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::new();
    out.extend(MAGIC);
    out.extend(VERSION.to_le_bytes());
    out.extend(dim(json.len())?);
    out.extend(json);
    let macs: usize = model.levels.iter().map(|l| l.macs.len()).sum();
    out.extend(dim(macs)?);
    for level in &model.levels {
        for (mac, recon) in level.macs.iter().zip(&level.recon) {
            encode_mac(mac, &mut out)?;
            match recon {
                Some(m) => {
                    out.push(1);
                    m.write_packed(&mut out);
                }
                None => out.push(0),
            }
        }
    }
    match model.class_field() {
        Some(cf) => {
            out.push(1);
            out.extend(dim(cf.classes())?);
            out.extend(dim(cf.units())?);
            cf.weights().write_packed(&mut out);
        }
        None => out.push(0),
    }
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { bytes, pos: 0 };
    r.header()?;
    let len = r.u32()? as usize;
    let header: ModelHeader = serde_json::from_slice(r.take(len)?)
        .map_err(|e| Error::Format(format!("model header: {e}")))?;
    let mut model = Model::build(header.config)?;
    model.clock = header.clock;

    let expected: usize = model.levels.iter().map(|l| l.macs.len()).sum();
    if r.u32()? as usize != expected {
        return Err(Error::Format(
            "mac count disagrees with the configuration".into(),
        ));
    }
    for (li, level) in model.levels.iter_mut().enumerate() {
        for m in 0..level.macs.len() {
            let stored = header
                .stored
                .get(li)
                .and_then(|s| s.get(m))
                .copied()
                .unwrap_or(0);
            let csa = level.macs[m].config().csa.clone();
            let mac = read_mac(&mut r, csa, stored)?;
            if mac.config() != level.macs[m].config() {
                return Err(Error::Format(format!(
                    "level {} mac {m} dimensions disagree with the configuration",
                    li + 1
                )));
            }
            level.macs[m] = mac;
            let has_recon = r.u8()? == 1;
            match (&mut level.recon[m], has_recon) {
                (Some(slot), true) => *slot = r.matrix(slot.rows(), slot.cols())?,
                (None, false) => {}
                _ => return Err(Error::Format("reconstruction flag mismatch".into())),
            }
        }
    }
    let has_field = r.u8()? == 1;
    match (model.class_field.is_some(), has_field) {
        (true, true) => {
            let classes = r.u32()? as usize;
            let units = r.u32()? as usize;
            let cf = model.class_field.as_ref().expect("checked");
            if (classes, units) != (cf.classes(), cf.units()) {
                return Err(Error::Format("class field dimensions disagree".into()));
            }
            model.class_field = Some(ClassField::from_weights(r.matrix(classes, units)?));
        }
        (false, false) => {}
        _ => return Err(Error::Format("class field flag mismatch".into())),
    }
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after model".into()));
    }
    Ok(model)
}

/// Writes the model through a temporary file in the target directory, then renames it
/// into place.
pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let bytes = encode_model(model)?;
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(&bytes)
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::{Code, InputVector};

    #[test]
    fn mac_block_layout() {
        let mut cfg = MacConfig::new(1, 2, 10);
        cfg.n_h = 2;
        let mut mac = Mac::new(cfg).unwrap();
        mac.learn(
            &InputVector::new(vec![0, 9], vec![1], vec![]),
            &Code::new(vec![1]),
        )
        .unwrap();
        let mut bytes = Vec::new();
        encode_mac(&mac, &mut bytes).unwrap();
        let mut expected = b"SPRS".to_vec();
        expected.extend(1u16.to_le_bytes());
        for x in [1u32, 2, 10, 2, 0] {
            expected.extend(x.to_le_bytes());
        }
        // U: unit 0 empty, unit 1 has bits 0 and 9
        expected.extend([0, 0, 0b0000_0001, 0b0000_0010]);
        // H: unit 1 has bit 1
        expected.extend([0, 0b0000_0010]);
        assert_eq!(bytes, expected);

        let (back, used) = decode_mac(&bytes, CsaParams::default()).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(back.weights_u(), mac.weights_u());
        assert_eq!(back.weights_h(), mac.weights_h());
    }

    #[test]
    fn rejects_corruption() {
        let mac = Mac::new(MacConfig::new(2, 2, 3)).unwrap();
        let mut bytes = Vec::new();
        encode_mac(&mac, &mut bytes).unwrap();
        assert!(decode_mac(&bytes[..bytes.len() - 1], CsaParams::default()).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_mac(&bad, CsaParams::default()).is_err());
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(decode_mac(&bad, CsaParams::default()).is_err());
        // a bit past nU=3 in the first packed row
        let mut bad = bytes;
        let first_row = 4 + 2 + 20;
        bad[first_row] = 0b1000_0000;
        assert!(decode_mac(&bad, CsaParams::default()).is_err());
    }
}
