//! Row-major bit-packed binary matrices.

/// A dense binary matrix, one `u64`-aligned bit row per postsynaptic unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        Self {
            rows,
            cols,
            words_per_row,
            words: vec![0; rows * words_per_row],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.words[r * self.words_per_row + (c >> 6)] >> (c & 63)) & 1 == 1
    }

    /// Sets a bit and reports whether it was previously clear.
    #[inline]
    pub fn set(&mut self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        let word = &mut self.words[r * self.words_per_row + (c >> 6)];
        let mask = 1u64 << (c & 63);
        let fresh = *word & mask == 0;
        *word |= mask;
        fresh
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn row_count_ones(&self, r: usize) -> u32 {
        self.row(r).iter().map(|w| w.count_ones()).sum()
    }

    /// Iterates the set column indices of row `r` in ascending order.
    pub fn row_ones(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(r).iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// True when every bit set in `other` is also set here.
    pub fn is_superset_of(&self, other: &BitMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & b == *b)
    }

    /// Bytes per row in the packed on-disk layout.
    pub fn packed_row_len(&self) -> usize {
        self.cols.div_ceil(8)
    }

    /// Row-major packed bytes; bit `j` of a row lives in byte `j / 8`, least-significant bit first.
    pub fn write_packed(&self, out: &mut Vec<u8>) {
        let row_len = self.packed_row_len();
        for r in 0..self.rows {
            let bytes = self.row(r).iter().flat_map(|w| w.to_le_bytes());
            out.extend(bytes.take(row_len));
        }
    }

    pub fn read_packed(rows: usize, cols: usize, bytes: &[u8]) -> Option<Self> {
        let mut m = Self::zeros(rows, cols);
        let row_len = m.packed_row_len();
        if bytes.len() != rows * row_len {
            return None;
        }
        for (r, chunk) in bytes.chunks_exact(row_len.max(1)).take(rows).enumerate() {
            for (i, &b) in chunk.iter().enumerate() {
                let word = &mut m.words[r * m.words_per_row + i / 8];
                *word |= u64::from(b) << ((i % 8) * 8);
            }
        }
        // stray bits past `cols` would break the 0/1-per-weight contract
        let tail = cols % 64;
        if tail != 0 {
            let mask = !0u64 << tail;
            for r in 0..rows {
                if m.row(r)[m.words_per_row - 1] & mask != 0 {
                    return None;
                }
            }
        }
        Some(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_reports_fresh_bits_once() {
        let mut m = BitMatrix::zeros(3, 70);
        assert!(m.set(1, 65));
        assert!(!m.set(1, 65));
        assert!(m.get(1, 65));
        assert!(!m.get(0, 65));
        assert_eq!(m.count_ones(), 1);
        assert_eq!(m.row_ones(1).collect::<Vec<_>>(), vec![65]);
    }

    #[test]
    fn packed_layout_is_lsb_first() {
        let mut m = BitMatrix::zeros(2, 10);
        m.set(0, 0);
        m.set(0, 9);
        m.set(1, 3);
        let mut bytes = Vec::new();
        m.write_packed(&mut bytes);
        assert_eq!(bytes, vec![0b0000_0001, 0b0000_0010, 0b0000_1000, 0]);
        assert_eq!(BitMatrix::read_packed(2, 10, &bytes), Some(m));
    }

    #[test]
    fn read_rejects_bits_past_the_last_column() {
        assert!(BitMatrix::read_packed(1, 10, &[0, 0b0000_0100]).is_none());
        assert!(BitMatrix::read_packed(1, 10, &[0]).is_none());
    }
}
