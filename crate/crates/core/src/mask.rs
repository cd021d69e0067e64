//! Bit-packed binary masks congruent to weight matrices.

/// Row-major bit matrix. Bit (r, c) lives at flat index `r * cols + c`,
/// packed LSB-first into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let bits = rows * cols;
        BitMatrix {
            rows,
            cols,
            words: vec![0; bits.div_ceil(64)],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for w in &mut m.words {
            *w = u64::MAX;
        }
        let bits = rows * cols;
        if !bits.is_multiple_of(64) {
            if let Some(last) = m.words.last_mut() {
                *last = (1u64 << (bits % 64)) - 1;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        let i = r * self.cols + c;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        let i = r * self.cols + c;
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Set bits of one row, in column order.
    pub fn row_ones(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.cols).filter(move |&c| self.get(r, c))
    }

    /// Pack to bytes: flat row-major bit order, LSB-first within each byte,
    /// padded with zero bits to a whole byte count.
    pub fn to_bytes(&self) -> Vec<u8> {
        let bits = self.rows * self.cols;
        let mut out = vec![0u8; bits.div_ceil(8)];
        for i in 0..bits {
            if self.words[i / 64] >> (i % 64) & 1 == 1 {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    /// Inverse of [`BitMatrix::to_bytes`]. Trailing pad bits must be zero.
    pub fn from_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Option<Self> {
        let bits = rows * cols;
        if bytes.len() != bits.div_ceil(8) {
            return None;
        }
        let mut m = Self::zeros(rows, cols);
        for i in 0..bits {
            if bytes[i / 8] >> (i % 8) & 1 == 1 {
                m.words[i / 64] |= 1 << (i % 64);
            }
        }
        if !bits.is_multiple_of(8) {
            let last = bytes[bits / 8];
            if last >> (bits % 8) != 0 {
                return None;
            }
        }
        Some(m)
    }
}
