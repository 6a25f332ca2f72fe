use serde::{Deserialize, Serialize};

use crate::fingerprint::Fingerprint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    AtomPairBits,
    MorganBits,
    ExternalEmbedding,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Packed bit rows, `words_per_row` u64 each.
    Bits { words_per_row: usize, words: Vec<u64> },
    /// Row-major values.
    Dense { values: Vec<f32> },
}

/// `rows × cols` design matrix, either packed fingerprint bits or dense reals.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    source: FeatureSource,
    storage: Storage,
}

impl FeatureMatrix {
    /// Pack fingerprints (all of one width) into a bit matrix.
    pub fn from_fingerprints(fps: &[Fingerprint], source: FeatureSource) -> Self {
        let cols = fps.first().map_or(0, Fingerprint::width);
        let words_per_row = cols.div_ceil(64);
        let mut words = Vec::with_capacity(fps.len() * words_per_row);
        for fp in fps {
            assert_eq!(fp.width(), cols, "mixed fingerprint widths");
            words.extend_from_slice(fp.words());
        }
        FeatureMatrix { rows: fps.len(), cols, source, storage: Storage::Bits { words_per_row, words } }
    }

    /// Bit matrix from per-row lists of set column indices.
    pub fn from_bit_rows(rows: &[Vec<usize>], cols: usize, source: FeatureSource) -> Self {
        let words_per_row = cols.div_ceil(64);
        let mut words = vec![0u64; rows.len() * words_per_row];
        for (r, ones) in rows.iter().enumerate() {
            for &c in ones {
                assert!(c < cols, "column {c} out of range");
                words[r * words_per_row + c / 64] |= 1 << (c % 64);
            }
        }
        FeatureMatrix { rows: rows.len(), cols, source, storage: Storage::Bits { words_per_row, words } }
    }

    /// Dense matrix from row-major values.
    pub fn from_dense(rows: usize, cols: usize, values: Vec<f32>) -> Self {
        assert_eq!(values.len(), rows * cols, "dense matrix shape");
        FeatureMatrix { rows, cols, source: FeatureSource::ExternalEmbedding, storage: Storage::Dense { values } }
    }

    pub fn from_vectors(vectors: &[Vec<f32>]) -> Self {
        let cols = vectors.first().map_or(0, Vec::len);
        let values = vectors
            .iter()
            .flat_map(|v| {
                assert_eq!(v.len(), cols, "ragged vectors");
                v.iter().copied()
            })
            .collect();
        Self::from_dense(vectors.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn source(&self) -> FeatureSource {
        self.source
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.storage, Storage::Bits { .. })
    }

    pub fn value(&self, row: usize, col: usize) -> f32 {
        match &self.storage {
            Storage::Bits { words_per_row, words } => {
                let w = words[row * words_per_row + col / 64];
                ((w >> (col % 64)) & 1) as f32
            }
            Storage::Dense { values } => values[row * self.cols + col],
        }
    }

    /// Packed words of one bit row. Panics on dense storage.
    pub(crate) fn bit_words(&self, row: usize) -> &[u64] {
        match &self.storage {
            Storage::Bits { words_per_row, words } => &words[row * words_per_row..(row + 1) * words_per_row],
            Storage::Dense { .. } => panic!("bit_words on dense matrix"),
        }
    }

    /// Set columns of one bit row, ascending. Panics on dense storage.
    pub fn row_ones(&self, row: usize) -> Vec<u32> {
        let mut out = Vec::new();
        for (wi, &w) in self.bit_words(row).iter().enumerate() {
            let mut rest = w;
            while rest != 0 {
                out.push((wi * 64) as u32 + rest.trailing_zeros());
                rest &= rest - 1;
            }
        }
        out
    }

    /// One dense row. Panics on bit storage.
    pub fn dense_row(&self, row: usize) -> &[f32] {
        match &self.storage {
            Storage::Dense { values } => &values[row * self.cols..(row + 1) * self.cols],
            Storage::Bits { .. } => panic!("dense_row on bit matrix"),
        }
    }

    /// New matrix holding the given rows, in order.
    pub fn subset(&self, rows: &[usize]) -> FeatureMatrix {
        let storage = match &self.storage {
            Storage::Bits { words_per_row, words } => Storage::Bits {
                words_per_row: *words_per_row,
                words: rows
                    .iter()
                    .flat_map(|&r| &words[r * words_per_row..(r + 1) * words_per_row])
                    .copied()
                    .collect(),
            },
            Storage::Dense { values } => Storage::Dense {
                values: rows
                    .iter()
                    .flat_map(|&r| &values[r * self.cols..(r + 1) * self.cols])
                    .copied()
                    .collect(),
            },
        };
        FeatureMatrix { rows: rows.len(), cols: self.cols, source: self.source, storage }
    }
}
