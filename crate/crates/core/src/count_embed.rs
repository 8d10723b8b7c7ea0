//! Word vectors from ramped-window co-occurrence counts.
//!
//! Counting gives each ordered pair of tokens at distance `d ≤ W` inside a
//! sentence the weight `W − d + 1`, so adjacent words weigh most. Left and
//! right context are merged, which makes the matrix symmetric. The matrix is
//! then normalized and reduced with a truncated SVD; word `i` is row `i` of
//! `U_k · diag(S_k)`.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1, Axis};

use crate::corpus::{TokenId, Vocabulary};
use crate::linalg::{truncated_svd, SvdOptions};
use crate::{Error, NamedVectors, Result};

/// Sparse symmetric co-occurrence weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    dim: usize,
    window: usize,
    cells: BTreeMap<(TokenId, TokenId), f64>,
}

impl CooccurrenceMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Left and right contexts are always merged.
    pub fn is_symmetric(&self) -> bool {
        true
    }

    pub fn get(&self, row: TokenId, col: TokenId) -> f64 {
        self.cells.get(&(row, col)).copied().unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.cells.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((TokenId, TokenId), f64)> + '_ {
        self.cells.iter().map(|(k, v)| (*k, *v))
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.dim, self.dim));
        for (&(i, j), &w) in &self.cells {
            m[[i, j]] = w;
        }
        m
    }

    /// Caps every cell at `cap`.
    pub fn apply_threshold(&mut self, cap: f64) {
        for w in self.cells.values_mut() {
            *w = w.min(cap);
        }
        self.cells.retain(|_, w| *w > 0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    None,
    RowL1,
    Correlation,
}

#[derive(Debug, Clone)]
pub struct CountEmbeddingConfig {
    pub window: usize,
    pub normalization: Normalization,
    pub svd_rank: usize,
    /// Optional per-cell cap applied to raw counts before normalizing.
    pub count_threshold: Option<f64>,
    pub svd: SvdOptions,
}

impl Default for CountEmbeddingConfig {
    fn default() -> Self {
        CountEmbeddingConfig {
            window: 10,
            normalization: Normalization::RowL1,
            svd_rank: 50,
            count_threshold: None,
            svd: SvdOptions::default(),
        }
    }
}

/// Accumulates ramped-window weights over `sentences` (token ids below
/// `vocab_size`). Windows never cross sentence boundaries.
pub fn build_cooccurrence(
    sentences: &[Vec<TokenId>],
    vocab_size: usize,
    config: &CountEmbeddingConfig,
) -> Result<CooccurrenceMatrix> {
    let window = config.window;
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    let mut cells: BTreeMap<(TokenId, TokenId), f64> = BTreeMap::new();
    for sent in sentences {
        if let Some(&bad) = sent.iter().find(|&&t| t >= vocab_size) {
            return Err(Error::UnknownId { id: bad, size: vocab_size });
        }
        for (i, &a) in sent.iter().enumerate() {
            for d in 1..=window {
                let Some(&b) = sent.get(i + d) else { break };
                let w = (window - d + 1) as f64;
                *cells.entry((a, b)).or_default() += w;
                *cells.entry((b, a)).or_default() += w;
            }
        }
    }
    let mut m = CooccurrenceMatrix { dim: vocab_size, window, cells };
    if let Some(cap) = config.count_threshold {
        m.apply_threshold(cap);
    }
    Ok(m)
}

/// Dense normalized copy of `m`.
///
/// `RowL1` scales each nonzero row to sum 1. `Correlation` replaces each cell
/// by the correlation between the two words' occurrence against what the
/// marginals predict,
/// `(T·w_ij − r_i·c_j) / sqrt(r_i·(T − r_i)·c_j·(T − c_j))`,
/// clamps negatives to zero and takes the square root. All-zero rows stay
/// zero.
pub fn normalize(m: &CooccurrenceMatrix, mode: Normalization) -> Array2<f64> {
    let mut dense = m.to_dense();
    match mode {
        Normalization::None => {}
        Normalization::RowL1 => {
            for mut row in dense.rows_mut() {
                let sum: f64 = row.sum();
                if sum > 0.0 {
                    row.mapv_inplace(|x| x / sum);
                }
            }
        }
        Normalization::Correlation => {
            let rows = dense.sum_axis(Axis(1));
            let cols = dense.sum_axis(Axis(0));
            let total: f64 = rows.sum();
            let raw = dense.clone();
            for ((i, j), out) in dense.indexed_iter_mut() {
                let denom = rows[i] * (total - rows[i]) * cols[j] * (total - cols[j]);
                *out = if denom > 0.0 {
                    let corr = (total * raw[[i, j]] - rows[i] * cols[j]) / denom.sqrt();
                    corr.max(0.0).sqrt()
                } else {
                    0.0
                };
            }
        }
    }
    dense
}

/// `|V|` rows of `d`-dimensional word vectors, indexed by token id.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseEmbeddingTable {
    table: Array2<f64>,
}

impl DenseEmbeddingTable {
    pub fn new(table: Array2<f64>) -> Result<Self> {
        if !table.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("embedding table".into()));
        }
        Ok(DenseEmbeddingTable { table })
    }

    pub fn len(&self) -> usize {
        self.table.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.table.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.table.ncols()
    }

    pub fn table(&self) -> &Array2<f64> {
        &self.table
    }

    pub fn word_vector(&self, id: TokenId) -> Result<ArrayView1<'_, f64>> {
        if id >= self.len() {
            return Err(Error::UnknownId { id, size: self.len() });
        }
        Ok(self.table.row(id))
    }

    /// Mean of the rows of `ids`; `None` for an empty list.
    pub fn mean_vector(&self, ids: &[TokenId]) -> Result<Option<Vec<f64>>> {
        if ids.is_empty() {
            return Ok(None);
        }
        let mut acc = vec![0.0; self.dim()];
        for &id in ids {
            for (a, x) in acc.iter_mut().zip(self.word_vector(id)?) {
                *a += x;
            }
        }
        let n = ids.len() as f64;
        Ok(Some(acc.into_iter().map(|a| a / n).collect()))
    }

    pub fn to_named(&self, vocab: &Vocabulary) -> Result<NamedVectors> {
        if vocab.len() != self.len() {
            return Err(Error::Shape(format!("{} words for {} rows", vocab.len(), self.len())));
        }
        NamedVectors::new(vocab.surfaces().to_vec(), self.table.clone())
    }

    /// Reorders rows of an imported vectors file to match `vocab`. Words
    /// missing from the file get zero rows.
    pub fn from_named(named: &NamedVectors, vocab: &Vocabulary) -> Result<Self> {
        let mut table = Array2::zeros((vocab.len(), named.dim()));
        for (name, row) in named.names.iter().zip(named.vectors.rows()) {
            if let Some(id) = vocab.lookup(name) {
                table.row_mut(id).assign(&row);
            }
        }
        Self::new(table)
    }
}

/// The full count-based pipeline: co-occurrence, optional cap, normalization,
/// truncated SVD, and `U_k · diag(S_k)`.
pub fn train_count_embeddings(
    sentences: &[Vec<TokenId>],
    vocab_size: usize,
    config: &CountEmbeddingConfig,
) -> Result<DenseEmbeddingTable> {
    let m = build_cooccurrence(sentences, vocab_size, config)?;
    let norm = normalize(&m, config.normalization);
    let svd = truncated_svd(&norm, config.svd_rank, &config.svd)?;
    let table = &svd.u * &svd.s.view().insert_axis(Axis(0));
    DenseEmbeddingTable::new(table)
}
