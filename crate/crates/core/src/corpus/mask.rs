use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{TokenId, MASK_ID};
use crate::{Error, Result};

/// A sentence with a subset of its positions replaced by [`MASK_ID`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedBatch {
    pub original: Vec<TokenId>,
    pub masked: Vec<TokenId>,
    /// Sorted ascending.
    pub positions: Vec<usize>,
    pub seed: u64,
}

/// Masks `round(mask_fraction * len)` positions chosen uniformly without
/// replacement, and at least one.
///
/// Tokens are whole words, so whole-word masking masks one position per word.
pub fn mask_tokens(tokens: &[TokenId], mask_fraction: f64, seed: u64) -> Result<MaskedBatch> {
    if !(mask_fraction > 0.0 && mask_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "mask fraction must lie in (0, 1), got {mask_fraction}"
        )));
    }
    if tokens.is_empty() {
        return Err(Error::InvalidArgument("cannot mask an empty sentence".into()));
    }
    let n = tokens.len();
    let count = ((mask_fraction * n as f64).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = sample(&mut rng, n, count).into_vec();
    positions.sort_unstable();
    let mut masked = tokens.to_vec();
    for &p in &positions {
        masked[p] = MASK_ID;
    }
    Ok(MaskedBatch { original: tokens.to_vec(), masked, positions, seed })
}
