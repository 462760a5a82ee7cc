//! Privacy amplification: the final key is the set of parities of randomly
//! chosen subsets of the reconciled key. The subsets are the rows of a
//! random bit matrix expanded deterministically from the announced seed, so
//! both parties (and any auditor) reproduce the same hash.

use super::{HashKind, HashSpec, PostprocError};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Apply the subset-parity hash: output bit i is the parity of the key
/// restricted to row i's subset.
pub fn privacy_amplify(
    key: &[bool],
    n_fin: u64,
    spec: &HashSpec,
) -> Result<Vec<bool>, PostprocError> {
    if spec.kind != HashKind::SubsetParityMatrix {
        return Err(PostprocError::Domain(
            "privacy amplification needs a subset-parity matrix spec".into(),
        ));
    }
    if spec.rows != n_fin || spec.cols != key.len() as u64 {
        return Err(PostprocError::Domain(format!(
            "hash shape ({}, {}) does not match request ({}, {})",
            spec.rows,
            spec.cols,
            n_fin,
            key.len()
        )));
    }
    if n_fin > key.len() as u64 {
        return Err(PostprocError::Domain("n_fin exceeds the key length".into()));
    }

    // Pack the key into words once; each matrix row is a fresh word stream.
    let words = key.len().div_ceil(64);
    let mut packed = vec![0u64; words];
    for (i, &b) in key.iter().enumerate() {
        if b {
            packed[i / 64] |= 1 << (i % 64);
        }
    }
    let tail_mask = if key.len() % 64 == 0 { u64::MAX } else { (1u64 << (key.len() % 64)) - 1 };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(n_fin as usize);
    for _ in 0..n_fin {
        let mut acc = 0u64;
        for (w, &kw) in packed.iter().enumerate() {
            let mut row_word = rng.next_u64();
            if w == words - 1 {
                row_word &= tail_mask;
            }
            acc ^= row_word & kw;
        }
        out.push(acc.count_ones() % 2 == 1);
    }
    Ok(out)
}
