//! Brute-force recovery of a block hidden in a master-slot operation.
//!
//! The borrow chain leaves fixed-key encryptions of blocks that are mostly
//! known zeros plus a suffix of the hidden block `H`. The one with the most
//! zeros exposes a single unknown chunk, which is found by trying every
//! value; each following artifact then has one new unknown chunk. The bytes
//! never exposed that way are found from the slave-slot encryption of the
//! zero block, keyed by `H ∥ 0^16`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::aes::{Block, FastCipher};
use crate::fault::{BorrowArtifacts, BorrowDirection};

pub const CHUNK_BITS: [u32; 4] = [8, 16, 24, 32];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BusterError {
    #[error("chunk width {0} bits is not one of 8, 16, 24, 32")]
    ChunkBits(u32),
    #[error("fixed key must be 16 bytes, got {0}")]
    FixedKeyLength(usize),
    #[error("expected {expected} partial ciphertexts, got {got}")]
    PartialCount { expected: usize, got: usize },
    #[error("no chunk value reproduces artifact {stage}")]
    ArtifactMismatch { stage: usize },
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BusterStats {
    /// AES block operations spent searching (verification excluded).
    pub aes_ops: u64,
    /// Upper bound on `aes_ops`: one full chunk scan per stage.
    pub worst_case_ops: u64,
    /// Matches beyond the first, summed over stages. Only counted when a
    /// chunk has at most 16 bits, where every stage is scanned in full.
    pub extra_matches: Option<u64>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl BusterStats {
    pub fn ops_per_second(&self) -> f64 {
        self.aes_ops as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

/// Byte range of `H` found from `partials[k]` and the zero-prefix length of
/// that artifact.
fn stage_layout(direction: BorrowDirection, zeros: usize, width: usize) -> std::ops::Range<usize> {
    match direction {
        BorrowDirection::Tail => zeros..zeros + width,
        BorrowDirection::Head => 16 - zeros - width..16 - zeros,
    }
}

fn head_range(direction: BorrowDirection, remaining: usize) -> std::ops::Range<usize> {
    match direction {
        BorrowDirection::Tail => 0..remaining,
        BorrowDirection::Head => 16 - remaining..16,
    }
}

fn place(block: &mut Block, range: &std::ops::Range<usize>, value: u64) {
    let bytes = value.to_be_bytes();
    block[range.clone()].copy_from_slice(&bytes[8 - range.len()..]);
}

/// Scan `0..2^bits` in `workers` contiguous slices for the lowest value
/// satisfying `hit`.
fn search(
    bits: usize,
    workers: usize,
    full_scan: bool,
    ops: &AtomicU64,
    hit: impl Fn(u64) -> bool + Sync,
) -> (Option<u64>, u64) {
    let total = 1u64 << bits;
    let workers = (workers.max(1) as u64).min(total);
    let best = AtomicU64::new(u64::MAX);
    let matches = AtomicU64::new(0);
    (0..workers).into_par_iter().for_each(|w| {
        let lo = total * w / workers;
        let hi = total * (w + 1) / workers;
        let mut done = 0;
        for v in lo..hi {
            if !full_scan && v > best.load(Ordering::Relaxed) {
                break;
            }
            done += 1;
            if hit(v) {
                matches.fetch_add(1, Ordering::Relaxed);
                best.fetch_min(v, Ordering::Relaxed);
                if !full_scan {
                    break;
                }
            }
        }
        ops.fetch_add(done, Ordering::Relaxed);
    });
    let best = best.into_inner();
    ((best != u64::MAX).then_some(best), matches.into_inner())
}

fn slave_ciphertext(hidden: &Block) -> Block {
    let mut key = [0u8; 32];
    key[..16].copy_from_slice(hidden);
    FastCipher::new(&key).expect("32-byte key").encrypt(&[0; 16])
}

fn check_artifacts(art: &BorrowArtifacts) -> Result<(FastCipher, Vec<usize>), BusterError> {
    if !CHUNK_BITS.contains(&art.chunk_bits) {
        return Err(BusterError::ChunkBits(art.chunk_bits));
    }
    if art.fixed_key.len() != 16 {
        return Err(BusterError::FixedKeyLength(art.fixed_key.len()));
    }
    let lengths = BorrowArtifacts::partial_lengths(art.chunk_bytes());
    if lengths.len() != art.partials.len() {
        return Err(BusterError::PartialCount {
            expected: lengths.len(),
            got: art.partials.len(),
        });
    }
    Ok((FastCipher::new(&art.fixed_key).expect("16-byte key"), lengths))
}

/// Check a candidate hidden block against every artifact.
pub fn artifacts_match(art: &BorrowArtifacts, hidden: &Block) -> Result<bool, BusterError> {
    let (cipher, lengths) = check_artifacts(art)?;
    let partials_ok = lengths.iter().zip(&art.partials).all(|(&zeros, c)| {
        cipher.encrypt(&art.direction.complete(&vec![0; zeros], hidden)) == *c
    });
    Ok(partials_ok && slave_ciphertext(hidden) == art.slave)
}

/// [`recover_hidden`] with an explicit worker count and search statistics.
pub fn recover_hidden_with(
    art: &BorrowArtifacts,
    workers: usize,
) -> Result<(Block, BusterStats), BusterError> {
    let start = Instant::now();
    let (cipher, lengths) = check_artifacts(art)?;
    let width = art.chunk_bytes();
    let full_scan = width <= 2;
    let ops = AtomicU64::new(0);
    let mut extra = 0;
    let mut hidden = [0u8; 16];

    for (k, (&zeros, target)) in lengths.iter().zip(&art.partials).enumerate() {
        let range = stage_layout(art.direction, zeros, width);
        let base = art.direction.complete(&vec![0; zeros], &hidden);
        let (found, matches) = search(8 * width, workers, full_scan, &ops, |v| {
            let mut block = base;
            place(&mut block, &range, v);
            cipher.encrypt(&block) == *target
        });
        let v = found.ok_or(BusterError::ArtifactMismatch { stage: k + 1 })?;
        extra += matches.saturating_sub(1);
        place(&mut hidden, &range, v);
    }

    let remaining = *lengths.last().expect("at least one partial");
    let range = head_range(art.direction, remaining);
    let base = hidden;
    let (found, matches) = search(8 * remaining, workers, full_scan, &ops, |v| {
        let mut block = base;
        place(&mut block, &range, v);
        slave_ciphertext(&block) == art.slave
    });
    let v = found.ok_or(BusterError::ArtifactMismatch {
        stage: lengths.len() + 1,
    })?;
    extra += matches.saturating_sub(1);
    place(&mut hidden, &range, v);

    if !artifacts_match(art, &hidden)? {
        return Err(BusterError::ArtifactMismatch {
            stage: lengths.len() + 1,
        });
    }
    let stats = BusterStats {
        aes_ops: ops.into_inner(),
        worst_case_ops: ((lengths.len() as u64) << (8 * width)) + (1u64 << (8 * remaining)),
        extra_matches: full_scan.then_some(extra),
        elapsed: start.elapsed(),
    };
    Ok((hidden, stats))
}

/// Reconstruct the hidden block from its borrow-chain artifacts.
pub fn recover_hidden(art: &BorrowArtifacts) -> Result<Block, BusterError> {
    recover_hidden_with(art, rayon::current_num_threads()).map(|(h, _)| h)
}

/// [`recover_hidden`] for many sets; one failure does not stop the rest.
pub fn bust_batch(sets: &[BorrowArtifacts]) -> Vec<Result<Block, BusterError>> {
    sets.par_iter().map(recover_hidden).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aes::{decrypt_block, expand_key};
    use crate::fault::{run_borrow_chain, BigmacEngine};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn chain(rng: &mut ChaCha8Rng, bits: u32, direction: BorrowDirection) -> (Block, BorrowArtifacts) {
        let mut engine = BigmacEngine::new(direction);
        let master: [u8; 32] = rng.gen();
        engine.add_slot(0, master, true);
        engine.add_slot(1, [0; 32], false);
        let input: Block = rng.gen();
        let hidden = decrypt_block(&input, &expand_key(&master).unwrap());
        let fixed: [u8; 16] = rng.gen();
        let art = run_borrow_chain(&mut engine, 0, 1, &input, &fixed, bits, &[]).unwrap();
        (hidden, art)
    }

    #[test]
    fn recovers_at_every_small_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for bits in [8, 16] {
            for dir in [BorrowDirection::Tail, BorrowDirection::Head] {
                let (hidden, art) = chain(&mut rng, bits, dir);
                let (got, stats) = recover_hidden_with(&art, 3).unwrap();
                assert_eq!(got, hidden);
                assert!(stats.aes_ops <= stats.worst_case_ops);
                assert_eq!(stats.extra_matches, Some(0));
            }
        }
    }

    #[test]
    fn uneven_width_leaves_a_short_head() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let (hidden, mut art) = chain(&mut rng, 24, BorrowDirection::Tail);
        assert_eq!(art.partials.len(), 5);
        assert!(artifacts_match(&art, &hidden).unwrap());
        art.partials.pop();
        assert_eq!(
            recover_hidden(&art),
            Err(BusterError::PartialCount { expected: 5, got: 4 })
        );
    }

    #[test]
    fn worker_count_does_not_change_the_result() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let (hidden, art) = chain(&mut rng, 16, BorrowDirection::Tail);
        for w in [1, 2, 7, 64] {
            assert_eq!(recover_hidden_with(&art, w).unwrap().0, hidden);
        }
    }

    #[test]
    fn tampering_names_the_stage() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let (_, art) = chain(&mut rng, 16, BorrowDirection::Tail);
        let mut bad = art.clone();
        bad.partials[1][0] ^= 1;
        assert_eq!(recover_hidden(&bad), Err(BusterError::ArtifactMismatch { stage: 2 }));
        let mut bad = art.clone();
        bad.slave[5] ^= 1;
        assert_eq!(
            recover_hidden(&bad),
            Err(BusterError::ArtifactMismatch { stage: 8 })
        );
        let mut bad = art.clone();
        bad.chunk_bits = 12;
        assert_eq!(recover_hidden(&bad), Err(BusterError::ChunkBits(12)));
        let mut bad = art;
        bad.direction = BorrowDirection::Head;
        assert!(matches!(recover_hidden(&bad), Err(BusterError::ArtifactMismatch { .. })));
    }

    #[test]
    fn batch_collects_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        assert!(bust_batch(&[]).is_empty());
        let sets: Vec<(Block, BorrowArtifacts)> =
            (0..4).map(|_| chain(&mut rng, 16, BorrowDirection::Tail)).collect();
        let mut arts: Vec<BorrowArtifacts> = sets.iter().map(|s| s.1.clone()).collect();
        arts[2].partials[0][0] ^= 0x80;
        let out = bust_batch(&arts);
        for (i, r) in out.iter().enumerate() {
            if i == 2 {
                assert_eq!(*r, Err(BusterError::ArtifactMismatch { stage: 1 }));
            } else {
                assert_eq!(*r, Ok(sets[i].0));
            }
        }
    }
}
