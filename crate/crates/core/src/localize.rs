//! Locate where a fault entered, given the key.
//!
//! The clean plaintext is encrypted forward and the faulty output is
//! decrypted backward; both traces are aligned on encryption steps. The
//! corruption is attributed to the state boundary where the two disagree in
//! the fewest bits, and reported as the operation that boundary feeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aes::{decrypt_trace, encrypt_trace, AesState, Block, KeySchedule, StepId};
use crate::record::CiphertextRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalizationReport {
    /// The operation whose input was corrupted.
    pub step: StepId,
    /// Corrupted bits of that input.
    pub mask: AesState,
    pub hamming: u32,
    /// Another, unrelated boundary had the same bit count.
    pub ambiguous: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Localization {
    NoFault,
    Fault(LocalizationReport),
}

impl Localization {
    pub fn report(&self) -> Option<&LocalizationReport> {
        match self {
            Localization::NoFault => None,
            Localization::Fault(r) => Some(r),
        }
    }
}

/// Minimum-Hamming localization of the fault behind `faulty_ct`.
///
/// Boundaries separated only by ShiftRows or AddRoundKey carry the same
/// difference up to a permutation, so they always tie; among all minimal
/// boundaries the latest one is reported. `ambiguous` is set when the tie
/// includes a boundary that is not linked to the chosen one that way.
pub fn localize(ks: &KeySchedule, pt: &Block, faulty_ct: &Block) -> Localization {
    let (clean_ct, forward) = encrypt_trace(pt, ks);
    if clean_ct == *faulty_ct {
        return Localization::NoFault;
    }
    let (faulty_pt, backward) = decrypt_trace(faulty_ct, ks);

    // boundary j is the input of step j: the plaintext for j = 0, otherwise
    // the output of step j - 1
    let steps: Vec<StepId> = forward.iter().map(|(s, _)| *s).collect();
    let mut diffs = Vec::with_capacity(steps.len());
    diffs.push(AesState(*pt) ^ AesState(faulty_pt));
    for ((_, a), (_, b)) in forward.iter().zip(backward.iter()).take(steps.len() - 1) {
        diffs.push(*a ^ *b);
    }

    let weights: Vec<u32> = diffs.iter().map(AesState::popcount).collect();
    let min = *weights.iter().min().expect("trace is never empty");
    let chosen = weights.iter().rposition(|&w| w == min).expect("minimum exists");
    let ambiguous = weights[..chosen]
        .iter()
        .enumerate()
        .any(|(j, &w)| w == min && !steps[j..chosen].iter().all(|s| s.op.preserves_difference_weight()));

    Localization::Fault(LocalizationReport {
        step: steps[chosen],
        mask: diffs[chosen],
        hamming: min,
        ambiguous,
    })
}

/// [`localize`] over many records, in input order.
pub fn localize_batch(
    ks: &KeySchedule,
    records: &[CiphertextRecord],
) -> Vec<(CiphertextRecord, Localization)> {
    records
        .par_iter()
        .map(|r| (r.clone(), localize(ks, &r.plaintext, &r.ciphertext)))
        .collect()
}
