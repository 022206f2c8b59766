//! Simulated faulty AES engine.
//!
//! Faults are XOR masks applied to the state entering a given encryption
//! step. Campaign generation and the key-slot engine emulator build on the
//! same injection primitive.

mod campaign;
mod engine;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aes::{decrypt_with, encrypt_with, AesError, AesState, Block, KeySchedule, StepId};

pub use campaign::{
    generate_campaign, BitCount, CampaignConfig, MaskShape, OffsetBehavior, Outcome, StaticFault,
    DEFAULT_BIT_WEIGHTS,
};
pub use engine::{
    run_borrow_chain, BigmacEngine, BorrowArtifacts, BorrowDirection, Destination, EngineCommand,
    EngineOp, KeySlot, KeySource,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultRole {
    /// Corruption shared by every faulty run of a campaign.
    Static,
    /// Per-run corruption exploited by the DFA equations.
    Dynamic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaultSpec {
    /// The fault hits the state entering this step.
    pub step: StepId,
    pub mask: AesState,
    pub role: FaultRole,
}

impl FaultSpec {
    pub fn dynamic(step: StepId, mask: AesState) -> Self {
        FaultSpec {
            step,
            mask,
            role: FaultRole::Dynamic,
        }
    }

    pub fn fixed(step: StepId, mask: AesState) -> Self {
        FaultSpec {
            step,
            mask,
            role: FaultRole::Static,
        }
    }

    /// Single-byte dynamic fault at flat position `pos`.
    pub fn byte(step: StepId, pos: usize, value: u8) -> Self {
        let mut mask = AesState::ZERO;
        mask[pos] = value;
        FaultSpec::dynamic(step, mask)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FaultError {
    #[error(transparent)]
    Aes(#[from] AesError),
    #[error("fault at {0} has an all-zero mask")]
    ZeroMask(StepId),
    #[error("campaign has no fault distribution: {0}")]
    EmptyDistribution(String),
    #[error("invalid mask shape: {0}")]
    InvalidShape(String),
}

fn validate(faults: &[FaultSpec], rounds: u8) -> Result<(), FaultError> {
    for f in faults {
        f.step.validate(rounds)?;
        if f.mask.is_zero() {
            return Err(FaultError::ZeroMask(f.step));
        }
    }
    Ok(())
}

/// Forward cipher with every fault XORed into the state right before its
/// step. An empty list reproduces plain encryption.
pub fn encrypt_with_faults(
    pt: &Block,
    ks: &KeySchedule,
    faults: &[FaultSpec],
) -> Result<Block, FaultError> {
    validate(faults, ks.rounds())?;
    Ok(encrypt_with(
        pt,
        ks,
        |step, state| {
            for f in faults.iter().filter(|f| f.step == step) {
                *state ^= f.mask;
            }
        },
        |_, _| {},
    ))
}

/// Inverse cipher with each fault XORed into the state aligned with the
/// output of its step, just before that step is undone.
pub fn decrypt_with_faults(
    ct: &Block,
    ks: &KeySchedule,
    faults: &[FaultSpec],
) -> Result<Block, FaultError> {
    validate(faults, ks.rounds())?;
    Ok(decrypt_with(ct, ks, |step, state| {
        for f in faults.iter().filter(|f| f.step == step) {
            *state ^= f.mask;
        }
    }))
}
