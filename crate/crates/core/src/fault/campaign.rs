use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{encrypt_with_faults, FaultError, FaultSpec};
use crate::aes::{encrypt_block, expand_key, AesState, Block, StepId};
use crate::record::{CiphertextRecord, GlitchTime};

/// Corrupted-bit counts and their weights when a shape does not pin the
/// count: mostly single bits, tailing off to five.
pub const DEFAULT_BIT_WEIGHTS: [(u32, f64); 5] = [(1, 0.55), (2, 0.2), (3, 0.12), (4, 0.08), (5, 0.05)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BitCount {
    Exactly(u32),
    /// Drawn from [`DEFAULT_BIT_WEIGHTS`].
    Default,
}

impl BitCount {
    fn draw(&self, rng: &mut ChaCha8Rng) -> u32 {
        match *self {
            BitCount::Exactly(n) => n,
            BitCount::Default => {
                let dist = WeightedIndex::new(DEFAULT_BIT_WEIGHTS.iter().map(|w| w.1))
                    .expect("static weights are valid");
                DEFAULT_BIT_WEIGHTS[dist.sample(rng)].0
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MaskShape {
    /// All flipped bits inside one byte, chosen uniformly or from `positions`.
    SingleByte {
        bits: BitCount,
        positions: Option<Vec<usize>>,
    },
    /// Flipped bits anywhere in the 128-bit state.
    Scattered { bits: BitCount },
    /// `bytes` random nonzero bytes, each in a different column.
    MultiColumn { bytes: usize },
}

impl MaskShape {
    pub fn single_bit() -> Self {
        MaskShape::SingleByte {
            bits: BitCount::Exactly(1),
            positions: None,
        }
    }

    pub fn any_byte() -> Self {
        MaskShape::SingleByte {
            bits: BitCount::Default,
            positions: None,
        }
    }

    fn validate(&self) -> Result<(), FaultError> {
        let bad = |m: &str| Err(FaultError::InvalidShape(m.to_string()));
        match self {
            MaskShape::SingleByte { bits, positions } => {
                if let BitCount::Exactly(n) = bits {
                    if !(1..=8).contains(n) {
                        return bad("single-byte masks flip 1..=8 bits");
                    }
                }
                if let Some(p) = positions {
                    if p.is_empty() || p.iter().any(|&i| i >= 16) {
                        return bad("byte positions must be a non-empty subset of 0..16");
                    }
                }
                Ok(())
            }
            MaskShape::Scattered { bits } => match bits {
                BitCount::Exactly(n) if !(1..=128).contains(n) => bad("bit count out of range"),
                _ => Ok(()),
            },
            MaskShape::MultiColumn { bytes } if !(2..=4).contains(bytes) => {
                bad("multi-column masks span 2..=4 columns")
            }
            MaskShape::MultiColumn { .. } => Ok(()),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> AesState {
        let mut mask = AesState::ZERO;
        match self {
            MaskShape::SingleByte { bits, positions } => {
                let pos = match positions {
                    Some(p) => p[rng.gen_range(0..p.len())],
                    None => rng.gen_range(0..16),
                };
                let n = bits.draw(rng) as usize;
                for bit in sample(rng, 8, n) {
                    mask[pos] |= 1 << bit;
                }
            }
            MaskShape::Scattered { bits } => {
                let n = bits.draw(rng) as usize;
                for bit in sample(rng, 128, n) {
                    mask[bit / 8] |= 1 << (bit % 8);
                }
            }
            MaskShape::MultiColumn { bytes } => {
                for col in sample(rng, 4, *bytes) {
                    mask[4 * col + rng.gen_range(0..4)] = rng.gen_range(1..=255);
                }
            }
        }
        mask
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    /// The glitch had no effect.
    Clean,
    Fault { step: StepId, shape: MaskShape },
}

/// What a glitch at offset `n` with width `m` does, as weighted outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetBehavior {
    pub n: GlitchTime,
    pub m: GlitchTime,
    pub outcomes: Vec<(f64, Outcome)>,
}

impl OffsetBehavior {
    /// Every glitch at this offset faults `step` with the given shape.
    pub fn pinned(n: GlitchTime, step: StepId, shape: MaskShape) -> Self {
        OffsetBehavior {
            n,
            m: GlitchTime::from_quarters(4),
            outcomes: vec![(1.0, Outcome::Fault { step, shape })],
        }
    }
}

/// A corruption repeated in every faulted run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticFault {
    pub mask: AesState,
    /// Where the shared mask lands; `None` means the step of each run's
    /// dynamic fault.
    pub step: Option<StepId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub key: Vec<u8>,
    pub slot: u32,
    /// Fixed for the whole campaign.
    pub plaintext: Block,
    /// Glitched runs, assigned to offsets round-robin.
    pub samples: usize,
    pub offsets: Vec<OffsetBehavior>,
    pub static_fault: Option<StaticFault>,
    pub seed: u64,
}

/// Simulate a glitch campaign.
///
/// The first record is an unglitched reference run (n = m = 0). Output is a
/// pure function of the config.
pub fn generate_campaign(cfg: &CampaignConfig) -> Result<Vec<CiphertextRecord>, FaultError> {
    let ks = expand_key(&cfg.key)?;
    if cfg.offsets.is_empty() {
        return Err(FaultError::EmptyDistribution("no offsets configured".into()));
    }
    let mut pickers = Vec::with_capacity(cfg.offsets.len());
    for b in &cfg.offsets {
        let weights: Vec<f64> = b.outcomes.iter().map(|o| o.0).collect();
        let picker = WeightedIndex::new(&weights).map_err(|e| {
            FaultError::EmptyDistribution(format!("offset {}: {e}", b.n))
        })?;
        for (_, o) in &b.outcomes {
            if let Outcome::Fault { step, shape } = o {
                step.validate(ks.rounds())?;
                shape.validate()?;
            }
        }
        pickers.push(picker);
    }
    if let Some(StaticFault {
        mask,
        step: Some(step),
    }) = &cfg.static_fault
    {
        step.validate(ks.rounds())?;
        if mask.is_zero() {
            return Err(FaultError::ZeroMask(*step));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let clean = encrypt_block(&cfg.plaintext, &ks);
    let record = |ciphertext, n, m, faulted| CiphertextRecord {
        plaintext: cfg.plaintext,
        ciphertext,
        n,
        m,
        slot: cfg.slot,
        faulted,
    };
    let mut records = Vec::with_capacity(cfg.samples + 1);
    records.push(record(clean, GlitchTime::ZERO, GlitchTime::ZERO, false));

    for i in 0..cfg.samples {
        let behavior = &cfg.offsets[i % cfg.offsets.len()];
        let outcome = &behavior.outcomes[pickers[i % cfg.offsets.len()].sample(&mut rng)].1;
        match outcome {
            Outcome::Clean => records.push(record(clean, behavior.n, behavior.m, false)),
            Outcome::Fault { step, shape } => {
                let mut faults = vec![FaultSpec::dynamic(*step, shape.draw(&mut rng))];
                if let Some(s) = &cfg.static_fault {
                    if !s.mask.is_zero() {
                        faults.push(FaultSpec::fixed(s.step.unwrap_or(*step), s.mask));
                    }
                }
                let ct = encrypt_with_faults(&cfg.plaintext, &ks, &faults)?;
                records.push(record(ct, behavior.n, behavior.m, true));
            }
        }
    }
    Ok(records)
}
