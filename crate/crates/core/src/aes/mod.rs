//! Bit-exact AES-128/192/256 with per-step state tracing.
//!
//! The state is stored column-major as in FIPS-197: flat byte `i` sits at
//! row `i % 4`, column `i / 4`. Every block, round key and fault mask in this
//! crate uses that layout, and hex strings are the flat bytes in order.

mod cipher;
mod fast;
mod schedule;
mod tables;

use std::fmt;
use std::ops::{BitXor, BitXorAssign, Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use cipher::{
    decrypt_block, decrypt_trace, decrypt_with, encrypt_block, encrypt_trace, encrypt_with,
    peel_final_round, Trace,
};
pub use fast::FastCipher;
pub use schedule::{expand_key, invert_key_schedule, KeySchedule};
pub use tables::{INV_SBOX, SBOX};

use crate::gf::gf_mul;

pub const BLOCK_LEN: usize = 16;

/// Raw 16-byte block.
pub type Block = [u8; BLOCK_LEN];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AesError {
    #[error("invalid key length {0} bytes (expected 16, 24 or 32)")]
    InvalidKeyLength(usize),
    #[error("expected a 16-byte block, got {0} bytes")]
    InvalidBlockLength(usize),
    #[error("invalid hex: {0}")]
    InvalidHex(String),
    #[error("{size} schedule inversion needs at least {needed} trailing round keys, got {got}")]
    TooFewRoundKeys {
        size: KeySize,
        needed: usize,
        got: usize,
    },
    #[error("step {0} does not exist in a {1}-round cipher")]
    InvalidStep(StepId, u8),
}

/// Decode exactly 16 bytes of hex.
pub fn parse_block(s: &str) -> Result<Block, AesError> {
    let bytes = hex::decode(s.trim()).map_err(|e| AesError::InvalidHex(e.to_string()))?;
    bytes
        .as_slice()
        .try_into()
        .map_err(|_| AesError::InvalidBlockLength(bytes.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KeySize {
    #[serde(rename = "128")]
    Aes128,
    #[serde(rename = "192")]
    Aes192,
    #[serde(rename = "256")]
    Aes256,
}

impl KeySize {
    pub fn from_key_len(len: usize) -> Result<Self, AesError> {
        match len {
            16 => Ok(KeySize::Aes128),
            24 => Ok(KeySize::Aes192),
            32 => Ok(KeySize::Aes256),
            n => Err(AesError::InvalidKeyLength(n)),
        }
    }

    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            128 => Some(KeySize::Aes128),
            192 => Some(KeySize::Aes192),
            256 => Some(KeySize::Aes256),
            _ => None,
        }
    }

    pub const fn bits(self) -> u32 {
        match self {
            KeySize::Aes128 => 128,
            KeySize::Aes192 => 192,
            KeySize::Aes256 => 256,
        }
    }

    pub const fn key_len(self) -> usize {
        self.bits() as usize / 8
    }

    /// Key length in 32-bit words.
    pub const fn nk(self) -> usize {
        self.key_len() / 4
    }

    /// Number of cipher rounds N.
    pub const fn rounds(self) -> u8 {
        match self {
            KeySize::Aes128 => 10,
            KeySize::Aes192 => 12,
            KeySize::Aes256 => 14,
        }
    }

    /// Trailing round keys needed to invert the schedule.
    pub const fn trailing_keys_needed(self) -> usize {
        self.nk().div_ceil(4)
    }
}

impl fmt::Display for KeySize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AES-{}", self.bits())
    }
}

macro_rules! hex_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&hex::encode(self.0))
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

/// The 4x4 AES state.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct AesState(pub Block);

impl AesState {
    pub const ZERO: AesState = AesState([0; 16]);

    pub const fn flat_index(row: usize, col: usize) -> usize {
        row + 4 * col
    }

    pub const fn position(index: usize) -> (usize, usize) {
        (index % 4, index / 4)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, AesError> {
        bytes
            .try_into()
            .map(AesState)
            .map_err(|_| AesError::InvalidBlockLength(bytes.len()))
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.0[Self::flat_index(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.0[Self::flat_index(row, col)] = value;
    }

    pub fn column(&self, col: usize) -> [u8; 4] {
        [self.0[4 * col], self.0[4 * col + 1], self.0[4 * col + 2], self.0[4 * col + 3]]
    }

    pub fn bytes(&self) -> &Block {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// Number of set bits.
    pub fn popcount(&self) -> u32 {
        self.0.iter().map(|b| b.count_ones()).sum()
    }

    pub fn hamming(&self, other: &AesState) -> u32 {
        (*self ^ *other).popcount()
    }

    /// Number of nonzero bytes.
    pub fn weight_bytes(&self) -> usize {
        self.0.iter().filter(|&&b| b != 0).count()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn sub_bytes(&mut self) {
        for b in self.0.iter_mut() {
            *b = SBOX[*b as usize];
        }
    }

    pub fn inv_sub_bytes(&mut self) {
        for b in self.0.iter_mut() {
            *b = INV_SBOX[*b as usize];
        }
    }

    /// Row `r` rotates left by `r` positions.
    pub fn shift_rows(&mut self) {
        let old = self.0;
        for col in 0..4 {
            for row in 0..4 {
                self.0[Self::flat_index(row, col)] = old[Self::flat_index(row, (col + row) % 4)];
            }
        }
    }

    pub fn inv_shift_rows(&mut self) {
        let old = self.0;
        for col in 0..4 {
            for row in 0..4 {
                self.0[Self::flat_index(row, (col + row) % 4)] = old[Self::flat_index(row, col)];
            }
        }
    }

    pub fn mix_columns(&mut self) {
        for col in 0..4 {
            let c = self.column(col);
            for row in 0..4 {
                self.0[4 * col + row] = (0..4).fold(0, |acc, k| acc ^ gf_mul(MIX[row][k], c[k]));
            }
        }
    }

    pub fn inv_mix_columns(&mut self) {
        for col in 0..4 {
            let c = self.column(col);
            for row in 0..4 {
                self.0[4 * col + row] =
                    (0..4).fold(0, |acc, k| acc ^ gf_mul(INV_MIX[row][k], c[k]));
            }
        }
    }

    pub fn add_round_key(&mut self, key: &RoundKey) {
        *self ^= AesState(key.0);
    }
}

/// MixColumns matrix; column `r` is the output pattern of a difference in row `r`.
pub const MIX: [[u8; 4]; 4] = [[2, 3, 1, 1], [1, 2, 3, 1], [1, 1, 2, 3], [3, 1, 1, 2]];
pub const INV_MIX: [[u8; 4]; 4] = [
    [0x0e, 0x0b, 0x0d, 0x09],
    [0x09, 0x0e, 0x0b, 0x0d],
    [0x0d, 0x09, 0x0e, 0x0b],
    [0x0b, 0x0d, 0x09, 0x0e],
];

impl BitXor for AesState {
    type Output = AesState;
    fn bitxor(mut self, rhs: AesState) -> AesState {
        self ^= rhs;
        self
    }
}

impl BitXorAssign for AesState {
    fn bitxor_assign(&mut self, rhs: AesState) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a ^= b;
        }
    }
}

impl Index<usize> for AesState {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

impl IndexMut<usize> for AesState {
    fn index_mut(&mut self, i: usize) -> &mut u8 {
        &mut self.0[i]
    }
}

impl From<Block> for AesState {
    fn from(b: Block) -> Self {
        AesState(b)
    }
}

impl fmt::Display for AesState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for AesState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AesState({})", self.to_hex())
    }
}

impl FromStr for AesState {
    type Err = AesError;
    fn from_str(s: &str) -> Result<Self, AesError> {
        parse_block(s).map(AesState)
    }
}

/// One 16-byte round key, same layout as [`AesState`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct RoundKey(pub Block);

impl RoundKey {
    pub fn bytes(&self) -> &Block {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn mix_columns(&self) -> RoundKey {
        let mut s = AesState(self.0);
        s.mix_columns();
        RoundKey(s.0)
    }

    pub fn inv_mix_columns(&self) -> RoundKey {
        let mut s = AesState(self.0);
        s.inv_mix_columns();
        RoundKey(s.0)
    }
}

impl fmt::Display for RoundKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for RoundKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RoundKey({})", self.to_hex())
    }
}

impl FromStr for RoundKey {
    type Err = AesError;
    fn from_str(s: &str) -> Result<Self, AesError> {
        parse_block(s).map(RoundKey)
    }
}

hex_serde!(RoundKey);
hex_serde!(AesState);

/// Operations of an encryption round, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    AddRoundKeyInitial,
    SubBytes,
    ShiftRows,
    MixColumns,
    AddRoundKey,
}

impl Op {
    pub const ALL: [Op; 5] = [
        Op::AddRoundKeyInitial,
        Op::SubBytes,
        Op::ShiftRows,
        Op::MixColumns,
        Op::AddRoundKey,
    ];

    /// Position within an encryption round: AddRoundKey 0, SubBytes 1,
    /// ShiftRows 2, MixColumns 3.
    pub const fn round_position(self) -> usize {
        match self {
            Op::AddRoundKeyInitial | Op::AddRoundKey => 0,
            Op::SubBytes => 1,
            Op::ShiftRows => 2,
            Op::MixColumns => 3,
        }
    }

    /// Whether a state difference passes through this operation unchanged
    /// up to a byte permutation.
    pub const fn preserves_difference_weight(self) -> bool {
        matches!(
            self,
            Op::ShiftRows | Op::AddRoundKey | Op::AddRoundKeyInitial
        )
    }

    pub const fn name(self) -> &'static str {
        match self {
            Op::AddRoundKeyInitial => "AddRoundKeyInitial",
            Op::SubBytes => "SubBytes",
            Op::ShiftRows => "ShiftRows",
            Op::MixColumns => "MixColumns",
            Op::AddRoundKey => "AddRoundKey",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Op {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.trim().to_ascii_lowercase();
        Op::ALL
            .into_iter()
            .find(|op| op.name().to_ascii_lowercase() == lower)
            .or(match lower.as_str() {
                "ark" | "addkey" => Some(Op::AddRoundKey),
                "sb" => Some(Op::SubBytes),
                "sr" => Some(Op::ShiftRows),
                "mc" | "mixcol" => Some(Op::MixColumns),
                _ => None,
            })
            .ok_or_else(|| format!("unknown operation {s:?}"))
    }
}

/// A (round, operation) position in the encryption dataflow.
///
/// Round 0 holds only the initial AddRoundKey; the final round N has no
/// MixColumns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StepId {
    pub round: u8,
    pub op: Op,
}

impl StepId {
    pub const INITIAL: StepId = StepId {
        round: 0,
        op: Op::AddRoundKeyInitial,
    };

    pub const fn new(round: u8, op: Op) -> Self {
        StepId { round, op }
    }

    pub fn is_valid(&self, rounds: u8) -> bool {
        match self.op {
            Op::AddRoundKeyInitial => self.round == 0,
            Op::MixColumns => (1..rounds).contains(&self.round),
            _ => (1..=rounds).contains(&self.round),
        }
    }

    pub fn validate(&self, rounds: u8) -> Result<(), AesError> {
        if self.is_valid(rounds) {
            Ok(())
        } else {
            Err(AesError::InvalidStep(*self, rounds))
        }
    }

    /// Every step of an `rounds`-round encryption in execution order.
    pub fn all(rounds: u8) -> Vec<StepId> {
        let mut steps = Vec::with_capacity(4 * rounds as usize);
        steps.push(StepId::INITIAL);
        for round in 1..=rounds {
            for op in [Op::SubBytes, Op::ShiftRows, Op::MixColumns, Op::AddRoundKey] {
                if op == Op::MixColumns && round == rounds {
                    continue;
                }
                steps.push(StepId::new(round, op));
            }
        }
        steps
    }

    /// The round whose MixColumns input a fault entering this step reaches
    /// first; faults in the final round map to N.
    pub fn fault_round(&self, rounds: u8) -> u8 {
        match self.op {
            Op::AddRoundKeyInitial => 1,
            Op::AddRoundKey if self.round < rounds => self.round + 1,
            _ => self.round,
        }
    }
}

impl fmt::Display for StepId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.round, self.op)
    }
}

impl FromStr for StepId {
    type Err = String;
    /// Parses `round:Op`, e.g. `12:MixColumns`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (round, op) = s
            .split_once(':')
            .ok_or_else(|| format!("expected round:operation, got {s:?}"))?;
        let round: u8 = round
            .trim()
            .trim_start_matches(['r', 'R'])
            .parse()
            .map_err(|_| format!("bad round in {s:?}"))?;
        let mut op: Op = op.parse()?;
        if round == 0 && op == Op::AddRoundKey {
            op = Op::AddRoundKeyInitial;
        }
        Ok(StepId::new(round, op))
    }
}
