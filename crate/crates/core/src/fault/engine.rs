//! Emulation of a key-slot AES engine that leaks its last output block
//! through short inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{decrypt_with_faults, encrypt_with_faults, FaultError, FaultSpec};
use crate::aes::{expand_key, AesError, Block, KeySize};
use crate::record::{hex_block, hex_bytes};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EngineOp {
    Encrypt,
    Decrypt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KeySource {
    Slot(u32),
    Raw(Vec<u8>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Destination {
    Memory,
    Slot(u32),
}

/// Which end of a short block is filled from the previous output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BorrowDirection {
    /// Input bytes at the head, borrowed bytes at the tail.
    #[default]
    Tail,
    /// Borrowed bytes at the head, input bytes at the tail.
    Head,
}

impl BorrowDirection {
    /// The block an input of `input.len() < 16` bytes is completed to.
    pub fn complete(self, input: &[u8], last_output: &Block) -> Block {
        let l = input.len();
        let mut block = *last_output;
        match self {
            BorrowDirection::Tail => block[..l].copy_from_slice(input),
            BorrowDirection::Head => block[16 - l..].copy_from_slice(input),
        }
        block
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeySlot {
    pub key: [u8; 32],
    /// Master slots may only write into other slots.
    pub master: bool,
    pub enabled: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineCommand {
    pub op: EngineOp,
    pub key: KeySource,
    pub key_size: KeySize,
    /// 1..=16 bytes.
    pub input: Vec<u8>,
    pub dest: Destination,
    pub faults: Vec<FaultSpec>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("key slot {0:#x} does not exist")]
    NoSuchSlot(u32),
    #[error("key slot {0:#x} is disabled")]
    SlotDisabled(u32),
    #[error("key slot {0:#x} is a master slot and cannot write to memory")]
    PermissionDenied(u32),
    #[error("input must be 1..=16 bytes, got {0}")]
    InputLength(usize),
    #[error("raw key has {got} bytes, {size} needs {}", size.key_len())]
    KeyLength { size: KeySize, got: usize },
    #[error(transparent)]
    Fault(#[from] FaultError),
}

impl From<AesError> for EngineError {
    fn from(e: AesError) -> Self {
        EngineError::Fault(FaultError::Aes(e))
    }
}

/// Single-block engine with numbered key slots and a persistent output
/// register.
///
/// Commands must be issued one at a time; the engine is `Send` but holds
/// mutable state.
#[derive(Clone, Debug)]
pub struct BigmacEngine {
    slots: BTreeMap<u32, KeySlot>,
    last_output: Block,
    borrow: BorrowDirection,
}

impl BigmacEngine {
    pub fn new(borrow: BorrowDirection) -> Self {
        BigmacEngine {
            slots: BTreeMap::new(),
            last_output: [0; 16],
            borrow,
        }
    }

    pub fn add_slot(&mut self, id: u32, key: [u8; 32], master: bool) {
        self.slots.insert(
            id,
            KeySlot {
                key,
                master,
                enabled: true,
            },
        );
    }

    pub fn disable_slot(&mut self, id: u32) {
        if let Some(s) = self.slots.get_mut(&id) {
            s.enabled = false;
        }
    }

    pub fn slot(&self, id: u32) -> Option<&KeySlot> {
        self.slots.get(&id)
    }

    pub fn last_output(&self) -> &Block {
        &self.last_output
    }

    pub fn borrow_direction(&self) -> BorrowDirection {
        self.borrow
    }

    /// Run one command. Returns the output block only for memory
    /// destinations.
    pub fn execute(&mut self, cmd: &EngineCommand) -> Result<Option<Block>, EngineError> {
        if cmd.input.is_empty() || cmd.input.len() > 16 {
            return Err(EngineError::InputLength(cmd.input.len()));
        }
        let key: Vec<u8> = match &cmd.key {
            KeySource::Slot(id) => {
                let slot = self.slots.get(id).ok_or(EngineError::NoSuchSlot(*id))?;
                if !slot.enabled {
                    return Err(EngineError::SlotDisabled(*id));
                }
                if slot.master && cmd.dest == Destination::Memory {
                    return Err(EngineError::PermissionDenied(*id));
                }
                slot.key[..cmd.key_size.key_len()].to_vec()
            }
            KeySource::Raw(k) => {
                if k.len() != cmd.key_size.key_len() {
                    return Err(EngineError::KeyLength {
                        size: cmd.key_size,
                        got: k.len(),
                    });
                }
                k.clone()
            }
        };
        let ks = expand_key(&key)?;
        let block = self.borrow.complete(&cmd.input, &self.last_output);
        let output = match cmd.op {
            EngineOp::Encrypt => encrypt_with_faults(&block, &ks, &cmd.faults)?,
            EngineOp::Decrypt => decrypt_with_faults(&block, &ks, &cmd.faults)?,
        };
        self.last_output = output;
        match cmd.dest {
            Destination::Memory => Ok(Some(output)),
            Destination::Slot(id) => {
                let mut key = [0u8; 32];
                key[..16].copy_from_slice(&output);
                let slot = self.slots.entry(id).or_insert(KeySlot {
                    key,
                    master: false,
                    enabled: true,
                });
                slot.key = key;
                Ok(None)
            }
        }
    }
}

/// Everything observable after extracting a hidden output block through
/// the borrow leak.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BorrowArtifacts {
    #[serde(with = "hex_bytes")]
    pub fixed_key: Vec<u8>,
    pub chunk_bits: u32,
    #[serde(default)]
    pub direction: BorrowDirection,
    /// Fixed-key encryptions of short zero inputs, most zeros first.
    #[serde(with = "hex_list")]
    pub partials: Vec<Block>,
    /// AES-256 encryption of the zero block under the slot written by the
    /// hidden operation.
    #[serde(with = "hex_block")]
    pub slave: Block,
}

impl BorrowArtifacts {
    pub fn chunk_bytes(&self) -> usize {
        self.chunk_bits as usize / 8
    }

    /// Zero-prefix lengths of the partial inputs, in `partials` order.
    pub fn partial_lengths(chunk_bytes: usize) -> Vec<usize> {
        (1..)
            .map(|k| 16i64 - (k * chunk_bytes) as i64)
            .take_while(|&l| l >= 1)
            .map(|l| l as usize)
            .collect()
    }
}

mod hex_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Block], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(hex::encode))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Block>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| crate::aes::parse_block(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Extract the output of a master-slot decryption through the borrow leak.
///
/// 1. Decrypt `master_input` with the master slot into `slave_slot`.
/// 2. For zero inputs of growing length, encrypt with `fixed_key` to memory
///    and decrypt the result again, which puts the zeros plus the still
///    hidden bytes back into the output register.
/// 3. Encrypt the zero block with the slave slot.
///
/// With 4-byte chunks this is the 4/8/12-byte sequence giving C3, C2, C1.
pub fn run_borrow_chain(
    engine: &mut BigmacEngine,
    master_slot: u32,
    slave_slot: u32,
    master_input: &Block,
    fixed_key: &[u8; 16],
    chunk_bits: u32,
    faults: &[FaultSpec],
) -> Result<BorrowArtifacts, EngineError> {
    engine.execute(&EngineCommand {
        op: EngineOp::Decrypt,
        key: KeySource::Slot(master_slot),
        key_size: KeySize::Aes256,
        input: master_input.to_vec(),
        dest: Destination::Slot(slave_slot),
        faults: faults.to_vec(),
    })?;

    let mut partials = Vec::new();
    for len in BorrowArtifacts::partial_lengths(chunk_bits as usize / 8).into_iter().rev() {
        let c = engine
            .execute(&EngineCommand {
                op: EngineOp::Encrypt,
                key: KeySource::Raw(fixed_key.to_vec()),
                key_size: KeySize::Aes128,
                input: vec![0; len],
                dest: Destination::Memory,
                faults: vec![],
            })?
            .expect("memory destination returns output");
        engine.execute(&EngineCommand {
            op: EngineOp::Decrypt,
            key: KeySource::Raw(fixed_key.to_vec()),
            key_size: KeySize::Aes128,
            input: c.to_vec(),
            dest: Destination::Memory,
            faults: vec![],
        })?;
        partials.push(c);
    }
    partials.reverse();

    let slave = engine
        .execute(&EngineCommand {
            op: EngineOp::Encrypt,
            key: KeySource::Slot(slave_slot),
            key_size: KeySize::Aes256,
            input: vec![0; 16],
            dest: Destination::Memory,
            faults: vec![],
        })?
        .expect("memory destination returns output");

    Ok(BorrowArtifacts {
        fixed_key: fixed_key.to_vec(),
        chunk_bits,
        direction: engine.borrow_direction(),
        partials,
        slave,
    })
}
