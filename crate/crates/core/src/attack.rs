//! Campaign-level key recovery.
//!
//! Faulty ciphertexts are collected in pools: pool 0 holds faults two
//! rounds before the end (they give K_N), pool 1 faults one round earlier
//! (K_{N-1} once K_N peels the last round). Which ciphertexts actually hold
//! a usable single-byte fault is unknown, so small groupings of them are
//! tried until a candidate key is verified against the clean ciphertext.
//!
//! * Pairwise: every pair `{a, b}` against the clean ciphertext.
//! * Second order: every triple, with one member acting as the reference.
//!   A corruption shared by all faulty runs cancels out between them, so
//!   this still works when no faulty run is free of it.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aes::{
    encrypt_block, expand_key, invert_key_schedule, peel_final_round, Block, KeySchedule, KeySize,
    RoundKey,
};
use crate::dfa::{last_round_key, DfaError, Recovery};
use crate::localize::{localize, Localization};
use crate::record::CiphertextRecord;

const BATCH: usize = 256;

pub const DEFAULT_MAX_GROUPINGS: u64 = 1_000_000;

/// True iff `key` encrypts `pt` to `clean_ct`.
pub fn verify_key(key: &[u8], pt: &Block, clean_ct: &Block) -> bool {
    expand_key(key).is_ok_and(|ks| encrypt_block(pt, &ks) == *clean_ct)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Pairwise,
    SecondOrder,
    /// Pairwise first, second order if that fails.
    Auto,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pairwise" => Ok(Mode::Pairwise),
            "second-order" | "second_order" => Ok(Mode::SecondOrder),
            "auto" => Ok(Mode::Auto),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackConfig {
    pub mode: Mode,
    /// Cap on groupings evaluated over the whole run.
    pub max_groupings: u64,
    /// Keep going after the first verified key to collect statistics.
    pub exhaustive: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            mode: Mode::Auto,
            max_groupings: DEFAULT_MAX_GROUPINGS,
            exhaustive: false,
        }
    }
}

impl AttackConfig {
    pub fn with_mode(mode: Mode) -> Self {
        AttackConfig {
            mode,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttackError {
    #[error("AES-{bits} needs {needed} ciphertext pools, got {got}")]
    PoolCount { bits: u32, needed: usize, got: usize },
}

/// Everything an attack runs on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackData {
    pub size: KeySize,
    pub plaintext: Block,
    pub clean_ct: Block,
    /// `pools[i]` recovers round key N - i.
    pub pools: Vec<Vec<Block>>,
}

impl AttackData {
    pub fn new(
        size: KeySize,
        plaintext: Block,
        clean_ct: Block,
        pools: Vec<Vec<Block>>,
    ) -> Result<Self, AttackError> {
        let needed = size.trailing_keys_needed();
        if pools.len() != needed {
            return Err(AttackError::PoolCount {
                bits: size.bits(),
                needed,
                got: pools.len(),
            });
        }
        Ok(AttackData {
            size,
            plaintext,
            clean_ct,
            pools,
        })
    }

    pub fn aes256(plaintext: Block, clean_ct: Block, r2: Vec<Block>, r3: Vec<Block>) -> Self {
        AttackData {
            size: KeySize::Aes256,
            plaintext,
            clean_ct,
            pools: vec![r2, r3],
        }
    }

    pub fn aes128(plaintext: Block, clean_ct: Block, r2: Vec<Block>) -> Self {
        AttackData {
            size: KeySize::Aes128,
            plaintext,
            clean_ct,
            pools: vec![r2],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStats {
    /// Round whose key this stage recovers.
    pub round: u8,
    pub groupings_attempted: u64,
    /// Groupings that pinned a unique round key.
    pub groupings_succeeded: u64,
    pub groupings_inconsistent: u64,
    pub groupings_insufficient: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoundRoundKey {
    pub round: u8,
    pub key: RoundKey,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackReport {
    #[serde(with = "opt_hex")]
    pub recovered_key: Option<Vec<u8>>,
    pub round_keys: Vec<FoundRoundKey>,
    /// Strategies run, in order.
    pub strategies: Vec<Mode>,
    pub stages: Vec<StageStats>,
    /// Per pool: whether each ciphertext took part in a grouping that led
    /// to the verified key.
    pub usable: Vec<Vec<bool>>,
    /// Distinct round-key candidates that led to no verified key.
    pub rejected_candidates: u64,
    pub budget_exhausted: bool,
    /// First stage that never produced an accepted key.
    pub exhausted_stage: Option<u8>,
    /// Distinct verified keys seen (more than one only in exhaustive mode).
    pub verified_keys: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl AttackReport {
    pub fn total_groupings(&self) -> u64 {
        self.stages.iter().map(|s| s.groupings_attempted).sum()
    }

    pub fn stage(&self, round: u8) -> Option<&StageStats> {
        self.stages.iter().find(|s| s.round == round)
    }
}

mod opt_hex {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(b) => s.serialize_some(&hex::encode(b)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|h| hex::decode(h).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Which ciphertexts one DFA run uses; `reference: None` means the clean
/// ciphertext.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Grouping {
    reference: Option<usize>,
    members: [usize; 2],
}

impl Grouping {
    fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.reference.into_iter().chain(self.members)
    }
}

fn groupings(strategy: Mode, m: usize) -> Vec<Grouping> {
    let mut out = Vec::new();
    match strategy {
        Mode::Pairwise => {
            for i in 0..m {
                for j in i + 1..m {
                    out.push(Grouping {
                        reference: None,
                        members: [i, j],
                    });
                }
            }
        }
        Mode::SecondOrder => {
            for i in 0..m {
                for j in i + 1..m {
                    for k in j + 1..m {
                        for (r, a, b) in [(i, j, k), (j, i, k), (k, i, j)] {
                            out.push(Grouping {
                                reference: Some(r),
                                members: [a, b],
                            });
                        }
                    }
                }
            }
        }
        Mode::Auto => unreachable!("auto is resolved before enumeration"),
    }
    out
}

enum Evaluated {
    Key(RoundKey),
    Inconsistent,
    Insufficient,
}

fn evaluate(g: &Grouping, reference: &Block, pool: &[Block]) -> Evaluated {
    let r = g.reference.map_or(reference, |i| &pool[i]);
    let faulty = g.members.map(|i| pool[i]);
    match last_round_key(r, &faulty) {
        Ok(out) => match out.recovery {
            Recovery::Key(k) => Evaluated::Key(k),
            Recovery::Insufficient(_) => Evaluated::Insufficient,
        },
        Err(DfaError::InconsistentPair { .. }) => Evaluated::Inconsistent,
        Err(_) => Evaluated::Insufficient,
    }
}

struct Search<'a> {
    data: &'a AttackData,
    cfg: &'a AttackConfig,
    spent: u64,
    stats: Vec<StageStats>,
    usable: Vec<Vec<bool>>,
    rejected: u64,
    budget_hit: bool,
    verified: Vec<(Vec<u8>, Vec<RoundKey>)>,
    reached: usize,
}

impl<'a> Search<'a> {
    fn new(data: &'a AttackData, cfg: &'a AttackConfig, spent: u64) -> Self {
        let n = data.size.rounds();
        Search {
            data,
            cfg,
            spent,
            stats: (0..data.pools.len())
                .map(|i| StageStats {
                    round: n - i as u8,
                    ..Default::default()
                })
                .collect(),
            usable: data.pools.iter().map(|p| vec![false; p.len()]).collect(),
            rejected: 0,
            budget_hit: false,
            verified: Vec::new(),
            reached: 0,
        }
    }

    /// Search stage `level` given round keys found so far (K_N first).
    /// Returns true once the search should stop.
    fn stage(&mut self, strategy: Mode, level: usize, found: &mut Vec<RoundKey>) -> bool {
        self.reached = self.reached.max(level);
        let mut reference = self.data.clean_ct;
        let mut pool = self.data.pools[level].clone();
        // each earlier stage strips one round; later stages find the
        // InvMixColumns image of their round key
        for (i, k) in found.iter().enumerate() {
            let peel_key = if i == 0 { *k } else { k.inv_mix_columns() };
            reference = peel_final_round(&reference, &peel_key);
            for c in pool.iter_mut() {
                *c = peel_final_round(c, &peel_key);
            }
        }

        let all = groupings(strategy, pool.len());
        let mut seen: HashMap<RoundKey, bool> = HashMap::new();
        for batch in all.chunks(BATCH) {
            let results: Vec<Evaluated> = batch
                .par_iter()
                .map(|g| evaluate(g, &reference, &pool))
                .collect();
            for (g, res) in batch.iter().zip(results) {
                if self.spent >= self.cfg.max_groupings {
                    self.budget_hit = true;
                    return true;
                }
                self.spent += 1;
                let stats = &mut self.stats[level];
                stats.groupings_attempted += 1;
                let key = match res {
                    Evaluated::Key(k) => {
                        stats.groupings_succeeded += 1;
                        if level > 0 {
                            k.mix_columns()
                        } else {
                            k
                        }
                    }
                    Evaluated::Inconsistent => {
                        stats.groupings_inconsistent += 1;
                        continue;
                    }
                    Evaluated::Insufficient => {
                        stats.groupings_insufficient += 1;
                        continue;
                    }
                };
                let good = match seen.get(&key) {
                    Some(&good) => good,
                    None => {
                        found.push(key);
                        let before = self.verified.len();
                        let stop = self.descend(strategy, level, found);
                        found.pop();
                        let good = self.verified.len() > before;
                        seen.insert(key, good);
                        if good {
                            for i in g.indices() {
                                self.usable[level][i] = true;
                            }
                        } else if !self.budget_hit {
                            self.rejected += 1;
                        }
                        if stop {
                            return true;
                        }
                        continue;
                    }
                };
                if good {
                    for i in g.indices() {
                        self.usable[level][i] = true;
                    }
                }
            }
        }
        false
    }

    fn descend(&mut self, strategy: Mode, level: usize, found: &mut Vec<RoundKey>) -> bool {
        if level + 1 < self.data.pools.len() {
            return self.stage(strategy, level + 1, found);
        }
        let trailing: Vec<RoundKey> = found.iter().rev().copied().collect();
        let key = invert_key_schedule(self.data.size, &trailing).expect("pool count matches size");
        if verify_key(&key, &self.data.plaintext, &self.data.clean_ct) {
            if !self.verified.iter().any(|(k, _)| *k == key) {
                self.verified.push((key, found.clone()));
            }
            !self.cfg.exhaustive
        } else {
            false
        }
    }
}

/// Run the configured strategy (or both, for [`Mode::Auto`]).
pub fn recover(data: &AttackData, cfg: &AttackConfig) -> AttackReport {
    let start = Instant::now();
    let strategies: &[Mode] = match cfg.mode {
        Mode::Auto => &[Mode::Pairwise, Mode::SecondOrder],
        Mode::Pairwise => &[Mode::Pairwise],
        Mode::SecondOrder => &[Mode::SecondOrder],
    };
    let mut report = AttackReport {
        recovered_key: None,
        round_keys: Vec::new(),
        strategies: Vec::new(),
        stages: Vec::new(),
        usable: data.pools.iter().map(|p| vec![false; p.len()]).collect(),
        rejected_candidates: 0,
        budget_exhausted: false,
        exhausted_stage: None,
        verified_keys: 0,
        wall_time: Duration::ZERO,
    };
    let mut spent = 0;
    for &strategy in strategies {
        let mut search = Search::new(data, cfg, spent);
        let mut found = Vec::new();
        if !data.pools.is_empty() {
            search.stage(strategy, 0, &mut found);
        }
        spent = search.spent;
        report.strategies.push(strategy);
        if report.stages.is_empty() {
            report.stages = search.stats.clone();
        } else {
            for (acc, s) in report.stages.iter_mut().zip(&search.stats) {
                acc.groupings_attempted += s.groupings_attempted;
                acc.groupings_succeeded += s.groupings_succeeded;
                acc.groupings_inconsistent += s.groupings_inconsistent;
                acc.groupings_insufficient += s.groupings_insufficient;
            }
        }
        for (acc, u) in report.usable.iter_mut().zip(&search.usable) {
            for (a, b) in acc.iter_mut().zip(u) {
                *a |= *b;
            }
        }
        report.rejected_candidates += search.rejected;
        report.budget_exhausted = search.budget_hit;
        if let Some((key, round_keys)) = search.verified.first() {
            let n = data.size.rounds();
            report.recovered_key = Some(key.clone());
            report.round_keys = round_keys
                .iter()
                .enumerate()
                .map(|(i, k)| FoundRoundKey {
                    round: n - i as u8,
                    key: *k,
                })
                .collect();
            report.verified_keys = search.verified.len();
            report.exhausted_stage = None;
            break;
        }
        report.exhausted_stage = Some(data.size.rounds() - search.reached as u8);
        if search.budget_hit {
            break;
        }
    }
    report.wall_time = start.elapsed();
    report
}

pub fn attack_pairwise(clean_ct: &Block, r2: &[Block], r3: &[Block], pt: &Block) -> AttackReport {
    recover_aes256(clean_ct, r2, r3, pt, Mode::Pairwise)
}

pub fn attack_second_order(
    clean_ct: &Block,
    r2: &[Block],
    r3: &[Block],
    pt: &Block,
) -> AttackReport {
    recover_aes256(clean_ct, r2, r3, pt, Mode::SecondOrder)
}

pub fn recover_aes256(
    clean_ct: &Block,
    r2: &[Block],
    r3: &[Block],
    pt: &Block,
    mode: Mode,
) -> AttackReport {
    let data = AttackData::aes256(*pt, *clean_ct, r2.to_vec(), r3.to_vec());
    recover(&data, &AttackConfig::with_mode(mode))
}

/// Split records into attack pools using the true key, by the round their
/// localized fault enters. Only single-byte faults are kept. For simulation
/// studies; a real attack has to pool by glitch offset instead.
pub fn pools_from_localization(ks: &KeySchedule, records: &[CiphertextRecord]) -> Vec<Vec<Block>> {
    let n = ks.rounds();
    let stages = ks.size().trailing_keys_needed();
    let mut pools = vec![Vec::new(); stages];
    let located: Vec<(usize, Block)> = records
        .par_iter()
        .filter_map(|r| match localize(ks, &r.plaintext, &r.ciphertext) {
            Localization::Fault(rep) if rep.mask.weight_bytes() == 1 => {
                let depth = (n - rep.step.fault_round(n)) as usize;
                (2..2 + stages).contains(&depth).then(|| (depth - 2, r.ciphertext))
            }
            _ => None,
        })
        .collect();
    for (i, ct) in located {
        pools[i].push(ct);
    }
    pools
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aes::{AesState, Op, StepId};
    use crate::fault::{encrypt_with_faults, FaultSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fault_ct(ks: &KeySchedule, pt: &Block, round: u8, pos: usize, v: u8, z: Option<&AesState>) -> Block {
        let step = StepId::new(round, Op::MixColumns);
        let mut f = vec![FaultSpec::byte(step, pos, v)];
        if let Some(z) = z {
            f.push(FaultSpec::fixed(step, *z));
        }
        encrypt_with_faults(pt, ks, &f).unwrap()
    }

    fn random_faults(rng: &mut ChaCha8Rng, ks: &KeySchedule, pt: &Block, round: u8, n: usize) -> Vec<Block> {
        (0..n)
            .map(|_| fault_ct(ks, pt, round, rng.gen_range(0..16), rng.gen_range(1..=255), None))
            .collect()
    }

    #[test]
    fn verify_key_checks_the_triple() {
        let key = [7u8; 32];
        let pt = [1u8; 16];
        let ct = encrypt_block(&pt, &expand_key(&key).unwrap());
        assert!(verify_key(&key, &pt, &ct));
        let mut bad = key;
        bad[31] ^= 1;
        assert!(!verify_key(&bad, &pt, &ct));
        assert!(!verify_key(&[0; 5], &pt, &ct));
    }

    #[test]
    fn grouping_counts() {
        assert_eq!(groupings(Mode::Pairwise, 10).len(), 45);
        assert_eq!(groupings(Mode::SecondOrder, 8).len(), 3 * 56);
        assert!(groupings(Mode::Pairwise, 1).is_empty());
        let g = groupings(Mode::SecondOrder, 3);
        assert_eq!(g[1].reference, Some(1));
        assert_eq!(g[1].members, [0, 2]);
    }

    #[test]
    fn pairwise_recovers_aes256() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let key: [u8; 32] = rng.gen();
        let ks = expand_key(&key).unwrap();
        let pt: Block = rng.gen();
        let clean = encrypt_block(&pt, &ks);
        let r2 = random_faults(&mut rng, &ks, &pt, 12, 10);
        let r3 = random_faults(&mut rng, &ks, &pt, 11, 10);
        let report = attack_pairwise(&clean, &r2, &r3, &pt);
        assert_eq!(report.recovered_key.as_deref(), Some(&key[..]));
        assert_eq!(report.round_keys[0].key, *ks.last());
        assert_eq!(report.round_keys[1].key, *ks.round_key(13));
        assert!(report.stages.iter().all(|s| s.groupings_attempted <= 45));
        assert!(report.usable[0].iter().any(|&u| u));

        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["recovered_key"].as_str().unwrap(), hex::encode(key));
        let back: AttackReport = serde_json::from_value(json).unwrap();
        assert_eq!(back.recovered_key, report.recovered_key);
    }

    #[test]
    fn empty_pool_exhausts_immediately() {
        let pt = [0; 16];
        let report = attack_pairwise(&[1; 16], &[], &[], &pt);
        assert!(report.recovered_key.is_none());
        assert_eq!(report.total_groupings(), 0);
        assert_eq!(report.exhausted_stage, Some(14));
    }

    #[test]
    fn aes128_single_stage() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let key: [u8; 16] = rng.gen();
        let ks = expand_key(&key).unwrap();
        let pt: Block = rng.gen();
        let clean = encrypt_block(&pt, &ks);
        let r2 = random_faults(&mut rng, &ks, &pt, 8, 4);
        let report = recover(&AttackData::aes128(pt, clean, r2), &AttackConfig::with_mode(Mode::Pairwise));
        assert_eq!(report.recovered_key.as_deref(), Some(&key[..]));
        assert_eq!(report.stages.len(), 1);
        assert_eq!(report.stages[0].round, 10);
    }

    #[test]
    fn pool_count_is_checked() {
        assert_eq!(
            AttackData::new(KeySize::Aes192, [0; 16], [0; 16], vec![vec![]]),
            Err(AttackError::PoolCount {
                bits: 192,
                needed: 2,
                got: 1
            })
        );
    }

    #[test]
    fn second_order_with_shared_static_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let key: [u8; 32] = rng.gen();
        let ks = expand_key(&key).unwrap();
        let pt: Block = rng.gen();
        let clean = encrypt_block(&pt, &ks);
        let pool = |round: u8, rng: &mut ChaCha8Rng| {
            // one byte, away from the dynamic positions' columns
            let mut z = AesState::ZERO;
            z[rng.gen_range(4..8)] = rng.gen_range(1..=255);
            (0..6)
                .map(|i| fault_ct(&ks, &pt, round, [3, 9][i % 2], rng.gen_range(1..=255), Some(&z)))
                .collect::<Vec<_>>()
        };
        let r2 = pool(12, &mut rng);
        let r3 = pool(11, &mut rng);
        let pair = attack_pairwise(&clean, &r2, &r3, &pt);
        assert!(pair.recovered_key.is_none());
        let report = attack_second_order(&clean, &r2, &r3, &pt);
        assert_eq!(report.recovered_key.as_deref(), Some(&key[..]));
        assert!(report.stages.iter().all(|s| s.groupings_attempted <= 3 * 20));

        let auto = recover_aes256(&clean, &r2, &r3, &pt, Mode::Auto);
        assert_eq!(auto.strategies, vec![Mode::Pairwise, Mode::SecondOrder]);
        assert_eq!(auto.recovered_key, report.recovered_key);
    }

    #[test]
    fn spurious_candidates_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let key: [u8; 32] = rng.gen();
        let ks = expand_key(&key).unwrap();
        let decoy = expand_key(&rng.gen::<[u8; 32]>()).unwrap();
        let pt: Block = rng.gen();
        let clean = encrypt_block(&pt, &ks);
        // the decoy's own fault triple pins the decoy's K_N, which then fails
        let mut r2: Vec<Block> = (0..3).map(|_| fault_ct(&decoy, &pt, 12, 4, rng.gen_range(1..=255), None)).collect();
        let decoy_clean = encrypt_block(&pt, &decoy);
        r2[0] = decoy_clean;
        r2.extend((0..3).map(|_| fault_ct(&ks, &pt, 12, 6, rng.gen_range(1..=255), None)));
        let r3: Vec<Block> = (0..3).map(|_| fault_ct(&ks, &pt, 11, 1, rng.gen_range(1..=255), None)).collect();
        let report = attack_second_order(&clean, &r2, &r3, &pt);
        assert!(report.rejected_candidates >= 1);
        assert_eq!(report.recovered_key.as_deref(), Some(&key[..]));
    }

    #[test]
    fn budget_stops_the_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let ks = expand_key(&rng.gen::<[u8; 32]>()).unwrap();
        let pt: Block = rng.gen();
        let clean = encrypt_block(&pt, &ks);
        let junk: Vec<Block> = (0..10).map(|_| rng.gen()).collect();
        let data = AttackData::aes256(pt, clean, junk.clone(), junk);
        let cfg = AttackConfig {
            max_groupings: 7,
            ..AttackConfig::with_mode(Mode::Auto)
        };
        let report = recover(&data, &cfg);
        assert!(report.budget_exhausted);
        assert_eq!(report.total_groupings(), 7);
        assert_eq!(report.strategies, vec![Mode::Pairwise]);
    }

    #[test]
    fn exhaustive_mode_counts_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let key: [u8; 16] = rng.gen();
        let ks = expand_key(&key).unwrap();
        let pt: Block = rng.gen();
        let clean = encrypt_block(&pt, &ks);
        let r2 = random_faults(&mut rng, &ks, &pt, 8, 5);
        let data = AttackData::aes128(pt, clean, r2);
        let cfg = AttackConfig {
            exhaustive: true,
            ..AttackConfig::with_mode(Mode::Pairwise)
        };
        let report = recover(&data, &cfg);
        assert_eq!(report.stages[0].groupings_attempted, 10);
        assert_eq!(report.verified_keys, 1);
        assert!(report.usable[0].iter().all(|&u| u));
    }

    #[test]
    fn localization_pools() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let ks = expand_key(&rng.gen::<[u8; 32]>()).unwrap();
        let pt: Block = rng.gen();
        let rec = |ct| CiphertextRecord {
            plaintext: pt,
            ciphertext: ct,
            n: Default::default(),
            m: Default::default(),
            slot: 0,
            faulted: true,
        };
        let records = vec![
            rec(fault_ct(&ks, &pt, 12, 0, 0x10, None)),
            rec(fault_ct(&ks, &pt, 11, 5, 0x01, None)),
            rec(fault_ct(&ks, &pt, 13, 5, 0x01, None)),
            rec(encrypt_block(&pt, &ks)),
        ];
        let pools = pools_from_localization(&ks, &records);
        assert_eq!(pools, vec![vec![records[0].ciphertext], vec![records[1].ciphertext]]);
    }
}
