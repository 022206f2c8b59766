//! Differential fault analysis of the last AES rounds.
//!
//! A single-byte difference entering MixColumns of round N-1 reaches the
//! last SubBytes as `coeff * e` on one column, with `coeff` a column of the
//! MixColumns matrix. A fault one round earlier (round N-2) does the same
//! independently in all four columns. Each column surfaces in the
//! ciphertext as a [`DiagonalGroup`], and every ciphertext pair constrains
//! the four last-round key bytes of each group:
//!
//! `InvSBox(c ^ k) ^ InvSBox(c' ^ k) = coeff * e`
//!
//! Candidates are kept as whole 4-byte tuples so that a byte only survives
//! together with the other three bytes of a consistent `(e, row)` guess.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aes::{peel_final_round, Block, RoundKey, INV_SBOX, MIX};
use crate::gf::gf_mul;

/// Field and S-box the column equations live in.
pub trait ColumnField {
    /// Number of field elements; values are `0..ORDER`.
    const ORDER: usize;
    fn mul(a: u8, b: u8) -> u8;
    fn inv_sbox(x: u8) -> u8;
}

/// GF(2⁸) with the AES S-box.
pub struct Rijndael;

impl ColumnField for Rijndael {
    const ORDER: usize = 256;

    #[inline]
    fn mul(a: u8, b: u8) -> u8 {
        gf_mul(a, b)
    }

    #[inline]
    fn inv_sbox(x: u8) -> u8 {
        INV_SBOX[x as usize]
    }
}

/// The four ciphertext bytes that come from one state column before the
/// final ShiftRows, listed by row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiagonalGroup(u8);

impl DiagonalGroup {
    pub const ALL: [DiagonalGroup; 4] = [
        DiagonalGroup(0),
        DiagonalGroup(1),
        DiagonalGroup(2),
        DiagonalGroup(3),
    ];

    pub fn new(index: u8) -> Option<Self> {
        (index < 4).then_some(DiagonalGroup(index))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Flat ciphertext positions; group 0 is `[0, 13, 10, 7]`.
    pub fn positions(self) -> [usize; 4] {
        let g = self.0 as usize;
        [0, 1, 2, 3].map(|row| row + 4 * ((g + 4 - row) % 4))
    }

    pub fn containing(pos: usize) -> Self {
        let (row, col) = (pos % 4, pos / 4);
        DiagonalGroup(((row + col) % 4) as u8)
    }

    pub fn extract(self, block: &Block) -> [u8; 4] {
        self.positions().map(|p| block[p])
    }
}

/// Difference pattern after MixColumns of a single-byte fault in `row`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ColumnPattern {
    pub row: usize,
}

impl ColumnPattern {
    pub const ALL: [ColumnPattern; 4] = [
        ColumnPattern { row: 0 },
        ColumnPattern { row: 1 },
        ColumnPattern { row: 2 },
        ColumnPattern { row: 3 },
    ];

    /// Column `row` of the MixColumns matrix, e.g. (2, 1, 1, 3) for row 0.
    pub fn coefficients(self) -> [u8; 4] {
        [0, 1, 2, 3].map(|i| MIX[i][self.row])
    }
}

/// Surviving key tuples for one group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupCandidates {
    /// No equation seen yet.
    Unconstrained,
    /// Sorted, deduplicated tuples packed big-endian (row 0 in the top byte).
    Tuples(Vec<u32>),
}

impl GroupCandidates {
    pub fn from_tuples(tuples: impl IntoIterator<Item = [u8; 4]>) -> Self {
        let mut packed: Vec<u32> = tuples.into_iter().map(u32::from_be_bytes).collect();
        packed.sort_unstable();
        packed.dedup();
        GroupCandidates::Tuples(packed)
    }

    pub fn intersect(&self, other: &GroupCandidates) -> GroupCandidates {
        match (self, other) {
            (GroupCandidates::Unconstrained, x) | (x, GroupCandidates::Unconstrained) => x.clone(),
            (GroupCandidates::Tuples(a), GroupCandidates::Tuples(b)) => {
                let mut out = Vec::with_capacity(a.len().min(b.len()));
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            out.push(a[i]);
                            i += 1;
                            j += 1;
                        }
                    }
                }
                GroupCandidates::Tuples(out)
            }
        }
    }

    /// `None` when unconstrained.
    pub fn len(&self) -> Option<usize> {
        match self {
            GroupCandidates::Unconstrained => None,
            GroupCandidates::Tuples(t) => Some(t.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn unique(&self) -> Option<[u8; 4]> {
        match self {
            GroupCandidates::Tuples(t) if t.len() == 1 => Some(t[0].to_be_bytes()),
            _ => None,
        }
    }

    pub fn tuples(&self) -> impl Iterator<Item = [u8; 4]> + '_ {
        let slice: &[u32] = match self {
            GroupCandidates::Unconstrained => &[],
            GroupCandidates::Tuples(t) => t,
        };
        slice.iter().map(|t| t.to_be_bytes())
    }

    pub fn contains(&self, tuple: [u8; 4]) -> bool {
        match self {
            GroupCandidates::Unconstrained => true,
            GroupCandidates::Tuples(t) => t.binary_search(&u32::from_be_bytes(tuple)).is_ok(),
        }
    }

    /// Values of row `row` that appear in some surviving tuple.
    pub fn byte_values(&self, row: usize) -> BTreeSet<u8> {
        match self {
            GroupCandidates::Unconstrained => (0..=255).collect(),
            GroupCandidates::Tuples(_) => self.tuples().map(|t| t[row]).collect(),
        }
    }
}

/// Candidates for a whole round key, one entry per group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    groups: [GroupCandidates; 4],
}

impl Default for CandidateSet {
    fn default() -> Self {
        Self::unconstrained()
    }
}

impl CandidateSet {
    pub fn unconstrained() -> Self {
        CandidateSet {
            groups: std::array::from_fn(|_| GroupCandidates::Unconstrained),
        }
    }

    pub fn group(&self, g: DiagonalGroup) -> &GroupCandidates {
        &self.groups[g.index()]
    }

    /// Surviving values of the key byte at flat position `pos`.
    pub fn position_values(&self, pos: usize) -> BTreeSet<u8> {
        let g = DiagonalGroup::containing(pos);
        let row = g.positions().iter().position(|&p| p == pos).expect("pos in its group");
        self.group(g).byte_values(row)
    }

    /// The round key, once every group is down to a single tuple.
    pub fn key(&self) -> Option<RoundKey> {
        let mut key = [0u8; 16];
        for g in DiagonalGroup::ALL {
            let tuple = self.group(g).unique()?;
            for (p, b) in g.positions().into_iter().zip(tuple) {
                key[p] = b;
            }
        }
        Some(RoundKey(key))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DfaError {
    #[error("reference and faulty bytes are identical; no information")]
    NoDifference,
    #[error("faulty ciphertext {index} leaves no candidate in group {}", group.index())]
    InconsistentPair { index: usize, group: DiagonalGroup },
    #[error("faulty ciphertext {index} equals the reference")]
    IdenticalCiphertext { index: usize },
    #[error("faulty ciphertext {index} differs outside a single diagonal group")]
    SpansGroups { index: usize },
    #[error("no faulty ciphertexts given")]
    NoCiphertexts,
}

/// Bucketed solutions of `inv_sbox(c ^ k) ^ inv_sbox(c' ^ k) = d` for each d.
struct DiffTable {
    start: [u16; 257],
    keys: [u8; 256],
}

impl DiffTable {
    fn new<F: ColumnField>(c: u8, c_faulty: u8) -> Self {
        let mut diff = [0u8; 256];
        let mut count = [0u16; 257];
        for k in 0..F::ORDER {
            let d = F::inv_sbox(c ^ k as u8) ^ F::inv_sbox(c_faulty ^ k as u8);
            diff[k] = d;
            count[d as usize + 1] += 1;
        }
        for d in 0..256 {
            count[d + 1] += count[d];
        }
        let start = count;
        let mut fill = count;
        let mut keys = [0u8; 256];
        for k in 0..F::ORDER {
            let d = diff[k] as usize;
            keys[fill[d] as usize] = k as u8;
            fill[d] += 1;
        }
        DiffTable { start, keys }
    }

    fn solutions(&self, d: u8) -> &[u8] {
        &self.keys[self.start[d as usize] as usize..self.start[d as usize + 1] as usize]
    }
}

/// Key tuples of one group consistent with a single-byte column fault, in
/// any field.
pub fn column_candidates_in<F: ColumnField>(
    reference: [u8; 4],
    faulty: [u8; 4],
) -> Result<GroupCandidates, DfaError> {
    if reference == faulty {
        return Err(DfaError::NoDifference);
    }
    let tables: [DiffTable; 4] = std::array::from_fn(|j| DiffTable::new::<F>(reference[j], faulty[j]));
    let mut tuples = Vec::new();
    for pattern in ColumnPattern::ALL {
        let coeff = pattern.coefficients();
        for e in 1..F::ORDER {
            let e = e as u8;
            let sols: [&[u8]; 4] = std::array::from_fn(|j| tables[j].solutions(F::mul(coeff[j], e)));
            if sols.iter().any(|s| s.is_empty()) {
                continue;
            }
            for &k0 in sols[0] {
                for &k1 in sols[1] {
                    for &k2 in sols[2] {
                        for &k3 in sols[3] {
                            tuples.push([k0, k1, k2, k3]);
                        }
                    }
                }
            }
        }
    }
    Ok(GroupCandidates::from_tuples(tuples))
}

/// Last-round key candidates of `group` from one (reference, faulty) pair.
pub fn column_candidates(
    ref_ct: &Block,
    faulty_ct: &Block,
    group: DiagonalGroup,
) -> Result<GroupCandidates, DfaError> {
    column_candidates_in::<Rijndael>(group.extract(ref_ct), group.extract(faulty_ct))
}

/// A faulty ciphertext left out because its difference does not have the
/// four-group shape of a round N-2 fault.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub index: usize,
    pub differing_groups: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Recovery {
    Key(RoundKey),
    Insufficient(CandidateSet),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DfaOutcome {
    pub recovery: Recovery,
    pub skipped: Vec<Skipped>,
}

impl DfaOutcome {
    pub fn key(&self) -> Option<RoundKey> {
        match self.recovery {
            Recovery::Key(k) => Some(k),
            Recovery::Insufficient(_) => None,
        }
    }
}

fn differing_groups(a: &Block, b: &Block) -> usize {
    DiagonalGroup::ALL
        .iter()
        .filter(|g| g.extract(a) != g.extract(b))
        .count()
}

/// Recover K_N from a reference ciphertext and faulty ciphertexts whose
/// faults hit a single byte between MixColumns of rounds N-3 and N-2.
///
/// Ciphertexts that do not differ in all four groups are skipped. An empty
/// intersection is an error naming the first ciphertext that caused it.
pub fn last_round_key(ref_ct: &Block, faulty_cts: &[Block]) -> Result<DfaOutcome, DfaError> {
    let mut skipped = Vec::new();
    let mut usable = Vec::new();
    for (index, ct) in faulty_cts.iter().enumerate() {
        match differing_groups(ref_ct, ct) {
            4 => usable.push((index, ct)),
            n => skipped.push(Skipped {
                index,
                differing_groups: n,
            }),
        }
    }

    let per_group: Vec<Result<GroupCandidates, (usize, DiagonalGroup)>> = DiagonalGroup::ALL
        .par_iter()
        .map(|&g| {
            let mut acc = GroupCandidates::Unconstrained;
            for &(index, ct) in &usable {
                let c = column_candidates(ref_ct, ct, g).expect("usable ciphertexts differ here");
                acc = acc.intersect(&c);
                if acc.is_empty() {
                    return Err((index, g));
                }
            }
            Ok(acc)
        })
        .collect();

    if let Some((index, group)) = per_group
        .iter()
        .filter_map(|r| r.as_ref().err())
        .min_by_key(|(i, g)| (*i, *g))
    {
        return Err(DfaError::InconsistentPair {
            index: *index,
            group: *group,
        });
    }
    let mut groups = per_group.into_iter().map(|r| r.expect("errors handled"));
    let set = CandidateSet {
        groups: std::array::from_fn(|_| groups.next().expect("four groups")),
    };
    let recovery = match set.key() {
        Some(k) => Recovery::Key(k),
        None => Recovery::Insufficient(set),
    };
    Ok(DfaOutcome { recovery, skipped })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColumnRecovery {
    /// Key bytes at `group.positions()`.
    Key([u8; 4]),
    Insufficient(GroupCandidates),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DusartOutcome {
    pub group: DiagonalGroup,
    pub recovery: ColumnRecovery,
}

/// Four bytes of K_N from faults that hit one byte entering MixColumns of
/// round N-1, so that every faulty ciphertext differs in one group only.
pub fn dusart_column_key(ref_ct: &Block, faulty_cts: &[Block]) -> Result<DusartOutcome, DfaError> {
    let mut group = None;
    for (index, ct) in faulty_cts.iter().enumerate() {
        let touched: Vec<DiagonalGroup> = DiagonalGroup::ALL
            .into_iter()
            .filter(|g| g.extract(ref_ct) != g.extract(ct))
            .collect();
        match touched.as_slice() {
            [] => return Err(DfaError::IdenticalCiphertext { index }),
            [g] if group.is_none() || group == Some(*g) => group = Some(*g),
            _ => return Err(DfaError::SpansGroups { index }),
        }
    }
    let group = group.ok_or(DfaError::NoCiphertexts)?;
    let mut acc = GroupCandidates::Unconstrained;
    for (index, ct) in faulty_cts.iter().enumerate() {
        acc = acc.intersect(&column_candidates(ref_ct, ct, group)?);
        if acc.is_empty() {
            return Err(DfaError::InconsistentPair { index, group });
        }
    }
    let recovery = match acc.unique() {
        Some(k) => ColumnRecovery::Key(k),
        None => ColumnRecovery::Insufficient(acc),
    };
    Ok(DusartOutcome { group, recovery })
}

/// Recover K_{N-1} from round N-3 faults once K_N is known.
///
/// Every ciphertext is stripped of its last round, which turns the faults
/// into round (N-1)-2 faults of a shorter cipher whose last key is
/// InvMixColumns(K_{N-1}); the recovered key is mapped back through
/// MixColumns. Insufficient candidate sets stay in the peeled key domain.
pub fn second_round_key(
    ref_ct: &Block,
    faulty_cts: &[Block],
    k_last: &RoundKey,
) -> Result<DfaOutcome, DfaError> {
    let peeled_ref = peel_final_round(ref_ct, k_last);
    let peeled: Vec<Block> = faulty_cts
        .iter()
        .map(|c| peel_final_round(c, k_last))
        .collect();
    let mut outcome = last_round_key(&peeled_ref, &peeled)?;
    if let Recovery::Key(k) = outcome.recovery {
        outcome.recovery = Recovery::Key(k.mix_columns());
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aes::{encrypt_block, expand_key, KeySchedule, Op, StepId};
    use crate::fault::{encrypt_with_faults, FaultSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn faulty(
        rng: &mut ChaCha8Rng,
        ks: &KeySchedule,
        pt: &Block,
        round: u8,
        pos: Option<usize>,
    ) -> Block {
        let f = FaultSpec::byte(
            StepId::new(round, Op::MixColumns),
            pos.unwrap_or_else(|| rng.gen_range(0..16)),
            rng.gen_range(1..=255),
        );
        encrypt_with_faults(pt, ks, &[f]).unwrap()
    }

    #[test]
    fn group_positions_partition_the_block() {
        assert_eq!(DiagonalGroup::ALL[0].positions(), [0, 13, 10, 7]);
        let mut all: Vec<usize> = DiagonalGroup::ALL.iter().flat_map(|g| g.positions()).collect();
        all.sort();
        assert_eq!(all, (0..16).collect::<Vec<_>>());
        for g in DiagonalGroup::ALL {
            for p in g.positions() {
                assert_eq!(DiagonalGroup::containing(p), g);
            }
        }
    }

    /// Group positions are where ShiftRows sends each column.
    #[test]
    fn group_positions_follow_shift_rows() {
        for g in DiagonalGroup::ALL {
            let mut s = crate::aes::AesState::ZERO;
            for row in 0..4 {
                s.set(row, g.index(), 0xff);
            }
            s.shift_rows();
            let mut hit: Vec<usize> = (0..16).filter(|&i| s[i] != 0).collect();
            let mut expected = g.positions().to_vec();
            hit.sort();
            expected.sort();
            assert_eq!(hit, expected);
        }
    }

    #[test]
    fn patterns_are_rotations() {
        assert_eq!(ColumnPattern { row: 0 }.coefficients(), [2, 1, 1, 3]);
        assert_eq!(ColumnPattern { row: 1 }.coefficients(), [3, 2, 1, 1]);
        assert_eq!(ColumnPattern { row: 3 }.coefficients(), [1, 1, 3, 2]);
    }

    #[test]
    fn identical_bytes_are_rejected() {
        assert_eq!(
            column_candidates_in::<Rijndael>([1, 2, 3, 4], [1, 2, 3, 4]),
            Err(DfaError::NoDifference)
        );
    }

    #[test]
    fn true_key_always_survives() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..30 {
            let ks = expand_key(&rng.gen::<[u8; 32]>()).unwrap();
            let pt: Block = rng.gen();
            let clean = encrypt_block(&pt, &ks);
            let bad = faulty(&mut rng, &ks, &pt, 12, None);
            for g in DiagonalGroup::ALL {
                let c = column_candidates(&clean, &bad, g).unwrap();
                assert!(c.contains(g.extract(&ks.last().0)));
                assert!(c.len().unwrap() < 4 * 255 * 16);
            }
        }
    }

    #[test]
    fn unchanged_byte_gives_no_candidates() {
        let c = column_candidates_in::<Rijndael>([1, 2, 3, 4], [1, 9, 9, 9]).unwrap();
        assert!(c.is_empty());
        let c = column_candidates_in::<Rijndael>([1, 2, 3, 4], [8, 9, 9, 9]).unwrap();
        assert!(c.len().unwrap() > 0);
    }

    #[test]
    fn two_faults_usually_pin_the_key() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut ok = 0;
        for _ in 0..40 {
            let ks = expand_key(&rng.gen::<[u8; 32]>()).unwrap();
            let pt: Block = rng.gen();
            let clean = encrypt_block(&pt, &ks);
            let f: Vec<Block> = (0..2).map(|_| faulty(&mut rng, &ks, &pt, 12, None)).collect();
            let out = last_round_key(&clean, &f).unwrap();
            match out.recovery {
                Recovery::Key(k) => {
                    assert_eq!(k, *ks.last());
                    ok += 1;
                }
                Recovery::Insufficient(set) => {
                    for g in DiagonalGroup::ALL {
                        assert!(set.group(g).contains(g.extract(&ks.last().0)));
                    }
                }
            }
        }
        assert!(ok >= 36, "{ok}/40");
    }

    #[test]
    fn empty_list_is_unconstrained() {
        let out = last_round_key(&[0; 16], &[]).unwrap();
        let Recovery::Insufficient(set) = out.recovery else { panic!() };
        assert_eq!(set, CandidateSet::unconstrained());
        assert_eq!(set.position_values(5).len(), 256);
    }

    #[test]
    fn adding_faults_never_grows_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let ks = expand_key(&rng.gen::<[u8; 32]>()).unwrap();
        let pt: Block = rng.gen();
        let clean = encrypt_block(&pt, &ks);
        // same byte position twice keeps sets large enough to watch shrink
        let f: Vec<Block> = (0..3).map(|_| faulty(&mut rng, &ks, &pt, 12, Some(0))).collect();
        let mut prev: Option<CandidateSet> = None;
        for n in 1..=3 {
            let out = last_round_key(&clean, &f[..n]).unwrap();
            let set = match out.recovery {
                Recovery::Key(k) => {
                    assert_eq!(k, *ks.last());
                    break;
                }
                Recovery::Insufficient(s) => s,
            };
            if let Some(p) = &prev {
                for g in DiagonalGroup::ALL {
                    assert!(set.group(g).len() <= p.group(g).len());
                    assert!(set.group(g).tuples().all(|t| p.group(g).contains(t)));
                }
            }
            prev = Some(set);
        }
    }

    #[test]
    fn multi_column_fault_is_skipped_or_inconsistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let ks = expand_key(&rng.gen::<[u8; 32]>()).unwrap();
        let pt: Block = rng.gen();
        let clean = encrypt_block(&pt, &ks);
        let good: Vec<Block> = (0..3).map(|_| faulty(&mut rng, &ks, &pt, 12, None)).collect();
        // a round N-1 fault only touches one group: skipped
        let late = faulty(&mut rng, &ks, &pt, 13, Some(0));
        let mut cts = good.clone();
        cts.insert(1, late);
        let out = last_round_key(&clean, &cts).unwrap();
        assert_eq!(out.skipped, vec![Skipped { index: 1, differing_groups: 1 }]);
        assert_eq!(out.key(), Some(*ks.last()));

        // a two-column fault at round N-2 breaks the equations
        let mut mask = crate::aes::AesState::ZERO;
        mask[0] = 0x11;
        mask[5] = 0x22;
        let two = encrypt_with_faults(
            &pt,
            &ks,
            &[FaultSpec::dynamic(StepId::new(12, Op::MixColumns), mask)],
        )
        .unwrap();
        assert!(matches!(
            last_round_key(&clean, &[good[0], two]),
            Err(DfaError::InconsistentPair { index: 1, .. })
        ));
    }

    #[test]
    fn dusart_round_n_minus_1() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let mut solved = 0;
        for _ in 0..20 {
            let ks = expand_key(&rng.gen::<[u8; 16]>()).unwrap();
            let pt: Block = rng.gen();
            let clean = encrypt_block(&pt, &ks);
            let col = rng.gen_range(0..4);
            let cts: Vec<Block> = (0..5)
                .map(|_| {
                    let pos = 4 * col + rng.gen_range(0..4);
                    faulty(&mut rng, &ks, &pt, 9, Some(pos))
                })
                .collect();
            for n in 1..=5 {
                let out = dusart_column_key(&clean, &cts[..n]).unwrap();
                let truth = out.group.extract(&ks.last().0);
                match out.recovery {
                    ColumnRecovery::Key(k) => {
                        assert_eq!(k, truth);
                        solved += 1;
                        break;
                    }
                    ColumnRecovery::Insufficient(c) => assert!(c.contains(truth)),
                }
            }
        }
        assert_eq!(solved, 20);
    }

    #[test]
    fn dusart_rejections() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let ks = expand_key(&rng.gen::<[u8; 16]>()).unwrap();
        let pt: Block = rng.gen();
        let clean = encrypt_block(&pt, &ks);
        assert_eq!(
            dusart_column_key(&clean, &[clean]),
            Err(DfaError::IdenticalCiphertext { index: 0 })
        );
        let wide = faulty(&mut rng, &ks, &pt, 8, None);
        assert_eq!(dusart_column_key(&clean, &[wide]), Err(DfaError::SpansGroups { index: 0 }));
        assert_eq!(dusart_column_key(&clean, &[]), Err(DfaError::NoCiphertexts));

        // the same fault twice adds nothing
        let f = FaultSpec::byte(StepId::new(9, Op::MixColumns), 0, 0x37);
        let c = encrypt_with_faults(&pt, &ks, &[f]).unwrap();
        let once = dusart_column_key(&clean, &[c]).unwrap();
        let twice = dusart_column_key(&clean, &[c, c]).unwrap();
        assert_eq!(once, twice);
        assert!(matches!(twice.recovery, ColumnRecovery::Insufficient(_)));
    }

    #[test]
    fn second_round_key_after_peeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..10 {
            let ks = expand_key(&rng.gen::<[u8; 32]>()).unwrap();
            let pt: Block = rng.gen();
            let clean = encrypt_block(&pt, &ks);
            let r3: Vec<Block> = (0..3).map(|_| faulty(&mut rng, &ks, &pt, 11, None)).collect();
            let out = second_round_key(&clean, &r3, ks.last()).unwrap();
            assert_eq!(out.key(), Some(*ks.round_key(13)));
            assert!(second_round_key(&clean, &[], ks.last()).unwrap().key().is_none());

            let mut wrong = *ks.last();
            wrong.0[3] ^= 1;
            let bad = second_round_key(&clean, &r3, &wrong);
            assert!(bad.map(|o| o.key().is_none()).unwrap_or(true));
        }
    }
}
