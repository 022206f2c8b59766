use super::{AesError, KeySize, RoundKey, SBOX};

/// Expanded round keys K_0..K_N.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeySchedule {
    size: KeySize,
    round_keys: Vec<RoundKey>,
}

type Word = [u8; 4];

const RCON: [u8; 11] = [0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1b, 0x36];

fn sub_word(w: Word) -> Word {
    w.map(|b| SBOX[b as usize])
}

/// The value XORed into `w[i - Nk]` to produce `w[i]`.
fn schedule_core(prev: Word, i: usize, nk: usize) -> Word {
    if i % nk == 0 {
        let mut t = sub_word([prev[1], prev[2], prev[3], prev[0]]);
        t[0] ^= RCON[i / nk];
        t
    } else if nk > 6 && i % nk == 4 {
        sub_word(prev)
    } else {
        prev
    }
}

fn xor_word(a: Word, b: Word) -> Word {
    [a[0] ^ b[0], a[1] ^ b[1], a[2] ^ b[2], a[3] ^ b[3]]
}

fn words_to_round_keys(words: &[Word]) -> Vec<RoundKey> {
    words
        .chunks_exact(4)
        .map(|c| {
            let mut k = [0u8; 16];
            for (j, w) in c.iter().enumerate() {
                k[4 * j..4 * j + 4].copy_from_slice(w);
            }
            RoundKey(k)
        })
        .collect()
}

/// FIPS-197 key expansion.
pub fn expand_key(key: &[u8]) -> Result<KeySchedule, AesError> {
    let size = KeySize::from_key_len(key.len())?;
    let nk = size.nk();
    let total = 4 * (size.rounds() as usize + 1);
    let mut words: Vec<Word> = key
        .chunks_exact(4)
        .map(|c| [c[0], c[1], c[2], c[3]])
        .collect();
    for i in nk..total {
        let w = xor_word(words[i - nk], schedule_core(words[i - 1], i, nk));
        words.push(w);
    }
    Ok(KeySchedule {
        size,
        round_keys: words_to_round_keys(&words),
    })
}

/// Recover the cipher key from the last round keys of its schedule.
///
/// `trailing` holds consecutive round keys ending at K_N (K_{N-1}, K_N for
/// the two-key case). Only the last Nk words are used; any such tail
/// inverts to some key.
pub fn invert_key_schedule(size: KeySize, trailing: &[RoundKey]) -> Result<Vec<u8>, AesError> {
    let needed = size.trailing_keys_needed();
    let rounds = size.rounds() as usize;
    if trailing.len() < needed || trailing.len() > rounds + 1 {
        return Err(AesError::TooFewRoundKeys {
            size,
            needed,
            got: trailing.len(),
        });
    }
    let nk = size.nk();
    let total = 4 * (rounds + 1);
    let mut words: Vec<Option<Word>> = vec![None; total];
    let first = total - 4 * trailing.len();
    for (k, key) in trailing.iter().enumerate() {
        for j in 0..4 {
            let b = &key.0[4 * j..4 * j + 4];
            words[first + 4 * k + j] = Some([b[0], b[1], b[2], b[3]]);
        }
    }
    for i in (nk..total).rev() {
        if words[i - nk].is_none() {
            let (Some(wi), Some(prev)) = (words[i], words[i - 1]) else {
                unreachable!("tail of {needed} keys covers Nk words");
            };
            words[i - nk] = Some(xor_word(wi, schedule_core(prev, i, nk)));
        }
    }
    Ok(words[..nk].iter().flat_map(|w| w.unwrap()).collect())
}

impl KeySchedule {
    pub fn size(&self) -> KeySize {
        self.size
    }

    pub fn rounds(&self) -> u8 {
        self.size.rounds()
    }

    pub fn round_keys(&self) -> &[RoundKey] {
        &self.round_keys
    }

    pub fn round_key(&self, round: u8) -> &RoundKey {
        &self.round_keys[round as usize]
    }

    pub fn last(&self) -> &RoundKey {
        self.round_keys.last().expect("schedule is never empty")
    }

    /// The cipher key, i.e. the first Nk words of the schedule.
    pub fn cipher_key(&self) -> Vec<u8> {
        self.round_keys
            .iter()
            .flat_map(|k| k.0)
            .take(self.size.key_len())
            .collect()
    }

    /// The last `trailing_keys_needed` round keys.
    pub fn tail(&self) -> &[RoundKey] {
        &self.round_keys[self.round_keys.len() - self.size.trailing_keys_needed()..]
    }
}
