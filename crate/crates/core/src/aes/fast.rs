//! Table-driven encryption for the brute-force loops. No tracing, no
//! allocation; round keys are held as big-endian column words.

use super::{AesError, Block, KeySize, SBOX};
use crate::gf::xtime;

const fn build_te0() -> [u32; 256] {
    let mut t = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let s = SBOX[i];
        let s2 = xtime(s);
        let s3 = s2 ^ s;
        t[i] = u32::from_be_bytes([s2, s, s, s3]);
        i += 1;
    }
    t
}

static TE0: [u32; 256] = build_te0();

const RCON: [u32; 10] = [
    0x0100_0000, 0x0200_0000, 0x0400_0000, 0x0800_0000, 0x1000_0000, 0x2000_0000, 0x4000_0000,
    0x8000_0000, 0x1b00_0000, 0x3600_0000,
];

#[inline(always)]
fn sub_word(w: u32) -> u32 {
    let b = w.to_be_bytes();
    u32::from_be_bytes([
        SBOX[b[0] as usize],
        SBOX[b[1] as usize],
        SBOX[b[2] as usize],
        SBOX[b[3] as usize],
    ])
}

#[derive(Clone)]
pub struct FastCipher {
    rounds: usize,
    rk: [u32; 60],
}

impl FastCipher {
    pub fn new(key: &[u8]) -> Result<Self, AesError> {
        let size = KeySize::from_key_len(key.len())?;
        let nk = size.nk();
        let rounds = size.rounds() as usize;
        let mut rk = [0u32; 60];
        for (i, c) in key.chunks_exact(4).enumerate() {
            rk[i] = u32::from_be_bytes([c[0], c[1], c[2], c[3]]);
        }
        for i in nk..4 * (rounds + 1) {
            let mut t = rk[i - 1];
            if i % nk == 0 {
                t = sub_word(t.rotate_left(8)) ^ RCON[i / nk - 1];
            } else if nk > 6 && i % nk == 4 {
                t = sub_word(t);
            }
            rk[i] = rk[i - nk] ^ t;
        }
        Ok(FastCipher { rounds, rk })
    }

    #[inline]
    pub fn encrypt(&self, pt: &Block) -> Block {
        let rk = &self.rk;
        let mut s = [0u32; 4];
        for c in 0..4 {
            s[c] = u32::from_be_bytes([pt[4 * c], pt[4 * c + 1], pt[4 * c + 2], pt[4 * c + 3]])
                ^ rk[c];
        }
        for round in 1..self.rounds {
            let mut t = [0u32; 4];
            for c in 0..4 {
                t[c] = TE0[(s[c] >> 24) as usize]
                    ^ TE0[((s[(c + 1) & 3] >> 16) & 0xff) as usize].rotate_right(8)
                    ^ TE0[((s[(c + 2) & 3] >> 8) & 0xff) as usize].rotate_right(16)
                    ^ TE0[(s[(c + 3) & 3] & 0xff) as usize].rotate_right(24)
                    ^ rk[4 * round + c];
            }
            s = t;
        }
        let mut out = [0u8; 16];
        for c in 0..4 {
            let w = u32::from_be_bytes([
                SBOX[(s[c] >> 24) as usize],
                SBOX[((s[(c + 1) & 3] >> 16) & 0xff) as usize],
                SBOX[((s[(c + 2) & 3] >> 8) & 0xff) as usize],
                SBOX[(s[(c + 3) & 3] & 0xff) as usize],
            ]) ^ rk[4 * self.rounds + c];
            out[4 * c..4 * c + 4].copy_from_slice(&w.to_be_bytes());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::{encrypt_block, expand_key};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn agrees_with_traced_cipher() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for len in [16, 24, 32] {
            for _ in 0..300 {
                let key: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
                let pt: Block = rng.gen();
                let ks = expand_key(&key).unwrap();
                assert_eq!(FastCipher::new(&key).unwrap().encrypt(&pt), encrypt_block(&pt, &ks));
            }
        }
    }
}
