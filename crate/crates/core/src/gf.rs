//! Arithmetic in GF(2⁸) modulo x⁸ + x⁴ + x³ + x + 1, the Rijndael field.

/// Low byte of the reduction polynomial.
pub const REDUCTION: u8 = 0x1b;

/// Multiplication by x.
#[inline]
pub const fn xtime(a: u8) -> u8 {
    (a << 1) ^ (((a >> 7) & 1) * REDUCTION)
}

/// Field product of `a` and `b`.
#[inline]
pub const fn gf_mul(mut a: u8, mut b: u8) -> u8 {
    let mut product = 0u8;
    while b != 0 {
        if b & 1 != 0 {
            product ^= a;
        }
        a = xtime(a);
        b >>= 1;
    }
    product
}

/// Multiplicative inverse, with 0 mapped to 0 as in the S-box construction.
pub const fn gf_inv(a: u8) -> u8 {
    // a^254 = a^-1 for nonzero a
    let mut result = 1u8;
    let mut base = a;
    let mut exp = 254u8;
    while exp != 0 {
        if exp & 1 != 0 {
            result = gf_mul(result, base);
        }
        base = gf_mul(base, base);
        exp >>= 1;
    }
    if a == 0 {
        0
    } else {
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Log/antilog tables built from repeated multiplication by the generator 0x03.
    fn log_tables() -> ([u8; 256], [u8; 256]) {
        let mut exp = [0u8; 256];
        let mut log = [0u8; 256];
        let mut x = 1u8;
        for i in 0..255 {
            exp[i] = x;
            log[x as usize] = i as u8;
            x ^= xtime(x);
        }
        exp[255] = exp[0];
        (exp, log)
    }

    #[test]
    fn small_products() {
        assert_eq!(gf_mul(0x02, 0x01), 0x02);
        assert_eq!(gf_mul(0x02, 0x80), 0x1b);
        assert_eq!(gf_mul(0x57, 0x13), 0xfe);
    }

    #[test]
    fn inverse_pair_from_log_tables() {
        let (exp, log) = log_tables();
        let l = (log[0x53] as usize + log[0xca] as usize) % 255;
        assert_eq!(exp[l], 0x01);
        assert_eq!(gf_mul(0x53, 0xca), 0x01);
        assert_eq!(gf_inv(0x53), 0xca);
    }

    #[test]
    fn matches_log_tables_on_all_pairs() {
        let (exp, log) = log_tables();
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                let expected = if a == 0 || b == 0 {
                    0
                } else {
                    exp[(log[a as usize] as usize + log[b as usize] as usize) % 255]
                };
                assert_eq!(gf_mul(a, b), expected, "{a:#04x} * {b:#04x}");
            }
        }
    }

    #[test]
    fn commutative_and_distributive() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(gf_mul(a, b), gf_mul(b, a));
                let c = a.wrapping_mul(31).wrapping_add(b);
                assert_eq!(gf_mul(a, b ^ c), gf_mul(a, b) ^ gf_mul(a, c));
            }
        }
    }

    #[test]
    fn every_nonzero_element_has_an_inverse() {
        assert_eq!(gf_inv(0), 0);
        for a in 1..=255u8 {
            assert_eq!(gf_mul(a, gf_inv(a)), 1);
        }
    }
}
