//! Binary polynomial arithmetic and the finite fields GF(2^k), k <= 127.
//!
//! Polynomials are bit vectors in a `u128` (bit i is the coefficient of
//! x^i). Field moduli are found at runtime: the lexicographically smallest
//! irreducible polynomial of the requested degree, so the construction is
//! reproducible without an embedded table. Products of two 127-degree
//! polynomials need 254 bits and are carried in four limbs before reduction.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Carry-less product of two 64-bit polynomials.
fn clmul64(a: u64, mut b: u64) -> u128 {
    let mut acc: u128 = 0;
    let mut shift = 0u32;
    while b != 0 {
        let tz = b.trailing_zeros();
        shift += tz;
        acc ^= (a as u128) << shift;
        b >>= tz + 1;
        shift += 1;
    }
    acc
}

/// 256-bit polynomial accumulator, little-endian limbs.
type Wide = [u64; 4];

fn xor_u128_at(w: &mut Wide, value: u128, limb: usize) {
    w[limb] ^= value as u64;
    w[limb + 1] ^= (value >> 64) as u64;
}

fn mul_wide(a: u128, b: u128) -> Wide {
    let (a0, a1) = (a as u64, (a >> 64) as u64);
    let (b0, b1) = (b as u64, (b >> 64) as u64);
    let mut w: Wide = [0; 4];
    xor_u128_at(&mut w, clmul64(a0, b0), 0);
    xor_u128_at(&mut w, clmul64(a0, b1), 1);
    xor_u128_at(&mut w, clmul64(a1, b0), 1);
    xor_u128_at(&mut w, clmul64(a1, b1), 2);
    w
}

fn wide_bit(w: &Wide, i: u32) -> bool {
    (w[(i / 64) as usize] >> (i % 64)) & 1 == 1
}

fn wide_xor_shifted(w: &mut Wide, poly: u128, shift: u32) {
    let limb = (shift / 64) as usize;
    let offset = shift % 64;
    let lo = poly << offset;
    xor_u128_at(w, lo, limb);
    if offset != 0 && limb + 2 < 4 {
        w[limb + 2] ^= (poly >> (128 - offset)) as u64;
    }
}

/// Reduce a wide product modulo `modulus` of the given degree.
fn reduce(mut w: Wide, modulus: u128, degree: u32) -> u128 {
    let mut i = 255u32;
    loop {
        if wide_bit(&w, i) && i >= degree {
            wide_xor_shifted(&mut w, modulus, i - degree);
        }
        if i == degree {
            break;
        }
        i -= 1;
    }
    (w[0] as u128) | ((w[1] as u128) << 64)
}

fn poly_degree(p: u128) -> i32 {
    127 - p.leading_zeros() as i32
}

/// Remainder of a modulo b over GF(2); b must be nonzero.
fn poly_rem(mut a: u128, b: u128) -> u128 {
    let db = poly_degree(b);
    while poly_degree(a) >= db {
        a ^= b << ((poly_degree(a) - db) as u32);
    }
    a
}

fn poly_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = poly_rem(a, b);
        a = b;
        b = r;
    }
    a
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Deterministic irreducibility test over GF(2): x^(2^k) = x mod f, and
/// gcd(x^(2^(k/p)) - x, f) = 1 for every prime p dividing k.
fn is_irreducible(f: u128, k: u32) -> bool {
    if k == 0 || f & 1 == 0 {
        return false;
    }
    let x_red = poly_rem(0b10, f);
    let sq = |h: u128| reduce(mul_wide(h, h), f, k);
    let x_pow_2_to = |steps: u32| {
        let mut h = x_red;
        for _ in 0..steps {
            h = sq(h);
        }
        h
    };
    if x_pow_2_to(k) != x_red {
        return false;
    }
    for p in prime_factors(k) {
        let g = x_pow_2_to(k / p) ^ x_red;
        if poly_gcd(g, f) != 1 {
            return false;
        }
    }
    true
}

fn irreducible_cache() -> &'static Mutex<HashMap<u32, u128>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, u128>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The lexicographically smallest irreducible polynomial with nonzero
/// constant term of the given degree (1..=127), found once and cached.
pub fn smallest_irreducible(degree: u32) -> u128 {
    assert!((1..=127).contains(&degree), "degree must lie in 1..=127");
    if let Some(&f) = irreducible_cache().lock().unwrap().get(&degree) {
        return f;
    }
    let lead = 1u128 << degree;
    let mut tail = 1u128;
    let found = loop {
        let f = lead | tail;
        // f(1) = 1 is necessary beyond degree 1, so the popcount is odd.
        if (degree == 1 || f.count_ones() % 2 == 1) && is_irreducible(f, degree) {
            break f;
        }
        tail += 2;
        assert!(tail < lead, "no irreducible polynomial found for degree {degree}");
    };
    irreducible_cache().lock().unwrap().insert(degree, found);
    found
}

/// GF(2^k) with the smallest irreducible modulus of degree k.
#[derive(Debug, Clone, Copy)]
pub struct Gf2k {
    degree: u32,
    modulus: u128,
}

impl Gf2k {
    pub fn new(degree: u32) -> Self {
        Gf2k { degree, modulus: smallest_irreducible(degree) }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn modulus(&self) -> u128 {
        self.modulus
    }

    /// Mask selecting the low `degree` bits.
    pub fn mask(&self) -> u128 {
        (1u128 << self.degree) - 1
    }

    pub fn mul(&self, a: u128, b: u128) -> u128 {
        reduce(mul_wide(a & self.mask(), b & self.mask()), self.modulus, self.degree)
    }

    pub fn add(&self, a: u128, b: u128) -> u128 {
        (a ^ b) & self.mask()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trial division by every lower-degree polynomial; ground truth for
    /// small degrees.
    fn irreducible_by_trial_division(f: u128, k: u32) -> bool {
        for d in 1..=(k / 2) {
            for tail in 0..(1u128 << d) {
                let g = (1u128 << d) | tail;
                if poly_rem(f, g) == 0 {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn smallest_irreducible_matches_trial_division() {
        for k in 1..=16u32 {
            let f = smallest_irreducible(k);
            assert!(irreducible_by_trial_division(f, k), "degree {k}: {f:#b}");
            // Nothing smaller of the same degree is irreducible.
            let lead = 1u128 << k;
            let mut tail = 1;
            while lead | tail != f {
                assert!(
                    !irreducible_by_trial_division(lead | tail, k),
                    "degree {k} missed {:#b}",
                    lead | tail
                );
                tail += 2;
            }
        }
    }

    #[test]
    fn known_small_irreducibles() {
        assert_eq!(smallest_irreducible(1), 0b11);
        assert_eq!(smallest_irreducible(2), 0b111);
        assert_eq!(smallest_irreducible(3), 0b1011);
        assert_eq!(smallest_irreducible(4), 0b10011);
    }

    #[test]
    fn field_axioms_spot_check() {
        // Frobenius: a^(2^k) = a for every field element; checked for a few
        // pseudo-random elements in small and large fields.
        for k in [8u32, 19, 32, 40, 61, 68, 127] {
            let field = Gf2k::new(k);
            let mut a: u128 = 0x9E37_79B9_7F4A_7C15u128 & field.mask();
            if a == 0 {
                a = 1;
            }
            for _ in 0..4 {
                let mut h = a;
                for _ in 0..k {
                    h = field.mul(h, h);
                }
                assert_eq!(h, a, "frobenius failed in GF(2^{k})");
                let b = (a.rotate_left(17) ^ 0xABCD) & field.mask();
                let c = (a.rotate_left(40) ^ 0x1234) & field.mask();
                assert_eq!(field.mul(a, b), field.mul(b, a));
                assert_eq!(
                    field.mul(a, field.add(b, c)),
                    field.add(field.mul(a, b), field.mul(a, c))
                );
                a = (a.wrapping_mul(6364136223846793005).wrapping_add(11)) & field.mask();
                if a == 0 {
                    a = 2;
                }
            }
        }
    }

    #[test]
    fn wide_product_agrees_with_direct_path() {
        // For operands below 64 bits the wide path must agree with plain
        // shift-xor multiplication done directly in u128.
        let naive = |a: u128, b: u128| {
            let mut acc = 0u128;
            for i in 0..64 {
                if (b >> i) & 1 == 1 {
                    acc ^= a << i;
                }
            }
            acc
        };
        for (a, b) in [(0x1234u128, 0x9876u128), (0xFFFF_FFFF, 0xFFFF_FFFF), (1, 0x8000_0000)] {
            let wide = mul_wide(a, b);
            let direct = naive(a, b);
            assert_eq!(wide[0] as u128 | ((wide[1] as u128) << 64), direct);
            assert_eq!(wide[2], 0);
            assert_eq!(wide[3], 0);
        }
    }
}
