//! Rabin fingerprints over bytes with O(1) rolling updates.
//!
//! A fingerprint is the base-256 evaluation of a byte string modulo a prime:
//! `ρ(S) = Σ S[i]·256^(n−i) mod q`. Appending a byte and sliding a fixed-length
//! window by one position are both constant time, the latter given the
//! precomputed power `256^(k−1) mod q` for the window length `k`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// 2^61 − 1, the default modulus.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// One symbol per byte value.
pub const BASE: u64 = 256;

/// Moduli must stay below this so every intermediate fits the u128 product path.
pub const MAX_MODULUS: u64 = 1 << 62;

#[inline]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    let x = a as u128 * b as u128;
    if q == MERSENNE_61 {
        // Both factors are reduced residues, so one fold plus one conditional
        // subtraction lands in [0, q).
        let s = (x as u64 & MERSENNE_61) + (x >> 61) as u64;
        if s >= MERSENNE_61 {
            s - MERSENNE_61
        } else {
            s
        }
    } else {
        (x % q as u128) as u64
    }
}

/// `base^exponent mod q` by square-and-multiply.
pub fn mod_pow(base: u64, mut exponent: u64, q: u64) -> u64 {
    debug_assert!(q >= 2);
    let mut result = 1 % q;
    let mut b = base % q;
    while exponent > 0 {
        if exponent & 1 == 1 {
            result = mul_mod(result, b, q);
        }
        b = mul_mod(b, b, q);
        exponent >>= 1;
    }
    result
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[inline]
pub(crate) fn append_with(fp: u64, byte: u8, q: u64) -> u64 {
    let s = mul_mod(fp, BASE, q) + byte as u64;
    if s >= q {
        s - q
    } else {
        s
    }
}

#[inline]
pub(crate) fn slide_with(fp: u64, outgoing: u8, incoming: u8, power: u64, q: u64) -> u64 {
    let drop = mul_mod(outgoing as u64, power, q);
    let t = if fp >= drop { fp - drop } else { fp + q - drop };
    append_with(t, incoming, q)
}

/// `x·256 + c` modulo the Mersenne prime, reduced lazily: accepts
/// `x < 2^61 + 8` and `c < 2^62`, returns a value below `2^61 + 4` that is
/// congruent to the result. [`mersenne_reduce`] makes it canonical.
#[inline]
pub(crate) fn mersenne_shift_add(x: u64, c: u64) -> u64 {
    // x·256 = (x >> 53)·2^61 + low 61 bits, and 2^61 ≡ 1.
    let s = ((x << 8) & MERSENNE_61) + (x >> 53) + c;
    (s & MERSENNE_61) + (s >> 61)
}

#[inline]
pub(crate) fn mersenne_reduce(x: u64) -> u64 {
    if x >= MERSENNE_61 {
        x - MERSENNE_61
    } else {
        x
    }
}

/// Modulus plus the table of `256^(k−1) mod q` for every tracked window length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FingerprintContext {
    modulus: u64,
    powers: BTreeMap<u64, u64>,
}

impl FingerprintContext {
    pub fn new(modulus: u64, lengths: impl IntoIterator<Item = u64>) -> Result<Self> {
        validate_modulus(modulus)?;
        let mut powers = BTreeMap::new();
        for k in lengths {
            if k == 0 {
                return Err(Error::invalid("window length must be at least 1"));
            }
            powers.insert(k, mod_pow(BASE, k - 1, modulus));
        }
        Ok(Self { modulus, powers })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn power(&self, k: u64) -> Option<u64> {
        self.powers.get(&k).copied()
    }

    pub fn powers(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.powers.iter().map(|(&k, &p)| (k, p))
    }

    /// Horner evaluation of the whole byte string; the empty string maps to 0.
    pub fn fingerprint(&self, bytes: &[u8]) -> u64 {
        bytes
            .iter()
            .fold(0, |fp, &b| append_with(fp, b, self.modulus))
    }

    /// Fingerprint of `W·byte` given the fingerprint of `W`.
    #[inline]
    pub fn roll_append(&self, fp: u64, byte: u8) -> u64 {
        append_with(fp, byte, self.modulus)
    }

    /// Shifts a length-`k` window one byte to the right.
    pub fn roll_slide(&self, fp: u64, outgoing: u8, incoming: u8, k: u64) -> Result<u64> {
        let power = self.power(k).ok_or(Error::MissingPower(k))?;
        Ok(slide_with(fp, outgoing, incoming, power, self.modulus))
    }
}

pub(crate) fn validate_modulus(q: u64) -> Result<()> {
    if q <= BASE {
        return Err(Error::invalid(format!("modulus {q} must exceed the base 256")));
    }
    if q >= MAX_MODULUS {
        return Err(Error::invalid(format!("modulus {q} must be below 2^62")));
    }
    if !is_prime(q) {
        return Err(Error::invalid(format!("modulus {q} is not prime")));
    }
    Ok(())
}
