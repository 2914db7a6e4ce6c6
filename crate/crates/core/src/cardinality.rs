//! Register-based mergeable count-distinct sketch.
//!
//! Items are re-hashed with a seeded 64-bit mixer; the top `p` bits choose a
//! register and the register keeps the maximum leading-zero rank of the
//! remaining bits. Estimation uses linear counting while the occupancy-based
//! value stays at or below m/2, and Ertl's improved raw estimator (no
//! empirical bias tables) above that.

use crate::error::{Error, Result};

pub const MIN_PRECISION: u8 = 4;
pub const MAX_PRECISION: u8 = 20;
pub const DEFAULT_PRECISION: u8 = 14;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CardinalitySketch {
    precision: u8,
    seed: u64,
    key: u64,
    registers: Vec<u8>,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn fmix64(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}

impl CardinalitySketch {
    pub fn new(precision: u8, seed: u64) -> Result<Self> {
        check_precision(precision)?;
        Ok(Self {
            precision,
            seed,
            key: splitmix64(seed),
            registers: vec![0; 1 << precision],
        })
    }

    pub fn precision(&self) -> u8 {
        self.precision
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn registers(&self) -> &[u8] {
        &self.registers
    }

    pub fn num_registers(&self) -> usize {
        self.registers.len()
    }

    /// Largest value a register can hold: 64 − p + 1.
    pub fn max_rank(&self) -> u8 {
        65 - self.precision
    }

    pub fn is_empty(&self) -> bool {
        self.registers.iter().all(|&r| r == 0)
    }

    #[inline]
    pub fn add(&mut self, item: u64) {
        let h = fmix64(item ^ self.key);
        let p = self.precision as u32;
        let index = (h >> (64 - p)) as usize;
        // The guard bit caps the rank at 65 − p when the remaining bits are zero.
        let rank = ((h << p) | (1 << (p - 1))).leading_zeros() as u8 + 1;
        let slot = &mut self.registers[index];
        *slot = (*slot).max(rank);
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.precision != other.precision {
            return Err(Error::ParameterMismatch { field: "precision" });
        }
        if self.seed != other.seed {
            return Err(Error::ParameterMismatch { field: "seed" });
        }
        Ok(())
    }

    /// Register-wise maximum, in place.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        for (a, &b) in self.registers.iter_mut().zip(&other.registers) {
            if b > *a {
                *a = b;
            }
        }
        Ok(())
    }

    pub fn merged(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        out.merge(other)?;
        Ok(out)
    }

    pub fn estimate(&self) -> f64 {
        let mut hist = vec![0u32; self.max_rank() as usize + 1];
        for &r in &self.registers {
            hist[r as usize] += 1;
        }
        estimate_from_histogram(&hist, self.precision)
    }

    /// Estimate of the union without materializing the merged registers.
    pub fn union_estimate(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let mut hist = vec![0u32; self.max_rank() as usize + 1];
        for (&a, &b) in self.registers.iter().zip(&other.registers) {
            hist[a.max(b) as usize] += 1;
        }
        Ok(estimate_from_histogram(&hist, self.precision))
    }

    /// `p` (1 byte), seed (8 bytes LE), then the 2^p registers.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(9 + self.registers.len());
        out.push(self.precision);
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.registers);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (&precision, rest) = bytes
            .split_first()
            .ok_or_else(|| Error::format("empty cardinality sketch"))?;
        check_precision(precision).map_err(|_| Error::format("bad register precision"))?;
        if rest.len() != 8 + (1usize << precision) {
            return Err(Error::format("cardinality sketch length does not match precision"));
        }
        let seed = u64::from_le_bytes(rest[..8].try_into().unwrap());
        Self::from_registers(precision, seed, rest[8..].to_vec())
    }

    pub(crate) fn from_registers(precision: u8, seed: u64, registers: Vec<u8>) -> Result<Self> {
        check_precision(precision)?;
        if registers.len() != 1 << precision {
            return Err(Error::format("register block has the wrong size"));
        }
        let max_rank = 65 - precision;
        if registers.iter().any(|&r| r > max_rank) {
            return Err(Error::format("register value out of range"));
        }
        Ok(Self {
            precision,
            seed,
            key: splitmix64(seed),
            registers,
        })
    }
}

fn check_precision(precision: u8) -> Result<()> {
    if !(MIN_PRECISION..=MAX_PRECISION).contains(&precision) {
        return Err(Error::invalid(format!(
            "register precision {precision} outside {MIN_PRECISION}..={MAX_PRECISION}"
        )));
    }
    Ok(())
}

fn sigma(mut x: f64) -> f64 {
    if x == 1.0 {
        return f64::INFINITY;
    }
    let mut y = 1.0;
    let mut z = x;
    loop {
        x *= x;
        let prev = z;
        z += x * y;
        y += y;
        if prev == z {
            return z;
        }
    }
}

fn tau(mut x: f64) -> f64 {
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    let mut y = 1.0;
    let mut z = 1.0 - x;
    loop {
        x = x.sqrt();
        let prev = z;
        y *= 0.5;
        z -= (1.0 - x).powi(2) * y;
        if prev == z {
            return z / 3.0;
        }
    }
}

/// `hist[v]` = number of registers holding `v`, for v in 0..=65−p.
fn estimate_from_histogram(hist: &[u32], precision: u8) -> f64 {
    let m = (1u64 << precision) as f64;
    let zeros = hist[0] as f64;
    if zeros == m {
        return 0.0;
    }
    if zeros > 0.0 {
        let linear = m * (m / zeros).ln();
        if linear <= m / 2.0 {
            return linear;
        }
    }
    let top = hist.len() - 1;
    let mut z = m * tau(1.0 - hist[top] as f64 / m);
    for k in (1..top).rev() {
        z += hist[k] as f64;
        z *= 0.5;
    }
    z += m * sigma(zeros / m);
    let alpha_inf = 0.5 / std::f64::consts::LN_2;
    (alpha_inf * m * m / z).max(m / 2.0)
}
