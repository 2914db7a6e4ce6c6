//! The δ sketch: one count-distinct sketch per sampled substring length.
//!
//! For every length k in the geometric grid `A = {⌈α^i⌉}` the sketch keeps a
//! [`CardinalitySketch`] over the fingerprints of all length-k windows seen so
//! far, plus the rolling fingerprint of the most recent window. The estimate
//! is `max_k CD_k.estimate() / k`.

use rayon::prelude::*;

use crate::cardinality::{CardinalitySketch, DEFAULT_PRECISION};
use crate::error::{Error, Result};
use crate::fingerprint::{
    append_with, mersenne_reduce, mersenne_shift_add, mul_mod, slide_with, FingerprintContext, BASE,
    MERSENNE_61,
};

/// Fixed default so sketches built by separate runs stay mergeable.
pub const DEFAULT_SEED: u64 = 0x6a09_e667_f3bc_c908;

#[derive(Clone, Debug, PartialEq)]
pub struct SketchParams {
    pub epsilon: f64,
    /// Sample rate of the length grid.
    pub alpha: f64,
    pub n_max: u64,
    pub precision: u8,
    pub modulus: u64,
    pub seed: u64,
}

impl SketchParams {
    /// Defaults: α = 1 + ε/4, 2^14 registers, modulus 2^61 − 1, fixed seed.
    pub fn new(epsilon: f64, n_max: u64) -> Result<Self> {
        let params = Self {
            epsilon,
            alpha: 1.0 + epsilon / 4.0,
            n_max,
            precision: DEFAULT_PRECISION,
            modulus: MERSENNE_61,
            seed: DEFAULT_SEED,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters for sketches whose pairwise NCD should be within `ncd_epsilon`
    /// of the exact value: each δ estimate is built with error `ncd_epsilon / 5`.
    pub fn for_ncd(ncd_epsilon: f64, n_max: u64) -> Result<Self> {
        if !(ncd_epsilon > 0.0 && ncd_epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon {ncd_epsilon} outside (0, 1]")));
        }
        Self::new(ncd_epsilon / 5.0, n_max)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_precision(mut self, precision: u8) -> Self {
        self.precision = precision;
        self
    }

    pub fn with_modulus(mut self, modulus: u64) -> Self {
        self.modulus = modulus;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::invalid(format!("epsilon {} outside (0, 1]", self.epsilon)));
        }
        if !(self.alpha.is_finite() && self.alpha > 1.0) {
            return Err(Error::invalid(format!("alpha {} must exceed 1", self.alpha)));
        }
        if self.n_max < 2 {
            return Err(Error::invalid(format!("n_max {} must be at least 2", self.n_max)));
        }
        CardinalitySketch::new(self.precision, self.seed)?;
        crate::fingerprint::validate_modulus(self.modulus)
    }

    /// Name of the first field that differs, if any.
    pub fn mismatch(&self, other: &Self) -> Option<&'static str> {
        if self.epsilon.to_bits() != other.epsilon.to_bits() {
            Some("epsilon")
        } else if self.alpha.to_bits() != other.alpha.to_bits() {
            Some("alpha")
        } else if self.n_max != other.n_max {
            Some("n_max")
        } else if self.precision != other.precision {
            Some("precision")
        } else if self.modulus != other.modulus {
            Some("modulus")
        } else if self.seed != other.seed {
            Some("seed")
        } else {
            None
        }
    }

    fn ensure_compatible(&self, other: &Self) -> Result<()> {
        match self.mismatch(other) {
            Some(field) => Err(Error::ParameterMismatch { field }),
            None => Ok(()),
        }
    }
}

/// `{⌈α^i⌉ : 0 ≤ i ≤ ⌊log_α n_max⌋}`, sorted and deduplicated.
pub fn sampled_lengths(alpha: f64, n_max: u64) -> Result<Vec<u64>> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} must exceed 1")));
    }
    if n_max < 2 {
        return Err(Error::invalid(format!("n_max {n_max} must be at least 2")));
    }
    let limit = n_max as f64;
    let mut lengths: Vec<u64> = Vec::new();
    let mut i = 0i32;
    loop {
        let x = alpha.powi(i);
        if x > limit {
            break;
        }
        let k = (x.ceil() as u64).min(n_max);
        if lengths.last() != Some(&k) {
            lengths.push(k);
        }
        i += 1;
    }
    Ok(lengths)
}

/// Tracks whether the stream so far is `a^n` for a single byte `a`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UnaryTracker {
    first: Option<u8>,
    all_equal: bool,
}

impl UnaryTracker {
    #[inline]
    pub fn observe(&mut self, byte: u8) {
        match self.first {
            None => {
                self.first = Some(byte);
                self.all_equal = true;
            }
            Some(a) => self.all_equal &= a == byte,
        }
    }

    pub fn is_unary(&self) -> bool {
        self.first.is_some() && self.all_equal
    }

    pub fn first(&self) -> Option<u8> {
        self.first
    }

    pub fn merge(&self, other: &Self) -> Self {
        match (self.first, other.first) {
            (None, _) => *other,
            (_, None) => *self,
            (Some(a), Some(b)) => Self {
                first: Some(a),
                all_equal: self.all_equal && other.all_equal && a == b,
            },
        }
    }

    pub(crate) fn from_parts(first: Option<u8>, all_equal: bool) -> Self {
        Self { first, all_equal }
    }

    pub(crate) fn all_equal(&self) -> bool {
        self.all_equal
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Lane {
    pub(crate) k: u64,
    pub(crate) power: u64,
    /// Fingerprint of the last k bytes once the stream holds at least k bytes.
    pub(crate) fingerprint: u64,
    pub(crate) counter: CardinalitySketch,
    pub(crate) frozen: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaSketch {
    pub(crate) params: SketchParams,
    pub(crate) ctx: FingerprintContext,
    pub(crate) lanes: Vec<Lane>,
    pub(crate) stream_len: u64,
    pub(crate) resumable: bool,
    /// Fingerprint of the whole stream while some length is still unfilled, else 0.
    pub(crate) prefix: u64,
    pub(crate) unary: UnaryTracker,
}

impl DeltaSketch {
    pub fn new(params: SketchParams) -> Result<Self> {
        params.validate()?;
        let lengths = sampled_lengths(params.alpha, params.n_max)?;
        let ctx = FingerprintContext::new(params.modulus, lengths.iter().copied())?;
        let counter = CardinalitySketch::new(params.precision, params.seed)?;
        let lanes = lengths
            .iter()
            .map(|&k| Lane {
                k,
                power: ctx.power(k).expect("power precomputed for every sampled length"),
                fingerprint: 0,
                counter: counter.clone(),
                frozen: false,
            })
            .collect();
        Ok(Self {
            params,
            ctx,
            lanes,
            stream_len: 0,
            resumable: true,
            prefix: 0,
            unary: UnaryTracker::default(),
        })
    }

    /// In-memory construction over a whole byte string.
    pub fn build(params: SketchParams, data: &[u8]) -> Result<Self> {
        let mut sketch = Self::new(params)?;
        sketch.extend_block(data, &[])?;
        Ok(sketch)
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    pub fn fingerprint_context(&self) -> &FingerprintContext {
        &self.ctx
    }

    pub fn lengths(&self) -> Vec<u64> {
        self.lanes.iter().map(|l| l.k).collect()
    }

    pub fn num_lengths(&self) -> usize {
        self.lanes.len()
    }

    pub fn max_length(&self) -> u64 {
        self.lanes.last().map_or(0, |l| l.k)
    }

    pub fn stream_len(&self) -> u64 {
        self.stream_len
    }

    pub fn is_resumable(&self) -> bool {
        self.resumable
    }

    pub fn is_unary(&self) -> bool {
        self.unary.is_unary()
    }

    pub fn unary_tracker(&self) -> UnaryTracker {
        self.unary
    }

    fn lane(&self, k: u64) -> Option<&Lane> {
        self.lanes
            .binary_search_by_key(&k, |l| l.k)
            .ok()
            .map(|i| &self.lanes[i])
    }

    pub fn counter(&self, k: u64) -> Option<&CardinalitySketch> {
        self.lane(k).map(|l| &l.counter)
    }

    pub fn counters(&self) -> impl Iterator<Item = (u64, &CardinalitySketch)> {
        self.lanes.iter().map(|l| (l.k, &l.counter))
    }

    /// Rolling fingerprint of the last k bytes, when the sketch can still extend
    /// length k and the stream already holds k bytes.
    pub fn fingerprint(&self, k: u64) -> Option<u64> {
        let lane = self.lane(k)?;
        (self.resumable && !lane.frozen && k <= self.stream_len).then_some(lane.fingerprint)
    }

    pub fn frozen_lengths(&self) -> Vec<u64> {
        self.lanes.iter().filter(|l| l.frozen).map(|l| l.k).collect()
    }

    /// Stops updating every length above `k`.
    pub fn freeze_lengths_above(&mut self, k: u64) {
        for lane in self.lanes.iter_mut().filter(|l| l.k > k) {
            lane.frozen = true;
        }
    }

    /// Drops the rolling state; the result can be estimated and merged only.
    pub fn seal(&mut self) {
        self.resumable = false;
        self.prefix = 0;
        for lane in &mut self.lanes {
            lane.fingerprint = 0;
            lane.frozen = false;
        }
    }

    fn check_extendable(&self, extra: u64) -> Result<()> {
        if !self.resumable {
            return Err(Error::NonResumable);
        }
        if self.stream_len + extra > self.params.n_max {
            return Err(Error::CapacityExceeded { n_max: self.params.n_max });
        }
        Ok(())
    }

    /// Appends one byte. `history(k)` must return the byte k positions back
    /// from the end of the current stream (k = 1 is the last byte), or `None`
    /// when that byte is unavailable, which freezes length k.
    pub fn extend<H>(&mut self, byte: u8, mut history: H) -> Result<()>
    where
        H: FnMut(u64) -> Option<u8>,
    {
        self.check_extendable(1)?;
        let q = self.params.modulus;
        let len = self.stream_len;
        let new_len = len + 1;
        let prefix = append_with(self.prefix, byte, q);
        for lane in &mut self.lanes {
            if lane.frozen || lane.k > new_len {
                continue;
            }
            if lane.k == new_len {
                lane.fingerprint = prefix;
            } else {
                match history(lane.k) {
                    Some(out) => {
                        lane.fingerprint = slide_with(lane.fingerprint, out, byte, lane.power, q);
                    }
                    None => {
                        lane.frozen = true;
                        continue;
                    }
                }
            }
            lane.counter.add(lane.fingerprint);
        }
        self.stream_len = new_len;
        self.prefix = if new_len < self.max_length() { prefix } else { 0 };
        self.unary.observe(byte);
        Ok(())
    }

    /// Appends a block of bytes. `tail` holds the bytes that immediately precede
    /// the block (oldest first); lengths whose history reaches beyond `tail`
    /// are frozen. Lengths are processed in parallel.
    pub fn extend_block(&mut self, block: &[u8], tail: &[u8]) -> Result<()> {
        self.extend_block_within(block, tail, u64::MAX)
    }

    /// Like [`extend_block`](Self::extend_block), but history is limited to the
    /// last `reach` bytes at every step, as with a sliding window of that size.
    /// Lengths above `reach` freeze as soon as they would need to slide.
    pub fn extend_block_within(&mut self, block: &[u8], tail: &[u8], reach: u64) -> Result<()> {
        self.check_extendable(block.len() as u64)?;
        if block.is_empty() {
            return Ok(());
        }
        let q = self.params.modulus;
        let len = self.stream_len;
        let prefix = self.prefix;
        self.lanes
            .par_iter_mut()
            .with_min_len(4)
            .for_each(|lane| extend_lane(lane, block, tail, len, prefix, q, reach));
        let new_len = len + block.len() as u64;
        self.prefix = if new_len < self.max_length() {
            block.iter().fold(prefix, |fp, &b| append_with(fp, b, q))
        } else {
            0
        };
        self.stream_len = new_len;
        for &b in block {
            self.unary.observe(b);
        }
        Ok(())
    }

    /// `max_k CD_k.estimate()/k`; exactly 1 for `a^n` and 0 for the empty stream.
    pub fn estimate(&self) -> f64 {
        if self.unary.is_unary() {
            return 1.0;
        }
        self.lanes
            .iter()
            .take_while(|l| l.k <= self.stream_len)
            .map(|l| l.counter.estimate() / l.k as f64)
            .fold(0.0, f64::max)
    }

    /// Per-length distinct-count estimates, for lengths covered by the stream.
    pub fn length_estimates(&self) -> Vec<(u64, f64)> {
        self.lanes
            .iter()
            .take_while(|l| l.k <= self.stream_len)
            .map(|l| (l.k, l.counter.estimate()))
            .collect()
    }

    /// Sketch of the pair of strings: register-wise merge per length.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        self.params.ensure_compatible(&other.params)?;
        let lanes = self
            .lanes
            .iter()
            .zip(&other.lanes)
            .map(|(a, b)| {
                Ok(Lane {
                    k: a.k,
                    power: a.power,
                    fingerprint: 0,
                    counter: a.counter.merged(&b.counter)?,
                    frozen: false,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params: self.params.clone(),
            ctx: self.ctx.clone(),
            lanes,
            stream_len: self.stream_len.max(other.stream_len),
            resumable: false,
            prefix: 0,
            unary: self.unary.merge(&other.unary),
        })
    }

    /// Same value as `self.merge(other)?.estimate()` without allocating the
    /// merged registers.
    pub fn union_estimate(&self, other: &Self) -> Result<f64> {
        self.params.ensure_compatible(&other.params)?;
        if self.unary.merge(&other.unary).is_unary() {
            return Ok(1.0);
        }
        let covered = self.stream_len.max(other.stream_len);
        let mut best = 0.0f64;
        for (a, b) in self.lanes.iter().zip(&other.lanes) {
            if a.k > covered {
                break;
            }
            best = best.max(a.counter.union_estimate(&b.counter)? / a.k as f64);
        }
        Ok(best)
    }

    /// Bytes held by registers, fingerprints and the power table.
    pub fn memory_bytes(&self) -> usize {
        let per_lane = std::mem::size_of::<Lane>() + (1usize << self.params.precision);
        self.lanes.len() * (per_lane + 2 * std::mem::size_of::<u64>())
    }

    pub fn serialize(&self) -> Vec<u8> {
        crate::format::encode(self)
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        crate::format::decode(bytes)
    }
}

fn extend_lane(
    lane: &mut Lane,
    block: &[u8],
    tail: &[u8],
    len: u64,
    prefix: u64,
    q: u64,
    reach: u64,
) {
    if lane.frozen {
        return;
    }
    let k = lane.k;
    let b = block.len() as u64;
    if k > len + b {
        return;
    }
    // First block index whose window is complete after appending it.
    let t = if k > len {
        let fill = (k - len - 1) as usize;
        let fp = block[..=fill]
            .iter()
            .fold(prefix, |fp, &x| append_with(fp, x, q));
        lane.fingerprint = fp;
        lane.counter.add(fp);
        fill + 1
    } else {
        0
    };
    if k > reach && t < block.len() {
        lane.frozen = true;
        return;
    }
    let ku = k as usize;
    // Outgoing byte for block index t sits at global index len + t − k.
    if t < ku && ku - t > tail.len() {
        // History starts before the retained tail: cannot slide.
        lane.frozen = true;
        return;
    }
    let outgoing = |t: usize| {
        if t < ku {
            tail[tail.len() + t - ku]
        } else {
            block[t - ku]
        }
    };
    if q == MERSENNE_61 {
        // q − out·256^k for every possible outgoing byte.
        let shifted = mul_mod(lane.power, BASE, q);
        let mut removal = [0u64; 256];
        for (b, slot) in removal.iter_mut().enumerate() {
            *slot = MERSENNE_61 - mul_mod(b as u64, shifted, q);
        }
        let mut lazy = lane.fingerprint;
        for (t, &inc) in block.iter().enumerate().skip(t) {
            lazy = mersenne_shift_add(lazy, removal[outgoing(t) as usize] + inc as u64);
            lane.counter.add(mersenne_reduce(lazy));
        }
        lane.fingerprint = mersenne_reduce(lazy);
    } else {
        let mut fp = lane.fingerprint;
        for (t, &inc) in block.iter().enumerate().skip(t) {
            fp = slide_with(fp, outgoing(t), inc, lane.power, q);
            lane.counter.add(fp);
        }
        lane.fingerprint = fp;
    }
}
