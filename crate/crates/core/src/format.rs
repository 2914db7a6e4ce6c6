//! DSK1 binary layout, little-endian throughout:
//!
//! ```text
//! magic "DSK1" | version u16 | epsilon f64 | alpha f64 | n_max u64 | modulus u64
//! | precision u8 | seed u64 | resumable u8 | |A| u32 | A entries u64...
//! | register blocks (2^p bytes per length) | stream_len u64
//! | unary flags u8 | unary first byte u8
//! | fingerprints u64 per length (resumable only) | crc32 u32
//! ```
//!
//! Lengths that the stream has not filled yet store the whole-stream fingerprint.

use crate::cardinality::CardinalitySketch;
use crate::error::{Error, Result};
use crate::fingerprint::FingerprintContext;
use crate::sketch::{sampled_lengths, DeltaSketch, Lane, SketchParams, UnaryTracker};

pub const MAGIC: &[u8; 4] = b"DSK1";
pub const VERSION: u16 = 1;

const UNARY_SEEN: u8 = 1;
const UNARY_ALL_EQUAL: u8 = 2;

pub(crate) fn encode(sketch: &DeltaSketch) -> Vec<u8> {
    let p = &sketch.params;
    let resumable = sketch.resumable && sketch.lanes.iter().all(|l| !l.frozen);
    let m = 1usize << p.precision;
    let mut out = Vec::with_capacity(64 + sketch.lanes.len() * (m + 16));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&p.epsilon.to_le_bytes());
    out.extend_from_slice(&p.alpha.to_le_bytes());
    out.extend_from_slice(&p.n_max.to_le_bytes());
    out.extend_from_slice(&p.modulus.to_le_bytes());
    out.push(p.precision);
    out.extend_from_slice(&p.seed.to_le_bytes());
    out.push(resumable as u8);
    out.extend_from_slice(&(sketch.lanes.len() as u32).to_le_bytes());
    for lane in &sketch.lanes {
        out.extend_from_slice(&lane.k.to_le_bytes());
    }
    for lane in &sketch.lanes {
        out.extend_from_slice(lane.counter.registers());
    }
    out.extend_from_slice(&sketch.stream_len.to_le_bytes());
    let unary = sketch.unary;
    let mut flags = 0;
    if unary.first().is_some() {
        flags |= UNARY_SEEN;
    }
    if unary.all_equal() {
        flags |= UNARY_ALL_EQUAL;
    }
    out.push(flags);
    out.push(unary.first().unwrap_or(0));
    if resumable {
        for lane in &sketch.lanes {
            let fp = if lane.k <= sketch.stream_len {
                lane.fingerprint
            } else {
                sketch.prefix
            };
            out.extend_from_slice(&fp.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format("truncated input"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<DeltaSketch> {
    if bytes.len() < MAGIC.len() + 2 + 4 {
        return Err(Error::format("truncated input"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format("bad magic"));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let mut r = Reader { buf: body, pos: 4 };
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::format(format!("unsupported version {version}")));
    }
    let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32fast::hash(body) != stored_crc {
        return Err(Error::format("checksum mismatch"));
    }

    let params = SketchParams {
        epsilon: r.f64()?,
        alpha: r.f64()?,
        n_max: r.u64()?,
        modulus: r.u64()?,
        precision: r.u8()?,
        seed: r.u64()?,
    };
    params
        .validate()
        .map_err(|e| Error::format(format!("invalid parameters: {e}")))?;
    let resumable = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(Error::format(format!("bad resumable flag {other}"))),
    };
    let count = r.u32()? as usize;
    let expected = sampled_lengths(params.alpha, params.n_max)?;
    if count != expected.len() {
        return Err(Error::format("length table size does not match parameters"));
    }
    let mut lengths = Vec::with_capacity(count);
    for _ in 0..count {
        lengths.push(r.u64()?);
    }
    if lengths != expected {
        return Err(Error::format("length table does not match parameters"));
    }
    let ctx = FingerprintContext::new(params.modulus, lengths.iter().copied())?;
    let m = 1usize << params.precision;
    let mut counters = Vec::with_capacity(count);
    for _ in 0..count {
        let regs = r.take(m)?.to_vec();
        counters.push(CardinalitySketch::from_registers(params.precision, params.seed, regs)?);
    }
    let stream_len = r.u64()?;
    if stream_len > params.n_max {
        return Err(Error::format("stream length exceeds n_max"));
    }
    let flags = r.u8()?;
    let first = r.u8()?;
    if flags & !(UNARY_SEEN | UNARY_ALL_EQUAL) != 0 {
        return Err(Error::format("bad unary flags"));
    }
    let seen = flags & UNARY_SEEN != 0;
    if seen != (stream_len > 0) {
        return Err(Error::format("unary state inconsistent with stream length"));
    }
    let unary = UnaryTracker::from_parts(seen.then_some(first), flags & UNARY_ALL_EQUAL != 0);

    let mut fingerprints = vec![0u64; count];
    let mut prefix = 0;
    if resumable {
        for (fp, &k) in fingerprints.iter_mut().zip(&lengths) {
            let v = r.u64()?;
            if v >= params.modulus {
                return Err(Error::format("fingerprint out of range"));
            }
            if k <= stream_len {
                *fp = v;
            } else {
                prefix = v;
            }
        }
    }
    if r.pos != body.len() {
        return Err(Error::format("trailing bytes"));
    }

    let lanes = lengths
        .iter()
        .zip(counters)
        .zip(fingerprints)
        .map(|((&k, counter), fingerprint)| Lane {
            k,
            power: ctx.power(k).expect("power computed for every length"),
            fingerprint,
            counter,
            frozen: false,
        })
        .collect();
    Ok(DeltaSketch {
        params,
        ctx,
        lanes,
        stream_len,
        resumable,
        prefix,
        unary,
    })
}
