//! One-pass sketch construction in sub-linear working space.
//!
//! Short lengths take their outgoing byte from a window of the last `K` bytes.
//! Lengths above `K` read it through bookmarks into the dynamic RLBWT of the
//! reversed stream, as long as that structure stays small enough; once its run
//! count reaches the drop threshold it is discarded and those lengths freeze.

use std::collections::VecDeque;
use std::io::{ErrorKind, Read};

use crate::error::{Error, Result};
use crate::rlbwt::{Bookmark, DynamicRlbwt};
use crate::sketch::{DeltaSketch, SketchParams};

pub const DEFAULT_BLOCK_SIZE: usize = 1 << 16;

/// `⌈√n · log₂ n⌉`, capped at `n` and at least 1.
pub fn default_window(n: u64) -> u64 {
    if n <= 2 {
        return n.max(1);
    }
    let nf = n as f64;
    ((nf.sqrt() * nf.log2()).ceil() as u64).clamp(1, n)
}

/// Run count `8 n (log₂ n)² / K` at which the RLBWT is discarded.
pub fn drop_threshold(n: u64, window: u64) -> f64 {
    let l = (n.max(2) as f64).log2();
    8.0 * n as f64 * l * l / window.max(1) as f64
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamConfig {
    /// Window size `K`; defaults to [`default_window`] of `n_max`.
    pub window: Option<u64>,
    /// Track lengths above `K` through the RLBWT.
    pub rlbwt: bool,
    /// Bytes buffered before a parallel update while the RLBWT is inactive.
    pub block_size: usize,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            window: None,
            rlbwt: false,
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }
}

pub struct StreamEstimator {
    sketch: DeltaSketch,
    k: u64,
    threshold: f64,
    window: VecDeque<u8>,
    pending: Vec<u8>,
    block_size: usize,
    rlbwt: Option<DynamicRlbwt>,
    /// One per sampled length above `K`, ascending.
    bookmarks: Vec<Bookmark>,
    dropped: bool,
    bytes_seen: u64,
    peak: usize,
}

impl StreamEstimator {
    pub fn new(params: SketchParams, config: StreamConfig) -> Result<Self> {
        let n = params.n_max;
        if config.rlbwt && params.epsilon < (n as f64).powf(-0.5) {
            return Err(Error::invalid(format!(
                "epsilon {} is below n^-1/2 for n = {n}; not supported with the RLBWT",
                params.epsilon
            )));
        }
        let sketch = DeltaSketch::new(params)?;
        let k = match config.window {
            Some(0) => return Err(Error::invalid("window size must be positive")),
            Some(w) => w.min(n.max(1)),
            None => default_window(n),
        };
        if config.block_size == 0 {
            return Err(Error::invalid("block size must be positive"));
        }
        let mut bookmarks = Vec::new();
        let mut rlbwt = None;
        if config.rlbwt && sketch.max_length() > k {
            bookmarks = sketch
                .lengths()
                .into_iter()
                .filter(|&len| len > k)
                .map(Bookmark::pending)
                .collect();
            rlbwt = Some(DynamicRlbwt::new());
        }
        let mut est = Self {
            sketch,
            k,
            threshold: drop_threshold(n, k),
            window: VecDeque::with_capacity(k.min(1 << 26) as usize),
            pending: Vec::new(),
            block_size: config.block_size,
            rlbwt,
            bookmarks,
            dropped: false,
            bytes_seen: 0,
            peak: 0,
        };
        est.peak = est.aux_bytes();
        Ok(est)
    }

    pub fn window_capacity(&self) -> u64 {
        self.k
    }

    pub fn drop_threshold(&self) -> f64 {
        self.threshold
    }

    pub fn rlbwt_active(&self) -> bool {
        self.rlbwt.is_some()
    }

    pub fn rlbwt(&self) -> Option<&DynamicRlbwt> {
        self.rlbwt.as_ref()
    }

    pub fn bookmarks(&self) -> &[Bookmark] {
        &self.bookmarks
    }

    pub fn has_dropped(&self) -> bool {
        self.dropped
    }

    pub fn bytes_seen(&self) -> u64 {
        self.bytes_seen
    }

    /// Working memory in bytes: window, block buffer, RLBWT, bookmarks and sketch.
    pub fn aux_bytes(&self) -> usize {
        let window = self.k as usize;
        let block = if self.rlbwt.is_some() { 0 } else { self.block_size };
        let rlbwt = self.rlbwt.as_ref().map_or(0, DynamicRlbwt::memory_bytes);
        let marks = self.bookmarks.len() * std::mem::size_of::<Bookmark>();
        window + block + rlbwt + marks + self.sketch.memory_bytes()
    }

    pub fn peak_aux_bytes(&self) -> usize {
        self.peak
    }

    pub fn push(&mut self, byte: u8) -> Result<()> {
        self.push_slice(std::slice::from_ref(&byte))
    }

    pub fn push_slice(&mut self, mut data: &[u8]) -> Result<()> {
        let n_max = self.sketch.params().n_max;
        if self.bytes_seen + data.len() as u64 > n_max {
            return Err(Error::CapacityExceeded { n_max });
        }
        while !data.is_empty() {
            if self.rlbwt.is_some() {
                self.step(data[0])?;
                data = &data[1..];
                continue;
            }
            let room = self.block_size - self.pending.len();
            let take = room.min(data.len());
            self.pending.extend_from_slice(&data[..take]);
            self.bytes_seen += take as u64;
            data = &data[take..];
            if self.pending.len() == self.block_size {
                self.flush()?;
            }
        }
        Ok(())
    }

    /// Streams everything from `reader`, returning the number of bytes read.
    pub fn read_from<R: Read>(&mut self, mut reader: R) -> Result<u64> {
        let mut buf = vec![0u8; 1 << 16];
        let mut total = 0;
        loop {
            let got = match reader.read(&mut buf) {
                Ok(0) => return Ok(total),
                Ok(got) => got,
                Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            };
            self.push_slice(&buf[..got])?;
            total += got as u64;
        }
    }

    fn flush(&mut self) -> Result<()> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let tail = self.window.make_contiguous();
        self.sketch.extend_block_within(&self.pending, tail, self.k)?;
        let cap = self.k as usize;
        if self.pending.len() >= cap {
            self.window.clear();
            self.window.extend(&self.pending[self.pending.len() - cap..]);
        } else {
            let excess = (self.window.len() + self.pending.len()).saturating_sub(cap);
            self.window.drain(..excess);
            self.window.extend(&self.pending);
        }
        self.pending.clear();
        Ok(())
    }

    /// One byte with the RLBWT active.
    fn step(&mut self, a: u8) -> Result<()> {
        let k_win = self.k;
        let window = &self.window;
        let bookmarks = &self.bookmarks;
        let rlbwt = self.rlbwt.as_ref().expect("per-byte path needs the RLBWT");
        self.sketch.extend(a, |k| {
            if k <= k_win {
                window.len().checked_sub(k as usize).map(|i| window[i])
            } else {
                let i = bookmarks.binary_search_by_key(&k, Bookmark::k).ok()?;
                rlbwt.bookmark_read(&bookmarks[i])
            }
        })?;
        self.bytes_seen += 1;

        if self.window.len() as u64 == k_win {
            self.window.pop_front();
        }
        self.window.push_back(a);

        let rlbwt = self.rlbwt.as_mut().unwrap();
        let inserted = rlbwt.extend(a);
        let len = rlbwt.data_len();
        for bm in &mut self.bookmarks {
            if bm.is_active() {
                rlbwt.bookmark_advance(bm, inserted)?;
            } else if bm.k() == len {
                *bm = rlbwt.bookmark_init(len)?;
            }
        }
        self.peak = self.peak.max(self.aux_bytes());

        let (_, r_prime) = self.rlbwt.as_ref().unwrap().runs();
        if r_prime as f64 >= self.threshold {
            self.drop_rlbwt();
        }
        Ok(())
    }

    fn drop_rlbwt(&mut self) {
        self.rlbwt = None;
        for bm in &mut self.bookmarks {
            bm.retire();
        }
        self.sketch.freeze_lengths_above(self.k);
        self.dropped = true;
    }

    /// Flushes buffered bytes and returns the sketch.
    pub fn finalize(mut self) -> Result<DeltaSketch> {
        self.flush()?;
        self.peak = self.peak.max(self.aux_bytes());
        Ok(self.sketch)
    }

    /// Current estimate, flushing buffered bytes first.
    pub fn estimate(&mut self) -> Result<f64> {
        self.flush()?;
        self.peak = self.peak.max(self.aux_bytes());
        Ok(self.sketch.estimate())
    }

    /// The sketch built so far, flushing buffered bytes first.
    pub fn sketch(&mut self) -> Result<&DeltaSketch> {
        self.flush()?;
        Ok(&self.sketch)
    }
}
