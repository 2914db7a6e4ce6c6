//! Dynamic run-length BWT of the reversed stream.
//!
//! Appending a byte `a` to the stream `S` prepends it to `S^R`, which is a
//! backward extension of the BWT: the sentinel is overwritten by `a` and a new
//! sentinel is inserted at the LF image of its old position. Positions are
//! 1-based throughout the public API.
//!
//! Internally the sentinel is kept out of the run sequence. The stored string
//! `BWT'` is the BWT with `$` deleted, so `r'` is simply the number of run nodes.

mod tree;

use std::fmt;

use crate::error::{Error, Result};
use tree::{NodeId, WeightedSeq, NIL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Sentinel,
    Byte(u8),
}

impl Symbol {
    pub fn byte(self) -> Option<u8> {
        match self {
            Symbol::Sentinel => None,
            Symbol::Byte(b) => Some(b),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Symbol::Sentinel => f.write_str("$"),
            Symbol::Byte(b) if b.is_ascii_graphic() && b != b'$' && b != b'\\' => {
                write!(f, "{}", b as char)
            }
            Symbol::Byte(b) => write!(f, "\\x{b:02x}"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct RunInfo {
    symbol: u8,
    link: NodeId,
}

/// Prefix sums over the 256 byte counts.
#[derive(Clone, Debug)]
struct Fenwick([u64; 257]);

impl Fenwick {
    fn add(&mut self, c: u8) {
        let mut i = c as usize + 1;
        while i <= 256 {
            self.0[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Occurrences of bytes strictly smaller than `c`.
    fn less(&self, c: u8) -> u64 {
        let mut i = c as usize;
        let mut acc = 0;
        while i > 0 {
            acc += self.0[i];
            i &= i - 1;
        }
        acc
    }
}

#[derive(Clone, Debug)]
pub struct DynamicRlbwt {
    runs: WeightedSeq<RunInfo>,
    by_symbol: Vec<WeightedSeq<NodeId>>,
    less: Fenwick,
    counts: [u64; 256],
    sentinel: u64,
    data_len: u64,
}

impl Default for DynamicRlbwt {
    fn default() -> Self {
        Self::new()
    }
}

impl DynamicRlbwt {
    /// The BWT of the empty stream, which is the lone sentinel.
    pub fn new() -> Self {
        Self {
            runs: WeightedSeq::new(0x9e37_79b9_7f4a_7c15),
            by_symbol: (0..256u64)
                .map(|c| WeightedSeq::new(c.wrapping_mul(0xbf58_476d_1ce4_e5b9) ^ 0x94d0_49bb))
                .collect(),
            less: Fenwick([0; 257]),
            counts: [0; 256],
            sentinel: 1,
            data_len: 0,
        }
    }

    /// Builds the structure by extending with every byte of `data`.
    pub fn from_stream(data: &[u8]) -> Self {
        let mut b = Self::new();
        for &a in data {
            b.extend(a);
        }
        b
    }

    /// Total length including the sentinel.
    pub fn len(&self) -> u64 {
        self.data_len + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of stream bytes seen.
    pub fn data_len(&self) -> u64 {
        self.data_len
    }

    pub fn sentinel_position(&self) -> u64 {
        self.sentinel
    }

    pub fn count(&self, c: u8) -> u64 {
        self.counts[c as usize]
    }

    fn check(&self, j: u64) -> Result<()> {
        if j == 0 || j > self.len() {
            return Err(Error::OutOfRange {
                pos: j,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// Number of `BWT'` characters at full positions `1..=j`, for `j != sentinel`.
    #[inline]
    fn stripped_prefix(&self, j: u64) -> u64 {
        if j < self.sentinel {
            j
        } else {
            j - 1
        }
    }

    pub fn access(&self, j: u64) -> Result<Symbol> {
        self.check(j)?;
        if j == self.sentinel {
            return Ok(Symbol::Sentinel);
        }
        let (x, _) = self
            .runs
            .locate(self.stripped_prefix(j) - 1)
            .expect("position inside the run sequence");
        Ok(Symbol::Byte(self.runs.payload(x).symbol))
    }

    /// Symbol at `BWT'` prefix length `l` together with its inclusive rank.
    fn symbol_rank(&self, l: u64) -> (u8, u64) {
        let (x, off) = self.runs.locate(l - 1).expect("position inside the run sequence");
        let info = self.runs.payload(x);
        let before = self.by_symbol[info.symbol as usize].prefix(info.link);
        (info.symbol, before + off + 1)
    }

    pub fn lf(&self, j: u64) -> Result<u64> {
        self.check(j)?;
        if j == self.sentinel {
            return Err(Error::SentinelPosition(j));
        }
        let (c, rank) = self.symbol_rank(self.stripped_prefix(j));
        Ok(1 + self.less.less(c) + rank)
    }

    /// Appends `a` to the stream and returns the new sentinel position.
    pub fn extend(&mut self, a: u8) -> u64 {
        let t = self.sentinel - 1;
        self.insert_stripped(t, a);
        self.counts[a as usize] += 1;
        self.less.add(a);
        self.data_len += 1;
        let (c, rank) = self.symbol_rank(t + 1);
        debug_assert_eq!(c, a);
        self.sentinel = 1 + self.less.less(a) + rank;
        self.sentinel
    }

    fn grow(&mut self, x: NodeId) {
        let info = self.runs.payload(x);
        self.runs.add_weight(x, 1);
        self.by_symbol[info.symbol as usize].add_weight(info.link, 1);
    }

    /// Inserts a fresh run of `c` after run `anchor`, starting at `BWT'` index `at`.
    fn new_run(&mut self, anchor: Option<NodeId>, at: u64, c: u8, weight: u64) -> NodeId {
        let runs = &self.runs;
        let seq = &mut self.by_symbol[c as usize];
        let sym_anchor = seq.find_last(|y| runs.prefix(seq.payload(y)) < at);
        let sym = seq.insert_after(sym_anchor, weight, NIL);
        let run = self.runs.insert_after(anchor, weight, RunInfo { symbol: c, link: sym });
        self.by_symbol[c as usize].set_payload(sym, run);
        run
    }

    /// Inserts byte `a` into `BWT'` so that it ends up at 0-based index `t`.
    fn insert_stripped(&mut self, t: u64, a: u8) {
        if self.runs.is_empty() {
            self.new_run(None, 0, a, 1);
            return;
        }
        if t == 0 {
            let (first, _) = self.runs.locate(0).unwrap();
            if self.runs.payload(first).symbol == a {
                self.grow(first);
            } else {
                self.new_run(None, 0, a, 1);
            }
            return;
        }
        let (x, off) = self.runs.locate(t - 1).unwrap();
        let info = self.runs.payload(x);
        let w = self.runs.weight(x);
        if info.symbol == a {
            self.grow(x);
        } else if off + 1 < w {
            // Split the run around the new character.
            let rest = w - (off + 1);
            let sym_anchor = {
                let runs = &self.runs;
                let seq = &self.by_symbol[a as usize];
                seq.find_last(|y| runs.prefix(seq.payload(y)) < t)
            };
            self.runs.add_weight(x, -(rest as i64));
            self.by_symbol[info.symbol as usize].add_weight(info.link, -(rest as i64));
            let sym = self.by_symbol[a as usize].insert_after(sym_anchor, 1, NIL);
            let mid = self.runs.insert_after(Some(x), 1, RunInfo { symbol: a, link: sym });
            self.by_symbol[a as usize].set_payload(sym, mid);
            let tail_sym = self.by_symbol[info.symbol as usize].insert_after(Some(info.link), rest, NIL);
            let tail = self.runs.insert_after(
                Some(mid),
                rest,
                RunInfo {
                    symbol: info.symbol,
                    link: tail_sym,
                },
            );
            self.by_symbol[info.symbol as usize].set_payload(tail_sym, tail);
        } else {
            match self.runs.locate(t) {
                Some((y, _)) if self.runs.payload(y).symbol == a => self.grow(y),
                _ => {
                    self.new_run(Some(x), t, a, 1);
                }
            }
        }
    }

    /// `(r, r')`: runs with the sentinel, and runs once it is deleted.
    pub fn runs(&self) -> (u64, u64) {
        let r_prime = self.runs.len() as u64;
        let s = self.sentinel;
        // The sentinel splits a run when its two neighbours share a run.
        let splits = s > 1 && s < self.len() && {
            let (x, off) = self.runs.locate(s - 2).unwrap();
            off + 1 < self.runs.weight(x)
        };
        (r_prime + 1 + splits as u64, r_prime)
    }

    /// Number of run nodes currently allocated.
    pub fn node_count(&self) -> usize {
        self.runs.len()
    }

    /// Runs of the full BWT in order, sentinel included.
    pub fn run_list(&self) -> Vec<(Symbol, u64)> {
        let mut out = Vec::with_capacity(self.runs.len() + 2);
        let mut pos = 0;
        let cut = self.sentinel - 1;
        let mut placed = false;
        for x in self.runs.in_order() {
            let sym = Symbol::Byte(self.runs.payload(x).symbol);
            let w = self.runs.weight(x);
            if !placed && cut < pos + w {
                if cut > pos {
                    out.push((sym, cut - pos));
                }
                out.push((Symbol::Sentinel, 1));
                if pos + w > cut {
                    out.push((sym, pos + w - cut));
                }
                placed = true;
            } else {
                out.push((sym, w));
            }
            pos += w;
        }
        if !placed {
            out.push((Symbol::Sentinel, 1));
        }
        out
    }

    pub fn to_symbols(&self) -> Vec<Symbol> {
        self.run_list()
            .into_iter()
            .flat_map(|(s, w)| std::iter::repeat_n(s, w as usize))
            .collect()
    }

    /// Text dump of the runs, e.g. `b2 $1 a1 b1 a1`.
    pub fn dump_runs(&self) -> String {
        let parts: Vec<String> = self.run_list().iter().map(|(s, w)| format!("{s}{w}")).collect();
        parts.join(" ")
    }

    /// Bytes held by the run sequence and the per-symbol indexes.
    pub fn memory_bytes(&self) -> usize {
        let run_nodes = self.runs.len() * WeightedSeq::<RunInfo>::node_bytes();
        let sym_nodes = self.runs.len() * WeightedSeq::<NodeId>::node_bytes();
        std::mem::size_of::<Self>() + run_nodes + sym_nodes
    }

    /// Starts tracking `S[|S|-k+1]`, valid right after the stream reaches `k` bytes.
    pub fn bookmark_init(&self, k: u64) -> Result<Bookmark> {
        if k == 0 || self.data_len != k {
            return Err(Error::WrongPhase {
                k,
                expected: k,
                actual: self.data_len,
            });
        }
        // LF of the sentinel is row 1, the suffix `$`, preceded by the first byte.
        Ok(Bookmark {
            k,
            position: 1,
            state: BookmarkState::Active,
        })
    }

    /// Moves an active bookmark across the extension that returned `inserted`.
    pub fn bookmark_advance(&self, bm: &mut Bookmark, inserted: u64) -> Result<()> {
        if bm.state != BookmarkState::Active {
            return Ok(());
        }
        if bm.position >= inserted {
            bm.position += 1;
        }
        bm.position = self.lf(bm.position)?;
        Ok(())
    }

    /// The byte an active bookmark points at.
    pub fn bookmark_read(&self, bm: &Bookmark) -> Option<u8> {
        if bm.state != BookmarkState::Active {
            return None;
        }
        self.access(bm.position).ok().and_then(Symbol::byte)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BookmarkState {
    Pending,
    Active,
    Retired,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bookmark {
    k: u64,
    position: u64,
    state: BookmarkState,
}

impl Bookmark {
    pub fn pending(k: u64) -> Self {
        Self {
            k,
            position: 0,
            state: BookmarkState::Pending,
        }
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn state(&self) -> BookmarkState {
        self.state
    }

    pub fn is_active(&self) -> bool {
        self.state == BookmarkState::Active
    }

    pub fn retire(&mut self) {
        self.state = BookmarkState::Retired;
    }
}
