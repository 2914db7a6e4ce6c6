//! Exact reference computations: substring counts `d_k`, `δ`, pairwise `δ`,
//! NCD, and a naive BWT. Everything here is collision-free and meant for
//! inputs up to a few hundred thousand bytes.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::rlbwt::Symbol;

/// Non-negative rational kept unreduced, so `3/1` and `6/2` print differently
/// but compare equal.
#[derive(Clone, Copy, Debug)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        Self { num, den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityProfile {
    /// `d[k - 1]` is the number of distinct length-`k` substrings.
    pub d: Vec<u64>,
    pub delta: Ratio,
    /// Smallest maximizing length; 0 for the empty string.
    pub k_hat: u64,
}

impl ComplexityProfile {
    pub fn from_counts(d: Vec<u64>) -> Self {
        let mut delta = Ratio::new(0, 1);
        let mut k_hat = 0;
        for (i, &dk) in d.iter().enumerate() {
            let r = Ratio::new(dk, i as u64 + 1);
            if r > delta {
                delta = r;
                k_hat = i as u64 + 1;
            }
        }
        Self { d, delta, k_hat }
    }

    pub fn d_k(&self, k: u64) -> u64 {
        if k == 0 {
            return 0;
        }
        self.d.get(k as usize - 1).copied().unwrap_or(0)
    }
}

/// Suffix array by prefix doubling.
fn suffix_array(text: &[u32]) -> Vec<u32> {
    let n = text.len();
    let mut sa: Vec<u32> = (0..n as u32).collect();
    if n <= 1 {
        return sa;
    }
    let mut rank: Vec<u64> = text.iter().map(|&c| c as u64).collect();
    let mut tmp = vec![0u64; n];
    let mut h = 1;
    loop {
        let key = |i: u32| {
            let i = i as usize;
            let second = if i + h < n { rank[i + h] + 1 } else { 0 };
            (rank[i] << 32) | second
        };
        sa.sort_unstable_by_key(|&i| key(i));
        tmp[sa[0] as usize] = 0;
        for w in 1..n {
            let bump = (key(sa[w]) != key(sa[w - 1])) as u64;
            tmp[sa[w] as usize] = tmp[sa[w - 1] as usize] + bump;
        }
        std::mem::swap(&mut rank, &mut tmp);
        if rank[sa[n - 1] as usize] as usize == n - 1 {
            return sa;
        }
        h *= 2;
    }
}

/// `lcp[i]` is the common prefix length of suffixes `sa[i-1]` and `sa[i]`.
fn lcp_array(text: &[u32], sa: &[u32]) -> Vec<u32> {
    let n = text.len();
    let mut inv = vec![0u32; n];
    for (i, &s) in sa.iter().enumerate() {
        inv[s as usize] = i as u32;
    }
    let mut lcp = vec![0u32; n];
    let mut h = 0usize;
    for i in 0..n {
        let r = inv[i] as usize;
        if r == 0 {
            h = 0;
            continue;
        }
        let j = sa[r - 1] as usize;
        while i + h < n && j + h < n && text[i + h] == text[j + h] {
            h += 1;
        }
        lcp[r] = h as u32;
        h = h.saturating_sub(1);
    }
    lcp
}

/// Distinct substring counts of the union over `texts`, indexed by `k - 1`,
/// up to the longest text. Substrings never cross text boundaries.
pub fn distinct_counts(texts: &[&[u8]]) -> Vec<u64> {
    let longest = texts.iter().map(|t| t.len()).max().unwrap_or(0);
    let total: usize = texts.iter().map(|t| t.len() + 1).sum();
    let mut text = Vec::with_capacity(total);
    let mut usable = Vec::with_capacity(total);
    for (i, t) in texts.iter().enumerate() {
        for (p, &b) in t.iter().enumerate() {
            text.push(b as u32 + 1);
            usable.push((t.len() - p) as u32);
        }
        text.push(257 + i as u32);
        usable.push(0);
    }
    let sa = suffix_array(&text);
    let lcp = lcp_array(&text, &sa);
    // Suffix at rank i contributes to every k in (lcp[i], usable].
    let mut diff = vec![0i64; longest + 2];
    for (r, &s) in sa.iter().enumerate() {
        let u = usable[s as usize] as usize;
        let l = lcp[r] as usize;
        if u > l {
            diff[l + 1] += 1;
            diff[u + 1] -= 1;
        }
    }
    diff[1..=longest]
        .iter()
        .scan(0i64, |acc, &d| {
            *acc += d;
            Some(*acc as u64)
        })
        .collect()
}

pub fn exact_profile(s: &[u8]) -> ComplexityProfile {
    ComplexityProfile::from_counts(distinct_counts(&[s]))
}

pub fn exact_delta(s: &[u8]) -> Ratio {
    exact_profile(s).delta
}

/// `δ(S, T)` over per-length unions of substring sets.
pub fn exact_delta_pair(s: &[u8], t: &[u8]) -> Ratio {
    ComplexityProfile::from_counts(distinct_counts(&[s, t])).delta
}

pub fn exact_ncd(s: &[u8], t: &[u8]) -> Result<f64> {
    let ds = exact_delta(s);
    let dt = exact_delta(t);
    let (lo, hi) = if ds <= dt { (ds, dt) } else { (dt, ds) };
    if hi.num == 0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((exact_delta_pair(s, t).to_f64() - lo.to_f64()) / hi.to_f64())
}

/// `d_k` by inserting every window into a set of actual substrings.
pub fn brute_force_counts(s: &[u8]) -> Vec<u64> {
    (1..=s.len())
        .map(|k| s.windows(k).collect::<HashSet<_>>().len() as u64)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaiveBwt {
    pub bwt: Vec<Symbol>,
    pub runs: u64,
    pub runs_without_sentinel: u64,
    /// `lf[j - 1]` for 1-based `j`; `None` at the sentinel.
    pub lf: Vec<Option<u64>>,
}

fn count_runs(seq: impl Iterator<Item = Symbol>) -> u64 {
    let mut runs = 0;
    let mut last = None;
    for s in seq {
        if last != Some(s) {
            runs += 1;
            last = Some(s);
        }
    }
    runs
}

/// BWT of `reverse(s)` followed by the sentinel, by sorting all suffixes.
pub fn naive_bwt(s: &[u8]) -> NaiveBwt {
    let mut text: Vec<Symbol> = s.iter().rev().map(|&b| Symbol::Byte(b)).collect();
    text.push(Symbol::Sentinel);
    let n = text.len();
    let mut sa: Vec<usize> = (0..n).collect();
    sa.sort_by(|&a, &b| text[a..].cmp(&text[b..]));
    let mut inv = vec![0usize; n];
    for (r, &p) in sa.iter().enumerate() {
        inv[p] = r;
    }
    let bwt: Vec<Symbol> = sa.iter().map(|&p| text[(p + n - 1) % n]).collect();
    let lf = sa
        .iter()
        .map(|&p| (p > 0).then(|| inv[p - 1] as u64 + 1))
        .collect();
    NaiveBwt {
        runs: count_runs(bwt.iter().copied()),
        runs_without_sentinel: count_runs(bwt.iter().copied().filter(|&c| c != Symbol::Sentinel)),
        bwt,
        lf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn text(b: &NaiveBwt) -> String {
        b.bwt.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn profile_examples() {
        let p = exact_profile(b"banana");
        assert_eq!(p.d, vec![3, 3, 3, 3, 2, 1]);
        assert_eq!((p.delta.num, p.delta.den, p.k_hat), (3, 1, 1));
        assert_eq!(exact_profile(b"abab").d, vec![2, 2, 2, 1]);
        let unary = exact_profile(b"aaaa");
        assert_eq!(unary.d, vec![1, 1, 1, 1]);
        assert_eq!(unary.delta.to_string(), "1/1");
        let empty = exact_profile(b"");
        assert!(empty.d.is_empty());
        assert_eq!(empty.k_hat, 0);
    }

    #[test]
    fn pair_examples() {
        assert_eq!(exact_delta_pair(b"ab", b"ba"), Ratio::new(2, 1));
        assert_eq!(exact_ncd(b"ab", b"ba").unwrap(), 0.0);
        assert_eq!(exact_ncd(b"banana", b"banana").unwrap(), 0.0);
        assert!(matches!(exact_ncd(b"", b""), Err(Error::ZeroDenominator)));
        // The border substring "ab" of "a"+"b" is not counted.
        assert_eq!(distinct_counts(&[b"a", b"b"]), vec![2]);
    }

    #[test]
    fn ratio_ordering() {
        assert_eq!(Ratio::new(6, 2), Ratio::new(3, 1));
        assert!(Ratio::new(5, 2) < Ratio::new(3, 1));
        assert_eq!(Ratio::new(6, 2).to_string(), "6/2");
    }

    #[test]
    fn suffix_array_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sigma in [1u8, 2, 3, 26, 255] {
            for _ in 0..40 {
                let n = rng.gen_range(0..300);
                let s: Vec<u8> = (0..n).map(|_| rng.gen_range(0..sigma)).collect();
                assert_eq!(exact_profile(&s).d, brute_force_counts(&s), "{s:?}");
                let m = rng.gen_range(0..100);
                let t: Vec<u8> = (0..m).map(|_| rng.gen_range(0..sigma)).collect();
                let union: Vec<u64> = (1..=n.max(m))
                    .map(|k| {
                        let mut set: HashSet<&[u8]> = s.windows(k).collect();
                        set.extend(t.windows(k));
                        set.len() as u64
                    })
                    .collect();
                assert_eq!(distinct_counts(&[&s, &t]), union);
            }
        }
    }

    #[test]
    fn naive_bwt_examples() {
        let b = naive_bwt(b"babba");
        assert_eq!(text(&b), "bb$aba");
        assert_eq!((b.runs, b.runs_without_sentinel), (5, 4));
        assert_eq!(b.lf[1], Some(5));
        assert_eq!(b.lf[2], None);
        assert_eq!(text(&naive_bwt(b"a")), "a$");
        assert_eq!(naive_bwt(b"a").lf, vec![Some(2), None]);
        assert_eq!(text(&naive_bwt(b"")), "$");
    }

    #[test]
    fn naive_lf_is_a_permutation_off_the_sentinel() {
        for bits in 0..(1u32 << 9) {
            let s: Vec<u8> = (0..9).map(|i| b'a' + ((bits >> i) & 1) as u8).collect();
            let b = naive_bwt(&s);
            let mut seen: Vec<u64> = b.lf.iter().flatten().copied().collect();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), s.len());
        }
    }
}
