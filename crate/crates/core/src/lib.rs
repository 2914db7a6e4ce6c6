//! Estimation of the normalized substring complexity δ of byte strings.
//!
//! δ(S) is the maximum over k of d_k(S)/k, where d_k counts the distinct
//! length-k substrings of S. It lower-bounds the output size of dictionary
//! compressors (LZ77, run-length BWT, grammars) within polylogarithmic
//! factors, which makes it a cheap stand-in for "how compressible is this".
//!
//! The crate provides:
//!
//! * [`DeltaSketch`]: a mergeable sketch holding one count-distinct sketch
//!   per sampled substring length, giving a (1±ε) estimate of δ.
//! * [`StreamEstimator`]: one-pass construction of that sketch in sub-linear
//!   working space, backed by a sliding window and, optionally, a dynamic
//!   run-length BWT with bookmarks for long substring lengths.
//! * [`ncd`]: normalized compression distances and all-pairs matrices
//!   computed from sketches.
//! * [`oracle`]: exact (brute force / suffix array) reference values.

pub mod cardinality;
mod error;
pub mod fingerprint;
mod format;
pub mod ncd;
pub mod oracle;
pub mod rlbwt;
pub mod sketch;
pub mod stream;

pub use cardinality::CardinalitySketch;
pub use error::{Error, Result};
pub use fingerprint::FingerprintContext;
pub use ncd::{ncd_from_sketches, ncd_matrix, DistanceMatrix, NcdValue};
pub use rlbwt::{Bookmark, BookmarkState, DynamicRlbwt, Symbol};
pub use sketch::{sampled_lengths, DeltaSketch, SketchParams};
pub use stream::{StreamConfig, StreamEstimator};
